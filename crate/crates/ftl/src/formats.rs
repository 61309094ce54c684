// SPDX-License-Identifier: Apache-2.0
//! Text formats exchanged between commands.
//!
//! All line formats treat `#` lines as comments, which is where the
//! header written by [`crate::io::header`] lives.

use std::collections::BTreeMap;
use std::path::Path;

use ftl_core::cell::VtAssignment;
use ftl_core::chain::{PlanOp, Polarity, ProgramPlan, PulseCommand};
use ftl_core::trainer::VtDatabase;
use ftl_core::{chow_signature, Library, LibraryEntry, ThresholdFunction, TruthTable};
use serde::Serialize;

use crate::error::{FlowError, Result};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn bad(path: &Path, line: usize, msg: impl Into<String>) -> FlowError {
    FlowError::Format {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

/// Parses a `w1,..,wn;T` weight vector such as `3,3,2,1,1;8`.
pub fn parse_weights(s: &str) -> Option<(Vec<u32>, u32)> {
    let (w, t) = s.trim().trim_start_matches('[').trim_end_matches(']').split_once(';')?;
    Some((parse_list(w)?, t.trim().parse().ok()?))
}

pub fn format_weights(f: &ThresholdFunction) -> String {
    let w: Vec<String> = f.weights().iter().map(u32::to_string).collect();
    format!("[{};{}]", w.join(","), f.threshold())
}

// ---- library -------------------------------------------------------------

/// One line per class: `index  arity  w1,..,wn  T  hex`, tab separated.
pub fn write_library(lib: &Library) -> String {
    let mut out = String::new();
    for e in lib.entries() {
        let w: Vec<String> = e.function.weights().iter().map(u32::to_string).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            e.index,
            e.table.arity(),
            w.join(","),
            e.function.threshold(),
            e.table.to_hex()
        ));
    }
    out
}

pub fn parse_library(text: &str, path: &Path) -> Result<Library> {
    let mut entries = Vec::new();
    for (line, l) in data_lines(text) {
        let f: Vec<&str> = l.split('\t').collect();
        let [index, arity, weights, threshold, hex] = f.as_slice() else {
            return Err(bad(path, line, "expected 5 tab-separated fields"));
        };
        let index: usize = index.parse().map_err(|_| bad(path, line, "bad index"))?;
        if index != entries.len() {
            return Err(bad(path, line, format!("index {index} out of sequence")));
        }
        let arity: usize = arity.parse().map_err(|_| bad(path, line, "bad arity"))?;
        let weights = parse_list(weights).ok_or_else(|| bad(path, line, "bad weights"))?;
        let threshold = threshold.parse().map_err(|_| bad(path, line, "bad threshold"))?;
        let function = ThresholdFunction::new(weights, threshold).map_err(|e| bad(path, line, e.to_string()))?;
        let table = TruthTable::from_hex(arity, hex).map_err(|e| bad(path, line, e.to_string()))?;
        if function.truth_table() != table {
            return Err(bad(path, line, "weights do not realize the truth table"));
        }
        entries.push(LibraryEntry {
            index,
            table,
            function,
            chow: chow_signature(&table),
        });
    }
    Ok(Library::from_entries(entries))
}

// ---- VT database ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DbTag {
    Nominal,
    /// Entry applied to cells that realize this erroneous table.
    ErrorType(TruthTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbRecord {
    pub function_index: usize,
    pub tag: DbTag,
    pub vt: VtAssignment,
}

fn volts(vt: &VtAssignment) -> String {
    vt.flat()
        .iter()
        .map(|v| format!("{v:.3}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Lines `function_index  nominal|errtype:<hex>  v0,..,v(2n+1)`.
pub fn write_databases(dbs: &[(usize, &VtDatabase)]) -> String {
    let mut out = String::new();
    for (index, db) in dbs {
        out.push_str(&format!("{index}\tnominal\t{}\n", volts(&db.nominal)));
        for (key, vt) in &db.error_entries {
            out.push_str(&format!("{index}\terrtype:{}\t{}\n", key.to_hex(), volts(vt)));
        }
    }
    out
}

pub fn parse_database(text: &str, path: &Path) -> Result<Vec<DbRecord>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        let f: Vec<&str> = l.split('\t').collect();
        let [index, tag, v] = f.as_slice() else {
            return Err(bad(path, line, "expected 3 tab-separated fields"));
        };
        let function_index = index.parse().map_err(|_| bad(path, line, "bad function index"))?;
        let flat: Vec<f64> = parse_list(v).ok_or_else(|| bad(path, line, "bad voltage list"))?;
        if flat.len() < 4 || !flat.len().is_multiple_of(2) {
            return Err(bad(path, line, "voltage list must hold 2n+2 values"));
        }
        let arity = flat.len() / 2 - 1;
        let vt = VtAssignment::from_flat(arity, &flat).map_err(|e| bad(path, line, e.to_string()))?;
        let tag = match *tag {
            "nominal" => DbTag::Nominal,
            t => {
                let hex = t
                    .strip_prefix("errtype:")
                    .ok_or_else(|| bad(path, line, format!("unknown tag `{t}`")))?;
                DbTag::ErrorType(TruthTable::from_hex(arity, hex).map_err(|e| bad(path, line, e.to_string()))?)
            }
        };
        out.push(DbRecord {
            function_index,
            tag,
            vt,
        });
    }
    Ok(out)
}

/// Regroups records into one database per function, looking the targets up
/// in `lib`. The handicap is not part of the file and is left at zero.
pub fn assemble_databases(records: &[DbRecord], lib: &Library, path: &Path) -> Result<BTreeMap<usize, VtDatabase>> {
    let mut out: BTreeMap<usize, VtDatabase> = BTreeMap::new();
    for r in records {
        let entry = lib.get(r.function_index).ok_or_else(|| {
            FlowError::Usage(format!(
                "{}: function {} is not in the library",
                path.display(),
                r.function_index
            ))
        })?;
        if entry.table.arity() != r.vt.arity() {
            return Err(FlowError::Usage(format!(
                "{}: function {} has arity {}, database entry has {}",
                path.display(),
                r.function_index,
                entry.table.arity(),
                r.vt.arity()
            )));
        }
        match &r.tag {
            DbTag::Nominal => {
                let mut db = VtDatabase::nominal_only(entry.table, r.vt.clone(), 0.0);
                db.function_index = Some(r.function_index);
                if let Some(old) = out.insert(r.function_index, db) {
                    out.get_mut(&r.function_index).expect("just inserted").error_entries = old.error_entries;
                }
            }
            DbTag::ErrorType(key) => {
                let db = out.get_mut(&r.function_index).ok_or_else(|| {
                    FlowError::Usage(format!(
                        "{}: error entry before nominal for {}",
                        path.display(),
                        r.function_index
                    ))
                })?;
                db.error_entries.insert(*key, r.vt.clone());
            }
        }
    }
    Ok(out)
}

// ---- training report -----------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRow {
    pub index: usize,
    pub iterations: u64,
    pub converged: bool,
    /// Largest converging handicap.
    pub c_star: f64,
    pub min_onset_margin: f64,
    pub min_offset_margin: f64,
    /// Handicap the stored assignment was trained at.
    pub handicap: f64,
    pub kmax: u64,
    pub c2q: f64,
}

pub const TRAIN_REPORT_COLUMNS: &str =
    "index,iterations,converged,c_star,min_onset_margin,min_offset_margin,handicap,kmax,c2q";

pub fn write_train_report(rows: &[TrainRow]) -> String {
    let mut out = format!("{TRAIN_REPORT_COLUMNS}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.2},{:.6},{:.6},{:.2},{},{:.6}\n",
            r.index,
            r.iterations,
            r.converged,
            r.c_star,
            r.min_onset_margin,
            r.min_offset_margin,
            r.handicap,
            r.kmax,
            r.c2q
        ));
    }
    out
}

pub fn parse_train_report(text: &str, path: &Path) -> Result<Vec<TrainRow>> {
    let mut rows = Vec::new();
    for (line, l) in data_lines(text) {
        if l == TRAIN_REPORT_COLUMNS {
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        let num = |i: usize| -> Result<f64> { f[i].parse().map_err(|_| bad(path, line, "bad number")) };
        if f.len() != 9 {
            return Err(bad(path, line, "expected 9 columns"));
        }
        rows.push(TrainRow {
            index: f[0].parse().map_err(|_| bad(path, line, "bad index"))?,
            iterations: f[1].parse().map_err(|_| bad(path, line, "bad iteration count"))?,
            converged: f[2].parse().map_err(|_| bad(path, line, "bad flag"))?,
            c_star: num(3)?,
            min_onset_margin: num(4)?,
            min_offset_margin: num(5)?,
            handicap: num(6)?,
            kmax: f[7].parse().map_err(|_| bad(path, line, "bad kmax"))?,
            c2q: num(8)?,
        });
    }
    Ok(rows)
}

// ---- programming plan ----------------------------------------------------

/// `cell,transistor,polarity,count` rows, whole-cell erases as
/// `cell,*,erase,1`, then `total_pulses,total_time_us` and its values.
pub fn write_plan(plan: &ProgramPlan) -> String {
    let mut out = String::from("cell,transistor,polarity,count\n");
    for op in &plan.ops {
        match op {
            PlanOp::Erase { cell } => out.push_str(&format!("{cell},*,erase,1\n")),
            PlanOp::Pulse(p) => out.push_str(&format!(
                "{},{},{},{}\n",
                p.cell,
                p.transistor,
                p.polarity.as_str(),
                p.count
            )),
        }
    }
    out.push_str(&format!(
        "total_pulses,total_time_us\n{},{}\n",
        plan.total_pulses(),
        plan.estimated_time_us()
    ));
    out
}

pub fn parse_plan(text: &str, path: &Path) -> Result<ProgramPlan> {
    let mut ops = Vec::new();
    let mut lines = data_lines(text);
    let mut summary = None;
    while let Some((line, l)) = lines.next() {
        if l == "cell,transistor,polarity,count" {
            continue;
        }
        if l == "total_pulses,total_time_us" {
            let (line, v) = lines.next().ok_or_else(|| bad(path, line, "missing summary values"))?;
            let (p, t) = v.split_once(',').ok_or_else(|| bad(path, line, "bad summary"))?;
            let p: u64 = p.parse().map_err(|_| bad(path, line, "bad pulse total"))?;
            let t: f64 = t.parse().map_err(|_| bad(path, line, "bad time total"))?;
            summary = Some((line, p, t));
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        let [cell, transistor, polarity, count] = f.as_slice() else {
            return Err(bad(path, line, "expected 4 columns"));
        };
        let cell = cell.parse().map_err(|_| bad(path, line, "bad cell"))?;
        if *transistor == "*" {
            ops.push(PlanOp::Erase { cell });
            continue;
        }
        ops.push(PlanOp::Pulse(PulseCommand {
            cell,
            transistor: transistor.parse().map_err(|_| bad(path, line, "bad transistor"))?,
            polarity: Polarity::parse(polarity).ok_or_else(|| bad(path, line, "bad polarity"))?,
            count: count.parse().map_err(|_| bad(path, line, "bad count"))?,
        }));
    }
    let (line, pulses, time) = summary.ok_or_else(|| bad(path, 0, "missing summary line"))?;
    let pulse_duration_us = if pulses == 0 { 1.0 } else { time / pulses as f64 };
    let plan = ProgramPlan { ops, pulse_duration_us };
    if plan.total_pulses() != pulses {
        return Err(bad(path, line, "summary disagrees with the listed pulses"));
    }
    Ok(plan)
}

// ---- synthesis report ----------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeforeAfter<T> {
    pub before: T,
    pub after: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthReport {
    pub config_hash: String,
    pub policy: String,
    pub cells_before: usize,
    pub cells_after: usize,
    pub dff: BeforeAfter<usize>,
    pub ftl: BeforeAfter<usize>,
    /// Square microns.
    pub area_before: f64,
    pub area_after: f64,
    pub power_before: f64,
    pub power_after: f64,
    pub area_improvement: f64,
    pub power_improvement: f64,
    pub inverters_added: usize,
    /// Library class of each replaced flip-flop, by flip-flop output net.
    pub replaced: BTreeMap<String, usize>,
    pub equivalence: &'static str,
    pub equivalence_exhaustive: bool,
    pub vectors: u64,
}
