// SPDX-License-Identifier: Apache-2.0
//! Relative area and power accounting for rewritten netlists.
//!
//! Areas are kept in integer thousandths of a square micron so that the
//! before/after bookkeeping is exact.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use super::equivalence::EquivalenceReport;
use super::mapping::Mapping;
use super::netlist::{GateKind, Netlist};
use crate::error::{Error, Result};

/// Cost table shipped with the crate.
pub const BUNDLED_TECH_TABLE: &str = include_str!("../../data/tech_table.txt");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCost {
    /// Thousandths of a square micron.
    pub area_milli: u64,
    pub leakage: f64,
    pub switching: f64,
}

impl CellCost {
    pub fn power(&self) -> f64 {
        self.leakage + self.switching
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TechTable {
    cells: BTreeMap<String, CellCost>,
}

/// Parses a decimal such as `15.6` into thousandths without rounding.
fn parse_milli(s: &str) -> Option<u64> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 3 || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let mut f: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    for _ in frac.len()..3 {
        f *= 10;
    }
    int.checked_mul(1000)?.checked_add(f)
}

impl TechTable {
    /// Parses `kind area leakage switching` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cells = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let f: alloc::vec::Vec<&str> = line.split_whitespace().collect();
            let [kind, area, leak, sw] = f.as_slice() else {
                return Err(err("expected: kind area leakage switching"));
            };
            let area_milli = parse_milli(area).ok_or_else(|| err("area must be a decimal with at most 3 places"))?;
            let leakage: f64 = leak.parse().map_err(|_| err("bad leakage"))?;
            let switching: f64 = sw.parse().map_err(|_| err("bad switching energy"))?;
            if leakage < 0.0 || switching < 0.0 {
                return Err(err("energies must be non-negative"));
            }
            cells.insert(
                kind.to_string(),
                CellCost {
                    area_milli,
                    leakage,
                    switching,
                },
            );
        }
        for required in ["DFF", "FTL", "INV"] {
            if !cells.contains_key(required) {
                return Err(Error::Netlist(format!("technology table lacks {required}")));
            }
        }
        Ok(Self { cells })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TECH_TABLE).expect("bundled table is valid")
    }

    pub fn get(&self, kind: &str) -> Option<&CellCost> {
        self.cells.get(kind)
    }

    /// Cost of a gate, falling back to the generic cover of its arity.
    pub fn gate(&self, kind: GateKind, arity: usize) -> Result<CellCost> {
        self.cells
            .get(&kind.name())
            .or_else(|| self.cells.get(&format!("SOP{arity}")))
            .copied()
            .ok_or_else(|| Error::Netlist(format!("no cost for {}", kind.name())))
    }

    pub fn dff(&self) -> CellCost {
        self.cells["DFF"]
    }

    pub fn ftl(&self) -> CellCost {
        self.cells["FTL"]
    }

    pub fn inverter(&self) -> CellCost {
        self.cells["INV"]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NetlistCost {
    pub cells: usize,
    pub dff: usize,
    pub ftl: usize,
    pub area_milli: u64,
    pub power: f64,
}

impl NetlistCost {
    pub fn area_um2(&self) -> f64 {
        self.area_milli as f64 / 1000.0
    }
}

pub fn netlist_cost(nl: &Netlist, tech: &TechTable) -> Result<NetlistCost> {
    let mut c = NetlistCost {
        cells: nl.cell_count(),
        dff: nl.dffs().len(),
        ftl: nl.ftls().len(),
        ..Default::default()
    };
    for g in nl.gates() {
        let cost = tech.gate(g.kind, g.inputs.len())?;
        c.area_milli += cost.area_milli;
        c.power += cost.power();
    }
    c.area_milli += (tech.dff().area_milli) * c.dff as u64 + tech.ftl().area_milli * c.ftl as u64;
    c.power += tech.dff().power() * c.dff as f64 + tech.ftl().power() * c.ftl as f64;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementReport {
    pub before: NetlistCost,
    pub after: NetlistCost,
    pub replaced: usize,
    pub inverters_added: usize,
    pub equivalence_passed: bool,
}

impl ReplacementReport {
    /// Relative area change, positive when the rewrite is smaller.
    pub fn area_improvement(&self) -> f64 {
        relative(self.before.area_milli as f64, self.after.area_milli as f64)
    }

    pub fn power_improvement(&self) -> f64 {
        relative(self.before.power, self.after.power)
    }

    pub fn cell_improvement(&self) -> f64 {
        relative(self.before.cells as f64, self.after.cells as f64)
    }
}

fn relative(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        0.0
    } else {
        (before - after) / before
    }
}

/// Area and power of `before` and of the mapped netlist. Refuses to report
/// on a rewrite whose equivalence check failed.
pub fn ppa_report(
    before: &Netlist,
    mapping: &Mapping,
    equivalence: &EquivalenceReport,
    tech: &TechTable,
) -> Result<ReplacementReport> {
    if !equivalence.passed() {
        return Err(Error::Netlist(
            "equivalence check failed; no report for a broken rewrite".into(),
        ));
    }
    Ok(ReplacementReport {
        before: netlist_cost(before, tech)?,
        after: netlist_cost(&mapping.netlist, tech)?,
        replaced: mapping.cells.len(),
        inverters_added: mapping.inverters_added,
        equivalence_passed: true,
    })
}
