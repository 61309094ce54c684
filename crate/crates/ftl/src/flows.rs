// SPDX-License-Identifier: Apache-2.0
//! The computations behind each subcommand, free of argument parsing and
//! file handling so they can be driven from tests.

use std::collections::BTreeMap;

use ftl_core::cell::{CellInstance, VtAssignment};
use ftl_core::chain::{execute_plan, mode_trace, plan_program, ChainState, ProgramPlan};
use ftl_core::synth::equivalence::{verify_equivalence_with, EquivalenceConfig, EquivalenceReport};
use ftl_core::synth::report::{netlist_cost, NetlistCost};
use ftl_core::synth::timing::{c2q_sweep, midpoint, TimingFix};
use ftl_core::synth::{fix_timing, TimingStage};
use ftl_core::synth::{map_to_ftl, ppa_report, write_blif, Mapping, Netlist, Policy, TechTable};
use ftl_core::trainer::{
    find_max_handicap, mpla0, mpla_plus, mpla_plusplus, program_with_fallback, realized, HandicapConfig, ProgramMethod,
    VtDatabase,
};
use ftl_core::{detect_threshold, enumerate_library, Library, ThresholdFunction, TruthTable, MAX_ARITY};
use rayon::prelude::*;

use crate::config::{Handicap, RunConfig};
use crate::error::{FlowError, Result};
use crate::formats::{BeforeAfter, SynthReport, TrainRow};

pub fn enumerate(max_arity: usize) -> Result<Library> {
    if !(1..=MAX_ARITY).contains(&max_arity) {
        return Err(FlowError::Usage(format!(
            "arity must lie in 1..={MAX_ARITY}, got {max_arity}"
        )));
    }
    Ok(enumerate_library(max_arity)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub table: TruthTable,
    /// Minimal positive-weight realization after NPN normalization.
    pub realization: Option<ThresholdFunction>,
    /// Library class, input negations and output negation.
    pub class: Option<(usize, u32, bool)>,
}

pub fn detect(table: TruthTable, lib: &Library) -> Detection {
    let class = lib.match_function(&table).map(|m| {
        (
            m.class_index,
            m.transform.negated_inputs(),
            m.transform.output_negated(),
        )
    });
    let realization = detect_threshold(&table);
    Detection {
        table,
        realization,
        class,
    }
}

// ---- library training ----------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedFunction {
    pub row: TrainRow,
    pub vt: VtAssignment,
}

fn train_one(tt: &TruthTable, index: usize, cfg: &RunConfig) -> Result<TrainedFunction> {
    let params = cfg.cell_params(tt.arity());
    let inst = CellInstance::nominal(params.clone())?;
    let tcfg = cfg.trainer();
    let c_star = find_max_handicap(tt, &inst, &tcfg, cfg.lambda)?;
    let c = match cfg.train_handicap {
        Handicap::Max => c_star,
        Handicap::Fixed(c) => c,
    };
    let r = mpla_plus(tt, &inst, &tcfg, c, c, cfg.lambda)?;
    let kmax = tcfg.kmax_for(&params, &tcfg.initial(&params), tcfg.step);
    let c2q = if r.converged {
        inst.worst_delay(&r.vt)?
    } else {
        f64::NAN
    };
    let row = TrainRow {
        index,
        iterations: r.iterations,
        converged: r.converged,
        c_star,
        min_onset_margin: r.margins.min_onset_margin,
        min_offset_margin: r.margins.min_offset_margin,
        handicap: c,
        kmax,
        c2q,
    };
    Ok(TrainedFunction { row, vt: r.vt })
}

/// Trains every library function on the nominal instance, in parallel.
pub fn train_library(lib: &Library, cfg: &RunConfig) -> Result<Vec<TrainedFunction>> {
    lib.entries()
        .par_iter()
        .map(|e| train_one(&e.table, e.index, cfg))
        .collect()
}

// ---- yield ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassFix {
    pub key: TruthTable,
    /// Test instances realizing `key` under the nominal assignment.
    pub members: usize,
    /// Members the key's database entry programs correctly.
    pub fixed: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct YieldSummary {
    pub n_mc: usize,
    /// Erroneous training instances.
    pub train_errors: usize,
    pub db_entries: usize,
    pub unfixable_types: usize,
    pub n_test: usize,
    pub nominal: usize,
    pub error_type: usize,
    pub on_chip: usize,
    pub failed: usize,
    /// Erroneous test instances whose realized table is a database key.
    pub covered: usize,
    pub classes: Vec<ClassFix>,
    pub onchip_iterations: u64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

impl YieldSummary {
    pub fn erroneous(&self) -> usize {
        self.n_test - self.nominal
    }

    pub fn nominal_yield(&self) -> f64 {
        ratio(self.nominal, self.n_test)
    }

    pub fn error_type_yield(&self) -> f64 {
        ratio(self.nominal + self.error_type, self.n_test)
    }

    pub fn final_yield(&self) -> f64 {
        ratio(self.nominal + self.error_type + self.on_chip, self.n_test)
    }

    pub fn coverage(&self) -> f64 {
        ratio(self.covered, self.erroneous())
    }

    pub fn mean_onchip_iterations(&self) -> f64 {
        if self.on_chip == 0 {
            0.0
        } else {
            self.onchip_iterations as f64 / self.on_chip as f64
        }
    }

    /// Classes whose entry fixes less than `fraction` of their members.
    pub fn weak_classes(&self, fraction: f64) -> Vec<&ClassFix> {
        self.classes
            .iter()
            .filter(|c| (c.fixed as f64) < fraction * c.members as f64)
            .collect()
    }
}

enum Outcome {
    Programmed {
        method: ProgramMethod,
        iterations: u64,
        key: Option<TruthTable>,
        entry_fixes: bool,
    },
    Failed {
        key: Option<TruthTable>,
        entry_fixes: bool,
    },
}

/// Builds the error-type database on the training population and programs
/// a disjoint test population with nominal, error-type and on-chip stages.
pub fn run_yield(tt: &TruthTable, cfg: &RunConfig) -> Result<(VtDatabase, YieldSummary)> {
    if cfg.seed == cfg.test_seed {
        return Err(FlowError::Usage("training and test seeds must differ".into()));
    }
    let params = cfg.cell_params(tt.arity());
    let tcfg = cfg.trainer();
    let db = mpla_plusplus(tt, &params, &cfg.training_population(), &tcfg, cfg.lambda)?;
    let test = cfg.test_population();
    let outcomes = (0..test.samples as u64)
        .into_par_iter()
        .map(|i| {
            let inst = test.instance(&params, i)?;
            let key = realized(&inst, &db.nominal).filter(|k| k != tt);
            let entry_fixes = key
                .and_then(|k| db.error_entries.get(&k))
                .is_some_and(|vt| realized(&inst, vt) == Some(*tt));
            Ok(match program_with_fallback(&inst, tt, &db, &tcfg) {
                Ok(p) => Outcome::Programmed {
                    method: p.method,
                    iterations: p.onchip_iterations,
                    key,
                    entry_fixes,
                },
                Err(ftl_core::Error::OnChipFailed(_)) => Outcome::Failed { key, entry_fixes },
                Err(e) => return Err(e.into()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut s = YieldSummary {
        n_mc: db.stats.n_mc,
        train_errors: db.stats.n_e,
        db_entries: db.stats.m_f,
        unfixable_types: db.unfixable.len(),
        n_test: test.samples,
        ..Default::default()
    };
    let mut classes: BTreeMap<TruthTable, ClassFix> = BTreeMap::new();
    for o in &outcomes {
        let (key, entry_fixes) = match o {
            Outcome::Programmed {
                method,
                iterations,
                key,
                entry_fixes,
            } => {
                match method {
                    ProgramMethod::Nominal => s.nominal += 1,
                    ProgramMethod::ErrorType => s.error_type += 1,
                    ProgramMethod::OnChip => {
                        s.on_chip += 1;
                        s.onchip_iterations += iterations;
                    }
                }
                (key, entry_fixes)
            }
            Outcome::Failed { key, entry_fixes } => {
                s.failed += 1;
                (key, entry_fixes)
            }
        };
        if let Some(k) = key.filter(|k| db.error_entries.contains_key(k)) {
            s.covered += 1;
            let c = classes.entry(k).or_insert(ClassFix {
                key: k,
                members: 0,
                fixed: 0,
            });
            c.members += 1;
            c.fixed += usize::from(*entry_fixes);
        }
    }
    s.classes = classes.into_values().collect();
    Ok((db, s))
}

// ---- drift ---------------------------------------------------------------

/// Largest whole-millivolt drift up to `limit_mv` such that the cell
/// realizes `tt` at every drift from zero up to it; `None` if it fails
/// even undrifted.
pub fn drift_tolerance(inst: &CellInstance, vt: &VtAssignment, tt: &TruthTable, limit_mv: u32) -> Option<u32> {
    let ok = |d: u32| inst.truth_table(&vt.apply_drift(f64::from(d))).ok() == Some(*tt);
    if !ok(0) {
        return None;
    }
    Some((1..=limit_mv).find(|&d| !ok(d)).map_or(limit_mv, |d| d - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDrift {
    pub index: usize,
    /// Drifts of the sweep at which the stored assignment still works.
    pub trained_ok: Vec<bool>,
    pub baseline_ok: Vec<bool>,
    pub trained_tolerance: Option<u32>,
    pub baseline_tolerance: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSummary {
    pub sweep: Vec<f64>,
    pub functions: Vec<FunctionDrift>,
}

impl DriftSummary {
    /// Fraction of stored cells correct at each sweep point.
    pub fn trained_fraction(&self) -> Vec<f64> {
        self.fraction(|f| &f.trained_ok)
    }

    /// Fraction of zero-handicap cells correct at each sweep point.
    pub fn baseline_fraction(&self) -> Vec<f64> {
        self.fraction(|f| &f.baseline_ok)
    }

    fn fraction(&self, pick: impl Fn(&FunctionDrift) -> &Vec<bool>) -> Vec<f64> {
        (0..self.sweep.len())
            .map(|k| {
                ratio(
                    self.functions.iter().filter(|f| pick(f)[k]).count(),
                    self.functions.len(),
                )
            })
            .collect()
    }

    /// Functions whose stored cell tolerates less drift than the
    /// zero-handicap cell.
    pub fn dominance_violations(&self) -> Vec<&FunctionDrift> {
        self.functions
            .iter()
            .filter(|f| f.trained_tolerance < f.baseline_tolerance)
            .collect()
    }
}

/// Applies each sweep drift to the stored nominal assignments and to a
/// zero-handicap baseline trained on the same nominal instance.
pub fn run_drift(
    lib: &Library,
    dbs: &BTreeMap<usize, VtDatabase>,
    sweep: &[f64],
    cfg: &RunConfig,
) -> Result<DriftSummary> {
    if sweep.iter().any(|&d| d.is_nan() || d < 0.0) {
        return Err(FlowError::Usage("drift values must be non-negative".into()));
    }
    let limit = (cfg.vdd * 1000.0).ceil() as u32;
    let functions = dbs
        .par_iter()
        .map(|(&index, db)| {
            let tt = lib.get(index).expect("databases are checked against the library").table;
            let inst = CellInstance::nominal(cfg.cell_params(tt.arity()))?;
            let base = mpla0(&tt, &inst, &cfg.trainer(), &HandicapConfig::none())?;
            let works = |vt: &VtAssignment, d: f64| inst.truth_table(&vt.apply_drift(d)).ok() == Some(tt);
            Ok(FunctionDrift {
                index,
                trained_ok: sweep.iter().map(|&d| works(&db.nominal, d)).collect(),
                baseline_ok: sweep.iter().map(|&d| base.converged && works(&base.vt, d)).collect(),
                trained_tolerance: drift_tolerance(&inst, &db.nominal, &tt, limit),
                baseline_tolerance: drift_tolerance(&inst, &base.vt, &tt, limit).filter(|_| base.converged),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftSummary {
        sweep: sweep.to_vec(),
        functions,
    })
}

// ---- programming ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramOutcome {
    pub plan: ProgramPlan,
    /// Largest per-transistor distance between programmed and target VT.
    pub max_error: f64,
    pub pclk: u64,
}

/// Programs a chain of `cells` erased cells, cell `i` receiving
/// `targets[i % targets.len()]`, and replays the plan on the chain model.
pub fn run_program(targets: &[VtAssignment], cells: usize, cfg: &RunConfig) -> Result<ProgramOutcome> {
    if targets.is_empty() || cells == 0 {
        return Err(FlowError::Usage("need at least one cell and one assignment".into()));
    }
    let arity_max = targets.iter().map(VtAssignment::arity).max().expect("non-empty");
    let params = cfg.cell_params(arity_max);
    let want: BTreeMap<usize, VtAssignment> = (0..cells).map(|i| (i, targets[i % targets.len()].clone())).collect();
    let mut have: BTreeMap<usize, VtAssignment> = want
        .iter()
        .map(|(&i, v)| (i, VtAssignment::uniform(v.arity(), params.vt_min())))
        .collect();
    let mut chain = ChainState::new(cells);
    let plan = plan_program(&chain, &want, &have, &params, &cfg.plan())?;
    execute_plan(&mut chain, &plan, &mut have, &params, &mode_trace(&plan))?;
    let max_error = want
        .iter()
        .flat_map(|(i, w)| w.flat().into_iter().zip(have[i].flat()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    Ok(ProgramOutcome {
        plan,
        max_error,
        pclk: chain.pclk_count(),
    })
}

// ---- synthesis -----------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SynthOutcome {
    pub mapping: Mapping,
    pub equivalence: EquivalenceReport,
    pub report: SynthReport,
    pub blif: String,
}

fn equivalence_config(cfg: &RunConfig) -> EquivalenceConfig {
    EquivalenceConfig::new(cfg.vectors, cfg.seed)
}

/// Maps `nl` onto FTL cells and checks the rewrite before reporting.
pub fn run_synth(
    nl: &Netlist,
    lib: &Library,
    policy: Policy,
    tech: &TechTable,
    cfg: &RunConfig,
) -> Result<SynthOutcome> {
    let mapping = map_to_ftl(nl, lib, policy, tech)?;
    let equivalence = verify_equivalence_with(nl, &mapping.netlist, &equivalence_config(cfg))?;
    if let Some(cx) = &equivalence.counterexample {
        return Err(FlowError::Verification(format!("rewrite is not equivalent: {cx}")));
    }
    let r = ppa_report(nl, &mapping, &equivalence, tech)?;
    let replaced = mapping
        .cells
        .iter()
        .map(|c| (nl.net_name(nl.dffs()[c.dff].q).to_string(), c.class_index))
        .collect();
    let report = SynthReport {
        config_hash: cfg.hash(),
        policy: match policy {
            Policy::Benefit => "benefit",
            Policy::Exhaustive => "exhaustive",
        }
        .into(),
        cells_before: r.before.cells,
        cells_after: r.after.cells,
        dff: BeforeAfter {
            before: r.before.dff,
            after: r.after.dff,
        },
        ftl: BeforeAfter {
            before: r.before.ftl,
            after: r.after.ftl,
        },
        area_before: r.before.area_um2(),
        area_after: r.after.area_um2(),
        power_before: r.before.power,
        power_after: r.after.power,
        area_improvement: r.area_improvement(),
        power_improvement: r.power_improvement(),
        inverters_added: r.inverters_added,
        replaced,
        equivalence: "pass",
        equivalence_exhaustive: equivalence.exhaustive,
        vectors: equivalence.vectors,
    };
    let blif = write_blif(&mapping.netlist);
    Ok(SynthOutcome {
        mapping,
        equivalence,
        report,
        blif,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub before: NetlistCost,
    pub after: NetlistCost,
    pub equivalence: EquivalenceReport,
}

/// Costs two netlists and checks that they are equivalent.
pub fn compare(before: &Netlist, after: &Netlist, tech: &TechTable, cfg: &RunConfig) -> Result<Comparison> {
    Ok(Comparison {
        before: netlist_cost(before, tech)?,
        after: netlist_cost(after, tech)?,
        equivalence: verify_equivalence_with(before, after, &equivalence_config(cfg))?,
    })
}

// ---- timing --------------------------------------------------------------

/// Trains the launch cell at `launch_handicap` (the middle of its delay
/// range when `None`) and repairs `stage` if it is violated.
pub fn run_timing(
    function: &ThresholdFunction,
    stage: &TimingStage,
    launch_handicap: Option<f64>,
    cfg: &RunConfig,
) -> Result<TimingFix> {
    let tt = function.truth_table();
    let inst = CellInstance::nominal(cfg.cell_params(tt.arity()))?;
    let tcfg = cfg.trainer();
    let current = match launch_handicap {
        Some(c) => {
            let r = mpla_plus(&tt, &inst, &tcfg, c, c, cfg.lambda)?;
            if !r.converged {
                return Err(FlowError::Usage(format!("launch cell does not train at handicap {c}")));
            }
            r.vt
        }
        None => midpoint(&c2q_sweep(&tt, &inst, &tcfg, cfg.lambda)?).vt.clone(),
    };
    match fix_timing(stage, &tt, &inst, &current, &tcfg, cfg.lambda) {
        Err(ftl_core::Error::Unfixable(msg)) => Err(FlowError::Verification(msg)),
        other => Ok(other?),
    }
}
