// SPDX-License-Identifier: Apache-2.0
//! Perceptron-style training of flash VTs against the cell model.
//!
//! [`mpla0`] walks the minterms and, for each one the cell gets wrong (or
//! gets right with too little margin), lowers the left VTs and raises the
//! right VTs of every conducting branch for an onset minterm, and the
//! reverse for an offset minterm. [`mpla_plus`] demands a margin
//! proportional to a handicap capacitance, [`mpla_plusplus`] builds a
//! database of per-error-type assignments from Monte-Carlo instances, and
//! [`onchip_mpla0`] replays the base rule with pulse-sized steps on a
//! single manufactured cell.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cell::{CellInstance, CellParams, MarginReport, VtAssignment, TIE_TOLERANCE};
use crate::chain::{Polarity, PulseCommand};
use crate::error::{Error, Result};
use crate::threshold::detect_threshold;
use crate::truth_table::TruthTable;

/// Default training step in volts.
pub const DEFAULT_STEP: f64 = 0.005;
/// Default conductance margin per unit of handicap capacitance.
pub const DEFAULT_LAMBDA: f64 = 0.3;
/// Resolution of the handicap search.
pub const HANDICAP_RESOLUTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MintermOrder {
    #[default]
    Ascending,
    /// A fixed shuffle drawn from the seed.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub step: f64,
    /// Update cap; `None` uses `2(n+1) |VT0|^2 / step^2`.
    pub kmax: Option<u64>,
    pub order: MintermOrder,
    /// Starting VTs; `None` starts every transistor at `VDD / 2`.
    pub initial_vt: Option<VtAssignment>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            kmax: None,
            order: MintermOrder::Ascending,
            initial_vt: None,
        }
    }
}

impl TrainerConfig {
    pub fn initial(&self, params: &CellParams) -> VtAssignment {
        self.initial_vt
            .clone()
            .unwrap_or_else(|| VtAssignment::uniform(params.arity, params.vdd / 2.0))
    }

    /// Update cap for training from `start` with step `step`.
    pub fn kmax_for(&self, params: &CellParams, start: &VtAssignment, step: f64) -> u64 {
        self.kmax.unwrap_or_else(|| {
            let n = params.arity as f64;
            libm::ceil(2.0 * (n + 1.0) * start.norm_squared() / (step * step)) as u64
        })
    }

    fn minterms(&self, arity: usize) -> Vec<u32> {
        let mut order: Vec<u32> = (0..1u32 << arity).collect();
        if let MintermOrder::Random(seed) = self.order {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        order
    }

    fn validate(&self) -> Result<()> {
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(Error::Params("training step must be positive"));
        }
        if self.kmax == Some(0) {
            return Err(Error::Params("kmax must be at least 1"));
        }
        Ok(())
    }
}

/// Margin demanded on the onset (`lambda * c1`) and offset (`lambda * c0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandicapConfig {
    pub c1: f64,
    pub c0: f64,
    pub lambda: f64,
}

impl HandicapConfig {
    pub fn none() -> Self {
        Self {
            c1: 0.0,
            c0: 0.0,
            lambda: DEFAULT_LAMBDA,
        }
    }

    pub fn symmetric(c: f64, lambda: f64) -> Self {
        Self { c1: c, c0: c, lambda }
    }

    pub fn onset_margin(&self) -> f64 {
        self.lambda * self.c1
    }

    pub fn offset_margin(&self) -> f64 {
        self.lambda * self.c0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub vt: VtAssignment,
    /// Number of updates applied.
    pub iterations: u64,
    pub converged: bool,
    pub margins: MarginReport,
}

/// VTs held as integer step counts from a starting point. The programmed
/// value rounds the stepped trajectory to a multiple of `quantum`, so with
/// `quantum == step` it is the trajectory itself.
struct Grid {
    start: Vec<f64>,
    k: Vec<i32>,
    applied: Vec<i32>,
    lo: Vec<i32>,
    hi: Vec<i32>,
    step: f64,
    quantum: f64,
    vt: VtAssignment,
}

impl Grid {
    fn new(start: &VtAssignment, step: f64, quantum: f64, params: &CellParams) -> Self {
        let flat = start.flat();
        let eps = 1e-9;
        let lo = flat
            .iter()
            .map(|&v| libm::ceil((params.vt_min() - v) / quantum - eps) as i32)
            .collect();
        let hi = flat
            .iter()
            .map(|&v| libm::floor((params.vt_max() - v) / quantum + eps) as i32)
            .collect();
        let t = flat.len();
        Self {
            k: alloc::vec![0; t],
            applied: alloc::vec![0; t],
            start: flat,
            lo,
            hi,
            step,
            quantum,
            vt: start.clone(),
        }
    }

    fn quantize(&self, k: i32) -> i32 {
        libm::round(f64::from(k) * self.step / self.quantum) as i32
    }

    /// Moves transistor `t` one step in direction `dir` and returns the
    /// change in programmed quanta, or `None` when the move would leave the
    /// programmable window.
    fn bump(&mut self, t: usize, dir: i32) -> Option<i32> {
        let next = self.k[t] + dir;
        let q = self.quantize(next);
        if q < self.lo[t] || q > self.hi[t] {
            return None;
        }
        self.k[t] = next;
        let delta = q - self.applied[t];
        if delta != 0 {
            self.applied[t] = q;
            self.vt.set_flat(t, self.start[t] + f64::from(q) * self.quantum);
        }
        Some(delta)
    }
}

/// Shared training loop over one or more cells that must all realize `tt`
/// with the same VTs. `on_move(t, quanta)` sees every change of a
/// programmed VT.
fn train_loop(
    tt: &TruthTable,
    cells: &[CellInstance],
    cfg: &TrainerConfig,
    handicap: &HandicapConfig,
    start: &VtAssignment,
    quantum: Option<f64>,
    mut on_move: impl FnMut(usize, i32),
) -> Result<TrainResult> {
    cfg.validate()?;
    let inst = cells.first().ok_or(Error::Params("no cells to train"))?;
    let n = inst.arity();
    if let Some(c) = cells.iter().find(|c| c.arity() != n) {
        return Err(Error::ArityMismatch {
            expected: n,
            got: c.arity(),
        });
    }
    if tt.arity() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: tt.arity(),
        });
    }
    if start.arity() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: start.arity(),
        });
    }
    let step = cfg.step;
    let kmax = cfg.kmax_for(inst.params(), start, step);
    let order = cfg.minterms(n);
    let on_thr = handicap.onset_margin() + TIE_TOLERANCE;
    let off_thr = handicap.offset_margin() + TIE_TOLERANCE;
    let mut grid = Grid::new(start, step, quantum.unwrap_or(step), inst.params());
    let mut iterations = 0u64;

    // Brent cycle detection on pass-boundary states: the dynamics are
    // deterministic, so a repeated state means the loop never settles.
    let mut saved = grid.k.clone();
    let (mut power, mut lam) = (1u64, 0u64);

    let converged = 'outer: loop {
        let mut clean = true;
        for (cell, &m) in cells.iter().flat_map(|c| order.iter().map(move |m| (c, m))) {
            let (gl, gr) = cell.conductances(&grid.vt, m);
            let onset = tt.value(m);
            let bad = if onset { gl - gr <= on_thr } else { gr - gl <= off_thr };
            if !bad {
                continue;
            }
            clean = false;
            if iterations >= kmax {
                break 'outer false;
            }
            iterations += 1;
            let left_dir = if onset { -1 } else { 1 };
            for i in (0..=n).filter(|&i| i == 0 || TruthTable::var_bit(n, m, i - 1)) {
                for (t, dir) in [(i, left_dir), (n + 1 + i, -left_dir)] {
                    match grid.bump(t, dir) {
                        Some(0) | None => {}
                        Some(quanta) => on_move(t, quanta),
                    }
                }
            }
        }
        if clean {
            break true;
        }
        if grid.k == saved {
            break false;
        }
        lam += 1;
        if lam == power {
            saved.clone_from(&grid.k);
            power *= 2;
            lam = 0;
        }
    };
    let margins = inst.margins(&grid.vt, tt)?;
    Ok(TrainResult {
        vt: grid.vt,
        iterations,
        converged,
        margins,
    })
}

/// Base training with the given handicap.
pub fn mpla0(
    tt: &TruthTable,
    inst: &CellInstance,
    cfg: &TrainerConfig,
    handicap: &HandicapConfig,
) -> Result<TrainResult> {
    let start = cfg.initial(inst.params());
    train_loop(tt, core::slice::from_ref(inst), cfg, handicap, &start, None, |_, _| {})
}

/// Base training that must hold on every cell in `cells` at once.
pub fn mpla0_joint(
    tt: &TruthTable,
    cells: &[CellInstance],
    cfg: &TrainerConfig,
    handicap: &HandicapConfig,
) -> Result<TrainResult> {
    let first = cells.first().ok_or(Error::Params("no cells to train"))?;
    let start = cfg.initial(first.params());
    train_loop(tt, cells, cfg, handicap, &start, None, |_, _| {})
}

/// Training that demands margins of `lambda * c1` on the onset and
/// `lambda * c0` on the offset.
pub fn mpla_plus(
    tt: &TruthTable,
    inst: &CellInstance,
    cfg: &TrainerConfig,
    c1: f64,
    c0: f64,
    lambda: f64,
) -> Result<TrainResult> {
    mpla0(tt, inst, cfg, &HandicapConfig { c1, c0, lambda })
}

/// Largest symmetric handicap, on a 0.01 grid, for which training
/// converges.
pub fn find_max_handicap(tt: &TruthTable, inst: &CellInstance, cfg: &TrainerConfig, lambda: f64) -> Result<f64> {
    let ok = |k: u64| -> Result<bool> {
        let c = k as f64 * HANDICAP_RESOLUTION;
        Ok(mpla_plus(tt, inst, cfg, c, c, lambda)?.converged)
    };
    if !ok(0)? {
        return Err(Error::Untrainable);
    }
    if lambda <= 0.0 {
        return Err(Error::Params("lambda must be positive to bound the handicap"));
    }
    // no margin can exceed the largest total conductance
    let p = inst.params();
    let beta_max = inst.beta_factors().iter().copied().fold(0.0, f64::max);
    let g_max = (p.arity + 1) as f64 * p.beta * beta_max * p.gate_drive;
    let cap = libm::ceil(g_max / (lambda * HANDICAP_RESOLUTION)) as u64;
    let (mut good, mut bad) = (0u64, 1u64);
    while ok(bad)? {
        good = bad;
        bad *= 2;
        if bad > cap {
            bad = cap + 1;
            break;
        }
    }
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if ok(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good as f64 * HANDICAP_RESOLUTION)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub sigma_vt: f64,
    pub sigma_beta: f64,
    pub seed: u64,
}

impl MonteCarloConfig {
    /// Seed of the `i`-th instance, from an independent ChaCha stream.
    pub fn instance_seed(&self, i: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i);
        rng.next_u64()
    }

    pub fn instance(&self, params: &CellParams, i: u64) -> Result<CellInstance> {
        CellInstance::sample(params.clone(), self.sigma_vt, self.sigma_beta, self.instance_seed(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct YieldStats {
    /// Instances sampled.
    pub n_mc: usize,
    /// Instances that realize something other than the target with the
    /// nominal assignment.
    pub n_e: usize,
    /// Distinct error types with a trained entry.
    pub m_f: usize,
}

/// Nominal assignment plus one assignment per observed error type, keyed by
/// the erroneous table the failing cells realize.
#[derive(Debug, Clone, PartialEq)]
pub struct VtDatabase {
    pub function_index: Option<usize>,
    pub target: TruthTable,
    pub handicap: f64,
    pub nominal: VtAssignment,
    pub error_entries: BTreeMap<TruthTable, VtAssignment>,
    /// Error types whose representative could not be trained.
    pub unfixable: Vec<TruthTable>,
    pub stats: YieldStats,
}

impl VtDatabase {
    /// Database holding only a nominal assignment.
    pub fn nominal_only(target: TruthTable, nominal: VtAssignment, handicap: f64) -> Self {
        Self {
            function_index: None,
            target,
            handicap,
            nominal,
            error_entries: BTreeMap::new(),
            unfixable: Vec::new(),
            stats: YieldStats::default(),
        }
    }
}

/// What a cell realizes with `vt`, or `None` when some minterm is a tie.
pub fn realized(inst: &CellInstance, vt: &VtAssignment) -> Option<TruthTable> {
    inst.truth_table(vt).ok()
}

/// Trains the nominal assignment at the largest converging handicap.
pub fn train_nominal(
    tt: &TruthTable,
    params: &CellParams,
    cfg: &TrainerConfig,
    lambda: f64,
) -> Result<(f64, TrainResult)> {
    let inst = CellInstance::nominal(params.clone())?;
    let c = find_max_handicap(tt, &inst, cfg, lambda)?;
    Ok((c, mpla_plus(tt, &inst, cfg, c, c, lambda)?))
}

/// Groups instances by what they realize under `vt`, keeping only the
/// erroneous ones. Ties are grouped under `None`.
pub fn group_errors(
    target: &TruthTable,
    instances: &[CellInstance],
    vt: &VtAssignment,
) -> BTreeMap<Option<TruthTable>, Vec<usize>> {
    let mut groups: BTreeMap<Option<TruthTable>, Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        let got = realized(inst, vt);
        if got != Some(*target) {
            groups.entry(got).or_default().push(i);
        }
    }
    groups
}

/// Member of `members` closest to their mean variation vector.
pub fn representative(instances: &[CellInstance], members: &[usize]) -> usize {
    let features = |i: usize| -> Vec<f64> {
        let c = &instances[i];
        c.vt_offsets()
            .iter()
            .copied()
            .chain(c.beta_factors().iter().map(|b| b - 1.0))
            .collect()
    };
    let dim = features(members[0]).len();
    let mut mean = alloc::vec![0.0; dim];
    for &i in members {
        for (m, f) in mean.iter_mut().zip(features(i)) {
            *m += f / members.len() as f64;
        }
    }
    *members
        .iter()
        .min_by(|&&a, &&b| {
            let d = |i: usize| {
                features(i)
                    .iter()
                    .zip(&mean)
                    .map(|(f, m)| (f - m) * (f - m))
                    .sum::<f64>()
            };
            d(a).total_cmp(&d(b))
        })
        .expect("non-empty class")
}

/// Builds the error-type database for `tt`.
///
/// Trains the nominal assignment, programs `mc.samples` sampled cells with
/// it, groups the failures by the table they realize, and trains one
/// representative cell per group at its own largest handicap.
pub fn mpla_plusplus(
    tt: &TruthTable,
    params: &CellParams,
    mc: &MonteCarloConfig,
    cfg: &TrainerConfig,
    lambda: f64,
) -> Result<VtDatabase> {
    let (handicap, nominal) = train_nominal(tt, params, cfg, lambda)?;
    if !nominal.converged {
        return Err(Error::Untrainable);
    }
    let instances = (0..mc.samples as u64)
        .map(|i| mc.instance(params, i))
        .collect::<Result<Vec<_>>>()?;
    let groups = group_errors(tt, &instances, &nominal.vt);
    let n_e = groups.values().map(Vec::len).sum();
    let mut error_entries = BTreeMap::new();
    let mut unfixable = Vec::new();
    for (key, members) in &groups {
        let Some(key) = key else { continue };
        let rep = &instances[representative(&instances, members)];
        let trained = find_max_handicap(tt, rep, cfg, lambda)
            .and_then(|c| mpla_plus(tt, rep, cfg, c, c, lambda))
            .ok()
            .filter(|r| r.converged);
        match trained {
            Some(r) => {
                error_entries.insert(*key, r.vt);
            }
            None => unfixable.push(*key),
        }
    }
    let m_f = error_entries.len();
    Ok(VtDatabase {
        function_index: None,
        target: *tt,
        handicap,
        nominal: nominal.vt,
        error_entries,
        unfixable,
        stats: YieldStats {
            n_mc: mc.samples,
            n_e,
            m_f,
        },
    })
}

/// How a cell ended up programmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProgramMethod {
    Nominal,
    ErrorType,
    OnChip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Programmed {
    pub vt: VtAssignment,
    pub method: ProgramMethod,
    /// Updates spent in on-chip training (zero otherwise).
    pub onchip_iterations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnChipResult {
    pub result: TrainResult,
    pub pulses: Vec<PulseCommand>,
}

/// Base training run on a manufactured cell from `start`. The update rule
/// runs at the configured step, and each VT is programmed to the nearest
/// whole number of pulses from its start, logging one command per pulse.
pub fn onchip_mpla0(
    inst: &CellInstance,
    tt: &TruthTable,
    start: &VtAssignment,
    cfg: &TrainerConfig,
    cell: usize,
) -> Result<OnChipResult> {
    let mut pulses = Vec::new();
    let cells = core::slice::from_ref(inst);
    let quantum = Some(inst.params().pulse_step);
    let result = train_loop(tt, cells, cfg, &HandicapConfig::none(), start, quantum, |t, quanta| {
        let polarity = if quanta > 0 { Polarity::Program } else { Polarity::Erase };
        for _ in 0..quanta.unsigned_abs() {
            pulses.push(PulseCommand {
                cell,
                transistor: t,
                polarity,
                count: 1,
            });
        }
    })?;
    Ok(OnChipResult { result, pulses })
}

/// Programs `inst` to realize `tt`: the nominal assignment first, then the
/// entry for the error type the cell shows, then on-chip training.
pub fn program_with_fallback(
    inst: &CellInstance,
    tt: &TruthTable,
    db: &VtDatabase,
    cfg: &TrainerConfig,
) -> Result<Programmed> {
    let got = realized(inst, &db.nominal);
    if got == Some(*tt) {
        return Ok(Programmed {
            vt: db.nominal.clone(),
            method: ProgramMethod::Nominal,
            onchip_iterations: 0,
        });
    }
    if let Some(vt) = got.and_then(|k| db.error_entries.get(&k)) {
        if realized(inst, vt) == Some(*tt) {
            return Ok(Programmed {
                vt: vt.clone(),
                method: ProgramMethod::ErrorType,
                onchip_iterations: 0,
            });
        }
    }
    let r = onchip_mpla0(inst, tt, &db.nominal, cfg, 0)?.result;
    if !r.converged {
        return Err(Error::OnChipFailed(r.iterations));
    }
    Ok(Programmed {
        vt: r.vt,
        method: ProgramMethod::OnChip,
        onchip_iterations: r.iterations,
    })
}

/// Whether every key of the database is itself a positive threshold
/// function.
pub fn keys_are_threshold(db: &VtDatabase) -> bool {
    db.error_entries.keys().all(|k| detect_threshold(k).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold::ThresholdFunction;
    use proptest::prelude::*;

    fn tf(w: &[u32], t: u32) -> TruthTable {
        ThresholdFunction::new(w.to_vec(), t).unwrap().truth_table()
    }

    fn nominal(n: usize) -> CellInstance {
        CellInstance::nominal(CellParams::new(n)).unwrap()
    }

    #[test]
    fn and2_converges_exactly() {
        let and2 = tf(&[1, 1], 2);
        let r = mpla0(&and2, &nominal(2), &TrainerConfig::default(), &HandicapConfig::none()).unwrap();
        assert!(r.converged);
        assert_eq!(nominal(2).truth_table(&r.vt).unwrap(), and2);
        assert!(r.margins.min_onset_margin > 0.0 && r.margins.min_offset_margin > 0.0);
        assert!(nominal(2).evaluate(&r.vt, 0b11).unwrap());
    }

    #[test]
    fn xor_does_not_converge() {
        let xor = TruthTable::new(2, 0b0110).unwrap();
        let r = mpla0(&xor, &nominal(2), &TrainerConfig::default(), &HandicapConfig::none()).unwrap();
        assert!(!r.converged);
        assert!(find_max_handicap(&xor, &nominal(2), &TrainerConfig::default(), DEFAULT_LAMBDA).is_err());
    }

    #[test]
    fn f115_converges_well_under_kmax() {
        let f = tf(&[4, 1, 1, 1, 1], 5);
        let inst = nominal(5);
        let cfg = TrainerConfig::default();
        let r = mpla0(&f, &inst, &cfg, &HandicapConfig::none()).unwrap();
        assert!(r.converged);
        let kmax = cfg.kmax_for(inst.params(), &cfg.initial(inst.params()), cfg.step);
        assert!(r.iterations * 5 <= kmax, "{} of {kmax}", r.iterations);
    }

    #[test]
    fn zero_handicap_plus_equals_base() {
        let f = tf(&[2, 1, 1], 3);
        let inst = nominal(3);
        let cfg = TrainerConfig::default();
        assert_eq!(
            mpla_plus(&f, &inst, &cfg, 0.0, 0.0, DEFAULT_LAMBDA).unwrap(),
            mpla0(&f, &inst, &cfg, &HandicapConfig::none()).unwrap()
        );
    }

    #[test]
    fn beyond_max_handicap_does_not_converge() {
        let f = tf(&[1, 1], 2);
        let inst = nominal(2);
        let cfg = TrainerConfig::default();
        let c = find_max_handicap(&f, &inst, &cfg, DEFAULT_LAMBDA).unwrap();
        assert!(c > 0.0);
        assert!(mpla_plus(&f, &inst, &cfg, c, c, DEFAULT_LAMBDA).unwrap().converged);
        let over = c + HANDICAP_RESOLUTION;
        assert!(
            !mpla_plus(&f, &inst, &cfg, over, over, DEFAULT_LAMBDA)
                .unwrap()
                .converged
        );
    }

    #[test]
    fn onchip_logs_one_pulse_per_move() {
        let f = tf(&[1, 1, 1], 2);
        let inst = nominal(3);
        let cfg = TrainerConfig {
            step: inst.params().pulse_step,
            ..TrainerConfig::default()
        };
        let start = cfg.initial(inst.params());
        let on = onchip_mpla0(&inst, &f, &start, &cfg, 3).unwrap();
        assert!(on.result.converged);
        // every update touches the always-on pair plus each active input pair
        let base = mpla0(&f, &inst, &cfg, &HandicapConfig::none()).unwrap();
        assert_eq!(on.result, base);
        assert!(on.pulses.iter().all(|p| p.count == 1 && p.cell == 3));
        let grid_ok = on.result.vt.flat().iter().all(|v| {
            let k = (v - 0.45) / 0.02;
            (k - libm::round(k)).abs() < 1e-9
        });
        assert!(grid_ok);
    }

    #[test]
    fn zero_sigma_database_is_nominal_only() {
        let f = tf(&[2, 1, 1], 3);
        let params = CellParams::new(3);
        let mc = MonteCarloConfig {
            samples: 50,
            sigma_vt: 0.0,
            sigma_beta: 0.0,
            seed: 1,
        };
        let db = mpla_plusplus(&f, &params, &mc, &TrainerConfig::default(), DEFAULT_LAMBDA).unwrap();
        assert_eq!((db.stats.n_e, db.stats.m_f), (0, 0));
        assert!(db.error_entries.is_empty());
        let p = program_with_fallback(&nominal(3), &f, &db, &TrainerConfig::default()).unwrap();
        assert_eq!(p.method, ProgramMethod::Nominal);
        assert_eq!(p.vt, db.nominal);
    }

    #[test]
    fn instance_seeds_differ() {
        let mc = MonteCarloConfig {
            samples: 3,
            sigma_vt: 0.03,
            sigma_beta: 0.05,
            seed: 9,
        };
        assert_ne!(mc.instance_seed(0), mc.instance_seed(1));
        assert_eq!(mc.instance_seed(2), mc.instance_seed(2));
    }

    fn small_threshold() -> impl Strategy<Value = TruthTable> {
        (proptest::collection::vec(1u32..4, 1..4), 1u32..6).prop_filter_map("valid threshold", |(w, t)| {
            let sum: u32 = w.iter().sum();
            (t <= sum).then(|| tf(&w, t))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn vts_stay_in_window(tt in small_threshold(), seed in 0u64..50) {
            let inst = CellInstance::sample(CellParams::new(tt.arity()), 0.03, 0.05, seed).unwrap();
            let r = mpla0(&tt, &inst, &TrainerConfig::default(), &HandicapConfig::symmetric(0.05, DEFAULT_LAMBDA)).unwrap();
            prop_assert!(r.vt.within_bounds(inst.params()));
        }

        #[test]
        fn convergence_ignores_minterm_order(tt in small_threshold(), seed in any::<u64>()) {
            let inst = nominal(tt.arity());
            let asc = mpla0(&tt, &inst, &TrainerConfig::default(), &HandicapConfig::none()).unwrap();
            let cfg = TrainerConfig { order: MintermOrder::Random(seed), ..TrainerConfig::default() };
            let rnd = mpla0(&tt, &inst, &cfg, &HandicapConfig::none()).unwrap();
            prop_assert!(asc.converged && rnd.converged);
            prop_assert_eq!(inst.truth_table(&rnd.vt).unwrap(), tt);
        }

        #[test]
        fn onset_update_moves_conductances_apart(flat in proptest::collection::vec(0.1f64..0.8, 8), seed in any::<u64>()) {
            let inst = nominal(3);
            let start = VtAssignment::from_flat(3, &flat).unwrap();
            let all_on = TruthTable::new(3, 0xff).unwrap();
            let cfg = TrainerConfig {
                kmax: Some(1),
                initial_vt: Some(start.clone()),
                order: MintermOrder::Random(seed),
                ..TrainerConfig::default()
            };
            let m = cfg.minterms(3)[0];
            // a handicap no cell can meet forces an update on the first minterm
            let r = mpla0(&all_on, &inst, &cfg, &HandicapConfig::symmetric(100.0, 1.0)).unwrap();
            prop_assert_eq!(r.iterations, 1);
            let (gl0, gr0) = inst.conductances(&start, m);
            let (gl1, gr1) = inst.conductances(&r.vt, m);
            prop_assert!(gl1 > gl0 && gr1 < gr0);
        }

        #[test]
        fn margins_grow_with_handicap(tt in small_threshold()) {
            let inst = nominal(tt.arity());
            let cfg = TrainerConfig::default();
            let cmax = find_max_handicap(&tt, &inst, &cfg, DEFAULT_LAMBDA).unwrap();
            let lo = mpla_plus(&tt, &inst, &cfg, 0.0, 0.0, DEFAULT_LAMBDA).unwrap();
            let hi = mpla_plus(&tt, &inst, &cfg, cmax, cmax, DEFAULT_LAMBDA).unwrap();
            prop_assert!(hi.margins.min_margin() >= lo.margins.min_margin() - 1e-9);
        }
    }
}
