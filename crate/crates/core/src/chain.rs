// SPDX-License-Identifier: Apache-2.0
//! Programming scan chain: select register, transistor decoder, mode
//! signals and high-voltage pulse plans.
//!
//! The select register holds bits `Q_0..Q_N` for `N` cells; cell `i` is
//! selected when `Q_i = Q_{i+1} = 0` (zero-based here). Every PCLK shifts
//! the register by one towards higher indices and feeds a new bit into
//! `Q_0`, so selection is a two-zero token pushed down the chain.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::cell::{CellParams, VtAssignment};
use crate::error::{Error, Result};

/// Shifts below this fraction of a step are absorbed when counting pulses.
const PULSE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    q: Vec<bool>,
    pclk_count: u64,
}

impl ChainState {
    /// All select bits at one, nothing selected.
    pub fn new(cells: usize) -> Self {
        Self {
            q: alloc::vec![true; cells + 1],
            pclk_count: 0,
        }
    }

    pub fn cells(&self) -> usize {
        self.q.len() - 1
    }

    pub fn bits(&self) -> &[bool] {
        &self.q
    }

    pub fn pclk_count(&self) -> u64 {
        self.pclk_count
    }

    /// One PCLK edge with serial input `input` entering at `Q_0`.
    pub fn clock(&mut self, input: bool) {
        self.q.rotate_right(1);
        self.q[0] = input;
        self.pclk_count += 1;
    }

    pub fn selected(&self) -> Option<usize> {
        (0..self.cells()).find(|&i| !self.q[i] && !self.q[i + 1])
    }

    fn zero_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.q.iter().enumerate().filter(|(_, &b)| !b).map(|(i, _)| i)
    }

    /// Moves the token so that exactly cell `i` is selected.
    ///
    /// A token already upstream of `i` is pushed forward; otherwise the
    /// register is flushed with ones and a fresh token is clocked in.
    pub fn select(&mut self, i: usize) -> Result<()> {
        let len = self.cells();
        if i >= len {
            return Err(Error::CellIndex { index: i, len });
        }
        let reusable = match self.selected() {
            Some(cur) => cur <= i && self.zero_positions().count() == 2,
            None => false,
        };
        if !reusable {
            while self.zero_positions().next().is_some() {
                self.clock(true);
            }
            self.clock(false);
            self.clock(false);
        }
        while self.selected() != Some(i) {
            self.clock(true);
        }
        Ok(())
    }
}

/// Number of decoder address bits for a cell of arity `n`.
pub fn address_bits(arity: usize) -> u32 {
    let lines = 2 * arity as u32 + 2;
    u32::BITS - (lines - 1).leading_zeros()
}

/// One-hot decoder output for the `2n + 2` transistor lines.
pub fn decode(address: u32, arity: usize) -> Result<Vec<bool>> {
    let lines = 2 * arity + 2;
    if address as usize >= lines {
        return Err(Error::Address { address, lines });
    }
    Ok((0..lines).map(|l| l == address as usize).collect())
}

/// Direction of a high-voltage pulse: programming raises VT, erasing
/// lowers it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Program,
    Erase,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Program => "program",
            Polarity::Erase => "erase",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "program" => Some(Polarity::Program),
            "erase" => Some(Polarity::Erase),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PulseCommand {
    pub cell: usize,
    pub transistor: usize,
    pub polarity: Polarity,
    pub count: u32,
}

/// Number of pulses of size `step` needed to move from `current` to
/// `target`, rounding up.
pub fn pulses_for(target: f64, current: f64, step: f64) -> (Polarity, u32) {
    let delta = target - current;
    let polarity = if delta < 0.0 {
        Polarity::Erase
    } else {
        Polarity::Program
    };
    let count = libm::ceil(libm::fabs(delta) / step - PULSE_EPS).max(0.0) as u32;
    (polarity, count)
}

/// The signal tuple driven onto a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSignals {
    pub prog: bool,
    pub erase: bool,
    pub clk: bool,
    pub te: bool,
    /// High-voltage line in volts: -20, 0 or +20.
    pub hiv: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Regular,
    Program,
    Erase,
    ScanTest,
}

impl ModeSignals {
    pub const PROGRAM: Self = Self {
        prog: true,
        erase: false,
        clk: false,
        te: false,
        hiv: 20,
    };
    pub const ERASE: Self = Self {
        prog: true,
        erase: true,
        clk: false,
        te: false,
        hiv: -20,
    };
    pub const SCAN_TEST: Self = Self {
        prog: false,
        erase: false,
        clk: false,
        te: true,
        hiv: 0,
    };

    /// Regular operation; the clock is free to toggle.
    pub fn regular(clk: bool) -> Self {
        Self {
            prog: false,
            erase: false,
            clk,
            te: false,
            hiv: 0,
        }
    }

    pub fn mode(&self) -> Option<Mode> {
        if *self == Self::PROGRAM {
            Some(Mode::Program)
        } else if *self == Self::ERASE {
            Some(Mode::Erase)
        } else if *self == Self::SCAN_TEST {
            Some(Mode::ScanTest)
        } else if *self == Self::regular(self.clk) {
            Some(Mode::Regular)
        } else {
            None
        }
    }

    /// Checks the tuple against the one required for `expected`, naming the
    /// first signal that differs.
    pub fn require(&self, expected: Mode) -> Result<()> {
        let want = match expected {
            Mode::Program => Self::PROGRAM,
            Mode::Erase => Self::ERASE,
            Mode::ScanTest => Self::SCAN_TEST,
            Mode::Regular => Self::regular(self.clk),
        };
        let diffs = [
            ("PROG", self.prog != want.prog),
            ("ERASE", self.erase != want.erase),
            ("CLK", self.clk != want.clk),
            ("TE", self.te != want.te),
            ("HiV", self.hiv != want.hiv),
        ];
        match diffs.iter().find(|(_, d)| *d) {
            None => Ok(()),
            Some((name, _)) => Err(Error::Protocol(format!(
                "{name} is illegal for {expected:?} mode: {self:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Discipline {
    /// Per-transistor pulses in both directions.
    #[default]
    Bidirectional,
    /// Whenever any VT of a cell must go down, erase the whole cell to the
    /// floor and program every transistor up from there.
    EraseThenProgram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanOp {
    /// Whole-cell erase to the floor VT.
    Erase {
        cell: usize,
    },
    Pulse(PulseCommand),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramPlan {
    pub ops: Vec<PlanOp>,
    pub pulse_duration_us: f64,
}

impl ProgramPlan {
    pub fn commands(&self) -> impl Iterator<Item = &PulseCommand> {
        self.ops.iter().filter_map(|op| match op {
            PlanOp::Pulse(p) => Some(p),
            PlanOp::Erase { .. } => None,
        })
    }

    /// Pulses including one per whole-cell erase.
    pub fn total_pulses(&self) -> u64 {
        self.ops
            .iter()
            .map(|op| match op {
                PlanOp::Pulse(p) => u64::from(p.count),
                PlanOp::Erase { .. } => 1,
            })
            .sum()
    }

    pub fn estimated_time_us(&self) -> f64 {
        self.total_pulses() as f64 * self.pulse_duration_us
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    pub pulse_duration_us: f64,
    pub discipline: Discipline,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            pulse_duration_us: 1.0,
            discipline: Discipline::Bidirectional,
        }
    }
}

/// Plans the pulses that take every cell from `current` to `target` in a
/// single pass down the chain.
pub fn plan_program(
    chain: &ChainState,
    target: &BTreeMap<usize, VtAssignment>,
    current: &BTreeMap<usize, VtAssignment>,
    params: &CellParams,
    cfg: &PlanConfig,
) -> Result<ProgramPlan> {
    let mut ops = Vec::new();
    for (&cell, want) in target {
        if cell >= chain.cells() {
            return Err(Error::CellIndex {
                index: cell,
                len: chain.cells(),
            });
        }
        let have = current.get(&cell).ok_or(Error::CellIndex {
            index: cell,
            len: chain.cells(),
        })?;
        if have.arity() != want.arity() {
            return Err(Error::ArityMismatch {
                expected: want.arity(),
                got: have.arity(),
            });
        }
        let step = params.pulse_step;
        let t = 2 * want.arity() + 2;
        let needs_lowering = (0..t).any(|k| {
            let (polarity, count) = pulses_for(want.get_flat(k), have.get_flat(k), step);
            polarity == Polarity::Erase && count > 0
        });
        let erase_first = cfg.discipline == Discipline::EraseThenProgram && needs_lowering;
        if erase_first {
            ops.push(PlanOp::Erase { cell });
        }
        for k in 0..t {
            let from = if erase_first { params.vt_min() } else { have.get_flat(k) };
            let (polarity, count) = pulses_for(want.get_flat(k), from, step);
            if count > 0 {
                ops.push(PlanOp::Pulse(PulseCommand {
                    cell,
                    transistor: k,
                    polarity,
                    count,
                }));
            }
        }
    }
    Ok(ProgramPlan {
        ops,
        pulse_duration_us: cfg.pulse_duration_us,
    })
}

/// Applies a plan to `cells`, driving the chain and checking that every
/// operation happens under the legal signal tuple taken from `modes`.
///
/// `modes` supplies one tuple per operation in plan order.
pub fn execute_plan(
    chain: &mut ChainState,
    plan: &ProgramPlan,
    cells: &mut BTreeMap<usize, VtAssignment>,
    params: &CellParams,
    modes: &[ModeSignals],
) -> Result<()> {
    if modes.len() < plan.ops.len() {
        return Err(Error::Protocol(format!(
            "mode trace has {} entries for {} operations",
            modes.len(),
            plan.ops.len()
        )));
    }
    let (lo, hi) = (params.vt_min(), params.vt_max());
    for (op, signals) in plan.ops.iter().zip(modes) {
        match *op {
            PlanOp::Erase { cell } => {
                signals.require(Mode::Erase)?;
                chain.select(cell)?;
                let vt = cells.get_mut(&cell).ok_or(Error::CellIndex {
                    index: cell,
                    len: chain.cells(),
                })?;
                for k in 0..2 * vt.arity() + 2 {
                    vt.set_flat(k, lo);
                }
            }
            PlanOp::Pulse(p) => {
                let mode = match p.polarity {
                    Polarity::Program => Mode::Program,
                    Polarity::Erase => Mode::Erase,
                };
                signals.require(mode)?;
                if chain.selected() != Some(p.cell) {
                    chain.select(p.cell)?;
                }
                let vt = cells.get_mut(&p.cell).ok_or(Error::CellIndex {
                    index: p.cell,
                    len: chain.cells(),
                })?;
                let lines = decode(p.transistor as u32, vt.arity())?;
                let k = lines.iter().position(|&l| l).expect("one-hot");
                let sign = if p.polarity == Polarity::Program { 1.0 } else { -1.0 };
                let v = vt.get_flat(k) + sign * params.pulse_step * f64::from(p.count);
                vt.set_flat(k, v.clamp(lo, hi));
            }
        }
    }
    Ok(())
}

/// The legal tuple trace for a plan.
pub fn mode_trace(plan: &ProgramPlan) -> Vec<ModeSignals> {
    plan.ops
        .iter()
        .map(|op| match op {
            PlanOp::Erase { .. } => ModeSignals::ERASE,
            PlanOp::Pulse(p) if p.polarity == Polarity::Program => ModeSignals::PROGRAM,
            PlanOp::Pulse(_) => ModeSignals::ERASE,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn params() -> CellParams {
        CellParams::new(2)
    }

    #[test]
    fn init_has_nothing_selected() {
        assert_eq!(ChainState::new(1).bits(), &[true, true]);
        let c = ChainState::new(4);
        assert!(c.bits().iter().all(|&b| b));
        assert_eq!(c.selected(), None);
    }

    #[test]
    fn selection_shift_counts() {
        let mut c = ChainState::new(4);
        c.select(0).unwrap();
        assert_eq!(c.selected(), Some(0));
        assert_eq!(c.pclk_count(), 2);
        c.select(3).unwrap();
        assert_eq!(c.selected(), Some(3));
        assert_eq!(c.pclk_count(), 5);
        // going back flushes the token (2 shifts) and clocks in a new one
        c.select(1).unwrap();
        assert_eq!(c.selected(), Some(1));
        assert_eq!(c.pclk_count(), 5 + 2 + 3);
        assert_eq!(c.select(4), Err(Error::CellIndex { index: 4, len: 4 }));
    }

    #[test]
    fn decoder() {
        assert_eq!(address_bits(5), 4);
        assert_eq!(address_bits(1), 2);
        let d = decode(0, 5).unwrap();
        assert_eq!(d.len(), 12);
        assert!(d[0] && d.iter().filter(|&&b| b).count() == 1);
        assert!(decode(12, 5).is_err());
    }

    #[test]
    fn pulse_counts() {
        assert_eq!(pulses_for(0.1, 0.0, 0.02), (Polarity::Program, 5));
        assert_eq!(pulses_for(0.3, 0.3, 0.02).1, 0);
        assert_eq!(pulses_for(0.05, 0.0, 0.02), (Polarity::Program, 3));
        assert_eq!(pulses_for(0.0, 0.05, 0.02), (Polarity::Erase, 3));
    }

    #[test]
    fn mode_tuples() {
        assert_eq!(ModeSignals::PROGRAM.mode(), Some(Mode::Program));
        assert_eq!(ModeSignals::regular(true).mode(), Some(Mode::Regular));
        let bad = ModeSignals {
            te: true,
            ..ModeSignals::PROGRAM
        };
        assert_eq!(bad.mode(), None);
        match bad.require(Mode::Program) {
            Err(Error::Protocol(msg)) => assert!(msg.starts_with("TE")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn program_pulse_adds_one_step() {
        let p = params();
        let mut chain = ChainState::new(1);
        let mut cells = BTreeMap::from([(0, VtAssignment::uniform(2, 0.4))]);
        let plan = ProgramPlan {
            ops: vec![PlanOp::Pulse(PulseCommand {
                cell: 0,
                transistor: 1,
                polarity: Polarity::Program,
                count: 1,
            })],
            pulse_duration_us: 1.0,
        };
        execute_plan(&mut chain, &plan, &mut cells, &p, &[ModeSignals::PROGRAM]).unwrap();
        assert!((cells[&0].get_flat(1) - 0.42).abs() < 1e-12);
        let bad = ModeSignals {
            te: true,
            ..ModeSignals::PROGRAM
        };
        assert!(matches!(
            execute_plan(&mut chain, &plan, &mut cells, &p, &[bad]),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn single_transistor_off_by_a_tenth() {
        let p = params();
        let chain = ChainState::new(1);
        let cur = BTreeMap::from([(0, VtAssignment::uniform(2, 0.4))]);
        let mut want = cur.clone();
        assert!(plan_program(&chain, &want, &cur, &p, &PlanConfig::default())
            .unwrap()
            .is_empty());
        want.get_mut(&0).unwrap().set_flat(3, 0.5);
        let plan = plan_program(&chain, &want, &cur, &p, &PlanConfig::default()).unwrap();
        assert_eq!(plan.total_pulses(), 5);
        assert_eq!(plan.estimated_time_us(), 5.0);
    }

    #[test]
    fn erase_then_program_erases_first() {
        let p = params();
        let mut chain = ChainState::new(2);
        let cur = BTreeMap::from([(0, VtAssignment::uniform(2, 0.4)), (1, VtAssignment::uniform(2, 0.4))]);
        let mut want = cur.clone();
        want.get_mut(&1).unwrap().set_flat(0, 0.3);
        let cfg = PlanConfig {
            discipline: Discipline::EraseThenProgram,
            ..PlanConfig::default()
        };
        let plan = plan_program(&chain, &want, &cur, &p, &cfg).unwrap();
        assert_eq!(plan.ops[0], PlanOp::Erase { cell: 1 });
        assert!(plan.commands().all(|c| c.polarity == Polarity::Program));
        let mut cells = cur.clone();
        execute_plan(&mut chain, &plan, &mut cells, &p, &mode_trace(&plan)).unwrap();
        for k in 0..6 {
            assert!((cells[&1].get_flat(k) - want[&1].get_flat(k)).abs() <= p.pulse_step + 1e-12);
        }
    }

    fn vt_strategy() -> impl Strategy<Value = VtAssignment> {
        proptest::collection::vec(0.02f64..=0.88, 6).prop_map(|v| VtAssignment::from_flat(2, &v).unwrap())
    }

    proptest! {
        #[test]
        fn at_most_one_cell_selected(ops in proptest::collection::vec(0usize..6, 0..20)) {
            let mut c = ChainState::new(6);
            for i in ops {
                c.select(i).unwrap();
                prop_assert_eq!(c.selected(), Some(i));
                let count = (0..6).filter(|&k| !c.bits()[k] && !c.bits()[k + 1]).count();
                prop_assert_eq!(count, 1);
            }
        }

        #[test]
        fn plan_execute_round_trip(
            cur in proptest::collection::vec(vt_strategy(), 3),
            want in proptest::collection::vec(vt_strategy(), 3),
            erase in any::<bool>(),
        ) {
            let p = params();
            let mut chain = ChainState::new(3);
            let cur: BTreeMap<_, _> = cur.into_iter().enumerate().collect();
            let want: BTreeMap<_, _> = want.into_iter().enumerate().collect();
            let discipline = if erase { Discipline::EraseThenProgram } else { Discipline::Bidirectional };
            let plan = plan_program(&chain, &want, &cur, &p, &PlanConfig { discipline, ..PlanConfig::default() }).unwrap();
            let mut cells = cur.clone();
            execute_plan(&mut chain, &plan, &mut cells, &p, &mode_trace(&plan)).unwrap();
            for (i, w) in &want {
                for k in 0..6 {
                    prop_assert!((cells[i].get_flat(k) - w.get_flat(k)).abs() <= p.pulse_step + 1e-9);
                }
            }
            // commands come in chain order
            let order: Vec<usize> = plan.commands().map(|c| c.cell).collect();
            prop_assert!(order.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn doubling_cells_doubles_pulses(vts in proptest::collection::vec(vt_strategy(), 1..4)) {
            let p = params();
            let n = vts.len();
            let base = VtAssignment::uniform(2, p.vt_min());
            let one: BTreeMap<_, _> = vts.iter().cloned().enumerate().collect();
            let two: BTreeMap<_, _> = vts.iter().chain(&vts).cloned().enumerate().collect();
            let cur1: BTreeMap<_, _> = (0..n).map(|i| (i, base.clone())).collect();
            let cur2: BTreeMap<_, _> = (0..2 * n).map(|i| (i, base.clone())).collect();
            let p1 = plan_program(&ChainState::new(n), &one, &cur1, &p, &PlanConfig::default()).unwrap();
            let p2 = plan_program(&ChainState::new(2 * n), &two, &cur2, &p, &PlanConfig::default()).unwrap();
            prop_assert_eq!(p2.total_pulses(), 2 * p1.total_pulses());
            prop_assert!((p2.estimated_time_us() - 2.0 * p1.estimated_time_us()).abs() < 1e-9);
        }
    }
}
