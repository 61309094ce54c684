// SPDX-License-Identifier: Apache-2.0
//! Post-fabrication timing correction of a stage launched by an FTL cell.
//!
//! The stage is launch cell, combinational delay `d2d`, capture flip-flop
//! with setup and hold times, clock skew and period. The launch cell's
//! clock-to-output delay is its sense delay on the critical minterm, which
//! falls as the trained handicap grows. A setup violation is repaired by
//! retraining at a larger handicap and a hold violation at a smaller one.

use alloc::format;
use alloc::vec::Vec;

use crate::cell::{CellInstance, VtAssignment};
use crate::error::{Error, Result};
use crate::trainer::{find_max_handicap, mpla_plus, TrainerConfig, HANDICAP_RESOLUTION};
use crate::truth_table::TruthTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingStage {
    pub d2d: f64,
    pub setup: f64,
    pub hold: f64,
    /// Capture clock arrives this much later than the launch clock.
    pub skew: f64,
    pub period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageSlack {
    pub c2q: f64,
    /// `period + skew - (c2q + d2d + setup)`.
    pub setup: f64,
    /// `c2q + d2d - (hold + skew)`.
    pub hold: f64,
}

impl StageSlack {
    pub fn met(&self) -> bool {
        self.setup >= 0.0 && self.hold >= 0.0
    }
}

impl TimingStage {
    pub fn slack(&self, c2q: f64) -> StageSlack {
        StageSlack {
            c2q,
            setup: self.period + self.skew - (c2q + self.d2d + self.setup),
            hold: c2q + self.d2d - (self.hold + self.skew),
        }
    }
}

/// One retrained assignment and its clock-to-output delay.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingPoint {
    pub handicap: f64,
    pub vt: VtAssignment,
    pub c2q: f64,
}

/// Assignments for every converging handicap from zero up to the largest.
pub fn c2q_sweep(tt: &TruthTable, inst: &CellInstance, cfg: &TrainerConfig, lambda: f64) -> Result<Vec<TimingPoint>> {
    let c_max = find_max_handicap(tt, inst, cfg, lambda)?;
    let steps = libm::round(c_max / HANDICAP_RESOLUTION) as u64;
    let mut out = Vec::new();
    for k in 0..=steps {
        let c = k as f64 * HANDICAP_RESOLUTION;
        let r = mpla_plus(tt, inst, cfg, c, c, lambda)?;
        if r.converged {
            let c2q = inst.worst_delay(&r.vt)?;
            out.push(TimingPoint {
                handicap: c,
                vt: r.vt,
                c2q,
            });
        }
    }
    Ok(out)
}

/// Point whose delay is closest to the middle of the swept delay range.
pub fn midpoint(sweep: &[TimingPoint]) -> &TimingPoint {
    let (lo, hi) = sweep.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.c2q), hi.max(p.c2q))
    });
    let mid = (lo + hi) / 2.0;
    sweep
        .iter()
        .min_by(|a, b| (a.c2q - mid).abs().total_cmp(&(b.c2q - mid).abs()))
        .expect("non-empty sweep")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingAction {
    /// Constraints already met; assignment unchanged.
    None,
    /// Retrained for a smaller clock-to-output delay.
    Setup,
    /// Retrained for a larger clock-to-output delay.
    Hold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingFix {
    pub vt: VtAssignment,
    /// Handicap of the new assignment; `None` when unchanged.
    pub handicap: Option<f64>,
    pub action: TimingAction,
    pub before: StageSlack,
    pub after: StageSlack,
}

/// Retrains the launch cell so the stage meets setup and hold.
///
/// On a setup violation the smallest handicap that leaves positive setup
/// slack (and no hold violation) is chosen; on a hold violation the largest
/// handicap that leaves positive hold slack.
pub fn fix_timing(
    stage: &TimingStage,
    tt: &TruthTable,
    inst: &CellInstance,
    current: &VtAssignment,
    cfg: &TrainerConfig,
    lambda: f64,
) -> Result<TimingFix> {
    if inst.truth_table(current)? != *tt {
        return Err(Error::NotRealized);
    }
    let before = stage.slack(inst.worst_delay(current)?);
    if before.met() {
        return Ok(TimingFix {
            vt: current.clone(),
            handicap: None,
            action: TimingAction::None,
            before,
            after: before,
        });
    }
    if before.setup < 0.0 && before.hold < 0.0 {
        return Err(Error::Unfixable(format!(
            "setup and hold both violated (slack {:.4} / {:.4}); no delay satisfies both",
            before.setup, before.hold
        )));
    }
    let sweep = c2q_sweep(tt, inst, cfg, lambda)?;
    let fits = |p: &&TimingPoint| {
        let s = stage.slack(p.c2q);
        s.setup > 0.0 && s.hold > 0.0
    };
    let (chosen, action) = if before.setup < 0.0 {
        (
            sweep.iter().filter(|p| p.c2q < before.c2q).find(fits),
            TimingAction::Setup,
        )
    } else {
        (
            sweep.iter().rev().filter(|p| p.c2q > before.c2q).find(fits),
            TimingAction::Hold,
        )
    };
    let p = chosen.ok_or_else(|| {
        let (lo, hi) = sweep.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.c2q), hi.max(p.c2q))
        });
        Error::Unfixable(format!("no retrained delay in [{lo:.4}, {hi:.4}] meets the stage"))
    })?;
    Ok(TimingFix {
        vt: p.vt.clone(),
        handicap: Some(p.handicap),
        action,
        before,
        after: stage.slack(p.c2q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CellParams;
    use crate::threshold::ThresholdFunction;
    use crate::trainer::DEFAULT_LAMBDA;

    fn setup() -> (TruthTable, CellInstance, TrainerConfig, Vec<TimingPoint>) {
        let tt = ThresholdFunction::new([2, 1, 1].to_vec(), 2).unwrap().truth_table();
        let inst = CellInstance::nominal(CellParams::new(3)).unwrap();
        let cfg = TrainerConfig::default();
        let sweep = c2q_sweep(&tt, &inst, &cfg, DEFAULT_LAMBDA).unwrap();
        (tt, inst, cfg, sweep)
    }

    #[test]
    fn sweep_spans_a_delay_range() {
        let (_, _, _, sweep) = setup();
        assert!(sweep.len() >= 3);
        let first = sweep.first().unwrap().c2q;
        let last = sweep.last().unwrap().c2q;
        assert!(last < first, "{first} -> {last}");
    }

    #[test]
    fn met_stage_is_left_alone() {
        let (tt, inst, cfg, sweep) = setup();
        let mid = &sweep[sweep.len() / 2];
        let stage = TimingStage {
            d2d: 1.0,
            setup: 0.5,
            hold: 0.2,
            skew: 0.0,
            period: 100.0,
        };
        let fix = fix_timing(&stage, &tt, &inst, &mid.vt, &cfg, DEFAULT_LAMBDA).unwrap();
        assert_eq!(fix.action, TimingAction::None);
        assert_eq!(fix.vt, mid.vt);
    }

    #[test]
    fn setup_and_hold_violations_are_repaired() {
        let (tt, inst, cfg, sweep) = setup();
        let mid = midpoint(&sweep);
        let range = sweep[0].c2q - sweep.last().unwrap().c2q;
        let (d2d, su, ho) = (1.0, 0.5, 0.2);

        let period = mid.c2q + d2d + su - 0.1 * range;
        let stage = TimingStage {
            d2d,
            setup: su,
            hold: ho,
            skew: 0.0,
            period,
        };
        let fix = fix_timing(&stage, &tt, &inst, &mid.vt, &cfg, DEFAULT_LAMBDA).unwrap();
        assert_eq!(fix.action, TimingAction::Setup);
        assert!(fix.before.setup < 0.0 && fix.after.setup > 0.0);
        assert!(fix.handicap.unwrap() > mid.handicap);

        let skew = mid.c2q + d2d - ho + 0.1 * range;
        let stage = TimingStage {
            d2d,
            setup: su,
            hold: ho,
            skew,
            period: 1e3,
        };
        let fix = fix_timing(&stage, &tt, &inst, &mid.vt, &cfg, DEFAULT_LAMBDA).unwrap();
        assert_eq!(fix.action, TimingAction::Hold);
        assert!(fix.before.hold < 0.0 && fix.after.hold > 0.0);
        assert!(fix.handicap.unwrap() < mid.handicap);
    }

    #[test]
    fn impossible_targets_are_unfixable() {
        let (tt, inst, cfg, sweep) = setup();
        let mid = &sweep[sweep.len() / 2];
        let stage = TimingStage {
            d2d: 1.0,
            setup: 0.5,
            hold: 0.2,
            skew: 0.0,
            period: 0.1,
        };
        let err = fix_timing(&stage, &tt, &inst, &mid.vt, &cfg, DEFAULT_LAMBDA).unwrap_err();
        assert!(matches!(err, Error::Unfixable(_)));
    }
}
