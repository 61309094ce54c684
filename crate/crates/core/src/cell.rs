// SPDX-License-Identifier: Apache-2.0
//! Behavioral surrogate of the flash threshold cell.
//!
//! Each side of the cell is a parallel network of `n + 1` flash branches.
//! Branch 0 is always on; branch `i` conducts when input `x_i` is 1. A
//! branch conducts `beta_factor * beta * max(0, V_G - (vt + offset))`, and
//! the cell outputs 1 when the left network conducts more than the right.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::truth_table::{TruthTable, MAX_ARITY};

/// Conductance differences below this are treated as a tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    pub arity: usize,
    pub vdd: f64,
    pub gate_drive: f64,
    pub beta: f64,
    /// Lowest programmable VT, also the distance of the highest one from VDD.
    pub vt_floor: f64,
    pub pulse_step: f64,
    pub delay_d0: f64,
    pub delay_k: f64,
}

impl CellParams {
    pub fn new(arity: usize) -> Self {
        Self {
            arity,
            vdd: 0.9,
            gate_drive: 0.9,
            beta: 1.0,
            vt_floor: 0.02,
            pulse_step: 0.02,
            delay_d0: 1.0,
            delay_k: 1.0,
        }
    }

    pub fn with_arity(&self, arity: usize) -> Self {
        Self { arity, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.arity == 0 || self.arity > MAX_ARITY {
            return Err(Error::Arity(self.arity));
        }
        if !(self.vt_floor > 0.0 && self.vt_floor < self.vdd) {
            return Err(Error::Params("vt_floor must lie in (0, vdd)"));
        }
        if self.pulse_step <= 0.0 {
            return Err(Error::Params("pulse_step must be positive"));
        }
        if self.gate_drive > self.vdd {
            return Err(Error::Params("gate_drive must not exceed vdd"));
        }
        if self.beta <= 0.0 || self.delay_k <= 0.0 {
            return Err(Error::Params("beta and delay_k must be positive"));
        }
        Ok(())
    }

    pub fn vt_min(&self) -> f64 {
        self.vt_floor
    }

    pub fn vt_max(&self) -> f64 {
        self.vdd - self.vt_floor
    }

    pub fn transistors(&self) -> usize {
        2 * self.arity + 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Programmed VTs of one cell, `n + 1` per side with the always-on branch
/// at index 0.
///
/// Flat transistor numbering (used by the programming chain and the VT
/// database) puts the left side at `0..=n` and the right side at
/// `n+1..=2n+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct VtAssignment {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl VtAssignment {
    pub fn new(left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if left.len() != right.len() || left.len() < 2 || left.len() > MAX_ARITY + 1 {
            return Err(Error::Params("left and right need n+1 entries each, 1 <= n <= 5"));
        }
        Ok(Self { left, right })
    }

    pub fn uniform(arity: usize, vt: f64) -> Self {
        Self {
            left: alloc::vec![vt; arity + 1],
            right: alloc::vec![vt; arity + 1],
        }
    }

    pub fn from_flat(arity: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != 2 * arity + 2 {
            return Err(Error::Params("flat VT vector must have 2n+2 entries"));
        }
        Self::new(flat[..=arity].to_vec(), flat[arity + 1..].to_vec())
    }

    pub fn arity(&self) -> usize {
        self.left.len() - 1
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    pub fn side(&self, side: Side) -> &[f64] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut [f64] {
        match side {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.left.iter().chain(&self.right).copied().collect()
    }

    pub fn get_flat(&self, t: usize) -> f64 {
        let n1 = self.left.len();
        if t < n1 {
            self.left[t]
        } else {
            self.right[t - n1]
        }
    }

    pub fn set_flat(&mut self, t: usize, v: f64) {
        let n1 = self.left.len();
        if t < n1 {
            self.left[t] = v;
        } else {
            self.right[t - n1] = v;
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.left.iter().chain(&self.right).map(|v| v * v).sum()
    }

    /// Whether every entry lies in the programmable window of `params`.
    pub fn within_bounds(&self, params: &CellParams) -> bool {
        let (lo, hi) = (params.vt_min() - 1e-12, params.vt_max() + 1e-12);
        self.left.iter().chain(&self.right).all(|&v| (lo..=hi).contains(&v))
    }

    /// Uniform downward drift of every stored VT, in millivolts, floored
    /// at zero.
    pub fn apply_drift(&self, drift_mv: f64) -> Self {
        let d = drift_mv.max(0.0) / 1000.0;
        let shift = |v: &f64| (v - d).max(0.0);
        Self {
            left: self.left.iter().map(shift).collect(),
            right: self.right.iter().map(shift).collect(),
        }
    }
}

/// One manufactured cell: nominal parameters plus per-transistor variation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellInstance {
    params: CellParams,
    vt_offsets: Vec<f64>,
    beta_factors: Vec<f64>,
    seed: u64,
}

/// Conductances and margin of one minterm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MintermMargin {
    pub g_left: f64,
    pub g_right: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub rows: Vec<MintermMargin>,
    /// Smallest `G_L - G_R` over the onset (infinite for an empty onset).
    pub min_onset_margin: f64,
    /// Smallest `G_R - G_L` over the offset (infinite for an empty offset).
    pub min_offset_margin: f64,
}

impl MarginReport {
    /// Gap between the closest onset and offset points.
    pub fn separation(&self) -> f64 {
        self.min_onset_margin + self.min_offset_margin
    }

    pub fn min_margin(&self) -> f64 {
        self.min_onset_margin.min(self.min_offset_margin)
    }
}

impl CellInstance {
    /// Instance without variation.
    pub fn nominal(params: CellParams) -> Result<Self> {
        params.validate()?;
        let t = params.transistors();
        Ok(Self {
            params,
            vt_offsets: alloc::vec![0.0; t],
            beta_factors: alloc::vec![1.0; t],
            seed: 0,
        })
    }

    /// Draws independent Gaussian VT offsets (`sigma_vt` volts) and beta
    /// factors (`1 + N(0, sigma_beta)`) per transistor.
    pub fn sample(params: CellParams, sigma_vt: f64, sigma_beta: f64, seed: u64) -> Result<Self> {
        params.validate()?;
        let vt_dist = Normal::new(0.0, sigma_vt).map_err(|_| Error::Params("sigma_vt must be finite and >= 0"))?;
        let beta_dist =
            Normal::new(1.0, sigma_beta).map_err(|_| Error::Params("sigma_beta must be finite and >= 0"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = params.transistors();
        let vt_offsets = (0..t).map(|_| vt_dist.sample(&mut rng)).collect();
        // a non-positive drive factor is unphysical; keep a small floor
        let beta_factors = (0..t).map(|_| beta_dist.sample(&mut rng).max(1e-3)).collect();
        Ok(Self {
            params,
            vt_offsets,
            beta_factors,
            seed,
        })
    }

    pub fn params(&self) -> &CellParams {
        &self.params
    }

    pub fn arity(&self) -> usize {
        self.params.arity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vt_offsets(&self) -> &[f64] {
        &self.vt_offsets
    }

    pub fn beta_factors(&self) -> &[f64] {
        &self.beta_factors
    }

    fn flat_index(&self, side: Side, index: usize) -> usize {
        match side {
            Side::Left => index,
            Side::Right => self.params.arity + 1 + index,
        }
    }

    /// Conductance of one branch programmed to `vt`. Branch 0 always
    /// conducts regardless of `active`.
    pub fn branch_conductance(&self, side: Side, index: usize, vt: f64, active: bool) -> f64 {
        if index != 0 && !active {
            return 0.0;
        }
        let t = self.flat_index(side, index);
        let overdrive = self.params.gate_drive - (vt + self.vt_offsets[t]);
        self.beta_factors[t] * self.params.beta * overdrive.max(0.0)
    }

    fn check_arity(&self, vt: &VtAssignment) -> Result<()> {
        if vt.arity() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                got: vt.arity(),
            });
        }
        Ok(())
    }

    /// `(G_L, G_R)` for minterm `m`.
    pub fn conductances(&self, vt: &VtAssignment, m: u32) -> (f64, f64) {
        let n = self.arity();
        let side_sum = |side: Side| {
            let v = vt.side(side);
            (0..=n)
                .map(|i| {
                    let active = i == 0 || TruthTable::var_bit(n, m, i - 1);
                    self.branch_conductance(side, i, v[i], active)
                })
                .sum::<f64>()
        };
        (side_sum(Side::Left), side_sum(Side::Right))
    }

    /// Output bit for minterm `m`; a tie is reported as metastable.
    pub fn evaluate(&self, vt: &VtAssignment, m: u32) -> Result<bool> {
        self.check_arity(vt)?;
        let (gl, gr) = self.conductances(vt, m);
        if (gl - gr).abs() <= TIE_TOLERANCE {
            return Err(Error::Metastable(m));
        }
        Ok(gl > gr)
    }

    pub fn truth_table(&self, vt: &VtAssignment) -> Result<TruthTable> {
        self.check_arity(vt)?;
        let n = self.arity();
        let mut bits = 0u32;
        for m in 0..1u32 << n {
            if self.evaluate(vt, m)? {
                bits |= 1 << m;
            }
        }
        TruthTable::new(n, bits)
    }

    pub fn margins(&self, vt: &VtAssignment, tt: &TruthTable) -> Result<MarginReport> {
        self.check_arity(vt)?;
        if tt.arity() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                got: tt.arity(),
            });
        }
        let mut rows = Vec::with_capacity(tt.rows() as usize);
        let mut min_on = f64::INFINITY;
        let mut min_off = f64::INFINITY;
        for m in 0..tt.rows() {
            let (g_left, g_right) = self.conductances(vt, m);
            let margin = g_left - g_right;
            if tt.value(m) {
                min_on = min_on.min(margin);
            } else {
                min_off = min_off.min(-margin);
            }
            rows.push(MintermMargin {
                g_left,
                g_right,
                margin,
            });
        }
        Ok(MarginReport {
            rows,
            min_onset_margin: min_on,
            min_offset_margin: min_off,
        })
    }

    /// Sense delay for minterm `m`: `d0 + k / |G_L - G_R|`.
    pub fn delay(&self, vt: &VtAssignment, m: u32) -> Result<f64> {
        self.check_arity(vt)?;
        let (gl, gr) = self.conductances(vt, m);
        let gap = (gl - gr).abs();
        if gap <= TIE_TOLERANCE {
            return Err(Error::Metastable(m));
        }
        Ok(self.params.delay_d0 + self.params.delay_k / gap)
    }

    /// Minterm with the smallest conductance gap, which sets the delay.
    pub fn critical_minterm(&self, vt: &VtAssignment) -> u32 {
        (0..1u32 << self.arity())
            .map(|m| {
                let (gl, gr) = self.conductances(vt, m);
                (m, (gl - gr).abs())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(m, _)| m)
            .unwrap_or(0)
    }

    /// Largest delay over all minterms (the critical minterm's delay).
    pub fn worst_delay(&self, vt: &VtAssignment) -> Result<f64> {
        self.delay(vt, self.critical_minterm(vt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn nominal(n: usize) -> CellInstance {
        CellInstance::nominal(CellParams::new(n)).unwrap()
    }

    #[test]
    fn branch_conductance_examples() {
        let c = nominal(2);
        assert!((c.branch_conductance(Side::Left, 1, 0.5, true) - 0.4).abs() < 1e-12);
        assert_eq!(c.branch_conductance(Side::Left, 1, 0.5, false), 0.0);
        assert_eq!(c.branch_conductance(Side::Right, 2, 0.95, true), 0.0);
        // the always-on branch ignores `active`
        assert!(c.branch_conductance(Side::Right, 0, 0.5, false) > 0.0);
    }

    #[test]
    fn left_only_conduction_gives_one() {
        let c = nominal(2);
        let vt = VtAssignment::new(vec![0.5, 0.95, 0.95], vec![0.95, 0.95, 0.95]).unwrap();
        let tt = c.truth_table(&vt).unwrap();
        assert_eq!(tt.bits(), 0b1111);
    }

    #[test]
    fn symmetric_assignment_is_metastable() {
        let c = nominal(3);
        let vt = VtAssignment::uniform(3, 0.45);
        for m in 0..8 {
            assert_eq!(c.evaluate(&vt, m), Err(Error::Metastable(m)));
        }
        assert!(c.truth_table(&vt).is_err());
        let r = c.margins(&vt, &TruthTable::new(3, 0xe8).unwrap()).unwrap();
        assert!(r.rows.iter().all(|row| row.margin == 0.0));
    }

    #[test]
    fn delay_arithmetic() {
        let c = nominal(1);
        let vt = VtAssignment::new(vec![0.5, 0.95], vec![0.95, 0.95]).unwrap();
        assert!((c.delay(&vt, 0).unwrap() - 3.5).abs() < 1e-12);
        let vt = VtAssignment::uniform(1, 0.5);
        assert!(c.delay(&vt, 0).is_err());
    }

    #[test]
    fn drift_lowers_every_entry() {
        let vt = VtAssignment::uniform(2, 0.5);
        assert_eq!(vt.apply_drift(0.0), vt);
        let d = vt.apply_drift(5.0);
        assert!(d.flat().iter().all(|v| (v - 0.495).abs() < 1e-12));
        assert!(VtAssignment::uniform(1, 0.001)
            .apply_drift(5.0)
            .flat()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn sampling_is_deterministic_and_zero_sigma_is_nominal() {
        let p = CellParams::new(5);
        let a = CellInstance::sample(p.clone(), 0.03, 0.05, 7).unwrap();
        let b = CellInstance::sample(p.clone(), 0.03, 0.05, 7).unwrap();
        assert_eq!(a, b);
        let z = CellInstance::sample(p, 0.0, 0.0, 7).unwrap();
        assert!(z.vt_offsets().iter().all(|&v| v == 0.0));
        assert!(z.beta_factors().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn sampled_offsets_match_sigma() {
        let p = CellParams::new(5);
        let mut all = Vec::new();
        for seed in 0..2000 {
            all.extend_from_slice(CellInstance::sample(p.clone(), 0.03, 0.05, seed).unwrap().vt_offsets());
        }
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let var = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (all.len() - 1) as f64;
        let sd = libm::sqrt(var);
        assert!((sd - 0.03).abs() < 0.003, "sd {sd}");
    }

    #[test]
    fn flat_layout() {
        let vt = VtAssignment::from_flat(2, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_eq!(vt.left(), &[0.1, 0.2, 0.3]);
        assert_eq!(vt.right(), &[0.4, 0.5, 0.6]);
        assert_eq!(vt.get_flat(4), 0.5);
        assert!(VtAssignment::from_flat(2, &[0.1; 5]).is_err());
    }

    #[test]
    fn params_validation() {
        let mut p = CellParams::new(3);
        assert!(p.validate().is_ok());
        p.vt_floor = 0.95;
        assert!(p.validate().is_err());
        assert!(CellParams::new(6).validate().is_err());
    }

    proptest! {
        #[test]
        fn conductance_is_non_increasing_in_vt(vt in 0.0f64..1.0, dv in 0.0f64..0.5, seed in 0u64..100) {
            let c = CellInstance::sample(CellParams::new(3), 0.03, 0.05, seed).unwrap();
            for i in 0..4 {
                let a = c.branch_conductance(Side::Left, i, vt, true);
                let b = c.branch_conductance(Side::Left, i, vt + dv, true);
                prop_assert!(b <= a);
            }
        }

        #[test]
        fn side_total_is_sum_of_active_branches(flat in proptest::collection::vec(0.02f64..0.88, 8), m in 0u32..8) {
            let c = nominal(3);
            let vt = VtAssignment::from_flat(3, &flat).unwrap();
            let (gl, _) = c.conductances(&vt, m);
            let by_hand: f64 = (0..4)
                .filter(|&i| i == 0 || TruthTable::var_bit(3, m, i - 1))
                .map(|i| 0.9 - vt.left()[i])
                .sum();
            prop_assert!((gl - by_hand).abs() < 1e-12);
        }

        #[test]
        fn larger_gap_means_smaller_delay(a in 0.01f64..0.4, b in 0.01f64..0.4) {
            prop_assume!((a - b).abs() > 1e-6);
            let c = nominal(1);
            // only the left always-on branch conducts, so the gap is 0.9 - vt
            let da = c.delay(&VtAssignment::new(vec![0.9 - a, 0.95], vec![0.95, 0.95]).unwrap(), 0).unwrap();
            let db = c.delay(&VtAssignment::new(vec![0.9 - b, 0.95], vec![0.95, 0.95]).unwrap(), 0).unwrap();
            prop_assert_eq!(a > b, da < db);
        }

        #[test]
        fn reconstruction_is_bit_identical(seed in any::<u64>()) {
            let p = CellParams::new(4);
            let a = CellInstance::sample(p.clone(), 0.03, 0.05, seed).unwrap();
            let b = CellInstance::sample(p, 0.03, 0.05, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
