// SPDX-License-Identifier: Apache-2.0
//! Threshold functions: `f(x) = 1` iff `sum(w_i * x_i) >= T`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::truth_table::TruthTable;

/// Update cap for the integer perceptron before falling back to the bounded
/// exhaustive search.
pub const PERCEPTRON_CAP: u32 = 50_000;

/// Largest per-variable weight visited by the exhaustive searches. Minimal
/// realizations of functions of up to five variables stay well below it.
pub const WEIGHT_BOUND: u32 = 8;

/// Positive-form threshold function: non-negative integer weights and a
/// positive threshold.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ThresholdFunction {
    weights: Vec<u32>,
    threshold: u32,
}

impl ThresholdFunction {
    pub fn new(weights: Vec<u32>, threshold: u32) -> Result<Self> {
        if weights.is_empty() || weights.len() > crate::MAX_ARITY {
            return Err(Error::Arity(weights.len()));
        }
        if threshold == 0 {
            return Err(Error::ZeroThreshold);
        }
        Ok(Self { weights, threshold })
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    /// Sum of weights plus threshold, the quantity [`minimize_weights`] drives down.
    pub fn cost(&self) -> u32 {
        self.weights.iter().sum::<u32>() + self.threshold
    }

    pub fn evaluate(&self, minterm: &[bool]) -> Result<bool> {
        if minterm.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                got: minterm.len(),
            });
        }
        let sum: u32 = self
            .weights
            .iter()
            .zip(minterm)
            .filter(|(_, &b)| b)
            .map(|(w, _)| w)
            .sum();
        Ok(sum >= self.threshold)
    }

    /// Evaluates on a minterm index (`x_1` most significant).
    pub fn evaluate_index(&self, minterm: u32) -> bool {
        weighted_sum(&self.weights, minterm) >= self.threshold
    }

    pub fn truth_table(&self) -> TruthTable {
        TruthTable::from_fn(self.arity(), |m| self.evaluate_index(m)).expect("arity checked at construction")
    }
}

impl fmt::Display for ThresholdFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, w) in self.weights.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ";{}]", self.threshold)
    }
}

fn weighted_sum(weights: &[u32], minterm: u32) -> u32 {
    let n = weights.len();
    weights
        .iter()
        .enumerate()
        .filter(|(i, _)| TruthTable::var_bit(n, minterm, *i))
        .map(|(_, w)| *w)
        .sum()
}

/// Smallest threshold separating the table under `weights`, if any.
fn separating_threshold(tt: &TruthTable, weights: &[u32]) -> Option<u32> {
    let mut min_on = u32::MAX;
    let mut max_off: i64 = -1;
    for m in 0..tt.rows() {
        let s = weighted_sum(weights, m);
        if tt.value(m) {
            min_on = min_on.min(s);
        } else {
            max_off = max_off.max(i64::from(s));
        }
    }
    (min_on != u32::MAX && i64::from(min_on) > max_off && min_on > 0).then_some(min_on)
}

/// Variables ordered from strongest to weakest under the dominance
/// relation, or `None` when two variables are incomparable (the function is
/// then not 2-monotonic, hence not threshold).
///
/// Variable `i` dominates `j` when swapping a 1 on `j` for a 1 on `i` never
/// turns the output off.
pub fn dominance_order(tt: &TruthTable) -> Option<Vec<usize>> {
    let n = tt.arity();
    let dominates = |i: usize, j: usize| {
        let (bi, bj) = (1u32 << (n - 1 - i), 1u32 << (n - 1 - j));
        (0..tt.rows())
            .filter(|m| m & bi == 0 && m & bj != 0)
            .all(|m| !tt.value(m) || tt.value((m | bi) & !bj))
    };
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if !dominates(i, j) && !dominates(j, i) {
                return None;
            }
        }
    }
    // total preorder: count how many variables each one dominates
    let score = |v: usize| (0..n).filter(|&u| dominates(v, u)).count();
    order.sort_by_key(|&v| core::cmp::Reverse(score(v)));
    Some(order)
}

/// Finds a positive-form realization of `tt`, or `None` if there is none.
///
/// Runs an integer perceptron first; if the update cap is hit, falls back
/// to an exhaustive search over weights in `0..=WEIGHT_BOUND`. Any result is
/// checked on every minterm before it is returned.
pub fn detect_threshold(tt: &TruthTable) -> Option<ThresholdFunction> {
    if tt.bits() == 0 {
        return Some(ThresholdFunction::new(vec![0; tt.arity()], 1).expect("arity is valid"));
    }
    // positive unate with f(0) = 1 is constant one: no positive threshold
    if !tt.is_positive_unate() || tt.value(0) {
        return None;
    }
    let order = dominance_order(tt)?;
    perceptron(tt).or_else(|| exhaustive(tt, &order))
}

fn perceptron(tt: &TruthTable) -> Option<ThresholdFunction> {
    let n = tt.arity();
    let mut w = vec![0i64; n];
    let mut t: i64 = 1;
    let mut updates = 0u32;
    loop {
        let mut clean = true;
        for m in 0..tt.rows() {
            let s: i64 = (0..n).filter(|&i| TruthTable::var_bit(n, m, i)).map(|i| w[i]).sum();
            let predicted = s >= t;
            let target = tt.value(m);
            if predicted == target {
                continue;
            }
            clean = false;
            updates += 1;
            if updates > PERCEPTRON_CAP {
                return None;
            }
            let dir = if target { 1 } else { -1 };
            for (i, wi) in w.iter_mut().enumerate() {
                if TruthTable::var_bit(n, m, i) {
                    *wi += dir;
                }
            }
            t -= dir;
        }
        if clean {
            break;
        }
    }
    // For a positive unate function a negative weight can be raised to zero
    // without changing any output.
    let weights: Vec<u32> = w.iter().map(|&x| x.max(0) as u32).collect();
    let t = separating_threshold(tt, &weights)?;
    let tf = ThresholdFunction::new(weights, t).ok()?;
    (tf.truth_table() == *tt).then_some(tf)
}

/// Searches weight vectors that are non-increasing along the dominance
/// order. Swapping the weights of a dominating and a dominated variable
/// preserves any realization, so this loses nothing within the bound.
fn exhaustive(tt: &TruthTable, order: &[usize]) -> Option<ThresholdFunction> {
    let n = tt.arity();
    let mut sorted = vec![WEIGHT_BOUND; n];
    loop {
        let mut w = vec![0u32; n];
        for (rank, &v) in order.iter().enumerate() {
            w[v] = sorted[rank];
        }
        if let Some(t) = separating_threshold(tt, &w) {
            return ThresholdFunction::new(w, t).ok();
        }
        if !next_non_increasing(&mut sorted) {
            return None;
        }
    }
}

/// Steps through non-increasing sequences over `0..=WEIGHT_BOUND`, starting
/// from all-`WEIGHT_BOUND` and ending at all-zero.
fn next_non_increasing(seq: &mut [u32]) -> bool {
    let Some(i) = seq.iter().rposition(|&d| d > 0) else {
        return false;
    };
    seq[i] -= 1;
    let v = seq[i];
    seq[i + 1..].fill(v);
    true
}

/// Realization of the same function with the smallest `sum(w) + T`.
///
/// Variables outside the support get weight zero. Ties on cost go to the
/// smaller threshold, then to the first composition visited.
pub fn minimize_weights(tf: &ThresholdFunction) -> ThresholdFunction {
    let tt = tf.truth_table();
    minimal_realization(&tt).unwrap_or_else(|| tf.clone())
}

/// Minimal positive-form realization of `tt` by bounded exhaustive search.
pub fn minimal_realization(tt: &TruthTable) -> Option<ThresholdFunction> {
    let n = tt.arity();
    let support = tt.support();
    if support.is_empty() {
        return (tt.bits() == 0).then(|| ThresholdFunction::new(vec![0; n], 1).unwrap());
    }
    let k = support.len();
    let mut best: Option<(u32, u32, Vec<u32>)> = None;
    // every support variable carries weight >= 1, so cost >= S + 1
    for total in k as u32..=(WEIGHT_BOUND * k as u32) {
        if let Some((cost, _, _)) = &best {
            if total + 1 > *cost {
                break;
            }
        }
        for_each_composition(total, k, WEIGHT_BOUND, &mut |parts| {
            let mut w = vec![0u32; n];
            for (&v, &p) in support.iter().zip(parts) {
                w[v] = p;
            }
            if let Some(t) = separating_threshold(tt, &w) {
                let cost = total + t;
                let better = match &best {
                    None => true,
                    Some((c, bt, _)) => cost < *c || (cost == *c && t < *bt),
                };
                if better {
                    best = Some((cost, t, w));
                }
            }
        });
    }
    best.map(|(_, t, w)| ThresholdFunction::new(w, t).expect("validated"))
}

/// Calls `f` on every composition of `total` into `parts` values in `1..=max`.
fn for_each_composition(total: u32, parts: usize, max: u32, f: &mut impl FnMut(&[u32])) {
    fn rec(rem: u32, slots: usize, max: u32, buf: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if slots == 0 {
            if rem == 0 {
                f(buf);
            }
            return;
        }
        let lo = 1;
        let hi = max.min(rem.saturating_sub(slots as u32 - 1));
        for v in lo..=hi {
            // remaining slots must still fit
            if rem - v > max * (slots as u32 - 1) {
                continue;
            }
            buf.push(v);
            rec(rem - v, slots - 1, max, buf, f);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(parts);
    rec(total, parts, max, &mut buf, f);
}

/// Permutation-invariant summary: onset size and the per-variable onset
/// counts, sorted in decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChowSignature {
    pub onset: u32,
    pub counts: Vec<u32>,
}

pub fn chow_signature(tt: &TruthTable) -> ChowSignature {
    let n = tt.arity();
    let mut counts = vec![0u32; n];
    for m in (0..tt.rows()).filter(|&m| tt.value(m)) {
        for (i, c) in counts.iter_mut().enumerate() {
            if TruthTable::var_bit(n, m, i) {
                *c += 1;
            }
        }
    }
    counts.sort_unstable_by(|a, b| b.cmp(a));
    ChowSignature {
        onset: tt.onset_size(),
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(w: &[u32], t: u32) -> ThresholdFunction {
        ThresholdFunction::new(w.to_vec(), t).unwrap()
    }

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn evaluate_examples() {
        assert!(tf(&[1, 1, 1], 2).evaluate(&bits("110")).unwrap());
        assert!(tf(&[4, 1, 1, 1, 1], 5).evaluate(&bits("10001")).unwrap());
        assert!(tf(&[3, 3, 2, 1, 1], 8).evaluate(&bits("11100")).unwrap());
        assert!(!tf(&[3, 3, 2, 1, 1], 8).evaluate(&bits("11010")).unwrap());
    }

    #[test]
    fn evaluate_arity_mismatch() {
        let err = tf(&[1, 1], 2).evaluate(&bits("101")).unwrap_err();
        assert_eq!(err, Error::ArityMismatch { expected: 2, got: 3 });
    }

    #[test]
    fn zero_threshold_rejected() {
        assert_eq!(ThresholdFunction::new(vec![1], 0), Err(Error::ZeroThreshold));
    }

    #[test]
    fn detect_basic() {
        let xor = TruthTable::new(2, 0b0110).unwrap();
        assert!(detect_threshold(&xor).is_none());
        let and = TruthTable::new(2, 0b1000).unwrap();
        let found = detect_threshold(&and).unwrap();
        assert_eq!(found.truth_table(), and);
        assert_eq!(minimize_weights(&found), tf(&[1, 1], 2));
        // negative unate: NOT x1 has no positive form
        assert!(detect_threshold(&TruthTable::new(1, 0b01).unwrap()).is_none());
        assert!(detect_threshold(&TruthTable::new(2, 0b1111).unwrap()).is_none());
    }

    #[test]
    fn detect_f93_from_sum_of_products() {
        // ab + ace + ade + bcd + acd
        let tt = TruthTable::from_fn(5, |m| {
            let v = |i| TruthTable::var_bit(5, m, i);
            let (a, b, c, d, e) = (v(0), v(1), v(2), v(3), v(4));
            (a && b) || (a && c && e) || (a && d && e) || (b && c && d) || (a && c && d)
        })
        .unwrap();
        let found = detect_threshold(&tt).unwrap();
        assert_eq!(found.truth_table(), tt);
        assert_eq!(minimize_weights(&found), tf(&[4, 3, 2, 2, 1], 7));
    }

    #[test]
    fn minimize_examples() {
        assert_eq!(minimize_weights(&tf(&[3, 3, 3], 5)), tf(&[1, 1, 1], 2));
        assert_eq!(minimize_weights(&tf(&[2, 2], 4)), tf(&[1, 1], 2));
        // degenerate variable gets weight zero
        assert_eq!(minimize_weights(&tf(&[1, 5], 5)), tf(&[0, 1], 1));
    }

    #[test]
    fn chow_examples() {
        let maj = tf(&[1, 1, 1], 2).truth_table();
        assert_eq!(
            chow_signature(&maj),
            ChowSignature {
                onset: 4,
                counts: vec![3, 3, 3]
            }
        );
        let and = tf(&[1, 1], 2).truth_table();
        assert_eq!(
            chow_signature(&and),
            ChowSignature {
                onset: 1,
                counts: vec![1, 1]
            }
        );
        let buf = tf(&[1], 1).truth_table();
        assert_eq!(
            chow_signature(&buf),
            ChowSignature {
                onset: 1,
                counts: vec![1]
            }
        );
    }

    #[test]
    fn display_form() {
        assert_eq!(alloc::format!("{}", tf(&[4, 3, 2, 2, 1], 7)), "[4,3,2,2,1;7]");
    }
}
