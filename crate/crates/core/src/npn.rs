// SPDX-License-Identifier: Apache-2.0
//! Input negation, input permutation and output negation of truth tables.

use alloc::vec::Vec;

use crate::truth_table::{permutations, TruthTable};

/// Maps a base function `c` (the cell) onto a target function `g`:
///
/// `g(x) = output_neg XOR c(y)` with `y_j = x[perm[j]] XOR neg_j`.
///
/// Read as a binding: pin `j` of the cell is driven by variable `perm[j]`,
/// through an inverter when bit `j` of `input_neg` is set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NpnTransform {
    perm: Vec<u8>,
    input_neg: u32,
    output_neg: bool,
}

impl NpnTransform {
    pub fn new(perm: Vec<usize>, input_neg: u32, output_neg: bool) -> Option<Self> {
        let n = perm.len();
        let mut seen = 0u32;
        for &p in &perm {
            if p >= n || seen >> p & 1 == 1 {
                return None;
            }
            seen |= 1 << p;
        }
        if input_neg >> n != 0 {
            return None;
        }
        Some(Self {
            perm: perm.into_iter().map(|p| p as u8).collect(),
            input_neg,
            output_neg,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n as u8).collect(),
            input_neg: 0,
            output_neg: false,
        }
    }

    pub fn arity(&self) -> usize {
        self.perm.len()
    }

    /// Variable driving pin `j`.
    pub fn source(&self, pin: usize) -> usize {
        self.perm[pin] as usize
    }

    pub fn perm(&self) -> impl Iterator<Item = usize> + '_ {
        self.perm.iter().map(|&p| p as usize)
    }

    pub fn pin_negated(&self, pin: usize) -> bool {
        self.input_neg >> pin & 1 == 1
    }

    pub fn input_polarity(&self) -> u32 {
        self.input_neg
    }

    pub fn output_negated(&self) -> bool {
        self.output_neg
    }

    /// Target variables that pass through an inverter, as a bit mask over
    /// the target's variables (`x_1` is bit 0).
    pub fn negated_inputs(&self) -> u32 {
        (0..self.arity())
            .filter(|&j| self.pin_negated(j))
            .fold(0, |acc, j| acc | 1 << self.perm[j])
    }

    /// Number of inverters the binding needs.
    pub fn inverter_count(&self) -> u32 {
        self.input_neg.count_ones() + u32::from(self.output_neg)
    }

    pub fn apply(&self, base: &TruthTable) -> TruthTable {
        assert_eq!(base.arity(), self.arity());
        let perm: Vec<usize> = self.perm().collect();
        let g = base.negate_inputs(self.input_neg).permute(&perm);
        if self.output_neg {
            g.complement()
        } else {
            g
        }
    }

    pub fn inverse(&self) -> Self {
        let n = self.arity();
        let mut inv = alloc::vec![0u8; n];
        let mut neg = 0u32;
        for j in 0..n {
            let i = self.perm[j] as usize;
            inv[i] = j as u8;
            if self.pin_negated(j) {
                neg |= 1 << i;
            }
        }
        Self {
            perm: inv,
            input_neg: neg,
            output_neg: self.output_neg,
        }
    }
}

/// Result of canonicalizing a truth table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonical {
    /// Canonical table over the support of the input.
    pub table: TruthTable,
    /// Binding of the canonical table (widened with ignored pins) to the
    /// input table, over the input's full arity.
    pub transform: NpnTransform,
    /// The canonical table is a positive (monotone) form reached by fixing
    /// input and output polarities; otherwise it is the minimum over the
    /// whole NPN orbit.
    pub positive: bool,
}

impl Canonical {
    /// Canonical table widened to the transform's arity, extra pins unused.
    pub fn widened(&self) -> TruthTable {
        let n = self.transform.arity();
        let k = self.table.arity();
        let pos: Vec<usize> = (0..k).collect();
        self.table.embed(n, &pos).expect("arity within bounds")
    }
}

/// Lexicographically smallest table (read from minterm 0) over all input permutations, with the permutation `pi`
/// such that `canonical = tt.permute(pi)`.
pub fn perm_canonical(tt: &TruthTable) -> (TruthTable, Vec<usize>) {
    permutations(tt.arity())
        .into_iter()
        .map(|p| (tt.permute(&p), p))
        .min_by_key(|(t, _)| t.lex_key())
        .expect("at least one permutation")
}

/// Canonicalizes `tt` under input negation, input permutation and output
/// negation.
///
/// Functions that are unate in every variable are brought to a positive
/// form by fixing polarities; of the two positive forms (with and without
/// output negation) the one needing fewer inverters wins, then the one
/// without output negation. Other functions get the minimum over the full
/// orbit. Variables outside the support are dropped from the canonical table.
pub fn canonicalize(tt: &TruthTable) -> Canonical {
    let n = tt.arity();
    let support = tt.support();
    if support.is_empty() {
        return Canonical {
            table: *tt,
            transform: NpnTransform::identity(n),
            positive: false,
        };
    }
    let k = support.len();
    let reduced = tt.project(&support).expect("support is within arity");
    let mask = (1u32 << k) - 1;

    let polarity: Option<u32> = (0..k).try_fold(0u32, |acc, v| match reduced.unateness(v) {
        Some(true) => Some(acc),
        Some(false) => Some(acc | 1 << v),
        None => None,
    });

    let (table, pi, p, o, positive) = match polarity {
        Some(p) => {
            let mut best: Option<(u32, bool, u32, TruthTable, Vec<usize>, u32)> = None;
            for o in [false, true] {
                let pol = if o { !p & mask } else { p };
                let mut h = reduced.negate_inputs(pol);
                if o {
                    h = h.complement();
                }
                let (c, pi) = perm_canonical(&h);
                let key = (pol.count_ones() + u32::from(o), o, c.lex_key());
                if best.as_ref().is_none_or(|b| key < (b.0, b.1, b.2)) {
                    best = Some((key.0, o, key.2, c, pi, pol));
                }
            }
            let (_, o, _, c, pi, pol) = best.unwrap();
            (c, pi, pol, o, true)
        }
        None => {
            let perms = permutations(k);
            let mut best: Option<(u32, u32, TruthTable, Vec<usize>, u32, bool)> = None;
            for o in [false, true] {
                for pol in 0..=mask {
                    let mut h = reduced.negate_inputs(pol);
                    if o {
                        h = h.complement();
                    }
                    for pi in &perms {
                        let c = h.permute(pi);
                        let inv = pol.count_ones() + u32::from(o);
                        if best.as_ref().is_none_or(|b| (c.lex_key(), inv) < (b.0, b.1)) {
                            best = Some((c.lex_key(), inv, c, pi.clone(), pol, o));
                        }
                    }
                }
            }
            let (_, _, c, pi, pol, o) = best.unwrap();
            (c, pi, pol, o, false)
        }
    };

    // canonical c(z) = h(u), u_j = z[pi[j]]; h(u) = o ^ r(u ^ p); r(v) = tt(x),
    // x[support[j]] = v_j. Hence pin i reads x[support[pi^-1[i]]] ^ p[pi^-1[i]].
    let mut pi_inv = alloc::vec![0usize; k];
    for (j, &z) in pi.iter().enumerate() {
        pi_inv[z] = j;
    }
    let mut perm = Vec::with_capacity(n);
    let mut neg = 0u32;
    for (i, &j) in pi_inv.iter().enumerate() {
        perm.push(support[j]);
        if p >> j & 1 == 1 {
            neg |= 1 << i;
        }
    }
    perm.extend((0..n).filter(|v| !support.contains(v)));
    let transform = NpnTransform::new(perm, neg, o).expect("bijection by construction");
    Canonical {
        table,
        transform,
        positive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold::ThresholdFunction;

    fn f93() -> TruthTable {
        ThresholdFunction::new([4, 3, 2, 2, 1].to_vec(), 7)
            .unwrap()
            .truth_table()
    }

    #[test]
    fn transform_validation() {
        assert!(NpnTransform::new([0, 0].to_vec(), 0, false).is_none());
        assert!(NpnTransform::new([1, 0].to_vec(), 0b100, false).is_none());
        assert!(NpnTransform::new([1, 0].to_vec(), 0b10, true).is_some());
    }

    #[test]
    fn apply_then_inverse_is_identity() {
        let t = NpnTransform::new([2, 0, 4, 1, 3].to_vec(), 0b10110, true).unwrap();
        let tt = f93();
        assert_eq!(t.inverse().apply(&t.apply(&tt)), tt);
        assert_eq!(t.apply(&t.inverse().apply(&tt)), tt);
    }

    #[test]
    fn canonical_binding_reproduces_input() {
        for bits in [0x6996_6996u32, 0xfee8_e880, 0x0000_8000, 0x1234_5678] {
            let tt = TruthTable::new(5, bits).unwrap();
            let c = canonicalize(&tt);
            assert_eq!(c.transform.apply(&c.widened()), tt, "{bits:#x}");
        }
    }

    #[test]
    fn negated_inputs_are_reported_on_target_variables() {
        // f93 with a and c negated
        let g = f93().negate_inputs(0b00101);
        let c = canonicalize(&g);
        let plain = canonicalize(&f93());
        assert_eq!(c.table, plain.table);
        assert_eq!(c.transform.negated_inputs(), 0b00101);
        assert!(!c.transform.output_negated());
    }

    #[test]
    fn degenerate_variables_are_dropped() {
        // AND of x1 and x3 inside three variables
        let tt = TruthTable::new(3, 0b1010_0000).unwrap();
        let c = canonicalize(&tt);
        assert_eq!(c.table.arity(), 2);
        assert_eq!(c.table.bits(), 0b1000);
        assert_eq!(c.transform.apply(&c.widened()), tt);
    }

    #[test]
    fn xor_is_not_positive() {
        let c = canonicalize(&TruthTable::new(2, 0b0110).unwrap());
        assert!(!c.positive);
    }
}
