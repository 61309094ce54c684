// SPDX-License-Identifier: Apache-2.0
//! Truth tables over at most five variables.
//!
//! Minterm `m` is stored at bit `m`. Variable `x_1` is the most significant
//! bit of the minterm index, so for arity 3 the minterm `110` (x1=1, x2=1,
//! x3=0) is index 6.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

pub const MAX_ARITY: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TruthTable {
    arity: u8,
    bits: u32,
}

#[inline]
pub(crate) fn full_mask(arity: usize) -> u32 {
    if arity >= 5 {
        u32::MAX
    } else {
        (1u32 << (1u32 << arity)) - 1
    }
}

impl TruthTable {
    pub fn new(arity: usize, bits: u32) -> Result<Self> {
        if arity == 0 || arity > MAX_ARITY {
            return Err(Error::Arity(arity));
        }
        if bits & !full_mask(arity) != 0 {
            return Err(Error::TruthTableWidth { arity, bits });
        }
        Ok(Self {
            arity: arity as u8,
            bits,
        })
    }

    /// Builds a table by evaluating `f` on every minterm index.
    pub fn from_fn(arity: usize, mut f: impl FnMut(u32) -> bool) -> Result<Self> {
        if arity == 0 || arity > MAX_ARITY {
            return Err(Error::Arity(arity));
        }
        let mut bits = 0u32;
        for m in 0..(1u32 << arity) {
            if f(m) {
                bits |= 1 << m;
            }
        }
        Ok(Self {
            arity: arity as u8,
            bits,
        })
    }

    /// Parses the lowercase hex form produced by [`TruthTable::to_hex`].
    pub fn from_hex(arity: usize, hex: &str) -> Result<Self> {
        let bits = u32::from_str_radix(hex.trim(), 16).map_err(|_| Error::Parse {
            line: 0,
            msg: alloc::format!("bad hex truth table `{hex}`"),
        })?;
        Self::new(arity, bits)
    }

    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn rows(&self) -> u32 {
        1 << self.arity
    }

    pub fn value(&self, minterm: u32) -> bool {
        debug_assert!(minterm < self.rows());
        (self.bits >> minterm) & 1 == 1
    }

    /// Value of variable `var` (0-based, `x_1` is 0) in `minterm`.
    #[inline]
    pub fn var_bit(arity: usize, minterm: u32, var: usize) -> bool {
        (minterm >> (arity - 1 - var)) & 1 == 1
    }

    /// Minterm index of an explicit assignment, `x_1` first.
    pub fn index_of(assignment: &[bool]) -> u32 {
        assignment.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b))
    }

    pub fn onset_size(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn complement(&self) -> Self {
        Self {
            arity: self.arity,
            bits: !self.bits & full_mask(self.arity()),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.bits == 0 || self.bits == full_mask(self.arity())
    }

    /// Whether the function changes with variable `var` somewhere.
    pub fn depends_on(&self, var: usize) -> bool {
        let n = self.arity();
        let stride = 1u32 << (n - 1 - var);
        (0..self.rows())
            .filter(|m| m & stride == 0)
            .any(|m| self.value(m) != self.value(m | stride))
    }

    /// Variables the function actually depends on, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.arity()).filter(|&v| self.depends_on(v)).collect()
    }

    /// `Some(true)` when positive unate in `var`, `Some(false)` when negative
    /// unate, `None` when binate. A variable outside the support counts as
    /// positive unate.
    pub fn unateness(&self, var: usize) -> Option<bool> {
        let n = self.arity();
        let stride = 1u32 << (n - 1 - var);
        let mut rises = false;
        let mut falls = false;
        for m in (0..self.rows()).filter(|m| m & stride == 0) {
            match (self.value(m), self.value(m | stride)) {
                (false, true) => rises = true,
                (true, false) => falls = true,
                _ => {}
            }
        }
        match (rises, falls) {
            (true, true) => None,
            (false, true) => Some(false),
            _ => Some(true),
        }
    }

    pub fn is_positive_unate(&self) -> bool {
        (0..self.arity()).all(|v| self.unateness(v) == Some(true))
    }

    /// Cofactor-free projection onto a subset of variables. Every variable
    /// not in `keep` must be outside the support.
    pub fn project(&self, keep: &[usize]) -> Result<Self> {
        let n = self.arity();
        let k = keep.len();
        Self::from_fn(k, |m| {
            let mut full = 0u32;
            for (j, &v) in keep.iter().enumerate() {
                if Self::var_bit(k, m, j) {
                    full |= 1 << (n - 1 - v);
                }
            }
            self.value(full)
        })
    }

    /// Re-embeds a table into a wider variable space. Variable `j` of `self`
    /// becomes variable `positions[j]` of the result.
    pub fn embed(&self, arity: usize, positions: &[usize]) -> Result<Self> {
        let k = self.arity();
        Self::from_fn(arity, |m| {
            let mut small = 0u32;
            for (j, &p) in positions.iter().enumerate() {
                if Self::var_bit(arity, m, p) {
                    small |= 1 << (k - 1 - j);
                }
            }
            self.value(small)
        })
    }

    /// Table of `g(x) = self(y)` with `y_j = x_{perm[j]}`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let n = self.arity();
        let mut bits = 0u32;
        for m in 0..self.rows() {
            let mut src = 0u32;
            for (j, &p) in perm.iter().enumerate() {
                if Self::var_bit(n, m, p) {
                    src |= 1 << (n - 1 - j);
                }
            }
            if self.value(src) {
                bits |= 1 << m;
            }
        }
        Self {
            arity: self.arity,
            bits,
        }
    }

    /// Table of `g(x) = self(x XOR mask)`, where bit `j` of `mask` flips
    /// variable `j` (`x_1` is bit 0).
    pub fn negate_inputs(&self, mask: u32) -> Self {
        let n = self.arity();
        let mut flip = 0u32;
        for j in 0..n {
            if mask >> j & 1 == 1 {
                flip |= 1 << (n - 1 - j);
            }
        }
        let mut bits = 0u32;
        for m in 0..self.rows() {
            if self.value(m ^ flip) {
                bits |= 1 << m;
            }
        }
        Self {
            arity: self.arity,
            bits,
        }
    }

    /// Ordering key reading the table from minterm 0 upwards, so a table
    /// with its onset on higher minterms sorts first.
    pub fn lex_key(&self) -> u32 {
        self.bits.reverse_bits() >> (32 - self.rows())
    }

    /// Lowercase hex, minterm 0 in the least significant bit.
    pub fn to_hex(&self) -> String {
        let digits = core::cmp::max(1, (1usize << self.arity()) / 4);
        alloc::format!("{:0width$x}", self.bits, width = digits)
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.arity, self.to_hex())
    }
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_is_first_variable() {
        // x1 AND NOT x2 over two variables: only minterm 10 = index 2
        let tt = TruthTable::from_fn(2, |m| TruthTable::var_bit(2, m, 0) && !TruthTable::var_bit(2, m, 1)).unwrap();
        assert_eq!(tt.bits(), 0b0100);
        assert_eq!(TruthTable::index_of(&[true, false]), 2);
    }

    #[test]
    fn rejects_bad_arity_and_width() {
        assert!(TruthTable::new(0, 0).is_err());
        assert!(TruthTable::new(6, 0).is_err());
        assert!(TruthTable::new(2, 0x10).is_err());
        assert!(TruthTable::new(5, u32::MAX).is_ok());
    }

    #[test]
    fn hex_widths() {
        assert_eq!(TruthTable::new(1, 0b10).unwrap().to_hex(), "2");
        assert_eq!(TruthTable::new(2, 0b1000).unwrap().to_hex(), "8");
        assert_eq!(TruthTable::new(3, 0xe8).unwrap().to_hex(), "e8");
        assert_eq!(TruthTable::new(5, 0x80).unwrap().to_hex(), "00000080");
        let tt = TruthTable::from_hex(5, "00000080").unwrap();
        assert_eq!(tt.bits(), 0x80);
    }

    #[test]
    fn support_and_projection() {
        // f(x1,x2,x3) = x1 AND x3
        let tt = TruthTable::from_fn(3, |m| TruthTable::var_bit(3, m, 0) && TruthTable::var_bit(3, m, 2)).unwrap();
        assert_eq!(tt.support(), [0, 2]);
        let p = tt.project(&[0, 2]).unwrap();
        assert_eq!(p.bits(), 0b1000);
        assert_eq!(p.embed(3, &[0, 2]).unwrap(), tt);
    }

    #[test]
    fn unateness_of_xor_and_and() {
        let xor = TruthTable::new(2, 0b0110).unwrap();
        assert_eq!(xor.unateness(0), None);
        let and = TruthTable::new(2, 0b1000).unwrap();
        assert_eq!(and.unateness(1), Some(true));
        let nand = and.complement();
        assert_eq!(nand.unateness(0), Some(false));
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(1).len(), 1);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(5).len(), 120);
    }
}
