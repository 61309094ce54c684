// SPDX-License-Identifier: Apache-2.0
//! The library of positive-form threshold functions of up to five variables.
//!
//! Entries are the threshold functions among the monotone functions with
//! full support at each arity, deduplicated under input permutation. Index
//! order is (arity, canonical table), which puts the buffer at index 0 and
//! the two-input AND at index 1.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::npn::{canonicalize, perm_canonical, NpnTransform};
use crate::threshold::{chow_signature, detect_threshold, minimal_realization, ChowSignature, ThresholdFunction};
use crate::truth_table::{TruthTable, MAX_ARITY};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalClass {
    pub canonical_tt: TruthTable,
    pub class_index: Option<usize>,
    pub chow: ChowSignature,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LibraryEntry {
    pub index: usize,
    /// Canonical table; variable order matches `function`.
    pub table: TruthTable,
    /// Minimal realization over the canonical variable order.
    pub function: ThresholdFunction,
    pub chow: ChowSignature,
}

#[derive(Debug, Clone, Default)]
pub struct Library {
    entries: Vec<LibraryEntry>,
    by_table: BTreeMap<TruthTable, usize>,
}

/// A function recognized as a library class up to NPN.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMatch {
    pub class_index: usize,
    /// Binding of the class (widened to the matched arity) onto the function.
    pub transform: NpnTransform,
}

/// All monotone functions of exactly `k` variables (`k >= 1`), as raw bits.
///
/// Built from the decomposition `f = f0 | x1 * f1` with `f0 <= f1`.
pub fn monotone_functions(k: usize) -> Vec<u32> {
    let mut level: Vec<u32> = alloc::vec![0, 1];
    for a in 1..=k {
        let half = 1u32 << (a - 1);
        let mut next = Vec::new();
        for &f0 in &level {
            for &f1 in &level {
                if f0 & !f1 == 0 {
                    next.push(f0 | (f1 << half));
                }
            }
        }
        level = next;
    }
    level
}

pub fn enumerate_library(max_arity: usize) -> Result<Library> {
    if max_arity == 0 || max_arity > MAX_ARITY {
        return Err(Error::Arity(max_arity));
    }
    let mut classes: Vec<TruthTable> = Vec::new();
    for k in 1..=max_arity {
        let mut seen = alloc::collections::BTreeSet::new();
        for bits in monotone_functions(k) {
            let tt = TruthTable::new(k, bits)?;
            if tt.is_constant() || tt.support().len() != k {
                continue;
            }
            if detect_threshold(&tt).is_none() {
                continue;
            }
            seen.insert(perm_canonical(&tt).0);
        }
        classes.extend(seen);
    }
    classes.sort_by_key(|t| (t.arity(), t.lex_key()));
    let entries = classes
        .into_iter()
        .enumerate()
        .map(|(index, table)| LibraryEntry {
            index,
            table,
            function: minimal_realization(&table).expect("library members are threshold"),
            chow: chow_signature(&table),
        })
        .collect();
    Ok(Library::from_entries(entries))
}

impl Library {
    pub fn from_entries(entries: Vec<LibraryEntry>) -> Self {
        let by_table = entries.iter().map(|e| (e.table, e.index)).collect();
        Self { entries, by_table }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&LibraryEntry> {
        self.entries.get(index)
    }

    pub fn index_of_table(&self, canonical: &TruthTable) -> Option<usize> {
        self.by_table.get(canonical).copied()
    }

    /// Entry of the class realized by `weights` and `threshold`.
    pub fn find_function(&self, weights: &[u32], threshold: u32) -> Option<&LibraryEntry> {
        let tt = ThresholdFunction::new(weights.to_vec(), threshold).ok()?.truth_table();
        let reduced = tt.project(&tt.support()).ok()?;
        self.index_of_table(&perm_canonical(&reduced).0)
            .and_then(|i| self.get(i))
    }

    /// NPN-canonicalizes `tt` and resolves its library class, if any.
    pub fn canonicalize(&self, tt: &TruthTable) -> (CanonicalClass, NpnTransform) {
        let c = canonicalize(tt);
        let class_index = if c.positive {
            self.index_of_table(&c.table)
        } else {
            None
        };
        let chow = chow_signature(&c.table);
        (
            CanonicalClass {
                canonical_tt: c.table,
                class_index,
                chow,
            },
            c.transform,
        )
    }

    /// Matches `tt` against the library, returning the class and the
    /// binding with the fewest inverters.
    pub fn match_function(&self, tt: &TruthTable) -> Option<ClassMatch> {
        let c = canonicalize(tt);
        if !c.positive {
            return None;
        }
        let class_index = self.index_of_table(&c.table)?;
        Some(ClassMatch {
            class_index,
            transform: c.transform,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn monotone_counts_are_dedekind_numbers() {
        let counts: Vec<usize> = (1..=4).map(|k| monotone_functions(k).len()).collect();
        assert_eq!(counts, [3, 6, 20, 168]);
    }

    #[test]
    fn small_libraries() {
        let lib = enumerate_library(1).unwrap();
        assert_eq!(lib.len(), 1);
        assert_eq!(lib.get(0).unwrap().function.to_string(), "[1;1]");
        let lib = enumerate_library(2).unwrap();
        let names: Vec<_> = lib.entries().iter().map(|e| e.function.to_string()).collect();
        assert_eq!(names, ["[1;1]", "[1,1;2]", "[1,1;1]"]);
    }

    #[test]
    fn rejects_out_of_range_arity() {
        assert!(enumerate_library(0).is_err());
        assert!(enumerate_library(6).is_err());
    }
}
