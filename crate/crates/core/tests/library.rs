// SPDX-License-Identifier: Apache-2.0
use std::collections::BTreeSet;

use ftl_core::npn::perm_canonical;
use ftl_core::{enumerate_library, ThresholdFunction, TruthTable};

/// Independent enumeration: every sorted weight vector in 1..=8 with every
/// threshold, kept when the table depends on all variables.
fn weight_oracle(max_arity: usize) -> BTreeSet<(usize, u32)> {
    let mut out = BTreeSet::new();
    for n in 1..=max_arity {
        let mut w = vec![1u32; n];
        loop {
            if w.windows(2).all(|p| p[0] >= p[1]) {
                let total: u32 = w.iter().sum();
                for t in 1..=total {
                    let tt = ThresholdFunction::new(w.clone(), t).unwrap().truth_table();
                    if tt.support().len() == n {
                        out.insert((n, perm_canonical(&tt).0.bits()));
                    }
                }
            }
            // odometer over 1..=8
            let mut i = n;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if w[i] < 8 {
                    w[i] += 1;
                    break;
                }
                w[i] = 1;
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
    }
    out
}

#[test]
fn library_matches_weight_oracle() {
    for max in 1..=5 {
        let lib = enumerate_library(max).unwrap();
        let got: BTreeSet<(usize, u32)> = lib
            .entries()
            .iter()
            .map(|e| (e.table.arity(), e.table.bits()))
            .collect();
        let expected = weight_oracle(max);
        assert_eq!(got, expected, "max arity {max}");
    }
}

#[test]
fn library_has_117_classes_and_the_named_functions() {
    let lib = enumerate_library(5).unwrap();
    assert_eq!(lib.len(), 117);
    assert_eq!(lib.get(0).unwrap().function.to_string(), "[1;1]");
    assert_eq!(lib.get(1).unwrap().function.to_string(), "[1,1;2]");
    for (w, t) in [
        (vec![4, 1, 1, 1, 1], 5),
        (vec![3, 3, 2, 1, 1], 8),
        (vec![4, 3, 2, 2, 1], 7),
        (vec![4, 3, 2, 2, 1], 6),
    ] {
        let e = lib.find_function(&w, t).expect("class present");
        let mut got = e.function.weights().to_vec();
        got.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!((got, e.function.threshold()), (w, t));
    }
}

#[test]
fn every_entry_round_trips_through_its_weights() {
    let lib = enumerate_library(5).unwrap();
    for e in lib.entries() {
        assert_eq!(e.function.truth_table(), e.table, "class {}", e.index);
        let tt: TruthTable = e.table;
        assert_eq!(tt.support().len(), tt.arity());
    }
}
