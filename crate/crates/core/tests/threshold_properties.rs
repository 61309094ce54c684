// SPDX-License-Identifier: Apache-2.0
use std::sync::OnceLock;

use ftl_core::npn::{canonicalize, perm_canonical};
use ftl_core::{detect_threshold, enumerate_library, Library, NpnTransform, ThresholdFunction, TruthTable};
use proptest::prelude::*;

fn library() -> &'static Library {
    static LIB: OnceLock<Library> = OnceLock::new();
    LIB.get_or_init(|| enumerate_library(5).unwrap())
}

fn threshold_function() -> impl Strategy<Value = ThresholdFunction> {
    (1usize..=5)
        .prop_flat_map(|n| proptest::collection::vec(0u32..=8, n))
        .prop_flat_map(|w| {
            let total: u32 = w.iter().sum();
            (Just(w), 1..=total + 1)
        })
        .prop_map(|(w, t)| ThresholdFunction::new(w, t).unwrap())
}

fn transform(n: usize) -> impl Strategy<Value = NpnTransform> {
    (
        Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        0u32..1 << n,
        any::<bool>(),
    )
        .prop_map(|(perm, neg, out)| NpnTransform::new(perm, neg, out).unwrap())
}

/// `!p(!x)` brought to its permutation-canonical form.
fn dual(p: &TruthTable) -> TruthTable {
    perm_canonical(&p.complement().negate_inputs((1 << p.arity()) - 1)).0
}

fn table() -> impl Strategy<Value = TruthTable> {
    (1usize..=5).prop_flat_map(|n| {
        any::<u32>().prop_map(move |b| TruthTable::new(n, b & ((1u64 << (1 << n)) - 1) as u32).unwrap())
    })
}

proptest! {
    #[test]
    fn detection_recovers_weighted_functions(f in threshold_function()) {
        let tt = f.truth_table();
        let found = detect_threshold(&tt);
        // only the constant-one table lacks a positive-threshold form
        let ones = ((1u64 << tt.rows()) - 1) as u32;
        prop_assert_eq!(found.is_some(), tt.bits() != ones);
        if let Some(g) = found {
            prop_assert_eq!(g.truth_table(), tt);
        }
    }

    #[test]
    fn detected_tables_are_positive_unate(t in table()) {
        if let Some(f) = detect_threshold(&t) {
            prop_assert!(t.is_positive_unate());
            prop_assert_eq!(f.truth_table(), t);
        }
    }

    #[test]
    fn canonical_form_is_permutation_invariant((t, x) in table().prop_flat_map(|t| (Just(t), transform(t.arity())))) {
        let perm: Vec<usize> = x.perm().collect();
        let moved = NpnTransform::new(perm, 0, false).unwrap().apply(&t);
        prop_assert_eq!(canonicalize(&t).table, canonicalize(&moved).table);
    }

    #[test]
    fn canonical_form_is_npn_invariant((t, x) in table().prop_flat_map(|t| (Just(t), transform(t.arity())))) {
        let moved = x.apply(&t);
        let (a, b) = (canonicalize(&t), canonicalize(&moved));
        // unate functions settle on whichever of the two dual positive
        // forms needs fewer inverters
        if t.is_constant() {
            prop_assert!(b.table.is_constant());
        } else if a.positive {
            prop_assert!(b.table == a.table || b.table == dual(&a.table));
        } else {
            prop_assert_eq!(a.table, b.table);
        }
        prop_assert_eq!(a.positive, b.positive);
        prop_assert_eq!(b.transform.apply(&b.widened()), moved);
    }

    #[test]
    fn npn_variants_match_their_class(
        (f, x) in threshold_function()
            .prop_filter("non-constant", |f| !f.truth_table().is_constant())
            .prop_flat_map(|f| { let n = f.arity(); (Just(f), transform(n)) })
    ) {
        let lib = library();
        let tt = f.truth_table();
        let base = lib.match_function(&tt).expect("threshold functions are library classes");
        let moved = x.apply(&tt);
        let m = lib.match_function(&moved).expect("NPN variants stay in the library");
        let base_table = lib.get(base.class_index).unwrap().table;
        let dual_class = lib.index_of_table(&dual(&base_table)).expect("duals of threshold classes are classes");
        prop_assert!(m.class_index == base.class_index || m.class_index == dual_class);
        let class = &lib.get(m.class_index).unwrap().table;
        let widened = class.embed(moved.arity(), &(0..class.arity()).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(m.transform.apply(&widened), moved);
    }
}
