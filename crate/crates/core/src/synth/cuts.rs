// SPDX-License-Identifier: Apache-2.0
//! Cuts of flip-flop data inputs and the functions of their cones.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::netlist::{Driver, GateId, NetId, Netlist, Sink};
use crate::error::{Error, Result};
use crate::truth_table::{TruthTable, MAX_ARITY};

/// Per-net limit on stored cuts.
pub const DEFAULT_CUT_CAP: usize = 64;

/// A cut of one flip-flop's data input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    /// Flip-flop index.
    pub root: usize,
    /// Sorted leaf nets.
    pub leaves: Vec<NetId>,
    /// Gates between the leaves and the data input, in topological order.
    pub cone: Vec<GateId>,
    /// Cone gates whose every reader is inside the cone or the root, so
    /// they disappear when the cone and flip-flop are replaced.
    pub absorbed: Vec<GateId>,
}

impl Cut {
    pub fn is_trivial(&self) -> bool {
        self.cone.is_empty()
    }
}

#[derive(Clone)]
struct Partial {
    leaves: Vec<NetId>,
    cone: Vec<GateId>,
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

fn prune(cuts: &mut Vec<Partial>, cap: usize) {
    cuts.sort_by(|a, b| {
        b.cone
            .len()
            .cmp(&a.cone.len())
            .then(a.leaves.len().cmp(&b.leaves.len()))
            .then(a.leaves.cmp(&b.leaves))
    });
    cuts.dedup_by(|a, b| a.leaves == b.leaves);
    cuts.truncate(cap);
}

struct Enumerator<'a> {
    nl: &'a Netlist,
    drivers: Vec<Option<Driver>>,
    k: usize,
    cap: usize,
    memo: BTreeMap<NetId, Vec<Partial>>,
}

impl Enumerator<'_> {
    /// Non-trivial cuts of `net` plus the trivial one, best first.
    fn cuts(&mut self, net: NetId) -> Vec<Partial> {
        if let Some(c) = self.memo.get(&net) {
            return c.clone();
        }
        let trivial = Partial {
            leaves: vec![net],
            cone: Vec::new(),
        };
        let mut out = Vec::new();
        if let Some(Driver::Gate(g)) = self.drivers[net] {
            let mut acc = vec![Partial {
                leaves: Vec::new(),
                cone: vec![g],
            }];
            let mut inputs = self.nl.gates()[g].inputs.clone();
            inputs.sort_unstable();
            inputs.dedup();
            for i in inputs {
                let sub = self.cuts(i);
                let mut next = Vec::new();
                for a in &acc {
                    for b in &sub {
                        let leaves = union(&a.leaves, &b.leaves);
                        if leaves.len() <= self.k {
                            next.push(Partial {
                                leaves,
                                cone: union(&a.cone, &b.cone),
                            });
                        }
                    }
                }
                prune(&mut next, self.cap);
                acc = next;
            }
            out = acc;
            out.truncate(self.cap.saturating_sub(1));
        }
        out.push(trivial);
        self.memo.insert(net, out.clone());
        out
    }
}

fn absorbed(nl: &Netlist, fanouts: &[Vec<Sink>], root: usize, cone: &[GateId]) -> Vec<GateId> {
    let mut gone: Vec<GateId> = Vec::new();
    // gates are topologically ordered, so readers are decided first
    for &g in cone.iter().rev() {
        let out = nl.gates()[g].output;
        let ok = fanouts[out].iter().all(|s| match *s {
            Sink::Gate(h) => gone.contains(&h),
            Sink::Dff(d) => d == root,
            Sink::Ftl(_) | Sink::Output => false,
        });
        if ok {
            gone.push(g);
        }
    }
    gone.sort_unstable();
    gone
}

/// Cuts of flip-flop `dff`'s data input with at most `k` leaves.
pub fn enumerate_cuts(nl: &Netlist, dff: usize, k: usize) -> Result<Vec<Cut>> {
    enumerate_cuts_capped(nl, dff, k, DEFAULT_CUT_CAP)
}

/// [`enumerate_cuts`] with an explicit per-net cut limit. Cuts come out
/// ranked by cone size; the trivial cut `{D}` is always last.
pub fn enumerate_cuts_capped(nl: &Netlist, dff: usize, k: usize, cap: usize) -> Result<Vec<Cut>> {
    if k == 0 || k > MAX_ARITY {
        return Err(Error::Params("cut size must be within 1..=5"));
    }
    if cap == 0 {
        return Err(Error::Params("cut cap must be positive"));
    }
    let root = nl
        .dffs()
        .get(dff)
        .ok_or_else(|| Error::Netlist(format!("no flip-flop {dff}")))?;
    let mut e = Enumerator {
        nl,
        drivers: nl.drivers()?,
        k,
        cap,
        memo: BTreeMap::new(),
    };
    let fanouts = nl.fanouts();
    let mut out: Vec<Cut> = Vec::new();
    for p in e.cuts(root.d) {
        let (leaves, cone) = reach(nl, &e.drivers, root.d, &p.leaves);
        if leaves.is_empty() || out.iter().any(|c| c.leaves == leaves) {
            continue;
        }
        out.push(Cut {
            root: dff,
            absorbed: absorbed(nl, &fanouts, dff, &cone),
            leaves,
            cone,
        });
    }
    Ok(out)
}

/// Leaves actually reached from `root` and the gates passed on the way.
///
/// Merging cuts of reconvergent fanins can produce a leaf set that also
/// contains the driver of one of its leaves; walking back from the root
/// drops such gates and any leaf only they read.
fn reach(nl: &Netlist, drivers: &[Option<Driver>], root: NetId, leaves: &[NetId]) -> (Vec<NetId>, Vec<GateId>) {
    let mut hit = Vec::new();
    let mut cone = Vec::new();
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if leaves.contains(&n) {
            if !hit.contains(&n) {
                hit.push(n);
            }
            continue;
        }
        if let Some(Driver::Gate(g)) = drivers[n] {
            if !cone.contains(&g) {
                cone.push(g);
                stack.extend(nl.gates()[g].inputs.iter().copied());
            }
        }
    }
    hit.sort_unstable();
    cone.sort_unstable();
    (hit, cone)
}

/// Checks that `cut` separates its root from every register output and
/// primary input, and that its cone is exactly the gates in between.
pub fn is_valid_cut(nl: &Netlist, cut: &Cut) -> bool {
    let Ok(drivers) = nl.drivers() else { return false };
    let Some(root) = nl.dffs().get(cut.root) else {
        return false;
    };
    let mut seen = Vec::new();
    let mut stack = vec![root.d];
    while let Some(n) = stack.pop() {
        if cut.leaves.contains(&n) {
            continue;
        }
        match drivers[n] {
            Some(Driver::Gate(g)) => {
                if !seen.contains(&g) {
                    seen.push(g);
                    stack.extend(nl.gates()[g].inputs.iter().copied());
                }
            }
            _ => return false,
        }
    }
    seen.sort_unstable();
    seen == cut.cone
}

/// Function of the cut's cone over its leaves (first leaf is `x_1`).
pub fn cone_function(nl: &Netlist, cut: &Cut) -> Result<TruthTable> {
    let n = cut.leaves.len();
    let root = nl
        .dffs()
        .get(cut.root)
        .ok_or_else(|| Error::Netlist(format!("no flip-flop {}", cut.root)))?;
    let mut values = vec![false; nl.net_count()];
    TruthTable::from_fn(n, |m| {
        for (i, &leaf) in cut.leaves.iter().enumerate() {
            values[leaf] = TruthTable::var_bit(n, m, i);
        }
        for &g in &cut.cone {
            let gate = &nl.gates()[g];
            values[gate.output] = gate.eval(&values);
        }
        values[root.d]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::netlist::parse_blif;

    fn names(nl: &Netlist, ids: &[NetId]) -> Vec<alloc::string::String> {
        ids.iter().map(|&i| nl.net_name(i).into()).collect()
    }

    #[test]
    fn single_and_gate() {
        let nl =
            parse_blif(".model m\n.inputs a b\n.outputs q\n.names a b d\n11 1\n.latch d q re clk 0\n.end\n").unwrap();
        let cuts = enumerate_cuts(&nl, 0, 5).unwrap();
        let leaves: Vec<_> = cuts.iter().map(|c| names(&nl, &c.leaves)).collect();
        assert_eq!(leaves, [vec!["a", "b"], vec!["d"]]);
        assert_eq!(cuts[0].absorbed, [0]);
        assert!(cuts.iter().all(|c| is_valid_cut(&nl, c)));
        assert_eq!(cone_function(&nl, &cuts[0]).unwrap().bits(), 0b1000);
        assert_eq!(cone_function(&nl, &cuts[1]).unwrap().bits(), 0b10);
    }

    const CARRY: &str = "\
.model carry
.inputs a b cin
.outputs q
.names a b ab
11 1
.names a cin ac
11 1
.names b cin bc
11 1
.names ab ac t
1- 1
-1 1
.names t bc d
1- 1
-1 1
.latch d q re clk 0
.end
";

    #[test]
    fn carry_cone_is_majority() {
        let nl = parse_blif(CARRY).unwrap();
        let cuts = enumerate_cuts(&nl, 0, 5).unwrap();
        let full = cuts
            .iter()
            .find(|c| names(&nl, &c.leaves) == ["a", "b", "cin"])
            .expect("3-leaf cut");
        assert_eq!(full.cone.len(), 5);
        assert_eq!(full.absorbed.len(), 5);
        assert_eq!(cone_function(&nl, full).unwrap().bits(), 0xe8);
        assert_eq!(cuts[0].leaves, full.leaves);
        assert!(cuts.iter().all(|c| is_valid_cut(&nl, c)));
    }

    #[test]
    fn flip_flop_fed_by_input_has_only_the_trivial_cut() {
        let nl = parse_blif(".model m\n.inputs a\n.outputs q\n.latch a q re clk 0\n.end\n").unwrap();
        let cuts = enumerate_cuts(&nl, 0, 5).unwrap();
        assert_eq!(cuts.len(), 1);
        assert!(cuts[0].is_trivial());
    }

    #[test]
    fn buffer_chain_is_identity() {
        let nl = parse_blif(
            ".model m\n.inputs a\n.outputs q\n.names a t\n1 1\n.names t d\n1 1\n.latch d q re clk 0\n.end\n",
        )
        .unwrap();
        let cuts = enumerate_cuts(&nl, 0, 5).unwrap();
        assert_eq!(names(&nl, &cuts[0].leaves), ["a"]);
        assert_eq!(cone_function(&nl, &cuts[0]).unwrap().bits(), 0b10);
    }

    #[test]
    fn shared_gates_are_not_absorbed() {
        let text = ".model m\n.inputs a b c\n.outputs q y\n.names a b t\n11 1\n.names t c d\n1- 1\n-1 1\n\
                    .names t y\n0 1\n.latch d q re clk 0\n.end\n";
        let nl = parse_blif(text).unwrap();
        let cuts = enumerate_cuts(&nl, 0, 5).unwrap();
        let full = &cuts[0];
        assert_eq!(names(&nl, &full.leaves), ["a", "b", "c"]);
        assert_eq!(full.cone.len(), 2);
        assert_eq!(full.absorbed.len(), 1);
    }

    #[test]
    fn rejects_bad_sizes() {
        let nl = parse_blif(CARRY).unwrap();
        assert!(enumerate_cuts(&nl, 0, 6).is_err());
        assert!(enumerate_cuts(&nl, 0, 0).is_err());
        assert!(enumerate_cuts(&nl, 3, 5).is_err());
        let two = enumerate_cuts(&nl, 0, 2).unwrap();
        assert!(two.iter().all(|c| c.leaves.len() <= 2));
    }
}
