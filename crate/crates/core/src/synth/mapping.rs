// SPDX-License-Identifier: Apache-2.0
//! Replacement of flip-flops and their threshold cones by FTL cells.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use super::cuts::{cone_function, enumerate_cuts, Cut};
use super::netlist::{FtlCell, GateId, NetId, Netlist};
use super::report::TechTable;
use crate::error::Result;
use crate::library::Library;
use crate::npn::NpnTransform;
use crate::truth_table::{TruthTable, MAX_ARITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Replace only when the estimated area goes down.
    Benefit,
    /// Replace every flip-flop with a matching cone.
    Exhaustive,
}

/// Best library match for one flip-flop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeMatch {
    pub cut: Cut,
    pub table: TruthTable,
    pub class_index: usize,
    /// Binding of the class onto the cut leaves (first pins are used).
    pub transform: NpnTransform,
    /// Pins of the class actually wired.
    pub pins: usize,
}

impl ConeMatch {
    pub fn input_inverters(&self) -> usize {
        (0..self.pins).filter(|&j| self.transform.pin_negated(j)).count()
    }

    pub fn inverters(&self) -> usize {
        self.input_inverters() + usize::from(self.transform.output_negated())
    }

    /// Ordering key: more absorbed gates, fewer inverters, no output
    /// inverter, lower class index, then the leaf set for determinism.
    fn rank(&self) -> (usize, usize, bool, usize, &[NetId]) {
        (
            usize::MAX - self.cut.absorbed.len(),
            self.inverters(),
            self.transform.output_negated(),
            self.class_index,
            &self.cut.leaves,
        )
    }
}

/// A replacement applied by [`map_to_ftl`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FtlCellRef {
    /// Flip-flop index in the original netlist.
    pub dff: usize,
    pub class_index: usize,
    pub transform: NpnTransform,
    /// Cut leaves in the original netlist (net ids are preserved).
    pub leaves: Vec<NetId>,
    /// Net driving each cell pin before any inverter.
    pub pin_sources: Vec<NetId>,
    /// Original gates removed with the flip-flop.
    pub absorbed: Vec<GateId>,
    pub input_inverters: usize,
    pub output_inverter: bool,
    pub area_milli: u64,
}

#[derive(Debug, Clone)]
pub struct Mapping {
    pub netlist: Netlist,
    pub cells: Vec<FtlCellRef>,
    /// Inverters inserted, after sharing per net.
    pub inverters_added: usize,
}

/// Best match among the cuts of flip-flop `dff`, if any cone is an NPN
/// variant of a library class.
pub fn best_match(nl: &Netlist, library: &Library, dff: usize) -> Result<Option<ConeMatch>> {
    let mut best: Option<ConeMatch> = None;
    for cut in enumerate_cuts(nl, dff, MAX_ARITY)? {
        if cut.is_trivial() {
            continue;
        }
        let table = cone_function(nl, &cut)?;
        let Some(m) = library.match_function(&table) else {
            continue;
        };
        let pins = library.get(m.class_index).map_or(0, |e| e.function.arity());
        let cand = ConeMatch {
            cut,
            table,
            class_index: m.class_index,
            transform: m.transform,
            pins,
        };
        if best.as_ref().is_none_or(|b| cand.rank() < b.rank()) {
            best = Some(cand);
        }
    }
    Ok(best)
}

fn benefits(nl: &Netlist, m: &ConeMatch, tech: &TechTable) -> Result<bool> {
    let mut removed = tech.dff().area_milli;
    for &g in &m.cut.absorbed {
        let gate = &nl.gates()[g];
        removed += tech.gate(gate.kind, gate.inputs.len())?.area_milli;
    }
    let added = tech.ftl().area_milli + tech.inverter().area_milli * m.inverters() as u64;
    Ok(added < removed)
}

/// Chooses a match per flip-flop under `policy` and rewrites the netlist.
pub fn map_to_ftl(nl: &Netlist, library: &Library, policy: Policy, tech: &TechTable) -> Result<Mapping> {
    let mut chosen = Vec::new();
    for dff in 0..nl.dffs().len() {
        if let Some(m) = best_match(nl, library, dff)? {
            if policy == Policy::Exhaustive || benefits(nl, &m, tech)? {
                chosen.push(m);
            }
        }
    }
    rewrite(nl, library, &chosen, tech)
}

/// Applies the given matches. Matches must come from distinct flip-flops
/// of `nl`; absorbed gate sets of different matches are then disjoint.
pub fn rewrite(nl: &Netlist, library: &Library, matches: &[ConeMatch], tech: &TechTable) -> Result<Mapping> {
    let mut out = Netlist::new(&nl.name);
    out.clock.clone_from(&nl.clock);
    for i in 0..nl.net_count() {
        out.net(nl.net_name(i));
    }
    for &i in nl.inputs() {
        out.add_input(nl.net_name(i));
    }
    for &o in nl.outputs() {
        out.add_output(nl.net_name(o));
    }
    let mut dropped_gates: Vec<GateId> = matches.iter().flat_map(|m| m.cut.absorbed.iter().copied()).collect();
    dropped_gates.sort_unstable();
    let replaced: Vec<usize> = matches.iter().map(|m| m.cut.root).collect();
    for (g, gate) in nl.gates().iter().enumerate() {
        if dropped_gates.binary_search(&g).is_err() {
            out.add_gate(gate.inputs.clone(), gate.output, gate.table)?;
        }
    }
    for (i, d) in nl.dffs().iter().enumerate() {
        if !replaced.contains(&i) {
            out.add_dff(d.d, d.q, d.init);
        }
    }
    for f in nl.ftls() {
        out.add_ftl(f.clone());
    }

    let mut inverted: BTreeMap<NetId, NetId> = BTreeMap::new();
    let mut inverters_added = 0;
    let mut cells = Vec::with_capacity(matches.len());
    for m in matches {
        let entry = library.get(m.class_index).expect("matched class exists");
        let dff = nl.dffs()[m.cut.root];
        let mut inputs = Vec::with_capacity(m.pins);
        let mut pin_sources = Vec::with_capacity(m.pins);
        for j in 0..m.pins {
            let src = m.cut.leaves[m.transform.source(j)];
            pin_sources.push(src);
            if m.transform.pin_negated(j) {
                let inv = match inverted.get(&src) {
                    Some(&n) => n,
                    None => {
                        let n = out.fresh_net(&format!("{}_n", nl.net_name(src)));
                        out.add_gate(alloc::vec![src], n, 0b01)?;
                        inverters_added += 1;
                        inverted.insert(src, n);
                        n
                    }
                };
                inputs.push(inv);
            } else {
                inputs.push(src);
            }
        }
        let negate = m.transform.output_negated();
        let output = if negate {
            let raw = out.fresh_net(&format!("{}_ftl", nl.net_name(dff.q)));
            out.add_gate(alloc::vec![raw], dff.q, 0b01)?;
            inverters_added += 1;
            raw
        } else {
            dff.q
        };
        out.add_ftl(FtlCell {
            class_index: m.class_index,
            function: entry.function.clone(),
            inputs,
            output,
            init: dff.init ^ negate,
        });
        cells.push(FtlCellRef {
            dff: m.cut.root,
            class_index: m.class_index,
            transform: m.transform.clone(),
            leaves: m.cut.leaves.clone(),
            pin_sources,
            absorbed: m.cut.absorbed.clone(),
            input_inverters: m.input_inverters(),
            output_inverter: negate,
            area_milli: tech.ftl().area_milli,
        });
    }
    Ok(Mapping {
        netlist: out.finish()?,
        cells,
        inverters_added,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::enumerate_library;
    use crate::synth::netlist::parse_blif;

    fn lib() -> Library {
        enumerate_library(3).unwrap()
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
.names ab ac bc d
1-- 1
-1- 1
--1 1
.latch d q re clk 0
.end
";

    #[test]
    fn carry_maps_to_majority() {
        let nl = parse_blif(CARRY).unwrap();
        let lib = lib();
        let maj = lib.find_function(&[1, 1, 1], 2).unwrap().index;
        let m = best_match(&nl, &lib, 0).unwrap().unwrap();
        assert_eq!(m.class_index, maj);
        assert_eq!(m.inverters(), 0);
        let out = map_to_ftl(&nl, &lib, Policy::Exhaustive, &TechTable::bundled()).unwrap();
        assert_eq!(out.netlist.gates().len(), 0);
        assert_eq!(out.netlist.dffs().len(), 0);
        assert_eq!(out.netlist.ftls().len(), 1);
        let r = crate::synth::equivalence::verify_equivalence(&nl, &out.netlist, 10, 0).unwrap();
        assert!(r.passed() && r.exhaustive);
    }

    #[test]
    fn xor_cone_is_left_alone() {
        let nl = parse_blif(".model x\n.inputs a b\n.outputs q\n.names a b d\n01 1\n10 1\n.latch d q re clk 0\n.end\n")
            .unwrap();
        assert!(best_match(&nl, &lib(), 0).unwrap().is_none());
        let out = map_to_ftl(&nl, &lib(), Policy::Exhaustive, &TechTable::bundled()).unwrap();
        assert_eq!(out.netlist, nl);
        assert!(out.cells.is_empty());
    }

    #[test]
    fn negated_output_keeps_reset_value() {
        // d = !(a & b) registered with reset value 1
        let text = ".model n\n.inputs a b\n.outputs q\n.names a b d\n11 0\n.latch d q re clk 1\n.end\n";
        let nl = parse_blif(text).unwrap();
        let out = map_to_ftl(&nl, &lib(), Policy::Exhaustive, &TechTable::bundled()).unwrap();
        assert_eq!(out.cells.len(), 1);
        let r = crate::synth::equivalence::verify_equivalence(&nl, &out.netlist, 10, 0).unwrap();
        assert!(r.passed(), "{:?}", r.counterexample);
    }

    #[test]
    fn shared_input_inverters_are_merged() {
        // two registers both reading !a through their cones
        let text = ".model s\n.inputs a b c\n.outputs q r\n.names a b d\n01 1\n.names a c e\n01 1\n\
                    .latch d q re clk 0\n.latch e r re clk 0\n.end\n";
        let nl = parse_blif(text).unwrap();
        let out = map_to_ftl(&nl, &lib(), Policy::Exhaustive, &TechTable::bundled()).unwrap();
        assert_eq!(out.cells.len(), 2);
        assert_eq!(out.cells.iter().map(|c| c.input_inverters).sum::<usize>(), 2);
        assert_eq!(out.inverters_added, 1);
        let r = crate::synth::equivalence::verify_equivalence(&nl, &out.netlist, 10, 0).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn benefit_skips_small_cones() {
        let nl =
            parse_blif(".model m\n.inputs a b\n.outputs q\n.names a b d\n11 1\n.latch d q re clk 0\n.end\n").unwrap();
        let out = map_to_ftl(&nl, &lib(), Policy::Benefit, &TechTable::bundled()).unwrap();
        assert!(out.cells.is_empty());
        let out = map_to_ftl(&nl, &lib(), Policy::Exhaustive, &TechTable::bundled()).unwrap();
        assert_eq!(out.cells.len(), 1);
    }
}
