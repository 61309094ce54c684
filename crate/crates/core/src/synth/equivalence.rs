// SPDX-License-Identifier: Apache-2.0
//! Cycle-by-cycle co-simulation of two netlists from reset.
//!
//! Compared signals are the primary outputs plus every register output of
//! the reference netlist that still exists by name in the candidate. With
//! few primary inputs the check walks every reachable joint state under
//! every input vector; otherwise it runs seeded random sequences.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::netlist::{NetId, Netlist};
use crate::error::{Error, Result};

/// Largest primary-input count checked exhaustively.
pub const EXHAUSTIVE_INPUT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivalenceConfig {
    /// Random sequences when the input space is too large.
    pub sequences: usize,
    pub sequence_length: usize,
    pub seed: u64,
    /// Joint-state budget for the exhaustive walk.
    pub max_states: usize,
}

impl EquivalenceConfig {
    pub fn new(sequences: usize, seed: u64) -> Self {
        Self {
            sequences,
            sequence_length: 32,
            seed,
            max_states: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    /// Cycle (from reset) on which the signals first differ.
    pub cycle: usize,
    /// Input vectors applied from reset up to and including `cycle`.
    pub trace: Vec<Vec<bool>>,
    pub signal: String,
    pub expected: bool,
    pub got: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub exhaustive: bool,
    /// Input vectors simulated.
    pub vectors: u64,
    pub states: usize,
    pub counterexample: Option<Counterexample>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

struct Pairing {
    /// Candidate input position for each reference input.
    inputs: Vec<usize>,
    signals: Vec<(String, NetId, NetId)>,
}

fn pair(before: &Netlist, after: &Netlist) -> Result<Pairing> {
    let names = |nl: &Netlist, ids: &[NetId]| {
        let mut v: Vec<String> = ids.iter().map(|&i| nl.net_name(i).into()).collect();
        v.sort();
        v
    };
    if names(before, before.inputs()) != names(after, after.inputs()) {
        return Err(Error::Netlist("netlists have different primary inputs".into()));
    }
    if names(before, before.outputs()) != names(after, after.outputs()) {
        return Err(Error::Netlist("netlists have different primary outputs".into()));
    }
    let pos: BTreeMap<&str, usize> = after
        .inputs()
        .iter()
        .enumerate()
        .map(|(i, &n)| (after.net_name(n), i))
        .collect();
    let inputs = before.inputs().iter().map(|&n| pos[before.net_name(n)]).collect();
    let drivers = after.drivers()?;
    let mut signals: Vec<(String, NetId, NetId)> = Vec::new();
    let regs = before
        .dffs()
        .iter()
        .map(|d| d.q)
        .chain(before.ftls().iter().map(|f| f.output));
    for n in before.outputs().iter().copied().chain(regs) {
        let name = before.net_name(n);
        if let Some(m) = after.find_net(name).filter(|&m| drivers[m].is_some()) {
            if !signals.iter().any(|s| s.0 == name) {
                signals.push((name.into(), n, m));
            }
        }
    }
    Ok(Pairing { inputs, signals })
}

struct Step {
    mismatch: Option<(String, bool, bool)>,
    next: (Vec<bool>, Vec<bool>),
}

fn step(before: &Netlist, after: &Netlist, p: &Pairing, state: &(Vec<bool>, Vec<bool>), vector: &[bool]) -> Step {
    let mut mapped = alloc::vec![false; vector.len()];
    for (i, &j) in p.inputs.iter().enumerate() {
        mapped[j] = vector[i];
    }
    let vb = before.evaluate(&state.0, vector);
    let va = after.evaluate(&state.1, &mapped);
    let mismatch = p
        .signals
        .iter()
        .find(|(_, b, a)| vb[*b] != va[*a])
        .map(|(s, b, a)| (s.clone(), vb[*b], va[*a]));
    Step {
        mismatch,
        next: (before.next_state(&vb), after.next_state(&va)),
    }
}

fn vector_of(bits: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| bits >> i & 1 == 1).collect()
}

/// Checks `after` against `before` with the default exhaustive/random
/// switch over `vector_count` random sequences.
pub fn verify_equivalence(
    before: &Netlist,
    after: &Netlist,
    vector_count: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    verify_equivalence_with(before, after, &EquivalenceConfig::new(vector_count, seed))
}

pub fn verify_equivalence_with(
    before: &Netlist,
    after: &Netlist,
    cfg: &EquivalenceConfig,
) -> Result<EquivalenceReport> {
    let p = pair(before, after)?;
    let n = before.inputs().len();
    let init = (before.initial_state(), after.initial_state());
    if n <= EXHAUSTIVE_INPUT_LIMIT {
        if let Some(r) = exhaustive(before, after, &p, init.clone(), cfg.max_states) {
            return Ok(r);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vectors = 0;
    for _ in 0..cfg.sequences {
        let mut state = init.clone();
        let mut trace = Vec::new();
        for cycle in 0..cfg.sequence_length {
            let v: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            trace.push(v.clone());
            vectors += 1;
            let s = step(before, after, &p, &state, &v);
            if let Some((signal, expected, got)) = s.mismatch {
                let counterexample = Some(Counterexample {
                    cycle,
                    trace,
                    signal,
                    expected,
                    got,
                });
                return Ok(EquivalenceReport {
                    exhaustive: false,
                    vectors,
                    states: 0,
                    counterexample,
                });
            }
            state = s.next;
        }
    }
    Ok(EquivalenceReport {
        exhaustive: false,
        vectors,
        states: 0,
        counterexample: None,
    })
}

/// Breadth-first walk of the joint state space; `None` when the state
/// budget runs out before the walk closes.
fn exhaustive(
    before: &Netlist,
    after: &Netlist,
    p: &Pairing,
    init: (Vec<bool>, Vec<bool>),
    max_states: usize,
) -> Option<EquivalenceReport> {
    let n = before.inputs().len();
    // each state keeps its parent and the input vector that reached it
    let mut states: Vec<(Vec<bool>, Vec<bool>)> = alloc::vec![init.clone()];
    let mut parent: Vec<Option<(usize, u64)>> = alloc::vec![None];
    let mut index: BTreeMap<(Vec<bool>, Vec<bool>), usize> = BTreeMap::new();
    index.insert(init, 0);
    let mut queue = VecDeque::from([0usize]);
    let mut vectors = 0u64;
    while let Some(si) = queue.pop_front() {
        for bits in 0..1u64 << n {
            let v = vector_of(bits, n);
            vectors += 1;
            let s = step(before, after, p, &states[si], &v);
            if let Some((signal, expected, got)) = s.mismatch {
                let mut trace = alloc::vec![v];
                let mut cur = si;
                while let Some((up, b)) = parent[cur] {
                    trace.push(vector_of(b, n));
                    cur = up;
                }
                trace.reverse();
                let cycle = trace.len() - 1;
                let counterexample = Some(Counterexample {
                    cycle,
                    trace,
                    signal,
                    expected,
                    got,
                });
                return Some(EquivalenceReport {
                    exhaustive: true,
                    vectors,
                    states: states.len(),
                    counterexample,
                });
            }
            if !index.contains_key(&s.next) {
                if states.len() >= max_states {
                    return None;
                }
                index.insert(s.next.clone(), states.len());
                states.push(s.next);
                parent.push(Some((si, bits)));
                queue.push_back(states.len() - 1);
            }
        }
    }
    Some(EquivalenceReport {
        exhaustive: true,
        vectors,
        states: states.len(),
        counterexample: None,
    })
}

impl core::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let last: String = self
            .trace
            .last()
            .map(|v| v.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .unwrap_or_default();
        write!(
            f,
            "cycle {}: {} expected {} got {} (inputs {last})",
            self.cycle,
            self.signal,
            u8::from(self.expected),
            u8::from(self.got)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::netlist::parse_blif;

    const TOGGLE: &str = ".model m\n.inputs a b\n.outputs q\n.names a b d\n11 1\n.latch d q re clk 0\n.end\n";

    #[test]
    fn identical_netlists_pass_exhaustively() {
        let nl = parse_blif(TOGGLE).unwrap();
        let r = verify_equivalence(&nl, &nl, 10, 1).unwrap();
        assert!(r.passed() && r.exhaustive);
        assert_eq!(r.states, 2);
        assert_eq!(r.vectors, 8);
    }

    #[test]
    fn corrupted_gate_yields_counterexample() {
        let good = parse_blif(TOGGLE).unwrap();
        let bad = parse_blif(&TOGGLE.replace("11 1", "1- 1")).unwrap();
        let r = verify_equivalence(&good, &bad, 10, 1).unwrap();
        let cx = r.counterexample.expect("mismatch");
        assert_eq!(cx.signal, "q");
        assert_eq!(cx.cycle, 1);
        // replaying the trace reproduces the disagreement
        let (mut sg, mut sb) = (good.initial_state(), bad.initial_state());
        let mut differ = false;
        for v in &cx.trace {
            let (vg, vb) = (good.evaluate(&sg, v), bad.evaluate(&sb, v));
            let q = good.find_net("q").unwrap();
            differ = vg[q] != vb[bad.find_net("q").unwrap()];
            sg = good.next_state(&vg);
            sb = bad.next_state(&vb);
        }
        assert!(differ);
    }

    #[test]
    fn interface_mismatch_is_an_error() {
        let a = parse_blif(TOGGLE).unwrap();
        let b = parse_blif(&TOGGLE.replace(".inputs a b", ".inputs a b c")).unwrap();
        assert!(verify_equivalence(&a, &b, 1, 0).is_err());
    }

    #[test]
    fn random_mode_is_deterministic() {
        let a = parse_blif(TOGGLE).unwrap();
        let b = parse_blif(&TOGGLE.replace("11 1", "1- 1")).unwrap();
        let mut cfg = EquivalenceConfig::new(50, 7);
        cfg.max_states = 1;
        let r1 = verify_equivalence_with(&a, &b, &cfg).unwrap();
        let r2 = verify_equivalence_with(&a, &b, &cfg).unwrap();
        assert!(!r1.exhaustive);
        assert_eq!(r1, r2);
        assert!(!r1.passed());
    }
}
