// SPDX-License-Identifier: Apache-2.0
//! Gate-level sequential netlists and the BLIF subset used to exchange them.
//!
//! Gates hold their function as a truth table over their ordered inputs
//! (first input is the most significant minterm bit), so any `.names` cover
//! with at most five inputs is representable. Flip-flops and FTL cells are
//! the sequential elements; both update on the single implicit clock.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::library::Library;
use crate::threshold::ThresholdFunction;
use crate::truth_table::MAX_ARITY;

pub type NetId = usize;
pub type GateId = usize;

/// Standard-cell kind a gate function is recognized as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GateKind {
    Const0,
    Const1,
    Buf,
    Inv,
    And(u8),
    Nand(u8),
    Or(u8),
    Nor(u8),
    Xor(u8),
    Xnor(u8),
    Maj3,
    /// Any other single-output cover.
    Sop(u8),
}

fn full_mask(n: usize) -> u32 {
    let rows = 1u32 << n;
    if rows == 32 {
        u32::MAX
    } else {
        (1u32 << rows) - 1
    }
}

fn parity_table(n: usize) -> u32 {
    (0..1u32 << n)
        .filter(|m| m.count_ones() % 2 == 1)
        .fold(0, |acc, m| acc | 1 << m)
}

impl GateKind {
    pub fn classify(arity: usize, table: u32) -> Self {
        let mask = full_mask(arity);
        let table = table & mask;
        let n = arity as u8;
        if table == 0 {
            return Self::Const0;
        }
        if table == mask {
            return Self::Const1;
        }
        let last = 1u32 << ((1u32 << arity) - 1);
        match arity {
            1 if table == 0b10 => return Self::Buf,
            1 if table == 0b01 => return Self::Inv,
            3 if table == 0xe8 => return Self::Maj3,
            _ => {}
        }
        if arity >= 2 {
            let xor = parity_table(arity);
            if table == last {
                return Self::And(n);
            } else if table == mask & !last {
                return Self::Nand(n);
            } else if table == mask & !1 {
                return Self::Or(n);
            } else if table == 1 {
                return Self::Nor(n);
            } else if table == xor {
                return Self::Xor(n);
            } else if table == mask & !xor {
                return Self::Xnor(n);
            }
        }
        Self::Sop(n)
    }

    /// Cell name as used in the technology table, e.g. `NAND2`.
    pub fn name(&self) -> String {
        match *self {
            Self::Const0 | Self::Const1 => "TIE".to_string(),
            Self::Buf => "BUF".to_string(),
            Self::Inv => "INV".to_string(),
            Self::And(n) => format!("AND{n}"),
            Self::Nand(n) => format!("NAND{n}"),
            Self::Or(n) => format!("OR{n}"),
            Self::Nor(n) => format!("NOR{n}"),
            Self::Xor(n) => format!("XOR{n}"),
            Self::Xnor(n) => format!("XNOR{n}"),
            Self::Maj3 => "MAJ3".to_string(),
            Self::Sop(n) => format!("SOP{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
    /// Bit `m` is the output for input pattern `m`.
    pub table: u32,
}

impl Gate {
    pub fn new(inputs: Vec<NetId>, output: NetId, table: u32) -> Result<Self> {
        if inputs.len() > MAX_ARITY {
            return Err(Error::Netlist(format!(
                "gate with {} inputs exceeds the supported 5",
                inputs.len()
            )));
        }
        let table = table & full_mask(inputs.len());
        Ok(Self {
            kind: GateKind::classify(inputs.len(), table),
            inputs,
            output,
            table,
        })
    }

    pub fn eval(&self, values: &[bool]) -> bool {
        let idx = self.inputs.iter().fold(0u32, |acc, &i| acc << 1 | u32::from(values[i]));
        self.table >> idx & 1 == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dff {
    pub d: NetId,
    pub q: NetId,
    pub init: bool,
}

/// Registered threshold cell: `q <= f(inputs)` on every clock edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FtlCell {
    pub class_index: usize,
    pub function: ThresholdFunction,
    pub inputs: Vec<NetId>,
    pub output: NetId,
    pub init: bool,
}

impl FtlCell {
    pub fn next(&self, values: &[bool]) -> bool {
        let idx = self.inputs.iter().fold(0u32, |acc, &i| acc << 1 | u32::from(values[i]));
        self.function.evaluate_index(idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input,
    Gate(GateId),
    Dff(usize),
    Ftl(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sink {
    Gate(GateId),
    Dff(usize),
    Ftl(usize),
    Output,
}

/// A single-clock gate-level netlist.
///
/// Build it with the `add_*` methods and call [`Netlist::finish`], which
/// checks structure and puts gates in topological order; the simulation
/// and cut routines rely on that order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Netlist {
    pub name: String,
    /// Clock name used when writing sequential elements.
    pub clock: String,
    nets: Vec<String>,
    index: BTreeMap<String, NetId>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    gates: Vec<Gate>,
    dffs: Vec<Dff>,
    ftls: Vec<FtlCell>,
}

impl Netlist {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            clock: "clk".to_string(),
            ..Self::default()
        }
    }

    /// Id of the net called `name`, creating it if needed.
    pub fn net(&mut self, name: &str) -> NetId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.nets.len();
        self.nets.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    /// A new net named after `base` that does not clash with existing ones.
    pub fn fresh_net(&mut self, base: &str) -> NetId {
        if !self.index.contains_key(base) {
            return self.net(base);
        }
        let mut i = 1;
        loop {
            let name = format!("{base}_{i}");
            if !self.index.contains_key(&name) {
                return self.net(&name);
            }
            i += 1;
        }
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.index.get(name).copied()
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id]
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn add_input(&mut self, name: &str) -> NetId {
        let id = self.net(name);
        self.inputs.push(id);
        id
    }

    pub fn add_output(&mut self, name: &str) -> NetId {
        let id = self.net(name);
        self.outputs.push(id);
        id
    }

    pub fn add_gate(&mut self, inputs: Vec<NetId>, output: NetId, table: u32) -> Result<GateId> {
        self.gates.push(Gate::new(inputs, output, table)?);
        Ok(self.gates.len() - 1)
    }

    pub fn add_dff(&mut self, d: NetId, q: NetId, init: bool) -> usize {
        self.dffs.push(Dff { d, q, init });
        self.dffs.len() - 1
    }

    pub fn add_ftl(&mut self, cell: FtlCell) -> usize {
        self.ftls.push(cell);
        self.ftls.len() - 1
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn dffs(&self) -> &[Dff] {
        &self.dffs
    }

    pub fn ftls(&self) -> &[FtlCell] {
        &self.ftls
    }

    /// Gates, flip-flops and FTL cells.
    pub fn cell_count(&self) -> usize {
        self.gates.len() + self.dffs.len() + self.ftls.len()
    }

    /// Driver of every net, `None` for undriven nets.
    pub fn drivers(&self) -> Result<Vec<Option<Driver>>> {
        let mut out: Vec<Option<Driver>> = vec![None; self.nets.len()];
        let mut set = |net: NetId, d: Driver, nets: &[String]| -> Result<()> {
            if out[net].is_some() {
                return Err(Error::Netlist(format!("net {} has multiple drivers", nets[net])));
            }
            out[net] = Some(d);
            Ok(())
        };
        for &i in &self.inputs {
            set(i, Driver::Input, &self.nets)?;
        }
        for (g, gate) in self.gates.iter().enumerate() {
            set(gate.output, Driver::Gate(g), &self.nets)?;
        }
        for (i, d) in self.dffs.iter().enumerate() {
            set(d.q, Driver::Dff(i), &self.nets)?;
        }
        for (i, f) in self.ftls.iter().enumerate() {
            set(f.output, Driver::Ftl(i), &self.nets)?;
        }
        Ok(out)
    }

    /// Readers of every net.
    pub fn fanouts(&self) -> Vec<Vec<Sink>> {
        let mut out = vec![Vec::new(); self.nets.len()];
        for (g, gate) in self.gates.iter().enumerate() {
            for &i in &gate.inputs {
                out[i].push(Sink::Gate(g));
            }
        }
        for (i, d) in self.dffs.iter().enumerate() {
            out[d.d].push(Sink::Dff(i));
        }
        for (i, f) in self.ftls.iter().enumerate() {
            for &n in &f.inputs {
                out[n].push(Sink::Ftl(i));
            }
        }
        for &o in &self.outputs {
            out[o].push(Sink::Output);
        }
        for s in &mut out {
            s.sort_unstable();
            s.dedup();
        }
        out
    }

    /// Checks single drivers, that every read net is driven and that the
    /// combinational part is acyclic, then sorts gates topologically.
    pub fn finish(mut self) -> Result<Self> {
        let drivers = self.drivers()?;
        let used = self
            .gates
            .iter()
            .flat_map(|g| g.inputs.iter())
            .chain(self.dffs.iter().map(|d| &d.d))
            .chain(self.ftls.iter().flat_map(|f| f.inputs.iter()))
            .chain(self.outputs.iter());
        for &n in used {
            if drivers[n].is_none() {
                return Err(Error::Netlist(format!("net {} is read but never driven", self.nets[n])));
            }
        }
        // Kahn's algorithm over gate-to-gate edges
        let fanouts = self.fanouts();
        let mut pending: Vec<usize> = self
            .gates
            .iter()
            .map(|g| {
                let mut ins = g.inputs.clone();
                ins.sort_unstable();
                ins.dedup();
                ins.iter()
                    .filter(|&&i| matches!(drivers[i], Some(Driver::Gate(_))))
                    .count()
            })
            .collect();
        let mut ready: Vec<GateId> = (0..self.gates.len()).rev().filter(|&g| pending[g] == 0).collect();
        let mut order = Vec::with_capacity(self.gates.len());
        while let Some(g) = ready.pop() {
            order.push(g);
            for s in fanouts[self.gates[g].output].iter().rev() {
                if let Sink::Gate(h) = *s {
                    pending[h] -= 1;
                    if pending[h] == 0 {
                        ready.push(h);
                    }
                }
            }
        }
        if order.len() != self.gates.len() {
            let stuck = (0..self.gates.len()).find(|&g| pending[g] > 0).unwrap_or(0);
            return Err(Error::Netlist(format!(
                "combinational cycle through net {}",
                self.nets[self.gates[stuck].output]
            )));
        }
        let mut gates: Vec<Option<Gate>> = self.gates.into_iter().map(Some).collect();
        self.gates = order
            .into_iter()
            .map(|g| gates[g].take().expect("each gate once"))
            .collect();
        Ok(self)
    }

    /// Register values at reset: flip-flops first, then FTL cells.
    pub fn initial_state(&self) -> Vec<bool> {
        self.dffs
            .iter()
            .map(|d| d.init)
            .chain(self.ftls.iter().map(|f| f.init))
            .collect()
    }

    /// Values of every net for one cycle. `inputs` follows [`Netlist::inputs`].
    pub fn evaluate(&self, state: &[bool], inputs: &[bool]) -> Vec<bool> {
        let mut values = vec![false; self.nets.len()];
        for (&n, &v) in self.inputs.iter().zip(inputs) {
            values[n] = v;
        }
        for (d, &v) in self.dffs.iter().zip(state) {
            values[d.q] = v;
        }
        for (f, &v) in self.ftls.iter().zip(&state[self.dffs.len()..]) {
            values[f.output] = v;
        }
        for g in &self.gates {
            values[g.output] = g.eval(&values);
        }
        values
    }

    /// Register values after the clock edge that follows `values`.
    pub fn next_state(&self, values: &[bool]) -> Vec<bool> {
        self.dffs
            .iter()
            .map(|d| values[d.d])
            .chain(self.ftls.iter().map(|f| f.next(values)))
            .collect()
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn cube_table(arity: usize, cubes: &[(usize, String)]) -> Result<u32> {
    let mut on = 0u32;
    let mut out_value: Option<bool> = None;
    for (ln, text) in cubes {
        let mut parts = text.split_whitespace();
        let (pattern, value) = match (arity, parts.next(), parts.next(), parts.next()) {
            (0, Some(v), None, None) => ("", v),
            (_, Some(p), Some(v), None) if arity > 0 => (p, v),
            _ => return Err(parse_err(*ln, "malformed cube line")),
        };
        if pattern.len() != arity {
            return Err(parse_err(
                *ln,
                format!("cube has {} literals, expected {arity}", pattern.len()),
            ));
        }
        let v = match value {
            "1" => true,
            "0" => false,
            _ => return Err(parse_err(*ln, format!("cube output must be 0 or 1, got {value:?}"))),
        };
        if out_value.is_some_and(|o| o != v) {
            return Err(parse_err(*ln, "cover mixes on-set and off-set cubes"));
        }
        out_value = Some(v);
        if !pattern.bytes().all(|c| matches!(c, b'0' | b'1' | b'-')) {
            return Err(parse_err(*ln, format!("invalid literal in cube {pattern:?}")));
        }
        for m in 0..1u32 << arity {
            let hit = pattern.bytes().enumerate().all(|(i, c)| {
                let bit = m >> (arity - 1 - i) & 1 == 1;
                match c {
                    b'1' => bit,
                    b'0' => !bit,
                    _ => true,
                }
            });
            if hit {
                on |= 1 << m;
            }
        }
    }
    Ok(match out_value {
        Some(false) => !on & full_mask(arity),
        _ => on,
    })
}

/// Parses the BLIF subset `.model .inputs .outputs .names .latch .end`.
pub fn parse_blif(text: &str) -> Result<Netlist> {
    parse_blif_with_library(text, None)
}

/// Like [`parse_blif`], also accepting `.subckt ftl_<class>` instances
/// resolved against `library`.
pub fn parse_blif_with_library(text: &str, library: Option<&Library>) -> Result<Netlist> {
    // logical lines with their starting physical line number
    let mut lines: Vec<(usize, String)> = Vec::new();
    let mut carry: Option<(usize, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim_end();
        let (body, cont) = match body.strip_suffix('\\') {
            Some(b) => (b, true),
            None => (body, false),
        };
        let entry = match carry.take() {
            Some((ln, mut acc)) => {
                acc.push(' ');
                acc.push_str(body);
                (ln, acc)
            }
            None => (i + 1, body.to_string()),
        };
        if cont {
            carry = Some(entry);
        } else if !entry.1.trim().is_empty() {
            lines.push(entry);
        }
    }
    if let Some(entry) = carry {
        lines.push(entry);
    }

    let mut nl = Netlist::new("top");
    let mut clock: Option<String> = None;
    let mut i = 0;
    let mut ended = false;
    while i < lines.len() {
        let (ln, ref line) = lines[i];
        let mut tok = line.split_whitespace();
        let directive = tok.next().unwrap_or("");
        let args: Vec<&str> = tok.collect();
        i += 1;
        if ended {
            return Err(parse_err(ln, "content after .end"));
        }
        match directive {
            ".model" => nl.name = args.first().copied().unwrap_or("top").to_string(),
            ".inputs" => args.iter().for_each(|a| {
                nl.add_input(a);
            }),
            ".outputs" => args.iter().for_each(|a| {
                nl.add_output(a);
            }),
            ".names" => {
                let (out, ins) = args
                    .split_last()
                    .ok_or_else(|| parse_err(ln, ".names needs an output"))?;
                if ins.len() > MAX_ARITY {
                    return Err(parse_err(ln, format!("{} inputs exceed the supported 5", ins.len())));
                }
                let mut cubes = Vec::new();
                while i < lines.len() && !lines[i].1.trim_start().starts_with('.') {
                    cubes.push(lines[i].clone());
                    i += 1;
                }
                let table = cube_table(ins.len(), &cubes)?;
                let inputs = ins.iter().map(|n| nl.net(n)).collect();
                let output = nl.net(out);
                nl.add_gate(inputs, output, table)?;
            }
            ".latch" => {
                let (d, q, rest) = match args.as_slice() {
                    [d, q, rest @ ..] => (*d, *q, rest),
                    _ => return Err(parse_err(ln, ".latch needs input and output")),
                };
                let init = match rest {
                    [] | [_, _] => 0,
                    [v] | [_, _, v] => v.parse::<u8>().map_err(|_| parse_err(ln, "bad latch init value"))?,
                    _ => return Err(parse_err(ln, "too many .latch fields")),
                };
                if init > 3 {
                    return Err(parse_err(ln, "latch init must be 0..3"));
                }
                if let [_, ctrl, ..] = rest {
                    clock.get_or_insert_with(|| ctrl.to_string());
                }
                let (d, q) = (nl.net(d), nl.net(q));
                nl.add_dff(d, q, init == 1);
            }
            ".subckt" => {
                let model = args.first().ok_or_else(|| parse_err(ln, ".subckt needs a model"))?;
                let lib = library.ok_or_else(|| parse_err(ln, "FTL instances need a library"))?;
                let (class, init) =
                    parse_ftl_model(model).ok_or_else(|| parse_err(ln, format!("unknown model {model}")))?;
                let entry = lib
                    .get(class)
                    .ok_or_else(|| parse_err(ln, format!("class {class} not in library")))?;
                let k = entry.function.arity();
                let mut pins: Vec<Option<NetId>> = vec![None; k];
                let mut out = None;
                for a in &args[1..] {
                    let (formal, actual) = a
                        .split_once('=')
                        .ok_or_else(|| parse_err(ln, "pin must be formal=actual"))?;
                    if formal == "out" {
                        out = Some(nl.net(actual));
                    } else if formal == "clk" {
                        clock.get_or_insert_with(|| actual.to_string());
                    } else if let Some(p) = formal.strip_prefix("in").and_then(|p| p.parse::<usize>().ok()) {
                        if p == 0 || p > k {
                            return Err(parse_err(ln, format!("pin {formal} outside 1..={k}")));
                        }
                        pins[p - 1] = Some(nl.net(actual));
                    } else {
                        return Err(parse_err(ln, format!("unknown pin {formal}")));
                    }
                }
                let inputs = pins
                    .into_iter()
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| parse_err(ln, "unconnected FTL input"))?;
                let output = out.ok_or_else(|| parse_err(ln, "FTL output not connected"))?;
                nl.add_ftl(FtlCell {
                    class_index: class,
                    function: entry.function.clone(),
                    inputs,
                    output,
                    init,
                });
            }
            ".end" => ended = true,
            other => return Err(parse_err(ln, format!("unsupported directive {other:?}"))),
        }
    }
    if let Some(c) = clock {
        nl.clock = c;
    }
    nl.finish()
}

fn parse_ftl_model(model: &str) -> Option<(usize, bool)> {
    let rest = model.strip_prefix("ftl_")?;
    let (num, init) = match rest.strip_suffix("_init1") {
        Some(n) => (n, true),
        None => (rest, false),
    };
    Some((num.parse().ok()?, init))
}

fn write_cover(out: &mut String, gate: &Gate) {
    let n = gate.inputs.len();
    let rows = 1u32 << n;
    let lit = |m: u32, i: usize| if m >> (n - 1 - i) & 1 == 1 { '1' } else { '0' };
    match gate.kind {
        GateKind::Const0 => {}
        GateKind::Const1 if n == 0 => out.push_str("1\n"),
        GateKind::Or(_) | GateKind::Nand(_) => {
            let c = if gate.kind == GateKind::Nand(n as u8) { '0' } else { '1' };
            for i in 0..n {
                let cube: String = (0..n).map(|j| if j == i { c } else { '-' }).collect();
                let _ = writeln!(out, "{cube} 1");
            }
        }
        _ => {
            let ones = gate.table.count_ones();
            let (value, want) = if ones * 2 <= rows { ('1', true) } else { ('0', false) };
            for m in 0..rows {
                if (gate.table >> m & 1 == 1) == want {
                    let cube: String = (0..n).map(|i| lit(m, i)).collect();
                    let _ = writeln!(out, "{cube} {value}");
                }
            }
        }
    }
}

/// Writes `nl` in the BLIF subset accepted by [`parse_blif_with_library`].
pub fn write_blif(nl: &Netlist) -> String {
    let mut out = String::new();
    let names = |ids: &[NetId]| ids.iter().map(|&i| nl.net_name(i)).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, ".model {}", nl.name);
    let _ = writeln!(out, ".inputs {}", names(nl.inputs()));
    let _ = writeln!(out, ".outputs {}", names(nl.outputs()));
    for d in nl.dffs() {
        let _ = writeln!(
            out,
            ".latch {} {} re {} {}",
            nl.net_name(d.d),
            nl.net_name(d.q),
            nl.clock,
            u8::from(d.init)
        );
    }
    for f in nl.ftls() {
        let suffix = if f.init { "_init1" } else { "" };
        let _ = write!(out, ".subckt ftl_{}{suffix}", f.class_index);
        for (p, &n) in f.inputs.iter().enumerate() {
            let _ = write!(out, " in{}={}", p + 1, nl.net_name(n));
        }
        let _ = writeln!(out, " clk={} out={}", nl.clock, nl.net_name(f.output));
    }
    for g in nl.gates() {
        let mut all = g.inputs.clone();
        all.push(g.output);
        let _ = writeln!(out, ".names {}", names(&all));
        write_cover(&mut out, g);
    }
    out.push_str(".end\n");
    out
}
