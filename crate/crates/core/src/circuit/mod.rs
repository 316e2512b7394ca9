//! Combinational gate netlists for Sbox circuits and stuck-at faults on
//! their pins.
//!
//! Text format, one item per line (`#` starts a comment):
//!
//! ```text
//! input x0
//! gate g0 NOT x0
//! gate g1 AND x0 g0 1
//! output y0 = g1
//! ```
//!
//! Inputs and outputs are bit-ordered by declaration (first = bit 0). A wire
//! is an input name, a gate id, or one of the constants `0` / `1`. Gates may
//! only reference wires declared above them, so netlists are acyclic by
//! construction.

mod qm;
mod synth;

pub use qm::{minimize, Implicant};
pub use synth::synthesize_sop;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cipher::SboxTable;
use crate::error::{config, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
    Not,
    Xor,
    Nand,
    Nor,
    Const0,
    Const1,
    Buf,
}

impl GateKind {
    fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Not | GateKind::Buf => n == 1,
            GateKind::Const0 | GateKind::Const1 => n == 0,
            _ => n >= 1,
        }
    }

    fn eval(self, mut inputs: impl Iterator<Item = u64>) -> u64 {
        match self {
            GateKind::And => inputs.fold(!0, |a, b| a & b),
            GateKind::Or => inputs.fold(0, |a, b| a | b),
            GateKind::Xor => inputs.fold(0, |a, b| a ^ b),
            GateKind::Nand => !inputs.fold(!0, |a, b| a & b),
            GateKind::Nor => !inputs.fold(0, |a, b| a | b),
            GateKind::Not => !inputs.next().unwrap_or(0),
            GateKind::Buf => inputs.next().unwrap_or(0),
            GateKind::Const0 => 0,
            GateKind::Const1 => !0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Not => "NOT",
            GateKind::Xor => "XOR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
            GateKind::Buf => "BUF",
        })
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "OR" => GateKind::Or,
            "NOT" => GateKind::Not,
            "XOR" => GateKind::Xor,
            "NAND" => GateKind::Nand,
            "NOR" => GateKind::Nor,
            "CONST0" => GateKind::Const0,
            "CONST1" => GateKind::Const1,
            "BUF" => GateKind::Buf,
            other => return config(format!("unknown gate kind {other:?}")),
        })
    }
}

/// A resolved wire reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Signal {
    Input(usize),
    Gate(usize),
    Const(bool),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub id: String,
    pub kind: GateKind,
    pub inputs: Vec<Signal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    inputs: Vec<String>,
    outputs: Vec<(String, Signal)>,
    gates: Vec<Gate>,
    by_id: HashMap<String, usize>,
}

/// Which pin of a gate a fault pins down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pin {
    Input(usize),
    Output,
}

/// A stuck-at fault. Cutting a wire is modelled as stuck-at-0 on its sink.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateFault {
    pub gate: String,
    pub pin: Pin,
    pub stuck: bool,
}

impl fmt::Display for GateFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pin = match self.pin {
            Pin::Input(k) => format!("input {k}"),
            Pin::Output => "output".to_string(),
        };
        write!(f, "{} {} stuck-at-{}", self.gate, pin, u8::from(self.stuck))
    }
}

fn is_reserved(name: &str) -> bool {
    name == "0" || name == "1"
}

impl Netlist {
    /// Build and validate from already-resolved parts.
    pub fn new(inputs: Vec<String>, gates: Vec<Gate>, outputs: Vec<(String, Signal)>) -> Result<Self> {
        let mut by_id = HashMap::new();
        let mut names: HashMap<&str, ()> = HashMap::new();
        for name in &inputs {
            if is_reserved(name) || names.insert(name, ()).is_some() {
                return config(format!("invalid or duplicate input name {name:?}"));
            }
        }
        for (idx, gate) in gates.iter().enumerate() {
            if is_reserved(&gate.id) || names.insert(&gate.id, ()).is_some() {
                return config(format!("invalid or duplicate gate id {:?}", gate.id));
            }
            if !gate.kind.arity_ok(gate.inputs.len()) {
                return config(format!(
                    "gate {} of kind {} cannot take {} inputs",
                    gate.id,
                    gate.kind,
                    gate.inputs.len()
                ));
            }
            for s in &gate.inputs {
                match *s {
                    Signal::Input(i) if i >= inputs.len() => {
                        return config(format!("gate {} reads missing input {i}", gate.id))
                    }
                    Signal::Gate(g) if g >= idx => {
                        return config(format!("gate {} reads a wire not defined above it", gate.id))
                    }
                    _ => {}
                }
            }
            by_id.insert(gate.id.clone(), idx);
        }
        for (name, s) in &outputs {
            match *s {
                Signal::Input(i) if i >= inputs.len() => {
                    return config(format!("output {name} reads missing input {i}"))
                }
                Signal::Gate(g) if g >= gates.len() => {
                    return config(format!("output {name} reads missing gate {g}"))
                }
                _ => {}
            }
        }
        Ok(Netlist { inputs, outputs, gates, by_id })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[(String, Signal)] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: &str) -> Option<&Gate> {
        self.by_id.get(id).map(|&i| &self.gates[i])
    }

    /// Evaluate 64 input patterns at once; `input_words[i]` holds input
    /// `i` across the patterns.
    fn eval_words(&self, input_words: &[u64]) -> Vec<u64> {
        let mut wires = Vec::with_capacity(self.gates.len());
        let read = |s: &Signal, wires: &[u64]| match *s {
            Signal::Input(i) => input_words[i],
            Signal::Gate(g) => wires[g],
            Signal::Const(b) => {
                if b {
                    !0
                } else {
                    0
                }
            }
        };
        for gate in &self.gates {
            let v = gate.kind.eval(gate.inputs.iter().map(|s| read(s, &wires)));
            wires.push(v);
        }
        self.outputs.iter().map(|(_, s)| read(s, &wires)).collect()
    }

    /// Output bits (bit `j` = output `j`) for one input assignment (bit `i`
    /// = input `i`).
    pub fn evaluate(&self, input: u32) -> u32 {
        let words: Vec<u64> = (0..self.inputs.len())
            .map(|i| if (input >> i) & 1 == 1 { !0 } else { 0 })
            .collect();
        self.eval_words(&words)
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &w)| acc | (((w & 1) as u32) << j))
    }

    /// Outputs for every input value `0..2^n`, evaluated 64 patterns per pass.
    pub fn truth_table(&self) -> Vec<u32> {
        let n = self.inputs.len();
        let size = 1usize << n;
        let mut out = vec![0u32; size];
        for base in (0..size).step_by(64) {
            let words: Vec<u64> = (0..n)
                .map(|i| {
                    (0..64.min(size - base)).fold(0u64, |acc, p| acc | ((((base + p) >> i) & 1) as u64) << p)
                })
                .collect();
            let outs = self.eval_words(&words);
            for p in 0..64.min(size - base) {
                out[base + p] = outs
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (j, &w)| acc | (((w >> p) & 1) as u32) << j);
            }
        }
        out
    }

    /// Truth table as an Sbox; needs as many outputs as inputs (4 or 8).
    pub fn derive_table(&self) -> Result<SboxTable> {
        let n = self.inputs.len();
        if n != self.outputs.len() {
            return config(format!(
                "Sbox netlist needs equal input and output counts, got {n} and {}",
                self.outputs.len()
            ));
        }
        SboxTable::new(n as u32, self.truth_table().into_iter().map(|v| v as u8).collect())
    }

    /// Copy of the netlist with one pin forced to a constant. Only the
    /// targeted gate changes.
    pub fn inject_fault(&self, fault: &GateFault) -> Result<Netlist> {
        let idx = *self
            .by_id
            .get(&fault.gate)
            .ok_or_else(|| Error::Config(format!("no gate {:?} in netlist", fault.gate)))?;
        let mut out = self.clone();
        let gate = &mut out.gates[idx];
        match fault.pin {
            Pin::Input(k) => {
                let n = gate.inputs.len();
                let slot = gate.inputs.get_mut(k).ok_or_else(|| {
                    Error::Config(format!("gate {} has {n} inputs, no pin {k}", fault.gate))
                })?;
                *slot = Signal::Const(fault.stuck);
            }
            Pin::Output => {
                gate.kind = if fault.stuck { GateKind::Const1 } else { GateKind::Const0 };
                gate.inputs.clear();
            }
        }
        Ok(out)
    }

    fn wire_name(&self, s: &Signal) -> String {
        match *s {
            Signal::Input(i) => self.inputs[i].clone(),
            Signal::Gate(g) => self.gates[g].id.clone(),
            Signal::Const(b) => u8::from(b).to_string(),
        }
    }
}

pub fn inject_gate_fault(netlist: &Netlist, fault: &GateFault) -> Result<Netlist> {
    netlist.inject_fault(fault)
}

pub fn derive_table(netlist: &Netlist) -> Result<SboxTable> {
    netlist.derive_table()
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for name in &self.inputs {
            writeln!(f, "input {name}")?;
        }
        for gate in &self.gates {
            write!(f, "gate {} {}", gate.id, gate.kind)?;
            for s in &gate.inputs {
                write!(f, " {}", self.wire_name(s))?;
            }
            writeln!(f)?;
        }
        for (name, s) in &self.outputs {
            writeln!(f, "output {name} = {}", self.wire_name(s))?;
        }
        Ok(())
    }
}

impl FromStr for Netlist {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut inputs = Vec::new();
        let mut gates: Vec<Gate> = Vec::new();
        let mut outputs = Vec::new();
        let mut wires: HashMap<String, Signal> = HashMap::new();
        wires.insert("0".into(), Signal::Const(false));
        wires.insert("1".into(), Signal::Const(true));

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: lineno + 1, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let resolve = |w: &str, wires: &HashMap<String, Signal>| {
                wires.get(w).copied().ok_or_else(|| err(format!("undefined wire {w:?}")))
            };
            match toks[0] {
                "input" if toks.len() == 2 => {
                    let name = toks[1].to_string();
                    if wires.contains_key(&name) {
                        return Err(err(format!("wire {name:?} defined twice")));
                    }
                    wires.insert(name.clone(), Signal::Input(inputs.len()));
                    inputs.push(name);
                }
                "gate" if toks.len() >= 3 => {
                    let id = toks[1].to_string();
                    if wires.contains_key(&id) {
                        return Err(err(format!("wire {id:?} defined twice")));
                    }
                    let kind: GateKind = toks[2].parse().map_err(|e: Error| err(e.to_string()))?;
                    let ins = toks[3..]
                        .iter()
                        .map(|w| resolve(w, &wires))
                        .collect::<Result<Vec<_>>>()?;
                    if !kind.arity_ok(ins.len()) {
                        return Err(err(format!("{kind} gate {id} with {} inputs", ins.len())));
                    }
                    wires.insert(id.clone(), Signal::Gate(gates.len()));
                    gates.push(Gate { id, kind, inputs: ins });
                }
                "output" if toks.len() == 4 && toks[2] == "=" => {
                    outputs.push((toks[1].to_string(), resolve(toks[3], &wires)?));
                }
                _ => return Err(err(format!("cannot parse {line:?}"))),
            }
        }
        Netlist::new(inputs, gates, outputs)
    }
}
