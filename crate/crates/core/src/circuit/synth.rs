use super::qm::{minimize, Implicant};
use super::{Gate, GateKind, Netlist, Signal};
use crate::cipher::SboxTable;
use crate::error::Result;

struct Builder {
    gates: Vec<Gate>,
}

impl Builder {
    fn push(&mut self, kind: GateKind, inputs: Vec<Signal>) -> Signal {
        let id = self.gates.len();
        self.gates.push(Gate { id: format!("g{id}"), kind, inputs });
        Signal::Gate(id)
    }

    fn or_tree(&mut self, mut terms: Vec<Signal>) -> Signal {
        if terms.is_empty() {
            return Signal::Const(false);
        }
        while terms.len() > 1 {
            let mut next = Vec::with_capacity(terms.len().div_ceil(2));
            for pair in terms.chunks(2) {
                next.push(match pair {
                    [a, b] => self.push(GateKind::Or, vec![*a, *b]),
                    [a] => *a,
                    _ => unreachable!(),
                });
            }
            terms = next;
        }
        terms[0]
    }
}

/// Two-level AND/OR netlist for a table, one minimized sum of products per
/// output bit. Inputs are `x0..`, outputs `y0..`, least significant first.
pub fn synthesize_sop(table: &SboxTable) -> Result<Netlist> {
    let n = table.width();
    let covers: Vec<Vec<Implicant>> = (0..n)
        .map(|bit| {
            let mins: Vec<u32> = (0..table.len() as u32)
                .filter(|&x| (table.get(x as u8) >> bit) & 1 == 1)
                .collect();
            minimize(n, &mins)
        })
        .collect();

    let mut b = Builder { gates: Vec::new() };
    let mut negated = vec![None; n as usize];
    for i in 0..n {
        let needed = covers.iter().flatten().any(|p| (p.mask >> i) & 1 == 0 && (p.value >> i) & 1 == 0);
        if needed {
            negated[i as usize] = Some(b.push(GateKind::Not, vec![Signal::Input(i as usize)]));
        }
    }

    let mut outputs = Vec::with_capacity(n as usize);
    for (bit, cover) in covers.iter().enumerate() {
        let mut terms = Vec::with_capacity(cover.len());
        let mut always = false;
        for p in cover {
            let lits: Vec<Signal> = (0..n as usize)
                .filter(|&i| (p.mask >> i) & 1 == 0)
                .map(|i| {
                    if (p.value >> i) & 1 == 1 {
                        Signal::Input(i)
                    } else {
                        negated[i].expect("complement gate created above")
                    }
                })
                .collect();
            if lits.is_empty() {
                always = true;
                break;
            }
            terms.push(b.push(GateKind::And, lits));
        }
        let out = if always { Signal::Const(true) } else { b.or_tree(terms) };
        outputs.push((format!("y{bit}"), out));
    }

    let inputs = (0..n).map(|i| format!("x{i}")).collect();
    Netlist::new(inputs, b.gates, outputs)
}
