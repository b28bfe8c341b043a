//! Random circuit documents for property checks and the `check` suites.
//!
//! Circuits are grown front to back: each new operation consumes some of the
//! currently open output ports ("live" wires) and may add new ones. A final
//! effect closes whatever is left, so every document is a closed circuit.

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use crate::dsl::{CircuitDocument, GateCall, OpDecl, PortAddr, WireDecl};
use crate::circuit::Direction;
use crate::linalg::{CMatrix, RMatrix};
use crate::random;
use crate::theory::{SystemKind, TheoryKind, TypeSpec};

/// Bound on the product of wire alphabets in classical documents, so the
/// enumeration oracle stays cheap.
pub const MAX_WIRE_SPACE: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub theory: TheoryKind,
    /// Upper bound on the number of operations (at least 2).
    pub max_ops: usize,
    /// Largest classical alphabet.
    pub max_n: usize,
    /// Largest number of simultaneously open wires.
    pub max_live: usize,
    /// Only norm-one preparations, norm-preserving transformations and
    /// complete measurements.
    pub normalized: bool,
    /// Allow closed ports.
    pub closures: bool,
    /// Allow `assign` lines and `outcomes=1`.
    pub decorations: bool,
}

impl GenConfig {
    pub fn new(theory: TheoryKind) -> Self {
        GenConfig {
            theory,
            max_ops: 6,
            max_n: 4,
            max_live: 4,
            normalized: false,
            closures: true,
            decorations: true,
        }
    }
}

#[derive(Debug, Clone)]
struct Live {
    op: String,
    port: usize,
    ty: String,
}

struct Gen<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    doc: CircuitDocument,
    live: Vec<Live>,
    names: Vec<String>,
    wire_space: u64,
}

fn op_names<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<String> {
    let mut letters: Vec<char> = ('A'..='Z').collect();
    letters.shuffle(rng);
    (0..count)
        .map(|i| {
            let l = letters[i % letters.len()];
            if i < letters.len() {
                l.to_string()
            } else {
                format!("{l}{}", i / letters.len())
            }
        })
        .collect()
}

fn rmatrix_json(m: &RMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
            .collect(),
    )
}

fn cmatrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn gate(name: &str, args: Vec<Value>) -> GateCall {
    GateCall {
        name: name.to_string(),
        args,
    }
}

impl<'a, R: Rng + ?Sized> Gen<'a, R> {
    fn spec(&self, ty: &str) -> TypeSpec {
        self.doc.types[ty]
    }

    fn dim(&self, tys: &[String]) -> usize {
        tys.iter().map(|t| self.spec(t).n).product()
    }

    fn all_classical(&self, tys: &[String]) -> bool {
        tys.iter().all(|t| self.spec(t).kind == SystemKind::Classical)
    }

    /// Scale applied to non-normalized processes.
    fn loss(&mut self) -> f64 {
        if self.cfg.normalized || self.rng.random_bool(0.5) {
            1.0
        } else {
            self.rng.random_range(0.5..1.0)
        }
    }

    fn outcome_count(&mut self) -> usize {
        self.rng.random_range(1..=3)
    }

    fn pick_type(&mut self) -> String {
        let names: Vec<String> = self
            .doc
            .types
            .iter()
            .filter(|(_, s)| (self.wire_space.saturating_mul(s.n as u64)) <= MAX_WIRE_SPACE)
            .map(|(k, _)| k.clone())
            .collect();
        if names.is_empty() {
            let smallest = self.doc.types.iter().min_by_key(|(_, s)| s.n).expect("types");
            return smallest.0.clone();
        }
        names[self.rng.random_range(0..names.len())].clone()
    }

    /// Take `count` live wires at random.
    fn take(&mut self, count: usize) -> Vec<Live> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count.min(self.live.len()) {
            let i = self.rng.random_range(0..self.live.len());
            out.push(self.live.remove(i));
        }
        out
    }

    /// Input ports for a new operation: live wires, or closed ports.
    fn inputs(&mut self, count: usize) -> Vec<Option<Live>> {
        let mut ins = Vec::new();
        for _ in 0..count {
            if self.cfg.closures && self.rng.random_bool(0.08) || self.live.is_empty() {
                ins.push(None);
            } else {
                ins.push(self.take(1).pop());
            }
        }
        ins
    }

    fn add(
        &mut self,
        ins: Vec<Option<Live>>,
        in_types: Vec<String>,
        out_types: Vec<String>,
        gate: GateCall,
        natural_outcomes: usize,
    ) {
        let id = self.names[self.doc.operations.len()].clone();
        for (port, input) in ins.iter().enumerate() {
            match input {
                Some(l) => {
                    let wid = format!("w{}", self.doc.wires.len());
                    self.doc.wires.insert(
                        wid,
                        WireDecl {
                            from: (l.op.clone(), l.port),
                            to: (id.clone(), port),
                        },
                    );
                }
                None => {
                    self.doc.closures.insert(PortAddr {
                        op: id.clone(),
                        direction: Direction::Input,
                        port,
                    });
                }
            }
        }
        for (port, ty) in out_types.iter().enumerate() {
            let room = self.live.len() < self.cfg.max_live;
            if !room || self.cfg.closures && self.rng.random_bool(0.08) {
                self.doc.closures.insert(PortAddr {
                    op: id.clone(),
                    direction: Direction::Output,
                    port,
                });
            } else {
                self.wire_space = self.wire_space.saturating_mul(self.spec(ty).n as u64);
                self.live.push(Live {
                    op: id.clone(),
                    port,
                    ty: ty.clone(),
                });
            }
        }
        let mut outcomes = None;
        if self.cfg.decorations && natural_outcomes > 1 {
            if self.rng.random_bool(0.15) {
                outcomes = Some(1);
            } else if self.rng.random_bool(0.2) {
                let tok = self.rng.random_range(0..natural_outcomes).to_string();
                self.doc.assign.insert(id.clone(), tok);
            }
        }
        self.doc.operations.insert(
            id,
            OpDecl {
                inputs: in_types,
                outputs: out_types,
                gate,
                outcomes,
            },
        );
    }

    fn in_types(&mut self, ins: &[Option<Live>]) -> Vec<String> {
        ins.iter()
            .map(|l| match l {
                Some(l) => l.ty.clone(),
                None => self.pick_type(),
            })
            .collect()
    }

    fn room(&self) -> usize {
        self.cfg.max_live.saturating_sub(self.live.len())
    }

    fn preparation(&mut self) {
        let n_out = if self.room() >= 2 && self.rng.random_bool(0.5) { 2 } else { 1 };
        let outs: Vec<String> = (0..n_out).map(|_| self.pick_type()).collect();
        let (g, k) = self.process(&[], &outs);
        self.add(Vec::new(), Vec::new(), outs, g, k);
    }

    fn transformation(&mut self) {
        let n_in = if self.live.len() >= 2 && self.rng.random_bool(0.4) { 2 } else { 1 };
        let ins = self.inputs(n_in);
        let in_types = self.in_types(&ins);
        let room = self.room() + ins.iter().filter(|l| l.is_some()).count();
        let outs: Vec<String> = match self.rng.random_range(0..5) {
            0 | 1 => in_types.clone(),
            2 if in_types.len() == 2 => vec![self.pick_type()],
            _ if room >= 2 => vec![self.pick_type(), self.pick_type()],
            _ => vec![self.pick_type()],
        };
        let (g, k) = self.process(&in_types, &outs);
        self.add(ins, in_types, outs, g, k);
    }

    fn effect(&mut self, all: bool) {
        let n_in = if all {
            self.live.len()
        } else if self.live.len() >= 2 && self.rng.random_bool(0.4) {
            2
        } else {
            1
        };
        let ins: Vec<Option<Live>> = if all {
            self.take(n_in).into_iter().map(Some).collect()
        } else {
            self.inputs(n_in)
        };
        let in_types = self.in_types(&ins);
        let (g, k) = self.process(&in_types, &[]);
        self.add(ins, in_types, Vec::new(), g, k);
    }

    /// A gate for the given port types and its natural outcome count.
    fn process(&mut self, ins: &[String], outs: &[String]) -> (GateCall, usize) {
        if self.all_classical(ins) && self.all_classical(outs) {
            self.classical_process(ins, outs)
        } else {
            self.quantum_process(ins, outs)
        }
    }

    fn classical_process(&mut self, ins: &[String], outs: &[String]) -> (GateCall, usize) {
        let (di, dout) = (self.dim(ins), self.dim(outs));
        let same = ins == outs && ins.len() == 1;
        let choice = self.rng.random_range(0..4);
        if outs.len() == 1 && ins.len() <= 1 && choice == 0 {
            let i = self.rng.random_range(0..dout);
            return (gate("set", vec![json!(i)]), 1);
        }
        if same && choice == 1 {
            let p: f64 = self.rng.random();
            return (gate("flip", vec![json!(p)]), 1);
        }
        if ins.len() == 1 && (outs.is_empty() || same) && choice == 2 {
            return (gate("readout", vec![]), di);
        }
        if ins.is_empty() && choice == 3 {
            let v = random::distribution(self.rng, dout);
            return (gate("dist", vec![json!(v)]), 1);
        }
        if outs.is_empty() && choice == 3 {
            return (gate("trace", vec![]), 1);
        }
        let k = self.outcome_count();
        let m = random::stochastic(self.rng, dout, di) * self.loss();
        let parts = random::split_matrix(self.rng, &m, k);
        (gate("matrix", parts.iter().map(rmatrix_json).collect()), k)
    }

    fn quantum_process(&mut self, ins: &[String], outs: &[String]) -> (GateCall, usize) {
        let (di, dout) = (self.dim(ins), self.dim(outs));
        let all_quantum = ins
            .iter()
            .chain(outs)
            .all(|t| self.spec(t).kind == SystemKind::Quantum);
        let same = ins == outs;
        let single = ins.len() == 1;
        let choice = self.rng.random_range(0..6);
        if ins.is_empty() && all_quantum {
            match choice {
                0 | 1 => {
                    let v = random::pure_state(self.rng, dout);
                    let arg = Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect());
                    return (gate("prep_ket", vec![arg]), 1);
                }
                2 => {
                    let rho = random::density(self.rng, dout) * crate::linalg::c(self.loss(), 0.0);
                    return (gate("prep_density", vec![cmatrix_json(&rho)]), 1);
                }
                _ => {}
            }
        }
        if all_quantum && same && !ins.is_empty() {
            match choice {
                0 => {
                    let u = random::unitary(self.rng, di);
                    return (gate("unitary", vec![cmatrix_json(&u)]), 1);
                }
                1 if single && self.spec(&ins[0]).n == 2 => {
                    let g = ["x", "z", "h"][self.rng.random_range(0..3)];
                    return (gate(g, vec![]), 1);
                }
                1 if ins.len() == 2 && self.spec(&ins[0]) == self.spec(&ins[1]) => {
                    return (gate("cnot", vec![]), 1);
                }
                2 => {
                    let l: f64 = self.rng.random();
                    return (gate("depolarize", vec![json!(l)]), 1);
                }
                _ => {}
            }
        }
        let single_in_quantum = single && self.spec(&ins[0]).kind == SystemKind::Quantum;
        if single_in_quantum && choice == 3 {
            let n = self.spec(&ins[0]).n;
            if outs.is_empty() || (outs.len() == 1 && self.spec(&outs[0]).n == n) {
                return (gate("measure_z", vec![]), n);
            }
        }
        if !ins.is_empty() && outs.is_empty() {
            if choice == 4 {
                return (gate("trace", vec![]), 1);
            }
            let k = self.outcome_count();
            let s = self.loss();
            let es: Vec<Value> = random::povm(self.rng, di, k)
                .iter()
                .map(|e| cmatrix_json(&(e * crate::linalg::c(s, 0.0))))
                .collect();
            return (gate("povm", vec![Value::Array(es)]), k);
        }
        let k = self.outcome_count();
        let s = self.loss().sqrt();
        // The sampler needs at least as many Kraus rows as input dimensions.
        let per = self.rng.random_range(1..=2).max(di.div_ceil(dout * k));
        let lists = random::instrument(self.rng, di, dout, k, per);
        let scaled = |ks: &Vec<CMatrix>| {
            Value::Array(ks.iter().map(|m| cmatrix_json(&(m * crate::linalg::c(s, 0.0)))).collect())
        };
        if k == 1 {
            (gate("kraus", vec![scaled(&lists[0])]), 1)
        } else {
            (
                gate("instrument", vec![Value::Array(lists.iter().map(scaled).collect())]),
                k,
            )
        }
    }
}

fn declare_types(doc: &mut CircuitDocument, cfg: &GenConfig) {
    match cfg.theory {
        TheoryKind::Classical => {
            for n in 2..=cfg.max_n.max(2) {
                doc.types.insert(format!("c{n}"), TypeSpec::classical(n));
            }
        }
        TheoryKind::Quantum => {
            doc.types.insert("q".into(), TypeSpec::quantum(2));
        }
        TheoryKind::Hybrid => {
            doc.types.insert("q".into(), TypeSpec::quantum(2));
            doc.types.insert("c".into(), TypeSpec::classical(2));
        }
    }
}

/// A random closed circuit document with at most `cfg.max_ops` operations.
pub fn random_document<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> CircuitDocument {
    let max_ops = cfg.max_ops.max(2);
    let mut doc = CircuitDocument::new(cfg.theory);
    declare_types(&mut doc, cfg);
    let target = rng.random_range(2..=max_ops);
    let names = op_names(rng, max_ops);
    let mut g = Gen {
        rng,
        cfg,
        doc,
        live: Vec::new(),
        names,
        wire_space: 1,
    };
    while g.doc.operations.len() + 1 < target {
        if g.live.is_empty() {
            g.preparation();
            continue;
        }
        let r: f64 = g.rng.random();
        if r < 0.25 && g.room() > 0 {
            g.preparation();
        } else if r < 0.8 {
            g.transformation();
        } else {
            g.effect(false);
        }
    }
    if !g.live.is_empty() {
        g.effect(true);
    }
    g.doc
}

/// The theory used for the `i`-th circuit of a mixed batch.
pub fn mixed_theory(i: usize) -> TheoryKind {
    [TheoryKind::Classical, TheoryKind::Quantum, TheoryKind::Hybrid][i % 3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{compile, parse_circuit, serialize_circuit};

    #[test]
    fn generated_documents_compile() {
        let mut rng = random::seeded(3);
        for i in 0..150 {
            let mut cfg = GenConfig::new(mixed_theory(i));
            cfg.max_ops = 8;
            let doc = random_document(&mut rng, &cfg);
            assert!(doc.operations.len() <= 8);
            let text = serialize_circuit(&doc);
            let c = compile(&doc).unwrap_or_else(|d| panic!("{text}\n{d:?}"));
            assert!(c.circuit.is_closed());
            assert_eq!(parse_circuit(&text).unwrap(), doc);
        }
    }

    #[test]
    fn classical_wire_space_is_bounded() {
        let mut rng = random::seeded(4);
        let mut cfg = GenConfig::new(TheoryKind::Classical);
        cfg.max_ops = 6;
        for _ in 0..100 {
            let doc = random_document(&mut rng, &cfg);
            let space: u64 = doc
                .wires
                .values()
                .map(|w| doc.types[&doc.operations[&w.from.0].outputs[w.from.1]].n as u64)
                .product();
            assert!(space <= MAX_WIRE_SPACE);
        }
    }
}
