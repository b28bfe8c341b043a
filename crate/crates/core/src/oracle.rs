//! Reference evaluators that share nothing with the transfer-matrix engine
//! beyond the raw per-outcome processes: exhaustive enumeration for
//! classical circuits and a density-matrix simulator for quantum and hybrid
//! ones.

use std::collections::{BTreeMap, BTreeSet};

use crate::circuit::{Circuit, Direction, OpId, WireId};
use crate::engine::{EngineError, OutcomeAssignment, Result};
use crate::linalg::CMatrix;
use crate::theory::{Process, StandardTheory, SystemKind, TheoryKind};

/// Configurations beyond this many are not enumerated.
pub const MAX_CONFIGURATIONS: u64 = 1 << 22;
/// Largest live Hilbert-space dimension the simulator accepts.
pub const MAX_SIM_DIM: usize = 256;

fn process_of<'a>(
    processes: &'a BTreeMap<OpId, Vec<Process>>,
    op: &OpId,
    outcome: usize,
) -> Result<&'a Process> {
    processes
        .get(op)
        .and_then(|ps| ps.get(outcome))
        .ok_or_else(|| EngineError::InvalidArgument(format!("no process for `{op}` outcome {outcome}")))
}

/// Probability by summing over every joint value of every wire.
pub fn classical_probability(
    circuit: &Circuit,
    theory: &StandardTheory,
    processes: &BTreeMap<OpId, Vec<Process>>,
    assignment: &OutcomeAssignment,
) -> Result<f64> {
    circuit.ensure_valid_closed()?;
    let outcomes = assignment.resolve(circuit, None)?;
    let wires: Vec<WireId> = circuit.wire_ids().cloned().collect();
    let index: BTreeMap<&WireId, usize> = wires.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut radix = Vec::with_capacity(wires.len());
    for w in &wires {
        let spec = theory.spec(&circuit.wire(w).expect("listed").wire_type)?;
        if spec.kind != SystemKind::Classical {
            return Err(EngineError::InvalidArgument(format!("wire `{w}` is not classical")));
        }
        radix.push(spec.n);
    }
    let total = radix.iter().fold(1u64, |a, &n| a.saturating_mul(n as u64));
    if total > MAX_CONFIGURATIONS {
        return Err(EngineError::TooLarge(format!("{total} wire configurations")));
    }

    struct Local<'a> {
        matrix: &'a nalgebra::DMatrix<f64>,
        in_n: Vec<usize>,
        in_wire: Vec<Option<usize>>,
        out_n: Vec<usize>,
        out_wire: Vec<Option<usize>>,
    }
    let mut locals = Vec::new();
    for node in circuit.operations() {
        let matrix = match process_of(processes, &node.id, outcomes[&node.id])? {
            Process::Stochastic(m) | Process::Transfer(m) => m,
            Process::Channel(_) => {
                return Err(EngineError::InvalidArgument(format!(
                    "`{}` is not a classical process",
                    node.id
                )))
            }
        };
        let n_of = |d: Direction| -> Result<Vec<usize>> {
            node.ports(d)
                .iter()
                .map(|p| Ok(theory.spec(&p.wire_type)?.n))
                .collect()
        };
        let at = |d: Direction| -> Vec<Option<usize>> {
            circuit
                .port_wires(&node.id, d)
                .into_iter()
                .map(|w| w.map(|w| index[&w]))
                .collect()
        };
        let (in_n, out_n) = (n_of(Direction::Input)?, n_of(Direction::Output)?);
        let rows: usize = out_n.iter().product();
        let cols: usize = in_n.iter().product();
        if matrix.shape() != (rows, cols) {
            return Err(EngineError::Shape(format!("process of `{}`", node.id)));
        }
        locals.push(Local {
            matrix,
            in_n,
            in_wire: at(Direction::Input),
            out_n,
            out_wire: at(Direction::Output),
        });
    }

    let mut values = vec![0usize; wires.len()];
    let mut sum = 0.0;
    for _ in 0..total {
        let mut product = 1.0;
        for l in &locals {
            let mut col = 0;
            for (n, w) in l.in_n.iter().zip(&l.in_wire) {
                col = col * n + w.map_or(0, |i| values[i]);
            }
            // Closed outputs are summed over.
            let closed: Vec<usize> = (0..l.out_n.len()).filter(|&p| l.out_wire[p].is_none()).collect();
            let free: usize = closed.iter().map(|&p| l.out_n[p]).product();
            let mut local = 0.0;
            for mut k in 0..free {
                let mut digits = vec![0; l.out_n.len()];
                for &p in closed.iter().rev() {
                    digits[p] = k % l.out_n[p];
                    k /= l.out_n[p];
                }
                let mut row = 0;
                for (p, n) in l.out_n.iter().enumerate() {
                    let d = l.out_wire[p].map_or(digits[p], |i| values[i]);
                    row = row * n + d;
                }
                local += l.matrix[(row, col)];
            }
            product *= local;
            if product == 0.0 {
                break;
            }
        }
        sum += product;
        for i in (0..values.len()).rev() {
            values[i] += 1;
            if values[i] < radix[i] {
                break;
            }
            values[i] = 0;
        }
    }
    Ok(sum)
}

/// Operations in dependency order, smallest id first among the ready ones.
fn topological_order(circuit: &Circuit) -> Vec<OpId> {
    let mut done: BTreeSet<OpId> = BTreeSet::new();
    let mut order = Vec::new();
    let total = circuit.operation_count();
    while order.len() < total {
        let next = circuit
            .operations()
            .find(|n| {
                !done.contains(&n.id)
                    && circuit
                        .wires()
                        .filter(|w| w.target.op == n.id)
                        .all(|w| done.contains(&w.source.op))
            })
            .map(|n| n.id.clone());
        match next {
            Some(id) => {
                done.insert(id.clone());
                order.push(id);
            }
            None => break,
        }
    }
    order
}

/// Reorder tensor factors: new factor `i` is old factor `perm[i]`.
fn permute(rho: &CMatrix, dims: &[usize], perm: &[usize]) -> CMatrix {
    let d: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let old_index = |new: usize| {
        let mut digits = vec![0; dims.len()];
        let mut rem = new;
        for i in (0..new_dims.len()).rev() {
            digits[perm[i]] = rem % new_dims[i];
            rem /= new_dims[i];
        }
        digits.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x)
    };
    let map: Vec<usize> = (0..d).map(old_index).collect();
    CMatrix::from_fn(d, d, |r, c| rho[(map[r], map[c])])
}

/// Apply a Choi-represented map to the leading factor of dimension `d_in`.
fn apply_leading(choi: &CMatrix, d_in: usize, d_out: usize, rho: &CMatrix) -> CMatrix {
    let rest = rho.nrows() / d_in;
    let mut out = CMatrix::zeros(d_out * rest, d_out * rest);
    for i in 0..d_in {
        for j in 0..d_in {
            let block = choi.view((i * d_out, j * d_out), (d_out, d_out));
            let sub = rho.view((i * rest, j * rest), (rest, rest));
            if sub.iter().all(|z| z.norm() == 0.0) {
                continue;
            }
            for a in 0..d_out {
                for b in 0..d_out {
                    let w = block[(a, b)];
                    if w.norm() == 0.0 {
                        continue;
                    }
                    let mut target = out.view_mut((a * rest, b * rest), (rest, rest));
                    target += sub * w;
                }
            }
        }
    }
    out
}

/// Trace out the trailing factor of dimension `d_trace`.
fn trace_trailing(rho: &CMatrix, d_trace: usize) -> CMatrix {
    let keep = rho.nrows() / d_trace;
    CMatrix::from_fn(keep, keep, |r, c| {
        (0..d_trace).map(|k| rho[(r * d_trace + k, c * d_trace + k)]).sum()
    })
}

/// Zero the coherences of factor `pos`.
fn dephase_factor(rho: &mut CMatrix, dims: &[usize], pos: usize) {
    let right: usize = dims[pos + 1..].iter().product();
    let n = dims[pos];
    let d = rho.nrows();
    for r in 0..d {
        for c in 0..d {
            if (r / right) % n != (c / right) % n {
                rho[(r, c)] = num_complex::Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// Probability from a density-matrix simulation over the live wires.
pub fn density_matrix_probability(
    circuit: &Circuit,
    theory: &StandardTheory,
    processes: &BTreeMap<OpId, Vec<Process>>,
    assignment: &OutcomeAssignment,
) -> Result<f64> {
    circuit.ensure_valid_closed()?;
    let outcomes = assignment.resolve(circuit, None)?;
    let mut live: Vec<WireId> = Vec::new();
    let mut dims: Vec<usize> = Vec::new();
    let mut rho = CMatrix::from_element(1, 1, num_complex::Complex64::new(1.0, 0.0));

    for op in topological_order(circuit) {
        let node = circuit.operation(&op).expect("ordered");
        let process = process_of(processes, &op, outcomes[&op])?;
        let map = theory.channel_of(&node.input_type(), &node.output_type(), process)?;
        let port_n = |d: Direction| -> Result<Vec<usize>> {
            node.ports(d)
                .iter()
                .map(|p| Ok(theory.spec(&p.wire_type)?.n))
                .collect()
        };
        let (in_n, out_n) = (port_n(Direction::Input)?, port_n(Direction::Output)?);
        let in_slots = circuit.port_wires(&op, Direction::Input);
        let out_slots = circuit.port_wires(&op, Direction::Output);

        // Factor order: [open inputs in port order, rest, closed inputs].
        let open_in: Vec<usize> = in_slots
            .iter()
            .flatten()
            .map(|w| live.iter().position(|x| x == w).expect("inputs are live"))
            .collect();
        let rest: Vec<usize> = (0..live.len()).filter(|i| !open_in.contains(i)).collect();
        let perm: Vec<usize> = open_in.iter().chain(&rest).cloned().collect();
        rho = permute(&rho, &dims, &perm);
        let mut order_dims: Vec<usize> = perm.iter().map(|&i| dims[i]).collect();
        let rest_wires: Vec<WireId> = rest.iter().map(|&i| live[i].clone()).collect();
        let rest_dims: Vec<usize> = rest.iter().map(|&i| dims[i]).collect();
        for (p, slot) in in_slots.iter().enumerate() {
            if slot.is_none() {
                let mut zero = CMatrix::zeros(in_n[p], in_n[p]);
                zero[(0, 0)] = num_complex::Complex64::new(1.0, 0.0);
                rho = rho.kronecker(&zero);
                order_dims.push(in_n[p]);
            }
        }
        // Bring all input ports to the front in port order.
        let n_open = open_in.len();
        let mut port_perm = Vec::with_capacity(order_dims.len());
        let (mut next_open, mut next_closed) = (0, n_open + rest.len());
        for slot in &in_slots {
            if slot.is_some() {
                port_perm.push(next_open);
                next_open += 1;
            } else {
                port_perm.push(next_closed);
                next_closed += 1;
            }
        }
        port_perm.extend(n_open..n_open + rest.len());
        rho = permute(&rho, &order_dims, &port_perm);

        let (d_in, d_out): (usize, usize) = (in_n.iter().product(), out_n.iter().product());
        let d_rest: usize = rest_dims.iter().product();
        if d_out * d_rest > MAX_SIM_DIM {
            return Err(EngineError::TooLarge(format!(
                "simulated dimension {}",
                d_out * d_rest
            )));
        }
        rho = apply_leading(map.choi(), d_in, d_out, &rho);

        // Factors: [output ports in port order, rest].
        let mut cur_dims: Vec<usize> = out_n.iter().cloned().chain(rest_dims.iter().cloned()).collect();
        for (p, port) in node.outputs.iter().enumerate() {
            if theory.spec(&port.wire_type)?.kind == SystemKind::Classical {
                dephase_factor(&mut rho, &cur_dims, p);
            }
        }
        let closed_out: Vec<usize> = (0..out_slots.len()).filter(|&p| out_slots[p].is_none()).collect();
        if !closed_out.is_empty() {
            let kept: Vec<usize> = (0..cur_dims.len()).filter(|i| !closed_out.contains(i)).collect();
            let perm: Vec<usize> = kept.iter().chain(&closed_out).cloned().collect();
            rho = permute(&rho, &cur_dims, &perm);
            let traced: usize = closed_out.iter().map(|&p| cur_dims[p]).product();
            rho = trace_trailing(&rho, traced);
            cur_dims = kept.iter().map(|&i| cur_dims[i]).collect();
        }
        live = out_slots.iter().flatten().cloned().chain(rest_wires).collect();
        dims = cur_dims;
    }
    if !live.is_empty() {
        return Err(EngineError::InvalidArgument("wires left unconsumed".into()));
    }
    Ok(rho[(0, 0)].re)
}

/// The reference evaluator appropriate to the theory.
pub fn reference_probability(
    circuit: &Circuit,
    theory: &StandardTheory,
    processes: &BTreeMap<OpId, Vec<Process>>,
    assignment: &OutcomeAssignment,
) -> Result<f64> {
    match theory.kind() {
        TheoryKind::Classical => classical_probability(circuit, theory, processes, assignment),
        TheoryKind::Quantum | TheoryKind::Hybrid => {
            density_matrix_probability(circuit, theory, processes, assignment)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::SystemType;
    use crate::linalg::RMatrix;
    use serde_json::json;

    fn gate(
        t: &StandardTheory,
        name: &str,
        args: serde_json::Value,
        ins: &[&str],
        outs: &[&str],
    ) -> Vec<Process> {
        t.gate_processes(
            name,
            args.as_array().unwrap(),
            &SystemType::from_labels(ins),
            &SystemType::from_labels(outs),
            None,
        )
        .unwrap()
    }

    #[test]
    fn classical_enumeration() {
        let t = StandardTheory::classical(&[("bit", 2)]).unwrap();
        let c = Circuit::builder()
            .operation("P", &[], &["bit"], 1)
            .operation("F", &["bit"], &["bit"], 1)
            .operation("M", &["bit"], &[], 2)
            .wire("a", ("P", 0), ("F", 0))
            .wire("b", ("F", 0), ("M", 0))
            .build()
            .unwrap();
        let mut ps = BTreeMap::new();
        ps.insert(OpId::new("P"), vec![Process::Stochastic(RMatrix::from_column_slice(2, 1, &[0.2, 0.8]))]);
        ps.insert(OpId::new("F"), gate(&t, "flip", json!([0.1]), &["bit"], &["bit"]));
        ps.insert(OpId::new("M"), gate(&t, "readout", json!([]), &["bit"], &[]));
        let p = classical_probability(&c, &t, &ps, &OutcomeAssignment::new().with("M", "1")).unwrap();
        assert!((p - (0.8 * 0.9 + 0.2 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn bell_by_simulation() {
        let t = StandardTheory::quantum(&[("q", 2)]).unwrap();
        let c = Circuit::builder()
            .operation("P", &[], &["q", "q"], 1)
            .operation("H", &["q"], &["q"], 1)
            .operation("CX", &["q", "q"], &["q", "q"], 1)
            .operation("M0", &["q"], &[], 2)
            .operation("M1", &["q"], &[], 2)
            .wire("a", ("P", 0), ("H", 0))
            .wire("b", ("H", 0), ("CX", 0))
            .wire("c", ("P", 1), ("CX", 1))
            .wire("d", ("CX", 0), ("M1", 0))
            .wire("e", ("CX", 1), ("M0", 0))
            .build()
            .unwrap();
        let mut ps = BTreeMap::new();
        ps.insert(OpId::new("P"), gate(&t, "prep_ket", json!([[1, 0, 0, 0]]), &[], &["q", "q"]));
        ps.insert(OpId::new("H"), gate(&t, "h", json!([]), &["q"], &["q"]));
        ps.insert(OpId::new("CX"), gate(&t, "cnot", json!([]), &["q", "q"], &["q", "q"]));
        ps.insert(OpId::new("M0"), gate(&t, "measure_z", json!([]), &["q"], &[]));
        ps.insert(OpId::new("M1"), gate(&t, "measure_z", json!([]), &["q"], &[]));
        let p = |s: &str| {
            density_matrix_probability(&c, &t, &ps, &OutcomeAssignment::parse(s).unwrap()).unwrap()
        };
        assert!((p("M0=0,M1=0") - 0.5).abs() < 1e-12);
        assert!(p("M0=0,M1=1").abs() < 1e-12);
        assert!((p("M0=1,M1=1") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_ports_in_simulation() {
        // A closed input starts in |0>, X flips it; the closed output of the
        // copy is traced.
        let t = StandardTheory::quantum(&[("q", 2)]).unwrap();
        let c = Circuit::builder()
            .operation("X", &["q"], &["q"], 1)
            .operation("M", &["q"], &[], 2)
            .wire("a", ("X", 0), ("M", 0))
            .close("X", Direction::Input, 0)
            .build()
            .unwrap();
        let mut ps = BTreeMap::new();
        ps.insert(OpId::new("X"), gate(&t, "x", json!([]), &["q"], &["q"]));
        ps.insert(OpId::new("M"), gate(&t, "measure_z", json!([]), &["q"], &[]));
        let p = density_matrix_probability(&c, &t, &ps, &OutcomeAssignment::parse("M=1").unwrap())
            .unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn permutation_helper() {
        let a = CMatrix::from_fn(2, 2, |r, c| num_complex::Complex64::new((r * 2 + c) as f64, 0.0));
        let b = CMatrix::from_fn(3, 3, |r, c| num_complex::Complex64::new((r * 3 + c) as f64, 1.0));
        let ab = a.kronecker(&b);
        let ba = b.kronecker(&a);
        assert_eq!(permute(&ab, &[2, 3], &[1, 0]), ba);
    }
}
