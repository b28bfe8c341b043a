//! Circuit evaluation: per-operation transfer matrices, layer by layer
//! along a foliation, and fragment sweeps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    coarse_grain, require_local, wire_permutation_matrix, EngineError, MatrixLabel,
    Result, TransferMatrix,
};
use crate::circuit::{
    complete_foliation, layer_decomposition, Circuit, CircuitBuilder, Direction, Foliation, Layer,
    OpId, OperationNode, SystemType, WireId,
};
use crate::linalg::{factor_permutation, kron_all, RMatrix, PROB_TOL};
use crate::theory::{Process, StandardTheory, Theory};

/// Largest intermediate (rows x columns) held during evaluation.
pub const MAX_STATE_ENTRIES: usize = 1 << 24;

/// Matrices of one operation, one per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationModel {
    /// Over open ports only; closed outputs are traced and closed inputs
    /// receive the theory's closed-input state.
    pub matrices: Vec<TransferMatrix>,
    /// Raw processes over all ports, when the model was built from them.
    pub processes: Option<Vec<Process>>,
}

/// A closed circuit with a transfer matrix for every operation outcome.
#[derive(Debug, Clone)]
pub struct CircuitModel {
    circuit: Circuit,
    operations: BTreeMap<OpId, OperationModel>,
}

fn open_type(node: &OperationNode, direction: Direction) -> SystemType {
    node.ports(direction)
        .iter()
        .filter(|p| p.is_open())
        .map(|p| p.wire_type.clone())
        .collect()
}

/// Fold closed ports into a matrix given over all ports.
fn fold_closures(
    node: &OperationNode,
    theory: &dyn Theory,
    z: &TransferMatrix,
) -> Result<TransferMatrix> {
    let closed = |d| node.ports(d).iter().any(|p| !p.is_open());
    if !closed(Direction::Input) && !closed(Direction::Output) {
        return Ok(z.clone());
    }
    let mut pre = Vec::with_capacity(node.inputs.len());
    for port in &node.inputs {
        let single = SystemType::single(port.wire_type.clone());
        pre.push(if port.is_open() {
            theory.identity(&single)?.entries
        } else {
            let s = theory.closed_input_state(&port.wire_type)?;
            RMatrix::from_column_slice(s.len(), 1, s.entries.as_slice())
        });
    }
    let mut post = Vec::with_capacity(node.outputs.len());
    for port in &node.outputs {
        let single = SystemType::single(port.wire_type.clone());
        post.push(if port.is_open() {
            theory.identity(&single)?.entries
        } else {
            let r = theory.trace_effect(&single)?;
            RMatrix::from_row_slice(1, r.entries.len(), r.entries.as_slice())
        });
    }
    let entries = kron_all(&post) * &z.entries * kron_all(&pre);
    Ok(TransferMatrix::new(
        open_type(node, Direction::Input),
        open_type(node, Direction::Output),
        entries,
        z.label.clone(),
    ))
}

impl CircuitModel {
    /// Build from matrices given over all ports of each operation.
    pub fn from_matrices(
        circuit: Circuit,
        theory: &dyn Theory,
        raw: BTreeMap<OpId, Vec<TransferMatrix>>,
    ) -> Result<Self> {
        circuit.ensure_valid_closed()?;
        let mut operations = BTreeMap::new();
        for node in circuit.operations() {
            let zs = raw.get(&node.id).ok_or_else(|| {
                EngineError::InvalidArgument(format!("no matrices for operation `{}`", node.id))
            })?;
            operations.insert(node.id.clone(), Self::fold_operation(node, theory, zs, None)?);
        }
        if let Some(extra) = raw.keys().find(|id| circuit.operation(id).is_none()) {
            return Err(EngineError::InvalidArgument(format!(
                "matrices for unknown operation `{extra}`"
            )));
        }
        Ok(CircuitModel {
            circuit,
            operations,
        })
    }

    /// Build from raw per-outcome processes.
    pub fn from_processes(
        circuit: Circuit,
        theory: &StandardTheory,
        processes: BTreeMap<OpId, Vec<Process>>,
    ) -> Result<Self> {
        circuit.ensure_valid_closed()?;
        let mut operations = BTreeMap::new();
        for node in circuit.operations() {
            let ps = processes.get(&node.id).ok_or_else(|| {
                EngineError::InvalidArgument(format!("no processes for operation `{}`", node.id))
            })?;
            let (input, output) = (node.input_type(), node.output_type());
            let zs = ps
                .iter()
                .zip(&node.outcomes)
                .map(|(p, token)| {
                    Ok(TransferMatrix::new(
                        input.clone(),
                        output.clone(),
                        theory.transfer_of(&input, &output, p)?,
                        MatrixLabel::Fragment {
                            fragment: node.id.to_string(),
                            setting: node.setting.clone(),
                            outcomes: vec![token.clone()],
                        },
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            if ps.len() != node.outcomes.len() {
                return Err(EngineError::InvalidArgument(format!(
                    "operation `{}` has {} outcomes but {} processes",
                    node.id,
                    node.outcomes.len(),
                    ps.len()
                )));
            }
            operations.insert(
                node.id.clone(),
                Self::fold_operation(node, theory, &zs, Some(ps.clone()))?,
            );
        }
        Ok(CircuitModel {
            circuit,
            operations,
        })
    }

    fn fold_operation(
        node: &OperationNode,
        theory: &dyn Theory,
        zs: &[TransferMatrix],
        processes: Option<Vec<Process>>,
    ) -> Result<OperationModel> {
        if zs.len() != node.outcomes.len() {
            return Err(EngineError::InvalidArgument(format!(
                "operation `{}` has {} outcomes but {} matrices",
                node.id,
                node.outcomes.len(),
                zs.len()
            )));
        }
        let (input, output) = (node.input_type(), node.output_type());
        let matrices = zs
            .iter()
            .map(|z| {
                if z.input != input || z.output != output {
                    return Err(EngineError::Shape(format!(
                        "operation `{}` is {} -> {}, matrix is {} -> {}",
                        node.id, input, output, z.input, z.output
                    )));
                }
                z.check_shape(theory)?;
                fold_closures(node, theory, z)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OperationModel {
            matrices,
            processes,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn operation(&self, id: &OpId) -> Option<&OperationModel> {
        self.operations.get(id)
    }

    pub fn operations(&self) -> impl Iterator<Item = (&OpId, &OperationModel)> {
        self.operations.iter()
    }

    /// The effective matrix of `op` for outcome index `outcome`.
    pub fn matrix(&self, op: &OpId, outcome: usize) -> Result<&TransferMatrix> {
        self.operations
            .get(op)
            .and_then(|m| m.matrices.get(outcome))
            .ok_or_else(|| EngineError::Assignment(format!("no outcome {outcome} for `{op}`")))
    }

    /// Every joint outcome, operations in id order, last varying fastest.
    pub fn assignments(&self) -> Assignments {
        let ops: Vec<(OpId, Vec<String>)> = self
            .circuit
            .operations()
            .map(|n| (n.id.clone(), n.outcomes.clone()))
            .collect();
        Assignments {
            counters: vec![0; ops.len()],
            ops,
            done: false,
        }
    }

    /// Number of joint outcomes, saturating.
    pub fn assignment_count(&self) -> u128 {
        self.circuit
            .operations()
            .fold(1u128, |acc, n| acc.saturating_mul(n.outcomes.len() as u128))
    }

    /// Side-by-side composition; ids of `other` get `prefix`.
    pub fn disjoint_union(&self, other: &CircuitModel, prefix: &str) -> Result<CircuitModel> {
        let circuit = self.circuit.disjoint_union(&other.circuit, prefix);
        let mut operations = self.operations.clone();
        for (id, m) in &other.operations {
            let id = OpId::new(format!("{prefix}{id}"));
            if operations.insert(id.clone(), m.clone()).is_some() {
                return Err(EngineError::InvalidArgument(format!(
                    "operation `{id}` appears on both sides"
                )));
            }
        }
        circuit.ensure_valid_closed()?;
        Ok(CircuitModel {
            circuit,
            operations,
        })
    }

    /// Every operation with its outcomes merged into the single outcome `0`.
    pub fn coarse_grained(&self) -> Result<CircuitModel> {
        let mut builder = CircuitBuilder::default();
        for node in self.circuit.operations() {
            let mut node = node.clone();
            node.outcomes = vec!["0".to_string()];
            builder = builder.add_operation(node);
        }
        for wire in self.circuit.wires() {
            builder = builder.add_wire(wire.clone());
        }
        let circuit = builder.build()?;
        let mut operations = BTreeMap::new();
        for (id, m) in &self.operations {
            let processes = match &m.processes {
                Some(ps) => Some(vec![Process::sum(ps)?]),
                None => None,
            };
            operations.insert(
                id.clone(),
                OperationModel {
                    matrices: vec![coarse_grain(&m.matrices)?],
                    processes,
                },
            );
        }
        Ok(CircuitModel {
            circuit,
            operations,
        })
    }
}

/// Iterator over joint outcomes of a model.
#[derive(Debug, Clone)]
pub struct Assignments {
    ops: Vec<(OpId, Vec<String>)>,
    counters: Vec<usize>,
    done: bool,
}

impl Iterator for Assignments {
    type Item = OutcomeAssignment;

    fn next(&mut self) -> Option<OutcomeAssignment> {
        if self.done {
            return None;
        }
        let current = OutcomeAssignment(
            self.ops
                .iter()
                .zip(&self.counters)
                .map(|((id, tokens), &i)| (id.clone(), tokens[i].clone()))
                .collect(),
        );
        self.done = true;
        for (i, (_, tokens)) in self.ops.iter().enumerate().rev() {
            self.counters[i] += 1;
            if self.counters[i] < tokens.len() {
                self.done = false;
                break;
            }
            self.counters[i] = 0;
        }
        Some(current)
    }
}

/// Outcome token per operation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeAssignment(pub BTreeMap<OpId, String>);

impl OutcomeAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, op: &str, token: &str) -> Self {
        self.0.insert(OpId::new(op), token.to_string());
        self
    }

    pub fn set(&mut self, op: OpId, token: String) {
        self.0.insert(op, token);
    }

    pub fn get(&self, op: &OpId) -> Option<&str> {
        self.0.get(op).map(String::as_str)
    }

    /// Parse `A=0,B=1`; whitespace around items is ignored.
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = OutcomeAssignment::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (op, token) = item
                .split_once('=')
                .ok_or_else(|| EngineError::Assignment(format!("`{item}` is not op=outcome")))?;
            let (op, token) = (op.trim(), token.trim());
            if op.is_empty() || token.is_empty() {
                return Err(EngineError::Assignment(format!("`{item}` is not op=outcome")));
            }
            if out.0.insert(OpId::new(op), token.to_string()).is_some() {
                return Err(EngineError::Assignment(format!("`{op}` assigned twice")));
            }
        }
        Ok(out)
    }

    /// Outcome index of every operation of `circuit` in `scope` (all when
    /// `None`). Operations with a single outcome need no entry.
    pub fn resolve(
        &self,
        circuit: &Circuit,
        scope: Option<&BTreeSet<OpId>>,
    ) -> Result<BTreeMap<OpId, usize>> {
        if let Some(unknown) = self.0.keys().find(|id| circuit.operation(id).is_none()) {
            return Err(EngineError::Assignment(format!("unknown operation `{unknown}`")));
        }
        let mut out = BTreeMap::new();
        for node in circuit.operations() {
            if scope.is_some_and(|s| !s.contains(&node.id)) {
                continue;
            }
            let index = match self.0.get(&node.id) {
                Some(token) => node.outcome_index(token).ok_or_else(|| {
                    EngineError::Assignment(format!(
                        "`{token}` is not an outcome of `{}` (expected one of {})",
                        node.id,
                        node.outcomes.join(", ")
                    ))
                })?,
                None if node.outcomes.len() == 1 => 0,
                None => {
                    return Err(EngineError::Assignment(format!(
                        "no outcome given for `{}`",
                        node.id
                    )))
                }
            };
            out.insert(node.id.clone(), index);
        }
        Ok(out)
    }
}

impl fmt::Display for OutcomeAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

fn guard(rows: usize, cols: usize) -> Result<()> {
    if rows.saturating_mul(cols) > MAX_STATE_ENTRIES {
        return Err(EngineError::TooLarge(format!(
            "{rows}x{cols} intermediate exceeds {MAX_STATE_ENTRIES} entries"
        )));
    }
    Ok(())
}

/// Apply `z` to factor `pos` of the row index of `t`.
fn apply_factor(t: &RMatrix, dims: &[usize], pos: usize, z: &RMatrix) -> Result<RMatrix> {
    let left: usize = dims[..pos].iter().product();
    let right: usize = dims[pos + 1..].iter().product();
    let (d_out, d_in) = z.shape();
    if d_in != dims[pos] || t.nrows() != left * d_in * right {
        return Err(EngineError::Shape(format!(
            "{}x{} matrix applied to a factor of size {}",
            d_out, d_in, dims[pos]
        )));
    }
    let cols = t.ncols();
    guard(left * d_out * right, cols)?;
    let mut out = RMatrix::zeros(left * d_out * right, cols);
    for c in 0..cols {
        let src = t.column(c);
        let mut dst = out.column_mut(c);
        for l in 0..left {
            for a in 0..d_in {
                let base_in = (l * d_in + a) * right;
                for b in 0..d_out {
                    let zba = z[(b, a)];
                    if zba == 0.0 {
                        continue;
                    }
                    let base_out = (l * d_out + b) * right;
                    for r in 0..right {
                        dst[base_out + r] += zba * src[base_in + r];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Reorder the row factors of `t`: new factor `i` is old factor `perm[i]`.
fn permute_rows(t: &RMatrix, dims: &[usize], perm: &[usize]) -> RMatrix {
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return t.clone();
    }
    let map = factor_permutation(dims, perm);
    RMatrix::from_fn(t.nrows(), t.ncols(), |o, c| t[(map[o], c)])
}

/// Positions in `from` of each wire of `to`.
fn positions(from: &[WireId], to: &[WireId]) -> Result<Vec<usize>> {
    to.iter()
        .map(|w| {
            from.iter()
                .position(|x| x == w)
                .ok_or_else(|| EngineError::Shape(format!("wire `{w}` missing from boundary")))
        })
        .collect()
}

fn wire_dims(circuit: &Circuit, theory: &dyn Theory, wires: &[WireId]) -> Result<Vec<usize>> {
    wires
        .iter()
        .map(|w| {
            let wire = circuit
                .wire(w)
                .ok_or_else(|| EngineError::Fragment(format!("unknown wire `{w}`")))?;
            Ok(theory.fiducial_count_of(&wire.wire_type)?)
        })
        .collect()
}

fn wire_types(circuit: &Circuit, wires: &[WireId]) -> SystemType {
    wires
        .iter()
        .filter_map(|w| circuit.wire(w).map(|x| x.wire_type.clone()))
        .collect()
}

/// Push `t` (rows over `layer.input`) through one layer.
fn apply_layer(
    model: &CircuitModel,
    layer: &Layer,
    outcomes: &BTreeMap<OpId, usize>,
    theory: &dyn Theory,
    t: RMatrix,
) -> Result<RMatrix> {
    let circuit = &model.circuit;
    let in_dims = wire_dims(circuit, theory, &layer.input)?;
    let t = permute_rows(&t, &in_dims, &positions(&layer.input, &layer.input_alignment)?);

    let mut dims = Vec::with_capacity(layer.operations.len() + layer.pass_through.len());
    for op in &layer.operations {
        dims.push(wire_dims(circuit, theory, &circuit.input_wires(op))?.iter().product());
    }
    dims.extend(wire_dims(circuit, theory, &layer.pass_through)?);
    let mut t = t;
    for (pos, op) in layer.operations.iter().enumerate() {
        let z = model.matrix(op, outcomes[op])?;
        t = apply_factor(&t, &dims, pos, &z.entries)?;
        dims[pos] = z.entries.nrows();
    }

    let out_dims = wire_dims(circuit, theory, &layer.output_alignment)?;
    Ok(permute_rows(
        &t,
        &out_dims,
        &positions(&layer.output_alignment, &layer.output)?,
    ))
}

/// The transfer matrix of one layer: input permutation, the tensor product
/// of the operation matrices with identities on pass-through wires, then
/// the output permutation.
pub fn layer_matrix(
    model: &CircuitModel,
    layer: &Layer,
    assignment: &OutcomeAssignment,
    theory: &dyn Theory,
) -> Result<TransferMatrix> {
    require_local(theory)?;
    let circuit = &model.circuit;
    let scope: BTreeSet<OpId> = layer.operations.iter().cloned().collect();
    let outcomes = assignment.resolve(circuit, Some(&scope))?;
    let in_types = wire_types(circuit, &layer.input);
    let k_in = theory.fiducial_count(&in_types)?;
    let out_types = wire_types(circuit, &layer.output);
    let k_out = theory.fiducial_count(&out_types)?;
    guard(k_in.max(k_out), k_in.max(k_out))?;

    let p_in = wire_permutation_matrix(
        theory,
        &in_types,
        &positions(&layer.input, &layer.input_alignment)?,
    )?;
    let mut factors = Vec::new();
    for op in &layer.operations {
        factors.push(model.matrix(op, outcomes[op])?.entries.clone());
    }
    for w in &layer.pass_through {
        let t = wire_types(circuit, std::slice::from_ref(w));
        factors.push(theory.identity(&t)?.entries);
    }
    let middle = kron_all(&factors);
    let aligned_out = wire_types(circuit, &layer.output_alignment);
    let p_out = wire_permutation_matrix(
        theory,
        &aligned_out,
        &positions(&layer.output_alignment, &layer.output)?,
    )?;
    Ok(TransferMatrix::synthetic(
        in_types,
        out_types,
        &p_out.entries * middle * &p_in.entries,
        "layer",
    ))
}

fn check_probability(p: f64) -> Result<f64> {
    if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
        return Err(EngineError::OutOfRange(p));
    }
    Ok(p)
}

/// Probability of a joint outcome, computed layer by layer along
/// `foliation` (the canonical complete foliation when `None`).
pub fn evaluate_circuit(
    model: &CircuitModel,
    assignment: &OutcomeAssignment,
    theory: &dyn Theory,
    foliation: Option<&Foliation>,
) -> Result<f64> {
    require_local(theory)?;
    let circuit = &model.circuit;
    let outcomes = assignment.resolve(circuit, None)?;
    let owned;
    let foliation = match foliation {
        Some(f) => f,
        None => {
            owned = complete_foliation(circuit)?;
            &owned
        }
    };
    let layers = layer_decomposition(circuit, foliation)?;
    let mut t = RMatrix::from_element(1, 1, 1.0);
    for layer in &layers {
        t = apply_layer(model, layer, &outcomes, theory, t)?;
    }
    check_probability(t[(0, 0)])
}

/// Probability of every joint outcome, in [`CircuitModel::assignments`]
/// order.
pub fn outcome_distribution(
    model: &CircuitModel,
    theory: &dyn Theory,
) -> Result<Vec<(OutcomeAssignment, f64)>> {
    let foliation = complete_foliation(&model.circuit)?;
    model
        .assignments()
        .map(|a| {
            let p = evaluate_circuit(model, &a, theory, Some(&foliation))?;
            Ok((a, p))
        })
        .collect()
}

/// A region of a circuit bounded by input and output wires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub operations: BTreeSet<OpId>,
    /// Wires entering the region, in factor order.
    pub inputs: Vec<WireId>,
    /// Wires leaving the region, in factor order.
    pub outputs: Vec<WireId>,
}

impl Fragment {
    /// The whole circuit, with no boundary.
    pub fn whole(circuit: &Circuit) -> Fragment {
        Fragment {
            operations: circuit.op_ids().cloned().collect(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// The operations enclosed by the given boundary wires: everything
    /// reachable backwards from the outputs or forwards from the inputs
    /// without crossing a boundary wire. A wire listed on both sides passes
    /// straight through.
    pub fn between(circuit: &Circuit, inputs: &[WireId], outputs: &[WireId]) -> Result<Fragment> {
        let boundary: BTreeSet<&WireId> = inputs.iter().chain(outputs).collect();
        let mut operations = BTreeSet::new();
        let mut stack: Vec<(OpId, Direction)> = Vec::new();
        for w in inputs.iter().filter(|w| !outputs.contains(w)) {
            let wire = circuit
                .wire(w)
                .ok_or_else(|| EngineError::Fragment(format!("unknown wire `{w}`")))?;
            stack.push((wire.target.op.clone(), Direction::Output));
        }
        for w in outputs.iter().filter(|w| !inputs.contains(w)) {
            let wire = circuit
                .wire(w)
                .ok_or_else(|| EngineError::Fragment(format!("unknown wire `{w}`")))?;
            stack.push((wire.source.op.clone(), Direction::Input));
        }
        let mut seen = BTreeSet::new();
        while let Some((op, direction)) = stack.pop() {
            if !seen.insert((op.clone(), direction)) {
                continue;
            }
            operations.insert(op.clone());
            for w in circuit.wires() {
                if boundary.contains(&w.id) {
                    continue;
                }
                match direction {
                    Direction::Output if w.source.op == op => {
                        stack.push((w.target.op.clone(), Direction::Output))
                    }
                    Direction::Input if w.target.op == op => {
                        stack.push((w.source.op.clone(), Direction::Input))
                    }
                    _ => {}
                }
            }
        }
        let fragment = Fragment {
            operations,
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
        };
        fragment.check(circuit)?;
        Ok(fragment)
    }

    /// Every wire touching the region is internal or on the boundary.
    pub fn check(&self, circuit: &Circuit) -> Result<()> {
        let err = |m: String| Err(EngineError::Fragment(m));
        for list in [&self.inputs, &self.outputs] {
            let unique: BTreeSet<&WireId> = list.iter().collect();
            if unique.len() != list.len() {
                return err("a boundary wire is listed twice".into());
            }
        }
        if let Some(op) = self.operations.iter().find(|o| circuit.operation(o).is_none()) {
            return err(format!("unknown operation `{op}`"));
        }
        let inside = |op: &OpId| self.operations.contains(op);
        for w in self.inputs.iter().chain(&self.outputs) {
            let wire = circuit
                .wire(w)
                .ok_or_else(|| EngineError::Fragment(format!("unknown wire `{w}`")))?;
            let (is_in, is_out) = (self.inputs.contains(w), self.outputs.contains(w));
            let ok = match (is_in, is_out) {
                (true, true) => !inside(&wire.source.op) && !inside(&wire.target.op),
                (true, false) => !inside(&wire.source.op) && inside(&wire.target.op),
                _ => inside(&wire.source.op) && !inside(&wire.target.op),
            };
            if !ok {
                return err(format!("wire `{w}` does not cross the boundary as listed"));
            }
        }
        for wire in circuit.wires() {
            let (s, t) = (inside(&wire.source.op), inside(&wire.target.op));
            if s != t && !self.inputs.contains(&wire.id) && !self.outputs.contains(&wire.id) {
                return err(format!("wire `{}` leaves the region unlisted", wire.id));
            }
        }
        Ok(())
    }
}

/// Transfer matrix of a fragment, built by sweeping its operations in
/// dependency order. Rows follow `fragment.outputs`, columns
/// `fragment.inputs`.
pub fn fragment_transfer_matrix(
    model: &CircuitModel,
    fragment: &Fragment,
    assignment: &OutcomeAssignment,
    theory: &dyn Theory,
) -> Result<TransferMatrix> {
    require_local(theory)?;
    let circuit = &model.circuit;
    fragment.check(circuit)?;
    let outcomes = assignment.resolve(circuit, Some(&fragment.operations))?;

    let in_types = wire_types(circuit, &fragment.inputs);
    let k_in = theory.fiducial_count(&in_types)?;
    guard(k_in, k_in)?;
    let mut t = RMatrix::identity(k_in, k_in);
    let mut frontier = fragment.inputs.clone();
    let mut pending: BTreeSet<OpId> = fragment.operations.clone();

    while !pending.is_empty() {
        let op = pending
            .iter()
            .find(|op| circuit.input_wires(op).iter().all(|w| frontier.contains(w)))
            .cloned()
            .ok_or_else(|| EngineError::Fragment("operations depend on missing wires".into()))?;
        pending.remove(&op);
        let op_in = circuit.input_wires(&op);
        let rest: Vec<WireId> = frontier.iter().filter(|w| !op_in.contains(w)).cloned().collect();
        let order: Vec<WireId> = op_in.iter().chain(&rest).cloned().collect();
        let dims = wire_dims(circuit, theory, &frontier)?;
        t = permute_rows(&t, &dims, &positions(&frontier, &order)?);
        let mut super_dims = vec![wire_dims(circuit, theory, &op_in)?.iter().product()];
        super_dims.extend(wire_dims(circuit, theory, &rest)?);
        t = apply_factor(&t, &super_dims, 0, &model.matrix(&op, outcomes[&op])?.entries)?;
        frontier = circuit.output_wires(&op);
        frontier.extend(rest);
    }

    let final_set: BTreeSet<&WireId> = frontier.iter().collect();
    let wanted: BTreeSet<&WireId> = fragment.outputs.iter().collect();
    if final_set != wanted {
        return Err(EngineError::Fragment(
            "the sweep does not end on the output wires".into(),
        ));
    }
    let dims = wire_dims(circuit, theory, &frontier)?;
    let t = permute_rows(&t, &dims, &positions(&frontier, &fragment.outputs)?);
    Ok(TransferMatrix::synthetic(
        in_types,
        wire_types(circuit, &fragment.outputs),
        t,
        "fragment",
    ))
}

/// Probability of a joint outcome by a single sweep over the whole circuit.
pub fn evaluate_by_sweep(
    model: &CircuitModel,
    assignment: &OutcomeAssignment,
    theory: &dyn Theory,
) -> Result<f64> {
    model.circuit.ensure_valid_closed()?;
    assignment.resolve(&model.circuit, None)?;
    let z = fragment_transfer_matrix(model, &Fragment::whole(&model.circuit), assignment, theory)?;
    check_probability(z.entries[(0, 0)])
}
