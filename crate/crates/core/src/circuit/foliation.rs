//! Complete foliations and their decomposition into evaluation layers.
//!
//! The constructive sweep starts from the initial wires (outputs of
//! operations that have no input wires) and repeatedly advances one ready
//! operation: an operation with at least one output wire whose input wires
//! all lie on the current hypersurface. Its input wires are replaced by its
//! output wires. The sweep stops once every wire has appeared. Operations
//! without output wires are never advanced; they end up in the final layer.

use std::collections::BTreeSet;

use serde::Serialize;

use super::time::{is_after, is_hypersurface, partition};
use super::{Circuit, CircuitError, Hypersurface, OpId, WireId};

/// Ordered list of hypersurfaces, each after its predecessor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Foliation {
    pub hypersurfaces: Vec<Hypersurface>,
}

impl Foliation {
    pub fn new(hypersurfaces: Vec<Hypersurface>) -> Self {
        Foliation { hypersurfaces }
    }

    pub fn len(&self) -> usize {
        self.hypersurfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypersurfaces.is_empty()
    }

    /// True when every wire of `circuit` lies on some hypersurface.
    pub fn covers(&self, circuit: &Circuit) -> bool {
        let covered: BTreeSet<&WireId> = self
            .hypersurfaces
            .iter()
            .flat_map(|h| h.wires().iter())
            .collect();
        circuit.wire_ids().all(|w| covered.contains(w))
    }
}

struct Sweep<'a> {
    circuit: &'a Circuit,
    /// Operations with at least one input wire and one output wire.
    advanceable: Vec<OpId>,
    initial: Hypersurface,
}

impl<'a> Sweep<'a> {
    fn new(circuit: &'a Circuit) -> Self {
        let mut advanceable = Vec::new();
        let mut initial = BTreeSet::new();
        for op in circuit.op_ids() {
            let ins = circuit.input_wires(op);
            let outs = circuit.output_wires(op);
            if ins.is_empty() {
                initial.extend(outs);
            } else if !outs.is_empty() {
                advanceable.push(op.clone());
            }
        }
        Sweep {
            circuit,
            advanceable,
            initial: Hypersurface::new(initial),
        }
    }

    fn ready(&self, current: &Hypersurface, advanced: &BTreeSet<OpId>) -> Vec<OpId> {
        self.advanceable
            .iter()
            .filter(|op| !advanced.contains(*op))
            .filter(|op| {
                self.circuit
                    .input_wires(op)
                    .iter()
                    .all(|w| current.contains(w))
            })
            .cloned()
            .collect()
    }

    fn advance(&self, current: &Hypersurface, op: &OpId) -> Hypersurface {
        let ins: BTreeSet<WireId> = self.circuit.input_wires(op).into_iter().collect();
        let mut next: BTreeSet<WireId> = current
            .wires()
            .iter()
            .filter(|w| !ins.contains(*w))
            .cloned()
            .collect();
        next.extend(self.circuit.output_wires(op));
        Hypersurface::new(next)
    }
}

/// Deterministic complete foliation; ties between ready operations go to
/// the lowest operation id. A circuit without wires yields the empty
/// foliation.
pub fn complete_foliation(circuit: &Circuit) -> Result<Foliation, CircuitError> {
    circuit.ensure_valid_closed()?;
    if circuit.wire_count() == 0 {
        return Ok(Foliation::default());
    }
    let sweep = Sweep::new(circuit);
    let mut current = sweep.initial.clone();
    let mut covered: BTreeSet<WireId> = current.wires().clone();
    let mut advanced = BTreeSet::new();
    let mut steps = vec![current.clone()];
    while covered.len() < circuit.wire_count() {
        let next_op = sweep
            .ready(&current, &advanced)
            .into_iter()
            .next()
            .expect("an acyclic closed circuit always has a ready operation");
        current = sweep.advance(&current, &next_op);
        covered.extend(current.wires().iter().cloned());
        advanced.insert(next_op);
        steps.push(current.clone());
    }
    Ok(Foliation::new(steps))
}

/// Up to `limit` distinct complete foliations, found by backtracking over
/// the choice of ready operation. The first one equals
/// [`complete_foliation`].
pub fn enumerate_complete_foliations(
    circuit: &Circuit,
    limit: usize,
) -> Result<Vec<Foliation>, CircuitError> {
    circuit.ensure_valid_closed()?;
    if limit == 0 {
        return Ok(Vec::new());
    }
    if circuit.wire_count() == 0 {
        return Ok(vec![Foliation::default()]);
    }
    let sweep = Sweep::new(circuit);
    let mut out = Vec::new();
    let mut steps = vec![sweep.initial.clone()];
    let covered = sweep.initial.wires().clone();
    backtrack(
        &sweep,
        &mut steps,
        covered,
        &mut BTreeSet::new(),
        limit,
        &mut out,
    );
    Ok(out)
}

fn backtrack(
    sweep: &Sweep<'_>,
    steps: &mut Vec<Hypersurface>,
    covered: BTreeSet<WireId>,
    advanced: &mut BTreeSet<OpId>,
    limit: usize,
    out: &mut Vec<Foliation>,
) {
    if out.len() >= limit {
        return;
    }
    if covered.len() == sweep.circuit.wire_count() {
        out.push(Foliation::new(steps.clone()));
        return;
    }
    let current = steps.last().expect("non-empty").clone();
    for op in sweep.ready(&current, advanced) {
        let next = sweep.advance(&current, &op);
        let mut next_covered = covered.clone();
        next_covered.extend(next.wires().iter().cloned());
        steps.push(next);
        advanced.insert(op.clone());
        backtrack(sweep, steps, next_covered, advanced, limit, out);
        advanced.remove(&op);
        steps.pop();
        if out.len() >= limit {
            return;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    /// Operations before the first hypersurface.
    Initial,
    /// Operations between two consecutive hypersurfaces.
    Step,
    /// Operations after the last hypersurface.
    Final,
}

/// Operations between two consecutive hypersurfaces, with the alignment of
/// boundary wires to operation ports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Layer {
    pub kind: LayerKind,
    /// Operation ids in ascending order.
    pub operations: Vec<OpId>,
    /// Wires present on both bounding hypersurfaces, ascending.
    pub pass_through: Vec<WireId>,
    /// Lower boundary in canonical order (empty for the initial layer).
    pub input: Vec<WireId>,
    /// Upper boundary in canonical order (empty for the final layer).
    pub output: Vec<WireId>,
    /// Lower boundary in factor order: inputs of each operation in port
    /// order, then pass-through wires.
    pub input_alignment: Vec<WireId>,
    /// Upper boundary in factor order: outputs of each operation in port
    /// order, then pass-through wires.
    pub output_alignment: Vec<WireId>,
}

/// Split a circuit into layers along a complete foliation.
pub fn layer_decomposition(
    circuit: &Circuit,
    foliation: &Foliation,
) -> Result<Vec<Layer>, CircuitError> {
    circuit.ensure_valid_closed()?;
    check_foliation(circuit, foliation)?;

    let all: BTreeSet<OpId> = circuit.op_ids().cloned().collect();
    if foliation.is_empty() {
        return Ok(vec![build_layer(
            circuit,
            LayerKind::Initial,
            all,
            &Hypersurface::default(),
            &Hypersurface::default(),
        )]);
    }

    let pasts: Vec<BTreeSet<OpId>> = foliation
        .hypersurfaces
        .iter()
        .map(|h| partition(circuit, h).expect("checked").past)
        .collect();

    let mut layers = Vec::with_capacity(foliation.len() + 1);
    let empty = Hypersurface::default();
    layers.push(build_layer(
        circuit,
        LayerKind::Initial,
        pasts[0].clone(),
        &empty,
        &foliation.hypersurfaces[0],
    ));
    for t in 0..foliation.len() - 1 {
        let ops = pasts[t + 1].difference(&pasts[t]).cloned().collect();
        layers.push(build_layer(
            circuit,
            LayerKind::Step,
            ops,
            &foliation.hypersurfaces[t],
            &foliation.hypersurfaces[t + 1],
        ));
    }
    let last = foliation.len() - 1;
    let final_ops = all.difference(&pasts[last]).cloned().collect();
    layers.push(build_layer(
        circuit,
        LayerKind::Final,
        final_ops,
        &foliation.hypersurfaces[last],
        &empty,
    ));
    Ok(layers)
}

fn check_foliation(circuit: &Circuit, foliation: &Foliation) -> Result<(), CircuitError> {
    if foliation.is_empty() {
        if circuit.wire_count() == 0 {
            return Ok(());
        }
        return Err(CircuitError::BadFoliation("no hypersurfaces".into()));
    }
    for h in &foliation.hypersurfaces {
        for w in h.wires() {
            if circuit.wire(w).is_none() {
                return Err(CircuitError::BadFoliation(format!("unknown wire `{w}`")));
            }
        }
        if !is_hypersurface(circuit, &h.ordered())? {
            return Err(CircuitError::BadFoliation(format!("{h} is not a hypersurface")));
        }
    }
    for pair in foliation.hypersurfaces.windows(2) {
        if !is_after(circuit, &pair[0], &pair[1])? {
            return Err(CircuitError::BadFoliation(format!(
                "{} is not after {}",
                pair[1], pair[0]
            )));
        }
    }
    if !foliation.covers(circuit) {
        return Err(CircuitError::BadFoliation("some wires are never crossed".into()));
    }
    Ok(())
}

fn build_layer(
    circuit: &Circuit,
    kind: LayerKind,
    operations: BTreeSet<OpId>,
    lower: &Hypersurface,
    upper: &Hypersurface,
) -> Layer {
    let pass_through: Vec<WireId> = lower
        .wires()
        .intersection(upper.wires())
        .cloned()
        .collect();
    let mut input_alignment = Vec::new();
    let mut output_alignment = Vec::new();
    // Completeness guarantees that every operation of a layer reads from the
    // lower boundary and writes to the upper one.
    for op in &operations {
        input_alignment.extend(circuit.input_wires(op));
        output_alignment.extend(circuit.output_wires(op));
    }
    input_alignment.extend(pass_through.iter().cloned());
    output_alignment.extend(pass_through.iter().cloned());
    Layer {
        kind,
        operations: operations.into_iter().collect(),
        pass_through,
        input: lower.ordered(),
        output: upper.ordered(),
        input_alignment,
        output_alignment,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;

    fn ids(v: &[&str]) -> Vec<WireId> {
        v.iter().map(|s| WireId::new(*s)).collect()
    }

    fn ops(v: &[&str]) -> Vec<OpId> {
        v.iter().map(|s| OpId::new(*s)).collect()
    }

    fn h(v: &[&str]) -> Hypersurface {
        v.iter().copied().collect()
    }

    fn single_wire() -> Circuit {
        Circuit::builder()
            .operation("P", &[], &["t"], 1)
            .operation("E", &["t"], &[], 1)
            .wire("w1", ("P", 0), ("E", 0))
            .build()
            .unwrap()
    }

    fn commuting() -> Circuit {
        Circuit::builder()
            .operation("P", &[], &["t", "t"], 1)
            .operation("A", &["t"], &["t"], 1)
            .operation("B", &["t"], &["t"], 1)
            .operation("E", &["t", "t"], &[], 1)
            .wire("a", ("P", 0), ("A", 0))
            .wire("b", ("P", 1), ("B", 0))
            .wire("c", ("A", 0), ("E", 0))
            .wire("d", ("B", 0), ("E", 1))
            .build()
            .unwrap()
    }

    /// Six operations and seven wires: alpha prepares a,b; beta prepares
    /// c,d; delta: a -> f; gamma: b,c -> e; epsilon: e,d -> g; zeta eats f,g.
    fn six_op_example() -> Circuit {
        Circuit::builder()
            .operation("alpha", &[], &["t", "t"], 1)
            .operation("beta", &[], &["t", "t"], 1)
            .operation("delta", &["t"], &["t"], 1)
            .operation("gamma", &["t", "t"], &["t"], 1)
            .operation("epsilon", &["t", "t"], &["t"], 1)
            .operation("zeta", &["t", "t"], &[], 1)
            .wire("a", ("alpha", 0), ("delta", 0))
            .wire("b", ("alpha", 1), ("gamma", 0))
            .wire("c", ("beta", 0), ("gamma", 1))
            .wire("d", ("beta", 1), ("epsilon", 1))
            .wire("e", ("gamma", 0), ("epsilon", 0))
            .wire("f", ("delta", 0), ("zeta", 0))
            .wire("g", ("epsilon", 0), ("zeta", 1))
            .build()
            .unwrap()
    }

    #[test]
    fn single_wire_foliation() {
        let c = single_wire();
        assert_eq!(complete_foliation(&c).unwrap(), Foliation::new(vec![h(&["w1"])]));
        assert_eq!(enumerate_complete_foliations(&c, 10).unwrap().len(), 1);
        let layers = layer_decomposition(&c, &complete_foliation(&c).unwrap()).unwrap();
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[0].operations, ops(&["P"]));
        assert_eq!(layers[1].operations, ops(&["E"]));
    }

    #[test]
    fn commuting_boxes_foliations() {
        let c = commuting();
        // Tie-break picks A (lower id) first.
        assert_eq!(
            complete_foliation(&c).unwrap(),
            Foliation::new(vec![h(&["a", "b"]), h(&["b", "c"]), h(&["c", "d"])])
        );
        let all = enumerate_complete_foliations(&c, 10).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(
            all[1],
            Foliation::new(vec![h(&["a", "b"]), h(&["a", "d"]), h(&["c", "d"])])
        );
        assert_eq!(enumerate_complete_foliations(&c, 1).unwrap().len(), 1);
    }

    #[test]
    fn chain_has_one_foliation() {
        let c = Circuit::builder()
            .operation("P", &[], &["t"], 1)
            .operation("G1", &["t"], &["t"], 1)
            .operation("G2", &["t"], &["t"], 1)
            .operation("G3", &["t"], &["t"], 1)
            .operation("E", &["t"], &[], 1)
            .wire("w0", ("P", 0), ("G1", 0))
            .wire("w1", ("G1", 0), ("G2", 0))
            .wire("w2", ("G2", 0), ("G3", 0))
            .wire("w3", ("G3", 0), ("E", 0))
            .build()
            .unwrap();
        let all = enumerate_complete_foliations(&c, 10).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].len(), 4);
    }

    #[test]
    fn six_op_example_layers() {
        let c = six_op_example();
        let f = complete_foliation(&c).unwrap();
        assert_eq!(
            f,
            Foliation::new(vec![
                h(&["a", "b", "c", "d"]),
                h(&["b", "c", "d", "f"]),
                h(&["d", "e", "f"]),
                h(&["f", "g"]),
            ])
        );
        let layers = layer_decomposition(&c, &f).unwrap();
        let summary: Vec<(Vec<OpId>, Vec<WireId>)> = layers
            .iter()
            .map(|l| (l.operations.clone(), l.pass_through.clone()))
            .collect();
        assert_eq!(
            summary,
            vec![
                (ops(&["alpha", "beta"]), ids(&[])),
                (ops(&["delta"]), ids(&["b", "c", "d"])),
                (ops(&["gamma"]), ids(&["d", "f"])),
                (ops(&["epsilon"]), ids(&["f"])),
                (ops(&["zeta"]), ids(&[])),
            ]
        );
        assert_eq!(layers[0].output_alignment, ids(&["a", "b", "c", "d"]));
        assert_eq!(layers[2].input_alignment, ids(&["b", "c", "d", "f"]));
        assert_eq!(layers[2].output_alignment, ids(&["e", "d", "f"]));
        for l in &layers {
            for w in &l.pass_through {
                assert!(l.input.contains(w) && l.output.contains(w));
            }
        }
    }

    #[test]
    fn skipping_an_internal_wire_is_incomplete() {
        let c = six_op_example();
        // Wire e runs between gamma and epsilon and is never crossed.
        let f = Foliation::new(vec![h(&["a", "b", "c", "d"]), h(&["f", "g"])]);
        assert!(matches!(
            layer_decomposition(&c, &f),
            Err(CircuitError::BadFoliation(_))
        ));
    }

    #[test]
    fn bad_foliations_are_rejected() {
        let c = commuting();
        let reversed = Foliation::new(vec![h(&["c", "d"]), h(&["a", "b"])]);
        assert!(matches!(
            layer_decomposition(&c, &reversed),
            Err(CircuitError::BadFoliation(_))
        ));
        let partial = Foliation::new(vec![h(&["a", "b"])]);
        assert!(matches!(
            layer_decomposition(&c, &partial),
            Err(CircuitError::BadFoliation(_))
        ));
        let not_a_cut = Foliation::new(vec![h(&["a", "c"]), h(&["c", "d"])]);
        assert!(layer_decomposition(&c, &not_a_cut).is_err());
    }

    #[test]
    fn wireless_circuit() {
        let c = Circuit::builder()
            .operation("X", &[], &[], 2)
            .operation("Y", &[], &[], 1)
            .build()
            .unwrap();
        let f = complete_foliation(&c).unwrap();
        assert!(f.is_empty());
        let layers = layer_decomposition(&c, &f).unwrap();
        assert_eq!(layers.len(), 1);
        assert_eq!(layers[0].operations, ops(&["X", "Y"]));
    }

    #[test]
    fn disconnected_parts_interleave() {
        let c = Circuit::builder()
            .operation("P1", &[], &["t"], 1)
            .operation("G1", &["t"], &["t"], 1)
            .operation("E1", &["t"], &[], 1)
            .operation("P2", &[], &["t"], 1)
            .operation("G2", &["t"], &["t"], 1)
            .operation("E2", &["t"], &[], 1)
            .wire("u1", ("P1", 0), ("G1", 0))
            .wire("u2", ("G1", 0), ("E1", 0))
            .wire("v1", ("P2", 0), ("G2", 0))
            .wire("v2", ("G2", 0), ("E2", 0))
            .build()
            .unwrap();
        let f = complete_foliation(&c).unwrap();
        assert_eq!(
            f,
            Foliation::new(vec![h(&["u1", "v1"]), h(&["u2", "v1"]), h(&["u2", "v2"])])
        );
        assert_eq!(enumerate_complete_foliations(&c, 100).unwrap().len(), 2);
        assert!(f.hypersurfaces.iter().all(|h| !h.is_empty()));
    }

    #[test]
    fn invalid_or_open_circuits_are_rejected() {
        let open = Circuit::builder()
            .operation("G", &["t"], &["t"], 1)
            .build()
            .unwrap();
        assert!(matches!(complete_foliation(&open), Err(CircuitError::NotClosed(_))));
        let looped = Circuit::builder()
            .operation("A", &["t"], &["t"], 1)
            .wire("w", ("A", 0), ("A", 0))
            .build()
            .unwrap();
        assert!(matches!(complete_foliation(&looped), Err(CircuitError::Invalid(_))));
    }
}
