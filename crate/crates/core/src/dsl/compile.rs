use std::collections::BTreeMap;

use super::{CircuitDocument, Diagnostic, Pos};
use crate::circuit::{
    validate, Circuit, CircuitBuilder, Direction, OpId, OperationNode, Port, PortRef, PortState,
    SystemType, Violation, Wire, WireId, WireType,
};
use crate::engine::{CircuitModel, OutcomeAssignment, TransferMatrix};
use crate::theory::{Process, StandardTheory, Theory};

/// A document turned into a circuit, its theory and its processes.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    pub theory: StandardTheory,
    pub circuit: Circuit,
    pub processes: BTreeMap<OpId, Vec<Process>>,
    pub model: CircuitModel,
    /// The document's default assignment.
    pub assignment: OutcomeAssignment,
}

fn op_pos(doc: &CircuitDocument, id: &str) -> Pos {
    doc.source.operations.get(id).copied().unwrap_or_else(Pos::start)
}

fn gate_pos(doc: &CircuitDocument, id: &str) -> Pos {
    doc.source.gates.get(id).copied().unwrap_or_else(|| op_pos(doc, id))
}

fn wire_pos(doc: &CircuitDocument, id: &str) -> Pos {
    doc.source.wires.get(id).copied().unwrap_or_else(Pos::start)
}

fn violation_pos(doc: &CircuitDocument, v: &Violation) -> Pos {
    match (v.wire(), v) {
        (Some(w), _) => wire_pos(doc, w.as_str()),
        (None, Violation::Cycle { operations }) => operations
            .iter()
            .map(|op| op_pos(doc, op.as_str()))
            .min()
            .unwrap_or_else(Pos::start),
        _ => Pos::start(),
    }
}

/// Build the theory, the gate processes and the circuit, and run circuit
/// validation. Inline matrices are checked for validity.
pub fn compile(doc: &CircuitDocument) -> Result<CompiledCircuit, Vec<Diagnostic>> {
    let theory_pos = doc.source.theory.unwrap_or_else(Pos::start);
    let types = doc.types.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let theory = StandardTheory::new(doc.theory, types)
        .map_err(|e| vec![Diagnostic::new(theory_pos, e.to_string())])?;

    let mut diags = Vec::new();
    let mut processes = BTreeMap::new();
    let mut builder = CircuitBuilder::default();
    for (id, decl) in &doc.operations {
        let ins = SystemType::from_labels(&decl.inputs.iter().map(String::as_str).collect::<Vec<_>>());
        let outs = SystemType::from_labels(&decl.outputs.iter().map(String::as_str).collect::<Vec<_>>());
        let pos = gate_pos(doc, id);
        let ps = match theory.gate_processes(&decl.gate.name, &decl.gate.args, &ins, &outs, decl.outcomes) {
            Ok(ps) => ps,
            Err(e) => {
                diags.push(Diagnostic::new(pos, format!("operation `{id}`: {e}")));
                continue;
            }
        };
        if let Err(m) = check_transfer_processes(&theory, &ins, &outs, &ps) {
            diags.push(Diagnostic::new(pos, format!("operation `{id}`: {m}")));
            continue;
        }
        let port = |t: &String, direction: Direction, i: usize| Port {
            wire_type: WireType::new(t.as_str()),
            state: if doc.closures.contains(&super::PortAddr {
                op: id.clone(),
                direction,
                port: i,
            }) {
                PortState::Closed
            } else {
                PortState::Open
            },
        };
        builder = builder.add_operation(OperationNode {
            id: OpId::new(id.as_str()),
            inputs: decl.inputs.iter().enumerate().map(|(i, t)| port(t, Direction::Input, i)).collect(),
            outputs: decl.outputs.iter().enumerate().map(|(i, t)| port(t, Direction::Output, i)).collect(),
            setting: decl.gate.to_string(),
            outcomes: (0..ps.len()).map(|i| i.to_string()).collect(),
        });
        processes.insert(OpId::new(id.as_str()), ps);
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    for (id, w) in &doc.wires {
        let wire_type = doc
            .operations
            .get(&w.from.0)
            .and_then(|o| o.outputs.get(w.from.1))
            .map(|t| WireType::new(t.as_str()))
            .unwrap_or_else(|| WireType::new("?"));
        builder = builder.add_wire(Wire {
            id: WireId::new(id.as_str()),
            source: PortRef::new(w.from.0.as_str(), w.from.1),
            target: PortRef::new(w.to.0.as_str(), w.to.1),
            wire_type,
        });
    }
    let circuit = builder
        .build()
        .map_err(|e| vec![Diagnostic::new(Pos::start(), e.to_string())])?;

    let report = validate(&circuit);
    for v in &report.violations {
        diags.push(Diagnostic::new(violation_pos(doc, v), v.to_string()));
    }
    for (port, direction) in circuit.dangling_ports() {
        diags.push(Diagnostic::new(
            op_pos(doc, port.op.as_str()),
            format!(
                "port {}.{}{} is neither wired nor closed",
                port.op, direction, port.port
            ),
        ));
    }
    if !diags.is_empty() {
        diags.sort_by_key(|d| (d.line, d.column));
        return Err(diags);
    }

    let apos = doc.source.assign.unwrap_or_else(Pos::start);
    let mut assignment = OutcomeAssignment::new();
    for (op, token) in &doc.assign {
        let node = circuit.operation(&OpId::new(op.as_str()));
        match node {
            Some(n) if n.outcome_index(token).is_some() => {
                assignment.set(n.id.clone(), token.clone());
            }
            Some(n) => diags.push(Diagnostic::new(
                apos,
                format!("`{token}` is not an outcome of `{op}` (0..{})", n.outcomes.len()),
            )),
            None => diags.push(Diagnostic::new(apos, format!("unknown operation `{op}`"))),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    let model = CircuitModel::from_processes(circuit.clone(), &theory, processes.clone())
        .map_err(|e| vec![Diagnostic::new(Pos::start(), e.to_string())])?;
    Ok(CompiledCircuit {
        theory,
        circuit,
        processes,
        model,
        assignment,
    })
}

/// Matrices given directly are checked outcome by outcome and summed.
fn check_transfer_processes(
    theory: &StandardTheory,
    ins: &SystemType,
    outs: &SystemType,
    ps: &[Process],
) -> Result<(), String> {
    if !ps.iter().any(|p| matches!(p, Process::Transfer(_))) {
        return Ok(());
    }
    let mut all = ps.to_vec();
    if ps.len() > 1 {
        all.push(Process::sum(ps).map_err(|e| e.to_string())?);
    }
    for (i, p) in all.iter().enumerate() {
        let entries = theory.transfer_of(ins, outs, p).map_err(|e| e.to_string())?;
        let z = TransferMatrix::synthetic(ins.clone(), outs.clone(), entries, "inline");
        let report = theory.validate_transfer_matrix(&z).map_err(|e| e.to_string())?;
        if !report.is_valid() {
            let which = if i < ps.len() {
                format!("outcome {i}")
            } else {
                "the sum of the outcomes".to_string()
            };
            let problems: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(format!("{which} is not a valid transformation: {}", problems.join("; ")));
        }
    }
    Ok(())
}
