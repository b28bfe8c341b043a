//! Operational circuits as typed acyclic graphs.
//!
//! An [`OperationNode`] is one use of an apparatus: it has ordered input and
//! output ports (each carrying a [`WireType`] and an open/closed flag), a
//! setting token and a finite outcome space. [`Wire`]s join an output port to
//! an input port of the same type. A [`Circuit`] may hold arbitrary graph
//! data; [`validate`] reports everything that keeps it from being a legal
//! circuit, and the time-related functions in [`time`] and [`foliation`]
//! require a valid circuit.

pub mod foliation;
pub mod time;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use foliation::{
    complete_foliation, enumerate_complete_foliations, layer_decomposition, Foliation, Layer,
    LayerKind,
};
pub use time::{is_after, is_hypersurface, is_synchronous, partition, Hypersurface, Partition};

/// Label of an aperture type, e.g. `q2` or `bit`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WireType(String);

impl WireType {
    pub fn new(label: impl Into<String>) -> Self {
        WireType(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WireType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered list of wire types. The empty list is the null system.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SystemType(Vec<WireType>);

impl SystemType {
    pub fn null() -> Self {
        SystemType(Vec::new())
    }

    pub fn new(factors: Vec<WireType>) -> Self {
        SystemType(factors)
    }

    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Self {
        SystemType(labels.iter().map(|l| WireType::new(l.as_ref())).collect())
    }

    pub fn single(wire: WireType) -> Self {
        SystemType(vec![wire])
    }

    pub fn factors(&self) -> &[WireType] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_null(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &SystemType) -> SystemType {
        let mut factors = self.0.clone();
        factors.extend(other.0.iter().cloned());
        SystemType(factors)
    }
}

impl fmt::Display for SystemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        let labels: Vec<&str> = self.0.iter().map(WireType::as_str).collect();
        f.write_str(&labels.join(" "))
    }
}

impl FromIterator<WireType> for SystemType {
    fn from_iter<I: IntoIterator<Item = WireType>>(iter: I) -> Self {
        SystemType(iter.into_iter().collect())
    }
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }
    };
}

string_id!(OpId);
string_id!(WireId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortState {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "in",
            Direction::Output => "out",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub wire_type: WireType,
    pub state: PortState,
}

impl Port {
    pub fn is_open(&self) -> bool {
        self.state == PortState::Open
    }
}

/// One use of an apparatus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationNode {
    pub id: OpId,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    /// Opaque knob-setting token.
    pub setting: String,
    /// Outcome tokens; never empty.
    pub outcomes: Vec<String>,
}

impl OperationNode {
    pub fn ports(&self, direction: Direction) -> &[Port] {
        match direction {
            Direction::Input => &self.inputs,
            Direction::Output => &self.outputs,
        }
    }

    pub fn input_type(&self) -> SystemType {
        self.inputs.iter().map(|p| p.wire_type.clone()).collect()
    }

    pub fn output_type(&self) -> SystemType {
        self.outputs.iter().map(|p| p.wire_type.clone()).collect()
    }

    pub fn outcome_index(&self, token: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == token)
    }
}

/// Address of a port: operation id plus port index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub op: OpId,
    pub port: usize,
}

impl PortRef {
    pub fn new(op: impl Into<OpId>, port: usize) -> Self {
        PortRef { op: op.into(), port }
    }
}

impl From<String> for OpId {
    fn from(s: String) -> Self {
        OpId(s)
    }
}

impl From<String> for WireId {
    fn from(s: String) -> Self {
        WireId(s)
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.op, self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wire {
    pub id: WireId,
    /// Output port of the upstream operation.
    pub source: PortRef,
    /// Input port of the downstream operation.
    pub target: PortRef,
    pub wire_type: WireType,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("duplicate operation id `{0}`")]
    DuplicateOperation(OpId),
    #[error("duplicate wire id `{0}`")]
    DuplicateWire(WireId),
    #[error("operation `{0}` has an empty outcome space")]
    EmptyOutcomeSpace(OpId),
    #[error("unknown operation `{0}`")]
    UnknownOperation(OpId),
    #[error("unknown wire `{0}`")]
    UnknownWire(WireId),
    #[error("operation `{op}` has no {direction} port {port}")]
    UnknownPort {
        op: OpId,
        direction: Direction,
        port: usize,
    },
    #[error("circuit is invalid: {0}")]
    Invalid(String),
    #[error("circuit has dangling open ports: {0}")]
    NotClosed(String),
    #[error("wire set is not a hypersurface: {0}")]
    NotHypersurface(String),
    #[error("not a complete foliation of this circuit: {0}")]
    BadFoliation(String),
}

/// Immutable circuit (or circuit fragment when open ports dangle).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Circuit {
    operations: BTreeMap<OpId, OperationNode>,
    wires: BTreeMap<WireId, Wire>,
}

impl Circuit {
    pub fn builder() -> CircuitBuilder {
        CircuitBuilder::default()
    }

    pub fn operations(&self) -> impl Iterator<Item = &OperationNode> {
        self.operations.values()
    }

    pub fn wires(&self) -> impl Iterator<Item = &Wire> {
        self.wires.values()
    }

    pub fn operation(&self, id: &OpId) -> Option<&OperationNode> {
        self.operations.get(id)
    }

    pub fn wire(&self, id: &WireId) -> Option<&Wire> {
        self.wires.get(id)
    }

    pub fn op_ids(&self) -> impl Iterator<Item = &OpId> {
        self.operations.keys()
    }

    pub fn wire_ids(&self) -> impl Iterator<Item = &WireId> {
        self.wires.keys()
    }

    pub fn operation_count(&self) -> usize {
        self.operations.len()
    }

    pub fn wire_count(&self) -> usize {
        self.wires.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }

    /// Wires attached to the given port, in wire-id order.
    pub fn wires_at(&self, op: &OpId, direction: Direction, port: usize) -> Vec<&Wire> {
        self.wires
            .values()
            .filter(|w| {
                let end = match direction {
                    Direction::Input => &w.target,
                    Direction::Output => &w.source,
                };
                end.op == *op && end.port == port
            })
            .collect()
    }

    /// The wire attached to each open port of `op` in `direction`, in port
    /// order. Open ports without a wire yield `None`.
    pub fn port_wires(&self, op: &OpId, direction: Direction) -> Vec<Option<WireId>> {
        let Some(node) = self.operations.get(op) else {
            return Vec::new();
        };
        let mut slots: Vec<Option<WireId>> = vec![None; node.ports(direction).len()];
        for w in self.wires.values() {
            let end = match direction {
                Direction::Input => &w.target,
                Direction::Output => &w.source,
            };
            if end.op == *op && end.port < slots.len() && slots[end.port].is_none() {
                slots[end.port] = Some(w.id.clone());
            }
        }
        slots
    }

    /// Input wires of `op` in port order (closed ports skipped).
    pub fn input_wires(&self, op: &OpId) -> Vec<WireId> {
        self.port_wires(op, Direction::Input).into_iter().flatten().collect()
    }

    /// Output wires of `op` in port order (closed ports skipped).
    pub fn output_wires(&self, op: &OpId) -> Vec<WireId> {
        self.port_wires(op, Direction::Output).into_iter().flatten().collect()
    }

    /// Open ports that have no wire attached.
    pub fn dangling_ports(&self) -> Vec<(PortRef, Direction)> {
        let mut out = Vec::new();
        for node in self.operations.values() {
            for direction in [Direction::Input, Direction::Output] {
                let slots = self.port_wires(&node.id, direction);
                for (i, port) in node.ports(direction).iter().enumerate() {
                    if port.is_open() && slots[i].is_none() {
                        out.push((PortRef::new(node.id.clone(), i), direction));
                    }
                }
            }
        }
        out
    }

    /// A circuit is closed when no open port dangles.
    pub fn is_closed(&self) -> bool {
        self.dangling_ports().is_empty()
    }

    /// Disjoint union; ids of `other` are prefixed to avoid clashes.
    pub fn disjoint_union(&self, other: &Circuit, prefix: &str) -> Circuit {
        let mut out = self.clone();
        for node in other.operations.values() {
            let mut node = node.clone();
            node.id = OpId::new(format!("{prefix}{}", node.id));
            out.operations.insert(node.id.clone(), node);
        }
        for wire in other.wires.values() {
            let mut wire = wire.clone();
            wire.id = WireId::new(format!("{prefix}{}", wire.id));
            wire.source.op = OpId::new(format!("{prefix}{}", wire.source.op));
            wire.target.op = OpId::new(format!("{prefix}{}", wire.target.op));
            out.wires.insert(wire.id.clone(), wire);
        }
        out
    }

    /// Require validity and closedness.
    pub fn ensure_valid_closed(&self) -> Result<(), CircuitError> {
        let report = validate(self);
        if !report.is_valid() {
            return Err(CircuitError::Invalid(report.to_string()));
        }
        let dangling = self.dangling_ports();
        if !dangling.is_empty() {
            let listed: Vec<String> = dangling
                .iter()
                .map(|(p, d)| format!("{}.{}{}", p.op, d, p.port))
                .collect();
            return Err(CircuitError::NotClosed(listed.join(", ")));
        }
        Ok(())
    }
}

/// Incremental construction of a [`Circuit`].
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    operations: BTreeMap<OpId, OperationNode>,
    wires: BTreeMap<WireId, Wire>,
    errors: Vec<CircuitError>,
}

impl CircuitBuilder {
    /// Add an operation with all ports open and outcome tokens `0..outcomes`.
    pub fn operation(
        self,
        id: &str,
        inputs: &[&str],
        outputs: &[&str],
        outcomes: usize,
    ) -> Self {
        let outcome_tokens = (0..outcomes).map(|i| i.to_string()).collect();
        self.add_operation(OperationNode {
            id: OpId::new(id),
            inputs: inputs.iter().map(|t| open_port(t)).collect(),
            outputs: outputs.iter().map(|t| open_port(t)).collect(),
            setting: String::new(),
            outcomes: outcome_tokens,
        })
    }

    pub fn add_operation(mut self, node: OperationNode) -> Self {
        if node.outcomes.is_empty() {
            self.errors.push(CircuitError::EmptyOutcomeSpace(node.id.clone()));
        }
        if self.operations.contains_key(&node.id) {
            self.errors.push(CircuitError::DuplicateOperation(node.id.clone()));
        } else {
            self.operations.insert(node.id.clone(), node);
        }
        self
    }

    /// Wire `from.out_port` to `to.in_port`. The wire type is taken from the
    /// source port when it exists, otherwise from the target port.
    pub fn wire(self, id: &str, from: (&str, usize), to: (&str, usize)) -> Self {
        let source = PortRef::new(from.0, from.1);
        let target = PortRef::new(to.0, to.1);
        let wire_type = self
            .operations
            .get(&source.op)
            .and_then(|n| n.outputs.get(source.port))
            .or_else(|| {
                self.operations
                    .get(&target.op)
                    .and_then(|n| n.inputs.get(target.port))
            })
            .map(|p| p.wire_type.clone())
            .unwrap_or_else(|| WireType::new("?"));
        self.add_wire(Wire {
            id: WireId::new(id),
            source,
            target,
            wire_type,
        })
    }

    pub fn add_wire(mut self, wire: Wire) -> Self {
        if self.wires.contains_key(&wire.id) {
            self.errors.push(CircuitError::DuplicateWire(wire.id.clone()));
        } else {
            self.wires.insert(wire.id.clone(), wire);
        }
        self
    }

    pub fn close(mut self, op: &str, direction: Direction, port: usize) -> Self {
        let id = OpId::new(op);
        match self.operations.get_mut(&id) {
            Some(node) => {
                let ports = match direction {
                    Direction::Input => &mut node.inputs,
                    Direction::Output => &mut node.outputs,
                };
                match ports.get_mut(port) {
                    Some(p) => p.state = PortState::Closed,
                    None => self.errors.push(CircuitError::UnknownPort {
                        op: id,
                        direction,
                        port,
                    }),
                }
            }
            None => self.errors.push(CircuitError::UnknownOperation(id)),
        }
        self
    }

    pub fn build(self) -> Result<Circuit, CircuitError> {
        if let Some(e) = self.errors.into_iter().next() {
            return Err(e);
        }
        Ok(Circuit {
            operations: self.operations,
            wires: self.wires,
        })
    }
}

fn open_port(label: &str) -> Port {
    Port {
        wire_type: WireType::new(label),
        state: PortState::Open,
    }
}

/// A single reason a circuit is not valid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TypeMismatch {
        wire: WireId,
        source_type: WireType,
        target_type: WireType,
    },
    /// A directed cycle, listed as the operations along it.
    Cycle { operations: Vec<OpId> },
    PortReused {
        port: PortRef,
        direction: Direction,
        wires: Vec<WireId>,
    },
    ClosedPortWired {
        wire: WireId,
        port: PortRef,
        direction: Direction,
    },
    UnknownEndpoint {
        wire: WireId,
        port: PortRef,
        direction: Direction,
    },
}

impl Violation {
    /// Wire most closely associated with the violation, if any.
    pub fn wire(&self) -> Option<&WireId> {
        match self {
            Violation::TypeMismatch { wire, .. }
            | Violation::ClosedPortWired { wire, .. }
            | Violation::UnknownEndpoint { wire, .. } => Some(wire),
            Violation::PortReused { wires, .. } => wires.get(1).or(wires.first()),
            Violation::Cycle { .. } => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TypeMismatch {
                wire,
                source_type,
                target_type,
            } => write!(
                f,
                "wire `{wire}` joins a `{source_type}` output to a `{target_type}` input"
            ),
            Violation::Cycle { operations } => {
                let ids: Vec<&str> = operations.iter().map(OpId::as_str).collect();
                write!(f, "closed loop through {}", ids.join(" -> "))
            }
            Violation::PortReused {
                port,
                direction,
                wires,
            } => {
                let ids: Vec<&str> = wires.iter().map(WireId::as_str).collect();
                write!(
                    f,
                    "{}.{}{} is used by several wires: {}",
                    port.op,
                    direction,
                    port.port,
                    ids.join(", ")
                )
            }
            Violation::ClosedPortWired {
                wire,
                port,
                direction,
            } => write!(
                f,
                "wire `{wire}` attaches to closed port {}.{}{}",
                port.op, direction, port.port
            ),
            Violation::UnknownEndpoint {
                wire,
                port,
                direction,
            } => write!(
                f,
                "wire `{wire}` refers to missing port {}.{}{}",
                port.op, direction, port.port
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Check typing, port usage and acyclicity. Violations are data.
pub fn validate(circuit: &Circuit) -> ValidationReport {
    let mut violations = Vec::new();
    let mut usage: BTreeMap<(PortRef, Direction), Vec<WireId>> = BTreeMap::new();

    for wire in circuit.wires.values() {
        let mut endpoint_types = [None, None];
        for (slot, (end, direction)) in [(&wire.source, Direction::Output), (&wire.target, Direction::Input)]
            .into_iter()
            .enumerate()
        {
            let port = circuit
                .operations
                .get(&end.op)
                .and_then(|n| n.ports(direction).get(end.port));
            match port {
                None => violations.push(Violation::UnknownEndpoint {
                    wire: wire.id.clone(),
                    port: end.clone(),
                    direction,
                }),
                Some(p) => {
                    if !p.is_open() {
                        violations.push(Violation::ClosedPortWired {
                            wire: wire.id.clone(),
                            port: end.clone(),
                            direction,
                        });
                    }
                    usage
                        .entry((end.clone(), direction))
                        .or_default()
                        .push(wire.id.clone());
                    endpoint_types[slot] = Some(p.wire_type.clone());
                }
            }
        }
        if let [Some(source_type), Some(target_type)] = endpoint_types {
            if source_type != target_type || wire.wire_type != source_type {
                violations.push(Violation::TypeMismatch {
                    wire: wire.id.clone(),
                    source_type,
                    target_type,
                });
            }
        }
    }

    for ((port, direction), wires) in usage {
        if wires.len() > 1 {
            violations.push(Violation::PortReused {
                port,
                direction,
                wires,
            });
        }
    }

    for cycle in find_cycles(circuit) {
        violations.push(Violation::Cycle { operations: cycle });
    }
    ValidationReport { violations }
}

/// Operation-level successor lists (wire source op -> wire target op), only
/// for wires whose endpoints exist.
pub(crate) fn successors(circuit: &Circuit) -> BTreeMap<&OpId, BTreeSet<&OpId>> {
    let mut succ: BTreeMap<&OpId, BTreeSet<&OpId>> =
        circuit.operations.keys().map(|k| (k, BTreeSet::new())).collect();
    for wire in circuit.wires.values() {
        if let (Some((s, _)), Some((t, _))) = (
            circuit.operations.get_key_value(&wire.source.op),
            circuit.operations.get_key_value(&wire.target.op),
        ) {
            succ.get_mut(s).expect("key present").insert(t);
        }
    }
    succ
}

/// One witness cycle per strongly connected component that contains a loop.
fn find_cycles(circuit: &Circuit) -> Vec<Vec<OpId>> {
    let succ = successors(circuit);
    let ids: Vec<&OpId> = succ.keys().copied().collect();
    let index: BTreeMap<&OpId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let adj: Vec<Vec<usize>> = ids
        .iter()
        .map(|id| succ[id].iter().map(|t| index[t]).collect())
        .collect();

    let components = strongly_connected(&adj);
    let mut cycles = Vec::new();
    for comp in components {
        let members: BTreeSet<usize> = comp.iter().copied().collect();
        let start = *comp.iter().min().expect("non-empty component");
        let cyclic = comp.len() > 1 || adj[start].contains(&start);
        if !cyclic {
            continue;
        }
        // BFS inside the component from `start` back to `start`.
        let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = std::collections::VecDeque::from([start]);
        let mut closing = None;
        'search: while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !members.contains(&v) {
                    continue;
                }
                if v == start {
                    closing = Some(u);
                    break 'search;
                }
                if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(v) {
                    e.insert(u);
                    queue.push_back(v);
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = closing.expect("cycle exists inside a cyclic component");
        while cur != start {
            path.push(cur);
            cur = parent[&cur];
        }
        path.push(start);
        path.reverse();
        path.push(start);
        cycles.push(path.into_iter().map(|i| ids[i].clone()).collect());
    }
    cycles
}

/// Tarjan's algorithm, iterative.
fn strongly_connected(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0usize;
    let mut out = Vec::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if *edge < adj[v].len() {
                let w = adj[v][*edge];
                *edge += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("stack holds component");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_circuit_is_valid() {
        let c = Circuit::builder()
            .operation("P", &[], &["a"], 1)
            .operation("E", &["a"], &[], 1)
            .wire("w1", ("P", 0), ("E", 0))
            .build()
            .unwrap();
        assert!(validate(&c).is_valid());
        assert!(c.is_closed());
    }

    #[test]
    fn two_op_loop_reports_one_cycle() {
        let c = Circuit::builder()
            .operation("A", &["a"], &["a"], 1)
            .operation("B", &["a"], &["a"], 1)
            .wire("w1", ("A", 0), ("B", 0))
            .wire("w2", ("B", 0), ("A", 0))
            .build()
            .unwrap();
        let report = validate(&c);
        let cycles: Vec<_> = report
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::Cycle { .. }))
            .collect();
        assert_eq!(cycles.len(), 1);
        assert_eq!(report.violations.len(), 1);
        if let Violation::Cycle { operations } = cycles[0] {
            assert_eq!(operations.first(), operations.last());
            assert_eq!(operations.len(), 3);
        }
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let c = Circuit::builder()
            .operation("A", &["a"], &["a"], 1)
            .wire("w1", ("A", 0), ("A", 0))
            .build()
            .unwrap();
        let report = validate(&c);
        assert_eq!(
            report.violations,
            vec![Violation::Cycle {
                operations: vec![OpId::new("A"), OpId::new("A")]
            }]
        );
    }

    #[test]
    fn type_mismatch_is_reported_once() {
        let c = Circuit::builder()
            .operation("P", &[], &["q2"], 1)
            .operation("E", &["bit"], &[], 1)
            .wire("w1", ("P", 0), ("E", 0))
            .build()
            .unwrap();
        let report = validate(&c);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::TypeMismatch { .. }));
    }

    #[test]
    fn port_double_use_and_closed_port() {
        let c = Circuit::builder()
            .operation("P", &[], &["a"], 1)
            .operation("E", &["a"], &[], 1)
            .operation("F", &["a"], &[], 1)
            .wire("w1", ("P", 0), ("E", 0))
            .wire("w2", ("P", 0), ("F", 0))
            .close("F", Direction::Input, 0)
            .build()
            .unwrap();
        let report = validate(&c);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PortReused { .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ClosedPortWired { .. })));
    }

    #[test]
    fn unknown_endpoint() {
        let c = Circuit::builder()
            .operation("P", &[], &["a"], 1)
            .wire("w1", ("P", 0), ("Z", 3))
            .build()
            .unwrap();
        let report = validate(&c);
        assert!(matches!(
            report.violations[0],
            Violation::UnknownEndpoint { .. }
        ));
    }

    #[test]
    fn validate_is_pure() {
        let c = Circuit::builder()
            .operation("A", &["a"], &["a"], 1)
            .wire("w1", ("A", 0), ("A", 0))
            .build()
            .unwrap();
        assert_eq!(validate(&c), validate(&c));
    }

    #[test]
    fn dangling_ports_make_a_fragment() {
        let c = Circuit::builder()
            .operation("G", &["a"], &["a"], 1)
            .build()
            .unwrap();
        assert!(validate(&c).is_valid());
        assert!(!c.is_closed());
        assert_eq!(c.dangling_ports().len(), 2);
    }

    #[test]
    fn builder_rejects_duplicates_and_empty_outcomes() {
        let err = Circuit::builder()
            .operation("A", &[], &[], 1)
            .operation("A", &[], &[], 1)
            .build()
            .unwrap_err();
        assert_eq!(err, CircuitError::DuplicateOperation(OpId::new("A")));
        let err = Circuit::builder()
            .operation("A", &[], &[], 0)
            .build()
            .unwrap_err();
        assert_eq!(err, CircuitError::EmptyOutcomeSpace(OpId::new("A")));
    }
}
