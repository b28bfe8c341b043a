//! Temporal notions defined purely from the wiring graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{successors, Circuit, CircuitError, OpId, WireId};

/// A set of wires, stored in canonical (sorted) order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hypersurface {
    wires: BTreeSet<WireId>,
}

impl Hypersurface {
    pub fn new<I: IntoIterator<Item = WireId>>(wires: I) -> Self {
        Hypersurface {
            wires: wires.into_iter().collect(),
        }
    }

    pub fn wires(&self) -> &BTreeSet<WireId> {
        &self.wires
    }

    /// Wires in canonical order.
    pub fn ordered(&self) -> Vec<WireId> {
        self.wires.iter().cloned().collect()
    }

    pub fn contains(&self, wire: &WireId) -> bool {
        self.wires.contains(wire)
    }

    pub fn len(&self) -> usize {
        self.wires.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wires.is_empty()
    }
}

impl fmt::Display for Hypersurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.wires.iter().map(WireId::as_str).collect();
        write!(f, "{{{}}}", ids.join(", "))
    }
}

impl<'a> FromIterator<&'a str> for Hypersurface {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        Hypersurface::new(iter.into_iter().map(WireId::new))
    }
}

/// The two sides of a cut. Components that touch no cut wire are counted
/// as past.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub past: BTreeSet<OpId>,
    pub future: BTreeSet<OpId>,
}

/// Reflexive-transitive forward reachability between operations.
pub(crate) fn reachability(circuit: &Circuit) -> BTreeMap<OpId, BTreeSet<OpId>> {
    let succ = successors(circuit);
    let mut out = BTreeMap::new();
    for &start in succ.keys() {
        let mut seen: BTreeSet<&OpId> = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in &succ[u] {
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        out.insert(start.clone(), seen.into_iter().cloned().collect());
    }
    out
}

fn check_known(circuit: &Circuit, wires: &[WireId]) -> Result<(), CircuitError> {
    for w in wires {
        if circuit.wire(w).is_none() {
            return Err(CircuitError::UnknownWire(w.clone()));
        }
    }
    Ok(())
}

/// True iff no member wire can be reached from another by tracing forward.
pub fn is_synchronous(circuit: &Circuit, wires: &[WireId]) -> Result<bool, CircuitError> {
    check_known(circuit, wires)?;
    let reach = reachability(circuit);
    Ok(synchronous_with(circuit, &reach, wires))
}

fn synchronous_with(
    circuit: &Circuit,
    reach: &BTreeMap<OpId, BTreeSet<OpId>>,
    wires: &[WireId],
) -> bool {
    for a in wires {
        let wa = circuit.wire(a).expect("checked");
        let Some(forward) = reach.get(&wa.target.op) else {
            continue;
        };
        for b in wires {
            if a == b {
                continue;
            }
            let wb = circuit.wire(b).expect("checked");
            if forward.contains(&wb.source.op) {
                return false;
            }
        }
    }
    true
}

/// Cut the given wires and split the operations into past and future.
/// Returns `None` when some remaining connection joins the two sides.
pub fn partition(circuit: &Circuit, cut: &Hypersurface) -> Option<Partition> {
    let ids: Vec<&OpId> = circuit.op_ids().collect();
    let index: BTreeMap<&OpId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    for wire in circuit.wires() {
        if cut.contains(&wire.id) {
            continue;
        }
        if let (Some(&s), Some(&t)) = (index.get(&wire.source.op), index.get(&wire.target.op)) {
            let (rs, rt) = (find(&mut parent, s), find(&mut parent, t));
            parent[rs] = rt;
        }
    }

    let mut past_roots = BTreeSet::new();
    let mut future_roots = BTreeSet::new();
    for w in cut.wires() {
        let wire = circuit.wire(w)?;
        if let Some(&s) = index.get(&wire.source.op) {
            past_roots.insert(find(&mut parent, s));
        }
        if let Some(&t) = index.get(&wire.target.op) {
            future_roots.insert(find(&mut parent, t));
        }
    }
    if !past_roots.is_disjoint(&future_roots) {
        return None;
    }

    let mut past = BTreeSet::new();
    let mut future = BTreeSet::new();
    for (i, id) in ids.iter().enumerate() {
        if future_roots.contains(&find(&mut parent, i)) {
            future.insert((*id).clone());
        } else {
            past.insert((*id).clone());
        }
    }
    Some(Partition { past, future })
}

/// Synchronous and splitting the circuit into a past and a future joined
/// only through the member wires.
pub fn is_hypersurface(circuit: &Circuit, wires: &[WireId]) -> Result<bool, CircuitError> {
    check_known(circuit, wires)?;
    let reach = reachability(circuit);
    if !synchronous_with(circuit, &reach, wires) {
        return Ok(false);
    }
    Ok(partition(circuit, &Hypersurface::new(wires.iter().cloned())).is_some())
}

fn require_partition(circuit: &Circuit, h: &Hypersurface) -> Result<Partition, CircuitError> {
    let wires = h.ordered();
    if !is_hypersurface(circuit, &wires)? {
        return Err(CircuitError::NotHypersurface(h.to_string()));
    }
    Ok(partition(circuit, h).expect("hypersurface partitions"))
}

/// `h2` is after `h1` when the past of `h1` and the future of `h2` share no
/// operation.
pub fn is_after(circuit: &Circuit, h1: &Hypersurface, h2: &Hypersurface) -> Result<bool, CircuitError> {
    let p1 = require_partition(circuit, h1)?;
    let p2 = require_partition(circuit, h2)?;
    Ok(p1.past.is_disjoint(&p2.future))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;

    fn ws(ids: &[&str]) -> Vec<WireId> {
        ids.iter().map(|s| WireId::new(*s)).collect()
    }

    /// Preparation of a,b; A: a->c; B: b->d; one effect on c,d.
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

    #[test]
    fn synchronous_sets() {
        let two = Circuit::builder()
            .operation("P1", &[], &["t"], 1)
            .operation("P2", &[], &["t"], 1)
            .operation("G", &["t"], &["t"], 1)
            .operation("E1", &["t"], &[], 1)
            .operation("E2", &["t"], &[], 1)
            .wire("w1", ("P1", 0), ("E1", 0))
            .wire("w2", ("P2", 0), ("G", 0))
            .wire("w3", ("G", 0), ("E2", 0))
            .build()
            .unwrap();
        assert!(is_synchronous(&two, &ws(&["w1", "w2"])).unwrap());
        assert!(!is_synchronous(&two, &ws(&["w2", "w3"])).unwrap());

        let c = commuting();
        assert!(is_synchronous(&c, &ws(&["c", "b"])).unwrap());
        assert!(is_synchronous(&c, &ws(&["a", "d"])).unwrap());
        assert!(!is_synchronous(&c, &ws(&["a", "c"])).unwrap());
    }

    #[test]
    fn unknown_wire_is_an_error() {
        let c = commuting();
        assert_eq!(
            is_synchronous(&c, &ws(&["zz"])),
            Err(CircuitError::UnknownWire(WireId::new("zz")))
        );
    }

    #[test]
    fn hypersurfaces_of_the_commuting_circuit() {
        let c = commuting();
        for set in [["a", "b"], ["c", "b"], ["a", "d"], ["c", "d"]] {
            assert!(is_hypersurface(&c, &ws(&set)).unwrap(), "{set:?}");
        }
        // A strand of the same cut is missing: P and E stay connected.
        assert!(!is_hypersurface(&c, &ws(&["a"])).unwrap());
        assert!(!is_hypersurface(&c, &ws(&["a", "c"])).unwrap());
    }

    #[test]
    fn parallel_wires_between_two_operations() {
        let c = Circuit::builder()
            .operation("A", &[], &["t", "t"], 1)
            .operation("B", &["t", "t"], &[], 1)
            .wire("w1", ("A", 0), ("B", 0))
            .wire("w2", ("A", 1), ("B", 1))
            .build()
            .unwrap();
        assert!(is_synchronous(&c, &ws(&["w1"])).unwrap());
        assert!(!is_hypersurface(&c, &ws(&["w1"])).unwrap());
        assert!(is_hypersurface(&c, &ws(&["w1", "w2"])).unwrap());
    }

    #[test]
    fn empty_set_between_disconnected_parts() {
        let c = Circuit::builder()
            .operation("P1", &[], &["t"], 1)
            .operation("E1", &["t"], &[], 1)
            .operation("P2", &[], &["t"], 1)
            .operation("E2", &["t"], &[], 1)
            .wire("w1", ("P1", 0), ("E1", 0))
            .wire("w2", ("P2", 0), ("E2", 0))
            .build()
            .unwrap();
        assert!(is_hypersurface(&c, &[]).unwrap());
        // One strand alone is also a valid cut: the other component floats.
        assert!(is_hypersurface(&c, &ws(&["w1"])).unwrap());
        let p = partition(&c, &Hypersurface::default()).unwrap();
        assert!(p.future.is_empty());
        assert_eq!(p.past.len(), 4);
    }

    #[test]
    fn after_relation() {
        let c = commuting();
        let h1: Hypersurface = ["a", "b"].into_iter().collect();
        let h2: Hypersurface = ["c", "b"].into_iter().collect();
        let h3: Hypersurface = ["a", "d"].into_iter().collect();
        let h4: Hypersurface = ["c", "d"].into_iter().collect();
        assert!(is_after(&c, &h1, &h2).unwrap());
        assert!(is_after(&c, &h1, &h1).unwrap());
        assert!(!is_after(&c, &h2, &h1).unwrap());
        assert!(is_after(&c, &h2, &h4).unwrap());
        assert!(is_after(&c, &h3, &h4).unwrap());
        assert!(is_after(&c, &h1, &h4).unwrap());
        // H2 and H3 are incomparable.
        assert!(!is_after(&c, &h2, &h3).unwrap());
        assert!(!is_after(&c, &h3, &h2).unwrap());
    }

    #[test]
    fn after_rejects_non_hypersurfaces() {
        let c = commuting();
        let good: Hypersurface = ["a", "b"].into_iter().collect();
        let bad: Hypersurface = ["a", "c"].into_iter().collect();
        assert!(matches!(
            is_after(&c, &good, &bad),
            Err(CircuitError::NotHypersurface(_))
        ));
    }
}
