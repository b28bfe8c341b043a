//! Runnable checks of factorization, independence of disjoint circuits and
//! uncorrelatability.

use std::fmt;

use rand::RngCore;
use serde::Serialize;

use super::eval::{evaluate_circuit, CircuitModel, OutcomeAssignment};
use super::{marginal, require_local, EffectVector, EngineError, Result, StateVector};
use crate::circuit::{complete_foliation, OpId, SystemType};
use crate::linalg::{RMatrix, PROB_TOL};
use crate::theory::Theory;

/// Joint outcomes beyond this many are not enumerated.
pub const MAX_ASSIGNMENT_PAIRS: u128 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::NotApplicable => "not-applicable",
        })
    }
}

/// The fiducial effects of `system`: unit vectors of the fiducial space.
pub fn fiducial_effects(theory: &dyn Theory, system: &SystemType) -> Result<Vec<EffectVector>> {
    let k = theory.fiducial_count(system)?;
    Ok((0..k).map(|i| EffectVector::fiducial(system.clone(), k, i)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub status: CheckStatus,
    /// Whether the reduced state of the first subsystem is homogeneous.
    pub reduced_homogeneous: bool,
    pub pairs_checked: usize,
    /// max |p(a,b) p(-,-) - p(a,-) p(-,b)| over all pairs.
    pub max_violation: f64,
    /// Indices into the two effect lists of the worst pair.
    pub worst_pair: Option<(usize, usize)>,
}

fn effects_system(effects: &[EffectVector], side: &str) -> Result<SystemType> {
    let first = effects
        .first()
        .ok_or_else(|| EngineError::InvalidArgument(format!("no effects for subsystem {side}")))?;
    if effects.iter().any(|e| e.system != first.system) {
        return Err(EngineError::InvalidArgument(format!(
            "effects for subsystem {side} act on different systems"
        )));
    }
    Ok(first.system.clone())
}

/// Check p(a,b) p(-,-) = p(a,-) p(-,b) for every pair of supplied effects.
/// The split of `joint` into two subsystems is read off the effect systems.
pub fn check_factorization(
    joint: &StateVector,
    effects_a: &[EffectVector],
    effects_b: &[EffectVector],
    theory: &dyn Theory,
) -> Result<FactorizationReport> {
    require_local(theory)?;
    let sys_a = effects_system(effects_a, "a")?;
    let sys_b = effects_system(effects_b, "b")?;
    if sys_a.concat(&sys_b) != joint.system {
        return Err(EngineError::Shape(format!(
            "effects on {sys_a} and {sys_b} do not split {}",
            joint.system
        )));
    }
    let (ka, kb) = (theory.fiducial_count(&sys_a)?, theory.fiducial_count(&sys_b)?);
    if joint.entries.len() != ka * kb
        || effects_a.iter().any(|e| e.entries.len() != ka)
        || effects_b.iter().any(|e| e.entries.len() != kb)
    {
        return Err(EngineError::Shape("effect or state length".into()));
    }
    let keep: Vec<usize> = (0..sys_a.len()).collect();
    let reduced = marginal(joint, &keep, theory)?;
    let reduced_homogeneous = theory.is_homogeneous(&reduced)?;

    let j = RMatrix::from_row_slice(ka, kb, joint.entries.as_slice());
    let ta = theory.trace_effect(&sys_a)?.entries;
    let tb = theory.trace_effect(&sys_b)?.entries;
    let both = ta.dot(&(&j * &tb));
    let mut max_violation: f64 = 0.0;
    let mut worst_pair = None;
    for (i, ea) in effects_a.iter().enumerate() {
        let row = j.tr_mul(&ea.entries);
        let a_only = row.dot(&tb);
        for (k, eb) in effects_b.iter().enumerate() {
            let ab = row.dot(&eb.entries);
            let b_only = ta.dot(&(&j * &eb.entries));
            let v = (ab * both - a_only * b_only).abs();
            if v > max_violation || worst_pair.is_none() {
                max_violation = max_violation.max(v);
                worst_pair = Some((i, k));
            }
        }
    }
    let status = match (reduced_homogeneous, max_violation <= PROB_TOL) {
        (false, _) => CheckStatus::NotApplicable,
        (true, true) => CheckStatus::Pass,
        (true, false) => CheckStatus::Fail,
    };
    Ok(FactorizationReport {
        status,
        reduced_homogeneous,
        pairs_checked: effects_a.len() * effects_b.len(),
        max_violation,
        worst_pair,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub status: CheckStatus,
    pub assignments_checked: usize,
    /// max |p(union) - p(c1) p(c2)|.
    pub max_deviation: f64,
    pub worst: Option<String>,
}

/// Prefix given to the operations of the second circuit in the union.
pub const UNION_PREFIX: &str = "rhs/";

/// Evaluate the disjoint union of two closed circuits under every joint
/// outcome and compare with the product of the separate probabilities.
/// `theory` must know the wire types of both circuits.
pub fn check_disjoint_independence(
    c1: &CircuitModel,
    c2: &CircuitModel,
    theory: &dyn Theory,
) -> Result<IndependenceReport> {
    let pairs = c1.assignment_count().saturating_mul(c2.assignment_count());
    if pairs > MAX_ASSIGNMENT_PAIRS {
        return Err(EngineError::TooLarge(format!("{pairs} joint outcomes")));
    }
    let union = c1.disjoint_union(c2, UNION_PREFIX)?;
    let f1 = complete_foliation(c1.circuit())?;
    let f2 = complete_foliation(c2.circuit())?;
    let fu = complete_foliation(union.circuit())?;
    let p2: Vec<(OutcomeAssignment, f64)> = c2
        .assignments()
        .map(|a| Ok((a.clone(), evaluate_circuit(c2, &a, theory, Some(&f2))?)))
        .collect::<Result<_>>()?;
    let mut max_deviation: f64 = 0.0;
    let mut worst = None;
    let mut checked = 0;
    for a1 in c1.assignments() {
        let p1 = evaluate_circuit(c1, &a1, theory, Some(&f1))?;
        for (a2, q) in &p2 {
            let mut joint = a1.clone();
            for (op, token) in &a2.0 {
                joint.set(OpId::new(format!("{UNION_PREFIX}{op}")), token.clone());
            }
            let pu = evaluate_circuit(&union, &joint, theory, Some(&fu))?;
            let d = (pu - p1 * q).abs();
            if d > max_deviation || worst.is_none() {
                max_deviation = max_deviation.max(d);
                worst = Some(joint.to_string());
            }
            checked += 1;
        }
    }
    Ok(IndependenceReport {
        status: if max_deviation <= PROB_TOL {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        assignments_checked: checked,
        max_deviation,
        worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncorrelatabilityReport {
    /// Pass when the outcome matches the prediction: homogeneous states
    /// factorize in every extension tried, heterogeneous ones have a
    /// correlated extension.
    pub status: CheckStatus,
    pub homogeneous: bool,
    pub extensions_checked: usize,
    /// Largest factorization violation seen across extensions.
    pub max_violation: f64,
}

/// For a homogeneous state, confirm that `trials` random extensions and the
/// theory's correlated extension all factorize; for a heterogeneous state,
/// confirm that the correlated extension does not.
pub fn check_uncorrelatability(
    state: &StateVector,
    theory: &dyn Theory,
    trials: usize,
    rng: &mut dyn RngCore,
) -> Result<UncorrelatabilityReport> {
    require_local(theory)?;
    let homogeneous = theory.is_homogeneous(state)?;
    let effects = fiducial_effects(theory, &state.system)?;
    let mut extensions = vec![theory.correlated_extension(state)?];
    if homogeneous {
        for _ in 0..trials {
            extensions.push(theory.random_extension(state, rng)?);
        }
    }
    let mut max_violation: f64 = 0.0;
    for ext in &extensions {
        let r = check_factorization(ext, &effects, &effects, theory)?;
        max_violation = max_violation.max(r.max_violation);
    }
    let factorizes = max_violation <= PROB_TOL;
    Ok(UncorrelatabilityReport {
        status: if factorizes == homogeneous {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        homogeneous,
        extensions_checked: extensions.len(),
        max_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::linalg::c;
    use crate::random::{density, seeded};
    use crate::theory::{Process, StandardTheory};
    use std::collections::BTreeMap;

    fn qubits() -> StandardTheory {
        StandardTheory::quantum(&[("q", 2)]).unwrap()
    }

    fn sys(labels: &[&str]) -> SystemType {
        SystemType::from_labels(labels)
    }

    #[test]
    fn pure_product_factorizes() {
        let t = qubits();
        let mut psi = crate::linalg::CMatrix::zeros(2, 2);
        psi[(0, 0)] = c(1.0, 0.0);
        let rho = density(&mut seeded(2), 2);
        let joint = t.embed_state(&sys(&["q", "q"]), &psi.kronecker(&rho)).unwrap();
        let ea = fiducial_effects(&t, &sys(&["q"])).unwrap();
        let r = check_factorization(&joint, &ea, &ea, &t).unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert!(r.max_violation < 1e-12);
        assert_eq!(r.pairs_checked, 16);
    }

    #[test]
    fn bell_state_is_not_applicable_and_violates() {
        let t = qubits();
        let mut bell = crate::linalg::CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            bell[(i, j)] = c(0.5, 0.0);
        }
        let joint = t.embed_state(&sys(&["q", "q"]), &bell).unwrap();
        let ea = fiducial_effects(&t, &sys(&["q"])).unwrap();
        let r = check_factorization(&joint, &ea, &ea, &t).unwrap();
        assert_eq!(r.status, CheckStatus::NotApplicable);
        assert!(r.max_violation > 0.1);
    }

    #[test]
    fn classical_uncorrelatability() {
        let t = StandardTheory::classical(&[("bit", 2)]).unwrap();
        let mut rng = seeded(5);
        let point = StateVector::new(sys(&["bit"]), vec![0.0, 0.7]);
        let r = check_uncorrelatability(&point, &t, 10, &mut rng).unwrap();
        assert!(r.homogeneous);
        assert_eq!(r.status, CheckStatus::Pass);
        let coin = StateVector::new(sys(&["bit"]), vec![0.5, 0.5]);
        let r = check_uncorrelatability(&coin, &t, 10, &mut rng).unwrap();
        assert!(!r.homogeneous);
        assert_eq!(r.status, CheckStatus::Pass);
        assert!((r.max_violation - 0.25).abs() < 1e-12);
    }

    #[test]
    fn disjoint_coins() {
        let t = StandardTheory::classical(&[("bit", 2)]).unwrap();
        let coin = || {
            let c = Circuit::builder().operation("C", &[], &[], 2).build().unwrap();
            let mut ps = BTreeMap::new();
            ps.insert(
                OpId::new("C"),
                vec![Process::Stochastic(RMatrix::from_element(1, 1, 0.5)); 2],
            );
            CircuitModel::from_processes(c, &t, ps).unwrap()
        };
        let r = check_disjoint_independence(&coin(), &coin(), &t).unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert_eq!(r.assignments_checked, 4);
        let empty = CircuitModel::from_processes(
            Circuit::builder().build().unwrap(),
            &t,
            BTreeMap::new(),
        )
        .unwrap();
        let r = check_disjoint_independence(&coin(), &empty, &t).unwrap();
        assert_eq!(r.assignments_checked, 2);
        assert_eq!(r.status, CheckStatus::Pass);
    }
}
