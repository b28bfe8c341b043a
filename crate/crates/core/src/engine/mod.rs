//! States, effects and transfer matrices over fiducial index spaces, and
//! the operations that combine them.
//!
//! Composite fiducial indices are row-major over the factors in declared
//! order, so the Kronecker product of factor vectors is the composite vector.

pub mod compress;
pub mod eval;
pub mod theorems;

use std::fmt;

use serde::Serialize;

use crate::circuit::{CircuitError, SystemType};
use crate::linalg::{
    factor_permutation, is_permutation, kron_all, RMatrix, RVector, PROB_TOL,
};
use crate::theory::{Theory, TheoryError};

pub use compress::{compress_to_fiducials, Compression};
pub use eval::{
    evaluate_by_sweep, evaluate_circuit, fragment_transfer_matrix, layer_matrix, CircuitModel,
    Fragment, OperationModel, OutcomeAssignment,
};
pub use theorems::{
    check_disjoint_independence, check_factorization, check_uncorrelatability, CheckStatus,
    FactorizationReport, IndependenceReport, UncorrelatabilityReport,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("theory `{0}` is not locally tomographic")]
    NotLocallyTomographic(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("outcome assignment: {0}")]
    Assignment(String),
    #[error("probability {0} lies outside [0, 1]")]
    OutOfRange(f64),
    #[error("fragment: {0}")]
    Fragment(String),
    #[error("too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;

/// Where a matrix came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatrixLabel {
    /// An operation with its setting and the outcomes it stands for.
    Fragment {
        fragment: String,
        setting: String,
        outcomes: Vec<String>,
    },
    Synthetic { description: String },
}

impl MatrixLabel {
    pub fn synthetic(description: impl Into<String>) -> Self {
        MatrixLabel::Synthetic {
            description: description.into(),
        }
    }
}

/// A K_out x K_in matrix acting on fiducial vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub input: SystemType,
    pub output: SystemType,
    pub entries: RMatrix,
    pub label: MatrixLabel,
}

impl TransferMatrix {
    pub fn new(input: SystemType, output: SystemType, entries: RMatrix, label: MatrixLabel) -> Self {
        TransferMatrix {
            input,
            output,
            entries,
            label,
        }
    }

    pub fn synthetic(
        input: SystemType,
        output: SystemType,
        entries: RMatrix,
        description: &str,
    ) -> Self {
        Self::new(input, output, entries, MatrixLabel::synthetic(description))
    }

    /// Shape check against the theory's fiducial counts.
    pub fn check_shape(&self, theory: &dyn Theory) -> Result<()> {
        let rows = theory.fiducial_count(&self.output)?;
        let cols = theory.fiducial_count(&self.input)?;
        if self.entries.shape() != (rows, cols) {
            return Err(EngineError::Shape(format!(
                "{} -> {} needs {}x{}, got {}x{}",
                self.input,
                self.output,
                rows,
                cols,
                self.entries.nrows(),
                self.entries.ncols()
            )));
        }
        Ok(())
    }

    pub fn is_state(&self) -> bool {
        self.input.is_null()
    }

    pub fn is_effect(&self) -> bool {
        self.output.is_null()
    }

    /// The column of a preparation.
    pub fn as_state(&self) -> Option<StateVector> {
        (self.is_state() && self.entries.ncols() == 1).then(|| StateVector {
            system: self.output.clone(),
            entries: self.entries.column(0).into_owned(),
        })
    }

    /// The row of an effect.
    pub fn as_effect(&self) -> Option<EffectVector> {
        (self.is_effect() && self.entries.nrows() == 1).then(|| EffectVector {
            system: self.input.clone(),
            entries: self.entries.row(0).transpose(),
        })
    }

    /// `next` applied after `self`.
    pub fn then(&self, next: &TransferMatrix) -> Result<TransferMatrix> {
        if self.output != next.input {
            return Err(EngineError::Shape(format!(
                "cannot feed {} into {}",
                self.output, next.input
            )));
        }
        Ok(TransferMatrix::synthetic(
            self.input.clone(),
            next.output.clone(),
            &next.entries * &self.entries,
            "sequential composition",
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateVector {
    pub system: SystemType,
    #[serde(serialize_with = "serialize_vector")]
    pub entries: RVector,
}

fn serialize_vector<S: serde::Serializer>(v: &RVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

impl StateVector {
    pub fn new(system: SystemType, entries: Vec<f64>) -> Self {
        StateVector {
            system,
            entries: RVector::from_vec(entries),
        }
    }

    pub fn null(system: SystemType, k: usize) -> Self {
        StateVector {
            system,
            entries: RVector::zeros(k),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            system: self.system.concat(&other.system),
            entries: self.entries.kronecker(&other.entries),
        }
    }

    pub fn as_transfer(&self, description: &str) -> TransferMatrix {
        TransferMatrix::synthetic(
            SystemType::null(),
            self.system.clone(),
            RMatrix::from_column_slice(self.len(), 1, self.entries.as_slice()),
            description,
        )
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|x| format!("{x}")).collect();
        write!(f, "{}: ({})", self.system, parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectVector {
    pub system: SystemType,
    #[serde(serialize_with = "serialize_vector")]
    pub entries: RVector,
}

impl EffectVector {
    pub fn new(system: SystemType, entries: Vec<f64>) -> Self {
        EffectVector {
            system,
            entries: RVector::from_vec(entries),
        }
    }

    /// The fiducial effect with a 1 in position `index`.
    pub fn fiducial(system: SystemType, k: usize, index: usize) -> Self {
        let mut entries = RVector::zeros(k);
        entries[index] = 1.0;
        EffectVector { system, entries }
    }

    pub fn tensor(&self, other: &EffectVector) -> EffectVector {
        EffectVector {
            system: self.system.concat(&other.system),
            entries: self.entries.kronecker(&other.entries),
        }
    }

    /// r . p
    pub fn apply(&self, state: &StateVector) -> Result<f64> {
        if self.system != state.system || self.entries.len() != state.entries.len() {
            return Err(EngineError::Shape(format!(
                "effect on {} applied to state on {}",
                self.system, state.system
            )));
        }
        Ok(self.entries.dot(&state.entries))
    }

    pub fn as_transfer(&self, description: &str) -> TransferMatrix {
        TransferMatrix::synthetic(
            self.system.clone(),
            SystemType::null(),
            RMatrix::from_row_slice(1, self.entries.len(), self.entries.as_slice()),
            description,
        )
    }
}

fn require_local(theory: &dyn Theory) -> Result<()> {
    if theory.is_locally_tomographic() {
        Ok(())
    } else {
        Err(EngineError::NotLocallyTomographic(theory.name().to_string()))
    }
}

/// Parallel composition: Kronecker product with `z1` on the leading factors.
pub fn tensor_compose(
    z1: &TransferMatrix,
    z2: &TransferMatrix,
    theory: &dyn Theory,
) -> Result<TransferMatrix> {
    require_local(theory)?;
    Ok(TransferMatrix::synthetic(
        z1.input.concat(&z2.input),
        z1.output.concat(&z2.output),
        z1.entries.kronecker(&z2.entries),
        "tensor composition",
    ))
}

/// Square 0/1 matrix reordering the factors of `types`: output factor `i`
/// is input factor `perm[i]`.
pub fn wire_permutation_matrix(
    theory: &dyn Theory,
    types: &SystemType,
    perm: &[usize],
) -> Result<TransferMatrix> {
    if perm.len() != types.len() {
        return Err(EngineError::Shape(format!(
            "permutation of length {} for {} factors",
            perm.len(),
            types.len()
        )));
    }
    if !is_permutation(perm) {
        return Err(EngineError::InvalidArgument(format!("{perm:?} is not a permutation")));
    }
    let dims = factor_dims(theory, types)?;
    let map = factor_permutation(&dims, perm);
    let k = map.len();
    let mut m = RMatrix::zeros(k, k);
    for (o, &i) in map.iter().enumerate() {
        m[(o, i)] = 1.0;
    }
    let output: SystemType = perm.iter().map(|&p| types.factors()[p].clone()).collect();
    Ok(TransferMatrix::synthetic(
        types.clone(),
        output,
        m,
        "wire permutation",
    ))
}

pub(crate) fn factor_dims(theory: &dyn Theory, types: &SystemType) -> Result<Vec<usize>> {
    types
        .factors()
        .iter()
        .map(|t| theory.fiducial_count_of(t).map_err(EngineError::from))
        .collect()
}

/// Entrywise sum; the label lists the merged outcomes.
pub fn coarse_grain(zs: &[TransferMatrix]) -> Result<TransferMatrix> {
    let first = zs
        .first()
        .ok_or_else(|| EngineError::InvalidArgument("nothing to coarse-grain".into()))?;
    let mut entries = RMatrix::zeros(first.entries.nrows(), first.entries.ncols());
    let mut outcomes = Vec::new();
    let mut same_fragment = true;
    for z in zs {
        if z.input != first.input || z.output != first.output || z.entries.shape() != entries.shape()
        {
            return Err(EngineError::Shape("coarse-graining mismatched matrices".into()));
        }
        entries += &z.entries;
        match (&z.label, &first.label) {
            (
                MatrixLabel::Fragment {
                    fragment,
                    setting,
                    outcomes: o,
                },
                MatrixLabel::Fragment {
                    fragment: f0,
                    setting: s0,
                    ..
                },
            ) if fragment == f0 && setting == s0 => outcomes.extend(o.iter().cloned()),
            _ => same_fragment = false,
        }
    }
    let label = match (&first.label, same_fragment) {
        (MatrixLabel::Fragment { fragment, setting, .. }, true) => MatrixLabel::Fragment {
            fragment: fragment.clone(),
            setting: setting.clone(),
            outcomes,
        },
        _ => MatrixLabel::synthetic("coarse-grained"),
    };
    Ok(TransferMatrix::new(
        first.input.clone(),
        first.output.clone(),
        entries,
        label,
    ))
}

/// r^- . p
pub fn trace_probability(state: &StateVector, theory: &dyn Theory) -> Result<f64> {
    theory.trace_effect(&state.system)?.apply(state)
}

pub fn normalize(state: &StateVector, theory: &dyn Theory) -> Result<StateVector> {
    let t = trace_probability(state, theory)?;
    if t.abs() <= PROB_TOL {
        return Err(EngineError::Degenerate(
            "cannot normalize a state of zero trace".into(),
        ));
    }
    Ok(StateVector {
        system: state.system.clone(),
        entries: &state.entries / t,
    })
}

/// Keep the listed factors (in ascending order) and apply the trace effect
/// to the others.
pub fn marginal(state: &StateVector, keep: &[usize], theory: &dyn Theory) -> Result<StateVector> {
    require_local(theory)?;
    let n = state.system.len();
    if let Some(&bad) = keep.iter().find(|&&i| i >= n) {
        return Err(EngineError::InvalidArgument(format!(
            "factor {bad} out of range for {}",
            state.system
        )));
    }
    if state.entries.len() != theory.fiducial_count(&state.system)? {
        return Err(EngineError::Shape("state length".into()));
    }
    let mut parts = Vec::with_capacity(n);
    let mut kept = Vec::new();
    for (i, t) in state.system.factors().iter().enumerate() {
        let single = SystemType::single(t.clone());
        if keep.contains(&i) {
            parts.push(theory.identity(&single)?.entries);
            kept.push(t.clone());
        } else {
            let r = theory.trace_effect(&single)?;
            parts.push(RMatrix::from_row_slice(1, r.entries.len(), r.entries.as_slice()));
        }
    }
    let m = kron_all(&parts);
    Ok(StateVector {
        system: SystemType::new(kept),
        entries: m * &state.entries,
    })
}

pub fn reduced_state(state: &StateVector, keep: usize, theory: &dyn Theory) -> Result<StateVector> {
    marginal(state, &[keep], theory)
}

/// Sum of w_i p_i with w_i >= 0 and sum w_i <= 1.
pub fn mix_states(states: &[StateVector], weights: &[f64]) -> Result<StateVector> {
    if states.len() != weights.len() {
        return Err(EngineError::InvalidArgument(
            "one weight per state is required".into(),
        ));
    }
    let first = states
        .first()
        .ok_or_else(|| EngineError::InvalidArgument("nothing to mix".into()))?;
    if let Some(w) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
        return Err(EngineError::InvalidArgument(format!("weight {w} is negative")));
    }
    let total: f64 = weights.iter().sum();
    if total > 1.0 + PROB_TOL {
        return Err(EngineError::InvalidArgument(format!(
            "weights sum to {total} > 1"
        )));
    }
    let mut entries = RVector::zeros(first.entries.len());
    for (s, &w) in states.iter().zip(weights) {
        if s.system != first.system || s.entries.len() != entries.len() {
            return Err(EngineError::Shape("mixing states of different systems".into()));
        }
        entries += &s.entries * w;
    }
    Ok(StateVector {
        system: first.system.clone(),
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateClass {
    Null,
    HomogeneousPure,
    HomogeneousSubnormalized,
    Heterogeneous,
}

impl fmt::Display for StateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateClass::Null => "null",
            StateClass::HomogeneousPure => "homogeneous-pure",
            StateClass::HomogeneousSubnormalized => "homogeneous-subnormalized",
            StateClass::Heterogeneous => "heterogeneous",
        })
    }
}

pub fn classify_state(state: &StateVector, theory: &dyn Theory) -> Result<StateClass> {
    if state.entries.iter().all(|x| x.abs() <= PROB_TOL) {
        return Ok(StateClass::Null);
    }
    if !theory.is_homogeneous(state)? {
        return Ok(StateClass::Heterogeneous);
    }
    let norm = trace_probability(state, theory)?;
    Ok(if norm >= 1.0 - PROB_TOL {
        StateClass::HomogeneousPure
    } else {
        StateClass::HomogeneousSubnormalized
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff, CMatrix};
    use crate::theory::StandardTheory;

    fn bits() -> StandardTheory {
        StandardTheory::classical(&[("bit", 2), ("trit", 3)]).unwrap()
    }

    fn qubits() -> StandardTheory {
        StandardTheory::quantum(&[("q", 2)]).unwrap()
    }

    fn sys(labels: &[&str]) -> SystemType {
        SystemType::from_labels(labels)
    }

    #[test]
    fn trace_and_normalize_classical() {
        let t = bits();
        let p = StateVector::new(sys(&["bit"]), vec![0.3, 0.2]);
        assert!((trace_probability(&p, &t).unwrap() - 0.5).abs() < 1e-15);
        let n = normalize(&p, &t).unwrap();
        assert!((n.entries[0] - 0.6).abs() < 1e-15 && (n.entries[1] - 0.4).abs() < 1e-15);
        let null = StateVector::null(sys(&["bit"]), 2);
        assert_eq!(trace_probability(&null, &t).unwrap(), 0.0);
        assert!(matches!(normalize(&null, &t), Err(EngineError::Degenerate(_))));
    }

    #[test]
    fn identity_tensor_identity() {
        let t = bits();
        let a = t.identity(&sys(&["bit"])).unwrap();
        let b = t.identity(&sys(&["trit"])).unwrap();
        let ab = tensor_compose(&a, &b, &t).unwrap();
        assert_eq!(ab.entries, RMatrix::identity(6, 6));
        assert_eq!(ab.input, sys(&["bit", "trit"]));
    }

    #[test]
    fn swap_permutes_product_states() {
        let t = bits();
        let p = StateVector::new(sys(&["bit"]), vec![0.25, 0.75]);
        let q = StateVector::new(sys(&["trit"]), vec![0.5, 0.3, 0.2]);
        let swap = wire_permutation_matrix(&t, &sys(&["bit", "trit"]), &[1, 0]).unwrap();
        let out = &swap.entries * &p.tensor(&q).entries;
        assert!((out - q.tensor(&p).entries).amax() < 1e-15);
        assert_eq!(swap.output, sys(&["trit", "bit"]));
        let id = wire_permutation_matrix(&t, &sys(&["bit", "trit"]), &[0, 1]).unwrap();
        assert_eq!(id.entries, RMatrix::identity(6, 6));
        let s2 = wire_permutation_matrix(&t, &sys(&["bit", "bit"]), &[1, 0]).unwrap();
        assert_eq!(&s2.entries * &s2.entries, RMatrix::identity(4, 4));
        assert!(wire_permutation_matrix(&t, &sys(&["bit"]), &[0, 1]).is_err());
        assert!(wire_permutation_matrix(&t, &sys(&["bit", "bit"]), &[0, 0]).is_err());
    }

    #[test]
    fn coarse_grain_readout() {
        let z0 = TransferMatrix::synthetic(
            sys(&["bit"]),
            sys(&["bit"]),
            RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            "r0",
        );
        let z1 = TransferMatrix::synthetic(
            sys(&["bit"]),
            sys(&["bit"]),
            RMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            "r1",
        );
        let sum = coarse_grain(&[z0.clone(), z1]).unwrap();
        assert_eq!(sum.entries, RMatrix::identity(2, 2));
        assert_eq!(coarse_grain(std::slice::from_ref(&z0)).unwrap().entries, z0.entries);
        assert!(coarse_grain(&[]).is_err());
    }

    #[test]
    fn coarse_grain_merges_outcome_labels() {
        let mk = |o: &str| {
            TransferMatrix::new(
                sys(&["bit"]),
                SystemType::null(),
                RMatrix::from_row_slice(1, 2, &[0.5, 0.5]),
                MatrixLabel::Fragment {
                    fragment: "M".into(),
                    setting: "s".into(),
                    outcomes: vec![o.into()],
                },
            )
        };
        let merged = coarse_grain(&[mk("0"), mk("1")]).unwrap();
        assert_eq!(
            merged.label,
            MatrixLabel::Fragment {
                fragment: "M".into(),
                setting: "s".into(),
                outcomes: vec!["0".into(), "1".into()]
            }
        );
    }

    #[test]
    fn mixtures() {
        let t = bits();
        let p0 = StateVector::new(sys(&["bit"]), vec![1.0, 0.0]);
        let p1 = StateVector::new(sys(&["bit"]), vec![0.0, 1.0]);
        let m = mix_states(&[p0.clone(), p1.clone()], &[0.5, 0.5]).unwrap();
        assert_eq!(m.entries.as_slice(), &[0.5, 0.5]);
        assert!((trace_probability(&m, &t).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(mix_states(std::slice::from_ref(&p0), &[1.0]).unwrap(), p0);
        assert!(mix_states(&[p0.clone(), p1.clone()], &[0.7, 0.7]).is_err());
        assert!(mix_states(&[p0, p1], &[-0.1, 0.5]).is_err());
    }

    #[test]
    fn reduced_state_of_products() {
        let t = bits();
        let p = StateVector::new(sys(&["bit"]), vec![0.1, 0.6]);
        let q = StateVector::new(sys(&["trit"]), vec![0.5, 0.3, 0.2]);
        let r = reduced_state(&p.tensor(&q), 0, &t).unwrap();
        assert!((r.entries - &p.entries).amax() < 1e-15);
        let r2 = reduced_state(&q.tensor(&p), 1, &t).unwrap();
        assert!((r2.entries - &p.entries).amax() < 1e-15);
        assert!(reduced_state(&p.tensor(&q), 2, &t).is_err());
    }

    #[test]
    fn bell_reduced_state_is_maximally_mixed() {
        let t = qubits();
        let h = 0.5f64;
        let mut bell = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            bell[(i, j)] = c(h, 0.0);
        }
        let qq = sys(&["q", "q"]);
        let p = t.embed_state(&qq, &bell).unwrap();
        for keep in 0..2 {
            let r = reduced_state(&p, keep, &t).unwrap();
            let rho = t.density_of(&r).unwrap();
            // Partial trace oracle: half the identity.
            let expected = CMatrix::identity(2, 2).scale(0.5);
            assert!(crate::linalg::cmax_abs_diff(&rho, &expected) < 1e-12);
        }
    }

    #[test]
    fn classification() {
        let t = bits();
        let class = |v: Vec<f64>| classify_state(&StateVector::new(sys(&["bit"]), v), &t).unwrap();
        assert_eq!(class(vec![0.0, 0.4]), StateClass::HomogeneousSubnormalized);
        assert_eq!(class(vec![0.5, 0.5]), StateClass::Heterogeneous);
        assert_eq!(class(vec![0.0, 1.0]), StateClass::HomogeneousPure);
        assert_eq!(class(vec![0.0, 0.0]), StateClass::Null);
        let q = qubits();
        let mut zero = CMatrix::zeros(2, 2);
        zero[(0, 0)] = c(1.0, 0.0);
        let p = q.embed_state(&sys(&["q"]), &zero).unwrap();
        assert_eq!(classify_state(&p, &q).unwrap(), StateClass::HomogeneousPure);
        let mixed = q
            .embed_state(&sys(&["q"]), &CMatrix::identity(2, 2).scale(0.5))
            .unwrap();
        assert_eq!(classify_state(&mixed, &q).unwrap(), StateClass::Heterogeneous);
    }

    #[test]
    fn sequential_then() {
        let t = bits();
        let flip = TransferMatrix::synthetic(
            sys(&["bit"]),
            sys(&["bit"]),
            RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            "flip",
        );
        let twice = flip.then(&flip).unwrap();
        assert!(max_abs_diff(&twice.entries, &t.identity(&sys(&["bit"])).unwrap().entries) == 0.0);
        let p = StateVector::new(sys(&["bit"]), vec![0.3, 0.7]).as_transfer("p");
        assert!(p.then(&flip).unwrap().as_state().is_some());
        assert!(flip.then(&p).is_err());
    }
}
