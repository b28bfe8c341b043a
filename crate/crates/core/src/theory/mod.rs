//! Theories: fiducial counts per wire type, identity and trace objects,
//! validity of transfer matrices, homogeneity, and gate construction.

pub mod counting;
pub mod gates;
pub mod quantum;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::circuit::{SystemType, WireType};
use crate::engine::{EffectVector, MatrixLabel, StateVector, TransferMatrix};
use crate::linalg::{
    c, complex_numerical_rank, hermitian_eigen, kron_all, CMatrix, CVector, RMatrix, RVector,
    RANK_TOL,
};

pub use counting::{
    composite_counting_check, counting_k, product_state_span_rank, CountingModel, CountingReport,
    Relation,
};
pub use gates::{GateSpec, GATES};
pub use quantum::{CpMap, MapReport, OperatorBasis};

/// Largest Hilbert dimension of one side of a channel or a classified
/// state.
pub const MAX_HILBERT_DIM: usize = 16;
/// Largest distinguishable count for one wire type.
pub const MAX_TYPE_N: usize = 64;
/// Largest number of fiducial entries of one operation matrix.
pub const MAX_MATRIX_ENTRIES: usize = 1 << 20;
/// Tolerance for classical substochasticity.
pub const CLASSICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TheoryError {
    #[error("unknown wire type `{0}`")]
    UnknownType(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, TheoryError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Classical,
    Quantum,
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::Classical => "classical",
            SystemKind::Quantum => "quantum",
        })
    }
}

impl FromStr for SystemKind {
    type Err = TheoryError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(SystemKind::Classical),
            "quantum" => Ok(SystemKind::Quantum),
            _ => Err(TheoryError::InvalidArgument(format!("unknown system kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoryKind {
    Classical,
    Quantum,
    /// Classical and quantum wire types side by side; classical wires carry
    /// dephased operators.
    Hybrid,
}

impl TheoryKind {
    pub fn default_system_kind(self) -> SystemKind {
        match self {
            TheoryKind::Classical => SystemKind::Classical,
            TheoryKind::Quantum | TheoryKind::Hybrid => SystemKind::Quantum,
        }
    }

    pub fn allows(self, kind: SystemKind) -> bool {
        match self {
            TheoryKind::Classical => kind == SystemKind::Classical,
            TheoryKind::Quantum => kind == SystemKind::Quantum,
            TheoryKind::Hybrid => true,
        }
    }
}

impl fmt::Display for TheoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoryKind::Classical => "classical",
            TheoryKind::Quantum => "quantum",
            TheoryKind::Hybrid => "hybrid",
        })
    }
}

impl FromStr for TheoryKind {
    type Err = TheoryError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(TheoryKind::Classical),
            "quantum" => Ok(TheoryKind::Quantum),
            "hybrid" => Ok(TheoryKind::Hybrid),
            _ => Err(TheoryError::InvalidArgument(format!("unknown theory `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeSpec {
    pub kind: SystemKind,
    /// Number of perfectly distinguishable states.
    pub n: usize,
}

impl TypeSpec {
    pub fn classical(n: usize) -> Self {
        TypeSpec {
            kind: SystemKind::Classical,
            n,
        }
    }

    pub fn quantum(n: usize) -> Self {
        TypeSpec {
            kind: SystemKind::Quantum,
            n,
        }
    }

    pub fn k(&self) -> usize {
        match self.kind {
            SystemKind::Classical => self.n,
            SystemKind::Quantum => self.n * self.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Shape { expected: (usize, usize), found: (usize, usize) },
    NegativeEntry { row: usize, col: usize, value: f64 },
    ColumnSumExceedsOne { col: usize, sum: f64 },
    NotCompletelyPositive { min_eigenvalue: f64 },
    TraceIncreasing { max_eigenvalue: f64 },
    TooLarge { dimension: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { expected, found } => write!(
                f,
                "shape {}x{} where {}x{} is required",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::NegativeEntry { row, col, value } => {
                write!(f, "negative entry {value:e} at ({row}, {col})")
            }
            Violation::ColumnSumExceedsOne { col, sum } => {
                write!(f, "column {col} sums to {sum}")
            }
            Violation::NotCompletelyPositive { min_eigenvalue } => {
                write!(f, "not completely positive: Choi eigenvalue {min_eigenvalue:e}")
            }
            Violation::TraceIncreasing { max_eigenvalue } => {
                write!(f, "trace increasing: eigenvalue {max_eigenvalue} above 1")
            }
            Violation::TooLarge { dimension } => {
                write!(f, "Hilbert dimension {dimension} is too large to check")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A probabilistic theory as seen by the evaluation engine.
pub trait Theory: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Number of distinguishable states N of a wire type.
    fn distinguishable_count(&self, t: &WireType) -> Result<usize>;

    /// Fiducial count K of a wire type.
    fn fiducial_count_of(&self, t: &WireType) -> Result<usize>;

    /// Product of the factor counts; the null system has K = 1.
    fn fiducial_count(&self, s: &SystemType) -> Result<usize> {
        s.factors()
            .iter()
            .try_fold(1usize, |acc, t| Ok(acc.saturating_mul(self.fiducial_count_of(t)?)))
    }

    fn is_locally_tomographic(&self) -> bool {
        true
    }

    fn identity(&self, s: &SystemType) -> Result<TransferMatrix> {
        let k = self.fiducial_count(s)?;
        Ok(TransferMatrix::synthetic(
            s.clone(),
            s.clone(),
            RMatrix::identity(k, k),
            "identity",
        ))
    }

    fn trace_effect(&self, s: &SystemType) -> Result<EffectVector>;

    /// State fed into a closed input port.
    fn closed_input_state(&self, t: &WireType) -> Result<StateVector>;

    fn validate_transfer_matrix(&self, z: &TransferMatrix) -> Result<ValidityReport>;

    fn is_homogeneous(&self, _state: &StateVector) -> Result<bool> {
        Err(TheoryError::Unsupported(format!(
            "{} has no homogeneity predicate",
            self.name()
        )))
    }

    /// A state on `s s` whose first reduced state is `state` and whose
    /// halves are correlated whenever `state` is heterogeneous.
    fn correlated_extension(&self, _state: &StateVector) -> Result<StateVector> {
        Err(TheoryError::Unsupported(format!(
            "{} has no extension constructor",
            self.name()
        )))
    }

    /// A random state on `s s` whose first reduced state is `state`.
    fn random_extension(&self, _state: &StateVector, _rng: &mut dyn RngCore) -> Result<StateVector> {
        Err(TheoryError::Unsupported(format!(
            "{} has no extension constructor",
            self.name()
        )))
    }
}

/// A raw description of one outcome of an operation over all its ports.
#[derive(Debug, Clone, PartialEq)]
pub enum Process {
    /// Substochastic matrix on classical systems.
    Stochastic(RMatrix),
    /// Linear map on operators, given by its Choi matrix.
    Channel(CpMap),
    /// A transfer matrix given directly.
    Transfer(RMatrix),
}

impl Process {
    /// Sum over outcomes; all processes must be of the same variant.
    pub fn sum(ps: &[Process]) -> Result<Process> {
        let first = ps
            .first()
            .ok_or_else(|| TheoryError::InvalidArgument("no processes to sum".into()))?;
        let mismatch = || TheoryError::InvalidArgument("cannot sum processes of different kinds".into());
        match first {
            Process::Stochastic(m) | Process::Transfer(m) => {
                let mut acc = RMatrix::zeros(m.nrows(), m.ncols());
                for p in ps {
                    match (p, first) {
                        (Process::Stochastic(x), Process::Stochastic(_))
                        | (Process::Transfer(x), Process::Transfer(_))
                            if x.shape() == acc.shape() =>
                        {
                            acc += x
                        }
                        _ => return Err(mismatch()),
                    }
                }
                Ok(match first {
                    Process::Stochastic(_) => Process::Stochastic(acc),
                    _ => Process::Transfer(acc),
                })
            }
            Process::Channel(_) => {
                let maps: Vec<CpMap> = ps
                    .iter()
                    .map(|p| match p {
                        Process::Channel(m) => Ok(m.clone()),
                        _ => Err(mismatch()),
                    })
                    .collect::<Result<_>>()?;
                CpMap::sum(&maps).map(Process::Channel).ok_or_else(mismatch)
            }
        }
    }
}

#[derive(Debug, Clone)]
struct TypeEntry {
    spec: TypeSpec,
    basis: Arc<OperatorBasis>,
}

/// Classical probability theory, quantum theory, or both side by side.
#[derive(Debug, Clone)]
pub struct StandardTheory {
    kind: TheoryKind,
    types: BTreeMap<String, TypeEntry>,
}

impl StandardTheory {
    pub fn new(kind: TheoryKind, types: BTreeMap<String, TypeSpec>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (label, spec) in types {
            if label.is_empty() {
                return Err(TheoryError::InvalidArgument("empty type label".into()));
            }
            if spec.n == 0 || spec.n > MAX_TYPE_N {
                return Err(TheoryError::InvalidArgument(format!(
                    "type `{label}` needs 1 <= N <= {MAX_TYPE_N}, got {}",
                    spec.n
                )));
            }
            if spec.kind == SystemKind::Quantum && spec.n > MAX_HILBERT_DIM {
                return Err(TheoryError::TooLarge(format!(
                    "quantum type `{label}` with N = {} exceeds {MAX_HILBERT_DIM}",
                    spec.n
                )));
            }
            if !kind.allows(spec.kind) {
                return Err(TheoryError::InvalidArgument(format!(
                    "{kind} theory cannot hold {} type `{label}`",
                    spec.kind
                )));
            }
            let basis = Arc::new(match spec.kind {
                SystemKind::Classical => OperatorBasis::classical(spec.n),
                SystemKind::Quantum => OperatorBasis::quantum(spec.n),
            });
            entries.insert(label, TypeEntry { spec, basis });
        }
        Ok(StandardTheory {
            kind,
            types: entries,
        })
    }

    fn with_kind(kind: TheoryKind, types: &[(&str, usize)]) -> Result<Self> {
        let spec_kind = kind.default_system_kind();
        Self::new(
            kind,
            types
                .iter()
                .map(|(l, n)| (l.to_string(), TypeSpec { kind: spec_kind, n: *n }))
                .collect(),
        )
    }

    pub fn classical(types: &[(&str, usize)]) -> Result<Self> {
        Self::with_kind(TheoryKind::Classical, types)
    }

    pub fn quantum(types: &[(&str, usize)]) -> Result<Self> {
        Self::with_kind(TheoryKind::Quantum, types)
    }

    pub fn hybrid(types: &[(&str, TypeSpec)]) -> Result<Self> {
        Self::new(
            TheoryKind::Hybrid,
            types.iter().map(|(l, s)| (l.to_string(), *s)).collect(),
        )
    }

    pub fn kind(&self) -> TheoryKind {
        self.kind
    }

    pub fn types(&self) -> impl Iterator<Item = (&str, TypeSpec)> {
        self.types.iter().map(|(l, e)| (l.as_str(), e.spec))
    }

    /// Union of the type registries as a hybrid theory (or the common kind
    /// when both agree). A label declared differently in both is an error.
    pub fn merge(&self, other: &StandardTheory) -> Result<StandardTheory> {
        let mut types: BTreeMap<String, TypeSpec> =
            self.types.iter().map(|(l, e)| (l.clone(), e.spec)).collect();
        for (l, e) in &other.types {
            match types.get(l) {
                Some(s) if *s != e.spec => {
                    return Err(TheoryError::InvalidArgument(format!(
                        "type `{l}` is declared differently in the two theories"
                    )))
                }
                _ => {
                    types.insert(l.clone(), e.spec);
                }
            }
        }
        let kind = if self.kind == other.kind {
            self.kind
        } else {
            TheoryKind::Hybrid
        };
        StandardTheory::new(kind, types)
    }

    pub fn spec(&self, t: &WireType) -> Result<TypeSpec> {
        self.entry(t).map(|e| e.spec)
    }

    fn entry(&self, t: &WireType) -> Result<&TypeEntry> {
        self.types
            .get(t.as_str())
            .ok_or_else(|| TheoryError::UnknownType(t.as_str().to_string()))
    }

    pub fn specs(&self, s: &SystemType) -> Result<Vec<TypeSpec>> {
        s.factors().iter().map(|t| self.spec(t)).collect()
    }

    pub fn is_classical_system(&self, s: &SystemType) -> Result<bool> {
        Ok(self
            .specs(s)?
            .iter()
            .all(|sp| sp.kind == SystemKind::Classical))
    }

    pub fn is_quantum_system(&self, s: &SystemType) -> Result<bool> {
        Ok(self.specs(s)?.iter().all(|sp| sp.kind == SystemKind::Quantum))
    }

    /// Product of distinguishable counts.
    pub fn hilbert_dim(&self, s: &SystemType) -> Result<usize> {
        self.specs(s)?
            .iter()
            .try_fold(1usize, |acc, sp| {
                acc.checked_mul(sp.n)
                    .ok_or_else(|| TheoryError::TooLarge(format!("dimension of {s}")))
            })
    }

    /// Product operator basis of a system.
    pub fn basis(&self, s: &SystemType) -> Result<OperatorBasis> {
        let d = self.hilbert_dim(s)?;
        if d > MAX_HILBERT_DIM {
            return Err(TheoryError::TooLarge(format!(
                "{s} has Hilbert dimension {d} > {MAX_HILBERT_DIM}"
            )));
        }
        let parts: Vec<Arc<OperatorBasis>> = s
            .factors()
            .iter()
            .map(|t| self.entry(t).map(|e| e.basis.clone()))
            .collect::<Result<_>>()?;
        Ok(OperatorBasis::product(parts.iter().map(|b| b.as_ref())))
    }

    pub fn embed_state(&self, s: &SystemType, rho: &CMatrix) -> Result<StateVector> {
        let b = self.basis(s)?;
        check_dim(rho, b.dim())?;
        Ok(StateVector {
            system: s.clone(),
            entries: b.embed(rho),
        })
    }

    pub fn embed_effect(&self, s: &SystemType, e: &CMatrix) -> Result<EffectVector> {
        let b = self.basis(s)?;
        check_dim(e, b.dim())?;
        Ok(EffectVector {
            system: s.clone(),
            entries: b.effect_row(e),
        })
    }

    /// The operator a state vector stands for.
    pub fn density_of(&self, state: &StateVector) -> Result<CMatrix> {
        let b = self.basis(&state.system)?;
        if b.k() != state.entries.len() {
            return Err(TheoryError::InvalidArgument("state length".into()));
        }
        Ok(b.reconstruct(&state.entries))
    }

    /// Transfer matrix of a process between two systems.
    pub fn transfer_of(&self, input: &SystemType, output: &SystemType, p: &Process) -> Result<RMatrix> {
        let k_in = self.fiducial_count(input)?;
        let k_out = self.fiducial_count(output)?;
        if k_in.saturating_mul(k_out) > MAX_MATRIX_ENTRIES {
            return Err(TheoryError::TooLarge(format!(
                "{k_out}x{k_in} transfer matrix"
            )));
        }
        match p {
            Process::Stochastic(m) => {
                if !self.is_classical_system(input)? || !self.is_classical_system(output)? {
                    return Err(TheoryError::InvalidArgument(
                        "stochastic matrices act on classical wires only".into(),
                    ));
                }
                check_shape(m, k_out, k_in)?;
                Ok(m.clone())
            }
            Process::Transfer(m) => {
                check_shape(m, k_out, k_in)?;
                Ok(m.clone())
            }
            Process::Channel(map) => {
                let bi = self.basis(input)?;
                let bo = self.basis(output)?;
                if map.d_in() != bi.dim() || map.d_out() != bo.dim() {
                    return Err(TheoryError::Arity(format!(
                        "map {}->{} on systems of dimension {}->{}",
                        map.d_in(),
                        map.d_out(),
                        bi.dim(),
                        bo.dim()
                    )));
                }
                Ok(bi.transfer_matrix(&bo, |x| map.apply(x)))
            }
        }
    }

    /// Channel standing for a process, for simulation by density matrices.
    pub fn channel_of(&self, input: &SystemType, output: &SystemType, p: &Process) -> Result<CpMap> {
        match p {
            Process::Channel(m) => Ok(m.clone()),
            Process::Stochastic(s) => {
                let (di, dout) = (self.hilbert_dim(input)?, self.hilbert_dim(output)?);
                check_shape(s, dout, di)?;
                Ok(quantum::stochastic_channel(s))
            }
            Process::Transfer(_) => Err(TheoryError::Unsupported(
                "a bare transfer matrix has no channel form".into(),
            )),
        }
    }

    /// Per-outcome processes of a named gate. `outcomes`, when given, must
    /// equal the gate's natural outcome count or 1 (all outcomes merged).
    pub fn gate_processes(
        &self,
        name: &str,
        args: &[serde_json::Value],
        inputs: &SystemType,
        outputs: &SystemType,
        outcomes: Option<usize>,
    ) -> Result<Vec<Process>> {
        let ins = self.specs(inputs)?;
        let outs = self.specs(outputs)?;
        let natural = gates::build(self.kind, name, args, &ins, &outs)?;
        match outcomes {
            None => Ok(natural),
            Some(k) if k == natural.len() => Ok(natural),
            Some(1) => Ok(vec![Process::sum(&natural)?]),
            Some(k) => Err(TheoryError::Arity(format!(
                "gate `{name}` has {} outcomes, not {k}",
                natural.len()
            ))),
        }
    }

    /// Per-outcome transfer matrices of a named gate, labelled with the
    /// operation id and setting.
    pub fn gate(
        &self,
        op: &str,
        name: &str,
        args: &[serde_json::Value],
        inputs: &SystemType,
        outputs: &SystemType,
        outcomes: Option<usize>,
    ) -> Result<Vec<TransferMatrix>> {
        let ps = self.gate_processes(name, args, inputs, outputs, outcomes)?;
        ps.iter()
            .enumerate()
            .map(|(i, p)| {
                Ok(TransferMatrix::new(
                    inputs.clone(),
                    outputs.clone(),
                    self.transfer_of(inputs, outputs, p)?,
                    MatrixLabel::Fragment {
                        fragment: op.to_string(),
                        setting: name.to_string(),
                        outcomes: vec![i.to_string()],
                    },
                ))
            })
            .collect()
    }

    /// A substochastic matrix on classical systems, validated.
    pub fn classical_transfer_matrix(
        &self,
        input: &SystemType,
        output: &SystemType,
        m: RMatrix,
        label: MatrixLabel,
    ) -> Result<TransferMatrix> {
        if !self.is_classical_system(input)? || !self.is_classical_system(output)? {
            return Err(TheoryError::InvalidArgument(
                "classical matrices need classical systems".into(),
            ));
        }
        let z = TransferMatrix::new(input.clone(), output.clone(), m, label);
        let report = self.validate_transfer_matrix(&z)?;
        match report.violations.first() {
            None => Ok(z),
            Some(v) => Err(TheoryError::InvalidMatrix(v.to_string())),
        }
    }

    /// Transfer matrix of a Choi-represented map, rejected unless the map
    /// is completely positive and trace non-increasing.
    pub fn quantum_transfer_matrix(
        &self,
        input: &SystemType,
        output: &SystemType,
        map: &CpMap,
        label: MatrixLabel,
    ) -> Result<TransferMatrix> {
        let report = map.validate();
        if !report.completely_positive {
            return Err(TheoryError::InvalidMatrix(format!(
                "not completely positive: Choi eigenvalue {:e}",
                report.min_choi_eigenvalue
            )));
        }
        if !report.trace_non_increasing {
            return Err(TheoryError::InvalidMatrix(format!(
                "trace increasing: eigenvalue {}",
                report.max_trace_eigenvalue
            )));
        }
        let z = self.transfer_of(input, output, &Process::Channel(map.clone()))?;
        Ok(TransferMatrix::new(input.clone(), output.clone(), z, label))
    }

    fn classical_support(&self, state: &StateVector) -> usize {
        let top = state.entries.amax();
        state
            .entries
            .iter()
            .filter(|x| x.abs() > RANK_TOL * top)
            .count()
    }
}

fn check_dim(m: &CMatrix, d: usize) -> Result<()> {
    if m.shape() != (d, d) {
        return Err(TheoryError::Arity(format!(
            "operator is {}x{}, system dimension is {d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_shape(m: &RMatrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(TheoryError::Arity(format!(
            "matrix is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn substochastic_violations(m: &RMatrix) -> Vec<Violation> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v < -CLASSICAL_TOL || !v.is_finite() {
                out.push(Violation::NegativeEntry { row: i, col: j, value: v });
            }
        }
        let sum = m.column(j).sum();
        if sum > 1.0 + CLASSICAL_TOL {
            out.push(Violation::ColumnSumExceedsOne { col: j, sum });
        }
    }
    out
}

impl Theory for StandardTheory {
    fn name(&self) -> &str {
        match self.kind {
            TheoryKind::Classical => "classical",
            TheoryKind::Quantum => "quantum",
            TheoryKind::Hybrid => "hybrid",
        }
    }

    fn distinguishable_count(&self, t: &WireType) -> Result<usize> {
        Ok(self.spec(t)?.n)
    }

    fn fiducial_count_of(&self, t: &WireType) -> Result<usize> {
        Ok(self.spec(t)?.k())
    }

    fn trace_effect(&self, s: &SystemType) -> Result<EffectVector> {
        let rows: Vec<RMatrix> = s
            .factors()
            .iter()
            .map(|t| {
                let r = self.entry(t)?.basis.trace_row();
                Ok(RMatrix::from_row_slice(1, r.len(), r.as_slice()))
            })
            .collect::<Result<_>>()?;
        let m = kron_all(&rows);
        Ok(EffectVector {
            system: s.clone(),
            entries: m.row(0).transpose(),
        })
    }

    fn closed_input_state(&self, t: &WireType) -> Result<StateVector> {
        let e = self.entry(t)?;
        let mut zero = CMatrix::zeros(e.spec.n, e.spec.n);
        zero[(0, 0)] = c(1.0, 0.0);
        Ok(StateVector {
            system: SystemType::single(t.clone()),
            entries: e.basis.embed(&zero),
        })
    }

    fn validate_transfer_matrix(&self, z: &TransferMatrix) -> Result<ValidityReport> {
        let k_in = self.fiducial_count(&z.input)?;
        let k_out = self.fiducial_count(&z.output)?;
        if z.entries.shape() != (k_out, k_in) {
            return Ok(ValidityReport {
                violations: vec![Violation::Shape {
                    expected: (k_out, k_in),
                    found: z.entries.shape(),
                }],
            });
        }
        if self.is_classical_system(&z.input)? && self.is_classical_system(&z.output)? {
            return Ok(ValidityReport {
                violations: substochastic_violations(&z.entries),
            });
        }
        let (di, dout) = (self.hilbert_dim(&z.input)?, self.hilbert_dim(&z.output)?);
        if di > MAX_HILBERT_DIM || dout > MAX_HILBERT_DIM {
            return Ok(ValidityReport {
                violations: vec![Violation::TooLarge {
                    dimension: di.max(dout),
                }],
            });
        }
        let bi = self.basis(&z.input)?;
        let bo = self.basis(&z.output)?;
        let choi = bi.choi_of_transfer(&bo, &z.entries);
        let report = quantum::check_choi(&choi, di, dout);
        let mut violations = Vec::new();
        if !report.completely_positive {
            violations.push(Violation::NotCompletelyPositive {
                min_eigenvalue: report.min_choi_eigenvalue,
            });
        }
        if !report.trace_non_increasing {
            violations.push(Violation::TraceIncreasing {
                max_eigenvalue: report.max_trace_eigenvalue,
            });
        }
        Ok(ValidityReport { violations })
    }

    fn is_homogeneous(&self, state: &StateVector) -> Result<bool> {
        if self.is_classical_system(&state.system)? {
            return Ok(self.classical_support(state) <= 1);
        }
        let rho = self.density_of(state)?;
        Ok(complex_numerical_rank(&rho, RANK_TOL) <= 1)
    }

    fn correlated_extension(&self, state: &StateVector) -> Result<StateVector> {
        let doubled = state.system.concat(&state.system);
        if self.is_classical_system(&state.system)? {
            let k = state.entries.len();
            let mut out = RVector::zeros(k * k);
            for i in 0..k {
                out[i * k + i] = state.entries[i];
            }
            return Ok(StateVector {
                system: doubled,
                entries: out,
            });
        }
        if !self.is_quantum_system(&state.system)? {
            return Err(TheoryError::Unsupported(
                "extensions of mixed classical and quantum systems".into(),
            ));
        }
        let rho = self.density_of(state)?;
        let (values, vectors) = hermitian_eigen(&rho);
        let d = rho.nrows();
        let mut ext = CMatrix::zeros(d * d, d * d);
        for (k, &lambda) in values.iter().enumerate() {
            let v = vectors.column(k).into_owned();
            let p = &v * v.adjoint();
            ext += p.kronecker(&p) * c(lambda, 0.0);
        }
        self.embed_state(&doubled, &ext)
    }

    fn random_extension(&self, state: &StateVector, rng: &mut dyn RngCore) -> Result<StateVector> {
        let doubled = state.system.concat(&state.system);
        if self.is_classical_system(&state.system)? {
            let k = state.entries.len();
            let mut out = RVector::zeros(k * k);
            for i in 0..k {
                let cond = crate::random::distribution(rng, k);
                for j in 0..k {
                    out[i * k + j] = state.entries[i] * cond[j];
                }
            }
            return Ok(StateVector {
                system: doubled,
                entries: out,
            });
        }
        if !self.is_quantum_system(&state.system)? {
            return Err(TheoryError::Unsupported(
                "extensions of mixed classical and quantum systems".into(),
            ));
        }
        // Purify on a copy of the system, then act on the copy with a
        // random channel.
        let rho = self.density_of(state)?;
        let (values, vectors) = hermitian_eigen(&rho);
        let d = rho.nrows();
        let mut psi = CVector::zeros(d * d);
        let top = values.iter().cloned().fold(0.0, f64::max);
        for (k, &lambda) in values.iter().enumerate() {
            // Round-off eigenvalues would leave sqrt(1e-16) amplitudes.
            let w = if lambda > RANK_TOL * top { lambda.sqrt() } else { 0.0 };
            for i in 0..d {
                psi[i * d + k] += vectors[(i, k)] * w;
            }
        }
        let pure = &psi * psi.adjoint();
        let channel = CpMap::from_kraus(d, d, &crate::random::kraus(rng, d, d, 2));
        let ext = CpMap::identity(d).tensor(&channel).apply(&pure);
        self.embed_state(&doubled, &ext)
    }
}
