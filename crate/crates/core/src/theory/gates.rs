//! Named gates. Each gate produces one process per outcome over all of the
//! operation's ports, in port order.
//!
//! Arguments are JSON values. Real numbers are plain numbers, complex numbers
//! are either plain numbers or `[re, im]` pairs, matrices are arrays of rows.

use serde_json::Value;

use super::quantum::{check_choi, projector, CpMap};
use super::{Process, Result, SystemKind, TheoryError, TheoryKind, TypeSpec};
use crate::linalg::{c, cmax_abs_diff, CMatrix, CVector, RMatrix, ONE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Classical,
    Quantum,
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateSpec {
    pub name: &'static str,
    pub min_args: usize,
    /// `None` for variadic gates.
    pub max_args: Option<usize>,
    pub family: Family,
}

impl GateSpec {
    pub fn accepts_arg_count(&self, n: usize) -> bool {
        n >= self.min_args && self.max_args.is_none_or(|m| n <= m)
    }
}

const fn spec(name: &'static str, min: usize, max: Option<usize>, family: Family) -> GateSpec {
    GateSpec {
        name,
        min_args: min,
        max_args: max,
        family,
    }
}

pub const GATES: &[GateSpec] = &[
    spec("id", 0, Some(0), Family::Shared),
    spec("trace", 0, Some(0), Family::Shared),
    spec("matrix", 1, None, Family::Shared),
    spec("flip", 1, Some(1), Family::Classical),
    spec("set", 1, Some(1), Family::Classical),
    spec("readout", 0, Some(0), Family::Classical),
    spec("dist", 1, Some(1), Family::Classical),
    spec("x", 0, Some(0), Family::Quantum),
    spec("z", 0, Some(0), Family::Quantum),
    spec("h", 0, Some(0), Family::Quantum),
    spec("cnot", 0, Some(0), Family::Quantum),
    spec("depolarize", 1, Some(1), Family::Quantum),
    spec("measure_z", 0, Some(0), Family::Quantum),
    spec("prep_ket", 1, Some(1), Family::Quantum),
    spec("prep_density", 1, Some(1), Family::Quantum),
    spec("povm", 1, Some(1), Family::Quantum),
    spec("unitary", 1, Some(1), Family::Quantum),
    spec("kraus", 1, Some(1), Family::Quantum),
    spec("instrument", 1, Some(1), Family::Quantum),
];

pub fn lookup(name: &str) -> Option<&'static GateSpec> {
    GATES.iter().find(|g| g.name == name)
}

fn arity(msg: impl Into<String>) -> TheoryError {
    TheoryError::Arity(msg.into())
}

fn bad_arg(msg: impl Into<String>) -> TheoryError {
    TheoryError::InvalidArgument(msg.into())
}

pub fn parse_real(v: &Value) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad_arg(format!("expected a number, found {v}")))
}

pub fn parse_complex(v: &Value) -> Result<num_complex::Complex64> {
    if let Some(x) = v.as_f64() {
        return Ok(c(x, 0.0));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(c(parse_real(re)?, parse_real(im)?)),
        _ => Err(bad_arg(format!(
            "expected a number or an [re, im] pair, found {v}"
        ))),
    }
}

fn parse_array(v: &Value) -> Result<&Vec<Value>> {
    v.as_array()
        .ok_or_else(|| bad_arg(format!("expected an array, found {v}")))
}

pub fn parse_cvector(v: &Value) -> Result<CVector> {
    let items = parse_array(v)?;
    let xs: Vec<_> = items.iter().map(parse_complex).collect::<Result<_>>()?;
    Ok(CVector::from_vec(xs))
}

pub fn parse_rvector(v: &Value) -> Result<Vec<f64>> {
    parse_array(v)?.iter().map(parse_real).collect()
}

fn rows_of(v: &Value) -> Result<(usize, usize, Vec<&Value>)> {
    let rows = parse_array(v)?;
    if rows.is_empty() {
        return Err(bad_arg("empty matrix"));
    }
    let width = parse_array(&rows[0])?.len();
    let mut cells = Vec::with_capacity(rows.len() * width);
    for r in rows {
        let r = parse_array(r)?;
        if r.len() != width || width == 0 {
            return Err(bad_arg("matrix rows must be non-empty and of equal length"));
        }
        cells.extend(r.iter());
    }
    Ok((rows.len(), width, cells))
}

pub fn parse_cmatrix(v: &Value) -> Result<CMatrix> {
    let (r, w, cells) = rows_of(v)?;
    let xs: Vec<_> = cells.into_iter().map(parse_complex).collect::<Result<_>>()?;
    Ok(CMatrix::from_row_slice(r, w, &xs))
}

pub fn parse_rmatrix(v: &Value) -> Result<RMatrix> {
    let (r, w, cells) = rows_of(v)?;
    let xs: Vec<_> = cells.into_iter().map(parse_real).collect::<Result<_>>()?;
    Ok(RMatrix::from_row_slice(r, w, &xs))
}

fn parse_cmatrix_list(v: &Value) -> Result<Vec<CMatrix>> {
    let items = parse_array(v)?;
    if items.is_empty() {
        return Err(bad_arg("empty list of matrices"));
    }
    items.iter().map(parse_cmatrix).collect()
}

fn dim(specs: &[TypeSpec]) -> Result<usize> {
    specs.iter().try_fold(1usize, |acc, s| {
        acc.checked_mul(s.n)
            .filter(|&d| d <= super::MAX_HILBERT_DIM * super::MAX_HILBERT_DIM * 16)
            .ok_or_else(|| TheoryError::TooLarge("port dimension".into()))
    })
}

fn quantum_dim(specs: &[TypeSpec]) -> Result<usize> {
    let d = dim(specs)?;
    if d > super::MAX_HILBERT_DIM {
        return Err(TheoryError::TooLarge(format!(
            "Hilbert dimension {d} > {}",
            super::MAX_HILBERT_DIM
        )));
    }
    Ok(d)
}

fn all_classical(specs: &[TypeSpec]) -> bool {
    specs.iter().all(|s| s.kind == SystemKind::Classical)
}

fn one(specs: &[TypeSpec], what: &str, gate: &str) -> Result<TypeSpec> {
    match specs {
        [s] => Ok(*s),
        _ => Err(arity(format!("`{gate}` needs exactly one {what} wire"))),
    }
}

fn same_ports(ins: &[TypeSpec], outs: &[TypeSpec], gate: &str) -> Result<()> {
    if ins != outs || ins.is_empty() {
        return Err(arity(format!(
            "`{gate}` needs identical, non-empty input and output types"
        )));
    }
    Ok(())
}

fn require_quantum(specs: &[TypeSpec], gate: &str) -> Result<()> {
    if specs.iter().any(|s| s.kind != SystemKind::Quantum) {
        return Err(arity(format!("`{gate}` acts on quantum wires")));
    }
    Ok(())
}

fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = ONE;
    v
}

fn unit_projector(n: usize, i: usize) -> CMatrix {
    projector(&basis_vector(n, i))
}

/// Build the per-outcome processes of gate `name`.
pub fn build(
    theory: TheoryKind,
    name: &str,
    args: &[Value],
    ins: &[TypeSpec],
    outs: &[TypeSpec],
) -> Result<Vec<Process>> {
    let spec = lookup(name).ok_or_else(|| TheoryError::UnknownGate(name.to_string()))?;
    if !spec.accepts_arg_count(args.len()) {
        return Err(arity(format!(
            "`{name}` takes {} argument(s), got {}",
            match spec.max_args {
                Some(m) if m == spec.min_args => m.to_string(),
                Some(m) => format!("{}..={m}", spec.min_args),
                None => format!("at least {}", spec.min_args),
            },
            args.len()
        )));
    }
    match spec.family {
        Family::Quantum if theory == TheoryKind::Classical => {
            return Err(bad_arg(format!("`{name}` is not a classical gate")))
        }
        Family::Classical if !(all_classical(ins) && all_classical(outs)) => {
            return Err(arity(format!("`{name}` acts on classical wires")))
        }
        _ => {}
    }
    let processes = match name {
        "id" => {
            same_ports(ins, outs, name)?;
            if all_classical(ins) {
                let d = dim(ins)?;
                vec![Process::Stochastic(RMatrix::identity(d, d))]
            } else {
                vec![Process::Channel(CpMap::identity(quantum_dim(ins)?))]
            }
        }
        "trace" => {
            if ins.is_empty() || !outs.is_empty() {
                return Err(arity("`trace` needs inputs and no outputs"));
            }
            if all_classical(ins) {
                vec![Process::Stochastic(RMatrix::from_element(1, dim(ins)?, 1.0))]
            } else {
                let d = quantum_dim(ins)?;
                vec![Process::Channel(CpMap::effect(&CMatrix::identity(d, d)))]
            }
        }
        "matrix" => {
            let ms: Vec<RMatrix> = args.iter().map(parse_rmatrix).collect::<Result<_>>()?;
            if all_classical(ins) && all_classical(outs) {
                ms.into_iter().map(Process::Stochastic).collect()
            } else {
                ms.into_iter().map(Process::Transfer).collect()
            }
        }
        "flip" => {
            let t = one(ins, "input", name)?;
            same_ports(ins, outs, name)?;
            let p = parse_real(&args[0])?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad_arg(format!("flip probability {p} outside [0, 1]")));
            }
            let n = t.n;
            let mut m = RMatrix::identity(n, n) * (1.0 - p);
            for i in 0..n {
                m[((i + 1) % n, i)] += p;
            }
            vec![Process::Stochastic(m)]
        }
        "set" => {
            let t = one(outs, "output", name)?;
            if ins.len() > 1 {
                return Err(arity("`set` takes at most one input"));
            }
            let i = args[0]
                .as_u64()
                .map(|i| i as usize)
                .filter(|&i| i < t.n)
                .ok_or_else(|| bad_arg(format!("`set` index must be an integer below {}", t.n)))?;
            let cols = dim(ins)?;
            let mut m = RMatrix::zeros(t.n, cols);
            m.row_mut(i).fill(1.0);
            vec![Process::Stochastic(m)]
        }
        "readout" => {
            let t = one(ins, "input", name)?;
            match outs {
                [] => (0..t.n)
                    .map(|k| {
                        let mut m = RMatrix::zeros(1, t.n);
                        m[(0, k)] = 1.0;
                        Process::Stochastic(m)
                    })
                    .collect(),
                [o] if *o == t => (0..t.n)
                    .map(|k| {
                        let mut m = RMatrix::zeros(t.n, t.n);
                        m[(k, k)] = 1.0;
                        Process::Stochastic(m)
                    })
                    .collect(),
                _ => return Err(arity("`readout` outputs nothing or its input type")),
            }
        }
        "dist" => {
            if !ins.is_empty() || outs.is_empty() {
                return Err(arity("`dist` needs outputs and no inputs"));
            }
            let v = parse_rvector(&args[0])?;
            let d = dim(outs)?;
            if v.len() != d {
                return Err(arity(format!("`dist` needs {d} entries, got {}", v.len())));
            }
            vec![Process::Stochastic(RMatrix::from_column_slice(d, 1, &v))]
        }
        "x" | "z" | "h" => {
            let t = one(ins, "input", name)?;
            same_ports(ins, outs, name)?;
            require_quantum(ins, name)?;
            let n = t.n;
            let w = std::f64::consts::TAU / n as f64;
            let u = match name {
                "x" => CMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { ONE } else { c(0.0, 0.0) }),
                "z" => CMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        c((w * i as f64).cos(), (w * i as f64).sin())
                    } else {
                        c(0.0, 0.0)
                    }
                }),
                _ => {
                    let s = 1.0 / (n as f64).sqrt();
                    CMatrix::from_fn(n, n, |i, j| {
                        let a = w * (i * j) as f64;
                        c(s * a.cos(), s * a.sin())
                    })
                }
            };
            vec![Process::Channel(CpMap::from_unitary(&u))]
        }
        "cnot" => {
            same_ports(ins, outs, name)?;
            require_quantum(ins, name)?;
            let [a, b] = ins else {
                return Err(arity("`cnot` needs two wires"));
            };
            if a.n != b.n {
                return Err(arity("`cnot` needs wires of equal dimension"));
            }
            let n = a.n;
            let mut u = CMatrix::zeros(n * n, n * n);
            for x in 0..n {
                for y in 0..n {
                    u[(x * n + (x + y) % n, x * n + y)] = ONE;
                }
            }
            vec![Process::Channel(CpMap::from_unitary(&u))]
        }
        "depolarize" => {
            same_ports(ins, outs, name)?;
            require_quantum(ins, name)?;
            let lambda = parse_real(&args[0])?;
            if !(0.0..=1.0).contains(&lambda) {
                return Err(bad_arg(format!("depolarizing strength {lambda} outside [0, 1]")));
            }
            let d = quantum_dim(ins)?;
            let map = CpMap::from_linear_map(d, d, |x| {
                let tr = crate::linalg::trace(x);
                x * c(1.0 - lambda, 0.0) + CMatrix::identity(d, d) * (tr * c(lambda / d as f64, 0.0))
            });
            vec![Process::Channel(map)]
        }
        "measure_z" => {
            let t = one(ins, "input", name)?;
            require_quantum(ins, name)?;
            let n = t.n;
            match outs {
                [] => (0..n)
                    .map(|k| Process::Channel(CpMap::effect(&unit_projector(n, k))))
                    .collect(),
                [o] if o.n == n => (0..n)
                    .map(|k| {
                        let p = unit_projector(n, k);
                        Process::Channel(CpMap::from_kraus(n, n, &[p]))
                    })
                    .collect(),
                _ => return Err(arity("`measure_z` outputs nothing or one wire of its dimension")),
            }
        }
        "prep_ket" => {
            if !ins.is_empty() {
                return Err(arity("`prep_ket` takes no inputs"));
            }
            let d = quantum_dim(outs)?;
            let v = parse_cvector(&args[0])?;
            if v.len() != d {
                return Err(arity(format!("`prep_ket` needs {d} amplitudes, got {}", v.len())));
            }
            let norm = v.norm();
            if norm == 0.0 {
                return Err(bad_arg("zero vector"));
            }
            let v = v / c(norm, 0.0);
            vec![Process::Channel(CpMap::preparation(&projector(&v)))]
        }
        "prep_density" => {
            if !ins.is_empty() {
                return Err(arity("`prep_density` takes no inputs"));
            }
            let d = quantum_dim(outs)?;
            let rho = parse_cmatrix(&args[0])?;
            square_of(&rho, d, name)?;
            vec![Process::Channel(CpMap::preparation(&rho))]
        }
        "povm" => {
            if !outs.is_empty() {
                return Err(arity("`povm` has no outputs"));
            }
            let d = quantum_dim(ins)?;
            let es = parse_cmatrix_list(&args[0])?;
            let mut out = Vec::with_capacity(es.len());
            for e in &es {
                square_of(e, d, name)?;
                out.push(Process::Channel(CpMap::effect(e)));
            }
            out
        }
        "unitary" => {
            same_ports(ins, outs, name)?;
            let d = quantum_dim(ins)?;
            let u = parse_cmatrix(&args[0])?;
            square_of(&u, d, name)?;
            if cmax_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(d, d)) > 1e-10 {
                return Err(TheoryError::InvalidMatrix("matrix is not unitary".into()));
            }
            vec![Process::Channel(CpMap::from_unitary(&u))]
        }
        "kraus" => {
            let (di, dout) = (quantum_dim(ins)?, quantum_dim(outs)?);
            let ks = parse_cmatrix_list(&args[0])?;
            kraus_shapes(&ks, di, dout)?;
            vec![Process::Channel(CpMap::from_kraus(di, dout, &ks))]
        }
        "instrument" => {
            let (di, dout) = (quantum_dim(ins)?, quantum_dim(outs)?);
            let lists = parse_array(&args[0])?;
            if lists.is_empty() {
                return Err(bad_arg("an instrument needs at least one outcome"));
            }
            let mut out = Vec::with_capacity(lists.len());
            for l in lists {
                let ks = parse_cmatrix_list(l)?;
                kraus_shapes(&ks, di, dout)?;
                out.push(Process::Channel(CpMap::from_kraus(di, dout, &ks)));
            }
            out
        }
        _ => unreachable!("every listed gate is handled"),
    };
    check_processes(&processes)?;
    Ok(processes)
}

fn square_of(m: &CMatrix, d: usize, gate: &str) -> Result<()> {
    if m.shape() != (d, d) {
        return Err(arity(format!(
            "`{gate}` needs {d}x{d} matrices, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn kraus_shapes(ks: &[CMatrix], di: usize, dout: usize) -> Result<()> {
    for k in ks {
        if k.shape() != (dout, di) {
            return Err(arity(format!(
                "Kraus operators must be {dout}x{di}, got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
    }
    Ok(())
}

/// Every outcome must be valid on its own and the outcomes together must not
/// increase probability.
fn check_processes(ps: &[Process]) -> Result<()> {
    match ps.first() {
        Some(Process::Stochastic(_)) => {
            let mut sum: Option<RMatrix> = None;
            for p in ps {
                let Process::Stochastic(m) = p else { continue };
                if let Some(v) = m.iter().find(|x| **x < -super::CLASSICAL_TOL || !x.is_finite()) {
                    return Err(TheoryError::InvalidMatrix(format!("negative entry {v}")));
                }
                match &mut sum {
                    Some(s) if s.shape() == m.shape() => *s += m,
                    Some(_) => return Err(arity("outcome matrices differ in shape")),
                    None => sum = Some(m.clone()),
                }
            }
            if let Some(s) = sum {
                for j in 0..s.ncols() {
                    let col = s.column(j).sum();
                    if col > 1.0 + super::CLASSICAL_TOL {
                        return Err(TheoryError::InvalidMatrix(format!(
                            "column {j} of the summed outcomes is {col} > 1"
                        )));
                    }
                }
            }
            Ok(())
        }
        Some(Process::Channel(first)) => {
            let mut maps = Vec::with_capacity(ps.len());
            for p in ps {
                let Process::Channel(m) = p else { continue };
                let r = m.validate();
                if !r.completely_positive {
                    return Err(TheoryError::InvalidMatrix(format!(
                        "not completely positive: Choi eigenvalue {:e}",
                        r.min_choi_eigenvalue
                    )));
                }
                maps.push(m.clone());
            }
            let total = CpMap::sum(&maps).ok_or_else(|| arity("outcome maps differ in shape"))?;
            let r = check_choi(total.choi(), first.d_in(), first.d_out());
            if !r.trace_non_increasing {
                return Err(TheoryError::InvalidMatrix(format!(
                    "outcomes together increase trace: eigenvalue {}",
                    r.max_trace_eigenvalue
                )));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn q(n: usize) -> TypeSpec {
        TypeSpec::quantum(n)
    }

    fn b(n: usize) -> TypeSpec {
        TypeSpec::classical(n)
    }

    #[test]
    fn flip_is_stochastic() {
        let ps = build(TheoryKind::Classical, "flip", &[json!(0.25)], &[b(2)], &[b(2)]).unwrap();
        let Process::Stochastic(m) = &ps[0] else { panic!() };
        assert_eq!(m, &RMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]));
        assert!(build(TheoryKind::Classical, "flip", &[json!(1.5)], &[b(2)], &[b(2)]).is_err());
    }

    #[test]
    fn set_prepares_and_resets() {
        let ps = build(TheoryKind::Classical, "set", &[json!(1)], &[], &[b(3)]).unwrap();
        let Process::Stochastic(m) = &ps[0] else { panic!() };
        assert_eq!(m.as_slice(), &[0.0, 1.0, 0.0]);
        let ps = build(TheoryKind::Classical, "set", &[json!(0)], &[b(2)], &[b(3)]).unwrap();
        let Process::Stochastic(m) = &ps[0] else { panic!() };
        assert_eq!(m.shape(), (3, 2));
        assert_eq!(m.row(0).sum(), 2.0);
        assert!(build(TheoryKind::Classical, "set", &[json!(3)], &[], &[b(3)]).is_err());
    }

    #[test]
    fn quantum_gates_need_quantum_wires() {
        assert!(build(TheoryKind::Classical, "h", &[], &[b(2)], &[b(2)]).is_err());
        assert!(build(TheoryKind::Hybrid, "h", &[], &[b(2)], &[b(2)]).is_err());
        assert!(build(TheoryKind::Quantum, "h", &[], &[q(2)], &[q(2)]).is_ok());
        assert!(build(TheoryKind::Quantum, "flip", &[json!(0.1)], &[q(2)], &[q(2)]).is_err());
    }

    #[test]
    fn measure_z_variants() {
        assert_eq!(build(TheoryKind::Quantum, "measure_z", &[], &[q(2)], &[]).unwrap().len(), 2);
        assert_eq!(
            build(TheoryKind::Quantum, "measure_z", &[], &[q(3)], &[q(3)]).unwrap().len(),
            3
        );
        assert_eq!(
            build(TheoryKind::Hybrid, "measure_z", &[], &[q(2)], &[b(2)]).unwrap().len(),
            2
        );
        assert!(build(TheoryKind::Hybrid, "measure_z", &[], &[q(2)], &[b(3)]).is_err());
    }

    #[test]
    fn invalid_quantum_arguments() {
        let bad_povm = json!([[[1, 0], [0, 1]], [[1, 0], [0, 0]]]);
        assert!(matches!(
            build(TheoryKind::Quantum, "povm", &[bad_povm], &[q(2)], &[]),
            Err(TheoryError::InvalidMatrix(_))
        ));
        let not_unitary = json!([[1, 1], [0, 1]]);
        assert!(build(TheoryKind::Quantum, "unitary", &[not_unitary], &[q(2)], &[q(2)]).is_err());
        let negative = json!([[1, 0], [0, -0.5]]);
        assert!(build(TheoryKind::Quantum, "prep_density", &[negative], &[], &[q(2)]).is_err());
        let complex_ket = json!([[0.6, 0], [0, 0.8]]);
        assert!(build(TheoryKind::Quantum, "prep_ket", &[complex_ket], &[], &[q(2)]).is_ok());
        assert!(matches!(
            build(TheoryKind::Quantum, "nope", &[], &[], &[]),
            Err(TheoryError::UnknownGate(_))
        ));
        assert!(matches!(
            build(TheoryKind::Quantum, "h", &[json!(1)], &[q(2)], &[q(2)]),
            Err(TheoryError::Arity(_))
        ));
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex(&json!([1.5, -2])).unwrap(), c(1.5, -2.0));
        assert_eq!(parse_complex(&json!(3)).unwrap(), c(3.0, 0.0));
        assert!(parse_complex(&json!([1, 2, 3])).is_err());
        assert!(parse_cmatrix(&json!([[1, 2], [3]])).is_err());
        assert!(parse_cmatrix(&json!([])).is_err());
    }
}
