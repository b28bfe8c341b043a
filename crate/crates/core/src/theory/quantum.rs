//! Operator bases, Choi-represented maps, and the embedding of quantum
//! objects into fiducial probability vectors.
//!
//! A basis is a list of K positive operators P^b on a Hilbert space of
//! dimension D. An operator X embeds as p_b = Tr(P^b X). Transfer matrices
//! are Z = M G_in^-1 with M_bc = Tr(P_out^b $(P_in^c)) and G the Gram matrix
//! of the input basis.

use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::{
    c, ckron_all, hermitian_eigenvalues, psd_check, trace, CMatrix, CVector, RMatrix, RVector,
    ONE, PSD_TOL, ZERO,
};

/// Hilbert-space operators above this dimension are refused.
pub const MAX_BASIS_DIM: usize = 32;

#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    operators: Vec<CMatrix>,
    gram: RMatrix,
    gram_inv: RMatrix,
}

impl OperatorBasis {
    fn from_operators(dim: usize, operators: Vec<CMatrix>) -> Self {
        let k = operators.len();
        let mut gram = RMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let g = trace(&(&operators[a] * &operators[b])).re;
                gram[(a, b)] = g;
                gram[(b, a)] = g;
            }
        }
        let gram_inv = gram
            .clone()
            .try_inverse()
            .expect("basis operators are linearly independent");
        OperatorBasis {
            dim,
            operators,
            gram,
            gram_inv,
        }
    }

    /// The N^2 projectors onto |i>, (|i>+|j>)/sqrt2 and (|i>+i|j>)/sqrt2 for
    /// i < j, in that order.
    pub fn quantum(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        let mut ops = Vec::with_capacity(n * n);
        for i in 0..n {
            let mut v = CVector::zeros(n);
            v[i] = ONE;
            ops.push(projector(&v));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            for j in i + 1..n {
                let mut plus = CVector::zeros(n);
                plus[i] = c(h, 0.0);
                plus[j] = c(h, 0.0);
                ops.push(projector(&plus));
                let mut plus_i = CVector::zeros(n);
                plus_i[i] = c(h, 0.0);
                plus_i[j] = c(0.0, h);
                ops.push(projector(&plus_i));
            }
        }
        Self::from_operators(n, ops)
    }

    /// The N diagonal projectors; embedding keeps only the diagonal.
    pub fn classical(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        let ops = (0..n)
            .map(|i| {
                let mut m = CMatrix::zeros(n, n);
                m[(i, i)] = ONE;
                m
            })
            .collect();
        OperatorBasis {
            dim: n,
            operators: ops,
            gram: RMatrix::identity(n, n),
            gram_inv: RMatrix::identity(n, n),
        }
    }

    /// Basis of the null system: the single operator [1].
    pub fn null() -> Self {
        Self::classical(1)
    }

    /// Product basis in row-major factor order.
    pub fn tensor(&self, other: &OperatorBasis) -> Self {
        let mut ops = Vec::with_capacity(self.k() * other.k());
        for a in &self.operators {
            for b in &other.operators {
                ops.push(a.kronecker(b));
            }
        }
        OperatorBasis {
            dim: self.dim * other.dim,
            operators: ops,
            gram: self.gram.kronecker(&other.gram),
            gram_inv: self.gram_inv.kronecker(&other.gram_inv),
        }
    }

    pub fn product<'a, I: IntoIterator<Item = &'a OperatorBasis>>(factors: I) -> Self {
        factors
            .into_iter()
            .fold(Self::null(), |acc, b| acc.tensor(b))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn gram(&self) -> &RMatrix {
        &self.gram
    }

    pub fn gram_inv(&self) -> &RMatrix {
        &self.gram_inv
    }

    /// p_b = Tr(P^b X), complex in general.
    pub fn embed_complex(&self, x: &CMatrix) -> CVector {
        assert_eq!(x.nrows(), self.dim, "operator dimension");
        CVector::from_iterator(
            self.k(),
            self.operators.iter().map(|p| trace_of_product(p, x)),
        )
    }

    /// Real embedding of a Hermitian operator.
    pub fn embed(&self, x: &CMatrix) -> RVector {
        self.embed_complex(x).map(|z| z.re)
    }

    /// Sum of q_b P^b.
    pub fn synthesize(&self, q: &CVector) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (p, &w) in self.operators.iter().zip(q.iter()) {
            if w != ZERO {
                out += p * w;
            }
        }
        out
    }

    /// Inverse of [`embed`](Self::embed) on the span of the basis.
    pub fn reconstruct(&self, p: &RVector) -> CMatrix {
        let q = &self.gram_inv * p;
        self.synthesize(&q.map(|x| c(x, 0.0)))
    }

    /// Coefficients of the trace functional: r with r.p = Tr X.
    pub fn trace_row(&self) -> RVector {
        let t = RVector::from_iterator(self.k(), self.operators.iter().map(|p| trace(p).re));
        &self.gram_inv * t
    }

    /// Row r with r.p = Tr(E X) for every X in the span.
    pub fn effect_row(&self, e: &CMatrix) -> RVector {
        &self.gram_inv * self.embed(e)
    }

    /// Transfer matrix of a linear map `f` from this basis to `out`.
    pub fn transfer_matrix<F: Fn(&CMatrix) -> CMatrix>(&self, out: &OperatorBasis, f: F) -> RMatrix {
        let mut m = RMatrix::zeros(out.k(), self.k());
        for (g, p) in self.operators.iter().enumerate() {
            let image = f(p);
            m.set_column(g, &out.embed(&image));
        }
        m * &self.gram_inv
    }

    /// Choi matrix of the complex-linear map that a transfer matrix `z`
    /// induces from this basis to `out`.
    pub fn choi_of_transfer(&self, out: &OperatorBasis, z: &RMatrix) -> CMatrix {
        let (di, dout) = (self.dim, out.dim);
        let zc = z.map(|x| c(x, 0.0));
        let ginv = out.gram_inv.map(|x| c(x, 0.0));
        let mut choi = CMatrix::zeros(di * dout, di * dout);
        for i in 0..di {
            for j in 0..di {
                let mut unit = CMatrix::zeros(di, di);
                unit[(i, j)] = ONE;
                let q = &ginv * (&zc * self.embed_complex(&unit));
                let block = out.synthesize(&q);
                choi.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&block);
            }
        }
        choi
    }
}

fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            if x != ZERO {
                s += x * b[(k, i)];
            }
        }
    }
    s
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Partial trace of an operator on `d_a * d_b`, keeping the first factor
/// when `keep_first` is true.
pub fn partial_trace(m: &CMatrix, d_a: usize, d_b: usize, keep_first: bool) -> CMatrix {
    if keep_first {
        let mut out = CMatrix::zeros(d_a, d_a);
        for i in 0..d_a {
            for j in 0..d_a {
                let mut s = ZERO;
                for k in 0..d_b {
                    s += m[(i * d_b + k, j * d_b + k)];
                }
                out[(i, j)] = s;
            }
        }
        out
    } else {
        let mut out = CMatrix::zeros(d_b, d_b);
        for i in 0..d_b {
            for j in 0..d_b {
                let mut s = ZERO;
                for k in 0..d_a {
                    s += m[(k * d_b + i, k * d_b + j)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapReport {
    pub completely_positive: bool,
    pub trace_non_increasing: bool,
    /// Smallest eigenvalue of the Choi matrix.
    pub min_choi_eigenvalue: f64,
    /// Largest eigenvalue of the output partial trace of the Choi matrix.
    pub max_trace_eigenvalue: f64,
}

impl MapReport {
    pub fn is_valid(&self) -> bool {
        self.completely_positive && self.trace_non_increasing
    }
}

pub fn check_choi(choi: &CMatrix, d_in: usize, d_out: usize) -> MapReport {
    let (cp, lo) = psd_check(choi, PSD_TOL);
    let reduced = partial_trace(choi, d_in, d_out, true);
    let hi = hermitian_eigenvalues(&reduced).last().copied().unwrap_or(0.0);
    MapReport {
        completely_positive: cp,
        trace_non_increasing: hi <= 1.0 + PSD_TOL,
        min_choi_eigenvalue: lo,
        max_trace_eigenvalue: hi,
    }
}

/// A linear map between operator spaces, stored as its Choi matrix
/// J = sum_ij |i><j| (x) $(|i><j|), input factor first.
#[derive(Debug, Clone, PartialEq)]
pub struct CpMap {
    d_in: usize,
    d_out: usize,
    choi: CMatrix,
}

impl CpMap {
    pub fn from_choi(d_in: usize, d_out: usize, choi: CMatrix) -> Option<Self> {
        (choi.nrows() == d_in * d_out && choi.ncols() == d_in * d_out).then_some(CpMap {
            d_in,
            d_out,
            choi,
        })
    }

    pub fn from_linear_map<F: Fn(&CMatrix) -> CMatrix>(d_in: usize, d_out: usize, f: F) -> Self {
        let mut choi = CMatrix::zeros(d_in * d_out, d_in * d_out);
        for i in 0..d_in {
            for j in 0..d_in {
                let mut unit = CMatrix::zeros(d_in, d_in);
                unit[(i, j)] = ONE;
                let img = f(&unit);
                assert_eq!(img.shape(), (d_out, d_out), "image dimension");
                choi.view_mut((i * d_out, j * d_out), (d_out, d_out)).copy_from(&img);
            }
        }
        CpMap { d_in, d_out, choi }
    }

    /// X -> sum_k K X K^dagger. All Kraus operators must be d_out x d_in.
    pub fn from_kraus(d_in: usize, d_out: usize, kraus: &[CMatrix]) -> Self {
        Self::from_linear_map(d_in, d_out, |x| {
            let mut out = CMatrix::zeros(d_out, d_out);
            for k in kraus {
                out += k * x * k.adjoint();
            }
            out
        })
    }

    pub fn from_unitary(u: &CMatrix) -> Self {
        Self::from_kraus(u.ncols(), u.nrows(), std::slice::from_ref(u))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_linear_map(d, d, |x| x.clone())
    }

    /// Preparation of `rho` from the null system.
    pub fn preparation(rho: &CMatrix) -> Self {
        CpMap {
            d_in: 1,
            d_out: rho.nrows(),
            choi: rho.clone(),
        }
    }

    /// Effect X -> Tr(E X) onto the null system.
    pub fn effect(e: &CMatrix) -> Self {
        let d = e.nrows();
        Self::from_linear_map(d, 1, |x| CMatrix::from_element(1, 1, trace_of_product(e, x)))
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        self.choi
            .view((i * self.d_out, j * self.d_out), (self.d_out, self.d_out))
            .into_owned()
    }

    /// $(X) = sum_ij X_ij block(i, j).
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(x.shape(), (self.d_in, self.d_in), "input dimension");
        let mut out = CMatrix::zeros(self.d_out, self.d_out);
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                let w = x[(i, j)];
                if w != ZERO {
                    out += self
                        .choi
                        .view((i * self.d_out, j * self.d_out), (self.d_out, self.d_out))
                        * w;
                }
            }
        }
        out
    }

    /// `next` after `self`.
    pub fn then(&self, next: &CpMap) -> CpMap {
        assert_eq!(self.d_out, next.d_in, "composition dimension");
        CpMap::from_linear_map(self.d_in, next.d_out, |x| next.apply(&self.apply(x)))
    }

    /// Parallel composition with `self` on the first factor.
    pub fn tensor(&self, other: &CpMap) -> CpMap {
        let (a, b) = (self.d_in, other.d_in);
        let (ao, bo) = (self.d_out, other.d_out);
        CpMap::from_linear_map(a * b, ao * bo, |x| {
            let mut out = CMatrix::zeros(ao * bo, ao * bo);
            for i in 0..a {
                for j in 0..a {
                    let mut unit = CMatrix::zeros(a, a);
                    unit[(i, j)] = ONE;
                    let left = self.apply(&unit);
                    let sub = x.view((i * b, j * b), (b, b)).into_owned();
                    if sub.iter().any(|z| *z != ZERO) {
                        out += left.kronecker(&other.apply(&sub));
                    }
                }
            }
            out
        })
    }

    /// Entrywise sum of Choi matrices (coarse-graining over outcomes).
    pub fn sum(maps: &[CpMap]) -> Option<CpMap> {
        let first = maps.first()?;
        let mut choi = CMatrix::zeros(first.choi.nrows(), first.choi.ncols());
        for m in maps {
            if m.d_in != first.d_in || m.d_out != first.d_out {
                return None;
            }
            choi += &m.choi;
        }
        Some(CpMap {
            d_in: first.d_in,
            d_out: first.d_out,
            choi,
        })
    }

    pub fn validate(&self) -> MapReport {
        check_choi(&self.choi, self.d_in, self.d_out)
    }
}

/// Dephasing in the computational basis.
pub fn dephase(m: &CMatrix) -> CMatrix {
    CMatrix::from_diagonal(&m.diagonal())
}

/// Channel of a classical (sub)stochastic matrix on diagonal operators:
/// |i><i| -> sum_j S_ji |j><j|, off-diagonal inputs are discarded.
pub fn stochastic_channel(s: &RMatrix) -> CpMap {
    let (d_out, d_in) = (s.nrows(), s.ncols());
    CpMap::from_linear_map(d_in, d_out, |x| {
        let mut out = CMatrix::zeros(d_out, d_out);
        for i in 0..d_in {
            for j in 0..d_out {
                out[(j, j)] += x[(i, i)] * s[(j, i)];
            }
        }
        out
    })
}

/// Kronecker product of Choi-represented maps, first factor most significant.
pub fn tensor_all(maps: &[CpMap]) -> CpMap {
    maps.iter()
        .fold(CpMap::identity(1), |acc, m| acc.tensor(m))
}

/// Operator-space tensor product helper for tests and oracles.
pub fn kron_ops(ops: &[CMatrix]) -> CMatrix {
    ckron_all(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cmax_abs_diff, max_abs_diff, numerical_rank, RANK_TOL};

    fn rho_example() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.0)],
        )
    }

    #[test]
    fn canonical_basis_sizes() {
        let b1 = OperatorBasis::quantum(1);
        assert_eq!(b1.k(), 1);
        assert_eq!(b1.gram()[(0, 0)], 1.0);
        let b2 = OperatorBasis::quantum(2);
        assert_eq!(b2.k(), 4);
        for i in 0..4 {
            assert!((b2.gram()[(i, i)] - 1.0).abs() < 1e-15);
        }
        let b3 = OperatorBasis::quantum(3);
        let mut span = RMatrix::zeros(9, 18);
        for (row, p) in b3.operators().iter().enumerate() {
            for (col, z) in p.iter().enumerate() {
                span[(row, col)] = z.re;
                span[(row, 9 + col)] = z.im;
            }
        }
        assert_eq!(numerical_rank(&span, RANK_TOL), 9);
    }

    #[test]
    fn qubit_gram_matches_hand_computation() {
        // Overlaps |<u|v>|^2 of |0>, |1>, |+>, |+i>.
        let expected = RMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.5, 0.5, //
                0.0, 1.0, 0.5, 0.5, //
                0.5, 0.5, 1.0, 0.5, //
                0.5, 0.5, 0.5, 1.0,
            ],
        );
        let b = OperatorBasis::quantum(2);
        assert!(max_abs_diff(b.gram(), &expected) < 1e-15);
        // Eigenvalues are (5 +- sqrt 17)/4, 1/2 and 1.
        let sv = crate::linalg::singular_values(b.gram());
        let cond = sv[0] / sv[3];
        let golden = (5.0 + 17f64.sqrt()) / (5.0 - 17f64.sqrt());
        assert!((cond - golden).abs() < 1e-12, "{cond}");
        assert!((golden - 10.403882032022075).abs() < 1e-12);
    }

    #[test]
    fn embed_round_trip() {
        let b = OperatorBasis::quantum(2);
        let rho = rho_example();
        let back = b.reconstruct(&b.embed(&rho));
        assert!(cmax_abs_diff(&rho, &back) < 1e-14);
        assert!((b.trace_row().dot(&b.embed(&rho)) - 1.0).abs() < 1e-14);
        let row = b.trace_row();
        for (x, want) in row.iter().zip([1.0, 1.0, 0.0, 0.0]) {
            assert!((x - want).abs() < 1e-14, "trace row {row}");
        }
    }

    #[test]
    fn identity_channel_has_identity_transfer() {
        let b = OperatorBasis::quantum(3);
        let z = b.transfer_matrix(&b, |x| x.clone());
        assert!(max_abs_diff(&z, &RMatrix::identity(9, 9)) < 1e-12);
    }

    #[test]
    fn transpose_map_is_not_cp() {
        let b = OperatorBasis::quantum(2);
        let z = b.transfer_matrix(&b, |x| x.transpose());
        let report = check_choi(&b.choi_of_transfer(&b, &z), 2, 2);
        assert!(!report.completely_positive);
        assert!((report.min_choi_eigenvalue + 1.0).abs() < 1e-10);
        assert!(report.trace_non_increasing);
    }

    #[test]
    fn choi_round_trip_from_transfer() {
        let b = OperatorBasis::quantum(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]);
        let map = CpMap::from_unitary(&had);
        let z = b.transfer_matrix(&b, |x| map.apply(x));
        assert!(cmax_abs_diff(&b.choi_of_transfer(&b, &z), map.choi()) < 1e-12);
        assert!(map.validate().is_valid());
    }

    #[test]
    fn stochastic_channel_matches_matrix() {
        let s = RMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.8]);
        let ch = stochastic_channel(&s);
        let x = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.25, 0.0), c(0.75, 0.0)]));
        let y = ch.apply(&x);
        assert!((y[(0, 0)].re - (0.9 * 0.25 + 0.2 * 0.75)).abs() < 1e-15);
        assert!(ch.validate().is_valid());
        let b = OperatorBasis::classical(2);
        assert!(max_abs_diff(&b.transfer_matrix(&b, |x| ch.apply(x)), &s) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = rho_example();
        let bm = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0)]));
        let ab = a.kronecker(&bm);
        assert!(cmax_abs_diff(&partial_trace(&ab, 2, 2, true), &a) < 1e-15);
        assert!(cmax_abs_diff(&partial_trace(&ab, 2, 2, false), &bm) < 1e-15);
    }

    #[test]
    fn tensor_and_compose() {
        let id = CpMap::identity(2);
        let x = CpMap::from_unitary(&CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]));
        let xx = x.then(&x);
        assert!(cmax_abs_diff(xx.choi(), id.choi()) < 1e-15);
        let xi = x.tensor(&id);
        let rho = rho_example().kronecker(&CMatrix::identity(2, 2).scale(0.5));
        let direct = x.apply(&rho_example()).kronecker(&CMatrix::identity(2, 2).scale(0.5));
        assert!(cmax_abs_diff(&xi.apply(&rho), &direct) < 1e-15);
    }
}
