//! Dense real and complex matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex64>;
pub type RVector = DVector<f64>;
pub type CVector = DVector<Complex64>;

/// Absolute tolerance for probabilities.
pub const PROB_TOL: f64 = 1e-10;
/// Relative tolerance on singular values for rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Relative tolerance on eigenvalues for positivity.
pub const PSD_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn kron(a: &RMatrix, b: &RMatrix) -> RMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list; the empty product is the 1x1 identity.
pub fn kron_all<'a, I: IntoIterator<Item = &'a RMatrix>>(ms: I) -> RMatrix {
    ms.into_iter()
        .fold(RMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
}

pub fn ckron_all<'a, I: IntoIterator<Item = &'a CMatrix>>(ms: I) -> CMatrix {
    ms.into_iter()
        .fold(CMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

/// Singular values, largest first.
pub fn singular_values(m: &RMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Count of singular values above `rel_tol` times the largest.
pub fn numerical_rank(m: &RMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > rel_tol * top).count(),
        _ => 0,
    }
}

pub fn complex_numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let s = m.clone().svd(false, false).singular_values;
    let top = s.max();
    if top <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

/// Moore-Penrose pseudo-inverse with a relative singular value cutoff.
pub fn pinv(m: &RMatrix, rel_tol: f64) -> RMatrix {
    if m.nrows() == 0 || m.ncols() == 0 {
        return RMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.max();
    let eps = (rel_tol * top).max(f64::MIN_POSITIVE);
    svd.pseudo_inverse(eps).expect("u and v were computed")
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigen-decomposition of the Hermitian part: (eigenvalues, eigenvectors as
/// columns), eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Smallest eigenvalue and the positivity verdict at relative tolerance
/// `rel_tol`.
pub fn psd_check(m: &CMatrix, rel_tol: f64) -> (bool, f64) {
    let ev = hermitian_eigenvalues(m);
    let (Some(&lo), Some(&hi)) = (ev.first(), ev.last()) else {
        return (true, 0.0);
    };
    (lo >= -(rel_tol * hi.max(0.0) + 1e-13), lo)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// Max absolute entrywise difference.
pub fn max_abs_diff(a: &RMatrix, b: &RMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn cmax_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Digits of `index` in the mixed radix `radices`, most significant first.
pub fn mixed_radix_digits(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (d, &r) in digits.iter_mut().zip(radices).rev() {
        *d = index % r;
        index /= r;
    }
    digits
}

pub fn mixed_radix_index(digits: &[usize], radices: &[usize]) -> usize {
    digits
        .iter()
        .zip(radices)
        .fold(0, |acc, (&d, &r)| acc * r + d)
}

/// Index map of a tensor factor permutation: output factor `i` is input
/// factor `perm[i]`. Entry `o` of the result is the input index feeding
/// output index `o`.
pub fn factor_permutation(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    assert_eq!(dims.len(), perm.len(), "permutation length");
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total: usize = dims.iter().product();
    let mut map = Vec::with_capacity(total);
    let mut in_digits = vec![0; dims.len()];
    for o in 0..total {
        let out_digits = mixed_radix_digits(o, &out_dims);
        for (i, &p) in perm.iter().enumerate() {
            in_digits[p] = out_digits[i];
        }
        map.push(mixed_radix_index(&in_digits, dims));
    }
    map
}

/// True when `perm` contains each of `0..len` exactly once.
pub fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radix_round_trip() {
        let radices = [2, 3, 4];
        for i in 0..24 {
            assert_eq!(mixed_radix_index(&mixed_radix_digits(i, &radices), &radices), i);
        }
        assert_eq!(mixed_radix_digits(5, &[2, 3]), vec![1, 2]);
    }

    #[test]
    fn swap_permutation_of_two_factors() {
        // dims (2,3): input index a*3+b, output (b,a) index b*2+a.
        let map = factor_permutation(&[2, 3], &[1, 0]);
        for a in 0..2 {
            for b in 0..3 {
                assert_eq!(map[b * 2 + a], a * 3 + b);
            }
        }
        assert_eq!(factor_permutation(&[2, 2], &[0, 1]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn rank_and_pinv() {
        let m = RMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(numerical_rank(&m, RANK_TOL), 1);
        let p = pinv(&RMatrix::identity(3, 3).scale(2.0), RANK_TOL);
        assert!(max_abs_diff(&p, &RMatrix::identity(3, 3).scale(0.5)) < 1e-15);
        assert_eq!(numerical_rank(&RMatrix::zeros(2, 2), RANK_TOL), 0);
    }

    #[test]
    fn psd_of_swap_is_negative() {
        let mut swap = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(i, j)] = ONE;
        }
        let (ok, lo) = psd_check(&swap, PSD_TOL);
        assert!(!ok);
        assert!((lo + 1.0).abs() < 1e-12);
        assert!(psd_check(&CMatrix::identity(3, 3), PSD_TOL).0);
        assert!(psd_check(&CMatrix::zeros(3, 3), PSD_TOL).0);
    }

    #[test]
    fn kron_of_nothing_is_one() {
        let empty: Vec<RMatrix> = Vec::new();
        assert_eq!(kron_all(&empty), RMatrix::identity(1, 1));
    }
}
