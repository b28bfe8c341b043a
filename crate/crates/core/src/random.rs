//! Seeded samplers for distributions, stochastic matrices, density matrices,
//! unitaries and channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::linalg::{c, CMatrix, CVector, RMatrix};

pub type SeededRng = ChaCha8Rng;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point on the probability simplex.
pub fn distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Column-stochastic matrix with uniformly random columns.
pub fn stochastic<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> RMatrix {
    let mut m = RMatrix::zeros(rows, cols);
    for j in 0..cols {
        for (i, x) in distribution(rng, rows).into_iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    m
}

/// Split a stochastic matrix into `parts` nonnegative pieces that sum to it.
pub fn split_matrix<R: Rng + ?Sized>(rng: &mut R, m: &RMatrix, parts: usize) -> Vec<RMatrix> {
    let mut out = vec![RMatrix::zeros(m.nrows(), m.ncols()); parts];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            for (k, w) in distribution(rng, parts).into_iter().enumerate() {
                out[k][(i, j)] = m[(i, j)] * w;
            }
        }
    }
    out
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = ginibre(rng, n, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random isometry from `cols` to `rows` dimensions (rows >= cols).
pub fn isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    unitary(rng, rows).columns(0, cols).into_owned()
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    let g = ginibre(rng, n, 1);
    let norm = g.norm();
    CVector::from_iterator(n, g.iter().map(|z| z / norm))
}

/// Density matrix of trace one from the Hilbert-Schmidt ensemble.
pub fn density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = ginibre(rng, n, n);
    let m = &g * g.adjoint();
    let t = crate::linalg::trace(&m);
    m / t
}

/// Density matrix of the given rank.
pub fn density_of_rank<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let g = ginibre(rng, n, rank);
    let m = &g * g.adjoint();
    let t = crate::linalg::trace(&m);
    m / t
}

/// Real symmetric positive semidefinite matrix of trace one.
pub fn real_density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> RMatrix {
    let g = RMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let m = &g * g.transpose();
    let t = m.trace();
    m / t
}

/// Effect 0 <= E <= I with uniformly random spectrum.
pub fn effect<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let u = unitary(rng, n);
    let d = CMatrix::from_diagonal(&CVector::from_fn(n, |_, _| c(rng.random::<f64>(), 0.0)));
    &u * d * u.adjoint()
}

/// Kraus operators of a random trace-preserving channel.
pub fn kraus<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, count: usize) -> Vec<CMatrix> {
    let v = isometry(rng, d_out * count, d_in);
    (0..count)
        .map(|k| v.rows(k * d_out, d_out).into_owned())
        .collect()
}

/// Random instrument: per outcome Kraus lists, jointly trace preserving.
pub fn instrument<R: Rng + ?Sized>(
    rng: &mut R,
    d_in: usize,
    d_out: usize,
    outcomes: usize,
    per_outcome: usize,
) -> Vec<Vec<CMatrix>> {
    let all = kraus(rng, d_in, d_out, outcomes * per_outcome);
    all.chunks(per_outcome).map(|c| c.to_vec()).collect()
}

/// Complete POVM with `outcomes` elements.
pub fn povm<R: Rng + ?Sized>(rng: &mut R, d: usize, outcomes: usize) -> Vec<CMatrix> {
    kraus(rng, d, d, outcomes)
        .into_iter()
        .map(|k| k.adjoint() * k)
        .collect()
}
