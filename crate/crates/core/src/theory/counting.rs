//! Fiducial counting: K as a function of N for several Hilbert-space
//! theories, the composite comparison K_ab against K_a K_b, and the rank of
//! the span of product states.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, TheoryError};
use crate::linalg::{numerical_rank, RMatrix, RANK_TOL};
use crate::random;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountingModel {
    Classical,
    Quantum,
    RealQuantum,
    QuaternionicQuantum,
}

impl CountingModel {
    pub const ALL: [CountingModel; 4] = [
        CountingModel::Classical,
        CountingModel::Quantum,
        CountingModel::RealQuantum,
        CountingModel::QuaternionicQuantum,
    ];
}

impl fmt::Display for CountingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountingModel::Classical => "classical",
            CountingModel::Quantum => "quantum",
            CountingModel::RealQuantum => "real-quantum",
            CountingModel::QuaternionicQuantum => "quaternionic-quantum",
        })
    }
}

impl FromStr for CountingModel {
    type Err = TheoryError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(CountingModel::Classical),
            "quantum" => Ok(CountingModel::Quantum),
            "real" | "real-quantum" => Ok(CountingModel::RealQuantum),
            "quaternionic" | "quaternionic-quantum" => Ok(CountingModel::QuaternionicQuantum),
            _ => Err(TheoryError::InvalidArgument(format!(
                "unknown counting model `{s}`"
            ))),
        }
    }
}

/// K for a system with N distinguishable states.
pub fn counting_k(model: CountingModel, n: u64) -> u64 {
    let pairs = n * n.saturating_sub(1) / 2;
    match model {
        CountingModel::Classical => n,
        CountingModel::Quantum => n * n,
        CountingModel::RealQuantum => n + pairs,
        CountingModel::QuaternionicQuantum => n + 4 * pairs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Less,
    Equal,
    Greater,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::Equal => "=",
            Relation::Greater => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountingReport {
    pub model: CountingModel,
    pub n_a: u64,
    pub n_b: u64,
    pub k_a: u64,
    pub k_b: u64,
    /// K of the composite, with N_ab = N_a N_b.
    pub k_ab: u64,
    pub product: u64,
    pub relation: Relation,
    /// K_ab >= K_a K_b, required of any consistent theory.
    pub bound_satisfied: bool,
    /// K_ab = K_a K_b.
    pub locally_tomographic: bool,
}

impl fmt::Display for CountingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} N_a={} N_b={}: K_a={} K_b={} K_ab={} {} K_aK_b={}",
            self.model,
            self.n_a,
            self.n_b,
            self.k_a,
            self.k_b,
            self.k_ab,
            self.relation.symbol(),
            self.product
        )?;
        if !self.bound_satisfied {
            write!(f, ", VIOLATES K_ab >= K_aK_b")
        } else if self.locally_tomographic {
            write!(f, ", locally tomographic")
        } else {
            write!(f, ", consistent, not locally tomographic")
        }
    }
}

pub fn composite_counting_check(model: CountingModel, n_a: u64, n_b: u64) -> CountingReport {
    let k_a = counting_k(model, n_a);
    let k_b = counting_k(model, n_b);
    let k_ab = counting_k(model, n_a * n_b);
    let product = k_a * k_b;
    let relation = match k_ab.cmp(&product) {
        Ordering::Less => Relation::Less,
        Ordering::Equal => Relation::Equal,
        Ordering::Greater => Relation::Greater,
    };
    CountingReport {
        model,
        n_a,
        n_b,
        k_a,
        k_b,
        k_ab,
        product,
        relation,
        bound_satisfied: k_ab >= product,
        locally_tomographic: k_ab == product,
    }
}

fn upper_triangle(m: &RMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Rank of the span of `samples` random product states, each written as a
/// vector in the composite state space (probability vectors, Hermitian
/// matrices split into real and imaginary parts, or real symmetric matrices).
pub fn product_state_span_rank<R: Rng + ?Sized>(
    model: CountingModel,
    n_a: usize,
    n_b: usize,
    samples: usize,
    rng: &mut R,
) -> Result<usize> {
    let rows: Vec<Vec<f64>> = match model {
        CountingModel::Classical => (0..samples)
            .map(|_| {
                let p = random::distribution(rng, n_a);
                let q = random::distribution(rng, n_b);
                p.iter().flat_map(|x| q.iter().map(move |y| x * y)).collect()
            })
            .collect(),
        CountingModel::Quantum => (0..samples)
            .map(|_| {
                let a = random::density(rng, n_a);
                let b = random::density(rng, n_b);
                let ab = a.kronecker(&b);
                ab.iter().map(|z| z.re).chain(ab.iter().map(|z| z.im)).collect()
            })
            .collect(),
        CountingModel::RealQuantum => (0..samples)
            .map(|_| {
                let a = random::real_density(rng, n_a);
                let b = random::real_density(rng, n_b);
                upper_triangle(&a.kronecker(&b))
            })
            .collect(),
        CountingModel::QuaternionicQuantum => {
            return Err(TheoryError::Unsupported(
                "product states of the quaternionic model".into(),
            ))
        }
    };
    let width = rows.first().map_or(0, Vec::len);
    let m = RMatrix::from_row_iterator(rows.len(), width, rows.into_iter().flatten());
    Ok(numerical_rank(&m, RANK_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::seeded;

    #[test]
    fn table_for_small_n() {
        let expect = [
            (CountingModel::Classical, [1, 2, 3, 4, 5, 6]),
            (CountingModel::Quantum, [1, 4, 9, 16, 25, 36]),
            (CountingModel::RealQuantum, [1, 3, 6, 10, 15, 21]),
            (CountingModel::QuaternionicQuantum, [1, 6, 15, 28, 45, 66]),
        ];
        for (model, ks) in expect {
            for (n, k) in (1..=6).zip(ks) {
                assert_eq!(counting_k(model, n), k, "{model} N={n}");
            }
        }
    }

    #[test]
    fn composite_verdicts() {
        for na in 2..=3 {
            for nb in 2..=3 {
                let r = |m| composite_counting_check(m, na, nb).relation;
                assert_eq!(r(CountingModel::Classical), Relation::Equal);
                assert_eq!(r(CountingModel::Quantum), Relation::Equal);
                assert_eq!(r(CountingModel::RealQuantum), Relation::Greater);
                assert_eq!(r(CountingModel::QuaternionicQuantum), Relation::Less);
            }
        }
        let q = composite_counting_check(CountingModel::QuaternionicQuantum, 2, 2);
        assert_eq!((q.k_ab, q.product), (28, 36));
        assert!(!q.bound_satisfied);
        assert!(q.to_string().contains("VIOLATES"));
    }

    #[test]
    fn span_ranks() {
        let mut rng = seeded(1);
        assert_eq!(
            product_state_span_rank(CountingModel::Classical, 2, 2, 20, &mut rng).unwrap(),
            4
        );
        assert_eq!(
            product_state_span_rank(CountingModel::Quantum, 2, 2, 40, &mut rng).unwrap(),
            16
        );
        assert_eq!(
            product_state_span_rank(CountingModel::RealQuantum, 2, 2, 40, &mut rng).unwrap(),
            9
        );
    }
}
