//! Linear compression of probability tables onto a fiducial row subset.

use serde::Serialize;

use super::{EngineError, Result};
use crate::linalg::{numerical_rank, pinv, RMatrix, PROB_TOL, RANK_TOL};

/// Rows chosen as fiducial and the map rebuilding every row from them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Compression {
    /// Selected row indices, in selection order.
    pub selected: Vec<usize>,
    /// rows x |selected|; row i of the table is `reconstruction.row(i)`
    /// times the selected rows.
    #[serde(skip)]
    pub reconstruction: RMatrix,
}

impl Compression {
    /// Estimated K.
    pub fn rank(&self) -> usize {
        self.selected.len()
    }

    /// Predict every row from values of the selected rows (one column per
    /// state).
    pub fn predict(&self, selected_values: &RMatrix) -> Result<RMatrix> {
        if selected_values.nrows() != self.selected.len() {
            return Err(EngineError::Shape(format!(
                "{} selected rows expected, got {}",
                self.selected.len(),
                selected_values.nrows()
            )));
        }
        Ok(&self.reconstruction * selected_values)
    }
}

/// Pick a maximal linearly independent set of rows by greedy pivoting on
/// residual norms, stopping at the numerical rank.
pub fn compress_to_fiducials(table: &RMatrix) -> Result<Compression> {
    if table.is_empty() {
        return Err(EngineError::InvalidArgument("empty probability table".into()));
    }
    if let Some(x) = table
        .iter()
        .find(|x| !x.is_finite() || **x < -PROB_TOL || **x > 1.0 + PROB_TOL)
    {
        return Err(EngineError::InvalidArgument(format!(
            "table entry {x} is not a probability"
        )));
    }
    let rank = numerical_rank(table, RANK_TOL);
    let mut residual = table.clone();
    let mut selected = Vec::with_capacity(rank);
    for _ in 0..rank {
        let (best, norm) = (0..residual.nrows())
            .filter(|i| !selected.contains(i))
            .map(|i| (i, residual.row(i).norm()))
            .fold((usize::MAX, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if best == usize::MAX || norm <= 0.0 {
            break;
        }
        selected.push(best);
        let q = residual.row(best).into_owned() / norm;
        for i in 0..residual.nrows() {
            let proj = residual.row(i).dot(&q);
            let update = &q * proj;
            let mut row = residual.row_mut(i);
            row -= update;
        }
    }
    let chosen = table.select_rows(selected.iter());
    let reconstruction = table * pinv(&chosen, RANK_TOL);
    Ok(Compression {
        selected,
        reconstruction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::random::{distribution, seeded};

    #[test]
    fn classical_rank_two() {
        let mut rng = seeded(4);
        let states: Vec<Vec<f64>> = (0..12).map(|_| distribution(&mut rng, 2)).collect();
        // Effects: [1,0], [0,1], [1,1], [0.5,0.5]
        let effects = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]];
        let table = RMatrix::from_fn(4, 12, |i, j| {
            effects[i][0] * states[j][0] + effects[i][1] * states[j][1]
        });
        let c = compress_to_fiducials(&table).unwrap();
        assert_eq!(c.rank(), 2);
        let rebuilt = c.predict(&table.select_rows(c.selected.iter())).unwrap();
        assert!(max_abs_diff(&rebuilt, &table) < 1e-12);
    }

    #[test]
    fn duplicated_rows_keep_the_rank() {
        let t = RMatrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, 0.5, 0.1, 0.9]);
        let doubled = RMatrix::from_fn(4, 3, |i, j| t[(i % 2, j)]);
        assert_eq!(compress_to_fiducials(&t).unwrap().rank(), 2);
        assert_eq!(compress_to_fiducials(&doubled).unwrap().rank(), 2);
    }

    #[test]
    fn bad_tables() {
        assert!(compress_to_fiducials(&RMatrix::zeros(0, 0)).is_err());
        assert!(compress_to_fiducials(&RMatrix::from_element(1, 1, 1.5)).is_err());
    }
}
