//! Sparse LU of `[[A, C], [Cᵀ, 0]]` with a few dense constraint columns.

use crate::elliptic::sparse;
use crate::{Error, Result};
use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;

pub(crate) struct Saddle {
    n: usize,
    k: usize,
    lu: Lu<usize, f64>,
}

impl Saddle {
    pub(crate) fn new(n: usize, a: &[(usize, usize, f64)], cols: &[&[f64]]) -> Result<Self> {
        let k = cols.len();
        let mut t: Vec<(usize, usize, f64)> = a.to_vec();
        for (c, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, n + c, v));
                    t.push((n + c, i, v));
                }
            }
        }
        let lu = sparse(n + k, &crate::elliptic::merge_triplets(t))?
            .sp_lu()
            .map_err(|e| Error::LinearAlgebra { message: format!("sparse LU failed: {e:?}"), residual: f64::NAN })?;
        Ok(Saddle { n, k, lu })
    }

    /// Solves for a right-hand side of length `n + k`.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.n + self.k;
        if rhs.len() != m {
            return Err(Error::Parameter(format!("right-hand side has length {}, expected {m}", rhs.len())));
        }
        let mut col = Col::<f64>::from_fn(m, |i| rhs[i]);
        self.lu.solve_in_place(col.as_mat_mut());
        let out: Vec<f64> = (0..m).map(|i| col[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearAlgebra { message: "singular saddle system".into(), residual: f64::NAN });
        }
        Ok(out)
    }
}
