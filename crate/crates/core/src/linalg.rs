//! Dense complex linear algebra on top of `faer`.

use crate::error::{Error, Result};
use faer::linalg::solvers::{PartialPivLu, Solve, SolveCore};
use faer::prelude::*;
use num_complex::Complex64;

pub type CMat = Mat<Complex64>;

/// Above this condition estimate a system is reported as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// Partial-pivoted LU factorization with a 1-norm condition estimate.
pub struct Lu {
    lu: PartialPivLu<Complex64>,
    n: usize,
    norm1: f64,
}

pub fn norm1(a: MatRef<'_, Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl Lu {
    pub fn new(a: MatRef<'_, Complex64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Domain(format!(
                "matrix is {}x{}, expected square",
                n,
                a.ncols()
            )));
        }
        if (0..n).any(|j| (0..n).any(|i| !a[(i, j)].is_finite())) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        let norm1 = norm1(a);
        let lu = a.partial_piv_lu();
        Ok(Lu { lu, n, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: MatRef<'_, Complex64>) -> CMat {
        self.lu.solve(b)
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let m = self
            .lu
            .solve(MatRef::from_column_major_slice(b, b.len(), 1));
        (0..b.len()).map(|i| m[(i, 0)]).collect()
    }

    /// Estimate of ‖A‖₁‖A⁻¹‖₁ (Hager's method, a few sweeps).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut x = Mat::<Complex64>::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.lu.solve_in_place_with_conj(faer::Conj::No, y.as_mut());
            let ny: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
            if !ny.is_finite() {
                return f64::INFINITY;
            }
            if ny <= est {
                break;
            }
            est = ny;
            let mut z = Mat::<Complex64>::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                if v.norm() > 0.0 {
                    v / v.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                }
            });
            self.lu
                .solve_transpose_in_place_with_conj(faer::Conj::Yes, z.as_mut());
            let (j, zmax) = (0..n)
                .map(|i| (i, z[(i, 0)].norm()))
                .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            if j == last_j || !zmax.is_finite() {
                break;
            }
            last_j = j;
            x = Mat::zeros(n, 1);
            x[(j, 0)] = Complex64::new(1.0, 0.0);
        }
        est * self.norm1
    }
}

/// Inverse through LU.
pub fn inverse(a: MatRef<'_, Complex64>) -> Result<CMat> {
    let lu = Lu::new(a)?;
    Ok(lu.solve(Mat::<Complex64>::identity(a.nrows(), a.nrows()).as_ref()))
}

/// Rows/columns selection a[rows, cols].
pub fn select(a: MatRef<'_, Complex64>, rows: &[usize], cols: &[usize]) -> CMat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// Max-entry norm.
pub fn max_abs(a: MatRef<'_, Complex64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_condition() {
        let n = 6;
        let a = Mat::<Complex64>::from_fn(n, n, |i, j| {
            Complex64::new(
                if i == j {
                    4.0
                } else {
                    1.0 / (1.0 + (i + 2 * j) as f64)
                },
                0.1 * (i as f64 - j as f64),
            )
        });
        let lu = Lu::new(a.as_ref()).unwrap();
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = lu.solve_vec(&b);
        for i in 0..n {
            let r: Complex64 = (0..n).map(|j| a[(i, j)] * x[j]).sum::<Complex64>() - b[i];
            assert!(r.norm() < 1e-13);
        }
        let inv = inverse(a.as_ref()).unwrap();
        let exact = norm1(a.as_ref()) * norm1(inv.as_ref());
        let est = lu.condition_estimate();
        assert!(est <= exact * (1.0 + 1e-12) && est > 0.3 * exact);
    }
}
