//! Legendre interpolation and the product-integration tables behind the modified
//! (singularity-corrected) panel weights.

use crate::error::{Error, Result};
use crate::geometry::gauss_legendre;

/// Distance from t = ±1 below which the tables are not evaluated.
pub const ENDPOINT_GUARD: f64 = 1e-10;
/// Above this |t| the Cauchy moments are computed by backward recursion.
const BACKWARD_THRESHOLD: f64 = 1.1;

/// Values P_0(x)..P_{n-1}(x).
pub fn legendre_values(n: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; n];
    if n > 0 {
        p[0] = 1.0;
    }
    if n > 1 {
        p[1] = x;
    }
    for j in 2..n {
        p[j] = ((2 * j - 1) as f64 * x * p[j - 1] - (j - 1) as f64 * p[j - 2]) / j as f64;
    }
    p
}

/// Matrix U with u[j][k] = (2j+1)/2 w_k P_j(s_k), mapping nodal values to Legendre
/// coefficients.
pub fn interp_matrix(n: usize) -> Result<Vec<Vec<f64>>> {
    let (x, w) = gauss_legendre(n)?;
    let mut u = vec![vec![0.0; n]; n];
    for k in 0..n {
        let p = legendre_values(n, x[k]);
        for j in 0..n {
            u[j][k] = (2 * j + 1) as f64 * 0.5 * w[k] * p[j];
        }
    }
    Ok(u)
}

/// Moments I_j = ∫ P_j(s) ds over [-1, 1].
pub fn moment_table(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    if n > 0 {
        v[0] = 2.0;
    }
    v
}

fn guard(t: f64) -> Result<()> {
    if !t.is_finite() || (t - 1.0).abs() < ENDPOINT_GUARD || (t + 1.0).abs() < ENDPOINT_GUARD {
        return Err(Error::Domain(format!(
            "chart coordinate {t} too close to a panel endpoint"
        )));
    }
    Ok(())
}

/// C_j(t) = p.v. ∫ P_j(s)/(t-s) ds for j < n.
pub fn cauchy_table(t: f64, n: usize) -> Result<Vec<f64>> {
    guard(t)?;
    let c0 = -((t - 1.0) / (t + 1.0)).abs().ln();
    let mut c = vec![0.0; n.max(2)];
    if t.abs() <= BACKWARD_THRESHOLD {
        c[0] = c0;
        c[1] = -2.0 + t * c0;
        for j in 2..n {
            c[j] = ((2 * j - 1) as f64 * t * c[j - 1] - (j - 1) as f64 * c[j - 2]) / j as f64;
        }
    } else {
        let rho = t.abs() + (t * t - 1.0).sqrt();
        let top = n + (20.0 / rho.ln()).ceil() as usize + 2;
        let mut v = vec![0.0; top + 2];
        v[top] = 1e-200 * t.signum().powi(top as i32);
        for j in (2..=top + 1).rev() {
            // j C_j = (2j-1) t C_{j-1} - (j-1) C_{j-2}
            v[j - 2] = ((2 * j - 1) as f64 * t * v[j - 1] - j as f64 * v[j]) / (j - 1) as f64;
            if v[j - 2].abs() > 1e200 {
                for x in v.iter_mut() {
                    *x *= 1e-200;
                }
            }
        }
        let scale = c0 / v[0];
        for j in 0..n.max(2) {
            c[j] = v[j] * scale;
        }
    }
    c.truncate(n);
    Ok(c)
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.abs().ln()
    }
}

/// L_j(t) = ∫ ln|t-s| P_j(s) ds for j < n.
pub fn log_table(t: f64, n: usize) -> Result<Vec<f64>> {
    let c = cauchy_table(t, n.max(3))?;
    let (tp, tm) = (t + 1.0, t - 1.0);
    let mut l = vec![0.0; n.max(3)];
    l[0] = xlnx(tp) - xlnx(tm) - 2.0;
    l[1] = t * l[0] - (0.5 * tp * xlnx(tp) - 0.5 * tm * xlnx(tm) - t);
    l[2] = (t * (c[2] - c[0]) + 2.0) / 3.0;
    for j in 3..n {
        l[j] = (-((j as f64) - 2.0) * l[j - 2] + t * (c[j] - c[j - 2])) / (j + 1) as f64;
    }
    l.truncate(n);
    Ok(l)
}

/// Interpolation and product-integration data for one panel order.
#[derive(Clone, Debug)]
pub struct LegendreTable {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// u[j][k]
    pub u: Vec<Vec<f64>>,
    /// Self-panel log weights: row i is the target node i.
    self_log: Vec<Vec<f64>>,
    /// Self-panel Cauchy weights.
    self_cauchy: Vec<Vec<f64>>,
}

impl LegendreTable {
    pub fn new(n: usize) -> Result<Self> {
        let (nodes, weights) = gauss_legendre(n)?;
        let u = interp_matrix(n)?;
        let mut t = LegendreTable {
            n,
            nodes,
            weights,
            u,
            self_log: Vec::new(),
            self_cauchy: Vec::new(),
        };
        for i in 0..n {
            let (lw, cw) = t.weights_at(t.nodes[i])?;
            t.self_log.push(lw);
            t.self_cauchy.push(cw);
        }
        Ok(t)
    }

    /// Log weights λ_k = Σ_j u_jk L_j(t) and Cauchy weights γ_k = Σ_j u_jk C_j(t).
    pub fn weights_at(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let l = log_table(t, self.n)?;
        let c = cauchy_table(t, self.n)?;
        let mut lw = vec![0.0; self.n];
        let mut cw = vec![0.0; self.n];
        for k in 0..self.n {
            for j in 0..self.n {
                lw[k] += self.u[j][k] * l[j];
                cw[k] += self.u[j][k] * c[j];
            }
        }
        Ok((lw, cw))
    }

    /// Precomputed weights for the target at the panel's own node `i`.
    pub fn self_weights(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.self_log[i], &self.self_cauchy[i])
    }

    /// Row of the Lagrange interpolation from the nodes to the point x in [-1, 1].
    pub fn interp_row(&self, x: f64) -> Vec<f64> {
        let p = legendre_values(self.n, x);
        (0..self.n)
            .map(|k| (0..self.n).map(|j| p[j] * self.u[j][k]).sum())
            .collect()
    }
}

/// A 2×2 block weight for one source node.
pub type BlockWeight = [[num_complex::Complex64; 2]; 2];

/// Modified weights w̃_k = (λ_k K1 + γ_k K2 + w_k K3) J_k for a target at chart
/// coordinate `t`, given the split (K1, K2, K3) at each source node and the chart
/// Jacobians J_k.
pub fn modified_weights(
    table: &LegendreTable,
    t: f64,
    split: impl Fn(usize) -> [BlockWeight; 3],
    jacobian: &[f64],
) -> Result<Vec<BlockWeight>> {
    let (lw, cw) = table.weights_at(t)?;
    Ok((0..table.n)
        .map(|k| {
            let [k1, k2, k3] = split(k);
            let mut w = [[num_complex::Complex64::default(); 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    w[a][b] = (k1[a][b] * lw[k] + k2[a][b] * cw[k] + k3[a][b] * table.weights[k])
                        * jacobian[k];
                }
            }
            w
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let c = cauchy_table(0.0, 4).unwrap();
        assert!(c[0].abs() < 1e-16 && (c[1] + 2.0).abs() < 1e-16);
        let c = cauchy_table(3.0, 2).unwrap();
        assert!((c[0] - 2f64.ln()).abs() < 1e-15);
        let l = log_table(0.0, 4).unwrap();
        assert!((l[0] + 2.0).abs() < 1e-15 && l[1].abs() < 1e-15);
        assert!(cauchy_table(1.0 + 1e-12, 4).is_err());
        assert!(log_table(-1.0, 4).is_err());
    }

    #[test]
    fn interpolation_matrix_analyzes_legendre() {
        let n = 16;
        let u = interp_matrix(n).unwrap();
        let (x, _) = gauss_legendre(n).unwrap();
        for m in [0, 7, n - 1] {
            for j in 0..n {
                let c: f64 = (0..n).map(|k| u[j][k] * legendre_values(n, x[k])[m]).sum();
                let e = if j == m { 1.0 } else { 0.0 };
                assert!((c - e).abs() < 1e-12);
            }
        }
        assert_eq!(moment_table(3), vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn backward_and_forward_agree_in_overlap() {
        // both recursions are valid at |t| = 1.2 for small j
        let t = 1.2f64;
        let c = cauchy_table(t, 6).unwrap();
        let mut f = vec![-((t - 1.0) / (t + 1.0)).abs().ln()];
        f.push(-2.0 + t * f[0]);
        for j in 2..6 {
            let v = ((2 * j - 1) as f64 * t * f[j - 1] - (j - 1) as f64 * f[j - 2]) / j as f64;
            f.push(v);
        }
        for j in 0..6 {
            assert!((c[j] - f[j]).abs() < 1e-12, "j={j}");
        }
    }
}
