//! Bessel and Hankel functions of the first kind, orders 0..=3, on the positive real axis,
//! plus log-split power series used by the kernel splittings.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Highest supported order.
pub const MAX_ORDER: usize = 3;
/// Largest argument accepted by [`hankel_smooth_parts`].
pub const SERIES_RADIUS: f64 = 1.0;
/// Above this argument the Hankel asymptotic expansion is used.
const ASYMPTOTIC_CROSSOVER: f64 = 25.0;

fn check(n: usize, z: f64) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::Domain(format!("order {n} exceeds {MAX_ORDER}")));
    }
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "argument {z} must be positive and finite"
        )));
    }
    Ok(())
}

/// Bessel function J_n(z).
pub fn bessel_j(n: usize, z: f64) -> Result<f64> {
    check(n, z)?;
    Ok(hankel1_all(z)[n].re)
}

/// Bessel function Y_n(z).
pub fn bessel_y(n: usize, z: f64) -> Result<f64> {
    check(n, z)?;
    Ok(hankel1_all(z)[n].im)
}

/// Hankel function H_n^(1)(z) = J_n(z) + i Y_n(z).
pub fn hankel1(n: usize, z: f64) -> Result<Complex64> {
    check(n, z)?;
    Ok(hankel1_all(z)[n])
}

/// H_0..H_3 at once. The caller guarantees `z > 0`.
pub fn hankel1_all(z: f64) -> [Complex64; 4] {
    debug_assert!(z > 0.0);
    if z < ASYMPTOTIC_CROSSOVER {
        let (j, y) = miller_neumann(z);
        std::array::from_fn(|n| Complex64::new(j[n], y[n]))
    } else {
        let h0 = hankel_asymptotic(0.0, z);
        let h1 = hankel_asymptotic(1.0, z);
        let h2 = h1 * (2.0 / z) - h0;
        let h3 = h2 * (4.0 / z) - h1;
        [h0, h1, h2, h3]
    }
}

/// J_0..J_3 by normalized backward recurrence, Y_0, Y_1 from Neumann series in the same
/// sequence, Y_2, Y_3 by forward recurrence.
fn miller_neumann(z: f64) -> ([f64; 4], [f64; 4]) {
    let start = 2 * ((z + 16.0 + 6.0 * z.sqrt()) as usize / 2 + 1);
    let mut v = vec![0.0f64; start + 2];
    v[start] = 1e-30;
    for k in (1..=start).rev() {
        v[k - 1] = 2.0 * k as f64 / z * v[k] - v[k + 1];
        if v[k - 1].abs() > 1e250 {
            for x in v.iter_mut() {
                *x *= 1e-250;
            }
        }
    }
    let mut norm = v[0];
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k < start {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        norm += 2.0 * v[2 * k];
        s0 += sign * v[2 * k] / k as f64;
        s1 += sign * (v[2 * k - 1] - v[2 * k + 1]) / k as f64;
        k += 1;
    }
    let j: [f64; 4] = std::array::from_fn(|n| v[n] / norm);
    let (s0, s1) = (s0 / norm, s1 / norm);
    let lg = (0.5 * z).ln() + EULER_GAMMA;
    let y0 = FRAC_2_PI * (lg * j[0] - 2.0 * s0);
    let y1 = FRAC_2_PI * (-j[0] / z + lg * j[1] + s1);
    let y2 = 2.0 / z * y1 - y0;
    let y3 = 4.0 / z * y2 - y1;
    (j, [y0, y1, y2, y3])
}

/// Large-argument Hankel expansion of order `nu`.
fn hankel_asymptotic(nu: f64, z: f64) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut a = 1.0;
    let mut ik = Complex64::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (8.0 * k as f64 * z);
        if a.abs() >= prev || a == 0.0 {
            break;
        }
        prev = a.abs();
        ik *= Complex64::i();
        sum += ik * a;
        if a.abs() < 1e-17 {
            break;
        }
    }
    let phase =
        Complex64::new(z.cos(), z.sin()) * Complex64::from_polar(1.0, -(nu * 0.5 * PI + FRAC_PI_4));
    (2.0 / (PI * z)).sqrt() * phase * sum
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Digamma at a positive integer: psi(m) = -gamma + H_{m-1}.
fn digamma_int(m: usize) -> f64 {
    -EULER_GAMMA + (1..m).map(|k| 1.0 / k as f64).sum::<f64>()
}

/// Splits H_n(z) = i * log_coefficient * ln(z) + analytic_part for small z, where
/// log_coefficient = (2/pi) J_n(z). The analytic part carries the pole terms of Y_n.
pub fn hankel_smooth_parts(n: usize, z: f64) -> Result<(Complex64, f64)> {
    check(n, z)?;
    if z > SERIES_RADIUS {
        return Err(Error::Domain(format!(
            "series split requested at z = {z} above radius {SERIES_RADIUS}"
        )));
    }
    let s = hankel1_series(n, 1.0, 0, 24);
    let (analytic, log) = s.eval(z);
    Ok((analytic, log.im))
}

/// Truncated expansion f(r) = sum_p (a_p + b_p ln r) r^p with complex coefficients.
#[derive(Clone, Debug)]
pub struct LogSeries {
    lo: i32,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    /// Running maxima of |a_p| and |b_p| over the remaining terms.
    tail: Vec<(f64, f64)>,
}

impl LogSeries {
    fn from_parts(lo: i32, a: Vec<Complex64>, b: Vec<Complex64>) -> Self {
        let mut tail = vec![(0.0, 0.0); a.len()];
        let (mut ma, mut mb) = (0.0f64, 0.0f64);
        for i in (0..a.len()).rev() {
            ma = ma.max(a[i].norm());
            mb = mb.max(b[i].norm());
            tail[i] = (ma, mb);
        }
        LogSeries { lo, a, b, tail }
    }

    fn empty(lo: i32, hi: i32) -> (Vec<Complex64>, Vec<Complex64>) {
        let len = (hi - lo + 1).max(0) as usize;
        (
            vec![Complex64::default(); len],
            vec![Complex64::default(); len],
        )
    }

    /// Lowest power present.
    pub fn lowest_power(&self) -> i32 {
        self.lo
    }

    /// Coefficients (a_p, b_p) of r^p and r^p ln r.
    pub fn coefficient(&self, p: i32) -> (Complex64, Complex64) {
        let i = p - self.lo;
        if i < 0 || i as usize >= self.a.len() {
            return Default::default();
        }
        (self.a[i as usize], self.b[i as usize])
    }

    fn hi(&self) -> i32 {
        self.lo + self.a.len() as i32 - 1
    }

    /// Sum of two series.
    pub fn add(&self, other: &LogSeries, sign: f64) -> LogSeries {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let (mut a, mut b) = Self::empty(lo, hi);
        for p in lo..=hi {
            let i = (p - lo) as usize;
            let (a1, b1) = self.coefficient(p);
            let (a2, b2) = other.coefficient(p);
            a[i] = a1 + a2 * sign;
            b[i] = b1 + b2 * sign;
        }
        Self::from_parts(lo, a, b)
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: Complex64) -> LogSeries {
        let a = self.a.iter().map(|x| x * c).collect();
        let b = self.b.iter().map(|x| x * c).collect();
        Self::from_parts(self.lo, a, b)
    }

    /// Multiplies the series by r^q.
    pub fn shift(&self, q: i32) -> LogSeries {
        Self::from_parts(self.lo + q, self.a.clone(), self.b.clone())
    }

    /// Drops the r^p term, whose coefficient is known analytically to be `expected`.
    pub fn without_power(&self, p: i32, expected: Complex64) -> LogSeries {
        let (a0, b0) = self.coefficient(p);
        debug_assert!(b0.norm() == 0.0);
        debug_assert!(
            (a0 - expected).norm() <= 1e-9 * (1.0 + expected.norm()),
            "{a0} vs {expected}"
        );
        let mut s = self.clone();
        let i = p - self.lo;
        if i >= 0 && (i as usize) < s.a.len() {
            s.a[i as usize] = Complex64::default();
        }
        Self::from_parts(s.lo, s.a, s.b)
    }

    /// Term-wise derivative in r.
    pub fn derivative(&self) -> LogSeries {
        let (mut a, mut b) = Self::empty(self.lo - 1, self.hi() - 1);
        for p in self.lo..=self.hi() {
            let (ap, bp) = self.coefficient(p);
            let i = (p - self.lo) as usize;
            a[i] = ap * p as f64 + bp;
            b[i] = bp * p as f64;
        }
        Self::from_parts(self.lo - 1, a, b)
    }

    /// Returns (sum a_p r^p, sum b_p r^p), so that f(r) = first + ln(r) * second.
    pub fn eval(&self, r: f64) -> (Complex64, Complex64) {
        let mut rp = r.powi(self.lo);
        let mut sa = Complex64::default();
        let mut sb = Complex64::default();
        for i in 0..self.a.len() {
            let p = self.lo + i as i32;
            // both parts are used separately, so each must be converged on its own
            let (ta, tb) = self.tail[i];
            if p > 0 && rp * ta <= 1e-18 * sa.norm() && rp * tb <= 1e-18 * sb.norm() {
                break;
            }
            sa += self.a[i] * rp;
            sb += self.b[i] * rp;
            rp *= r;
        }
        (sa, sb)
    }
}

/// Expansion of k^q H_n^(1)(k r) in r, built from the ascending series of J_n and Y_n
/// with `terms` terms. Coefficients of the pole terms are formed from k^(q+p) with an
/// integer exponent so that equal-exponent contributions of different k cancel exactly.
pub fn hankel1_series(n: usize, k: f64, q: i32, terms: usize) -> LogSeries {
    let n_i = n as i32;
    let lo = -n_i;
    let hi = 2 * terms as i32 + n_i;
    let (mut a, mut b) = LogSeries::empty(lo, hi);
    let idx = |p: i32| (p - lo) as usize;
    let ln_half_k = (0.5 * k).ln();
    for m in 0..terms {
        let p = 2 * m as i32 + n_i;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign * k.powi(q + p) * 0.5f64.powi(p) / (factorial(m) * factorial(m + n));
        a[idx(p)] += Complex64::new(c, 0.0);
        b[idx(p)] += Complex64::new(0.0, FRAC_2_PI * c);
        let psi = digamma_int(m + 1) + digamma_int(m + n + 1);
        a[idx(p)] += Complex64::new(0.0, FRAC_2_PI * ln_half_k * c - psi * c / PI);
    }
    for m in 0..n {
        let p = 2 * m as i32 - n_i;
        let c = -factorial(n - m - 1) / factorial(m) * k.powi(q + p) * 2f64.powi(-p) / PI;
        a[idx(p)] += Complex64::new(0.0, c);
    }
    LogSeries::from_parts(lo, a, b)
}
