//! Bilinear (Tustin) discretization and Direct Form II transposed stepping.

use super::poly;
use super::tf::{DcGain, RationalTF};
use crate::error::{Error, Result};

/// Default simulation step: the 100 Hz motion-capture broadcast rate.
pub const DEFAULT_DT: f64 = 0.01;

/// Discrete-time realization of a proper transfer function with its own
/// filter state. `a[0]` is always 1 and `b` has the same length as `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLTI {
    b: Vec<f64>,
    a: Vec<f64>,
    state: Vec<f64>,
    dt: f64,
}

/// Coefficients of `(z - 1)^p (z + 1)^q`, descending powers.
fn tustin_basis(p: usize, q: usize) -> Vec<f64> {
    poly::mul(&poly::pow(&[1.0, -1.0], p), &poly::pow(&[1.0, 1.0], q))
}

/// Maps `sum_i c_i s^(n-i)` through `s = k (z-1)/(z+1)` after multiplying by
/// `(z+1)^n`. Every term is collected per output power with a compensated sum.
fn map_poly(c: &[f64], n: usize, k: f64) -> Vec<f64> {
    let padded: Vec<f64> = std::iter::repeat_n(0.0, n + 1 - c.len())
        .chain(c.iter().copied())
        .collect();
    let terms: Vec<Vec<f64>> = padded
        .iter()
        .enumerate()
        .map(|(i, ci)| {
            let p = n - i;
            poly::scale(&tustin_basis(p, i), ci * k.powi(p as i32))
        })
        .collect();
    (0..=n)
        .map(|j| poly::compensated_sum(terms.iter().map(|t| t[j])))
        .collect()
}

pub fn discretize(tf: &RationalTF, dt: f64) -> Result<DiscreteLTI> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Discretization(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !tf.is_proper() {
        return Err(Error::Discretization(
            "improper transfer function has no causal discrete realization".into(),
        ));
    }
    let n = tf.order();
    let k = 2.0 / dt;
    for p in tf.poles() {
        if (p - k).norm() < 0.01 * k {
            return Err(Error::Discretization(format!(
                "pole {p} lies within 1% of the bilinear singularity 2/dt = {k}"
            )));
        }
    }

    let mut a = map_poly(tf.den(), n, k);
    let mut b = map_poly(tf.num(), n, k);
    let lead = a[0];
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::Discretization(
            "degenerate discrete denominator".into(),
        ));
    }
    for v in a.iter_mut().chain(b.iter_mut()) {
        *v /= lead;
    }

    // z = 1 corresponds to s = 0. Rounding in the expanded coefficients would
    // otherwise leak a few ulps of DC gain (or turn an integrator leaky).
    match tf.dc_gain() {
        DcGain::Finite(gain) => {
            let sa = poly::compensated_sum(a.iter().copied());
            let sb = poly::compensated_sum(b.iter().copied());
            if gain == 0.0 {
                if sb != 0.0 {
                    let last = b.len() - 1;
                    b[last] -= sb;
                }
            } else if sb != 0.0 && sa != 0.0 {
                let fix = gain * sa / sb;
                for v in b.iter_mut() {
                    *v *= fix;
                }
            }
        }
        DcGain::Infinite => {
            let last = a.len() - 1;
            let rest = poly::compensated_sum(a[..last].iter().copied());
            a[last] = -rest;
        }
    }

    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Discretization(
            "non-finite discrete coefficients".into(),
        ));
    }
    Ok(DiscreteLTI {
        state: vec![0.0; n],
        b,
        a,
        dt,
    })
}

impl DiscreteLTI {
    pub fn new(tf: &RationalTF, dt: f64) -> Result<Self> {
        discretize(tf, dt)
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// `B(1) / A(1)`; `None` for a discrete pole at z = 1.
    pub fn dc_gain(&self) -> Option<f64> {
        let sa = poly::compensated_sum(self.a.iter().copied());
        if sa == 0.0 {
            return None;
        }
        Some(poly::compensated_sum(self.b.iter().copied()) / sa)
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|s| *s = 0.0);
    }

    /// Output the next sample would produce for input `u`, without advancing.
    pub fn peek(&self, u: f64) -> f64 {
        self.b[0] * u + self.state.first().copied().unwrap_or(0.0)
    }

    pub fn step(&mut self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::NonFinite(format!("filter input {u}")));
        }
        let y = self.peek(u);
        let n = self.state.len();
        for i in 0..n {
            let next = if i + 1 < n { self.state[i + 1] } else { 0.0 };
            self.state[i] = self.b[i + 1] * u - self.a[i + 1] * y + next;
        }
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("filter output {y}")));
        }
        Ok(y)
    }

    /// Sets the state to the steady state reached under a constant input `u`,
    /// so the filter starts at rest at a non-zero operating point.
    pub fn settle_to(&mut self, u: f64) -> Result<f64> {
        let gain = self.dc_gain().ok_or_else(|| {
            Error::InvalidArgument("cannot settle a filter with a pole at z = 1".into())
        })?;
        let y = gain * u;
        let n = self.state.len();
        // Back-substitute the transposed-form recursion with constant u, y.
        for i in (0..n).rev() {
            let next = if i + 1 < n { self.state[i + 1] } else { 0.0 };
            self.state[i] = self.b[i + 1] * u - self.a[i + 1] * y + next;
        }
        Ok(y)
    }
}
