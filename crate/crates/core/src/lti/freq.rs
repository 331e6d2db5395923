use num_complex::Complex64;

use super::tf::RationalTF;
use crate::error::{Error, Result};

/// Strictly increasing set of positive angular frequencies (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct FreqGrid {
    omegas: Vec<f64>,
}

impl FreqGrid {
    pub const DEFAULT_LO: f64 = 1e-4;
    pub const DEFAULT_HI: f64 = 1e6;
    pub const DEFAULT_POINTS: usize = 2000;

    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::Empty("frequency grid"));
        }
        if omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument(
                "grid frequencies must be positive and finite".into(),
            ));
        }
        if omegas.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidArgument(
                "grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { omegas })
    }

    /// `n` points evenly spaced in log10 between `lo` and `hi` inclusive.
    pub fn log_space(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bad grid bounds [{lo}, {hi}]"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(
                "log grid needs at least 2 points".into(),
            ));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let step = (b - a) / (n - 1) as f64;
        let mut omegas: Vec<f64> = (0..n).map(|i| 10f64.powf(a + step * i as f64)).collect();
        omegas[0] = lo;
        omegas[n - 1] = hi;
        Self::new(omegas)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

impl Default for FreqGrid {
    fn default() -> Self {
        Self::log_space(Self::DEFAULT_LO, Self::DEFAULT_HI, Self::DEFAULT_POINTS)
            .expect("default grid bounds are valid")
    }
}

/// One evaluated grid point. `Singular` marks a frequency sitting on an
/// imaginary-axis pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Response {
    Value(Complex64),
    Singular,
}

impl Response {
    pub fn value(self) -> Option<Complex64> {
        match self {
            Response::Value(v) => Some(v),
            Response::Singular => None,
        }
    }
}

pub fn freq_response_at(tf: &RationalTF, omega: f64) -> Response {
    match tf.eval(Complex64::new(0.0, omega)) {
        Some(v) if v.re.is_finite() && v.im.is_finite() => Response::Value(v),
        _ => Response::Singular,
    }
}

pub fn freq_response(tf: &RationalTF, grid: &FreqGrid) -> Vec<Response> {
    grid.omegas()
        .iter()
        .map(|&w| freq_response_at(tf, w))
        .collect()
}
