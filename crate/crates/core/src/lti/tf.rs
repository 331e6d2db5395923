use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{poly, roots};
use crate::error::{Error, Result};

/// Continuous-time SISO transfer function `num(s) / den(s)`, coefficients in
/// descending powers of `s`. The denominator is stored monic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

/// Zero-frequency gain. A pole at the origin is reported as `Infinite`
/// rather than an error so callers can branch on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DcGain {
    Finite(f64),
    Infinite,
}

impl DcGain {
    pub fn finite(self) -> Option<f64> {
        match self {
            DcGain::Finite(k) => Some(k),
            DcGain::Infinite => None,
        }
    }
}

impl RationalTF {
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self> {
        if den.is_empty() {
            return Err(Error::InvalidTf("empty denominator".into()));
        }
        if num.is_empty() {
            return Err(Error::InvalidTf("empty numerator".into()));
        }
        if num.iter().chain(den).any(|c| !c.is_finite()) {
            return Err(Error::InvalidTf("non-finite coefficient".into()));
        }
        if den[0] == 0.0 {
            return Err(Error::InvalidTf(
                "leading denominator coefficient is zero".into(),
            ));
        }
        let lead = den[0];
        let mut num = poly::trim(&poly::scale(num, 1.0 / lead));
        let mut den: Vec<f64> = den.iter().map(|c| c / lead).collect();
        // Cancel exact common factors of s so that e.g. s/s is the unit gain.
        while den.len() > 1
            && num.len() > 1
            && poly::constant(&den) == 0.0
            && poly::constant(&num) == 0.0
        {
            den.pop();
            num.pop();
        }
        Ok(Self { num, den })
    }

    pub fn gain(k: f64) -> Result<Self> {
        Self::new(&[k], &[1.0])
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        poly::degree(&self.num) <= self.order()
    }

    pub fn is_strictly_proper(&self) -> bool {
        poly::is_zero(&self.num) || poly::degree(&self.num) < self.order()
    }

    pub fn dc_gain(&self) -> DcGain {
        let d0 = poly::constant(&self.den);
        if d0 == 0.0 {
            // 0/s is still zero; every other numerator blows up.
            if poly::is_zero(&self.num) {
                return DcGain::Finite(0.0);
            }
            return DcGain::Infinite;
        }
        DcGain::Finite(poly::constant(&self.num) / d0)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        roots::roots(&self.den)
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        roots::roots(&self.num)
    }

    /// Value at an arbitrary complex point; `None` when the denominator vanishes.
    pub fn eval(&self, s: Complex64) -> Option<Complex64> {
        let d = poly::eval_complex(&self.den, s);
        let scale = self.den.iter().fold(0.0, |acc, c| acc * s.norm() + c.abs());
        if d.norm() <= f64::EPSILON * scale {
            return None;
        }
        Some(poly::eval_complex(&self.num, s) / d)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            num: poly::trim(&poly::scale(&self.num, k)),
            den: self.den.clone(),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn series(&self, other: &Self) -> Self {
        Self::new(
            &poly::mul(&self.num, &other.num),
            &poly::mul(&self.den, &other.den),
        )
        .expect("product of valid denominators is valid")
    }

    /// Closed loop `a / (1 - a b)`: `a` in the forward path, `b` fed back
    /// through a plus-sign summing junction.
    pub fn positive_feedback(a: &Self, b: &Self) -> Result<Self> {
        let num = poly::mul(&a.num, &b.den);
        let den = poly::add(
            &poly::mul(&a.den, &b.den),
            &poly::scale(&poly::mul(&a.num, &b.num), -1.0),
        );
        Self::new(&num, &poly::trim(&den))
    }
}

impl<'de> Deserialize<'de> for RationalTF {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            num: Vec<f64>,
            den: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        RationalTF::new(&raw.num, &raw.den).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for RationalTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/({})", fmt_poly(&self.num), fmt_poly(&self.den))
    }
}

fn fmt_poly(c: &[f64]) -> String {
    let n = c.len();
    let mut out = String::new();
    for (i, &v) in c.iter().enumerate() {
        let p = n - 1 - i;
        if v == 0.0 && n > 1 {
            continue;
        }
        if !out.is_empty() {
            out.push_str(if v < 0.0 { " - " } else { " + " });
        } else if v < 0.0 {
            out.push('-');
        }
        let a = v.abs();
        match p {
            0 => out.push_str(&format!("{a}")),
            1 => out.push_str(&format!("{a}s")),
            _ => out.push_str(&format!("{a}s^{p}")),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}
