//! Dense real polynomials stored in descending powers.

use num_complex::Complex64;

/// Drops leading (highest power) coefficients that are exactly zero. An
/// all-zero polynomial collapses to `[0.0]`.
pub fn trim(coeffs: &[f64]) -> Vec<f64> {
    match coeffs.iter().position(|c| *c != 0.0) {
        Some(i) => coeffs[i..].to_vec(),
        None => vec![0.0],
    }
}

pub fn degree(coeffs: &[f64]) -> usize {
    trim(coeffs).len() - 1
}

pub fn is_zero(coeffs: &[f64]) -> bool {
    coeffs.iter().all(|c| *c == 0.0)
}

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * x + c)
}

pub fn eval_complex(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

/// Constant term, i.e. the value at zero.
pub fn constant(coeffs: &[f64]) -> f64 {
    *coeffs.last().unwrap_or(&0.0)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, x) in a.iter().enumerate() {
        out[n - a.len() + i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[n - b.len() + i] += y;
    }
    trim(&out)
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|c| c * k).collect()
}

pub fn pow(a: &[f64], n: usize) -> Vec<f64> {
    (0..n).fold(vec![1.0], |acc, _| mul(&acc, a))
}

/// Synthetic division by `(s - root)`; returns the quotient and remainder.
pub fn deflate(coeffs: &[f64], root: f64) -> (Vec<f64>, f64) {
    let mut quotient = Vec::with_capacity(coeffs.len().saturating_sub(1));
    let mut acc = 0.0;
    for (i, c) in coeffs.iter().enumerate() {
        acc = acc * root + c;
        if i + 1 < coeffs.len() {
            quotient.push(acc);
        }
    }
    (quotient, acc)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    if n <= 1 {
        return vec![0.0];
    }
    coeffs[..n - 1]
        .iter()
        .enumerate()
        .map(|(i, c)| c * (n - 1 - i) as f64)
        .collect()
}

/// Neumaier-compensated sum; used where large coefficients cancel.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trim_and_degree() {
        assert_eq!(trim(&[0.0, 0.0, 1.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(trim(&[0.0, 0.0]), vec![0.0]);
        assert_eq!(degree(&[0.0, 3.0, 1.0, 1.0]), 2);
    }

    #[test]
    fn arithmetic() {
        // (s+1)(s+2) = s^2 + 3s + 2
        assert_eq!(mul(&[1.0, 1.0], &[1.0, 2.0]), vec![1.0, 3.0, 2.0]);
        assert_eq!(add(&[1.0, 0.0, 0.0], &[2.0, 1.0]), vec![1.0, 2.0, 1.0]);
        assert_eq!(pow(&[1.0, 1.0], 3), vec![1.0, 3.0, 3.0, 1.0]);
        assert_eq!(eval(&[1.0, 3.0, 2.0], 2.0), 12.0);
    }

    #[test]
    fn deflation_removes_root() {
        let (q, r) = deflate(&[1.0, 3.0, 2.0], -1.0);
        assert_eq!(q, vec![1.0, 2.0]);
        assert!(r.abs() < 1e-15);
    }

    #[test]
    fn derivative_of_cubic() {
        assert_eq!(derivative(&[1.0, 2.0, 3.0, 4.0]), vec![3.0, 4.0, 3.0]);
    }

    #[test]
    fn compensated_sum_recovers_small_remainder() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }
}
