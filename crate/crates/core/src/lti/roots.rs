//! Polynomial roots from balanced companion-matrix eigenvalues.
//!
//! The companion matrix of the monic polynomial is balanced with powers of
//! two (Parlett–Reinsch), its eigenvalues come from a real Schur
//! decomposition, and each root is then polished with a few Newton steps on
//! the original coefficients. Complex roots are returned as exact conjugate
//! pairs, positive imaginary part first.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::poly;

/// Relative residual `|p(r)| / sum_k |c_k| |r|^k` of a candidate root.
pub fn relative_residual(coeffs: &[f64], root: Complex64) -> f64 {
    let value = poly::eval_complex(coeffs, root).norm();
    let scale = coeffs
        .iter()
        .fold(0.0, |acc, c| acc * root.norm() + c.abs());
    if scale == 0.0 {
        value
    } else {
        value / scale
    }
}

pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut p = poly::trim(coeffs);
    if p.len() <= 1 {
        return Vec::new();
    }

    let mut out = Vec::with_capacity(p.len() - 1);
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
        out.push(Complex64::new(0.0, 0.0));
    }

    let lead = p[0];
    let monic: Vec<f64> = p.iter().map(|c| c / lead).collect();
    let n = monic.len() - 1;
    match n {
        0 => {}
        1 => out.push(Complex64::new(-monic[1], 0.0)),
        _ => {
            let mut companion = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                companion[(0, j)] = -monic[j + 1];
            }
            for i in 1..n {
                companion[(i, i - 1)] = 1.0;
            }
            balance(&mut companion);
            let eig = companion.complex_eigenvalues();
            let mut found: Vec<Complex64> = eig
                .iter()
                .map(|z| polish(&monic, Complex64::new(z.re, z.im)))
                .collect();
            pair_conjugates(&mut found);
            out.extend(found);
        }
    }
    out
}

/// In-place Parlett–Reinsch balancing with radix 2 (similarity transform, so
/// eigenvalues are unchanged while the norm spread is reduced).
fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    row += m[(i, j)].abs();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut g = row / RADIX;
            while col < g {
                f *= RADIX;
                col *= RADIX * RADIX;
            }
            g = row * RADIX;
            while col > g {
                f /= RADIX;
                col /= RADIX * RADIX;
            }
            if (col + row) / f < 0.95 * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

fn polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    let deriv = poly::derivative(coeffs);
    let mut best = z;
    let mut best_res = poly::eval_complex(coeffs, z).norm();
    for _ in 0..8 {
        let p = poly::eval_complex(coeffs, z);
        let dp = poly::eval_complex(&deriv, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        z -= p / dp;
        let res = poly::eval_complex(coeffs, z).norm();
        if !res.is_finite() {
            break;
        }
        if res < best_res {
            best = z;
            best_res = res;
        } else {
            break;
        }
    }
    best
}

fn pair_conjugates(roots: &mut Vec<Complex64>) {
    let tol = 1e-10;
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for r in roots.drain(..) {
        if r.im.abs() <= tol * r.norm().max(1.0) {
            real.push(Complex64::new(r.re, 0.0));
        } else if r.im > 0.0 {
            upper.push(r);
        } else {
            lower.push(r);
        }
    }
    real.sort_by(|a, b| b.re.total_cmp(&a.re));
    upper.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));

    roots.extend(real);
    for u in upper {
        // Nearest lower-half partner; average to make the pair exact.
        let k = lower
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (**a - u.conj()).norm().total_cmp(&(**b - u.conj()).norm()))
            .map(|(k, _)| k);
        let (re, im) = match k {
            Some(k) => {
                let l = lower.swap_remove(k);
                (0.5 * (u.re + l.re), 0.5 * (u.im - l.im))
            }
            None => (u.re, u.im),
        };
        roots.push(Complex64::new(re, im));
        roots.push(Complex64::new(re, -im));
    }
    // Unpaired lower-half roots only appear for malformed input; keep them.
    roots.extend(lower);
}
