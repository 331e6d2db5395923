//! Incidence matrices, Laplacians and the DC-gain stability bounds.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lti::{DcGain, RationalTF};

/// Node-by-edge incidence matrix: each column holds one `+1`, one `-1` and
/// zeros elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    entries: DMatrix<f64>,
}

impl IncidenceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let mut seen: Vec<(usize, usize)> = Vec::with_capacity(entries.ncols());
        for (j, col) in entries.column_iter().enumerate() {
            let mut plus = None;
            let mut minus = None;
            for (i, &v) in col.iter().enumerate() {
                if v == 1.0 && plus.is_none() {
                    plus = Some(i);
                } else if v == -1.0 && minus.is_none() {
                    minus = Some(i);
                } else if v != 0.0 {
                    return Err(Error::MalformedIncidence(format!(
                        "column {j} has unexpected entry {v} at row {i}"
                    )));
                }
            }
            let (Some(p), Some(m)) = (plus, minus) else {
                return Err(Error::MalformedIncidence(format!(
                    "column {j} needs exactly one +1 and one -1"
                )));
            };
            let key = (p.min(m), p.max(m));
            if seen.contains(&key) {
                return Err(Error::MalformedIncidence(format!(
                    "column {j} duplicates edge {key:?}"
                )));
            }
            seen.push(key);
        }
        Ok(Self { entries })
    }

    /// Builds the matrix for `nodes` vertices from `(tail, head)` pairs; the
    /// tail gets `+1`.
    pub fn from_edges(nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut m = DMatrix::zeros(nodes, edges.len());
        for (j, &(a, b)) in edges.iter().enumerate() {
            if a >= nodes || b >= nodes || a == b {
                return Err(Error::MalformedIncidence(format!("bad edge ({a}, {b})")));
            }
            m[(a, j)] = 1.0;
            m[(b, j)] = -1.0;
        }
        Self::new(m)
    }

    pub fn nodes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn edges(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Edge list as `(tail, head)` pairs.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.entries
            .column_iter()
            .map(|c| {
                let p = c.iter().position(|&v| v == 1.0).unwrap();
                let m = c.iter().position(|&v| v == -1.0).unwrap();
                (p, m)
            })
            .collect()
    }
}

pub fn laplacian_from_incidence(q: &IncidenceMatrix) -> DMatrix<f64> {
    let m = q.matrix();
    m * m.transpose()
}

/// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::NotSymmetric);
    }
    if n == 0 {
        return Err(Error::Empty("matrix"));
    }
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(jacobi_eigenvalues(m.clone())
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let total: f64 = a.iter().map(|v| v * v).sum();
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormationVerdict {
    pub stable: bool,
    /// `1/lambda_max - m0 n0`; infinite for an edgeless graph.
    pub margin: f64,
    pub lambda_max: f64,
    /// The graph had no edges, so the bound holds vacuously.
    pub vacuous: bool,
}

/// Scalar form of the interconnection bound `m0 n0 < 1 / lambda_max(Q Q^T)`.
pub fn formation_stable(m0: f64, n0: f64, q: &IncidenceMatrix) -> Result<FormationVerdict> {
    if !(m0.is_finite() && n0.is_finite()) {
        return Err(Error::NonFinite("DC gain bound".into()));
    }
    if q.nodes() == 0 {
        return Err(Error::Empty("graph"));
    }
    let lambda = max_eigenvalue(&laplacian_from_incidence(q))?;
    if lambda <= 1e-12 {
        return Ok(FormationVerdict {
            stable: true,
            margin: f64::INFINITY,
            lambda_max: 0.0,
            vacuous: true,
        });
    }
    let margin = 1.0 / lambda - m0 * n0;
    Ok(FormationVerdict {
        stable: margin > 0.0,
        margin,
        lambda_max: lambda,
        vacuous: false,
    })
}

/// SISO positive-feedback internal stability via DC gains: `M(0) N(0) < 1`.
pub fn interconnect_stable(m: &RationalTF, n: &RationalTF) -> Result<bool> {
    match (m.dc_gain(), n.dc_gain()) {
        (DcGain::Finite(a), DcGain::Finite(b)) => Ok(a * b < 1.0),
        _ => Err(Error::InfiniteDcGain),
    }
}
