//! Frequency-sweep negative-imaginary classification.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lti::{freq_response, FreqGrid, RationalTF, Response};

/// Dead-band for every floating-point "> 0" test in this module.
pub const STRICTNESS: f64 = 1e-9;

/// Frequencies below this are skipped by the NI sweep when the plant has a
/// pole at the origin, where `Im P` diverges.
pub const ORIGIN_EXCLUSION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SniFailure {
    UnstablePole,
    ImaginaryAxisPole,
    NonPositiveImaginaryGap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SniReport {
    pub is_sni: bool,
    /// Minimum over the grid of `j[P(jw) - P*(jw)] = -2 Im P(jw)`.
    pub margin: f64,
    pub worst_omega: f64,
    pub poles_stable: bool,
    /// Failure reasons, empty when `is_sni`.
    pub reasons: Vec<SniFailure>,
    /// Lowest and highest grid frequency at which the margin is not positive.
    pub violation_band: Option<(f64, f64)>,
    /// Whether `-P(s)` passes the same test.
    pub negated_is_sni: bool,
}

struct Sweep {
    margin: f64,
    worst_omega: f64,
    band: Option<(f64, f64)>,
    singular: bool,
}

/// Minimum of `sign * -2 Im P` over grid frequencies at or above `from`.
fn sweep(tf: &RationalTF, grid: &FreqGrid, sign: f64, from: f64) -> Sweep {
    let mut out = Sweep {
        margin: f64::INFINITY,
        worst_omega: f64::NAN,
        band: None,
        singular: false,
    };
    for (&w, r) in grid.omegas().iter().zip(freq_response(tf, grid)) {
        if w < from {
            continue;
        }
        match r {
            Response::Singular => out.singular = true,
            Response::Value(v) => {
                let m = sign * -2.0 * v.im;
                if m < out.margin {
                    out.margin = m;
                    out.worst_omega = w;
                }
                if m <= STRICTNESS {
                    out.band = Some(match out.band {
                        None => (w, w),
                        Some((lo, _)) => (lo, w),
                    });
                }
            }
        }
    }
    out
}

pub fn is_sni(tf: &RationalTF, grid: &FreqGrid) -> SniReport {
    let poles = tf.poles();
    let poles_stable = poles.iter().all(|p| p.re < -STRICTNESS);
    let on_axis = poles.iter().any(|p| p.re.abs() <= STRICTNESS);

    let direct = sweep(tf, grid, 1.0, 0.0);
    let negated = sweep(tf, grid, -1.0, 0.0);

    let mut reasons = Vec::new();
    if on_axis || direct.singular {
        reasons.push(SniFailure::ImaginaryAxisPole);
    }
    if poles.iter().any(|p| p.re > STRICTNESS) {
        reasons.push(SniFailure::UnstablePole);
    }
    if !(direct.margin > STRICTNESS) {
        reasons.push(SniFailure::NonPositiveImaginaryGap);
    }
    let is_sni = poles_stable && !direct.singular && direct.margin > STRICTNESS;
    SniReport {
        is_sni,
        margin: direct.margin,
        worst_omega: direct.worst_omega,
        poles_stable,
        reasons: if is_sni { Vec::new() } else { reasons },
        violation_band: direct.band,
        negated_is_sni: poles_stable && !negated.singular && negated.margin > STRICTNESS,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiReport {
    pub is_ni: bool,
    /// The plant has a (simple) pole at the origin and was checked on the
    /// free-body path: strictly proper, sweep above `ORIGIN_EXCLUSION`.
    pub origin_pole: bool,
    pub poles_ok: bool,
    pub strictly_proper_ok: bool,
    /// Minimum of `-2 Im P(jw)` over the swept grid.
    pub min_gap: f64,
    pub negated_is_ni: bool,
}

pub fn ni_report(tf: &RationalTF) -> NiReport {
    ni_report_on(tf, &FreqGrid::default())
}

pub fn ni_report_on(tf: &RationalTF, grid: &FreqGrid) -> NiReport {
    let poles = tf.poles();
    let origin_count = poles.iter().filter(|p| p.norm() <= STRICTNESS).count();
    let poles_ok = poles.iter().all(|p| p.re <= STRICTNESS) && origin_count <= 1;
    let origin_pole = origin_count >= 1;
    let strictly_proper_ok = !origin_pole || tf.is_strictly_proper();
    let from = if origin_pole { ORIGIN_EXCLUSION } else { 0.0 };
    let direct = sweep(tf, grid, 1.0, from);
    let negated = sweep(tf, grid, -1.0, from);
    let base = poles_ok && strictly_proper_ok;
    NiReport {
        is_ni: base && direct.margin >= -STRICTNESS,
        origin_pole,
        poles_ok,
        strictly_proper_ok,
        min_gap: direct.margin,
        negated_is_ni: base && negated.margin >= -STRICTNESS,
    }
}

pub fn is_ni(tf: &RationalTF) -> bool {
    ni_report(tf).is_ni
}

pub fn block_sni(tfs: &[RationalTF], grid: &FreqGrid) -> Result<bool> {
    if tfs.is_empty() {
        return Err(Error::Empty("transfer-function block"));
    }
    Ok(tfs.iter().all(|tf| is_sni(tf, grid).is_sni))
}

/// Closed loop of an NI plant and an SNI member joined with a plus-sign
/// junction, `a / (1 - a b)`, and its SNI classification. This is an
/// empirical spot check of the positive-interconnection result, not a proof.
pub fn positive_interconnection(
    ni_plant: &RationalTF,
    sni_member: &RationalTF,
    grid: &FreqGrid,
) -> Result<(RationalTF, SniReport)> {
    let closed = RationalTF::positive_feedback(ni_plant, sni_member)?;
    let report = is_sni(&closed, grid);
    Ok((closed, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(num: &[f64], den: &[f64]) -> RationalTF {
        RationalTF::new(num, den).unwrap()
    }

    #[test]
    fn first_order_lag_is_sni() {
        let r = is_sni(&tf(&[1.0], &[1.0, 1.0]), &FreqGrid::default());
        assert!(r.is_sni);
        assert!(r.poles_stable);
        assert!(!r.negated_is_sni);
        assert!(r.reasons.is_empty());
    }

    #[test]
    fn negative_lag_fails_literal_test_but_complement_passes() {
        let r = is_sni(&tf(&[-1.0], &[1.0, 1.0]), &FreqGrid::default());
        assert!(!r.is_sni);
        assert!(r.negated_is_sni);
        assert!(r.margin < 0.0);
        assert!(r.reasons.contains(&SniFailure::NonPositiveImaginaryGap));
    }

    #[test]
    fn integrator_is_flagged_not_panicking() {
        let r = is_sni(&tf(&[1.0], &[1.0, 0.0]), &FreqGrid::default());
        assert!(!r.is_sni);
        assert!(r.reasons.contains(&SniFailure::ImaginaryAxisPole));
    }

    #[test]
    fn ni_classification() {
        assert!(is_ni(&tf(&[1.0], &[1.0, 1.0])));
        assert!(!is_ni(&tf(&[1.0], &[1.0, -1.0])));
        // Positive-gain free body 1/(ms) is NI on the origin path.
        let r = ni_report(&tf(&[0.1], &[1.0, 0.0]));
        assert!(r.origin_pole && r.is_ni);
        // Double integrator is excluded.
        assert!(!is_ni(&tf(&[1.0], &[1.0, 0.0, 0.0])));
    }

    #[test]
    fn block_needs_every_member() {
        let g = FreqGrid::default();
        let good = tf(&[1.0], &[1.0, 1.0]);
        let bad = tf(&[1.0], &[1.0, -1.0]);
        assert!(block_sni(std::slice::from_ref(&good), &g).unwrap());
        assert!(!block_sni(&[good, bad], &g).unwrap());
        assert!(block_sni(&[], &g).is_err());
    }
}
