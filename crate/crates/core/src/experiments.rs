//! Single-axis two-loop experiments: step response, hover under a wind
//! gust and circular trajectory tracking.

use serde::{Deserialize, Serialize};

use crate::control::{metrics_po, metrics_rmse, TwoLoop};
use crate::error::{Error, Result};
use crate::lti::{DiscreteLTI, RationalTF};
use crate::rng::{stream, Purpose};
use crate::vehicle::{WindCoupling, WindModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMetrics {
    /// First time the output reaches the reference (s).
    pub time_to_reference: Option<f64>,
    pub peak: f64,
    /// Percent overshoot.
    pub po: f64,
    /// RMS tracking error over the run.
    pub rmse: f64,
    pub final_value: f64,
}

fn check_run(dt: f64, duration: f64) -> Result<usize> {
    if !(dt > 0.0 && duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bad run length dt={dt} duration={duration}"
        )));
    }
    Ok((duration / dt).round() as usize)
}

fn washout(c: WindCoupling, dt: f64) -> Result<Option<DiscreteLTI>> {
    match c {
        WindCoupling::Washout { tau } => Ok(Some(DiscreteLTI::new(
            &RationalTF::new(&[tau, 0.0], &[tau, 1.0])?,
            dt,
        )?)),
        WindCoupling::Direct => Ok(None),
    }
}

/// Step of size `reference` at `t = 0` into the two-loop structure.
pub fn step_response(
    controller: &RationalTF,
    plant: &RationalTF,
    reference: f64,
    dt: f64,
    duration: f64,
) -> Result<(Vec<f64>, StepMetrics)> {
    if reference == 0.0 || !reference.is_finite() {
        return Err(Error::InvalidArgument(
            "step reference must be finite and non-zero".into(),
        ));
    }
    let n = check_run(dt, duration)?;
    let mut lp = TwoLoop::new(controller, plant, dt)?;
    let mut out = Vec::with_capacity(n);
    let mut reached = None;
    for k in 0..n {
        // Plus junction: the reference enters negated.
        let y = lp.tick(-reference, 0.0)?.pos;
        if reached.is_none() && (y - reference) * reference.signum() >= 0.0 {
            reached = Some((k + 1) as f64 * dt);
        }
        out.push(y);
    }
    let peak = out
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, |a, y| a.max(y * reference.signum()))
        * reference.signum();
    let errs: Vec<f64> = out.iter().map(|y| y - reference).collect();
    let m = StepMetrics {
        time_to_reference: reached,
        peak,
        po: metrics_po(peak, reference)?,
        rmse: metrics_rmse(&errs)?,
        final_value: *out.last().expect("n > 0"),
    };
    Ok((out, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoverSetup {
    /// Hover point on this axis (m); the recovery band is a fraction of it.
    pub hover: f64,
    pub band: f64,
    /// Time the wind switches on (s).
    pub onset: f64,
    pub duration: f64,
    pub dt: f64,
    /// Wind speed along this axis once on (m/s).
    pub wind: f64,
    pub coupling: WindCoupling,
}

impl Default for HoverSetup {
    fn default() -> Self {
        Self {
            hover: 1.0,
            band: 0.05,
            onset: 60.0,
            duration: 300.0,
            dt: 0.01,
            wind: 0.5,
            coupling: WindCoupling::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoverMetrics {
    /// Largest distance from the hover point after onset (m).
    pub peak_deviation: f64,
    /// Time after onset when the output last re-entered the band and then
    /// stayed in it (s); `None` if it never left or never came back.
    pub recovery_time: Option<f64>,
    /// Whether the output left the band at all.
    pub left_band: bool,
    pub in_band_before_onset: bool,
}

/// Hover at `setup.hover`, then switch on a steady wind at `setup.onset`.
pub fn hover_disturbance(
    controller: &RationalTF,
    plant: &RationalTF,
    setup: &HoverSetup,
) -> Result<(Vec<f64>, HoverMetrics)> {
    let n = check_run(setup.dt, setup.duration)?;
    if !(setup.onset >= 0.0 && setup.onset < setup.duration) {
        return Err(Error::InvalidArgument(
            "wind onset must lie inside the run".into(),
        ));
    }
    let mut lp = TwoLoop::new(controller, plant, setup.dt)?;
    let mut wash = washout(setup.coupling, setup.dt)?;
    let band = setup.band * setup.hover.abs();
    let onset_k = (setup.onset / setup.dt).round() as usize;
    let mut out = Vec::with_capacity(n);
    let mut peak: f64 = 0.0;
    let mut left = false;
    let mut last_entry: Option<usize> = None;
    let mut inside = true;
    let mut settled_before = false;
    for k in 0..n {
        let w = if k >= onset_k { setup.wind } else { 0.0 };
        let d = match wash.as_mut() {
            Some(f) => f.step(w)?,
            None => w,
        };
        let y = lp.tick(-setup.hover, d)?.pos;
        out.push(y);
        let dev = (y - setup.hover).abs();
        if k + 1 == onset_k {
            settled_before = dev <= band;
        }
        if k >= onset_k {
            peak = peak.max(dev);
            let now_inside = dev <= band;
            if !now_inside {
                left = true;
            } else if !inside {
                last_entry = Some(k);
            }
            inside = now_inside;
        }
    }
    let recovery_time = match (left, inside, last_entry) {
        (true, true, Some(k)) => Some((k + 1 - onset_k) as f64 * setup.dt),
        _ => None,
    };
    Ok((
        out,
        HoverMetrics {
            peak_deviation: peak,
            recovery_time,
            left_band: left,
            in_band_before_onset: settled_before,
        },
    ))
}

/// Hover experiment along one axis of a [`WindModel`]: the axis component
/// of its bias (after rotation), gusts ignored.
pub fn axis_wind(wind: &WindModel, axis: usize) -> f64 {
    let b = wind.bias.rotated(wind.direction);
    if axis == 0 {
        b.x
    } else {
        b.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleMetrics {
    pub rmse_x: f64,
    pub rmse_y: f64,
}

/// Tracks `(r cos wt, r sin wt)` with one two-loop per axis, after `settle`
/// seconds holding the start point `(r, 0)`. Gusts from `wind` (seeded)
/// are added at the plant input when given.
#[allow(clippy::too_many_arguments)]
pub fn circle_tracking(
    controller: &RationalTF,
    plant_x: &RationalTF,
    plant_y: &RationalTF,
    radius: f64,
    omega: f64,
    settle: f64,
    duration: f64,
    dt: f64,
    wind: Option<(&WindModel, u64)>,
) -> Result<CircleMetrics> {
    let n = check_run(dt, duration)?;
    let ns = (settle / dt).round() as usize;
    let mut lx = TwoLoop::new(controller, plant_x, dt)?;
    let mut ly = TwoLoop::new(controller, plant_y, dt)?;
    let (mut ex, mut ey) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut wash = match wind {
        Some((w, _)) => washout(w.coupling, dt)?.map(|f| (f.clone(), f)),
        None => None,
    };
    for k in 0..ns + n {
        let t = k.saturating_sub(ns) as f64 * dt;
        let (rx, ry) = (radius * (omega * t).cos(), radius * (omega * t).sin());
        let (dx, dy) = match (wind, wash.as_mut()) {
            (Some((w, seed)), filt) if k >= ns => {
                let mut rng = stream(seed, k as u64, 0, Purpose::Wind);
                let v = w.sample(t, &mut rng);
                match filt {
                    Some((fx, fy)) => (fx.step(v.x)?, fy.step(v.y)?),
                    None => (v.x, v.y),
                }
            }
            _ => (0.0, 0.0),
        };
        let x = lx.tick(-rx, dx)?.pos;
        let y = ly.tick(-ry, dy)?.pos;
        if k >= ns {
            ex.push(x - rx);
            ey.push(y - ry);
        }
    }
    Ok(CircleMetrics {
        rmse_x: metrics_rmse(&ex)?,
        rmse_y: metrics_rmse(&ey)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControllerPreset as C;
    use crate::vehicle::uav_plants;

    #[test]
    fn integrator_loop_matches_exponential() {
        // -1 against 1/s: y = r (1 - e^-t), never reaches r.
        let c = RationalTF::gain(-1.0).unwrap();
        let p = RationalTF::new(&[1.0], &[1.0, 0.0]).unwrap();
        let (y, m) = step_response(&c, &p, 0.5, 0.001, 5.0).unwrap();
        assert_eq!(m.time_to_reference, None);
        assert_eq!(m.po, 0.0);
        let oracle = 0.5 * (1.0 - (-1.0f64).exp());
        assert!((y[999] - oracle).abs() < 1e-3, "{} vs {oracle}", y[999]);
    }

    #[test]
    fn sni_reaches_reference_first() {
        let (px, py) = uav_plants();
        let (_, sx) = step_response(&C::SniSim.tf(), &px, 0.5, 0.01, 300.0).unwrap();
        let (_, fx) = step_response(&C::PidfX.tf(), &px, 0.5, 0.01, 300.0).unwrap();
        let (_, sy) = step_response(&C::SniSim.tf(), &py, 0.5, 0.01, 300.0).unwrap();
        assert!(sx.time_to_reference.unwrap() * 5.0 <= fx.time_to_reference.unwrap());
        assert!((6.0..=26.0).contains(&sx.po), "{}", sx.po);
        assert!((2.0..=22.0).contains(&sy.po), "{}", sy.po);
    }

    #[test]
    fn calm_hover_never_leaves_band() {
        let (px, _) = uav_plants();
        let s = HoverSetup {
            wind: 0.0,
            ..HoverSetup::default()
        };
        let (_, m) = hover_disturbance(&C::SniExp.tf(), &px, &s).unwrap();
        assert!(m.in_band_before_onset);
        assert!(!m.left_band);
        assert_eq!(m.recovery_time, None);
    }

    #[test]
    fn pi_recovers_slower_than_sni() {
        let (px, _) = uav_plants();
        let s = HoverSetup::default();
        let a = hover_disturbance(&C::SniExp.tf(), &px, &s).unwrap().1;
        let b = hover_disturbance(&C::PiExp.tf(), &px, &s).unwrap().1;
        assert!(a.recovery_time.unwrap() < b.recovery_time.unwrap());
    }

    #[test]
    fn rejects_onset_outside_run() {
        let (px, _) = uav_plants();
        let s = HoverSetup {
            onset: 400.0,
            ..HoverSetup::default()
        };
        assert!(hover_disturbance(&C::SniExp.tf(), &px, &s).is_err());
    }

    #[test]
    fn circle_of_zero_radius_is_perfect() {
        let (px, py) = uav_plants();
        let m =
            circle_tracking(&C::SniExp.tf(), &px, &py, 0.0, 1.0, 0.0, 10.0, 0.01, None).unwrap();
        assert_eq!((m.rmse_x, m.rmse_y), (0.0, 0.0));
    }

    #[test]
    fn circle_sni_tracks_better_than_pi() {
        let (px, py) = uav_plants();
        let w = 2.0 * std::f64::consts::PI / 28.0;
        let a = circle_tracking(&C::SniExp.tf(), &px, &py, 0.8, w, 30.0, 56.0, 0.01, None).unwrap();
        let b = circle_tracking(&C::PiExp.tf(), &px, &py, 0.8, w, 30.0, 56.0, 0.01, None).unwrap();
        assert!(a.rmse_x < b.rmse_x && a.rmse_y < b.rmse_y, "{a:?} {b:?}");
    }
}
