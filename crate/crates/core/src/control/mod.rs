//! Controller families, the two-loop position structure, time-varying
//! formation gains and task blending.

mod presets;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::lti::{poly, roots, DiscreteLTI, RationalTF};

pub use presets::{
    repulsion_plant, resolve_model, verify_default_pairings, ControllerPreset, Expectation,
    PlantPreset, DEFAULT_KR, DEFAULT_MASS,
};

/// First-order controller `delta / (a s + omega^2)`, i.e. `K / (tau s + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SniController {
    pub delta: f64,
    pub a: f64,
    pub omega: f64,
    pub k: f64,
    pub tau: f64,
}

impl SniController {
    pub fn tf(&self) -> RationalTF {
        RationalTF::new(&[self.delta], &[self.a, self.omega * self.omega])
            .expect("a > 0 checked at construction")
    }

    /// Numerator of `M(s) - M(-s)`; its only real root must be the origin.
    pub fn odd_part_numerator(&self) -> Vec<f64> {
        let w2 = self.omega * self.omega;
        // delta (-a s + w2) - delta (a s + w2)
        poly::trim(&poly::add(
            &poly::scale(&[-self.a, w2], self.delta),
            &poly::scale(&[self.a, w2], -self.delta),
        ))
    }

    /// Spot check that `M(s) - M(-s)` vanishes on the real axis only at 0.
    pub fn odd_part_zero_only_at_origin(&self) -> bool {
        let num = self.odd_part_numerator();
        let zs = roots::roots(&num);
        zs.len() == 1 && zs[0].norm() == 0.0
    }
}

pub fn sni_first_order(delta: f64, a: f64, omega: f64) -> Result<(SniController, RationalTF)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "a must be positive, got {a}"
        )));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "omega must be positive, got {omega}"
        )));
    }
    if !delta.is_finite() {
        return Err(Error::NonFinite("delta".into()));
    }
    let w2 = omega * omega;
    let c = SniController {
        delta,
        a,
        omega,
        k: delta / w2,
        tau: a / w2,
    };
    let tf = c.tf();
    Ok((c, tf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Filtered form: the denominator becomes `s^2 + filter_pole s`.
    #[serde(default)]
    pub filter_pole: Option<f64>,
}

/// `(kd s^2 + kp s + ki) / s`, or over `s^2 + p s` when a filter pole is set.
pub fn pid_tf(g: &PidGains) -> Result<RationalTF> {
    if ![g.kp, g.ki, g.kd].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("PID gain".into()));
    }
    let num = [g.kd, g.kp, g.ki];
    match g.filter_pole {
        None => RationalTF::new(&num, &[1.0, 0.0]),
        Some(p) => RationalTF::new(&num, &[1.0, p, 0.0]),
    }
}

/// Outer position controller driving an identified velocity-setpoint to
/// position plant on one axis. The summing junction adds the setpoint to
/// the measurement (`e = pos_sp + pos`), so references enter negated and
/// controllers carry negative gains.
#[derive(Debug, Clone)]
pub struct TwoLoop {
    outer: DiscreteLTI,
    plant: DiscreteLTI,
    pos: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLoopOutput {
    pub error: f64,
    pub vel_sp: f64,
    pub pos: f64,
}

impl TwoLoop {
    pub fn new(outer: &RationalTF, plant: &RationalTF, dt: f64) -> Result<Self> {
        Ok(Self {
            outer: DiscreteLTI::new(outer, dt)?,
            plant: DiscreteLTI::new(plant, dt)?,
            pos: 0.0,
        })
    }

    pub fn pos(&self) -> f64 {
        self.pos
    }

    pub fn dt(&self) -> f64 {
        self.plant.dt()
    }

    /// `input_disturbance` is added to the velocity setpoint at the plant input.
    pub fn tick(&mut self, pos_sp: f64, input_disturbance: f64) -> Result<TwoLoopOutput> {
        two_loop_tick(self, pos_sp, input_disturbance)
    }
}

pub fn two_loop_tick(
    l: &mut TwoLoop,
    pos_sp: f64,
    input_disturbance: f64,
) -> Result<TwoLoopOutput> {
    let error = pos_sp + l.pos;
    let vel_sp = l.outer.step(error)?;
    l.pos = l.plant.step(vel_sp + input_disturbance)?;
    Ok(TwoLoopOutput {
        error,
        vel_sp,
        pos: l.pos,
    })
}

/// Denominator regularization for the time-varying gain (m).
pub const TV_EPSILON: f64 = 1e-3;
/// Magnitude cap for the time-varying gain.
pub const TV_K_MAX: f64 = 10.0;

/// Time-varying gain `dis / (t_des * error)`, element-wise. Errors smaller
/// than `TV_EPSILON` in magnitude are replaced by `±TV_EPSILON` (zero
/// counts as positive) and the result is clamped to `±TV_K_MAX`.
pub fn tv_gains(dis_no: &[f64], t_des: f64, errors: &[f64]) -> Result<Vec<f64>> {
    if !(t_des > 0.0 && t_des.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t_des must be positive, got {t_des}"
        )));
    }
    if dis_no.len() != errors.len() {
        return Err(Error::InvalidArgument(format!(
            "{} displacements for {} errors",
            dis_no.len(),
            errors.len()
        )));
    }
    Ok(dis_no
        .iter()
        .zip(errors)
        .map(|(&d, &e)| tv_gain(d, t_des, e))
        .collect())
}

pub fn tv_gain(dis_no: f64, t_des: f64, error: f64) -> f64 {
    if dis_no == 0.0 {
        return 0.0;
    }
    let sign = if error < 0.0 { -1.0 } else { 1.0 };
    let e = sign * error.abs().max(TV_EPSILON);
    (dis_no / (t_des * e)).clamp(-TV_K_MAX, TV_K_MAX)
}

/// Per-axis priority weights for the formation and repulsion tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskWeights {
    pub ax1: f64,
    pub ax2: f64,
    pub ay1: f64,
    pub ay2: f64,
}

impl TaskWeights {
    pub fn new(ax1: f64, ax2: f64, ay1: f64, ay2: f64) -> Result<Self> {
        let w = Self { ax1, ax2, ay1, ay2 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.ax1, self.ax2, self.ay1, self.ay2];
        if all.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "task weights must lie in [0, 1]".into(),
            ));
        }
        if (self.ax1 + self.ax2 - 1.0).abs() > 1e-12 || (self.ay1 + self.ay2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "task weights must sum to 1 per axis".into(),
            ));
        }
        Ok(())
    }
}

impl Default for TaskWeights {
    fn default() -> Self {
        Self {
            ax1: 0.5,
            ax2: 0.5,
            ay1: 0.5,
            ay2: 0.5,
        }
    }
}

/// `kc * (a1 * formation + a2 * repulse)` per axis.
pub fn blend_priorities(formation: Vec2, repulse: Vec2, w: &TaskWeights, kc: f64) -> Vec2 {
    Vec2::new(
        kc * (w.ax1 * formation.x + w.ax2 * repulse.x),
        kc * (w.ay1 * formation.y + w.ay2 * repulse.y),
    )
}

/// Percentage overshoot of a step response, zero when the peak stays at or
/// below the reference.
pub fn metrics_po(peak: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::InvalidArgument(
            "overshoot needs a non-zero reference".into(),
        ));
    }
    Ok((100.0 * (peak - reference) / reference).max(0.0))
}

pub fn metrics_rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Empty("error series"));
    }
    let ss = poly::compensated_sum(errors.iter().map(|e| e * e));
    Ok((ss / errors.len() as f64).sqrt())
}
