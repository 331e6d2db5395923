use serde::{Deserialize, Serialize};

use super::{ugv_plants, ugv_speed_response, yaw_speed_from_velocity, RobotState};
use crate::error::{Error, Result};
use crate::geom::{angle_diff, wrap_angle, Vec2};
use crate::lti::{DiscreteLTI, RationalTF};

/// Heading error above which the UGV stops and turns in place (60 degrees).
pub const CORNER_THRESHOLD: f64 = std::f64::consts::FRAC_PI_3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UgvParams {
    /// Speed saturation (m/s).
    pub vmax: f64,
    /// Heading PI gains acting on the wrapped yaw error.
    #[serde(default = "default_yaw_kp")]
    pub yaw_kp: f64,
    #[serde(default = "default_yaw_ki")]
    pub yaw_ki: f64,
    #[serde(default = "default_corner")]
    pub corner_threshold: f64,
}

fn default_yaw_kp() -> f64 {
    8.0
}

fn default_yaw_ki() -> f64 {
    1.0
}

fn default_corner() -> f64 {
    CORNER_THRESHOLD
}

impl UgvParams {
    pub fn with_vmax(vmax: f64) -> Self {
        Self {
            vmax,
            yaw_kp: default_yaw_kp(),
            yaw_ki: default_yaw_ki(),
            corner_threshold: default_corner(),
        }
    }
}

/// Per-vehicle filter state for a ground robot.
#[derive(Debug, Clone)]
pub struct UgvModel {
    speed: DiscreteLTI,
    heading_ctrl: DiscreteLTI,
    yaw_plant: DiscreteLTI,
    yaw0: f64,
    yaw_sp: f64,
    rotating: bool,
    last_speed: f64,
    params: UgvParams,
}

impl UgvModel {
    pub fn new(initial_yaw: f64, params: UgvParams, dt: f64) -> Result<Self> {
        if !(params.vmax > 0.0) || !params.vmax.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "vmax must be positive, got {}",
                params.vmax
            )));
        }
        let (speed_plant, yaw_plant) = ugv_plants();
        let heading = RationalTF::new(&[params.yaw_kp, params.yaw_ki], &[1.0, 0.0])?;
        Ok(Self {
            speed: DiscreteLTI::new(&ugv_speed_response(&speed_plant)?, dt)?,
            heading_ctrl: DiscreteLTI::new(&heading, dt)?,
            yaw_plant: DiscreteLTI::new(&yaw_plant, dt)?,
            yaw0: initial_yaw,
            yaw_sp: wrap_angle(initial_yaw),
            rotating: false,
            last_speed: 0.0,
            params,
        })
    }

    pub fn dt(&self) -> f64 {
        self.speed.dt()
    }

    pub fn params(&self) -> &UgvParams {
        &self.params
    }

    /// Whether the last tick ran in turn-in-place mode.
    pub fn rotating(&self) -> bool {
        self.rotating
    }

    pub fn last_speed(&self) -> f64 {
        self.last_speed
    }

    pub fn yaw_setpoint(&self) -> f64 {
        self.yaw_sp
    }
}

/// One step of a ground robot: heading/speed conversion, the turn-in-place
/// rule, both identified loops, then pose integration along the heading.
pub fn ugv_tick(
    state: &RobotState,
    model: &mut UgvModel,
    vel_cmd: Vec2,
    dt: f64,
) -> Result<RobotState> {
    if !vel_cmd.is_finite() {
        return Err(Error::NonFinite(format!("velocity command {vel_cmd:?}")));
    }
    if (dt - model.dt()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "tick dt {dt} differs from model dt {}",
            model.dt()
        )));
    }
    let (yaw_sp, speed_sp) = yaw_speed_from_velocity(vel_cmd, model.yaw_sp);
    model.yaw_sp = yaw_sp;

    let err = angle_diff(yaw_sp, state.yaw);
    let rotating = err.abs() > model.params.corner_threshold;

    let rate_cmd = model.heading_ctrl.step(err)?;
    let yaw = wrap_angle(model.yaw0 + model.yaw_plant.step(rate_cmd)?);

    let vmax = model.params.vmax;
    let speed = if rotating {
        model.speed.reset();
        0.0
    } else {
        model.speed.step(speed_sp.min(vmax))?.clamp(-vmax, vmax)
    };
    model.rotating = rotating;
    model.last_speed = speed;

    let heading = Vec2::from_angle(yaw);
    let vel = heading * speed;
    let mut next = state.clone();
    next.pos = state.pos + vel * dt;
    next.vel = vel;
    next.yaw = yaw;
    if !next.is_finite() {
        return Err(Error::NonFinite("UGV state".into()));
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::VehicleKind;
    use std::f64::consts::PI;

    fn robot(yaw: f64) -> (RobotState, UgvModel) {
        let s = RobotState::new(VehicleKind::Ugv, Vec2::ZERO, yaw, 0.46).unwrap();
        let m = UgvModel::new(yaw, UgvParams::with_vmax(0.1), 0.01).unwrap();
        (s, m)
    }

    #[test]
    fn zero_command_from_rest_is_static() {
        let (mut s, mut m) = robot(0.3);
        let start = s.clone();
        for _ in 0..500 {
            s = ugv_tick(&s, &mut m, Vec2::ZERO, 0.01).unwrap();
        }
        assert_eq!(s, start);
    }

    #[test]
    fn command_behind_rotates_in_place() {
        let (s, mut m) = robot(0.0);
        let n = ugv_tick(&s, &mut m, Vec2::new(-0.05, 0.0), 0.01).unwrap();
        assert!(m.rotating());
        assert_eq!(n.pos, Vec2::ZERO);
        assert_eq!(m.last_speed(), 0.0);
    }

    #[test]
    fn heading_converges_and_speed_saturates() {
        let (mut s, mut m) = robot(0.0);
        let cmd = Vec2::new(-0.3, 0.4);
        for _ in 0..3000 {
            s = ugv_tick(&s, &mut m, cmd, 0.01).unwrap();
            assert!(m.last_speed().abs() <= 0.1 + 1e-15);
        }
        let err = angle_diff(cmd.angle(), s.yaw).abs();
        assert!(err < 2f64.to_radians(), "heading error {err}");
        assert!((s.vel.angle() - cmd.angle()).abs() < 2f64.to_radians());
        assert!(s.yaw > -PI && s.yaw <= PI);
    }

    #[test]
    fn non_finite_command_rejected() {
        let (s, mut m) = robot(0.0);
        assert!(ugv_tick(&s, &mut m, Vec2::new(f64::NAN, 0.0), 0.01).is_err());
    }
}
