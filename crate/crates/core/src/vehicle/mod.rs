//! Identified vehicle models, command conversion and pose integration.

mod uav;
mod ugv;
mod wind;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{wrap_angle, Vec2};
use crate::lti::{poly, RationalTF};

pub use uav::{uav_tick, UavModel};
pub use ugv::{ugv_tick, UgvModel, UgvParams, CORNER_THRESHOLD};
pub use wind::{apply_wind, WindCoupling, WindModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleKind {
    Uav,
    Ugv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotState {
    pub pos: Vec2,
    pub vel: Vec2,
    /// Heading in `(-pi, pi]`.
    pub yaw: f64,
    /// Role number, 1 for the leader.
    pub id: usize,
    pub radius: f64,
    pub kind: VehicleKind,
}

impl RobotState {
    pub fn new(kind: VehicleKind, pos: Vec2, yaw: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !pos.is_finite() || !yaw.is_finite() {
            return Err(Error::NonFinite("initial pose".into()));
        }
        Ok(Self {
            pos,
            vel: Vec2::ZERO,
            yaw: wrap_angle(yaw),
            id: 0,
            radius,
            kind,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite() && self.yaw.is_finite()
    }
}

/// UAV velocity-setpoint to position models for the x and y axes.
pub fn uav_plants() -> (RationalTF, RationalTF) {
    (
        RationalTF::new(&[3.31, 195.26], &[1.0, 174.66, 3.12]).expect("valid constant model"),
        RationalTF::new(&[3.31, 26.02], &[1.0, 25.71, 0.18]).expect("valid constant model"),
    )
}

/// UGV speed-command to distance and yaw-rate-command to yaw models.
pub fn ugv_plants() -> (RationalTF, RationalTF) {
    (
        RationalTF::new(
            &[-0.15, 112.9, 4320.5, 1_847_912.3],
            &[1.0, 186.9, 58740.0, 1_969_445.0, 39036.5],
        )
        .expect("valid constant model"),
        RationalTF::new(
            &[17.25, -1018.48, 65838.57],
            &[1.0, 1401.1, 560_049.64, 68857.54],
        )
        .expect("valid constant model"),
    )
}

/// Speed response used to move a UGV: the speed-to-distance model with its
/// slow real pole divided out and the DC gain normalized to 1, so a held
/// speed command produces that ground speed.
pub fn ugv_speed_response(speed_plant: &RationalTF) -> Result<RationalTF> {
    let slow = speed_plant
        .poles()
        .into_iter()
        .filter(|p| p.im == 0.0 && p.re < 0.0)
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .ok_or_else(|| Error::InvalidTf("speed model has no stable real pole".into()))?;
    let (fast, _rem) = poly::deflate(speed_plant.den(), slow.re);
    let num = speed_plant.num();
    let n0 = poly::constant(num);
    let d0 = poly::constant(&fast);
    if n0 == 0.0 {
        return Err(Error::InvalidTf("speed model has zero DC numerator".into()));
    }
    RationalTF::new(&poly::scale(num, d0 / n0), &fast)
}

/// Converts a planar velocity command to a heading setpoint and a scalar
/// speed. The zero vector keeps the previous heading.
pub fn yaw_speed_from_velocity(v: Vec2, prev_yaw: f64) -> (f64, f64) {
    let speed = v.norm();
    if speed == 0.0 {
        (prev_yaw, 0.0)
    } else {
        (v.y.atan2(v.x), speed)
    }
}
