use rand::Rng;

use super::{uav_plants, RobotState, WindCoupling, WindModel};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::lti::{DiscreteLTI, RationalTF};

/// Per-axis identified velocity-setpoint to position loops of a UAV, plus
/// the wind coupling filters. Plant outputs are displacements from `origin`.
#[derive(Debug, Clone)]
pub struct UavModel {
    px: DiscreteLTI,
    py: DiscreteLTI,
    wx: Option<DiscreteLTI>,
    wy: Option<DiscreteLTI>,
    origin: Vec2,
}

impl UavModel {
    pub fn new(origin: Vec2, coupling: WindCoupling, dt: f64) -> Result<Self> {
        let (x, y) = uav_plants();
        Self::with_plants(&x, &y, origin, coupling, dt)
    }

    pub fn with_plants(
        x: &RationalTF,
        y: &RationalTF,
        origin: Vec2,
        coupling: WindCoupling,
        dt: f64,
    ) -> Result<Self> {
        let washout = match coupling {
            WindCoupling::Washout { tau } => {
                if !(tau > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "washout tau must be positive, got {tau}"
                    )));
                }
                Some(RationalTF::new(&[tau, 0.0], &[tau, 1.0])?)
            }
            WindCoupling::Direct => None,
        };
        let filt =
            |tf: &Option<RationalTF>| tf.as_ref().map(|t| DiscreteLTI::new(t, dt)).transpose();
        Ok(Self {
            px: DiscreteLTI::new(x, dt)?,
            py: DiscreteLTI::new(y, dt)?,
            wx: filt(&washout)?,
            wy: filt(&washout)?,
            origin,
        })
    }

    pub fn dt(&self) -> f64 {
        self.px.dt()
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }
}

/// One step of a UAV: wind enters at the velocity setpoint (through the
/// configured coupling), both axis models advance, and the pose follows.
pub fn uav_tick<R: Rng>(
    state: &RobotState,
    model: &mut UavModel,
    vel_sp: Vec2,
    wind: &WindModel,
    t: f64,
    dt: f64,
    rng: &mut R,
) -> Result<RobotState> {
    if !vel_sp.is_finite() {
        return Err(Error::NonFinite(format!("velocity setpoint {vel_sp:?}")));
    }
    if (dt - model.dt()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "tick dt {dt} differs from model dt {}",
            model.dt()
        )));
    }
    let w = wind.sample(t, rng);
    let (wx, wy) = match (&mut model.wx, &mut model.wy) {
        (Some(fx), Some(fy)) => (fx.step(w.x)?, fy.step(w.y)?),
        _ => (w.x, w.y),
    };
    let dx = model.px.step(vel_sp.x + wx)?;
    let dy = model.py.step(vel_sp.y + wy)?;
    let pos = model.origin + Vec2::new(dx, dy);
    let mut next = state.clone();
    next.vel = (pos - state.pos) * (1.0 / dt);
    next.pos = pos;
    if !next.is_finite() {
        return Err(Error::NonFinite("UAV state".into()));
    }
    Ok(next)
}
