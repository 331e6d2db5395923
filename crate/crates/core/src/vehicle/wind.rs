use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

/// How the wind velocity reaches a UAV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindCoupling {
    /// Added to the velocity setpoint after a first-order washout
    /// `tau s / (tau s + 1)`: the airframe's own velocity loop rejects a
    /// steady push, so only the change in wind reaches position.
    Washout { tau: f64 },
    /// Added to the velocity setpoint unfiltered.
    Direct,
}

impl Default for WindCoupling {
    fn default() -> Self {
        WindCoupling::Washout { tau: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindModel {
    /// Bias velocity (m/s) before rotation by `direction`.
    pub bias: Vec2,
    /// Standard deviation of the per-axis Gaussian gust (m/s).
    pub gust_std: f64,
    /// Start time (s).
    pub onset: f64,
    pub direction: f64,
    #[serde(default)]
    pub coupling: WindCoupling,
}

impl WindModel {
    pub fn calm() -> Self {
        Self {
            bias: Vec2::ZERO,
            gust_std: 0.0,
            onset: 0.0,
            direction: 0.0,
            coupling: WindCoupling::default(),
        }
    }

    /// 0.5 m/s along the positive diagonal with 0.1 m/s gusts.
    pub fn diagonal_default(onset: f64) -> Self {
        Self {
            bias: Vec2::new(0.5, 0.0),
            gust_std: 0.1,
            onset,
            direction: std::f64::consts::FRAC_PI_4,
            coupling: WindCoupling::default(),
        }
    }

    pub fn is_calm(&self) -> bool {
        self.bias == Vec2::ZERO && self.gust_std == 0.0
    }

    /// Disturbance velocity at time `t`.
    pub fn sample<R: Rng>(&self, t: f64, rng: &mut R) -> Vec2 {
        if t < self.onset {
            return Vec2::ZERO;
        }
        let mut w = self.bias.rotated(self.direction);
        if self.gust_std > 0.0 {
            let n = Normal::new(0.0, self.gust_std).expect("finite std");
            w += Vec2::new(n.sample(rng), n.sample(rng));
        }
        w
    }
}

impl Default for WindModel {
    fn default() -> Self {
        Self::calm()
    }
}

/// `v` plus the wind velocity at time `t`.
pub fn apply_wind<R: Rng>(v: Vec2, wind: &WindModel, t: f64, rng: &mut R) -> Vec2 {
    v + wind.sample(t, rng)
}
