use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lti::{DcGain, RationalTF};
use crate::ni::interconnect_stable;
use crate::vehicle::{uav_plants, ugv_plants};

/// What a named model is claimed to be, used by the checker to decide
/// whether a computed classification matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Sni,
    /// `-P(s)` is SNI: negative-gain controller for a plus-sign junction.
    NegatedSni,
    /// `-P(s)` is NI on the free-body (origin pole) path.
    NegatedNi,
    Unchecked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantPreset {
    UavX,
    UavY,
    UgvSpeed,
    UgvYaw,
    Repulsion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerPreset {
    SniSim,
    SniExp,
    PidSim,
    PidExp,
    PidfX,
    PidfY,
    PiExp,
}

/// Repulsion stiffness and mass of the default gauntlet scenario.
pub const DEFAULT_KR: f64 = -0.1;
pub const DEFAULT_MASS: f64 = 1.0;

pub fn repulsion_plant(k_r: f64, mass: f64) -> Result<RationalTF> {
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass must be positive, got {mass}"
        )));
    }
    RationalTF::new(&[k_r], &[mass, 0.0])
}

impl PlantPreset {
    pub const ALL: [PlantPreset; 5] = [
        PlantPreset::UavX,
        PlantPreset::UavY,
        PlantPreset::UgvSpeed,
        PlantPreset::UgvYaw,
        PlantPreset::Repulsion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlantPreset::UavX => "uav-x",
            PlantPreset::UavY => "uav-y",
            PlantPreset::UgvSpeed => "ugv-speed",
            PlantPreset::UgvYaw => "ugv-yaw",
            PlantPreset::Repulsion => "repulsion",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PlantPreset::UavX => "identified UAV velocity-setpoint to x-position loop",
            PlantPreset::UavY => "identified UAV velocity-setpoint to y-position loop",
            PlantPreset::UgvSpeed => "identified UGV speed-command to travelled-distance model",
            PlantPreset::UgvYaw => "identified UGV yaw-rate-command to yaw model",
            PlantPreset::Repulsion => {
                "free-body repulsion plant k_r/(m s), k_r = -0.1 N/m, m = 1 kg"
            }
        }
    }

    pub fn tf(self) -> RationalTF {
        match self {
            PlantPreset::UavX => uav_plants().0,
            PlantPreset::UavY => uav_plants().1,
            PlantPreset::UgvSpeed => ugv_plants().0,
            PlantPreset::UgvYaw => ugv_plants().1,
            PlantPreset::Repulsion => {
                repulsion_plant(DEFAULT_KR, DEFAULT_MASS).expect("positive mass")
            }
        }
    }

    pub fn expectation(self) -> Expectation {
        match self {
            PlantPreset::Repulsion => Expectation::NegatedNi,
            _ => Expectation::Sni,
        }
    }
}

impl ControllerPreset {
    pub const ALL: [ControllerPreset; 7] = [
        ControllerPreset::SniSim,
        ControllerPreset::SniExp,
        ControllerPreset::PidSim,
        ControllerPreset::PidExp,
        ControllerPreset::PidfX,
        ControllerPreset::PidfY,
        ControllerPreset::PiExp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerPreset::SniSim => "sni-sim",
            ControllerPreset::SniExp => "sni-exp",
            ControllerPreset::PidSim => "pid-sim",
            ControllerPreset::PidExp => "pid-exp",
            ControllerPreset::PidfX => "pidf-x",
            ControllerPreset::PidfY => "pidf-y",
            ControllerPreset::PiExp => "pi-exp",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ControllerPreset::SniSim => "first-order position controller used in simulation",
            ControllerPreset::SniExp => "first-order position controller tuned on hardware",
            ControllerPreset::PidSim => {
                "inner velocity PID used in simulation (improper, not simulated)"
            }
            ControllerPreset::PidExp => {
                "inner velocity PID tuned on hardware (improper, not simulated)"
            }
            ControllerPreset::PidfX => "filtered PID position controller, x axis",
            ControllerPreset::PidfY => "filtered PID position controller, y axis",
            ControllerPreset::PiExp => "PI position controller tuned on hardware",
        }
    }

    pub fn tf(self) -> RationalTF {
        let (num, den): (&[f64], &[f64]) = match self {
            ControllerPreset::SniSim => (&[-1.0], &[1.0, 1.0]),
            ControllerPreset::SniExp => (&[-0.35295], &[1.0, 1.0]),
            ControllerPreset::PidSim => (&[-0.135, -0.3162, -0.0021], &[1.0, 0.0]),
            ControllerPreset::PidExp => (&[-0.138, -0.3172, -0.0021], &[1.0, 0.0]),
            ControllerPreset::PidfX => (&[-0.028, -0.0031, -0.000064], &[1.0, 0.055, 0.0]),
            ControllerPreset::PidfY => (&[-0.26, -0.0611, -0.002], &[1.0, 0.469, 0.0]),
            ControllerPreset::PiExp => (&[-0.1374, -0.0021], &[1.0, 0.0]),
        };
        RationalTF::new(num, den).expect("valid constant model")
    }

    pub fn expectation(self) -> Expectation {
        match self {
            ControllerPreset::SniSim | ControllerPreset::SniExp => Expectation::NegatedSni,
            _ => Expectation::Unchecked,
        }
    }
}

impl fmt::Display for PlantPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for ControllerPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlantPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown plant preset '{s}'")))
    }
}

impl FromStr for ControllerPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown controller preset '{s}'")))
    }
}

/// A model named by preset (plant or controller) or written out as a
/// transfer-function expression. Presets carry their expectation.
pub fn resolve_model(text: &str) -> Result<(RationalTF, Option<Expectation>)> {
    let t = text.trim();
    if let Ok(p) = t.parse::<PlantPreset>() {
        return Ok((p.tf(), Some(p.expectation())));
    }
    if let Ok(c) = t.parse::<ControllerPreset>() {
        return Ok((c.tf(), Some(c.expectation())));
    }
    Ok((crate::lti::parse_tf(t)?, None))
}

/// Checks `M(0) N(0) < 1` for every shipped pairing of a first-order
/// position controller with a UAV axis model.
pub fn verify_default_pairings() -> Result<()> {
    for plant in [PlantPreset::UavX, PlantPreset::UavY] {
        for ctrl in [ControllerPreset::SniSim, ControllerPreset::SniExp] {
            if !interconnect_stable(&plant.tf(), &ctrl.tf())? {
                let p = plant.tf().dc_gain();
                let c = ctrl.tf().dc_gain();
                return Err(Error::Config(format!(
                    "{plant} with {ctrl} violates the DC-gain bound ({p:?} x {c:?})"
                )));
            }
        }
    }
    let speed = PlantPreset::UgvSpeed.tf();
    if let DcGain::Finite(k) = speed.dc_gain() {
        if k * ControllerPreset::SniSim
            .tf()
            .dc_gain()
            .finite()
            .unwrap_or(0.0)
            >= 1.0
        {
            return Err(Error::Config(
                "UGV speed model violates the DC-gain bound".into(),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in PlantPreset::ALL {
            assert_eq!(p.name().parse::<PlantPreset>().unwrap(), p);
        }
        for c in ControllerPreset::ALL {
            assert_eq!(c.name().parse::<ControllerPreset>().unwrap(), c);
        }
        assert!("nope".parse::<PlantPreset>().is_err());
    }

    #[test]
    fn resolves_names_and_expressions() {
        let (t, e) = resolve_model("sni-exp").unwrap();
        assert_eq!(t, ControllerPreset::SniExp.tf());
        assert_eq!(e, Some(Expectation::NegatedSni));
        let (t, e) = resolve_model(" -1/(s+1) ").unwrap();
        assert_eq!(t, ControllerPreset::SniSim.tf());
        assert_eq!(e, None);
        assert!(resolve_model("uav-z").is_err());
    }

    #[test]
    fn shipped_pairings_pass() {
        verify_default_pairings().unwrap();
    }

    #[test]
    fn improper_presets_are_flagged() {
        assert!(!ControllerPreset::PidSim.tf().is_proper());
        assert!(ControllerPreset::PiExp.tf().is_proper());
        assert!(ControllerPreset::PidfX.tf().is_proper());
    }
}
