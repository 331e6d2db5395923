//! Scenario documents: schema, validation and the shipped presets.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::avoidance::{obstacle_circle, ObstacleCircle, ObstaclePart};
use crate::control::{resolve_model, TaskWeights};
use crate::error::{Error, Result};
use crate::formation::FormationGains;
use crate::geom::Vec2;
use crate::lti::{DcGain, RationalTF};
use crate::roles::FormationSpec;
use crate::vehicle::WindModel;

pub const SCENARIO_SCHEMA: &str = "ni-swarm/scenario/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    /// Free text: where the numbers come from, what the run shows.
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    /// End the run early once the swarm has arrived.
    #[serde(default)]
    pub stop_when_done: bool,
    pub robots: RobotsConfig,
    pub control: ControlConfig,
    pub formation: FormationConfig,
    pub mission: MissionConfig,
    #[serde(default)]
    pub obstacles: Vec<ObstacleConfig>,
    pub sensing: SensingConfig,
    #[serde(default)]
    pub uav: Option<UavConfig>,
    #[serde(default = "WindModel::calm")]
    pub wind: WindModel,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotsConfig {
    pub count: usize,
    /// Safety-circle radius (m).
    pub radius: f64,
    /// Mass used by the repulsion dynamics (kg).
    pub mass: f64,
    pub init: InitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// Positions uniform in `[-half_width, half_width]` per axis.
    Random {
        half_width: f64,
        velocity: InitVelocity,
    },
    Explicit {
        poses: Vec<Pose>,
    },
}

/// Initial velocity draw, `0.002 (u - 350)` in cm/s read literally with
/// `u` uniform on `[0, 1]`, or with `u` uniform on `[0, 700]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitVelocity {
    Literal,
    Spread,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw: f64,
}

/// When robot-robot repulsion is switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepulsionGating {
    Always,
    /// Only while the swarm runs the queue manoeuvre.
    AvoidanceOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub gains: FormationGains,
    #[serde(default)]
    pub weights: TaskWeights,
    /// Repulsion stiffness (N/m), negative under the plus-junction convention.
    pub k_r: f64,
    /// Repulsive force cap (N).
    pub fmax: f64,
    /// Decay time constant of the repulsion velocity once circles separate (s).
    pub accumulator_tau: f64,
    pub repulsion: RepulsionGating,
    #[serde(default = "default_yaw_kp")]
    pub yaw_kp: f64,
    #[serde(default = "default_yaw_ki")]
    pub yaw_ki: f64,
}

fn default_yaw_kp() -> f64 {
    8.0
}

fn default_yaw_ki() -> f64 {
    1.0
}

/// Frame the formation offsets are written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetFrame {
    World,
    /// `+x` along the initial leader-to-destination direction.
    Travel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationConfig {
    pub spec: FormationSpec,
    pub frame: OffsetFrame,
    /// Distance between consecutive robots in the line (m).
    pub line_spacing: f64,
    /// Desired duration of the switch to the line (s).
    pub t_des: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub destination: Vec2,
    /// Slot tolerance for "formed" and "reached" (m).
    #[serde(default = "default_tol")]
    pub slot_tolerance: f64,
    /// How long the tolerance must hold (s).
    #[serde(default = "default_hold")]
    pub hold_time: f64,
    /// Staging point distance before the gap midpoint (m).
    #[serde(default = "default_approach")]
    pub approach_distance: f64,
    /// Where the head of the line stops past the gap (m).
    pub exit_distance: f64,
    /// Radius for reaching the staging point (m).
    #[serde(default = "default_waypoint")]
    pub waypoint_tolerance: f64,
}

fn default_tol() -> f64 {
    0.1
}

fn default_hold() -> f64 {
    2.0
}

fn default_approach() -> f64 {
    1.5
}

fn default_waypoint() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleConfig {
    Circle {
        center: Vec2,
        radius: f64,
    },
    /// One or more sensed parts fused into a covering circle.
    Parts {
        parts: Vec<Vec<Vec2>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingConfig {
    /// Obstacle detection range (m).
    pub fov_range: f64,
    /// Half-angle of the detection cone (rad).
    pub fov_half_angle: f64,
    /// Sensing runs every this many ticks.
    pub rate_divider: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavConfig {
    /// Position controller: preset name or transfer-function expression.
    pub controller: String,
    #[serde(default = "default_plant_x")]
    pub plant_x: String,
    #[serde(default = "default_plant_y")]
    pub plant_y: String,
    pub start: Vec2,
    pub camera_radius: f64,
    #[serde(default)]
    pub noise_std: f64,
}

fn default_plant_x() -> String {
    "uav-x".into()
}

fn default_plant_y() -> String {
    "uav-y".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write every n-th tick to the CSV trace (the hash covers every tick).
    #[serde(default = "default_every")]
    pub csv_every: u64,
    #[serde(default = "default_trace")]
    pub trace_file: String,
    #[serde(default = "default_summary")]
    pub summary_file: String,
}

fn default_every() -> u64 {
    1
}

fn default_trace() -> String {
    "trace.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            csv_every: default_every(),
            trace_file: default_trace(),
            summary_file: default_summary(),
        }
    }
}

/// Resolved UAV models.
#[derive(Debug, Clone)]
pub struct UavModels {
    pub controller: RationalTF,
    pub plant_x: RationalTF,
    pub plant_y: RationalTF,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite")))
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCENARIO_SCHEMA {
            return Err(Error::Config(format!(
                "schema '{}' not supported, expected '{SCENARIO_SCHEMA}'",
                self.schema
            )));
        }
        positive("dt", self.dt)?;
        positive("duration", self.duration)?;
        if self.duration / self.dt > 1e8 {
            return Err(Error::Config("duration / dt exceeds 1e8 ticks".into()));
        }
        let r = &self.robots;
        if r.count == 0 || r.count > 64 {
            return Err(Error::Config(format!(
                "robot count must be 1..=64, got {}",
                r.count
            )));
        }
        positive("robots.radius", r.radius)?;
        positive("robots.mass", r.mass)?;
        match &r.init {
            InitConfig::Random { half_width, .. } => positive("init.half_width", *half_width)?,
            InitConfig::Explicit { poses } => {
                if poses.len() != r.count {
                    return Err(Error::Config(format!(
                        "{} poses for {} robots",
                        poses.len(),
                        r.count
                    )));
                }
                for p in poses {
                    finite("pose", p.x + p.y + p.yaw)?;
                }
            }
        }
        let c = &self.control;
        c.gains.validate()?;
        c.weights.validate()?;
        finite("control.k_r", c.k_r)?;
        positive("control.fmax", c.fmax)?;
        if !(c.accumulator_tau >= 0.0 && c.accumulator_tau.is_finite()) {
            return Err(Error::Config("control.accumulator_tau must be >= 0".into()));
        }
        finite("control.yaw_kp", c.yaw_kp)?;
        finite("control.yaw_ki", c.yaw_ki)?;

        let f = &self.formation;
        f.spec.validate()?;
        if f.spec.len() != r.count {
            return Err(Error::Config(format!(
                "formation has {} slots for {} robots",
                f.spec.len(),
                r.count
            )));
        }
        positive("formation.line_spacing", f.line_spacing)?;
        positive("formation.t_des", f.t_des)?;

        let m = &self.mission;
        if !m.destination.is_finite() {
            return Err(Error::Config("destination must be finite".into()));
        }
        positive("mission.slot_tolerance", m.slot_tolerance)?;
        if !(m.hold_time >= 0.0 && m.hold_time.is_finite()) {
            return Err(Error::Config("mission.hold_time must be >= 0".into()));
        }
        positive("mission.approach_distance", m.approach_distance)?;
        positive("mission.exit_distance", m.exit_distance)?;
        positive("mission.waypoint_tolerance", m.waypoint_tolerance)?;

        let s = &self.sensing;
        positive("sensing.fov_range", s.fov_range)?;
        positive("sensing.fov_half_angle", s.fov_half_angle)?;
        if s.rate_divider == 0 {
            return Err(Error::Config("sensing.rate_divider must be >= 1".into()));
        }
        self.obstacle_circles()?;
        if self.uav.is_some() {
            self.uav_models()?;
        }
        let w = &self.wind;
        if !(w.bias.is_finite()
            && w.gust_std >= 0.0
            && w.gust_std.is_finite()
            && w.onset.is_finite())
        {
            return Err(Error::Config(
                "wind parameters must be finite, gust_std >= 0".into(),
            ));
        }
        finite("wind.direction", w.direction)?;
        if self.output.csv_every == 0 {
            return Err(Error::Config("output.csv_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn obstacle_circles(&self) -> Result<Vec<ObstacleCircle>> {
        self.obstacles
            .iter()
            .map(|o| match o {
                ObstacleConfig::Circle { center, radius } => {
                    if !center.is_finite() {
                        return Err(Error::Config("obstacle center must be finite".into()));
                    }
                    ObstacleCircle::new(*center, *radius).map_err(|e| Error::Config(e.to_string()))
                }
                ObstacleConfig::Parts { parts } => {
                    let parts = parts
                        .iter()
                        .map(|p| ObstaclePart::from_polygon(p))
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| Error::Config(e.to_string()))?;
                    obstacle_circle(&parts, self.sensing.fov_range)
                        .map_err(|e| Error::Config(e.to_string()))
                }
            })
            .collect()
    }

    pub fn uav_models(&self) -> Result<Option<UavModels>> {
        let Some(u) = &self.uav else {
            return Ok(None);
        };
        if !u.start.is_finite() {
            return Err(Error::Config("uav.start must be finite".into()));
        }
        positive("uav.camera_radius", u.camera_radius)?;
        if !(u.noise_std >= 0.0 && u.noise_std.is_finite()) {
            return Err(Error::Config("uav.noise_std must be >= 0".into()));
        }
        let get = |what: &str, text: &str| -> Result<RationalTF> {
            let (tf, _) =
                resolve_model(text).map_err(|e| Error::Config(format!("uav.{what}: {e}")))?;
            if !tf.is_proper() {
                return Err(Error::Config(format!("uav.{what} must be proper")));
            }
            Ok(tf)
        };
        let models = UavModels {
            controller: get("controller", &u.controller)?,
            plant_x: get("plant_x", &u.plant_x)?,
            plant_y: get("plant_y", &u.plant_y)?,
        };
        for p in [&models.plant_x, &models.plant_y] {
            if p.dc_gain() == DcGain::Infinite {
                return Err(Error::Config(
                    "uav plants must have a finite DC gain".into(),
                ));
            }
        }
        Ok(Some(models))
    }
}

fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// V shape of `n` robots in the travel frame: leader at the apex, arms
/// trailing back 0.8 m per row, alternating left and right.
pub fn v_shape(n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let row = k.div_ceil(2) as f64;
            let side = if k % 2 == 1 { 1.0 } else { -1.0 };
            v(-0.8 * row, side * 0.8 * row) + Vec2::ZERO
        })
        .collect()
}

/// Two walls of overlapping circles across the route, leaving one gap at
/// `along` metres from the origin towards `destination`.
pub fn gauntlet_walls(
    destination: Vec2,
    along: f64,
    radius: f64,
    lateral: &[f64],
) -> Vec<ObstacleConfig> {
    let d = destination.normalized().unwrap_or(v(1.0, 0.0));
    let m = d * along;
    let side = v(-d.y, d.x);
    lateral
        .iter()
        .flat_map(|&l| [l, -l])
        .map(|l| ObstacleConfig::Circle {
            center: m + side * l,
            radius,
        })
        .collect()
}

/// Gap midpoint of [`case1_6ugv`].
pub fn case1_gap_midpoint() -> Vec2 {
    v(6.0, 9.0).normalized().expect("nonzero") * 4.0
}

/// Six ground robots cross two obstacle walls through a single gap.
/// Unit-mass repulsion with `k_r = -0.1` N/m capped at 6 N, gains -0.1,
/// 2 cm/s speed cap, 0.46 m safety circles, 0.35 m obstacles; the
/// destination is twice the (3.0, 4.5) m used at desk scale so the walls
/// fit between the start box and the goal.
pub fn case1_6ugv() -> Scenario {
    let destination = v(6.0, 9.0);
    Scenario {
        schema: SCENARIO_SCHEMA.into(),
        name: "case1_6ugv".into(),
        description: "six UGVs: random start, V formation, single-file passage through a wall gap, V again, goal"
            .into(),
        seed: 42,
        dt: 0.01,
        duration: 2400.0,
        stop_when_done: true,
        robots: RobotsConfig {
            count: 6,
            radius: 0.46,
            mass: 1.0,
            init: InitConfig::Random {
                half_width: 1.6,
                velocity: InitVelocity::Literal,
            },
        },
        control: ControlConfig {
            gains: FormationGains {
                kr: -0.1,
                kc: -0.1,
                vmax: 0.02,
                leader_vmax: 0.015,
            },
            weights: TaskWeights::default(),
            k_r: -0.1,
            fmax: 6.0,
            accumulator_tau: 1.0,
            repulsion: RepulsionGating::AvoidanceOnly,
            yaw_kp: default_yaw_kp(),
            yaw_ki: default_yaw_ki(),
        },
        formation: FormationConfig {
            spec: FormationSpec {
                shape_name: "v".into(),
                offsets: v_shape(6),
            },
            frame: OffsetFrame::Travel,
            line_spacing: 1.0,
            t_des: 150.0,
        },
        mission: MissionConfig {
            destination,
            slot_tolerance: default_tol(),
            hold_time: default_hold(),
            approach_distance: default_approach(),
            exit_distance: 6.5,
            waypoint_tolerance: default_waypoint(),
        },
        obstacles: gauntlet_walls(destination, 4.0, 0.35, &[0.6, 1.25, 1.9, 2.55]),
        sensing: SensingConfig {
            fov_range: 3.0,
            fov_half_angle: FRAC_PI_4,
            rate_divider: 10,
        },
        uav: Some(UavConfig {
            controller: "sni-sim".into(),
            plant_x: default_plant_x(),
            plant_y: default_plant_y(),
            start: v(0.0, 0.0),
            camera_radius: 8.0,
            noise_std: 0.0,
        }),
        wind: WindModel::calm(),
        output: OutputConfig {
            csv_every: 10,
            ..OutputConfig::default()
        },
    }
}

fn three_ugv(
    name: &str,
    description: &str,
    offsets: [Vec2; 2],
    poses: [Pose; 3],
    repulsion: RepulsionGating,
) -> Scenario {
    Scenario {
        schema: SCENARIO_SCHEMA.into(),
        name: name.into(),
        description: description.into(),
        seed: 7,
        dt: 0.01,
        duration: 400.0,
        stop_when_done: true,
        robots: RobotsConfig {
            count: 3,
            radius: 0.9,
            mass: 12.0,
            init: InitConfig::Explicit {
                poses: poses.to_vec(),
            },
        },
        control: ControlConfig {
            // Hardware gains act on millimetres; -0.0028 per mm is -2.8 per m.
            gains: FormationGains {
                kr: -2.8,
                kc: -2.8,
                vmax: 0.12,
                leader_vmax: 0.09,
            },
            weights: TaskWeights::default(),
            k_r: -225.0,
            fmax: 6.0,
            accumulator_tau: 1.0,
            repulsion,
            yaw_kp: default_yaw_kp(),
            yaw_ki: default_yaw_ki(),
        },
        formation: FormationConfig {
            spec: FormationSpec {
                shape_name: "row".into(),
                offsets: vec![Vec2::ZERO, offsets[0], offsets[1]],
            },
            frame: OffsetFrame::World,
            line_spacing: 2.0,
            t_des: 30.0,
        },
        mission: MissionConfig {
            destination: v(-1.0, 1.7),
            slot_tolerance: default_tol(),
            hold_time: default_hold(),
            approach_distance: default_approach(),
            exit_distance: 5.0,
            waypoint_tolerance: default_waypoint(),
        },
        obstacles: Vec::new(),
        sensing: SensingConfig {
            fov_range: 3.0,
            fov_half_angle: FRAC_PI_4,
            rate_divider: 10,
        },
        uav: Some(UavConfig {
            controller: "sni-exp".into(),
            plant_x: default_plant_x(),
            plant_y: default_plant_y(),
            start: v(0.0, 0.0),
            camera_radius: 8.0,
            noise_std: 0.0,
        }),
        wind: WindModel::diagonal_default(0.0),
        output: OutputConfig::default(),
    }
}

fn pose(x: f64, y: f64, yaw: f64) -> Pose {
    Pose { x, y, yaw }
}

/// Three ground robots with 12 kg, 0.9 m safety circles, 12 cm/s cap and
/// followers one metre either side of the leader at (-1.0, 1.7) m.
pub fn exp_3ugv() -> Scenario {
    three_ugv(
        "exp_3ugv",
        "three UGVs form a row around the goal; hardware-scale gains",
        [v(1.0, 0.0), v(-1.0, 0.0)],
        [
            pose(0.5, -1.5, 1.57),
            pose(-1.5, -1.0, 1.57),
            pose(1.5, -0.5, 1.57),
        ],
        RepulsionGating::AvoidanceOnly,
    )
}

/// Followers start on the wrong side of the leader, so their paths cross.
pub fn crossing_a() -> Scenario {
    three_ugv(
        "crossing_a",
        "followers swap sides while assembling; repulsion always on",
        [v(2.0, 0.0), v(-2.0, 0.0)],
        [
            pose(-1.0, 0.5, 1.57),
            pose(-2.2, -1.6, 0.0),
            pose(0.6, -2.2, PI),
        ],
        RepulsionGating::Always,
    )
}

/// Head-on: the followers start on a line through both of their slots.
pub fn crossing_b() -> Scenario {
    three_ugv(
        "crossing_b",
        "followers drive head-on past each other; repulsion always on",
        [v(2.0, 0.0), v(-2.0, 0.0)],
        [
            pose(-1.0, 3.5, -1.57),
            pose(-3.4, 0.0, 0.0),
            pose(1.6, 0.0, PI),
        ],
        RepulsionGating::Always,
    )
}

/// The leader drives through the followers' row on its way to the goal.
pub fn crossing_c() -> Scenario {
    three_ugv(
        "crossing_c",
        "leader crosses between the followers; repulsion always on",
        [v(2.0, 0.0), v(-2.0, 0.0)],
        [
            pose(-1.0, -1.2, 1.57),
            pose(-2.2, -2.2, 0.0),
            pose(0.4, -3.2, PI),
        ],
        RepulsionGating::Always,
    )
}

pub const PRESET_NAMES: [&str; 5] = [
    "case1_6ugv",
    "exp_3ugv",
    "crossing_a",
    "crossing_b",
    "crossing_c",
];

pub fn preset(name: &str) -> Option<Scenario> {
    Some(match name.trim_end_matches(".json") {
        "case1_6ugv" => case1_6ugv(),
        "exp_3ugv" => exp_3ugv(),
        "crossing_a" => crossing_a(),
        "crossing_b" => crossing_b(),
        "crossing_c" => crossing_c(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESET_NAMES {
            let s = preset(name).unwrap();
            s.validate().unwrap();
            let back = Scenario::from_json(&s.to_json()).unwrap();
            assert_eq!(back, s, "{name}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut j: serde_json::Value = serde_json::from_str(&exp_3ugv().to_json()).unwrap();
        j["robots"]["colour"] = "red".into();
        assert!(Scenario::from_json(&j.to_string()).is_err());
    }

    #[test]
    fn bad_values_rejected() {
        let mut s = exp_3ugv();
        s.dt = 0.0;
        assert!(s.validate().is_err());
        let mut s = exp_3ugv();
        s.schema = "other/v9".into();
        assert!(s.validate().is_err());
        let mut s = exp_3ugv();
        s.uav.as_mut().unwrap().controller = "pid-sim".into();
        assert!(s.validate().is_err());
        let mut s = exp_3ugv();
        s.robots.count = 4;
        assert!(s.validate().is_err());
    }

    #[test]
    fn gauntlet_geometry() {
        let s = case1_6ugv();
        let c = s.obstacle_circles().unwrap();
        assert_eq!(c.len(), 8);
        let m = case1_gap_midpoint();
        let mut d: Vec<f64> = c.iter().map(|o| o.center.dist(m)).collect();
        d.sort_by(f64::total_cmp);
        assert!((d[0] - 0.6).abs() < 1e-12 && (d[1] - 0.6).abs() < 1e-12);
        // Gap narrower than a robot, wide enough for a centre line.
        assert!(1.2 - 0.7 < 2.0 * s.robots.radius);
    }
}
