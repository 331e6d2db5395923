use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use ni_swarm::control::{resolve_model, ControllerPreset};
use ni_swarm::experiments::{circle_tracking, hover_disturbance, step_response, HoverSetup};
use ni_swarm::lti::RationalTF;
use ni_swarm::vehicle::uav_plants;

use crate::{read_file, write_json, CliError, CliResult, EXIT_OK};

pub const COMPARE_SCHEMA: &str = "ni-swarm/compare/v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSetup {
    pub reference: f64,
    pub dt: f64,
    pub duration: f64,
}

impl Default for StepSetup {
    fn default() -> Self {
        Self {
            reference: 0.5,
            dt: 0.01,
            duration: 300.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleSetup {
    pub radius: f64,
    /// Angular rate (rad/s).
    pub omega: f64,
    /// Time spent holding the start point first (s).
    pub settle: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Default for CircleSetup {
    fn default() -> Self {
        Self {
            radius: 0.8,
            omega: 2.0 * std::f64::consts::PI / 28.0,
            settle: 30.0,
            duration: 56.0,
            dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub schema: String,
    #[serde(default)]
    pub step: StepSetup,
    #[serde(default)]
    pub hover: HoverSetup,
    #[serde(default)]
    pub circle: CircleSetup,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            schema: COMPARE_SCHEMA.into(),
            step: StepSetup::default(),
            hover: HoverSetup::default(),
            circle: CircleSetup::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Step,
    Hover,
    Circle,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::Step, Experiment::Hover, Experiment::Circle];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Step => "step",
            Experiment::Hover => "hover",
            Experiment::Circle => "circle",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CompareArgs {
    pub controllers: [String; 2],
    pub experiments: Vec<Experiment>,
    pub config: Option<PathBuf>,
    pub dump_config: bool,
    pub json: bool,
}

/// One outer position controller per axis.
#[derive(Debug, Clone)]
pub struct AxisPair {
    pub name: String,
    pub x: RationalTF,
    pub y: RationalTF,
}

/// `sni`, `pidf` and `pi` name the usual pairs; anything else is a model
/// (preset or expression) used on both axes.
pub fn resolve_pair(name: &str) -> CliResult<AxisPair> {
    let both = |c: ControllerPreset| (c.tf(), c.tf());
    let (x, y) = match name {
        "sni" => both(ControllerPreset::SniSim),
        "pidf" => (ControllerPreset::PidfX.tf(), ControllerPreset::PidfY.tf()),
        "pi" => both(ControllerPreset::PiExp),
        other => {
            let (tf, _) =
                resolve_model(other).map_err(|e| CliError::Input(format!("{other}: {e}")))?;
            (tf.clone(), tf)
        }
    };
    Ok(AxisPair {
        name: name.to_string(),
        x,
        y,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub controller: String,
    pub experiment: &'static str,
    pub axis: &'static str,
    pub po: Option<f64>,
    pub rmse: Option<f64>,
    pub time_to_reference: Option<f64>,
    pub peak_deviation: Option<f64>,
    pub recovery_time: Option<f64>,
}

impl Row {
    fn new(controller: &str, experiment: Experiment, axis: &'static str) -> Self {
        Self {
            controller: controller.to_string(),
            experiment: experiment.name(),
            axis,
            po: None,
            rmse: None,
            time_to_reference: None,
            peak_deviation: None,
            recovery_time: None,
        }
    }
}

pub fn load_config(path: Option<&PathBuf>) -> CliResult<CompareConfig> {
    let Some(p) = path else {
        return Ok(CompareConfig::default());
    };
    let c: CompareConfig = serde_json::from_str(&read_file(p)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    if c.schema != COMPARE_SCHEMA {
        return Err(CliError::Input(format!(
            "schema '{}' not supported",
            c.schema
        )));
    }
    Ok(c)
}

pub fn rows(pair: &AxisPair, exps: &[Experiment], cfg: &CompareConfig) -> CliResult<Vec<Row>> {
    let (px, py) = uav_plants();
    let mut out = Vec::new();
    for &e in exps {
        match e {
            Experiment::Step => {
                for (axis, c, p) in [("x", &pair.x, &px), ("y", &pair.y, &py)] {
                    let (_, m) =
                        step_response(c, p, cfg.step.reference, cfg.step.dt, cfg.step.duration)?;
                    let mut r = Row::new(&pair.name, e, axis);
                    r.po = Some(m.po);
                    r.rmse = Some(m.rmse);
                    r.time_to_reference = m.time_to_reference;
                    out.push(r);
                }
            }
            Experiment::Hover => {
                for (axis, c, p) in [("x", &pair.x, &px), ("y", &pair.y, &py)] {
                    let (_, m) = hover_disturbance(c, p, &cfg.hover)?;
                    let mut r = Row::new(&pair.name, e, axis);
                    r.peak_deviation = Some(m.peak_deviation);
                    r.recovery_time = m.recovery_time;
                    out.push(r);
                }
            }
            Experiment::Circle => {
                let c = &cfg.circle;
                // A pair with distinct axes runs each axis with its own controller.
                let mx = circle_tracking(
                    &pair.x, &px, &py, c.radius, c.omega, c.settle, c.duration, c.dt, None,
                )?;
                let my = circle_tracking(
                    &pair.y, &px, &py, c.radius, c.omega, c.settle, c.duration, c.dt, None,
                )?;
                for (axis, v) in [("x", mx.rmse_x), ("y", my.rmse_y)] {
                    let mut r = Row::new(&pair.name, e, axis);
                    r.rmse = Some(v);
                    out.push(r);
                }
            }
        }
    }
    Ok(out)
}

fn cell(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.4}"))
}

pub fn run(args: &CompareArgs, out: &mut dyn Write) -> CliResult<i32> {
    let cfg = load_config(args.config.as_ref())?;
    if args.dump_config {
        write_json(out, &cfg, true)?;
        return Ok(EXIT_OK);
    }
    let exps = if args.experiments.is_empty() {
        Experiment::ALL.to_vec()
    } else {
        args.experiments.clone()
    };
    let mut all = Vec::new();
    for name in &args.controllers {
        all.extend(rows(&resolve_pair(name)?, &exps, &cfg)?);
    }
    if args.json {
        for r in &all {
            write_json(
                out,
                &serde_json::json!({ "schema": COMPARE_SCHEMA, "row": r }),
                false,
            )?;
        }
    } else {
        writeln!(
            out,
            "{:<14} {:<7} {:<4} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "controller", "exp", "axis", "po_%", "rmse", "t_ref_s", "peak_m", "recov_s"
        )?;
        for r in &all {
            writeln!(
                out,
                "{:<14} {:<7} {:<4} {:>9} {:>9} {:>9} {:>9} {:>9}",
                r.controller,
                r.experiment,
                r.axis,
                cell(r.po),
                cell(r.rmse),
                cell(r.time_to_reference),
                cell(r.peak_deviation),
                cell(r.recovery_time)
            )?;
        }
    }
    Ok(EXIT_OK)
}
