//! Scenario configuration, the swarm engine and its trace output.

pub mod config;
pub mod trace;
pub mod world;

use serde::Serialize;

pub use config::{preset, Scenario, PRESET_NAMES, SCENARIO_SCHEMA};
pub use trace::{
    CsvSink, MemorySink, NullSink, Phase, TraceHasher, TraceRecord, TraceSink, TRACE_SCHEMA,
};
pub use world::{init_random, Event, EventKind, Milestones, Stats, World};

use crate::error::Result;

pub const SUMMARY_SCHEMA: &str = "ni-swarm/summary/v1";

/// Result of one run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema: String,
    pub scenario: String,
    pub seed: u64,
    pub dt: f64,
    pub ticks: u64,
    pub final_time: f64,
    pub final_phase: Phase,
    pub trace_sha256: String,
    pub milestones: Milestones,
    pub stats: Stats,
    pub rmse: Vec<f64>,
    pub final_slot_errors: Vec<f64>,
    /// Final slot error within the mission's slot tolerance, per robot.
    pub targets_reached: Vec<bool>,
    pub final_positions: Vec<(f64, f64)>,
    pub events: Vec<Event>,
    /// Safety conditions that failed; `--strict` turns these into an error.
    pub violations: Vec<String>,
}

/// Runs the world to its configured duration (or arrival when asked),
/// feeding every record to `sink`.
pub fn run(world: &mut World, sink: &mut dyn TraceSink) -> Result<RunSummary> {
    let ticks = (world.scenario.duration / world.scenario.dt).round() as u64;
    let mut hasher = TraceHasher::new();
    let first = world.record();
    hasher.update(&first);
    sink.record(&first)?;
    while world.clock < ticks {
        let rec = world.tick();
        hasher.update(&rec);
        sink.record(&rec)?;
        if world.scenario.stop_when_done && world.phase == Phase::Arrived {
            break;
        }
    }
    sink.finish()?;
    Ok(summarize(world, hasher.hex()))
}

fn summarize(world: &World, hash: String) -> RunSummary {
    let s = &world.stats;
    let mut violations = Vec::new();
    if let Some(r) = s.min_pair_ratio_enabled {
        if r < 0.5 {
            violations.push(format!("robots came within {r:.3} of the summed radii"));
        }
    }
    if s.obstacle_entry_ticks > 0 {
        violations.push(format!(
            "{} ticks with a robot inside an obstacle",
            s.obstacle_entry_ticks
        ));
    }
    if s.max_command_ratio > 1.0 + 1e-9 {
        violations.push(format!(
            "command exceeded the speed cap by {:.3}",
            s.max_command_ratio
        ));
    }
    if s.nonfinite_records > 0 {
        violations.push(format!("{} non-finite records", s.nonfinite_records));
    }
    if s.repulsion_mismatches > 0 {
        violations.push(format!(
            "{} repulsion force/overlap mismatches",
            s.repulsion_mismatches
        ));
    }
    if s.vehicle_faults > 0 {
        violations.push(format!("{} vehicle faults", s.vehicle_faults));
    }
    RunSummary {
        schema: SUMMARY_SCHEMA.into(),
        scenario: world.scenario.name.clone(),
        seed: world.scenario.seed,
        dt: world.scenario.dt,
        ticks: world.clock,
        final_time: world.time(),
        final_phase: world.phase,
        trace_sha256: hash,
        milestones: world.milestones.clone(),
        stats: s.clone(),
        rmse: s.rmse(),
        final_slot_errors: world.slot_errors(),
        targets_reached: world
            .slot_errors()
            .iter()
            .map(|&e| e <= world.scenario.mission.slot_tolerance)
            .collect(),
        final_positions: world.positions().iter().map(|p| (p.x, p.y)).collect(),
        events: world.events.clone(),
        violations,
    }
}
