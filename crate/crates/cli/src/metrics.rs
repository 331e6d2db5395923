use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use serde::Serialize;

use ni_swarm::sim::trace::{read_trace, RobotRow};
use ni_swarm::vehicle::VehicleKind;

use crate::{write_json, CliError, CliResult, EXIT_OK};

pub const METRICS_SCHEMA: &str = "ni-swarm/metrics/v1";

#[derive(Debug, Clone, Default)]
pub struct MetricsArgs {
    pub trace: PathBuf,
    pub pretty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotMetrics {
    pub robot: usize,
    pub kind: VehicleKind,
    pub samples: usize,
    pub path_length: f64,
    pub max_command: f64,
    pub final_x: f64,
    pub final_y: f64,
    /// Distance to its target at the last sample.
    pub final_target_error: f64,
    pub queue_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMetrics {
    pub schema: &'static str,
    pub samples: usize,
    pub first_t: f64,
    pub last_t: f64,
    /// Smallest centre distance between two ground robots at a shared sample.
    pub min_pair_distance: Option<f64>,
    pub max_overlap: f64,
    pub robots: Vec<RobotMetrics>,
}

pub fn compute(rows: &[RobotRow]) -> CliResult<TraceMetrics> {
    if rows.is_empty() {
        return Err(CliError::Input("trace has no rows".into()));
    }
    let mut per: BTreeMap<usize, RobotMetrics> = BTreeMap::new();
    let mut last_pos: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    let mut by_tick: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    let mut max_overlap: f64 = 0.0;
    for r in rows {
        let m = per.entry(r.robot).or_insert(RobotMetrics {
            robot: r.robot,
            kind: r.kind,
            samples: 0,
            path_length: 0.0,
            max_command: 0.0,
            final_x: r.x,
            final_y: r.y,
            final_target_error: 0.0,
            queue_samples: 0,
        });
        if let Some((px, py)) = last_pos.insert(r.robot, (r.x, r.y)) {
            m.path_length += (r.x - px).hypot(r.y - py);
        }
        m.samples += 1;
        m.max_command = m.max_command.max(r.cmd_x.hypot(r.cmd_y));
        m.final_x = r.x;
        m.final_y = r.y;
        m.final_target_error = (r.x - r.target_x).hypot(r.y - r.target_y);
        m.queue_samples += r.queue as usize;
        max_overlap = max_overlap.max(r.overlap);
        if r.kind == VehicleKind::Ugv {
            by_tick.entry(r.tick).or_default().push((r.x, r.y));
        }
    }
    let mut min_pair: Option<f64> = None;
    for pts in by_tick.values() {
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                let d = (a.0 - b.0).hypot(a.1 - b.1);
                min_pair = Some(min_pair.map_or(d, |m| m.min(d)));
            }
        }
    }
    Ok(TraceMetrics {
        schema: METRICS_SCHEMA,
        samples: by_tick.len(),
        first_t: rows[0].t,
        last_t: rows[rows.len() - 1].t,
        min_pair_distance: min_pair,
        max_overlap,
        robots: per.into_values().collect(),
    })
}

pub fn run(args: &MetricsArgs, out: &mut dyn Write) -> CliResult<i32> {
    let f = File::open(&args.trace)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.trace.display())))?;
    let rows = read_trace(BufReader::new(f))?;
    write_json(out, &compute(&rows)?, args.pretty)?;
    Ok(EXIT_OK)
}
