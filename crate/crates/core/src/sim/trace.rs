//! Per-tick trace records, the CSV format and the run hash.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::vehicle::VehicleKind;

pub const TRACE_SCHEMA: &str = "ni-swarm/trace/v1";

/// Mission phase of the swarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Leader holds while followers take their slots.
    Assemble,
    /// Formation moves towards the staging point or the destination.
    Travel,
    /// Single-file passage through a gap.
    Queue,
    /// Original roles restored; followers retake their slots.
    Reform,
    Arrived,
}

impl Phase {
    fn code(self) -> u8 {
        self as u8
    }
}

/// Where a robot's peer measurement came from this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    /// Leader or UAV: no peer measurement needed.
    None,
    Direct,
    Uav,
    Lost,
}

/// One CSV row: a robot (or the UAV) at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRow {
    pub tick: u64,
    pub t: f64,
    pub phase: Phase,
    pub robot: usize,
    pub kind: VehicleKind,
    /// Role number; 0 for the UAV.
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
    pub cmd_x: f64,
    pub cmd_y: f64,
    pub target_x: f64,
    pub target_y: f64,
    /// Largest circle overlap with any other robot (m).
    pub overlap: f64,
    pub force_x: f64,
    pub force_y: f64,
    pub queue: bool,
    pub source: SourceTag,
}

impl RobotRow {
    pub fn floats(&self) -> [f64; 13] {
        [
            self.t,
            self.x,
            self.y,
            self.yaw,
            self.vx,
            self.vy,
            self.cmd_x,
            self.cmd_y,
            self.target_x,
            self.target_y,
            self.overlap,
            self.force_x,
            self.force_y,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.floats().iter().all(|v| v.is_finite())
    }
}

/// Everything recorded for one tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub tick: u64,
    pub t: f64,
    pub phase: Phase,
    pub rows: Vec<RobotRow>,
}

impl TraceRecord {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.rows.iter().all(RobotRow::is_finite)
    }
}

/// SHA-256 over the bit patterns of every record, independent of how the
/// CSV is decimated or formatted.
#[derive(Debug, Clone, Default)]
pub struct TraceHasher {
    h: Sha256,
}

impl TraceHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, rec: &TraceRecord) {
        self.h.update(rec.tick.to_le_bytes());
        self.h.update([rec.phase.code()]);
        for r in &rec.rows {
            self.h.update((r.robot as u64).to_le_bytes());
            self.h.update((r.id as u64).to_le_bytes());
            for v in r.floats() {
                self.h.update(v.to_bits().to_le_bytes());
            }
            self.h.update([r.queue as u8, r.source as u8, r.kind as u8]);
        }
    }

    pub fn hex(&self) -> String {
        self.h
            .clone()
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Consumer of trace records during a run.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceRecord) -> Result<()> {
        Ok(())
    }
}

/// Keeps every record in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub records: Vec<TraceRecord>,
}

impl TraceSink for MemorySink {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        self.records.push(rec.clone());
        Ok(())
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(format!("trace output: {e}"))
}

/// CSV trace: a `# <schema>` line, a header, then one row per robot for
/// every `every`-th tick.
pub struct CsvSink<W: Write> {
    w: csv::Writer<W>,
    every: u64,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W, every: u64) -> Result<Self> {
        writeln!(out, "# {TRACE_SCHEMA}").map_err(io_err)?;
        Ok(Self {
            w: csv::WriterBuilder::new().has_headers(true).from_writer(out),
            every: every.max(1),
        })
    }

    pub fn into_inner(self) -> Result<W> {
        self.w.into_inner().map_err(io_err)
    }
}

impl<W: Write> TraceSink for CsvSink<W> {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        if !rec.tick.is_multiple_of(self.every) {
            return Ok(());
        }
        for r in &rec.rows {
            self.w.serialize(r).map_err(io_err)?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.w.flush().map_err(io_err)
    }
}

/// Reads a CSV trace back, checking the schema line and rejecting
/// non-finite values.
pub fn read_trace<R: BufRead>(mut input: R) -> Result<Vec<RobotRow>> {
    let mut first = String::new();
    input
        .read_line(&mut first)
        .map_err(|e| Error::Parse(format!("trace: {e}")))?;
    let schema = first.trim_end().strip_prefix("# ").unwrap_or("");
    if schema != TRACE_SCHEMA {
        return Err(Error::Parse(format!(
            "trace schema '{schema}' not supported"
        )));
    }
    let mut rows = Vec::new();
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rd
        .headers()
        .map_err(|e| Error::Parse(format!("trace header: {e}")))?
        .clone();
    let want = csv_header();
    if header.iter().ne(want.iter().map(String::as_str)) {
        return Err(Error::Parse(
            "trace header does not match the schema".into(),
        ));
    }
    for (i, r) in rd.deserialize::<RobotRow>().enumerate() {
        let row = r.map_err(|e| Error::Parse(format!("trace row {}: {e}", i + 1)))?;
        if !row.is_finite() {
            return Err(Error::Parse(format!(
                "trace row {} has a non-finite value",
                i + 1
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Column names in file order.
pub fn csv_header() -> Vec<String> {
    [
        "tick", "t", "phase", "robot", "kind", "id", "x", "y", "yaw", "vx", "vy", "cmd_x", "cmd_y",
        "target_x", "target_y", "overlap", "force_x", "force_y", "queue", "source",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}
