use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ni_swarm::sim::{preset, run as run_world, CsvSink, RunSummary, Scenario, World};

use crate::{read_file, write_json, CliError, CliResult, EXIT_MISMATCH, EXIT_OK};

#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    /// Scenario file, or a preset name when no such file exists.
    pub scenario: String,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub csv_every: Option<u64>,
    pub strict: bool,
    /// Print the effective scenario and stop.
    pub dump_config: bool,
    pub output_dir: PathBuf,
}

/// Loads the scenario and applies the overrides.
pub fn load(args: &SimulateArgs) -> CliResult<Scenario> {
    let path = Path::new(&args.scenario);
    let mut s = if path.is_file() {
        Scenario::from_json(&read_file(path)?)?
    } else if let Some(p) = preset(&args.scenario) {
        p
    } else {
        return Err(CliError::Io(format!(
            "{}: no such file or preset",
            args.scenario
        )));
    };
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(dt) = args.dt {
        s.dt = dt;
    }
    if let Some(d) = args.duration {
        s.duration = d;
    }
    if let Some(n) = args.csv_every {
        s.output.csv_every = n;
    }
    s.validate()?;
    Ok(s)
}

/// Runs the scenario, writing the trace and summary under `output_dir`.
pub fn simulate(s: Scenario, output_dir: &Path) -> CliResult<RunSummary> {
    std::fs::create_dir_all(output_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", output_dir.display())))?;
    let trace_path = output_dir.join(&s.output.trace_file);
    let summary_path = output_dir.join(&s.output.summary_file);
    let every = s.output.csv_every;
    let f = File::create(&trace_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", trace_path.display())))?;
    let mut world = World::new(s)?;
    let mut sink = CsvSink::new(BufWriter::new(f), every)?;
    let summary = run_world(&mut world, &mut sink)?;
    sink.into_inner()?.flush()?;
    let f = File::create(&summary_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", summary_path.display())))?;
    let mut w = BufWriter::new(f);
    write_json(&mut w, &summary, true)?;
    w.flush()?;
    log::info!(
        "wrote {} and {}",
        trace_path.display(),
        summary_path.display()
    );
    Ok(summary)
}

pub fn run(args: &SimulateArgs, out: &mut dyn Write) -> CliResult<i32> {
    let s = load(args)?;
    if args.dump_config {
        writeln!(out, "{}", s.to_json())?;
        return Ok(EXIT_OK);
    }
    let sum = simulate(s, &args.output_dir)?;
    let ratio = sum
        .stats
        .min_pair_ratio_enabled
        .map_or("n/a".to_string(), |r| format!("{r:.3}"));
    writeln!(
        out,
        "{} seed={} phase={:?} t={:.2}s min_pair={:.3} ratio={} sha256={}",
        sum.scenario,
        sum.seed,
        sum.final_phase,
        sum.final_time,
        sum.stats.min_pair_distance,
        ratio,
        sum.trace_sha256
    )?;
    for v in &sum.violations {
        writeln!(out, "violation: {v}")?;
    }
    if args.strict && !sum.violations.is_empty() {
        return Ok(EXIT_MISMATCH);
    }
    Ok(EXIT_OK)
}
