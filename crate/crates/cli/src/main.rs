use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ni_swarm_cli::check::{parse_expectation, CheckArgs};
use ni_swarm_cli::compare::{CompareArgs, Experiment};
use ni_swarm_cli::metrics::MetricsArgs;
use ni_swarm_cli::simulate::SimulateArgs;
use ni_swarm_cli::{check, compare, metrics, simulate, CliResult, EXIT_INPUT};

/// Negative-imaginary formation control: model checks, swarm simulation
/// and controller comparisons.
#[derive(Parser)]
#[command(name = "ni-swarm", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpArg {
    Step,
    Hover,
    Circle,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify models (SNI/NI), report DC gain and poles as JSON.
    Check {
        /// Plant or controller preset name (repeatable).
        #[arg(long)]
        preset: Vec<String>,
        /// Transfer function, e.g. `1/(s+1)` or `[1] / [1, 1]` (repeatable).
        #[arg(long)]
        tf: Vec<String>,
        /// File with one model per line.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Check every preset.
        #[arg(long)]
        all: bool,
        /// Expectation for models without one: sni, negated-sni, negated-ni, none.
        #[arg(long)]
        expect: Option<String>,
        #[arg(long)]
        pretty: bool,
    },
    /// Run a scenario, writing a CSV trace and a JSON summary.
    Simulate {
        /// Scenario JSON file or preset name.
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        /// Write every n-th tick to the trace.
        #[arg(long)]
        csv_every: Option<u64>,
        /// Exit 1 when a safety check fails.
        #[arg(long)]
        strict: bool,
        /// Print the effective scenario JSON and exit.
        #[arg(long)]
        dump_config: bool,
        #[arg(long, default_value = "ni-swarm-out")]
        output_dir: PathBuf,
    },
    /// Step, hover and circle comparison of two outer controllers.
    Compare {
        #[arg(default_value = "sni")]
        first: String,
        #[arg(default_value = "pidf")]
        second: String,
        /// Restrict to some experiments (repeatable).
        #[arg(long, value_enum)]
        experiment: Vec<ExpArg>,
        /// Experiment setup JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dump_config: bool,
        /// JSON lines instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Summary metrics of a CSV trace.
    Metrics {
        trace: PathBuf,
        #[arg(long)]
        pretty: bool,
    },
}

fn dispatch(cmd: Cmd, out: &mut dyn Write) -> CliResult<i32> {
    match cmd {
        Cmd::Check {
            preset,
            tf,
            file,
            all,
            expect,
            pretty,
        } => {
            let args = CheckArgs {
                presets: preset,
                tfs: tf,
                file,
                all,
                expect: expect.as_deref().map(parse_expectation).transpose()?,
                pretty,
            };
            check::run(&args, out)
        }
        Cmd::Simulate {
            scenario,
            seed,
            dt,
            duration,
            csv_every,
            strict,
            dump_config,
            output_dir,
        } => simulate::run(
            &SimulateArgs {
                scenario,
                seed,
                dt,
                duration,
                csv_every,
                strict,
                dump_config,
                output_dir,
            },
            out,
        ),
        Cmd::Compare {
            first,
            second,
            experiment,
            config,
            dump_config,
            json,
        } => compare::run(
            &CompareArgs {
                controllers: [first, second],
                experiments: experiment
                    .into_iter()
                    .map(|e| match e {
                        ExpArg::Step => Experiment::Step,
                        ExpArg::Hover => Experiment::Hover,
                        ExpArg::Circle => Experiment::Circle,
                    })
                    .collect(),
                config,
                dump_config,
                json,
            },
            out,
        ),
        Cmd::Metrics { trace, pretty } => metrics::run(&MetricsArgs { trace, pretty }, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NI_SWARM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match dispatch(cli.cmd, &mut out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ni-swarm: {e}");
            e.code()
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
