use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use ni_swarm::control::{resolve_model, ControllerPreset, Expectation, PlantPreset};
use ni_swarm::lti::{DcGain, FreqGrid, RationalTF};
use ni_swarm::ni::{is_sni, ni_report, NiReport, SniReport};

use crate::{read_file, write_json, CliError, CliResult, EXIT_MISMATCH, EXIT_OK};

pub const CHECK_SCHEMA: &str = "ni-swarm/check/v1";

#[derive(Debug, Clone, Default)]
pub struct CheckArgs {
    pub presets: Vec<String>,
    pub tfs: Vec<String>,
    /// One model per line; blank lines and `#` comments skipped.
    pub file: Option<PathBuf>,
    /// Every plant and controller preset.
    pub all: bool,
    /// Expectation applied to models that carry none of their own.
    pub expect: Option<Expectation>,
    pub pretty: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub schema: &'static str,
    pub model: String,
    pub tf: String,
    pub expectation: Option<Expectation>,
    pub matches: bool,
    pub is_sni: bool,
    pub negated_is_sni: bool,
    pub is_ni: bool,
    pub negated_is_ni: bool,
    /// `None` for a pole at the origin.
    pub dc_gain: Option<f64>,
    pub poles: Vec<(f64, f64)>,
    pub sni: SniReport,
    pub ni: NiReport,
}

pub fn parse_expectation(s: &str) -> CliResult<Expectation> {
    Ok(match s {
        "sni" => Expectation::Sni,
        "negated-sni" => Expectation::NegatedSni,
        "negated-ni" => Expectation::NegatedNi,
        "none" => Expectation::Unchecked,
        _ => return Err(CliError::Input(format!("unknown expectation '{s}'"))),
    })
}

pub fn analyse(
    model: &str,
    tf: &RationalTF,
    expectation: Option<Expectation>,
    grid: &FreqGrid,
) -> CheckReport {
    let sni = is_sni(tf, grid);
    let ni = ni_report(tf);
    let matches = match expectation {
        Some(Expectation::Sni) => sni.is_sni,
        Some(Expectation::NegatedSni) => sni.negated_is_sni,
        Some(Expectation::NegatedNi) => ni.negated_is_ni,
        Some(Expectation::Unchecked) | None => true,
    };
    CheckReport {
        schema: CHECK_SCHEMA,
        model: model.to_string(),
        tf: tf.to_string(),
        expectation,
        matches,
        is_sni: sni.is_sni,
        negated_is_sni: sni.negated_is_sni,
        is_ni: ni.is_ni,
        negated_is_ni: ni.negated_is_ni,
        dc_gain: match tf.dc_gain() {
            DcGain::Finite(k) => Some(k),
            DcGain::Infinite => None,
        },
        poles: tf.poles().iter().map(|p| (p.re, p.im)).collect(),
        sni,
        ni,
    }
}

fn models(args: &CheckArgs) -> CliResult<Vec<String>> {
    let mut names: Vec<String> = Vec::new();
    if args.all {
        names.extend(PlantPreset::ALL.iter().map(|p| p.name().to_string()));
        names.extend(ControllerPreset::ALL.iter().map(|c| c.name().to_string()));
    }
    for p in &args.presets {
        if p.parse::<PlantPreset>().is_err() && p.parse::<ControllerPreset>().is_err() {
            return Err(CliError::Input(format!("unknown preset '{p}'")));
        }
        names.push(p.clone());
    }
    names.extend(args.tfs.iter().cloned());
    if let Some(path) = &args.file {
        let text = read_file(path)?;
        names.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from),
        );
    }
    if names.is_empty() {
        return Err(CliError::Input(
            "nothing to check: give --preset, --tf, --file or --all".into(),
        ));
    }
    Ok(names)
}

/// Prints one JSON report per model; exit 1 if any classification
/// disagrees with its expectation.
pub fn run(args: &CheckArgs, out: &mut dyn Write) -> CliResult<i32> {
    let grid = FreqGrid::default();
    let mut reports = Vec::new();
    for m in models(args)? {
        let (tf, exp) = resolve_model(&m).map_err(|e| CliError::Input(format!("{m}: {e}")))?;
        reports.push(analyse(&m, &tf, exp.or(args.expect), &grid));
    }
    let mut code = EXIT_OK;
    for r in &reports {
        if !r.matches {
            log::warn!(
                "{}: classification does not match {:?}",
                r.model,
                r.expectation
            );
            code = EXIT_MISMATCH;
        }
        write_json(out, r, args.pretty)?;
    }
    Ok(code)
}
