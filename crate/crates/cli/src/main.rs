mod args;
mod commands;
mod error;

use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use finsec_core::band::PROBE_RADIUS;
use finsec_core::descriptor::{ExperimentSpec, DEFAULT_GENERATOR_SEARCH_DEPTH};
use finsec_core::sections::{max_dimension, STABILIZATION_TOL};
use finsec_core::GroupContext;
use serde_json::{json, Value};

use args::{Cli, Command};
use commands::Outcome;
use error::{CliError, EXIT_SCHEMA};

/// Everything needed to reproduce a run: the merged input, every default
/// that was applied and the artifacts written.
fn manifest(command: &Command, input: &Value, spec: &ExperimentSpec, ctx: &GroupContext, outcome: &Outcome, artifacts: &[String]) -> Result<Value, CliError> {
    let probe = spec.probe_config(ctx)?;
    Ok(json!({
        "tool": "finsec",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": finsec_core::VERSION,
        "command": command.name(),
        "input": input,
        "resolved": {
            "group": ctx.kind(),
            "generators": ctx.generators(),
            "growth_class": ctx.growth_class(),
            "generator_search_depth": spec.generator_search_depth.unwrap_or(DEFAULT_GENERATOR_SEARCH_DEPTH),
            "ball_limit": ctx.ball_limit(),
            "max_dim": max_dimension(),
            "stabilization_tol": STABILIZATION_TOL,
            "limit_probe_radius": PROBE_RADIUS,
            "thresholds": probe.thresholds,
            "probe": {
                "max_radius": probe.max_radius,
                "dim_cap": probe.dim_cap,
                "default_directions": probe.default_directions,
                "shifts": probe.shifts,
                "w_star": probe.w_star,
                "directions": probe.directions.iter().map(|d| d.describe()).collect::<Vec<_>>(),
            },
        },
        "artifacts": artifacts,
        "exit_code": outcome.code,
    }))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn execute(command: &Command) -> Result<i32, CliError> {
    let common = command.common();
    let input = common.effective_spec()?;
    let spec: ExperimentSpec = serde_json::from_value(input.clone())?;
    let ctx = spec.context()?;
    let outcome = commands::run(command, &spec, &ctx)?;

    std::fs::create_dir_all(&common.out)?;
    let stem = command.name();
    let mut artifacts = vec![format!("{stem}.json")];
    write_json(&common.out.join(&artifacts[0]), &outcome.report)?;
    if let Some(csv) = &outcome.csv {
        artifacts.push(format!("{stem}.csv"));
        std::fs::write(common.out.join(&artifacts[1]), csv)?;
    }
    write_json(&common.out.join("manifest.json"), &manifest(command, &input, &spec, &ctx, &outcome, &artifacts)?)?;
    println!("{}", outcome.summary);
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_SCHEMA as u8),
            };
        }
    };
    match execute(&cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("finsec {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
