//! `crossfield` — run the verification scenarios from the command line.
//!
//! Each subcommand maps to one scenario kind; configuration comes from a
//! TOML file (`--config`) or the built-in defaults. Exit codes are stable:
//! 0 all checks passed, 1 a check failed or the run aborted, 2 the config or
//! command line is invalid, 3 the artifacts could not be written.

use clap::{Args, Parser, Subcommand};
use crossfield::config::{resolve_output_dir, ScenarioConfig};
use crossfield::scenario::run_scenario;
use crossfield::Error;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "crossfield",
    version,
    about = "Closed-form crossed-field states and their grid-based verification",
    after_help = concat!(
        "Output directory precedence: --out, then the config's output_dir, then\n$",
        "CROSSFIELD_OUT/<scenario>, then crossfield-out/<scenario>."
    )
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schrödinger residuals of the closed-form families
    Verify(RunArgs),
    /// Split-step propagation checked against the analytic state
    Evolve(RunArgs),
    /// Ehrenfest force balance on an evolved coherent packet
    Lorentz(RunArgs),
    /// Hall quantization ladder and longitudinal profile
    Resistivity(RunArgs),
    /// Momentum-space identity of the envelope functions
    Fourier(RunArgs),
    /// Residuals of operator-built superpositions
    General(RunArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &'static str, &RunArgs) {
        match self {
            Command::Verify(a) => ("verify", "verify-solutions", a),
            Command::Evolve(a) => ("evolve", "evolve-oracle", a),
            Command::Lorentz(a) => ("lorentz", "lorentz-check", a),
            Command::Resistivity(a) => ("resistivity", "resistivity-scan", a),
            Command::Fourier(a) => ("fourier", "fourier-check", a),
            Command::General(a) => ("general", "general-solution", a),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML scenario config (defaults are built in)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for summary.json, manifest.toml and data files
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the scenario's primary tolerance or threshold
    #[arg(long, value_name = "FLOAT")]
    tolerance: Option<f64>,
    /// Override the grid resolution, e.g. 256x256
    #[arg(long, value_name = "NXxNY")]
    grid: Option<String>,
    /// Suppress the per-check console lines
    #[arg(long)]
    quiet: bool,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    let (verb, kind, args) = cli.command.parts();

    let cfg = match build_config(verb, kind, args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("crossfield: {e}");
            return 2;
        }
    };
    let out_dir = resolve_output_dir(&cfg, args.out.as_deref());

    match run_scenario(&cfg, &out_dir, args.quiet) {
        Ok(outcome) => {
            if outcome.passed {
                0
            } else {
                1
            }
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("crossfield: {e}");
            2
        }
        Err(Error::Io(e)) => {
            eprintln!("crossfield: cannot write outputs: {e}");
            3
        }
        Err(e) => {
            eprintln!("crossfield: {e}");
            1
        }
    }
}

fn build_config(verb: &str, kind: &str, args: &RunArgs) -> crossfield::Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default_for(kind)?,
    };
    if cfg.scenario.kind() != kind {
        return Err(Error::Config(format!(
            "config declares scenario `{}`, but `{verb}` runs `{kind}`; \
             invoke the matching subcommand",
            cfg.scenario.kind()
        )));
    }
    if let Some(spec) = &args.grid {
        let (n_x, n_y) = parse_grid(spec)?;
        cfg.grid.n_x = n_x;
        cfg.grid.n_y = n_y;
    }
    if let Some(tol) = args.tolerance {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Config(format!(
                "--tolerance must be positive and finite, got {tol}"
            )));
        }
        cfg.scenario.set_primary_tolerance(tol);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_grid(spec: &str) -> crossfield::Result<(usize, usize)> {
    let bad = || Error::Config(format!("--grid expects NXxNY (for example 256x256), got `{spec}`"));
    let (a, b) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    let n_x = a.trim().parse::<usize>().map_err(|_| bad())?;
    let n_y = b.trim().parse::<usize>().map_err(|_| bad())?;
    Ok((n_x, n_y))
}
