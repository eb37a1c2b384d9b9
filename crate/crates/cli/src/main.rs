//! Command-line frontend for single-shot work extraction calculations.
//!
//! Subcommands: curve, entropy, bound, ratio, simulate, verify. Spec
//! files are JSON; flags override file fields. Exit codes: 0 success,
//! 1 verification violation or internal failure, 2 malformed input,
//! 3 infeasible instance.

mod commands;
mod error;
mod output;
mod spec;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::{CliError, Result};
use output::Format;
use spec::{build_exact, build_float, ModeChoice, RunSpec};
use thermoflux::arith::{Exact, Float};

#[derive(Parser)]
#[command(
    name = "thermoflux",
    version,
    about = "Single-shot work extraction: majorization curves, smoothed \
             entropies, work bounds, and fluctuation ratios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Thermo-majorization curve of the state (CSV by default).
    Curve(SpecArgs),
    /// Renyi-0 divergence of the state, optionally smoothed.
    Entropy(SpecArgs),
    /// Highest work compatible with failure probability epsilon.
    Bound(SpecArgs),
    /// Forward/reverse probabilities and their fluctuation ratio.
    Ratio(SpecArgs),
    /// Explicit transition currents and the work distribution.
    Simulate(SpecArgs),
    /// Cross-check the closed forms against the counting oracle.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SpecArgs {
    /// JSON system description.
    #[arg(long)]
    spec: PathBuf,
    /// Failure probability, overrides the spec file.
    #[arg(long)]
    epsilon: Option<String>,
    /// Reverse-process dissipation, overrides the spec file.
    #[arg(long)]
    delta: Option<String>,
    /// Work value, overrides the spec file.
    #[arg(long)]
    w: Option<String>,
    /// Arithmetic mode: exact or float.
    #[arg(long)]
    mode: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: json, csv, or svg.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of random instances to verify.
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Seed for the instance generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Arithmetic mode: exact or float.
    #[arg(long, default_value = "exact")]
    mode: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(args) => {
            let mode: ModeChoice = args.mode.parse()?;
            let outcome = verify::run(args.instances, args.seed, mode)?;
            emit(args.out.as_deref(), &outcome.report)?;
            if outcome.violations > 0 {
                return Err(CliError::Violation(format!(
                    "{} of {} instances violated the identities",
                    outcome.violations, args.instances
                )));
            }
            Ok(())
        }
        Command::Curve(args) => spec_command(&args, Kind::Curve),
        Command::Entropy(args) => spec_command(&args, Kind::Entropy),
        Command::Bound(args) => spec_command(&args, Kind::Bound),
        Command::Ratio(args) => spec_command(&args, Kind::Ratio),
        Command::Simulate(args) => spec_command(&args, Kind::Simulate),
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Curve,
    Entropy,
    Bound,
    Ratio,
    Simulate,
}

fn spec_command(args: &SpecArgs, kind: Kind) -> Result<()> {
    let raw = fs::read_to_string(&args.spec).map_err(|e| {
        CliError::Malformed(format!("cannot read {}: {e}", args.spec.display()))
    })?;
    let spec = RunSpec::from_json(&raw)?.with_overrides(
        args.epsilon.as_deref(),
        args.delta.as_deref(),
        args.w.as_deref(),
    );
    let mode_flag = args
        .mode
        .as_deref()
        .map(str::parse::<ModeChoice>)
        .transpose()?;
    let mode = spec.resolved_mode(mode_flag);
    let format = match kind {
        Kind::Curve => Format::parse(args.format.as_deref(), Format::Csv)?,
        _ => {
            let f = Format::parse(args.format.as_deref(), Format::Json)?;
            if f != Format::Json {
                return Err(CliError::Malformed(
                    "only the curve subcommand supports csv or svg output".to_string(),
                ));
            }
            f
        }
    };
    let rendered = match mode {
        ModeChoice::Exact => {
            let problem = build_exact(&spec)?;
            match kind {
                Kind::Curve => commands::curve::<Exact>(&problem, format)?,
                Kind::Entropy => commands::entropy::<Exact>(&problem)?,
                Kind::Bound => commands::bound::<Exact>(&problem)?,
                Kind::Ratio => commands::ratio::<Exact>(&problem)?,
                Kind::Simulate => commands::simulate::<Exact>(&problem)?,
            }
        }
        ModeChoice::Float => {
            let problem = build_float(&spec)?;
            match kind {
                Kind::Curve => commands::curve::<Float>(&problem, format)?,
                Kind::Entropy => commands::entropy::<Float>(&problem)?,
                Kind::Bound => commands::bound::<Float>(&problem)?,
                Kind::Ratio => commands::ratio::<Float>(&problem)?,
                Kind::Simulate => commands::simulate::<Float>(&problem)?,
            }
        }
    };
    emit(args.out.as_deref(), &rendered)
}

fn emit(out: Option<&std::path::Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| {
            CliError::Io(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
