//! `korteweg`: batch driver for threshold computation, simulation, sweeps and fits.
//!
//! Exit codes: 0 ok, 1 condition or threshold failure, 2 usage or config
//! error, 3 blow-up, vacuum or solver failure.

mod error;
mod output;
mod simulate;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use korteweg::config::RunConfig;
use korteweg::diagnostics::{fit_rate, RateModel, Series};
use korteweg::profiles::ConditionReport;
use korteweg::threshold::CurvePoint;
use korteweg::{validate_profile, DomainGeometry, ProfileSpec};
use serde::Serialize;

use error::{CliError, CliResult, EXIT_BLOW_UP, EXIT_CONDITION, EXIT_OK, EXIT_USAGE};
use output::emit_json;
use simulate::{cmd_simulate, SimulateArgs};
use sweep::{cmd_sweep, parse_grid, write_rows, SweepArgs, SweepAxis};

#[derive(Debug, Parser)]
#[command(name = "korteweg", version, about = "Capillary Rayleigh-Taylor laboratory")]
struct Cli {
    /// suppress progress output on stderr
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the profile conditions; prints a JSON report, exit 1 if any fails
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute the capillarity threshold and the scanned curve
    Threshold {
        #[arg(long)]
        config: PathBuf,
        /// JSON output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// number of lattice magnitudes to scan
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Run one simulation into a run directory
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// run directory
        #[arg(long)]
        out: Option<PathBuf>,
        /// override the perturbation seed
        #[arg(long)]
        seed: Option<u64>,
        /// integrate the linearized system
        #[arg(long)]
        linearized: bool,
        /// continue from a checkpoint stem (`checkpoints/step_NNNNNNNN`)
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run independent simulations over a parameter grid
    #[command(group(ArgGroup::new("axis").required(true).args(["kappa_grid", "l_grid"])))]
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// capillarity grid `a,b,c` or `start:stop:count`, in multiples of the threshold
        #[arg(long)]
        kappa_grid: Option<String>,
        /// read the capillarity grid as absolute values
        #[arg(long, requires = "kappa_grid")]
        absolute: bool,
        /// cell length L1 grid at the configured capillarity
        #[arg(long = "L-grid", alias = "l-grid")]
        l_grid: Option<String>,
        /// worker threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        linearized: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// summary CSV file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a decay or growth rate to one column of a CSV series
    Fit {
        /// CSV file with a `t` column
        series: PathBuf,
        #[arg(long)]
        column: String,
        /// `algebraic` or `exponential`
        #[arg(long, default_value = "algebraic")]
        model: RateModel,
        /// fit window `t0,t1` (second half of the series when omitted)
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected t0,t1, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("{x:?} is not a number"));
    Ok((p(a)?, p(b)?))
}

#[derive(Serialize)]
struct ValidateReport {
    profile: String,
    #[serde(flatten)]
    report: ConditionReport,
    failed: Vec<String>,
}

#[derive(Serialize)]
struct ThresholdOutput {
    kappa_c: f64,
    argmax_xi: f64,
    upper_bound: f64,
    curve: Vec<CurvePoint>,
    profile: ProfileSpec,
    geometry: DomainGeometry,
    #[serde(rename = "Nz")]
    nz: usize,
}

fn cmd_validate(config: &Path) -> CliResult<i32> {
    let cfg = RunConfig::load(config)?;
    let profile = cfg.profile(false)?;
    let report = validate_profile(&profile);
    let out = ValidateReport {
        profile: cfg.profile.kind_name().into(),
        failed: report.failed().iter().map(|s| s.to_string()).collect(),
        report,
    };
    emit_json(None, &out)?;
    Ok(if out.report.verdict { EXIT_OK } else { EXIT_CONDITION })
}

fn cmd_threshold(config: &Path, out: Option<&Path>, modes: Option<usize>) -> CliResult<i32> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(m) = modes {
        if m == 0 {
            return Err(CliError::Usage("--modes must be at least 1".into()));
        }
        cfg.numerics.modes = m;
    }
    let r = cfg.threshold()?;
    emit_json(
        out,
        &ThresholdOutput {
            kappa_c: r.kappa_c,
            argmax_xi: r.argmax_xi,
            upper_bound: r.upper_bound,
            curve: r.curve,
            profile: cfg.profile.clone(),
            geometry: cfg.geometry()?,
            nz: r.nz,
        },
    )?;
    Ok(EXIT_OK)
}

fn cmd_fit(series: &Path, column: &str, model: RateModel, window: Option<(f64, f64)>, out: Option<&Path>) -> CliResult<i32> {
    let s = Series::read_csv(series)?;
    let t = s.column("t").map_err(|e| CliError::Usage(e.to_string()))?;
    let y = s.column(column).map_err(|e| CliError::Usage(e.to_string()))?;
    emit_json(out, &fit_rate(&t, &y, model, window)?)?;
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Threshold { config, out, modes } => cmd_threshold(&config, out.as_deref(), modes),
        Command::Simulate {
            config,
            out,
            seed,
            linearized,
            resume,
        } => {
            let done = cmd_simulate(&SimulateArgs {
                config,
                out,
                seed,
                linearized,
                resume,
                quiet: cli.quiet,
            })?;
            if !cli.quiet {
                eprintln!("{}: {}", done.dir.display(), done.status.label());
            }
            Ok(match done.status {
                korteweg::solver::RunStatus::Completed => EXIT_OK,
                _ => EXIT_BLOW_UP,
            })
        }
        Command::Sweep {
            config,
            kappa_grid,
            absolute,
            l_grid,
            jobs,
            linearized,
            seed,
            out,
        } => {
            let (axis, spec) = match (kappa_grid, l_grid) {
                (Some(k), None) => (SweepAxis::Kappa { absolute }, k),
                (None, Some(l)) => (SweepAxis::L1, l),
                _ => return Err(CliError::Usage("give exactly one of --kappa-grid and --L-grid".into())),
            };
            let rows = cmd_sweep(&SweepArgs {
                config,
                axis,
                values: parse_grid(&spec)?,
                jobs,
                linearized,
                seed,
            })?;
            write_rows(out.as_deref(), &rows)?;
            Ok(EXIT_OK)
        }
        Command::Fit {
            series,
            column,
            model,
            window,
            out,
        } => cmd_fit(&series, &column, model, window, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_parses_pairs() {
        assert_eq!(parse_window("10, 50").unwrap(), (10.0, 50.0));
        assert!(parse_window("10").is_err());
        assert!(parse_window("a,b").is_err());
    }

    #[test]
    fn grid_spec_forms() {
        assert_eq!(parse_grid("0.5,1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert_eq!(parse_grid("0.5:2:4").unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("3:9:1").unwrap(), vec![3.0]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        use korteweg::Error;
        assert_eq!(CliError::from(Error::Config("x".into())).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::from(Error::UnboundedThreshold("x".into())).exit_code(), EXIT_CONDITION);
        assert_eq!(CliError::from(Error::BlowUp { t: 1.0, what: "x".into() }).exit_code(), EXIT_BLOW_UP);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
