//! `simulate`: one run with manifest, time series, snapshots and checkpoints.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use korteweg::config::{ResolvedKappa, RunConfig};
use korteweg::diagnostics::{energy_report, TimeseriesWriter, TRUSTED_NZ};
use korteweg::solver::{run, Checkpoint, RunSink, RunStatus};
use korteweg::spectral::GridSummary;
use korteweg::{DomainGeometry, PhysicsParams, Scheme, Stepper};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{run_dir, write_json_atomic};

pub const MANIFEST: &str = "manifest.json";
pub const TIMESERIES: &str = "timeseries.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Reproducibility record of a run directory.
///
/// `config` is the resolved configuration: a relative capillarity is expanded
/// into `physics.kappa`, and `kappa` keeps both factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    /// `setup`, `running`, `completed`, `blow-up`, `vacuum` or `failed`
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub config: RunConfig,
    pub kappa: Option<ResolvedKappa>,
    pub params: Option<PhysicsParams>,
    pub geometry: DomainGeometry,
    pub grid: GridSummary,
    pub scheme: Scheme,
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub linearized: bool,
    pub seed: u64,
    /// false when `Nz` is too small to trust order-3 and order-4 vertical derivatives
    pub resolution_trusted: bool,
    pub steps: u64,
    pub t_final: f64,
    pub wall_clock_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resumed_from: Option<PathBuf>,
}

pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub linearized: bool,
    pub resume: Option<PathBuf>,
    pub quiet: bool,
}

/// Outcome reported to `main`.
pub struct Simulated {
    pub dir: PathBuf,
    pub status: RunStatus,
}

fn stem(dir: &Path, sub: &str, prefix: &str, step: u64) -> PathBuf {
    dir.join(sub).join(format!("{prefix}_{step:08}"))
}

struct FileSink {
    dir: PathBuf,
    series: TimeseriesWriter,
    every: u64,
    snapshots: u64,
    total: u64,
    next_progress: u64,
    quiet: bool,
    last_row: Option<u64>,
    last_snapshot: Option<u64>,
}

impl FileSink {
    fn row(&mut self, stepper: &Stepper) -> korteweg::Result<()> {
        let s = stepper.steps();
        if self.last_row != Some(s) {
            self.series.write(&energy_report(stepper)?)?;
            self.last_row = Some(s);
        }
        Ok(())
    }

    fn save(&mut self, stepper: &Stepper) -> korteweg::Result<()> {
        let s = stepper.steps();
        if self.last_snapshot == Some(s) {
            return Ok(());
        }
        let grid = &stepper.model().grid;
        stepper.state().write_snapshot(&stem(&self.dir, SNAPSHOT_DIR, "snap", s), grid)?;
        stepper.checkpoint().write(&stem(&self.dir, CHECKPOINT_DIR, "step", s), grid)?;
        self.last_snapshot = Some(s);
        Ok(())
    }
}

impl RunSink for FileSink {
    fn observe(&mut self, stepper: &Stepper, last: bool) -> korteweg::Result<()> {
        let s = stepper.steps();
        if s.is_multiple_of(self.every) || last {
            self.row(stepper)?;
        }
        if (self.snapshots > 0 && s.is_multiple_of(self.snapshots)) || last {
            self.save(stepper)?;
        }
        if !self.quiet && (s >= self.next_progress || last) {
            eprintln!("step {s}/{} t = {:.6}", self.total, stepper.time());
            self.next_progress = s + (self.total / 10).max(1);
        }
        Ok(())
    }
}

/// Keep the header and the rows with `t <= t_keep`, byte for byte.
fn truncate_series(path: &Path, t_keep: f64) -> CliResult<()> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot resume without {}: {e}", path.display())))?;
    let mut kept = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i > 0 {
            let t: f64 = line
                .split(',')
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| CliError::Usage(format!("{}: malformed row {}", path.display(), i + 1)))?;
            if t > t_keep {
                break;
            }
        }
        kept.push(line);
    }
    let mut f = fs::File::create(path)?;
    for line in kept {
        writeln!(f, "{line}")?;
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<Simulated> {
    let clock = Instant::now();
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.perturbation.seed = seed;
    }
    let dir = run_dir(args.out.as_deref(), &cfg, &args.config);
    fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
    fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
    let geometry = cfg.geometry()?;
    let grid = cfg.grid()?.summary();
    let mut manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        status: "setup".into(),
        message: None,
        config: cfg.clone(),
        kappa: None,
        params: None,
        geometry,
        resolution_trusted: grid.nz >= TRUSTED_NZ,
        grid,
        scheme: cfg.numerics.scheme,
        dt: None,
        t_end: cfg.numerics.t_end,
        linearized: args.linearized,
        seed: cfg.perturbation.seed,
        steps: 0,
        t_final: 0.0,
        wall_clock_s: 0.0,
        resumed_from: args.resume.clone(),
    };
    let manifest_path = dir.join(MANIFEST);
    write_json_atomic(&manifest_path, &manifest)?;

    let fail = |manifest: &mut RunManifest, e: CliError| -> CliResult<Simulated> {
        manifest.status = "failed".into();
        manifest.message = Some(e.to_string());
        manifest.wall_clock_s = clock.elapsed().as_secs_f64();
        write_json_atomic(&manifest_path, manifest)?;
        Err(e)
    };

    let setup = match cfg.build(args.linearized) {
        Ok(s) => s,
        Err(e) => return fail(&mut manifest, e.into()),
    };
    manifest.kappa = Some(setup.kappa);
    manifest.params = Some(setup.model.params);
    manifest.config.physics.kappa = Some(setup.kappa.kappa);
    manifest.config.physics.kappa_rel = None;
    manifest.config.numerics.dt = Some(setup.dt);
    manifest.config.numerics.cfl = None;
    manifest.dt = Some(setup.dt);

    let series_path = dir.join(TIMESERIES);
    let built = match &args.resume {
        None => Stepper::new(setup.model, &setup.state, setup.dt, cfg.numerics.scheme)
            .map_err(CliError::from)
            .and_then(|s| Ok((s, TimeseriesWriter::create(&series_path)?))),
        Some(ck_path) => Checkpoint::read(ck_path)
            .map_err(CliError::from)
            .and_then(|ck| {
                if ck.dt.to_bits() != setup.dt.to_bits() || ck.scheme != cfg.numerics.scheme {
                    return Err(CliError::Usage(format!(
                        "checkpoint dt {} / scheme {:?} differ from the configured dt {} / scheme {:?}",
                        ck.dt, ck.scheme, setup.dt, cfg.numerics.scheme
                    )));
                }
                let s = Stepper::from_checkpoint(setup.model, &ck)?;
                truncate_series(&series_path, ck.t)?;
                Ok((s, TimeseriesWriter::append(&series_path)?))
            }),
    };
    let (mut stepper, series) = match built {
        Ok(b) => b,
        Err(e) => return fail(&mut manifest, e),
    };

    manifest.status = "running".into();
    manifest.steps = stepper.steps();
    manifest.t_final = stepper.time();
    write_json_atomic(&manifest_path, &manifest)?;

    let total = stepper.steps() + ((cfg.numerics.t_end - stepper.time()) / stepper.dt()).round().max(0.0) as u64;
    let mut sink = FileSink {
        dir: dir.clone(),
        series,
        every: cfg.output.every,
        snapshots: cfg.output.snapshots,
        total,
        next_progress: 0,
        quiet: args.quiet,
        last_row: None,
        last_snapshot: None,
    };
    let outcome = match run(&mut stepper, cfg.numerics.t_end, &mut sink) {
        Ok(o) => o,
        Err(e) => {
            manifest.steps = stepper.steps();
            manifest.t_final = stepper.time();
            return fail(&mut manifest, e.into());
        }
    };
    if outcome.status != RunStatus::Completed {
        // diagnostic record of the last accepted state
        sink.row(&stepper)?;
        sink.save(&stepper)?;
    }
    manifest.status = outcome.status.label().into();
    manifest.message = match &outcome.status {
        RunStatus::Completed => None,
        RunStatus::BlowUp(m) | RunStatus::Vacuum(m) => Some(m.clone()),
    };
    manifest.steps = outcome.steps;
    manifest.t_final = outcome.t_final;
    manifest.wall_clock_s = clock.elapsed().as_secs_f64();
    write_json_atomic(&manifest_path, &manifest)?;
    Ok(Simulated {
        dir,
        status: outcome.status,
    })
}
