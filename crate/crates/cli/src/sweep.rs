//! `sweep`: independent runs over a capillarity or cell-length grid.

use std::path::{Path, PathBuf};

use korteweg::config::RunConfig;
use korteweg::diagnostics::{fit_rate, RateModel};
use korteweg::solver::{run, RunSink, RunStatus};
use korteweg::{Scheme, Stepper};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepAxis {
    /// capillarity; relative to each point's threshold unless `absolute`
    Kappa { absolute: bool },
    /// cell length `L1` at the capillarity resolved from the base config
    L1,
}

pub struct SweepArgs {
    pub config: PathBuf,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub jobs: usize,
    pub linearized: bool,
    pub seed: Option<u64>,
}

/// One summary row.
///
/// `rate` is the exponential rate fitted to `||v||_L2` over the second half
/// of the run; `verdict` is `unstable` for a positive rate or an early stop,
/// `stable` otherwise, and `error` when the point failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: Option<f64>,
    pub mu: f64,
    pub kappa: Option<f64>,
    pub kappa_rel: Option<f64>,
    pub kappa_c: Option<f64>,
    pub status: String,
    pub rate: Option<f64>,
    pub r2: Option<f64>,
    pub verdict: String,
    pub error: String,
}

/// Parse `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |m: &str| CliError::Usage(format!("grid spec {spec:?}: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("{s:?} is not a number")));
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count"));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| bad("count must be a positive integer"))?;
        match n {
            0 => return Err(bad("count must be a positive integer")),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        spec.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<CliResult<Vec<f64>>>()?
    };
    if values.is_empty() {
        return Err(bad("empty grid"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    Ok(values)
}

struct SpeedSink {
    every: u64,
    t: Vec<f64>,
    speed: Vec<f64>,
}

impl RunSink for SpeedSink {
    fn observe(&mut self, stepper: &Stepper, last: bool) -> korteweg::Result<()> {
        if stepper.steps().is_multiple_of(self.every) || last {
            let grid = &stepper.model().grid;
            let state = stepper.state();
            let sq: Vec<f64> = (0..grid.len())
                .map(|i| state.vel.iter().map(|v| v[i] * v[i]).sum())
                .collect();
            self.t.push(stepper.time());
            self.speed.push(grid.integrate(&sq).sqrt());
        }
        Ok(())
    }
}

fn point_config(base: &RunConfig, axis: SweepAxis, value: f64, fixed_kappa: Option<f64>) -> RunConfig {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::Kappa { absolute: true } => {
            cfg.physics.kappa = Some(value);
            cfg.physics.kappa_rel = None;
        }
        SweepAxis::Kappa { absolute: false } => {
            cfg.physics.kappa = None;
            cfg.physics.kappa_rel = Some(value);
        }
        SweepAxis::L1 => {
            cfg.domain.l1 = value;
            cfg.physics.kappa = fixed_kappa;
            cfg.physics.kappa_rel = None;
        }
    }
    cfg
}

fn run_point(index: usize, cfg: &RunConfig, linearized: bool) -> SweepRow {
    let kappa_c = cfg.threshold().ok().map(|r| r.kappa_c);
    let mut row = SweepRow {
        index,
        l1: cfg.domain.l1,
        l2: cfg.domain.l2,
        mu: cfg.physics.mu,
        kappa: cfg.physics.kappa,
        kappa_rel: cfg.physics.kappa_rel,
        kappa_c,
        status: "failed".into(),
        rate: None,
        r2: None,
        verdict: "error".into(),
        error: String::new(),
    };
    let result = (|| -> korteweg::Result<(RunStatus, Option<(f64, f64)>)> {
        cfg.validate()?;
        let setup = cfg.build(linearized)?;
        row.kappa = Some(setup.kappa.kappa);
        if row.kappa_rel.is_none() {
            row.kappa_rel = kappa_c.map(|kc| setup.kappa.kappa / kc);
        }
        let scheme: Scheme = cfg.numerics.scheme;
        let mut stepper = Stepper::new(setup.model, &setup.state, setup.dt, scheme)?;
        let mut sink = SpeedSink {
            every: cfg.output.every,
            t: Vec::new(),
            speed: Vec::new(),
        };
        let outcome = run(&mut stepper, cfg.numerics.t_end, &mut sink)?;
        let fit = fit_rate(&sink.t, &sink.speed, RateModel::Exponential, None)
            .ok()
            .map(|f| (f.rate, f.r2));
        Ok((outcome.status, fit))
    })();
    match result {
        Ok((status, fit)) => {
            row.status = status.label().into();
            if let Some((rate, r2)) = fit {
                row.rate = Some(rate);
                row.r2 = Some(r2);
            }
            row.verdict = match (&status, row.rate) {
                (RunStatus::Completed, Some(r)) if r > 0.0 => "unstable",
                (RunStatus::Completed, Some(_)) => "stable",
                (RunStatus::Completed, None) => {
                    row.error = "too few samples to fit a rate".into();
                    "error"
                }
                _ => "unstable",
            }
            .into();
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Run every grid point and return rows in grid order.
pub fn cmd_sweep(args: &SweepArgs) -> CliResult<Vec<SweepRow>> {
    let mut base = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        base.perturbation.seed = seed;
    }
    let fixed_kappa = match args.axis {
        SweepAxis::L1 => Some(base.resolve_kappa()?.kappa),
        SweepAxis::Kappa { .. } => None,
    };
    let configs = args
        .values
        .iter()
        .map(|&v| point_config(&base, args.axis, v, fixed_kappa))
        .collect::<Vec<_>>();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", args.jobs)))?;
    let linearized = args.linearized;
    Ok(pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, cfg)| run_point(i, cfg, linearized))
            .collect()
    }))
}

/// Write rows as CSV to `path`, or to stdout without a path.
pub fn write_rows(path: Option<&Path>, rows: &[SweepRow]) -> CliResult<()> {
    let sink: Box<dyn std::io::Write> = match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Box::new(std::fs::File::create(p)?)
        }
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
