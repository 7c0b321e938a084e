use serde::{Deserialize, Serialize};

use super::fit::{fit_rate, RateModel};
use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::profiles::DensityProfile;
use crate::solver::{init_state, Model, ModeIndex, PerturbationSpec, PhysicsParams, Scheme, Stepper, VerticalShape};
use crate::spectral::{sobolev_norm, Grid};

/// Settings of the linearized growth-rate probes used by the bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    pub nx: usize,
    /// ignored in 2D
    pub ny: usize,
    pub nz: usize,
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub amplitude: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    /// stop when `kappa_hi - kappa_lo <= rel_tol * kappa_lo`
    pub rel_tol: f64,
    pub max_iter: usize,
    /// steps between samples of `||v3||_0`
    pub sample_every: u64,
}

impl BisectionConfig {
    /// Probe settings bracketing `[kappa_lo, kappa_hi]`.
    pub fn new(kappa_lo: f64, kappa_hi: f64) -> Self {
        BisectionConfig {
            nx: 64,
            ny: 8,
            nz: 65,
            mu: 0.1,
            dt: 0.05,
            t_end: 200.0,
            amplitude: 1e-6,
            kappa_lo,
            kappa_hi,
            rel_tol: 0.01,
            max_iter: 40,
            sample_every: 10,
        }
    }
}

/// Fitted exponential rate of `||v3||_0` at one capillarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthProbe {
    pub kappa: f64,
    pub rate: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionResult {
    pub kappa_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub probes: Vec<GrowthProbe>,
}

/// Run the linearized system from a single-mode perturbation with the
/// smallest wavenumber `1 / Lmax` and fit the exponential rate of `||v3||_0`
/// over the last half of the run.
pub fn linear_growth_rate(
    profile: &DensityProfile,
    geometry: &DomainGeometry,
    cfg: &BisectionConfig,
    kappa: f64,
) -> Result<GrowthProbe> {
    let grid = Grid::new(*geometry, cfg.nx, cfg.ny, cfg.nz, true)?;
    let params = PhysicsParams {
        mu: cfg.mu,
        kappa,
        g: profile.g,
    };
    let model = Model::new(grid, profile, params, true)?;
    let mode = match geometry.l2 {
        Some(l2) if l2 > geometry.l1 => ModeIndex::XY([0, 1]),
        _ => ModeIndex::X(1),
    };
    let spec = PerturbationSpec {
        amplitude: cfg.amplitude,
        modes: vec![mode],
        seed: 0,
        lift: false,
        shape: VerticalShape::Sine,
        velocity_scale: 1.0,
    };
    let state = init_state(&model.profile, &model.grid, &spec)?;
    let mut stepper = Stepper::new(model, &state, cfg.dt, Scheme::ImexBdf2)?;
    let steps = (cfg.t_end / cfg.dt).round() as u64;
    let every = cfg.sample_every.max(1);
    let (mut t, mut y) = (Vec::new(), Vec::new());
    for s in 1..=steps {
        stepper.step()?;
        if s % every == 0 || s == steps {
            let v3 = &stepper.state().vel[2];
            t.push(stepper.time());
            y.push(sobolev_norm(&stepper.model().grid, v3, 0, 0));
        }
    }
    let fit = fit_rate(&t, &y, RateModel::Exponential, None)?;
    Ok(GrowthProbe {
        kappa,
        rate: fit.rate,
        r2: fit.r2,
    })
}

/// Locate the capillarity at which the linearized growth rate changes sign.
pub fn find_threshold_by_bisection(
    profile: &DensityProfile,
    geometry: &DomainGeometry,
    cfg: &BisectionConfig,
) -> Result<BisectionResult> {
    if !(cfg.kappa_lo >= 0.0 && cfg.kappa_hi > cfg.kappa_lo) {
        return Err(Error::InvalidArgument(format!(
            "bracket [{}, {}] is not increasing",
            cfg.kappa_lo, cfg.kappa_hi
        )));
    }
    let lo_probe = linear_growth_rate(profile, geometry, cfg, cfg.kappa_lo)?;
    let hi_probe = linear_growth_rate(profile, geometry, cfg, cfg.kappa_hi)?;
    if !(lo_probe.rate > 0.0 && hi_probe.rate < 0.0) {
        return Err(Error::Bracket {
            lo: cfg.kappa_lo,
            hi: cfg.kappa_hi,
            rate_lo: lo_probe.rate,
            rate_hi: hi_probe.rate,
        });
    }
    let mut probes = vec![lo_probe, hi_probe];
    let (mut lo, mut hi) = (cfg.kappa_lo, cfg.kappa_hi);
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.rel_tol * lo.max(f64::MIN_POSITIVE) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let p = linear_growth_rate(profile, geometry, cfg, mid)?;
        probes.push(p);
        if p.rate > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BisectionResult {
        kappa_hat: 0.5 * (lo + hi),
        lo,
        hi,
        probes,
    })
}
