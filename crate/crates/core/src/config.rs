//! TOML run configuration.
//!
//! ```toml
//! [domain]
//! L1 = 1.0
//! h = 1.0
//!
//! [profile]
//! kind = "linear"
//! params = { base = 1.0, slope = 1.0 }
//!
//! [physics]
//! mu = 0.03
//! kappa_rel = 2.0
//! g = 1.0
//!
//! [numerics]
//! Nx = 64
//! Nz = 65
//! dt = 0.01
//! T = 50.0
//!
//! [perturbation]
//! amplitude = 1e-3
//! modes = [1]
//!
//! [output]
//! every = 10
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::profiles::{make_profile, DensityProfile, ProfileSpec};
use crate::solver::{init_state, Model, NSKState, PerturbationSpec, PhysicsParams, Scheme};
use crate::spectral::Grid;
use crate::threshold::{self, ThresholdResult};

/// Largest time step chosen automatically from a CFL number.
pub const DT_CAP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2", default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    pub h: f64,
}

fn default_g() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// capillarity as a multiple of the computed threshold
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_rel: Option<f64>,
    #[serde(default = "default_g")]
    pub g: f64,
}

fn default_true() -> bool {
    true
}

fn default_modes() -> usize {
    threshold::DEFAULT_MODES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny", default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(rename = "Nz")]
    pub nz: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_true")]
    pub dealias: bool,
    /// lattice magnitudes scanned by the threshold computation
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_every() -> u64 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// steps between time-series rows
    #[serde(default = "default_every")]
    pub every: u64,
    /// steps between field snapshots; 0 writes only the final one
    #[serde(default)]
    pub snapshots: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            every: default_every(),
            snapshots: 0,
        }
    }
}

/// Complete description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub profile: ProfileSpec,
    pub physics: PhysicsSection,
    pub numerics: NumericsSection,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub output: OutputSection,
}

/// Capillarity after expanding `kappa_rel`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedKappa {
    pub kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_c: Option<f64>,
}

/// Everything needed to start stepping.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub model: Model,
    pub state: NSKState,
    pub dt: f64,
    pub kappa: ResolvedKappa,
}

impl RunConfig {
    /// Parse and validate; syntax errors carry line and column.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file; a relative tabulated-profile path is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let ProfileSpec::Tabulated { path: Some(p), .. } = &mut cfg.profile {
            if Path::new(p.as_str()).is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(p.as_str()).to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        let p = &self.physics;
        match (p.kappa, p.kappa_rel) {
            (Some(_), Some(_)) => return Err(Error::Config("kappa and kappa_rel are mutually exclusive".into())),
            (None, None) => return Err(Error::Config("one of kappa or kappa_rel is required".into())),
            (_, Some(r)) if !(r.is_finite() && r >= 0.0) => {
                return Err(Error::Config(format!("kappa_rel must be non-negative, got {r}")))
            }
            _ => {}
        }
        PhysicsParams {
            mu: p.mu,
            kappa: p.kappa.unwrap_or(0.0),
            g: p.g,
        }
        .validate()?;
        let n = &self.numerics;
        if n.dt.is_some() && n.cfl.is_some() {
            return Err(Error::Config("dt and cfl are mutually exclusive".into()));
        }
        for (name, v) in [("dt", n.dt), ("cfl", n.cfl)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if !(n.t_end.is_finite() && n.t_end >= 0.0) {
            return Err(Error::Config(format!("T must be non-negative, got {}", n.t_end)));
        }
        if n.nx < 4 {
            return Err(Error::Config(format!("Nx = {} is too small", n.nx)));
        }
        if self.domain.l2.is_some() != n.ny.is_some() {
            return Err(Error::Config("L2 and Ny must be given together (3D) or both omitted (2D)".into()));
        }
        if n.nz < threshold::MIN_NZ {
            return Err(Error::Config(format!("Nz = {} < {}", n.nz, threshold::MIN_NZ)));
        }
        if self.output.every == 0 {
            return Err(Error::Config("output.every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<DomainGeometry> {
        let d = &self.domain;
        match d.l2 {
            Some(l2) => DomainGeometry::new_3d(d.l1, l2, d.h),
            None => DomainGeometry::new_2d(d.l1, d.h),
        }
    }

    pub fn profile(&self, require_stabilizing: bool) -> Result<DensityProfile> {
        make_profile(
            self.profile.clone(),
            self.domain.h,
            self.physics.g,
            self.numerics.nz,
            require_stabilizing,
        )
    }

    pub fn grid(&self) -> Result<Grid> {
        let n = &self.numerics;
        Grid::new(self.geometry()?, n.nx, n.ny.unwrap_or(1), n.nz, n.dealias)
    }

    /// Threshold for this configuration.
    pub fn threshold(&self) -> Result<ThresholdResult> {
        let profile = self.profile(false)?;
        threshold::kappa_c(&profile, &self.geometry()?, self.numerics.nz.max(threshold::MIN_NZ), self.numerics.modes)
    }

    /// Expand `kappa_rel` through the computed threshold.
    pub fn resolve_kappa(&self) -> Result<ResolvedKappa> {
        match (self.physics.kappa, self.physics.kappa_rel) {
            (Some(kappa), _) => Ok(ResolvedKappa {
                kappa,
                kappa_rel: None,
                kappa_c: None,
            }),
            (None, Some(rel)) => {
                let kc = self.threshold()?.kappa_c;
                Ok(ResolvedKappa {
                    kappa: rel * kc,
                    kappa_rel: Some(rel),
                    kappa_c: Some(kc),
                })
            }
            (None, None) => Err(Error::Config("one of kappa or kappa_rel is required".into())),
        }
    }

    /// Time step: `dt` if given, else `cfl * dx_min / u_ref` capped at [`DT_CAP`],
    /// with `u_ref` the initial velocity amplitude; rounded so that `T / dt` is an integer.
    pub fn time_step(&self) -> Result<f64> {
        let n = &self.numerics;
        let raw = match n.dt {
            Some(dt) => dt,
            None => {
                let cfl = n.cfl.unwrap_or(0.4);
                let geo = self.geometry()?;
                let mut dx = geo.period_x() / n.nx as f64;
                if let Some(ny) = n.ny {
                    dx = dx.min(geo.period_y() / ny as f64);
                }
                // smallest Chebyshev spacing
                let nzf = (n.nz - 1) as f64;
                dx = dx.min(0.5 * geo.h * (1.0 - (std::f64::consts::PI / nzf).cos()));
                let p = &self.perturbation;
                let u = (p.amplitude * p.velocity_scale.abs()).max(f64::MIN_POSITIVE);
                (cfl * dx / u).min(DT_CAP)
            }
        };
        if n.t_end > 0.0 {
            let steps = (n.t_end / raw).ceil().max(1.0);
            Ok(n.t_end / steps)
        } else {
            Ok(raw)
        }
    }

    /// Build model, initial state and time step.
    pub fn build(&self, linearized: bool) -> Result<RunSetup> {
        let kappa = self.resolve_kappa()?;
        let profile = self.profile(false)?;
        let params = PhysicsParams {
            mu: self.physics.mu,
            kappa: kappa.kappa,
            g: self.physics.g,
        };
        let model = Model::new(self.grid()?, &profile, params, linearized)?;
        let state = init_state(&model.profile, &model.grid, &self.perturbation)?;
        Ok(RunSetup {
            model,
            state,
            dt: self.time_step()?,
            kappa,
        })
    }
}
