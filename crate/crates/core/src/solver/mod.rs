//! Time integration of the perturbation system around an equilibrium
//! `(rho_bar, 0, P_bar)`:
//!
//! ```text
//! rho_t = -rho_bar' v3 - v . grad rho
//! (rho_bar + rho) (v_t + v . grad v) + grad beta
//!     = mu lap v - g rho e3 - kappa (rho_bar'' grad rho + rho_bar' lap rho e3 + grad rho lap rho)
//! div v = 0,   v3 = d3 v1 = d3 v2 = 0 on x3 = 0, h
//! ```
//!
//! Stiff linear terms are implicit and solved mode by mode; the nonlinear
//! terms are explicit, written in conservation form and dealiased.

mod init;
mod model;
mod run;
mod stepper;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::snapshot::{read_snapshot, write_snapshot, SnapshotMeta};
use crate::spectral::Grid;

pub use init::{init_state, lift_shape, ModeIndex, PerturbationSpec, VerticalShape};
pub use model::{Model, TimeDerivatives};
pub use run::{run, RunOutcome, RunSink, RunStatus, VecSink};
pub use stepper::{Checkpoint, Stepper};

/// Constant physical coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub mu: f64,
    pub kappa: f64,
    pub g: f64,
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        // mu = 0 is accepted for right-hand-side evaluation; time stepping needs mu > 0
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::Config(format!("mu must be non-negative, got {}", self.mu)));
        }
        // kappa = 0 is allowed for classical (uninhibited) instability runs
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::Config(format!("kappa must be non-negative, got {}", self.kappa)));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::Config(format!("g must be positive, got {}", self.g)));
        }
        Ok(())
    }
}

/// Time discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// second order, started with one `ImexEuler` step
    #[default]
    ImexBdf2,
    ImexEuler,
}

/// Perturbation fields in physical space.
#[derive(Debug, Clone, PartialEq)]
pub struct NSKState {
    /// density perturbation `rho`
    pub rho: Vec<f64>,
    /// velocity `(v1, v2, v3)`; `v2` is identically zero in 2D
    pub vel: [Vec<f64>; 3],
    /// pressure-like multiplier, zero mean
    pub beta: Vec<f64>,
    pub t: f64,
}

impl NSKState {
    pub fn zeros(len: usize) -> Self {
        NSKState {
            rho: vec![0.0; len],
            vel: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
            beta: vec![0.0; len],
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.rho
            .iter()
            .chain(self.vel.iter().flatten())
            .chain(&self.beta)
            .all(|v| v.is_finite())
    }

    /// Field names used in snapshots: `v2` only in 3D.
    pub fn field_names(grid: &Grid) -> Vec<String> {
        let names: &[&str] = if grid.is_3d() {
            &["rho", "v1", "v2", "v3", "beta"]
        } else {
            &["rho", "v1", "v3", "beta"]
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Write `<stem>.bin` and `<stem>.json`.
    pub fn write_snapshot(&self, stem: &Path, grid: &Grid) -> Result<()> {
        let meta = SnapshotMeta::for_grid(grid, self.t, Self::field_names(grid));
        let mut fields: Vec<&[f64]> = vec![&self.rho, &self.vel[0]];
        if grid.is_3d() {
            fields.push(&self.vel[1]);
        }
        fields.push(&self.vel[2]);
        fields.push(&self.beta);
        write_snapshot(stem, &meta, &fields)
    }

    /// Read a snapshot written by [`NSKState::write_snapshot`].
    pub fn read_snapshot(stem: &Path) -> Result<Self> {
        let (meta, data) = read_snapshot(stem)?;
        let get = |name: &str| -> Result<Vec<f64>> {
            meta.field_names
                .iter()
                .position(|n| n == name)
                .map(|k| data[k].clone())
                .ok_or_else(|| Error::Snapshot(format!("{} lacks field {name}", stem.display())))
        };
        let n = meta.points();
        let v2 = if meta.ny.is_some() { get("v2")? } else { vec![0.0; n] };
        Ok(NSKState {
            rho: get("rho")?,
            vel: [get("v1")?, v2, get("v3")?],
            beta: get("beta")?,
            t: meta.time,
        })
    }
}
