use std::fs::{File, OpenOptions};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::energy::{energy_e, energy_el};
use crate::error::Result;
use crate::solver::{Model, NSKState, Stepper, TimeDerivatives};
use crate::spectral::{divergence, sobolev_norm_spectral, sobolev_norm_vec};

/// Vertical resolution from which order-3 and order-4 vertical derivatives are trusted.
pub const TRUSTED_NZ: usize = 64;

/// Column order of the time-series CSV.
pub const CSV_COLUMNS: [&str; 30] = [
    "t",
    "mass",
    "mom1",
    "mom2",
    "div_max",
    "rho_min",
    "rho_max",
    "wall_rho",
    "wall_d3rho",
    "wall_d3sq_rho",
    "E_L",
    "E_rho",
    "E_d1rho",
    "kinetic",
    "dissipation",
    "n_rho_h0",
    "n_rho_h1",
    "n_rho_h2",
    "n_rho_h3",
    "n_rho_h4",
    "n_v_h0",
    "n_v_h1",
    "n_v_h2",
    "n_v_h3",
    "n_rho_t_h2",
    "n_v_t_h1",
    "tang_E",
    "tang_D",
    "scriptE",
    "scriptD",
];

/// One diagnostic row.
///
/// `mass` is the total mass `int (rho_bar + rho)`, `mom_i = int (rho_bar + rho) v_i`
/// (`int rho_bar v_i` for the linearized model, whose conserved momentum it is),
/// `wall_d3rho` is the wall trace of `d3 (rho_bar + rho)`. Norms `n_*_hi`
/// are `H^i` norms; `tang_E`, `tang_D` are the tangential energy and
/// dissipation, `scriptE`, `scriptD` the high-order ones. `E_rho` and
/// `E_d1rho` are NaN when the profile is not increasing. `trusted` (not
/// written to CSV) is false when `Nz` is too small for the order-3/4 terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub mass: f64,
    pub mom1: f64,
    pub mom2: f64,
    pub div_max: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub wall_rho: f64,
    pub wall_d3rho: f64,
    pub wall_d3sq_rho: f64,
    #[serde(rename = "E_L")]
    pub e_l: f64,
    #[serde(rename = "E_rho")]
    pub e_rho: f64,
    #[serde(rename = "E_d1rho")]
    pub e_d1rho: f64,
    pub kinetic: f64,
    pub dissipation: f64,
    pub n_rho_h0: f64,
    pub n_rho_h1: f64,
    pub n_rho_h2: f64,
    pub n_rho_h3: f64,
    pub n_rho_h4: f64,
    pub n_v_h0: f64,
    pub n_v_h1: f64,
    pub n_v_h2: f64,
    pub n_v_h3: f64,
    pub n_rho_t_h2: f64,
    pub n_v_t_h1: f64,
    #[serde(rename = "tang_E")]
    pub tang_e: f64,
    #[serde(rename = "tang_D")]
    pub tang_d: f64,
    #[serde(rename = "scriptE")]
    pub script_e: f64,
    #[serde(rename = "scriptD")]
    pub script_d: f64,
    #[serde(skip)]
    pub trusted: bool,
}

/// Diagnostics of the stepper's current state.
pub fn energy_report(stepper: &Stepper) -> Result<EnergyReport> {
    let state = stepper.state();
    let d = stepper.model().rhs(&state)?;
    energy_report_for(stepper.model(), &state, &d)
}

/// Diagnostics of a state with precomputed time derivatives.
pub fn energy_report_for(model: &Model, state: &NSKState, d: &TimeDerivatives) -> Result<EnergyReport> {
    let grid = &model.grid;
    let p = &model.profile;
    let kappa = model.params.kappa;
    let n = grid.len();
    let nh = grid.nh();
    let comps: &[usize] = if grid.is_3d() { &[0, 1, 2] } else { &[0, 2] };

    let total: Vec<f64> = (0..n).map(|i| p.rho_bar[i / nh] + state.rho[i]).collect();
    let ones = vec![1.0; grid.nz];
    let mass = grid.integrate(&total);
    let carrier = if model.linearized {
        (0..n).map(|i| p.rho_bar[i / nh]).collect()
    } else {
        total.clone()
    };
    let mom1 = grid.inner_weighted(&ones, &carrier, &state.vel[0]);
    let mom2 = grid.inner_weighted(&ones, &carrier, &state.vel[1]);
    let div_max = divergence(grid, &state.vel).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rho_min = total.iter().cloned().fold(f64::INFINITY, f64::min);
    let rho_max = total.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let rho = grid.forward(&state.rho);
    let d3 = grid.inverse(&grid.dz(&rho, 1));
    let d33 = grid.inverse(&grid.dz(&rho, 2));
    let last = grid.nz - 1;
    let (mut wall_rho, mut wall_d3rho, mut wall_d3sq_rho) = (0.0f64, 0.0f64, 0.0f64);
    for (iz, base) in [(0, 0), (last, last * nh)] {
        for i in base..base + nh {
            wall_rho = wall_rho.max(state.rho[i].abs());
            wall_d3rho = wall_d3rho.max((p.d1[iz] + d3[i]).abs());
            wall_d3sq_rho = wall_d3sq_rho.max(d33[i].abs());
        }
    }

    let e_l = energy_el(grid, p, kappa, &state.rho)?;
    let (e_rho, e_d1rho) = match energy_e(grid, p, kappa, &state.rho) {
        Ok(e) => {
            let mut e1 = 0.0;
            for axis in 1..=(if grid.is_3d() { 2 } else { 1 }) {
                e1 += energy_e(grid, p, kappa, &grid.inverse(&grid.dh(&rho, axis, 1)))?;
            }
            (e, e1)
        }
        Err(_) => (f64::NAN, f64::NAN),
    };

    let v: Vec<Vec<Complex64>> = state.vel.iter().map(|f| grid.forward(f)).collect();
    let vt: Vec<Vec<Complex64>> = d.v_t.iter().map(|f| grid.forward(f)).collect();
    let rho_t = grid.forward(&d.rho_t);
    let vrefs: Vec<&[Complex64]> = comps.iter().map(|&c| v[c].as_slice()).collect();
    let vtrefs: Vec<&[Complex64]> = comps.iter().map(|&c| vt[c].as_slice()).collect();
    let nr = |i: usize, j: usize| sobolev_norm_spectral(grid, &rho, i, j);
    let nrt = |i: usize| sobolev_norm_spectral(grid, &rho_t, i, 0);
    let nv = |i: usize, j: usize| sobolev_norm_vec(grid, &vrefs, i, j);
    let nvt = |i: usize| sobolev_norm_vec(grid, &vtrefs, i, 0);
    let v3 = &v[2];
    let dv3 = grid.dz(v3, 1);
    let n3 = |i: usize| sobolev_norm_spectral(grid, v3, i, 0).powi(2) + sobolev_norm_spectral(grid, &dv3, i, 0).powi(2);

    let kinetic: f64 = comps
        .iter()
        .map(|&c| {
            let sq: Vec<f64> = state.vel[c].iter().map(|x| x * x).collect();
            grid.inner_weighted(&ones, &total, &sq)
        })
        .sum();
    let grad_v = nv(1, 0).powi(2) - nv(0, 0).powi(2);

    let tang_e = nr(2, 1).powi(2) + nrt(2).powi(2) + nvt(0).powi(2) + n3(1) + nv(1, 1).powi(2);
    let tang_d = nr(1, 1).powi(2)
        + nr(1, 2).powi(2)
        + nrt(1).powi(2)
        + nvt(1).powi(2)
        + n3(2)
        + nv(2, 1).powi(2);
    let script_e = nr(4, 0).powi(2) + nrt(3).powi(2) + nv(3, 0).powi(2) + nvt(1).powi(2);
    let script_d = nv(4, 0).powi(2) + nr(3, 1).powi(2) + nrt(3).powi(2) + nvt(2).powi(2);

    Ok(EnergyReport {
        t: state.t,
        mass,
        mom1,
        mom2,
        div_max,
        rho_min,
        rho_max,
        wall_rho,
        wall_d3rho,
        wall_d3sq_rho,
        e_l,
        e_rho,
        e_d1rho,
        kinetic,
        dissipation: 2.0 * model.params.mu * grad_v,
        n_rho_h0: nr(0, 0),
        n_rho_h1: nr(1, 0),
        n_rho_h2: nr(2, 0),
        n_rho_h3: nr(3, 0),
        n_rho_h4: nr(4, 0),
        n_v_h0: nv(0, 0),
        n_v_h1: nv(1, 0),
        n_v_h2: nv(2, 0),
        n_v_h3: nv(3, 0),
        n_rho_t_h2: nrt(2),
        n_v_t_h1: nvt(1),
        tang_e,
        tang_d,
        script_e,
        script_d,
        trusted: grid.nz >= TRUSTED_NZ,
    })
}

/// Streaming CSV writer for [`EnergyReport`] rows.
pub struct TimeseriesWriter {
    inner: csv::Writer<File>,
}

impl TimeseriesWriter {
    /// Create (truncate) `path` and write the header.
    pub fn create(path: &Path) -> Result<Self> {
        Ok(TimeseriesWriter {
            inner: csv::WriterBuilder::new().has_headers(true).from_path(path)?,
        })
    }

    /// Append rows to an existing file without repeating the header.
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(TimeseriesWriter {
            inner: csv::WriterBuilder::new().has_headers(false).from_writer(file),
        })
    }

    pub fn write(&mut self, row: &EnergyReport) -> Result<()> {
        self.inner.serialize(row)?;
        self.inner.flush()?;
        Ok(())
    }
}

/// Read a time series written by [`TimeseriesWriter`].
pub fn read_timeseries(path: &Path) -> Result<Vec<EnergyReport>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}
