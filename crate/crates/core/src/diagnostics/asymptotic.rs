use serde::{Deserialize, Serialize};

use super::fit::RateModel;
use crate::error::{Error, Result};
use crate::spectral::{sobolev_norm, Grid};

/// Late-time limit of the density perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDensity {
    /// Estimate of the limit `rho_inf(x3)`: horizontal mean of the last snapshot, on `grid.z`.
    pub rho_inf: Vec<f64>,
    /// `(t, ||rho(t) - rho_inf||_1)` per snapshot
    pub residuals: Vec<(f64, f64)>,
    /// Fitted algebraic rate of the residual; `None` when already converged.
    pub rate: Option<f64>,
    pub r2: Option<f64>,
    /// Largest non-mean Fourier amplitude of the last snapshot.
    pub final_mode_amplitude: f64,
    pub converged: bool,
}

/// Estimate `rho_inf` and the algebraic rate of `||rho(t) - rho_inf||_1` from
/// snapshots `(t, rho)` ordered in time.
pub fn asymptotic_density(grid: &Grid, snapshots: &[(f64, Vec<f64>)]) -> Result<AsymptoticDensity> {
    if snapshots.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 snapshots, got {}", snapshots.len())));
    }
    if snapshots.iter().any(|(_, r)| r.len() != grid.len()) {
        return Err(Error::Resolution("snapshot does not match the grid".into()));
    }
    let nh = grid.nh();
    let last = &snapshots[snapshots.len() - 1].1;
    let rho_inf = grid.horizontal_mean(last);
    let residuals: Vec<(f64, f64)> = snapshots
        .iter()
        .map(|(t, r)| {
            let d: Vec<f64> = r.iter().enumerate().map(|(i, v)| v - rho_inf[i / nh]).collect();
            (*t, sobolev_norm(grid, &d, 1, 0))
        })
        .collect();
    let spec = grid.forward(last);
    let mut final_mode_amplitude = 0.0f64;
    for m in grid.modes(false) {
        if !m.is_mean() {
            for iz in 0..grid.nz {
                final_mode_amplitude = final_mode_amplitude.max(spec[grid.idx(iz, m.iy, m.ix)].norm());
            }
        }
    }
    let scale = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    let fit_points: Vec<(f64, f64)> = residuals.iter().cloned().filter(|r| r.1 > 0.0).collect();
    // residuals at rounding level of the field itself count as converged
    let floor = 1e-12 * sobolev_norm(grid, last, 1, 0);
    if scale <= floor || fit_points.len() < 2 {
        return Ok(AsymptoticDensity {
            rho_inf,
            residuals,
            rate: None,
            r2: None,
            final_mode_amplitude,
            converged: true,
        });
    }
    if residuals[residuals.len() - 1].1 > residuals[0].1 {
        return Err(Error::Fit("run flagged unstable: the density residual grows".into()));
    }
    let (rate, r2) = log_fit(&fit_points, RateModel::Algebraic);
    Ok(AsymptoticDensity {
        rho_inf,
        residuals,
        rate: Some(rate),
        r2: Some(r2),
        final_mode_amplitude,
        converged: false,
    })
}

fn log_fit(points: &[(f64, f64)], model: RateModel) -> (f64, f64) {
    let xs: Vec<f64> = points
        .iter()
        .map(|(t, _)| match model {
            RateModel::Algebraic => (1.0 + t).ln(),
            RateModel::Exponential => *t,
        })
        .collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let rate = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - rate * (x - mx)).powi(2)).sum();
    (rate, if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 })
}
