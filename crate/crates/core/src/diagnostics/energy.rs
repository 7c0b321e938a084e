use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profiles::DensityProfile;
use crate::solver::{Model, NSKState};
use crate::spectral::{sobolev_norm_spectral, Grid};

fn check_samples(grid: &Grid, profile: &DensityProfile, f: &[f64]) -> Result<()> {
    if profile.nz() != grid.nz {
        return Err(Error::Resolution(format!(
            "profile sampled on {} nodes, grid has {}",
            profile.nz(),
            grid.nz
        )));
    }
    if f.len() != grid.len() {
        return Err(Error::Resolution("field does not match the grid".into()));
    }
    Ok(())
}

/// `int w(x3) |f|^2` and `int w(x3) |grad f|^2` for a vertical weight.
fn weighted_sq(grid: &Grid, s: &[Complex64], weight: &[f64]) -> (f64, f64) {
    let ds = grid.dz(s, 1);
    let measure = grid.geometry.horizontal_measure();
    let (mut plain, mut grad) = (0.0, 0.0);
    for iz in 0..grid.nz {
        let w = grid.weights[iz] * weight[iz];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let k2 = grid.kx[ix].powi(2) + grid.ky[iy].powi(2);
                let i = grid.idx(iz, iy, ix);
                plain += w * s[i].norm_sqr();
                grad += w * (k2 * s[i].norm_sqr() + ds[i].norm_sqr());
            }
        }
    }
    (plain * measure, grad * measure)
}

/// `E_L(r) = kappa int rho_bar'^2 |grad r|^2 - g int rho_bar' r^2`.
pub fn energy_el(grid: &Grid, profile: &DensityProfile, kappa: f64, f: &[f64]) -> Result<f64> {
    check_samples(grid, profile, f)?;
    let s = grid.forward(f);
    let d1sq: Vec<f64> = profile.d1.iter().map(|d| d * d).collect();
    let (_, grad) = weighted_sq(grid, &s, &d1sq);
    let (plain, _) = weighted_sq(grid, &s, &profile.d1);
    Ok(kappa * grad - profile.g * plain)
}

/// `E(r) = kappa ||grad r||^2 + int (kappa rho_bar''' - g) / rho_bar' r^2`;
/// defined only where `rho_bar' > 0` at every node.
pub fn energy_e(grid: &Grid, profile: &DensityProfile, kappa: f64, f: &[f64]) -> Result<f64> {
    check_samples(grid, profile, f)?;
    if let Some((iz, &d)) = profile
        .d1
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .filter(|(_, &d)| d <= 0.0)
    {
        return Err(Error::StabilizingCondition { min: d, at: grid.z[iz] });
    }
    let s = grid.forward(f);
    let weight: Vec<f64> = (0..grid.nz)
        .map(|j| (kappa * profile.d3[j] - profile.g) / profile.d1[j])
        .collect();
    let (_, grad) = weighted_sq(grid, &s, &vec![1.0; grid.nz]);
    let (plain, _) = weighted_sq(grid, &s, &weight);
    Ok(kappa * grad + plain)
}

/// Terms of the linearized energy identity
/// `d/dt (E(rho) + ||sqrt(rho_bar) v||^2) + 2 mu ||grad v||^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearEnergy {
    /// `E(rho) + int rho_bar |v|^2`
    pub energy: f64,
    /// `2 mu ||grad v||^2`
    pub dissipation: f64,
}

pub fn linear_energy(model: &Model, state: &NSKState) -> Result<LinearEnergy> {
    let grid = &model.grid;
    let p = &model.profile;
    let mut energy = energy_e(grid, p, model.params.kappa, &state.rho)?;
    let mut grad = 0.0;
    for v in &state.vel {
        let s = grid.forward(v);
        let (plain, _) = weighted_sq(grid, &s, &p.rho_bar);
        energy += plain;
        grad += sobolev_norm_spectral(grid, &s, 1, 0).powi(2) - sobolev_norm_spectral(grid, &s, 0, 0).powi(2);
    }
    Ok(LinearEnergy {
        energy,
        dissipation: 2.0 * model.params.mu * grad,
    })
}

/// Wall traces of `v_t` at a state: the data are compatible when both vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityReport {
    /// `max |v_t . e3|` on the walls
    pub normal: f64,
    /// `max |d3 v_t,h|` on the walls
    pub tangential: f64,
}

pub fn compatibility_residuals(model: &Model, state: &NSKState) -> Result<CompatibilityReport> {
    let grid = &model.grid;
    let d = model.rhs(state)?;
    let nh = grid.nh();
    let last = (grid.nz - 1) * nh;
    let walls = |f: &[f64]| {
        f[..nh]
            .iter()
            .chain(&f[last..])
            .fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let mut tangential = 0.0f64;
    for c in 0..2 {
        tangential = tangential.max(walls(&grid.dz(&d.v_t[c], 1)));
    }
    Ok(CompatibilityReport {
        normal: walls(&d.v_t[2]),
        tangential,
    })
}
