use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NSKState;
use crate::error::{Error, Result};
use crate::profiles::DensityProfile;
use crate::spectral::Grid;

/// Horizontal mode `(n1, n2)`, wavevector `(n1 / L1, n2 / L2)`; a bare
/// integer means `(n1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeIndex {
    X(i64),
    XY([i64; 2]),
}

impl ModeIndex {
    pub fn pair(&self) -> (i64, i64) {
        match *self {
            ModeIndex::X(a) => (a, 0),
            ModeIndex::XY([a, b]) => (a, b),
        }
    }
}

/// Vertical envelope of the density bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VerticalShape {
    /// `sin(pi x3 / h)`: vanishes with its second derivative at the walls
    Sine,
    /// `sin^3(pi x3 / h)`: additionally has zero slope at the walls
    #[default]
    SineCubed,
}

impl VerticalShape {
    fn eval(&self, z: f64, h: f64) -> f64 {
        let s = (PI * z / h).sin();
        match self {
            VerticalShape::Sine => s,
            VerticalShape::SineCubed => s * s * s,
        }
    }
}

fn default_modes() -> Vec<ModeIndex> {
    vec![ModeIndex::X(1)]
}

fn default_velocity_scale() -> f64 {
    1.0
}

/// Initial perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub amplitude: f64,
    #[serde(default = "default_modes")]
    pub modes: Vec<ModeIndex>,
    #[serde(default)]
    pub seed: u64,
    /// add the horizontally uniform wall lift of [`lift_shape`] so that `d3 (rho_bar + rho) = 0` on the walls
    #[serde(default)]
    pub lift: bool,
    #[serde(default)]
    pub shape: VerticalShape,
    /// velocity amplitude relative to `amplitude`; 0 starts from rest
    #[serde(default = "default_velocity_scale")]
    pub velocity_scale: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec::single_mode(1e-3)
    }
}

impl PerturbationSpec {
    pub fn single_mode(amplitude: f64) -> Self {
        PerturbationSpec {
            amplitude,
            modes: default_modes(),
            seed: 0,
            lift: false,
            shape: VerticalShape::default(),
            velocity_scale: 1.0,
        }
    }
}

/// Wall lift with `L = L'' = 0` on both walls, `L' = -s0` at `x3 = 0` and
/// `L' = -s1` at `x3 = h`; returns `[L, L', L'']`.
///
/// `L = -h (s0 p(x3/h) - s1 p(1 - x3/h))` with `p(x) = x (1 + 3x) (1 - x)^3`.
pub fn lift_shape(z: f64, h: f64, s0: f64, s1: f64) -> [f64; 3] {
    let p = |x: f64| x * (1.0 + x * x * (-6.0 + x * (8.0 - 3.0 * x)));
    let dp = |x: f64| 1.0 + x * x * (-18.0 + x * (32.0 - 15.0 * x));
    let ddp = |x: f64| x * (-36.0 + x * (96.0 - 60.0 * x));
    let (x, y) = (z / h, 1.0 - z / h);
    [
        -h * (s0 * p(x) - s1 * p(y)),
        -(s0 * dp(x) + s1 * dp(y)),
        -(s0 * ddp(x) - s1 * ddp(y)) / h,
    ]
}

/// Build the initial perturbation on `grid`.
///
/// `rho = lift L + amplitude * shape(x3) * sum_m cos(xi_m . x + phase_m)`;
/// the velocity has `v3 = amplitude * velocity_scale * sin(pi x3 / h) * sum_m sin(xi_m . x + phase_m)`
/// with horizontal components fixed by `div v = 0` and zero vertical vorticity,
/// then shifted so that `int (rho_bar + rho) v_h = 0`.
pub fn init_state(profile: &DensityProfile, grid: &Grid, spec: &PerturbationSpec) -> Result<NSKState> {
    if !(spec.amplitude.is_finite() && spec.amplitude >= 0.0) {
        return Err(Error::Config(format!("amplitude must be >= 0, got {}", spec.amplitude)));
    }
    if profile.nz() != grid.nz || (profile.h - grid.geometry.h).abs() > 1e-12 * grid.geometry.h {
        return Err(Error::Resolution("profile is not sampled on the solver grid".into()));
    }
    let h = grid.geometry.h;
    let l1 = grid.geometry.l1;
    let l2 = grid.geometry.l2.unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut waves = Vec::new();
    for m in &spec.modes {
        let (a, b) = m.pair();
        if (a, b) == (0, 0) {
            return Err(Error::Config("perturbation mode (0, 0) is not a horizontal mode".into()));
        }
        if !grid.is_3d() && b != 0 {
            return Err(Error::Config(format!("mode ({a}, {b}) needs a 3D domain")));
        }
        if a.unsigned_abs() as usize > grid.max_mode_x() || b.unsigned_abs() as usize > grid.max_mode_y() {
            return Err(Error::Resolution(format!(
                "mode ({a}, {b}) exceeds the resolved range ({}, {})",
                grid.max_mode_x(),
                grid.max_mode_y()
            )));
        }
        let phase = if spec.modes.len() > 1 || spec.seed != 0 {
            rng.random_range(0.0..2.0 * PI)
        } else {
            0.0
        };
        waves.push((a as f64 / l1, b as f64 / l2, phase));
    }
    let mut state = NSKState::zeros(grid.len());
    if spec.amplitude == 0.0 && !spec.lift {
        return Ok(state);
    }
    let delta = spec.amplitude;
    let nh = grid.nh();
    for (iz, &z) in grid.z.iter().enumerate() {
        let shape = spec.shape.eval(z, h);
        let lift = if spec.lift {
            lift_shape(z, h, profile.eval(0.0)[1], profile.eval(h)[1])[0]
        } else {
            0.0
        };
        let vz = delta * spec.velocity_scale * (PI * z / h).sin();
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let (x, y) = (grid.x[ix], grid.y[iy]);
                let mut c = 0.0;
                let mut s = 0.0;
                for &(k1, k2, ph) in &waves {
                    let arg = k1 * x + k2 * y + ph;
                    c += arg.cos();
                    s += arg.sin();
                }
                let i = iz * nh + iy * grid.nx + ix;
                state.rho[i] = lift + delta * shape * c;
                state.vel[2][i] = vz * s;
            }
        }
    }
    // the wall rows are exact zeros whatever rounding sin(pi) produced
    for i in 0..nh {
        state.vel[2][i] = 0.0;
        state.vel[2][(grid.nz - 1) * nh + i] = 0.0;
        if !spec.lift {
            state.rho[i] = 0.0;
            state.rho[(grid.nz - 1) * nh + i] = 0.0;
        }
    }
    if spec.velocity_scale != 0.0 && delta != 0.0 {
        let s3 = grid.forward(&state.vel[2]);
        let ds3 = grid.dz(&s3, 1);
        let mut s1 = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut s2 = s1.clone();
        let i = Complex64::new(0.0, 1.0);
        for m in grid.modes(false) {
            if m.is_mean() {
                continue;
            }
            for iz in 0..grid.nz {
                let j = grid.idx(iz, m.iy, m.ix);
                s1[j] = i * m.kx * ds3[j] / m.k2;
                s2[j] = i * m.ky * ds3[j] / m.k2;
            }
        }
        state.vel[0] = grid.inverse(&s1);
        if grid.is_3d() {
            state.vel[1] = grid.inverse(&s2);
        }
        // remove the density-weighted horizontal mean velocity
        let rho_total: Vec<f64> = (0..grid.len())
            .map(|j| profile.rho_bar[j / nh] + state.rho[j])
            .collect();
        let one = vec![1.0; grid.nz];
        let mass = grid.inner_weighted(&one, &rho_total, &vec![1.0; grid.len()]);
        for c in 0..2 {
            let mom = grid.inner_weighted(&one, &rho_total, &state.vel[c]);
            let shift = mom / mass;
            state.vel[c].iter_mut().for_each(|v| *v -= shift);
        }
        if !grid.is_3d() {
            state.vel[1].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    Ok(state)
}
