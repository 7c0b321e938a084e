use num_complex::Complex64;

use super::{NSKState, PhysicsParams};
use crate::error::{Error, Result};
use crate::profiles::DensityProfile;
use crate::spectral::{Grid, Projector};

pub(crate) type Spec = Vec<Complex64>;

/// Fixed-point iterations allowed when inverting `(rho_bar + rho) v_t`.
const MAX_DENSITY_ITERATIONS: usize = 200;

/// Time derivatives of a state, with the multiplier that enforces `div v_t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDerivatives {
    pub rho_t: Vec<f64>,
    pub v_t: [Vec<f64>; 3],
    pub beta: Vec<f64>,
}

/// Discrete model: grid, sampled equilibrium, coefficients.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: Grid,
    /// equilibrium sampled on `grid.z`
    pub profile: DensityProfile,
    pub params: PhysicsParams,
    /// drop every nonlinear term (advection, capillary product, `rho v_t`)
    pub linearized: bool,
    projector: Projector,
}

pub(crate) fn zeros(n: usize) -> Spec {
    vec![Complex64::new(0.0, 0.0); n]
}

impl Model {
    pub fn new(grid: Grid, profile: &DensityProfile, params: PhysicsParams, linearized: bool) -> Result<Self> {
        params.validate()?;
        if (profile.h - grid.geometry.h).abs() > 1e-12 * grid.geometry.h {
            return Err(Error::Config(format!(
                "profile height {} differs from domain height {}",
                profile.h, grid.geometry.h
            )));
        }
        let mut profile = if profile.nz() == grid.nz {
            profile.clone()
        } else {
            profile.resample(grid.nz)?
        };
        profile.g = params.g;
        if profile.min_rho() <= 0.0 {
            return Err(Error::NonPositiveDensity {
                min: profile.min_rho(),
                at: f64::NAN,
            });
        }
        let projector = Projector::new(&grid, &profile.rho_bar);
        Ok(Model {
            grid,
            profile,
            params,
            linearized,
            projector,
        })
    }

    /// Forward transform with the 2/3 truncation applied.
    pub(crate) fn fwd(&self, f: &[f64]) -> Spec {
        let mut s = self.grid.forward(f);
        self.grid.truncate(&mut s);
        s
    }

    pub(crate) fn inv(&self, s: &[Complex64]) -> Vec<f64> {
        self.grid.inverse(s)
    }

    /// Spectral divergence of a vector of spectral fields.
    pub(crate) fn div(&self, f: [&[Complex64]; 3]) -> Spec {
        let g = &self.grid;
        let mut d = g.dh(f[0], 1, 1);
        if g.is_3d() {
            for (a, b) in d.iter_mut().zip(g.dh(f[1], 2, 1)) {
                *a += b;
            }
        }
        for (a, b) in d.iter_mut().zip(g.dz(f[2], 1)) {
            *a += b;
        }
        d
    }

    /// `d_axis` of a spectral field, axis 1..=3.
    pub(crate) fn d(&self, s: &[Complex64], axis: usize) -> Spec {
        match axis {
            1 | 2 => self.grid.dh(s, axis, 1),
            _ => self.grid.dz(s, 1),
        }
    }

    pub(crate) fn laplacian(&self, s: &[Complex64]) -> Spec {
        let g = &self.grid;
        let mut out = g.dz(s, 2);
        for (o, v) in out.iter_mut().zip(g.dh(s, 1, 2)) {
            *o += v;
        }
        if g.is_3d() {
            for (o, v) in out.iter_mut().zip(g.dh(s, 2, 2)) {
                *o += v;
            }
        }
        out
    }

    /// Active velocity components: `[0, 2]` in 2D, `[0, 1, 2]` in 3D.
    pub(crate) fn components(&self) -> &'static [usize] {
        if self.grid.is_3d() {
            &[0, 1, 2]
        } else {
            &[0, 2]
        }
    }

    /// Dealiased product of two physical fields.
    pub(crate) fn product(&self, a: &[f64], b: &[f64]) -> Spec {
        let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        self.fwd(&p)
    }

    /// Spectral `rho v` for spectral `rho`, `v`.
    pub(crate) fn mass_flux(&self, rho: &[Complex64], v: &[Spec; 3]) -> [Spec; 3] {
        let n = self.grid.len();
        let r = self.inv(rho);
        let mut out = [zeros(n), zeros(n), zeros(n)];
        for &c in self.components() {
            out[c] = self.product(&r, &self.inv(&v[c]));
        }
        out
    }

    /// Nonlinear terms in conservation form: `-div(rho v)` for the density and
    /// `-div(rho v (x) v) - kappa [div(grad rho (x) grad rho) - grad |grad rho|^2 / 2]`
    /// for the momentum `(rho_bar + rho) v`.
    pub(crate) fn nonlinear(&self, rho: &[Complex64], v: &[Spec; 3]) -> (Spec, [Spec; 3]) {
        let n = self.grid.len();
        let nh = self.grid.nh();
        let kappa = self.params.kappa;
        let comps = self.components();
        let r = self.inv(rho);
        let vel: Vec<Vec<f64>> = (0..3)
            .map(|c| if comps.contains(&c) { self.inv(&v[c]) } else { vec![0.0; n] })
            .collect();
        let grad: Vec<Vec<f64>> = (0..3)
            .map(|c| {
                if comps.contains(&c) {
                    self.inv(&self.d(rho, c + 1))
                } else {
                    vec![0.0; n]
                }
            })
            .collect();
        let dens: Vec<f64> = (0..n).map(|i| self.profile.rho_bar[i / nh] + r[i]).collect();

        let mut flux = [zeros(n), zeros(n), zeros(n)];
        for &c in comps {
            flux[c] = self.product(&r, &vel[c]);
        }
        let mut nm = self.div([&flux[0], &flux[1], &flux[2]]);
        nm.iter_mut().for_each(|c| *c = -*c);
        self.pin_wall_rows(&mut nm);

        let half_sq: Vec<f64> = (0..n)
            .map(|i| 0.5 * kappa * comps.iter().map(|&c| grad[c][i] * grad[c][i]).sum::<f64>())
            .collect();
        let s_hat = self.fwd(&half_sq);
        let mut mom = [zeros(n), zeros(n), zeros(n)];
        for &i in comps {
            let mut t = [zeros(n), zeros(n), zeros(n)];
            for &j in comps {
                let tij: Vec<f64> = (0..n)
                    .map(|p| dens[p] * vel[i][p] * vel[j][p] + kappa * grad[i][p] * grad[j][p])
                    .collect();
                t[j] = self.fwd(&tij);
            }
            let dt = self.div([&t[0], &t[1], &t[2]]);
            let ds = self.d(&s_hat, i + 1);
            mom[i] = dt.iter().zip(&ds).map(|(a, b)| b - a).collect();
        }
        (nm, mom)
    }

    /// `div(rho v)` vanishes on the walls (`rho = v3 = 0` there) but the
    /// collocated derivative of the product picks up aliasing error. Zero
    /// the wall rows and put the removed integral of the mean mode back
    /// with the wall-vanishing weight `x3 (h - x3)`, so mass stays exact.
    fn pin_wall_rows(&self, nm: &mut [Complex64]) {
        let g = &self.grid;
        let nh = g.nh();
        let last = (g.nz - 1) * nh;
        let before: Complex64 = (0..g.nz).map(|iz| nm[iz * nh] * g.weights[iz]).sum();
        for i in 0..nh {
            nm[i] = Complex64::new(0.0, 0.0);
            nm[last + i] = Complex64::new(0.0, 0.0);
        }
        let after: Complex64 = (0..g.nz).map(|iz| nm[iz * nh] * g.weights[iz]).sum();
        let h = g.geometry.h;
        let bump: Vec<f64> = g.z.iter().map(|z| z * (h - z)).collect();
        let norm: f64 = bump.iter().zip(&g.weights).map(|(b, w)| b * w).sum();
        let alpha = (before - after) / norm;
        for iz in 0..g.nz {
            nm[iz * nh] += alpha * bump[iz];
        }
    }

    /// Linear force `mu lap v - g rho e3 - kappa (rho_bar'' grad rho + rho_bar' lap rho e3)`.
    pub(crate) fn linear_force(&self, rho: &[Complex64], v: &[Spec; 3]) -> [Spec; 3] {
        let n = self.grid.len();
        let PhysicsParams { mu, kappa, g } = self.params;
        let p = &self.profile;
        let mut out = [zeros(n), zeros(n), zeros(n)];
        let lap_rho = self.laplacian(rho);
        for &c in self.components() {
            let lv = self.laplacian(&v[c]);
            let dr = self.d(rho, c + 1);
            let curv = self.grid.scale_by_profile(&dr, &p.d2);
            out[c] = (0..n).map(|i| lv[i] * mu - curv[i] * kappa).collect();
        }
        let grav = self.grid.scale_by_profile(&lap_rho, &p.d1);
        for i in 0..n {
            out[2][i] -= rho[i] * g + grav[i] * kappa;
        }
        out
    }

    pub(crate) fn to_spectral(&self, state: &NSKState) -> (Spec, [Spec; 3], Spec) {
        let n = self.grid.len();
        let mut v = [zeros(n), zeros(n), zeros(n)];
        for &c in self.components() {
            v[c] = self.fwd(&state.vel[c]);
        }
        (self.fwd(&state.rho), v, self.fwd(&state.beta))
    }

    /// Minimum of the total density `rho_bar + rho` on the grid.
    pub fn min_density(&self, rho: &[f64]) -> f64 {
        let nh = self.grid.nh();
        rho.iter()
            .enumerate()
            .map(|(i, r)| self.profile.rho_bar[i / nh] + r)
            .fold(f64::INFINITY, f64::min)
    }

    /// Weighted projection `rho_bar w + grad p = G` (spectral in and out).
    pub(crate) fn project(&self, g: &[Spec; 3]) -> ([Spec; 3], Spec) {
        self.projector.apply(&self.grid, g)
    }

    /// Evaluate `(rho_t, v_t, beta)` at a state.
    ///
    /// The density equation is explicit; `v_t` solves
    /// `(rho_bar + rho) v_t + grad beta = F`, `div v_t = 0`, `v_t . e3 = 0` on the walls,
    /// by a fixed point on the `rho v_t` part around the `rho_bar`-weighted projection.
    pub fn rhs(&self, state: &NSKState) -> Result<TimeDerivatives> {
        let n = self.grid.len();
        // the linearized system weights by rho_bar alone, so vacuum cannot occur
        if !self.linearized {
            let min = self.min_density(&state.rho);
            if min <= 0.0 || !min.is_finite() {
                return Err(Error::Vacuum { min, t: state.t });
            }
        }
        let (rho, v, _) = self.to_spectral(state);
        let mut rho_t = self.grid.scale_by_profile(&v[2], &self.profile.d1);
        rho_t.iter_mut().for_each(|c| *c = -*c);
        let mut force = self.linear_force(&rho, &v);
        if self.linearized {
            let (w, beta) = self.project(&force);
            return Ok(self.physical_derivatives(&rho_t, &w, &beta));
        }
        let (nm, mom) = self.nonlinear(&rho, &v);
        for (a, b) in rho_t.iter_mut().zip(&nm) {
            *a += b;
        }
        // momentum form to velocity form: (rho_bar + rho) v_t = q_t - rho_t v
        let rt = self.inv(&rho_t);
        for &c in self.components() {
            let corr = self.product(&rt, &self.inv(&v[c]));
            for i in 0..n {
                force[c][i] += mom[c][i] - corr[i];
            }
        }
        let r = self.inv(&rho);
        let (mut w, _) = self.project(&force);
        let scale = w.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        // rounding floor: a steady balance can leave `force` much larger than `w`
        let floor = force.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max) / self.profile.min_rho();
        for _ in 0..MAX_DENSITY_ITERATIONS {
            let mut g = force.clone();
            for &c in self.components() {
                let rv = self.product(&r, &self.inv(&w[c]));
                for i in 0..n {
                    g[c][i] -= rv[i];
                }
            }
            let (w_new, beta) = self.project(&g);
            let change = w_new
                .iter()
                .flatten()
                .zip(w.iter().flatten())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            w = w_new;
            if change <= 1e-14 * scale + 1e-13 * floor {
                return Ok(self.physical_derivatives(&rho_t, &w, &beta));
            }
            if !change.is_finite() {
                break;
            }
        }
        Err(Error::ImplicitSolve {
            mode: 0,
            reason: "density-weighted inversion of v_t did not converge".into(),
        })
    }

    fn physical_derivatives(&self, rho_t: &[Complex64], w: &[Spec; 3], beta: &[Complex64]) -> TimeDerivatives {
        TimeDerivatives {
            rho_t: self.inv(rho_t),
            v_t: [self.inv(&w[0]), self.inv(&w[1]), self.inv(&w[2])],
            beta: self.inv(beta),
        }
    }
}
