use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::json;

use super::model::{zeros, Spec};
use super::{Model, NSKState, Scheme, TimeDerivatives};
use crate::chebyshev;
use crate::error::{Error, Result};
use crate::spectral::projection::{k2_key, matvec, solve_complex, Lu};
use crate::spectral::snapshot::{read_snapshot, write_snapshot, SnapshotMeta};
use crate::spectral::Mode;

/// Fixed-point iterations allowed for the lagged `rho v` product per step.
const MAX_PRODUCT_ITERATIONS: usize = 200;
const PRODUCT_TOL: f64 = 1e-12;

/// Factorised operators of one wavenumber at one implicit coefficient `a`.
#[derive(Debug, Clone)]
struct ModeOps {
    v3: Lu,
    omega: Option<Lu>,
    /// `g + kappa C + kappa rho_bar' (D^2 - k^2)`
    coupling: DMatrix<f64>,
}

/// Explicit data carried from the previous step by BDF2.
#[derive(Debug, Clone, PartialEq)]
struct History {
    rho: Spec,
    q: [Spec; 3],
    nm: Spec,
    n: [Spec; 3],
    p: [Spec; 3],
}

#[derive(Debug, Clone)]
struct Matrices {
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    r: DMatrix<f64>,
    drd: DMatrix<f64>,
    r1: DMatrix<f64>,
    /// `diag(rho_bar'') D - D diag(rho_bar'')`
    comm: DMatrix<f64>,
    cumulative: DMatrix<f64>,
}

/// IMEX integrator for [`Model`].
///
/// Unknowns are the density perturbation and the momentum
/// `q = (rho_bar + rho) v`. Each step solves, per horizontal mode, the
/// implicit linear system (viscosity, gravity, capillarity and the
/// `rho_bar' v3` coupling) with the nonlinear terms extrapolated; the part
/// `rho v` of the new momentum is resolved by a short fixed point.
#[derive(Debug, Clone)]
pub struct Stepper {
    model: Model,
    dt: f64,
    scheme: Scheme,
    step: u64,
    t: f64,
    rho: Spec,
    v: [Spec; 3],
    beta: Spec,
    q: [Spec; 3],
    prev: Option<History>,
    mats: Matrices,
    ops: HashMap<(u64, u64), ModeOps>,
    mean_ops: HashMap<u64, Lu>,
}

fn replace_row(a: &mut DMatrix<f64>, row: usize, with: &DMatrix<f64>, src: usize) {
    for j in 0..a.ncols() {
        a[(row, j)] = with[(src, j)];
    }
}

fn identity_row(a: &mut DMatrix<f64>, row: usize) {
    for j in 0..a.ncols() {
        a[(row, j)] = 0.0;
    }
    a[(row, row)] = 1.0;
}

impl Stepper {
    pub fn new(model: Model, state: &NSKState, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if model.params.mu <= 0.0 {
            return Err(Error::Config("time stepping needs mu > 0".into()));
        }
        if state.rho.len() != model.grid.len() {
            return Err(Error::Resolution("state does not match the model grid".into()));
        }
        let derivs = model.rhs(state)?;
        let (rho, v, _) = model.to_spectral(state);
        let beta = model.fwd(&derivs.beta);
        let mut s = Self::bare(model, dt, scheme);
        s.t = state.t;
        s.q = s.momentum(&rho, &v);
        s.rho = rho;
        s.v = v;
        s.beta = beta;
        Ok(s)
    }

    fn bare(model: Model, dt: f64, scheme: Scheme) -> Self {
        let grid = &model.grid;
        let n = grid.len();
        let d1 = grid.dz_matrix(1);
        let d2 = grid.dz_matrix(2);
        let p = &model.profile;
        let diag = |v: &[f64]| DMatrix::from_diagonal(&DVector::from_column_slice(v));
        let r = diag(&p.rho_bar);
        let r2 = diag(&p.d2);
        let mats = Matrices {
            drd: &d1 * &r * &d1,
            comm: &r2 * &d1 - &d1 * &r2,
            r1: diag(&p.d1),
            r,
            cumulative: chebyshev::cumulative_integration_matrix(grid.nz, grid.geometry.h),
            d1,
            d2,
        };
        Stepper {
            dt,
            scheme,
            step: 0,
            t: 0.0,
            rho: zeros(n),
            v: [zeros(n), zeros(n), zeros(n)],
            beta: zeros(n),
            q: [zeros(n), zeros(n), zeros(n)],
            prev: None,
            mats,
            ops: HashMap::new(),
            mean_ops: HashMap::new(),
            model,
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Current state in physical space.
    pub fn state(&self) -> NSKState {
        let m = &self.model;
        NSKState {
            rho: m.inv(&self.rho),
            vel: [m.inv(&self.v[0]), m.inv(&self.v[1]), m.inv(&self.v[2])],
            beta: m.inv(&self.beta),
            t: self.t,
        }
    }

    /// Time derivatives at the current state.
    pub fn derivatives(&self) -> Result<TimeDerivatives> {
        self.model.rhs(&self.state())
    }

    /// `(rho_bar + rho) v` in spectral space.
    fn momentum(&self, rho: &[Complex64], v: &[Spec; 3]) -> [Spec; 3] {
        let p = self.product_term(rho, v);
        let mut q = [zeros(rho.len()), zeros(rho.len()), zeros(rho.len())];
        for c in 0..3 {
            let rv = self.model.grid.scale_by_profile(&v[c], &self.model.profile.rho_bar);
            q[c] = rv.iter().zip(&p[c]).map(|(a, b)| a + b).collect();
        }
        q
    }

    fn product_term(&self, rho: &[Complex64], v: &[Spec; 3]) -> [Spec; 3] {
        let n = rho.len();
        if self.model.linearized {
            [zeros(n), zeros(n), zeros(n)]
        } else {
            self.model.mass_flux(rho, v)
        }
    }

    fn ensure_ops(&mut self, mode: &Mode, a: f64) {
        let m = &self.model;
        let nz = m.grid.nz;
        let crate::solver::PhysicsParams { mu, kappa, g } = m.params;
        if mode.is_mean() {
            self.mean_ops.entry(a.to_bits()).or_insert_with(|| {
                let mut op = &self.mats.r * a - &self.mats.d2 * mu;
                replace_row(&mut op, 0, &self.mats.d1, 0);
                replace_row(&mut op, nz - 1, &self.mats.d1, nz - 1);
                op.lu()
            });
            return;
        }
        let key = (k2_key(mode.k2), a.to_bits());
        if self.ops.contains_key(&key) {
            return;
        }
        let k2 = mode.k2;
        let mats = &self.mats;
        let eye = DMatrix::<f64>::identity(nz, nz);
        let l2 = &mats.d2 - &eye * k2;
        let coupling = &eye * g + &mats.comm * kappa + &mats.r1 * &l2 * kappa;
        let mut op = (&mats.r * k2 - &mats.drd) * a + &l2 * &l2 * mu - &coupling * &mats.r1 * (k2 / a);
        identity_row(&mut op, 0);
        identity_row(&mut op, nz - 1);
        replace_row(&mut op, 1, &mats.d2, 0);
        replace_row(&mut op, nz - 2, &mats.d2, nz - 1);
        let omega = m.grid.is_3d().then(|| {
            let mut w = &mats.r * a - &l2 * mu;
            replace_row(&mut w, 0, &mats.d1, 0);
            replace_row(&mut w, nz - 1, &mats.d1, nz - 1);
            w.lu()
        });
        self.ops.insert(
            key,
            ModeOps {
                v3: op.lu(),
                omega,
                coupling,
            },
        );
    }

    /// Solve the implicit system of one mode; returns `(rho, v1, v2, v3, beta)` columns.
    fn solve_mode(&self, mode: &Mode, a: f64, r_rho: &[Complex64], r: [&[Complex64]; 3]) -> Result<[Spec; 5]> {
        let m = &self.model;
        let nz = m.grid.nz;
        let p = &m.profile;
        let crate::solver::PhysicsParams { mu, kappa, g } = m.params;
        let i = Complex64::new(0.0, 1.0);
        let zero = Complex64::new(0.0, 0.0);
        let fail = |reason: &str| Error::ImplicitSolve {
            mode: mode.iy * m.grid.nx + mode.ix,
            reason: reason.to_string(),
        };
        if mode.is_mean() {
            let lu = &self.mean_ops[&a.to_bits()];
            let rho: Spec = r_rho.iter().map(|c| c / a).collect();
            let mass: f64 = (0..nz).map(|j| m.grid.weights[j] * p.rho_bar[j]).sum();
            let mut vh = [vec![zero; nz], vec![zero; nz]];
            let comps = if m.grid.is_3d() { 2 } else { 1 };
            for c in 0..comps {
                let mut rhs = r[c].to_vec();
                rhs[0] = zero;
                rhs[nz - 1] = zero;
                let mut v = solve_complex(lu, &rhs).ok_or_else(|| fail("singular mean-mode operator"))?;
                // the wall rows drop the integral of the equation; restore it
                let target: Complex64 = (0..nz).map(|j| r[c][j] * m.grid.weights[j]).sum::<Complex64>() / a;
                let have: Complex64 = (0..nz).map(|j| v[j] * p.rho_bar[j] * m.grid.weights[j]).sum();
                let shift = (target - have) / mass;
                v.iter_mut().for_each(|x| *x += shift);
                vh[c] = v;
            }
            let drho = matvec(&self.mats.d1, &rho);
            let d2rho = matvec(&self.mats.d2, &rho);
            let dbeta: Spec = (0..nz)
                .map(|j| r[2][j] - rho[j] * g - (drho[j] * p.d2[j] + d2rho[j] * p.d1[j]) * kappa)
                .collect();
            let mut beta = matvec(&self.mats.cumulative, &dbeta);
            let mean: Complex64 = (0..nz).map(|j| beta[j] * m.grid.weights[j]).sum::<Complex64>() / m.grid.geometry.h;
            beta.iter_mut().for_each(|b| *b -= mean);
            let [v1, v2] = vh;
            return Ok([rho, v1, v2, vec![zero; nz], beta]);
        }
        let ops = &self.ops[&(k2_key(mode.k2), a.to_bits())];
        let (kx, ky, k2) = (mode.kx, mode.ky, mode.k2);
        let s: Spec = (0..nz).map(|j| i * kx * r[0][j] + i * ky * r[1][j]).collect();
        let ds = matvec(&self.mats.d1, &s);
        let gr = matvec(&ops.coupling, r_rho);
        let mut rhs: Spec = (0..nz).map(|j| r[2][j] * k2 + ds[j] - gr[j] * (k2 / a)).collect();
        for row in [0, 1, nz - 2, nz - 1] {
            rhs[row] = zero;
        }
        let v3 = solve_complex(&ops.v3, &rhs).ok_or_else(|| fail("singular vertical operator"))?;
        let rho: Spec = (0..nz).map(|j| (r_rho[j] - v3[j] * p.d1[j]) / a).collect();
        let dv3 = matvec(&self.mats.d1, &v3);
        let d3v3 = matvec(&self.mats.d2, &dv3);
        let beta: Spec = (0..nz)
            .map(|j| {
                (-dv3[j] * (a * p.rho_bar[j]) + (d3v3[j] - dv3[j] * k2) * mu - rho[j] * (kappa * p.d2[j] * k2) - s[j]) / k2
            })
            .collect();
        let (v1, v2) = match &ops.omega {
            Some(lu) => {
                let mut rw: Spec = (0..nz).map(|j| i * kx * r[1][j] - i * ky * r[0][j]).collect();
                rw[0] = zero;
                rw[nz - 1] = zero;
                let om = solve_complex(lu, &rw).ok_or_else(|| fail("singular vorticity operator"))?;
                (
                    (0..nz).map(|j| (i * kx * dv3[j] + i * ky * om[j]) / k2).collect(),
                    (0..nz).map(|j| (i * ky * dv3[j] - i * kx * om[j]) / k2).collect(),
                )
            }
            None => ((0..nz).map(|j| i * kx * dv3[j] / k2).collect(), vec![zero; nz]),
        };
        Ok([rho, v1, v2, v3, beta])
    }

    /// Solve every retained mode for given right-hand sides.
    fn solve_all(&mut self, a: f64, r_rho: &[Complex64], r: &[Spec; 3]) -> Result<(Spec, [Spec; 3], Spec)> {
        let grid = self.model.grid.clone();
        let n = grid.len();
        let modes = grid.modes(true);
        for mode in &modes {
            self.ensure_ops(mode, a);
        }
        let mut rho = zeros(n);
        let mut v = [zeros(n), zeros(n), zeros(n)];
        let mut beta = zeros(n);
        let linear = self.model.linearized;
        for mode in &modes {
            let col = |s: &[Complex64]| grid.column(s, mode.ix, mode.iy);
            let rr = col(r_rho);
            let (r0, r1, r2) = (col(&r[0]), col(&r[1]), col(&r[2]));
            // a linear solve of zero data is zero; skip idle modes of linearized runs
            let idle = [&rr, &r0, &r1, &r2].iter().all(|c| c.iter().all(|x| x.re == 0.0 && x.im == 0.0));
            if linear && idle {
                continue;
            }
            let out = self.solve_mode(mode, a, &rr, [&r0, &r1, &r2])?;
            grid.set_column(&mut rho, mode.ix, mode.iy, &out[0]);
            for c in 0..3 {
                grid.set_column(&mut v[c], mode.ix, mode.iy, &out[c + 1]);
            }
            grid.set_column(&mut beta, mode.ix, mode.iy, &out[4]);
        }
        Ok((rho, v, beta))
    }

    /// Advance one time step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.model.grid.len();
        let dt = self.dt;
        let linear = self.model.linearized;
        let (nm_n, n_n) = if linear {
            (zeros(n), [zeros(n), zeros(n), zeros(n)])
        } else {
            self.model.nonlinear(&self.rho, &self.v)
        };
        let p_n = self.product_term(&self.rho, &self.v);
        let lin = |x: &[Complex64], cx: f64, y: &[Complex64], cy: f64| -> Spec {
            x.iter().zip(y).map(|(a, b)| a * cx + b * cy).collect()
        };
        let bdf2 = self.scheme == Scheme::ImexBdf2 && self.prev.is_some();
        let (a, hist_rho, hist_q, nm_s, n_s, mut p) = match (&self.prev, bdf2) {
            (Some(h), true) => {
                let c = 1.0 / (2.0 * dt);
                (
                    1.5 / dt,
                    lin(&self.rho, 4.0 * c, &h.rho, -c),
                    [0, 1, 2].map(|k| lin(&self.q[k], 4.0 * c, &h.q[k], -c)),
                    lin(&nm_n, 2.0, &h.nm, -1.0),
                    [0, 1, 2].map(|k| lin(&n_n[k], 2.0, &h.n[k], -1.0)),
                    [0, 1, 2].map(|k| lin(&p_n[k], 2.0, &h.p[k], -1.0)),
                )
            }
            _ => (
                1.0 / dt,
                self.rho.iter().map(|c| c / dt).collect(),
                [0, 1, 2].map(|k| self.q[k].iter().map(|c| c / dt).collect()),
                nm_n.clone(),
                n_n.clone(),
                p_n.clone(),
            ),
        };
        let r_rho: Spec = hist_rho.iter().zip(&nm_s).map(|(x, y)| x + y).collect();
        let mut solution = None;
        for _ in 0..MAX_PRODUCT_ITERATIONS {
            let r = [0, 1, 2].map(|k| -> Spec {
                (0..n).map(|j| hist_q[k][j] + n_s[k][j] - p[k][j] * a).collect()
            });
            let (rho, v, beta) = self.solve_all(a, &r_rho, &r)?;
            if linear {
                solution = Some((rho, v, beta));
                break;
            }
            let p_new = self.product_term(&rho, &v);
            let scale = v.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
            let change = (0..3)
                .flat_map(|k| p_new[k].iter().zip(&p[k]).map(|(x, y)| (x - y).norm()))
                .fold(0.0, f64::max);
            let ref_scale = (scale * self.model.profile.max_rho()).max(f64::MIN_POSITIVE);
            p = p_new;
            if !change.is_finite() {
                return Err(Error::BlowUp {
                    t: self.t + dt,
                    what: "non-finite field values".into(),
                });
            }
            if change <= PRODUCT_TOL * ref_scale {
                solution = Some((rho, v, beta));
                break;
            }
        }
        // a stalled product iteration means the state has left the resolved regime
        let (rho, v, beta) = solution.ok_or_else(|| Error::BlowUp {
            t: self.t + dt,
            what: "lagged rho v product did not converge (under-resolved growth)".into(),
        })?;
        let finite = rho.iter().chain(v.iter().flatten()).all(|c| c.re.is_finite() && c.im.is_finite());
        let t_new = self.t + dt;
        if !finite {
            return Err(Error::BlowUp {
                t: t_new,
                what: "non-finite field values".into(),
            });
        }
        if !self.model.linearized {
            let min = self.model.min_density(&self.model.inv(&rho));
            if min < 0.1 * self.model.profile.min_rho() {
                return Err(Error::Vacuum { min, t: t_new });
            }
        }
        let q_new = self.momentum(&rho, &v);
        self.prev = Some(History {
            rho: std::mem::replace(&mut self.rho, rho),
            q: std::mem::replace(&mut self.q, q_new),
            nm: nm_n,
            n: n_n,
            p: p_n,
        });
        self.v = v;
        self.beta = beta;
        self.t = t_new;
        self.step += 1;
        Ok(())
    }

    /// Complete integrator state for bit-identical continuation.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut fields = vec![
            ("rho".to_string(), self.rho.clone()),
            ("beta".to_string(), self.beta.clone()),
        ];
        for c in 0..3 {
            fields.push((format!("v{}", c + 1), self.v[c].clone()));
            fields.push((format!("q{}", c + 1), self.q[c].clone()));
        }
        if let Some(h) = &self.prev {
            fields.push(("prev_rho".into(), h.rho.clone()));
            fields.push(("prev_nm".into(), h.nm.clone()));
            for c in 0..3 {
                fields.push((format!("prev_q{}", c + 1), h.q[c].clone()));
                fields.push((format!("prev_n{}", c + 1), h.n[c].clone()));
                fields.push((format!("prev_p{}", c + 1), h.p[c].clone()));
            }
        }
        Checkpoint {
            t: self.t,
            step: self.step,
            dt: self.dt,
            scheme: self.scheme,
            linearized: self.model.linearized,
            fields,
        }
    }

    /// Rebuild a stepper from a checkpoint taken with the same model.
    pub fn from_checkpoint(model: Model, ck: &Checkpoint) -> Result<Self> {
        if ck.linearized != model.linearized {
            return Err(Error::Snapshot("checkpoint linearization flag differs from the run".into()));
        }
        let n = model.grid.len();
        let get = |name: &str| -> Result<Spec> {
            let f = ck
                .fields
                .iter()
                .find(|(k, _)| k == name)
                .ok_or_else(|| Error::Snapshot(format!("checkpoint lacks field {name}")))?;
            if f.1.len() != n {
                return Err(Error::Snapshot(format!("checkpoint field {name} has the wrong size")));
            }
            Ok(f.1.clone())
        };
        let mut s = Self::bare(model, ck.dt, ck.scheme);
        s.t = ck.t;
        s.step = ck.step;
        s.rho = get("rho")?;
        s.beta = get("beta")?;
        s.v = [get("v1")?, get("v2")?, get("v3")?];
        s.q = [get("q1")?, get("q2")?, get("q3")?];
        if ck.fields.iter().any(|(k, _)| k == "prev_rho") {
            s.prev = Some(History {
                rho: get("prev_rho")?,
                nm: get("prev_nm")?,
                q: [get("prev_q1")?, get("prev_q2")?, get("prev_q3")?],
                n: [get("prev_n1")?, get("prev_n2")?, get("prev_n3")?],
                p: [get("prev_p1")?, get("prev_p2")?, get("prev_p3")?],
            });
        }
        Ok(s)
    }
}

/// Spectral integrator state with its BDF2 history.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub step: u64,
    pub dt: f64,
    pub scheme: Scheme,
    pub linearized: bool,
    pub fields: Vec<(String, Vec<Complex64>)>,
}

impl Checkpoint {
    /// Write as a snapshot pair with real and imaginary parts as separate fields.
    pub fn write(&self, stem: &Path, grid: &crate::spectral::Grid) -> Result<()> {
        let mut names = Vec::new();
        let mut data = Vec::new();
        for (name, f) in &self.fields {
            names.push(format!("{name}.re"));
            data.push(f.iter().map(|c| c.re).collect::<Vec<f64>>());
            names.push(format!("{name}.im"));
            data.push(f.iter().map(|c| c.im).collect::<Vec<f64>>());
        }
        let mut meta = SnapshotMeta::for_grid(grid, self.t, names);
        meta.extra.insert("checkpoint".into(), json!(true));
        meta.extra.insert("step".into(), json!(self.step));
        meta.extra.insert("dt".into(), json!(self.dt));
        meta.extra.insert("scheme".into(), serde_json::to_value(self.scheme)?);
        meta.extra.insert("linearized".into(), json!(self.linearized));
        let refs: Vec<&[f64]> = data.iter().map(|v| v.as_slice()).collect();
        write_snapshot(stem, &meta, &refs)
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let (meta, data) = read_snapshot(stem)?;
        let extra = |k: &str| {
            meta.extra
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Snapshot(format!("{} is not a checkpoint (missing {k})", stem.display())))
        };
        let step = extra("step")?
            .as_u64()
            .ok_or_else(|| Error::Snapshot("bad step".into()))?;
        let dt = extra("dt")?.as_f64().ok_or_else(|| Error::Snapshot("bad dt".into()))?;
        let scheme: Scheme = serde_json::from_value(extra("scheme")?)?;
        let linearized = extra("linearized")?.as_bool().unwrap_or(false);
        let mut fields = Vec::new();
        for (k, name) in meta.field_names.iter().enumerate().step_by(2) {
            let base = name
                .strip_suffix(".re")
                .ok_or_else(|| Error::Snapshot(format!("unexpected checkpoint field {name}")))?;
            let re = &data[k];
            let im = data
                .get(k + 1)
                .ok_or_else(|| Error::Snapshot(format!("missing imaginary part of {base}")))?;
            fields.push((base.to_string(), re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()));
        }
        Ok(Checkpoint {
            t: meta.time,
            step,
            dt,
            scheme,
            linearized,
            fields,
        })
    }
}
