//! Equilibrium density profiles `rho_bar(x3)` and the hydrostatic pressure
//! they induce.
//!
//! Every profile is sampled on the Chebyshev–Gauss–Lobatto grid shared with
//! the solver, together with its first four derivatives. Analytic families
//! carry exact derivatives (through [`crate::jet`]); tabulated profiles are
//! fitted by a Chebyshev series and differentiated spectrally.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chebyshev;
use crate::error::{Error, Result};
use crate::jet::{smooth_step, Jet};

/// Minimum number of vertical samples for a profile.
pub const MIN_NZ: usize = 9;

/// Wall-curvature tolerance used for analytic profile kinds.
pub const ANALYTIC_WALL_TOL: f64 = 1e-12;

/// Default wall-curvature tolerance for tabulated profiles.
pub const TABULATED_WALL_TOL: f64 = 1e-6;

/// Profile family and its parameters, as written in a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum ProfileSpec {
    /// `rho_bar = base + slope * x3`
    Linear { base: f64, slope: f64 },
    /// `rho_bar = base * exp(rate * x3)`
    Exponential { base: f64, rate: f64 },
    /// Linear background plus a tanh transition layer whose gradient bump is
    /// windowed by a C-infinity plateau, so `rho_bar''` vanishes near both walls:
    /// `rho_bar' = slope + amp * chi(x3) * sech^2((x3 - center) / width) / width`.
    TanhBlend {
        base: f64,
        slope: f64,
        amp: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<f64>,
        /// distance from each wall where the window starts to rise
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edge: Option<f64>,
        /// length of the window's rise
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ramp: Option<f64>,
    },
    /// Two-column `(x3, rho_bar)` table.
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        points: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wall_tolerance: Option<f64>,
    },
}

impl ProfileSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ProfileSpec::Linear { .. } => "linear",
            ProfileSpec::Exponential { .. } => "exponential",
            ProfileSpec::TanhBlend { .. } => "tanh-blend",
            ProfileSpec::Tabulated { .. } => "tabulated",
        }
    }

    /// Tanh-blend with the default layer placement for a slab of height `h`.
    pub fn tanh_blend(base: f64, slope: f64, amp: f64) -> Self {
        ProfileSpec::TanhBlend {
            base,
            slope,
            amp,
            center: None,
            width: None,
            edge: None,
            ramp: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TanhLayer {
    base: f64,
    slope: f64,
    amp: f64,
    center: f64,
    width: f64,
    edge: f64,
    ramp: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Evaluator {
    Linear { base: f64, slope: f64 },
    Exponential { base: f64, rate: f64 },
    Tanh(TanhLayer),
    Series { coeffs: Vec<f64> },
}

/// Sampled equilibrium density with derivatives up to order four.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub spec: ProfileSpec,
    pub h: f64,
    pub g: f64,
    /// Vertical Chebyshev–Gauss–Lobatto nodes on `[0, h]`.
    pub grid: Vec<f64>,
    pub rho_bar: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    pub d4: Vec<f64>,
    /// Tolerance for `rho_bar'' = 0` at the walls.
    pub wall_tolerance: f64,
    eval: Evaluator,
}

impl TanhLayer {
    fn window(&self, z: Jet, h: f64) -> Jet {
        let up = smooth_step((z + (-self.edge)).scale(1.0 / self.ramp));
        let down = smooth_step((-z + (h - self.edge)).scale(1.0 / self.ramp));
        up * down
    }

    /// Jet of `rho_bar'` at `z`.
    fn gradient(&self, z: f64, h: f64) -> Jet {
        let zj = Jet::variable(z);
        let t = (zj + (-self.center)).scale(1.0 / self.width).tanh();
        let sech2 = Jet::constant(1.0) - t * t;
        self.window(zj, h) * sech2 * (self.amp / self.width) + self.slope
    }

    fn bump(&self, z: f64, h: f64) -> f64 {
        self.gradient(z, h).value() - self.slope
    }

    /// `int_a^b (rho_bar' - slope)` by panelled Gauss–Legendre.
    fn bump_integral(&self, a: f64, b: f64, h: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
        if b <= a {
            return 0.0;
        }
        let panels = (((b - a) / h) * 96.0).ceil().max(1.0) as usize;
        let dz = (b - a) / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * dz;
            for (x, w) in gl.0.iter().zip(&gl.1) {
                s += 0.5 * dz * w * self.bump(lo + 0.5 * dz * (x + 1.0), h);
            }
        }
        s
    }
}

impl Evaluator {
    fn derivs(&self, z: f64, h: f64) -> [f64; 5] {
        match self {
            Evaluator::Linear { base, slope } => [base + slope * z, *slope, 0.0, 0.0, 0.0],
            Evaluator::Exponential { base, rate } => {
                (Jet::variable(z).scale(*rate).exp() * *base).derivatives()
            }
            Evaluator::Tanh(layer) => {
                let gl = chebyshev::gauss_legendre(10);
                let g = layer.gradient(z, h).derivatives();
                let rho = layer.base + layer.slope * z + layer.bump_integral(0.0, z, h, &gl);
                [rho, g[0], g[1], g[2], g[3]]
            }
            Evaluator::Series { coeffs } => {
                let x = 1.0 - 2.0 * z / h;
                let mut out = [0.0; 5];
                let mut a = coeffs.clone();
                let mut scale = 1.0;
                for o in out.iter_mut() {
                    *o = scale * chebyshev::eval_series(&a, x);
                    a = chebyshev::derivative_coefficients(&a);
                    scale *= -2.0 / h;
                }
                out
            }
        }
    }
}

impl DensityProfile {
    /// Build and sample a profile on `nz` Chebyshev nodes of `[0, h]`.
    ///
    /// With `require_stabilizing` the profile must also have `rho_bar' > 0`
    /// everywhere on `[0, h]`.
    pub fn new(
        spec: ProfileSpec,
        h: f64,
        g: f64,
        nz: usize,
        require_stabilizing: bool,
    ) -> Result<Self> {
        make_profile(spec, h, g, nz, require_stabilizing)
    }

    /// `[rho_bar, rho_bar', rho_bar'', rho_bar''', rho_bar'''']` at any height.
    pub fn eval(&self, z: f64) -> [f64; 5] {
        self.eval.derivs(z, self.h)
    }

    pub fn nz(&self) -> usize {
        self.grid.len()
    }

    /// The same profile sampled on a different number of nodes.
    pub fn resample(&self, nz: usize) -> Result<Self> {
        if nz < MIN_NZ {
            return Err(Error::Resolution(format!("Nz = {nz} < {MIN_NZ}")));
        }
        let mut p = self.clone();
        p.grid = chebyshev::nodes(nz, self.h);
        p.fill_samples();
        Ok(p)
    }

    /// Samples `[rho_bar, d1, d2, d3, d4]` as slices.
    pub fn samples(&self) -> [&[f64]; 5] {
        [&self.rho_bar, &self.d1, &self.d2, &self.d3, &self.d4]
    }

    fn fill_samples(&mut self) {
        let n = self.grid.len();
        let mut cols = [
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
        ];
        match &self.eval {
            Evaluator::Tanh(layer) => {
                // accumulate the integral node by node
                let gl = chebyshev::gauss_legendre(10);
                let mut acc = 0.0;
                let mut prev = 0.0;
                for (j, &z) in self.grid.iter().enumerate() {
                    acc += layer.bump_integral(prev, z, self.h, &gl);
                    prev = z;
                    let d = layer.gradient(z, self.h).derivatives();
                    cols[0][j] = layer.base + layer.slope * z + acc;
                    for k in 0..4 {
                        cols[k + 1][j] = d[k];
                    }
                }
            }
            ev => {
                for (j, &z) in self.grid.iter().enumerate() {
                    let d = ev.derivs(z, self.h);
                    for k in 0..5 {
                        cols[k][j] = d[k];
                    }
                }
            }
        }
        let [a, b, c, d, e] = cols;
        self.rho_bar = a;
        self.d1 = b;
        self.d2 = c;
        self.d3 = d;
        self.d4 = e;
    }

    pub fn min_rho(&self) -> f64 {
        self.rho_bar.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_rho(&self) -> f64 {
        self.rho_bar.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn tanh_layer(spec: &ProfileSpec, h: f64) -> Option<TanhLayer> {
    if let ProfileSpec::TanhBlend {
        base,
        slope,
        amp,
        center,
        width,
        edge,
        ramp,
    } = spec
    {
        Some(TanhLayer {
            base: *base,
            slope: *slope,
            amp: *amp,
            center: center.unwrap_or(0.5 * h),
            width: width.unwrap_or(0.1 * h),
            edge: edge.unwrap_or(0.1 * h),
            ramp: ramp.unwrap_or(0.2 * h),
        })
    } else {
        None
    }
}

/// Read a two-column `(x3, rho_bar)` CSV; a non-numeric header row is skipped.
pub fn read_table(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let mut pts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Profile(format!("row {}: expected two columns", i + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(z), Ok(r)) => pts.push((z, r)),
            _ if i == 0 => continue,
            _ => return Err(Error::Profile(format!("row {}: not numeric", i + 1))),
        }
    }
    Ok(pts)
}

fn fit_series(points: &[(f64, f64)], h: f64, max_degree: usize) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::Profile("tabulated profile needs at least two rows".into()));
    }
    for &(z, r) in points {
        if !(z.is_finite() && r.is_finite()) || z < -1e-12 || z > h + 1e-12 {
            return Err(Error::Profile(format!("table point ({z}, {r}) outside [0, h]")));
        }
    }
    let deg = (points.len() - 1).min(max_degree);
    let m = points.len();
    let mut a = DMatrix::<f64>::zeros(m, deg + 1);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &(z, r)) in points.iter().enumerate() {
        let x = 1.0 - 2.0 * z / h;
        let (mut t0, mut t1) = (1.0, x);
        for k in 0..=deg {
            a[(i, k)] = if k == 0 { 1.0 } else { t1 };
            if k >= 1 {
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
        }
        b[i] = r;
    }
    let svd = a.svd(true, true);
    let c = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::Profile(format!("table fit failed: {e}")))?;
    Ok(c.iter().cloned().collect())
}

/// Construct a sampled profile; rejects non-positive densities and, when
/// `require_stabilizing`, any point with `rho_bar' <= 0`.
pub fn make_profile(
    spec: ProfileSpec,
    h: f64,
    g: f64,
    nz: usize,
    require_stabilizing: bool,
) -> Result<DensityProfile> {
    if nz < MIN_NZ {
        return Err(Error::Resolution(format!("Nz = {nz} < {MIN_NZ}")));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Geometry(format!("h must be positive, got {h}")));
    }
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::Profile(format!("g must be positive, got {g}")));
    }
    let mut wall_tolerance = ANALYTIC_WALL_TOL;
    let eval = match &spec {
        ProfileSpec::Linear { base, slope } => Evaluator::Linear {
            base: *base,
            slope: *slope,
        },
        ProfileSpec::Exponential { base, rate } => {
            if *base <= 0.0 {
                return Err(Error::Profile(format!("exponential base must be positive, got {base}")));
            }
            Evaluator::Exponential {
                base: *base,
                rate: *rate,
            }
        }
        ProfileSpec::TanhBlend { .. } => {
            let layer = tanh_layer(&spec, h).expect("tanh spec");
            if layer.width <= 0.0 || layer.ramp <= 0.0 || layer.edge < 0.0 {
                return Err(Error::Profile("tanh-blend width/ramp must be positive".into()));
            }
            if 2.0 * (layer.edge + layer.ramp) > h {
                return Err(Error::Profile(format!(
                    "tanh-blend window does not fit: 2 (edge + ramp) = {} > h = {h}",
                    2.0 * (layer.edge + layer.ramp)
                )));
            }
            Evaluator::Tanh(layer)
        }
        ProfileSpec::Tabulated {
            path,
            points,
            wall_tolerance: tol,
        } => {
            let pts = match path {
                Some(p) if points.is_empty() => read_table(p)?,
                _ => points.clone(),
            };
            wall_tolerance = tol.unwrap_or(TABULATED_WALL_TOL);
            Evaluator::Series {
                coeffs: fit_series(&pts, h, nz - 1)?,
            }
        }
    };
    let mut p = DensityProfile {
        spec,
        h,
        g,
        grid: chebyshev::nodes(nz, h),
        rho_bar: vec![],
        d1: vec![],
        d2: vec![],
        d3: vec![],
        d4: vec![],
        wall_tolerance,
        eval,
    };
    p.fill_samples();

    // positivity checks on the nodes plus a uniform sweep between them
    let mut min_rho = (f64::INFINITY, 0.0);
    let mut min_d1 = (f64::INFINITY, 0.0);
    for (j, &z) in p.grid.iter().enumerate() {
        if p.rho_bar[j] < min_rho.0 {
            min_rho = (p.rho_bar[j], z);
        }
        if p.d1[j] < min_d1.0 {
            min_d1 = (p.d1[j], z);
        }
    }
    let sweep = 400;
    let gl = chebyshev::gauss_legendre(10);
    let mut acc = 0.0;
    for i in 0..=sweep {
        let z = h * i as f64 / sweep as f64;
        let d = match &p.eval {
            Evaluator::Tanh(layer) => {
                if i > 0 {
                    acc += layer.bump_integral(h * (i - 1) as f64 / sweep as f64, z, h, &gl);
                }
                [layer.base + layer.slope * z + acc, layer.gradient(z, h).value()]
            }
            ev => {
                let d = ev.derivs(z, h);
                [d[0], d[1]]
            }
        };
        if d[0] < min_rho.0 {
            min_rho = (d[0], z);
        }
        if d[1] < min_d1.0 {
            min_d1 = (d[1], z);
        }
    }
    if !(min_rho.0 > 0.0) {
        return Err(Error::NonPositiveDensity {
            min: min_rho.0,
            at: min_rho.1,
        });
    }
    if require_stabilizing && !(min_d1.0 > 0.0) {
        return Err(Error::StabilizingCondition {
            min: min_d1.0,
            at: min_d1.1,
        });
    }
    Ok(p)
}

/// One checked condition with its worst-case margin on the sample grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    /// Worst value of the checked quantity (see `ConditionReport`).
    pub margin: f64,
    /// Height where the worst value is attained.
    pub at: f64,
    pub tolerance: f64,
}

/// Thresholds for [`validate_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionTolerances {
    /// pass iff `min rho_bar > positivity`
    pub positivity: f64,
    /// pass iff `min rho_bar' > stabilizing`
    pub stabilizing: f64,
    /// pass iff `max rho_bar' > rt`
    pub rt: f64,
    /// pass iff `max |rho_bar''|` at the walls `<= wall_curvature`
    pub wall_curvature: f64,
}

impl ConditionTolerances {
    pub fn for_profile(p: &DensityProfile) -> Self {
        ConditionTolerances {
            positivity: 0.0,
            stabilizing: 0.0,
            rt: 0.0,
            wall_curvature: p.wall_tolerance,
        }
    }
}

/// Pass/fail and margins for the profile conditions the stability theory needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// margin: `min rho_bar`
    pub positivity: Condition,
    /// margin: `min rho_bar'`
    pub stabilizing: Condition,
    /// margin: `max rho_bar'`
    pub rt: Condition,
    /// margin: `max |rho_bar''|` over the two walls
    pub wall_curvature: Condition,
    pub verdict: bool,
}

impl ConditionReport {
    pub fn conditions(&self) -> [&Condition; 4] {
        [
            &self.positivity,
            &self.stabilizing,
            &self.rt,
            &self.wall_curvature,
        ]
    }

    pub fn failed(&self) -> Vec<&str> {
        self.conditions()
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

pub fn validate_profile(profile: &DensityProfile) -> ConditionReport {
    validate_profile_with(profile, ConditionTolerances::for_profile(profile))
}

pub fn validate_profile_with(profile: &DensityProfile, tol: ConditionTolerances) -> ConditionReport {
    let argmin = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |acc, (i, &x)| if x < acc.0 { (x, i) } else { acc })
    };
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .fold((f64::NEG_INFINITY, 0), |acc, (i, &x)| if x > acc.0 { (x, i) } else { acc })
    };
    let (rmin, ri) = argmin(&profile.rho_bar);
    let (dmin, di) = argmin(&profile.d1);
    let (dmax, dxi) = argmax(&profile.d1);
    let n = profile.nz();
    let (c0, cn) = (profile.d2[0].abs(), profile.d2[n - 1].abs());
    let (wall, wall_at) = if c0 >= cn { (c0, 0.0) } else { (cn, profile.h) };

    let positivity = Condition {
        name: "positivity".into(),
        passed: rmin > tol.positivity,
        margin: rmin,
        at: profile.grid[ri],
        tolerance: tol.positivity,
    };
    let stabilizing = Condition {
        name: "stabilizing".into(),
        passed: dmin > tol.stabilizing,
        margin: dmin,
        at: profile.grid[di],
        tolerance: tol.stabilizing,
    };
    let rt = Condition {
        name: "rt".into(),
        passed: dmax > tol.rt,
        margin: dmax,
        at: profile.grid[dxi],
        tolerance: tol.rt,
    };
    let wall_curvature = Condition {
        name: "wall_curvature".into(),
        passed: wall <= tol.wall_curvature,
        margin: wall,
        at: wall_at,
        tolerance: tol.wall_curvature,
    };
    let verdict = positivity.passed && stabilizing.passed && rt.passed && wall_curvature.passed;
    ConditionReport {
        positivity,
        stabilizing,
        rt,
        wall_curvature,
        verdict,
    }
}

/// Equilibrium pressure from `P' = kappa rho_bar rho_bar''' - rho_bar g`,
/// gauged by `P(0) = 0`.
///
/// The capillary part is exact, `int rho_bar rho_bar''' = [rho_bar rho_bar'' - rho_bar'^2 / 2]`;
/// `int rho_bar` uses panelled Gauss–Legendre on the analytic profile, so the
/// values do not depend on the sample grid.
pub fn hydrostatic_pressure(profile: &DensityProfile, kappa: f64) -> Vec<f64> {
    let gl = chebyshev::gauss_legendre(10);
    let max_panel = profile.h / 128.0;
    let capillary =
        |j: usize| profile.rho_bar[j] * profile.d2[j] - 0.5 * profile.d1[j] * profile.d1[j];
    let mut mass = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(profile.nz());
    for (j, &z) in profile.grid.iter().enumerate() {
        if z > prev {
            let panels = ((z - prev) / max_panel).ceil() as usize;
            let dz = (z - prev) / panels as f64;
            for k in 0..panels {
                let lo = prev + k as f64 * dz;
                for (x, w) in gl.0.iter().zip(&gl.1) {
                    mass += 0.5 * dz * w * profile.eval(lo + 0.5 * dz * (x + 1.0))[0];
                }
            }
        }
        prev = z;
        out.push(kappa * (capillary(j) - capillary(0)) - profile.g * mass);
    }
    out[0] = 0.0;
    out
}
