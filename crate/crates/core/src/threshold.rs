//! The capillarity threshold
//! `kappa_C = sup g int rho_bar' w3^2 / int |rho_bar' grad w3|^2`
//! over admissible divergence-free fields.
//!
//! For `w3 = phi(x3) exp(i xi . x_h)` the quotient reduces to the
//! generalized Sturm–Liouville problem
//! `g rho_bar' phi = lambda (-(rho_bar'^2 phi')' + |xi|^2 rho_bar'^2 phi)`,
//! `phi(0) = phi(h) = 0`, whose largest eigenvalue is the per-mode threshold.
//! It is discretised by a Galerkin method on the Chebyshev interpolants
//! vanishing at the walls, with the quadratic forms integrated on a doubled
//! node set; the discrete quotient uses the same rule, so its value at a
//! computed eigenvector reproduces the eigenvalue.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chebyshev;
use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::profiles::DensityProfile;
use crate::spectral::{sobolev_norm, Grid};

/// Minimum vertical resolution for the eigenproblem.
pub const MIN_NZ: usize = 17;

/// Relative eigenvalue change under refinement that signals an unbounded supremum.
pub const DIVERGENCE_TOL: f64 = 1e-4;

/// Number of lattice magnitudes scanned by default.
pub const DEFAULT_MODES: usize = 8;

/// Largest per-mode threshold and its eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEigenResult {
    pub xi_mag: f64,
    pub kappa_of_xi: f64,
    /// Eigenfunction on `grid`, `max |phi| = 1`, positive at its extremum.
    pub phi: Vec<f64>,
    pub grid: Vec<f64>,
    /// `||M phi - lambda K phi|| / ||M phi||`
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub xi: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub kappa_c: f64,
    pub argmax_xi: f64,
    pub upper_bound: f64,
    /// Scanned lattice magnitudes in increasing order.
    pub curve: Vec<CurvePoint>,
    #[serde(rename = "Nz")]
    pub nz: usize,
}

impl ThresholdResult {
    /// True when the scan peaks at the smallest lattice magnitude `1/Lmax`.
    pub fn argmax_is_lowest_mode(&self) -> bool {
        self.curve.first().map(|p| p.xi) == Some(self.argmax_xi)
    }

    /// True when `kappa(xi)` decreases strictly along the scan.
    pub fn curve_is_decreasing(&self) -> bool {
        self.curve.windows(2).all(|w| w[1].kappa < w[0].kappa)
    }
}

fn profile_on(profile: &DensityProfile, nz: usize) -> Result<DensityProfile> {
    if profile.nz() == nz {
        Ok(profile.clone())
    } else {
        profile.resample(nz)
    }
}

/// Oversampled Clenshaw–Curtis rule on `2 Nz - 1` nodes with the
/// interpolation (and differentiated interpolation) matrices from the
/// profile grid; integrands built from two interpolants stay exact.
struct FineRule {
    weights: Vec<f64>,
    d1: Vec<f64>,
    e: DMatrix<f64>,
    ed: DMatrix<f64>,
}

fn fine_rule(p: &DensityProfile) -> FineRule {
    let n = p.nz();
    let nf = 2 * n - 1;
    let zf = chebyshev::nodes(nf, p.h);
    let e = chebyshev::interpolation_matrix(n, &zf, p.h);
    let ed = &e * chebyshev::diff_matrix(n, p.h);
    FineRule {
        weights: chebyshev::cc_weights(nf, p.h),
        d1: zf.iter().map(|&z| p.eval(z)[1]).collect(),
        e,
        ed,
    }
}

/// Stiffness `K` and mass `M` on the interior nodal values:
/// `phi^T K phi = int rho_bar'^2 (phi'^2 + xi^2 phi^2)`, `phi^T M phi = g int rho_bar' phi^2`.
fn quadratic_forms(p: &DensityProfile, xi_mag: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = p.nz();
    let m = n - 2;
    let rule = fine_rule(p);
    let ei = rule.e.columns(1, m).into_owned();
    let edi = rule.ed.columns(1, m).into_owned();
    let wp2 = DVector::from_iterator(
        rule.weights.len(),
        rule.weights.iter().zip(&rule.d1).map(|(w, d)| w * d * d),
    );
    let wp1 = DVector::from_iterator(
        rule.weights.len(),
        rule.weights.iter().zip(&rule.d1).map(|(w, d)| w * p.g * d),
    );
    let k = edi.transpose() * DMatrix::from_diagonal(&wp2) * &edi
        + ei.transpose() * DMatrix::from_diagonal(&wp2) * &ei * (xi_mag * xi_mag);
    let mass = ei.transpose() * DMatrix::from_diagonal(&wp1) * &ei;
    ((&k + k.transpose()) * 0.5, (&mass + mass.transpose()) * 0.5)
}

/// Largest eigenpair of the per-mode problem at wavenumber magnitude `xi_mag`.
pub fn mode_kappa_c(profile: &DensityProfile, xi_mag: f64, nz: usize) -> Result<ModeEigenResult> {
    if !(xi_mag.is_finite() && xi_mag > 0.0) {
        return Err(Error::InvalidArgument(format!("xi must be positive, got {xi_mag}")));
    }
    if nz < MIN_NZ {
        return Err(Error::Resolution(format!("Nz = {nz} < {MIN_NZ} for the eigenproblem")));
    }
    let p = profile_on(profile, nz)?;
    if let Some((j, &d)) = p
        .d1
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite samples"))
    {
        if d <= 0.0 {
            return Err(Error::StabilizingCondition { min: d, at: p.grid[j] });
        }
    }
    let (k, mass) = quadratic_forms(&p, xi_mag);
    let chol = k
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Resolution("stiffness matrix not positive definite".into()))?;
    let l = chol.l();
    // C = L^{-1} M L^{-T}
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Resolution("singular Cholesky factor".into()))?;
    let c = &linv * &mass * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let (imax, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite eigenvalues"))
        .expect("nonempty spectrum");
    let y = eig.eigenvectors.column(imax).into_owned();
    let phi_int = linv.transpose() * y;

    let mut phi = vec![0.0; nz];
    phi[1..nz - 1].copy_from_slice(phi_int.as_slice());
    let (jmax, _) = phi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite"))
        .expect("nonempty");
    let scale = 1.0 / phi[jmax];
    phi.iter_mut().for_each(|v| *v *= scale);

    let x = DVector::from_column_slice(&phi[1..nz - 1]);
    let mphi = &mass * &x;
    let kphi = &k * &x;
    let residual = (&mphi - kphi * lambda).norm() / mphi.norm().max(f64::MIN_POSITIVE);

    Ok(ModeEigenResult {
        xi_mag,
        kappa_of_xi: lambda,
        phi,
        grid: p.grid.clone(),
        residual,
    })
}

/// The `count` smallest distinct nonzero magnitudes of the lattice
/// `L1^{-1} Z x L2^{-1} Z`.
pub fn lattice_magnitudes(geometry: &DomainGeometry, count: usize) -> Vec<f64> {
    if count == 0 {
        return vec![];
    }
    match geometry.l2 {
        None => (1..=count).map(|k| k as f64 / geometry.l1).collect(),
        Some(l2) => {
            let mut mags = Vec::new();
            let n = count as i64 + 1;
            for a in 0..=n {
                for b in 0..=n {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let (x, y) = (a as f64 / geometry.l1, b as f64 / l2);
                    mags.push((x * x + y * y).sqrt());
                }
            }
            mags.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let mut out: Vec<f64> = Vec::new();
            for m in mags {
                if out.last().is_none_or(|&last| (m - last) > 1e-12 * m) {
                    out.push(m);
                }
                if out.len() == count {
                    break;
                }
            }
            out
        }
    }
}

/// Per-mode threshold checked against one refinement `Nz -> 2 Nz - 1`.
fn refined_mode(profile: &DensityProfile, xi: f64, nz: usize) -> Result<ModeEigenResult> {
    let wrap = |e: Error| match e {
        Error::StabilizingCondition { min, at } => Error::UnboundedThreshold(format!(
            "rho_bar' = {min:.3e} <= 0 at x3 = {at:.4}"
        )),
        other => other,
    };
    let coarse = mode_kappa_c(profile, xi, nz).map_err(wrap)?;
    let fine = mode_kappa_c(profile, xi, 2 * nz - 1).map_err(wrap)?;
    let change = (fine.kappa_of_xi - coarse.kappa_of_xi).abs() / coarse.kappa_of_xi.abs();
    if !change.is_finite() || change > DIVERGENCE_TOL {
        return Err(Error::UnboundedThreshold(format!(
            "eigenvalue at xi = {xi:.4} changes by {change:.2e} under refinement ({:.6e} -> {:.6e})",
            coarse.kappa_of_xi, fine.kappa_of_xi
        )));
    }
    Ok(coarse)
}

/// Upper bound `g ||rho_bar'||_inf ||1/rho_bar'||_inf^2 / (pi^2 h^-2 + Lmax^-2)`.
pub fn upper_bound(profile: &DensityProfile, geometry: &DomainGeometry) -> f64 {
    let h = profile.h;
    let mut max_d1 = f64::NEG_INFINITY;
    let mut min_d1 = f64::INFINITY;
    let samples = profile
        .d1
        .iter()
        .cloned()
        .chain((0..=1000).map(|i| profile.eval(h * i as f64 / 1000.0)[1]));
    for d in samples {
        max_d1 = max_d1.max(d.abs());
        min_d1 = min_d1.min(d.abs());
    }
    let l = geometry.l_max();
    profile.g * max_d1 / (min_d1 * min_d1) / (PI * PI / (h * h) + 1.0 / (l * l))
}

/// `kappa_C` by scanning the `modes` smallest lattice magnitudes.
pub fn kappa_c(
    profile: &DensityProfile,
    geometry: &DomainGeometry,
    nz: usize,
    modes: usize,
) -> Result<ThresholdResult> {
    geometry.validate()?;
    if (geometry.h - profile.h).abs() > 1e-12 * geometry.h {
        return Err(Error::Geometry(format!(
            "profile height {} differs from slab height {}",
            profile.h, geometry.h
        )));
    }
    if modes == 0 {
        return Err(Error::InvalidArgument("at least one mode must be scanned".into()));
    }
    let mut curve = Vec::with_capacity(modes);
    for xi in lattice_magnitudes(geometry, modes) {
        let r = refined_mode(profile, xi, nz)?;
        curve.push(CurvePoint { xi, kappa: r.kappa_of_xi });
    }
    let best = curve
        .iter()
        .copied()
        .max_by(|a, b| a.kappa.partial_cmp(&b.kappa).expect("finite"))
        .expect("nonempty curve");
    Ok(ThresholdResult {
        kappa_c: best.kappa,
        argmax_xi: best.xi,
        upper_bound: upper_bound(profile, geometry),
        curve,
        nz,
    })
}

/// Closed form `g / ((pi^2 h^-2 + Lmax^-2) slope)` for a linear profile;
/// `l_max = None` drops the horizontal term (unbounded cell).
pub fn analytic_kappa_c_linear(g: f64, slope: f64, h: f64, l_max: Option<f64>) -> f64 {
    let horizontal = l_max.map_or(0.0, |l| 1.0 / (l * l));
    g / ((PI * PI / (h * h) + horizontal) * slope)
}

/// `g int rho_bar' phi^2 / int rho_bar'^2 (|xi|^2 phi^2 + phi'^2)` on the
/// profile grid, by Clenshaw–Curtis quadrature of the interpolant on a
/// doubled node set.
pub fn rayleigh_quotient(phi: &[f64], xi_mag: f64, profile: &DensityProfile) -> Result<f64> {
    let n = profile.nz();
    if phi.len() != n {
        return Err(Error::InvalidArgument(format!(
            "phi has {} samples, profile grid has {n}",
            phi.len()
        )));
    }
    let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if phi[0].abs() > 1e-12 * scale || phi[n - 1].abs() > 1e-12 * scale {
        return Err(Error::InvalidArgument("phi must vanish at both walls".into()));
    }
    let rule = fine_rule(profile);
    let v = DVector::from_column_slice(phi);
    let f = &rule.e * &v;
    let df = &rule.ed * &v;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..rule.weights.len() {
        let p1 = rule.d1[j];
        num += rule.weights[j] * profile.g * p1 * f[j] * f[j];
        den += rule.weights[j] * p1 * p1 * (xi_mag * xi_mag * f[j] * f[j] + df[j] * df[j]);
    }
    if den <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// `||w3||_0^2 / ||grad w3||_0^2` on a grid.
pub fn poincare_ratio(grid: &Grid, w3: &[f64]) -> Result<f64> {
    let l2 = sobolev_norm(grid, w3, 0, 0).powi(2);
    let h1 = sobolev_norm(grid, w3, 1, 0).powi(2);
    let grad = h1 - l2;
    if grad <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(l2 / grad)
}

/// Ratio achieved by the extremal field `w3 = -sin(pi x3 / h) sin(x1 / L1)`
/// and the optimal constant `(pi^2 h^-2 + L1^-2)^{-1}`.
pub fn optimal_poincare_check(h: f64, l1: f64) -> Result<(f64, f64)> {
    let geometry = DomainGeometry::new_2d(l1, h)?;
    let grid = Grid::new(geometry, 16, 1, 33, true)?;
    let w3 = grid.sample(|x, _, z| -(PI * z / h).sin() * (x / l1).sin());
    let ratio = poincare_ratio(&grid, &w3)?;
    Ok((ratio, 1.0 / (PI * PI / (h * h) + 1.0 / (l1 * l1))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_profile, ProfileSpec};

    fn linear(slope: f64, g: f64, nz: usize) -> DensityProfile {
        make_profile(ProfileSpec::Linear { base: 2.0, slope }, 1.0, g, nz, true).unwrap()
    }

    #[test]
    fn linear_mode_matches_constant_coefficient_solution() {
        let p = linear(1.0, 1.0, 33);
        let r = mode_kappa_c(&p, 1.0, 33).unwrap();
        assert!((r.kappa_of_xi - 1.0 / (PI * PI + 1.0)).abs() < 1e-13);
        for (z, v) in r.grid.iter().zip(&r.phi) {
            assert!((v - (PI * z).sin()).abs() < 1e-10, "z={z} err={}", (v - (PI * z).sin()).abs());
        }
        assert!(r.residual < 1e-10);
        let r2 = mode_kappa_c(&p, 2.0, 65).unwrap();
        assert!((r2.kappa_of_xi - 1.0 / (PI * PI + 4.0)).abs() < 1e-11);
    }

    #[test]
    fn quotient_at_eigenfunction_equals_eigenvalue() {
        let p = make_profile(ProfileSpec::Exponential { base: 1.0, rate: 0.7 }, 1.0, 1.0, 33, true)
            .unwrap();
        let r = mode_kappa_c(&p, 1.5, 33).unwrap();
        let q = rayleigh_quotient(&r.phi, 1.5, &p).unwrap();
        assert!((q - r.kappa_of_xi).abs() < 1e-12 * r.kappa_of_xi);
    }

    #[test]
    fn lattice_scan_in_three_dimensions() {
        let g = DomainGeometry::new_3d(1.0, 2.0, 1.0).unwrap();
        let m = lattice_magnitudes(&g, 4);
        assert_eq!(m.len(), 4);
        assert!((m[0] - 0.5).abs() < 1e-15);
        assert!((m[1] - 1.0).abs() < 1e-15);
        assert!((m[2] - (1.25f64).sqrt()).abs() < 1e-15);
        assert!((m[3] - (2.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sign_change_is_reported_as_unbounded() {
        let p = make_profile(ProfileSpec::tanh_blend(2.0, 1.0, -0.5), 1.0, 1.0, 33, false).unwrap();
        let g = DomainGeometry::new_2d(1.0, 1.0).unwrap();
        let e = kappa_c(&p, &g, 33, 4).unwrap_err();
        assert!(e.to_string().contains("unbounded threshold"), "{e}");
    }

    #[test]
    fn poincare_extremizer() {
        let (r, b) = optimal_poincare_check(1.0, 1.0).unwrap();
        assert!((r - b).abs() < 1e-12);
    }
}
