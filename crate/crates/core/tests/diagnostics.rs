use std::f64::consts::PI;

use korteweg::diagnostics::{
    asymptotic_density, energy_e, energy_el, energy_report_for, find_threshold_by_bisection, fit_rate,
    BisectionConfig, RateModel,
};
use korteweg::solver::{init_state, PerturbationSpec};
use korteweg::spectral::{sobolev_norm, sobolev_norm_vec, Grid};
use korteweg::threshold::{analytic_kappa_c_linear, kappa_c};
use korteweg::{make_profile, DensityProfile, DomainGeometry, Error, Model, NSKState, PhysicsParams, ProfileSpec, Stepper, Scheme};
use proptest::prelude::*;

fn wide_cell() -> (Grid, DensityProfile) {
    // (0, 2 pi) x (0, 1)
    let geo = DomainGeometry::new_2d(1.0, 1.0).unwrap();
    let grid = Grid::new(geo, 16, 1, 33, true).unwrap();
    let p = make_profile(ProfileSpec::Linear { base: 1.0, slope: 1.0 }, 1.0, 1.0, 33, true).unwrap();
    (grid, p)
}

fn linear_model(kappa: f64, linearized: bool) -> Model {
    let (grid, p) = wide_cell();
    Model::new(grid, &p, PhysicsParams { mu: 0.1, kappa, g: 1.0 }, linearized).unwrap()
}

#[test]
fn potential_energy_examples() {
    let (grid, p) = wide_cell();
    let zero = vec![0.0; grid.len()];
    assert_eq!(energy_el(&grid, &p, 1.0, &zero).unwrap(), 0.0);
    assert_eq!(energy_e(&grid, &p, 1.0, &zero).unwrap(), 0.0);

    let r = grid.sample(|_, _, z| (PI * z).sin());
    let expected = PI.powi(3) - PI;
    assert!((expected - 27.864_6).abs() < 1e-4);
    assert!((energy_el(&grid, &p, 1.0, &r).unwrap() - expected).abs() < 1e-11);
    assert!((energy_e(&grid, &p, 1.0, &r).unwrap() - expected).abs() < 1e-11);
    // kappa pi^3 = g pi
    assert!(energy_el(&grid, &p, 1.0 / (PI * PI), &r).unwrap().abs() < 1e-12);
}

#[test]
fn potential_energy_vanishes_at_the_closed_form_threshold() {
    let (grid, p) = wide_cell();
    let kc = analytic_kappa_c_linear(1.0, 1.0, 1.0, Some(1.0));
    let r = grid.sample(|x, _, z| (PI * z).sin() * x.cos());
    assert!(energy_el(&grid, &p, kc, &r).unwrap().abs() < 1e-13);
    assert!(energy_el(&grid, &p, 0.9 * kc, &r).unwrap() < 0.0);
    assert!(energy_el(&grid, &p, 1.1 * kc, &r).unwrap() > 0.0);
}

#[test]
fn potential_energy_needs_the_stabilizing_condition() {
    let geo = DomainGeometry::new_2d(1.0, 1.0).unwrap();
    let grid = Grid::new(geo, 8, 1, 17, true).unwrap();
    let p = make_profile(ProfileSpec::tanh_blend(2.0, 1.0, -0.5), 1.0, 1.0, 17, false).unwrap();
    let r = grid.sample(|_, _, z| (PI * z).sin());
    assert!(matches!(energy_e(&grid, &p, 1.0, &r), Err(Error::StabilizingCondition { .. })));
    assert!(energy_el(&grid, &p, 1.0, &r).is_ok());
}

#[test]
fn tangential_potential_energy_is_coercive_above_the_threshold() {
    let kc = analytic_kappa_c_linear(1.0, 1.0, 1.0, Some(1.0));
    let model = linear_model(1.5 * kc, false);
    let mut spec = PerturbationSpec::single_mode(1e-2);
    spec.modes.push(korteweg::solver::ModeIndex::X(3));
    let state = init_state(&model.profile, &model.grid, &spec).unwrap();
    let d = model.rhs(&state).unwrap();
    let rep = energy_report_for(&model, &state, &d).unwrap();
    let grid = &model.grid;
    let d1 = grid.inverse(&grid.dh(&grid.forward(&state.rho), 1, 1));
    let h1 = sobolev_norm(grid, &d1, 1, 0).powi(2);
    assert!(rep.e_d1rho > 0.0);
    // ||r||_1^2 <= C E(r) with a moderate constant
    assert!(h1 <= 1e3 * rep.e_d1rho, "{h1} vs {}", rep.e_d1rho);
}

#[test]
fn equilibrium_report_has_no_perturbation_content() {
    let model = linear_model(0.2, false);
    let state = NSKState::zeros(model.grid.len());
    let d = model.rhs(&state).unwrap();
    let r = energy_report_for(&model, &state, &d).unwrap();
    for v in [
        r.mom1, r.mom2, r.div_max, r.wall_rho, r.wall_d3sq_rho, r.e_l, r.e_rho, r.e_d1rho, r.kinetic,
        r.dissipation, r.n_rho_h0, r.n_rho_h4, r.n_v_h0, r.n_v_h3, r.n_rho_t_h2, r.n_v_t_h1, r.tang_e,
        r.tang_d, r.script_e, r.script_d,
    ] {
        assert_eq!(v, 0.0);
    }
    assert_eq!((r.rho_min, r.rho_max), (1.0, 2.0));
    assert!((r.mass - 2.0 * PI * 1.5).abs() < 1e-12);
}

#[test]
fn report_recomposes_from_norms() {
    let model = linear_model(0.2, false);
    let mut state = init_state(&model.profile, &model.grid, &PerturbationSpec::single_mode(1e-2)).unwrap();
    state.rho.iter_mut().for_each(|r| *r = 0.0);
    let d = model.rhs(&state).unwrap();
    let r = energy_report_for(&model, &state, &d).unwrap();
    let grid = &model.grid;
    let spec = |f: &[f64]| grid.forward(f);
    let v: Vec<_> = [0, 2].iter().map(|&c| spec(&state.vel[c])).collect();
    let vt: Vec<_> = [0, 2].iter().map(|&c| spec(&d.v_t[c])).collect();
    let vr: Vec<&[_]> = v.iter().map(|x| x.as_slice()).collect();
    let vtr: Vec<&[_]> = vt.iter().map(|x| x.as_slice()).collect();
    let script_e = sobolev_norm(grid, &d.rho_t, 3, 0).powi(2)
        + sobolev_norm_vec(grid, &vr, 3, 0).powi(2)
        + sobolev_norm_vec(grid, &vtr, 1, 0).powi(2);
    assert!((r.script_e - script_e).abs() <= 1e-12 * script_e);
    assert!(r.tang_e <= r.script_e);
    assert!(r.kinetic >= r.rho_min * r.n_v_h0.powi(2) * (1.0 - 1e-12));
}

#[test]
fn fit_examples() {
    let t: Vec<f64> = (0..=100).map(|i| 5.0 * i as f64 / 100.0).collect();
    let y: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
    let f = fit_rate(&t, &y, RateModel::Exponential, Some((0.0, 5.0))).unwrap();
    assert!((f.rate + 2.0).abs() < 1e-6);
    assert!(f.r2 > 1.0 - 1e-12);

    let t: Vec<f64> = (0..=990).map(|i| 1.0 + 0.1 * i as f64).collect();
    let y: Vec<f64> = t.iter().map(|t| (1.0 + t).powi(-2)).collect();
    let f = fit_rate(&t, &y, RateModel::Algebraic, Some((1.0, 100.0))).unwrap();
    assert!((f.rate + 2.0).abs() < 1e-3);

    let wiggly: Vec<f64> = t.iter().map(|t| (1.0 + t).powi(-2) * (1.0 + 0.1 * t.sin())).collect();
    let f = fit_rate(&t, &wiggly, RateModel::Algebraic, Some((10.0, 100.0))).unwrap();
    assert!((f.rate + 2.0).abs() < 0.05, "{}", f.rate);
}

#[test]
fn fit_ignores_rows_outside_the_window() {
    let t: Vec<f64> = (0..40).map(|i| i as f64).collect();
    let y: Vec<f64> = t.iter().map(|&t| if t < 10.0 { -1.0 } else { (0.3 * t).exp() }).collect();
    let f = fit_rate(&t, &y, RateModel::Exponential, Some((10.0, 39.0))).unwrap();
    assert!((f.rate - 0.3).abs() < 1e-12);
    assert_eq!(f.points, 30);
    assert!(fit_rate(&t, &y, RateModel::Exponential, Some((0.0, 39.0))).is_err());
}

proptest! {
    #[test]
    fn fit_exponent_is_scale_invariant(
        c in 1e-6..1e6f64,
        rate in -3.0..3.0f64,
        noise in 0.0..0.2f64,
        algebraic in any::<bool>(),
    ) {
        let model = if algebraic { RateModel::Algebraic } else { RateModel::Exponential };
        let t: Vec<f64> = (0..50).map(|i| 0.2 * i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| (rate * t).exp() * (1.0 + noise * (3.0 * t).sin())).collect();
        let ys: Vec<f64> = y.iter().map(|v| c * v).collect();
        let a = fit_rate(&t, &y, model, None).unwrap();
        let b = fit_rate(&t, &ys, model, None).unwrap();
        prop_assert!((a.rate - b.rate).abs() <= 1e-9 * a.rate.abs().max(1.0));
        prop_assert!((a.r2 - b.r2).abs() <= 1e-9);
    }
}

#[test]
fn synthetic_trajectory_gives_half_rate() {
    let (grid, _) = wide_cell();
    let f = grid.sample(|_, _, z| z * (1.0 - z));
    let g = grid.sample(|x, _, z| (PI * z).sin().powi(3) * x.cos());
    let snaps: Vec<(f64, Vec<f64>)> = (1..=40)
        .map(|i| {
            let t = 10.0 * i as f64;
            let s = t.powf(-0.5);
            (t, f.iter().zip(&g).map(|(a, b)| a + s * b).collect())
        })
        .collect();
    let a = asymptotic_density(&grid, &snaps).unwrap();
    assert!((a.rate.unwrap() + 0.5).abs() < 0.05, "{:?}", a.rate);
    assert!(!a.converged);
    let mean = grid.horizontal_mean(&f);
    for (x, y) in a.rho_inf.iter().zip(&mean) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn equilibrium_trajectory_is_already_converged() {
    let (grid, _) = wide_cell();
    let f = grid.sample(|_, _, z| z * (1.0 - z));
    let snaps: Vec<(f64, Vec<f64>)> = (0..5).map(|i| (i as f64, f.clone())).collect();
    let a = asymptotic_density(&grid, &snaps).unwrap();
    assert!(a.converged);
    assert_eq!(a.rate, None);
    assert_eq!(a.final_mode_amplitude, 0.0);
    assert!(asymptotic_density(&grid, &snaps[..2]).is_err());
}

#[test]
fn stable_linearized_run_approaches_a_horizontal_mean() {
    let kc = analytic_kappa_c_linear(1.0, 1.0, 1.0, Some(1.0));
    let model = linear_model(2.0 * kc, true);
    let state = init_state(&model.profile, &model.grid, &PerturbationSpec::single_mode(1e-3)).unwrap();
    let grid = model.grid.clone();
    let mut s = Stepper::new(model, &state, 0.05, Scheme::ImexBdf2).unwrap();
    let mut snaps = vec![(0.0, state.rho.clone())];
    for k in 1..=400 {
        s.step().unwrap();
        if k % 40 == 0 {
            snaps.push((s.time(), s.state().rho));
        }
    }
    let a = asymptotic_density(&grid, &snaps).unwrap();
    let n = a.residuals.len();
    assert!(a.residuals[n - 1].1 < a.residuals[n / 2].1);
}

fn small_probes(kappa_lo: f64, kappa_hi: f64, nz: usize) -> BisectionConfig {
    let mut cfg = BisectionConfig::new(kappa_lo, kappa_hi);
    cfg.nx = 8;
    cfg.nz = nz;
    cfg.t_end = 100.0;
    cfg.rel_tol = 0.02;
    cfg
}

#[test]
fn bisection_recovers_the_linear_threshold() {
    let geo = DomainGeometry::new_2d(1.0, 1.0).unwrap();
    let p = make_profile(ProfileSpec::Linear { base: 1.0, slope: 1.0 }, 1.0, 1.0, 25, true).unwrap();
    let kc = analytic_kappa_c_linear(1.0, 1.0, 1.0, Some(1.0));
    let r = find_threshold_by_bisection(&p, &geo, &small_probes(0.5 * kc, 2.0 * kc, 25)).unwrap();
    assert!((r.kappa_hat / kc - 1.0).abs() <= 0.05, "{} vs {kc}", r.kappa_hat);
    assert!(r.hi - r.lo <= 0.02 * r.lo);
    assert!(r.probes.iter().all(|p| (p.rate > 0.0) == (p.kappa < kc)));
}

#[test]
fn bisection_matches_the_eigensolver_on_an_exponential_profile() {
    let geo = DomainGeometry::new_2d(1.0, 1.0).unwrap();
    let p = make_profile(ProfileSpec::Exponential { base: 1.0, rate: 0.7 }, 1.0, 1.0, 33, true).unwrap();
    let kc = kappa_c(&p, &geo, 33, 8).unwrap().kappa_c;
    let r = find_threshold_by_bisection(&p, &geo, &small_probes(0.5 * kc, 2.0 * kc, 33)).unwrap();
    assert!((r.kappa_hat / kc - 1.0).abs() <= 0.05, "{} vs {kc}", r.kappa_hat);
}

#[test]
fn stable_bracket_is_rejected() {
    let geo = DomainGeometry::new_2d(1.0, 1.0).unwrap();
    let p = make_profile(ProfileSpec::Linear { base: 1.0, slope: 1.0 }, 1.0, 1.0, 25, true).unwrap();
    let kc = analytic_kappa_c_linear(1.0, 1.0, 1.0, Some(1.0));
    let e = find_threshold_by_bisection(&p, &geo, &small_probes(2.0 * kc, 4.0 * kc, 25)).unwrap_err();
    match e {
        Error::Bracket { rate_lo, rate_hi, .. } => assert!(rate_lo < 0.0 && rate_hi < 0.0),
        other => panic!("{other}"),
    }
}
