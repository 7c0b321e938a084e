//! Acceptance report: one PASS/FAIL line per criterion with the measured values.
//!
//! Results are reported, not asserted, so a failing criterion stays visible
//! without hiding the others. Set `ACCEPTANCE_STRICT=1` to exit non-zero on any FAIL.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use korteweg::diagnostics::{
    asymptotic_density, energy_report, find_threshold_by_bisection, fit_rate, linear_energy, BisectionConfig,
    EnergyReport, RateModel,
};
use korteweg::solver::{init_state, run, PerturbationSpec, RunSink, RunStatus, VerticalShape};
use korteweg::spectral::{sobolev_norm, Grid};
use korteweg::threshold::{kappa_c, optimal_poincare_check, poincare_ratio};
use korteweg::{make_profile, DensityProfile, DomainGeometry, Model, NSKState, PhysicsParams, ProfileSpec, Scheme, Stepper};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KAPPA_C_LINEAR: f64 = 0.091_999_668_350_375_24;

/// Lines keyed by criterion number, printed in order at the end.
#[derive(Default)]
struct Report {
    lines: BTreeMap<usize, (bool, String)>,
}

impl Report {
    fn line(&mut self, n: usize, pass: bool, detail: String) {
        self.lines.insert(n, (pass, detail));
    }

    /// Print every line; returns the number of failures.
    fn print(&self) -> usize {
        for (n, (pass, detail)) in &self.lines {
            println!("criterion {n:>2}: {}  {detail}", if *pass { "PASS" } else { "FAIL" });
        }
        let failures = self.lines.values().filter(|l| !l.0).count();
        println!("acceptance: {failures} of {} criteria failed", self.lines.len());
        failures
    }
}

/// Diagnostic rows, `||v3||_0` samples and density snapshots of one run.
struct Recorder {
    every: u64,
    snap_every: u64,
    rows: Vec<EnergyReport>,
    v3: Vec<(f64, f64)>,
    snapshots: Vec<(f64, Vec<f64>)>,
}

impl Recorder {
    fn new(every: u64, snap_every: u64) -> Self {
        Recorder {
            every,
            snap_every,
            rows: Vec::new(),
            v3: Vec::new(),
            snapshots: Vec::new(),
        }
    }
}

impl RunSink for Recorder {
    fn observe(&mut self, stepper: &Stepper, last: bool) -> korteweg::Result<()> {
        let n = stepper.steps();
        if n.is_multiple_of(self.every) || last {
            self.rows.push(energy_report(stepper)?);
            let s = stepper.state();
            self.v3.push((stepper.time(), sobolev_norm(&stepper.model().grid, &s.vel[2], 0, 0)));
        }
        if n.is_multiple_of(self.snap_every) || last {
            self.snapshots.push((stepper.time(), stepper.state().rho));
        }
        Ok(())
    }
}

struct Completed {
    name: &'static str,
    nonlinear: bool,
    rows: Vec<EnergyReport>,
}

fn geo() -> DomainGeometry {
    DomainGeometry::new_2d(1.0, 1.0).unwrap()
}

fn linear_profile(nz: usize) -> DensityProfile {
    make_profile(ProfileSpec::Linear { base: 1.0, slope: 1.0 }, 1.0, 1.0, nz, true).unwrap()
}

fn model(nx: usize, nz: usize, mu: f64, kappa: f64, linearized: bool) -> Model {
    let grid = Grid::new(geo(), nx, 1, nz, true).unwrap();
    Model::new(grid, &linear_profile(nz), PhysicsParams { mu, kappa, g: 1.0 }, linearized).unwrap()
}

fn single_mode(amplitude: f64, lift: bool) -> PerturbationSpec {
    PerturbationSpec {
        lift,
        shape: VerticalShape::Sine,
        ..PerturbationSpec::single_mode(amplitude)
    }
}

fn simulate(m: Model, spec: &PerturbationSpec, dt: f64, t_end: f64, rec: &mut Recorder) -> (RunStatus, f64) {
    let state = init_state(&m.profile, &m.grid, spec).unwrap();
    let mut stepper = Stepper::new(m, &state, dt, Scheme::ImexBdf2).unwrap();
    let out = run(&mut stepper, t_end, rec).unwrap();
    (out.status, out.t_final)
}

fn criterion_1(r: &mut Report) {
    let p = linear_profile(65);
    let start = Instant::now();
    let res = kappa_c(&p, &geo(), 64, 8).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let rel = (res.kappa_c - KAPPA_C_LINEAR).abs() / KAPPA_C_LINEAR;
    r.line(
        1,
        rel <= 1e-6 && secs < 1.0,
        format!("linear kappa_C = {:.15} (exact {KAPPA_C_LINEAR:.15}), rel err {rel:.2e}, {secs:.3} s", res.kappa_c),
    );
}

fn criterion_2(r: &mut Report) {
    let table: Vec<(f64, f64)> = (0..=40)
        .map(|i| {
            let z = i as f64 / 40.0;
            (z, 1.0 + 0.8 * z + 0.1 * (PI * z).sin().powi(2) * z)
        })
        .collect();
    let families = [
        ("linear", ProfileSpec::Linear { base: 1.0, slope: 1.0 }),
        ("exponential", ProfileSpec::Exponential { base: 1.0, rate: 0.7 }),
        ("tanh-blend", ProfileSpec::tanh_blend(1.0, 0.5, 1.0)),
        (
            "tabulated",
            ProfileSpec::Tabulated {
                path: None,
                points: table,
                wall_tolerance: None,
            },
        ),
    ];
    let mut ok = 0;
    let mut parts = Vec::new();
    for (name, spec) in families {
        match make_profile(spec, 1.0, 1.0, 65, true).and_then(|p| kappa_c(&p, &geo(), 65, 8)) {
            Ok(res) => {
                let margin = (res.upper_bound - res.kappa_c) / res.upper_bound;
                if res.kappa_c <= res.upper_bound * (1.0 + 1e-12) {
                    ok += 1;
                }
                parts.push(format!("{name} {:.6}/{:.6} margin {margin:.3e}", res.kappa_c, res.upper_bound));
            }
            Err(e) => parts.push(format!("{name} error: {e}")),
        }
    }
    r.line(2, ok >= 3, format!("{ok} families below the bound: {}", parts.join("; ")));
}

fn criterion_3(r: &mut Report) {
    let mut worst_gap = 0.0f64;
    let mut exceed = 0;
    let mut trials = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (h, l1) in [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0)] {
        let (ratio, bound) = optimal_poincare_check(h, l1).unwrap();
        worst_gap = worst_gap.max((ratio - bound).abs());
        let g = DomainGeometry::new_2d(l1, h).unwrap();
        let grid = Grid::new(g, 16, 1, 33, true).unwrap();
        for _ in 0..100 {
            let c: Vec<(f64, f64, usize)> = (0..5)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI), rng.random_range(1..4)))
                .collect();
            let j: Vec<usize> = (0..5).map(|_| rng.random_range(1..5)).collect();
            // vanishes on the walls and has no horizontal mean
            let w3 = grid.sample(|x, _, z| {
                c.iter()
                    .zip(&j)
                    .map(|((a, ph, k), &jz)| a * (jz as f64 * PI * z / h).sin() * (*k as f64 * x / l1 + ph).cos())
                    .sum()
            });
            trials += 1;
            if poincare_ratio(&grid, &w3).unwrap() > bound * (1.0 + 1e-12) {
                exceed += 1;
            }
        }
    }
    r.line(
        3,
        worst_gap <= 1e-10 && exceed == 0,
        format!("extremizer gap {worst_gap:.2e} over (1,1),(2,1),(1,3); {exceed}/{trials} random fields exceed"),
    );
}

fn criterion_4(r: &mut Report) {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [
        ("linear", ProfileSpec::Linear { base: 1.0, slope: 1.0 }),
        ("tanh-blend", ProfileSpec::tanh_blend(1.0, 0.5, 1.0)),
    ] {
        let p = make_profile(spec, 1.0, 1.0, 65, true).unwrap();
        let kc = kappa_c(&p, &geo(), 65, 8).unwrap().kappa_c;
        match find_threshold_by_bisection(&p, &geo(), &BisectionConfig::new(0.5 * kc, 1.5 * kc)) {
            Ok(b) => {
                let rel = (b.kappa_hat - kc).abs() / kc;
                pass &= rel <= 0.05;
                parts.push(format!("{name} {:.5} vs {kc:.5} ({:.2}%, {} probes)", b.kappa_hat, 100.0 * rel, b.probes.len()));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name} error: {e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(4, pass && secs <= 600.0, format!("{}; {secs:.0} s", parts.join("; ")));
}

/// Nonlinear decay above threshold; shared by criteria 5, 7 and 10.
fn stable_run() -> (RunStatus, f64, Recorder) {
    let m = model(64, 65, 0.03, 2.0 * KAPPA_C_LINEAR, false);
    let mut rec = Recorder::new(10, 100);
    let (status, t) = simulate(m, &single_mode(1e-3, false), 0.01, 50.0, &mut rec);
    (status, t, rec)
}

fn criterion_5(r: &mut Report, status: &RunStatus, t_final: f64, rec: &Recorder) {
    let t: Vec<f64> = rec.rows.iter().map(|x| x.t).collect();
    let te: Vec<f64> = rec.rows.iter().map(|x| x.tang_e).collect();
    let fit = fit_rate(&t, &te, RateModel::Algebraic, Some((10.0, 50.0)));
    let weighted: Vec<(f64, f64)> = t.iter().zip(&te).map(|(t, e)| (*t, (1.0 + t).powi(2) * e)).collect();
    let early = weighted.iter().filter(|w| w.0 <= 5.0).map(|w| w.1).fold(0.0, f64::max);
    let overall = weighted.iter().map(|w| w.1).fold(0.0, f64::max);
    let ratio = overall / early;
    let completed = *status == RunStatus::Completed && t_final >= 50.0 - 1e-9;
    match fit {
        Ok(f) => r.line(
            5,
            completed && f.rate <= -1.5 && ratio <= 10.0,
            format!(
                "{} at t = {t_final:.2}; tang_E ~ <t>^{:.3} (R2 {:.4}) on [10, 50]; max <t>^2 tang_E / early max = {ratio:.3}",
                status.label(),
                f.rate,
                f.r2
            ),
        ),
        Err(e) => r.line(5, false, format!("{} at t = {t_final:.2}; fit error: {e}", status.label())),
    }
}

/// Linearized growth below threshold; rows join criterion 7.
fn criterion_6(r: &mut Report) -> Completed {
    let m = model(64, 65, 0.1, 0.5 * KAPPA_C_LINEAR, true);
    let mut rec = Recorder::new(10, u64::MAX);
    let (status, t_final) = simulate(m, &single_mode(1e-6, false), 0.05, 100.0, &mut rec);
    let (t, y): (Vec<f64>, Vec<f64>) = rec.v3.iter().cloned().unzip();
    match fit_rate(&t, &y, RateModel::Exponential, None) {
        Ok(f) => r.line(
            6,
            status == RunStatus::Completed && f.rate > 0.0 && f.r2 > 0.99,
            format!("||v3||_0 ~ exp({:.5} t), R2 {:.6}, {} to t = {t_final:.1}", f.rate, f.r2, status.label()),
        ),
        Err(e) => r.line(6, false, format!("fit error: {e}")),
    }
    Completed {
        name: "linearized-growth",
        nonlinear: false,
        rows: rec.rows,
    }
}

fn criterion_7(r: &mut Report, runs: &[Completed]) {
    let mut mass = 0.0f64;
    let mut mom = 0.0f64;
    let mut div = 0.0f64;
    let mut overshoot = 0.0f64;
    let mut per_run = Vec::new();
    let mut walls = [0.0f64; 3];
    for c in runs {
        let first = &c.rows[0];
        let scale = first.mass.abs().max(1.0);
        let mut w = [0.0f64; 3];
        for row in &c.rows {
            mass = mass.max((row.mass - first.mass).abs() / scale);
            mom = mom.max(row.mom1.abs()).max(row.mom2.abs());
            div = div.max(row.div_max);
            if c.nonlinear {
                overshoot = overshoot
                    .max(first.rho_min - row.rho_min)
                    .max(row.rho_max - first.rho_max);
            }
            w[0] = w[0].max(row.wall_rho);
            w[1] = w[1].max(row.wall_d3rho);
            w[2] = w[2].max(row.wall_d3sq_rho);
        }
        for k in 0..3 {
            walls[k] = walls[k].max(w[k]);
        }
        per_run.push(format!("{} [{:.1e}, {:.1e}, {:.1e}]", c.name, w[0], w[1], w[2]));
    }
    let pass = mass <= 1e-12 && mom <= 1e-8 && div <= 1e-10 && overshoot <= 1e-4 && walls.iter().all(|w| *w <= 1e-6);
    r.line(
        7,
        pass,
        format!(
            "mass {mass:.1e}, momenta {mom:.1e}, div {div:.1e}, min/max overshoot {overshoot:.1e} (nonlinear runs); \
             wall traces [rho, d3 rho, d3^2 rho] {}",
            per_run.join(", ")
        ),
    );
}

/// Generator of the semi-discrete linearized system on the stepper's state space.
///
/// One backward Euler step is the resolvent `E = (I - h A)^-1`, restricted to its
/// range (solenoidal, slip velocities). Assembling `E` from unit states and
/// inverting on that range gives `A = (I - E^-1) / h` exactly, with no `h` error.
/// Returns an orthonormal basis `B` of the range and `A` in that basis.
fn semi_discrete_generator(m: &Model, h: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.grid.len();
    let mut e = DMatrix::<f64>::zeros(3 * n, 3 * n);
    for col in 0..3 * n {
        let mut s = NSKState::zeros(n);
        match col / n {
            0 => s.rho[col % n] = 1.0,
            1 => s.vel[0][col % n] = 1.0,
            _ => s.vel[2][col % n] = 1.0,
        }
        let mut stepper = Stepper::new(m.clone(), &s, h, Scheme::ImexEuler).unwrap();
        stepper.step().unwrap();
        e.set_column(col, &pack(&stepper.state()));
    }
    let svd = e.clone().svd(true, false);
    let keep: Vec<usize> = (0..3 * n).filter(|&i| svd.singular_values[i] > 1e-8).collect();
    let b = svd.u.unwrap().select_columns(&keep);
    let restricted = b.transpose() * &e * &b;
    let a = (DMatrix::identity(keep.len(), keep.len()) - restricted.try_inverse().unwrap()) / h;
    (b, a)
}

fn pack(s: &NSKState) -> DVector<f64> {
    DVector::from_iterator(3 * s.rho.len(), s.rho.iter().chain(&s.vel[0]).chain(&s.vel[2]).copied())
}

fn criterion_8(r: &mut Report) -> Vec<Completed> {
    let m = model(8, 17, 0.1, 0.2, true);
    let x0 = init_state(&m.profile, &m.grid, &single_mode(1e-3, false)).unwrap();
    let (basis, a) = semi_discrete_generator(&m, 1e-3);
    let c0 = basis.transpose() * pack(&x0);
    let exact = &basis * (a.exp() * c0);
    let scale = exact.amax();
    let mut errs = Vec::new();
    let mut runs = Vec::new();
    for (i, dt) in [0.02, 0.01, 0.005, 0.001].into_iter().enumerate() {
        let mut rec = Recorder::new(10, u64::MAX);
        let mut stepper = Stepper::new(m.clone(), &x0, dt, Scheme::ImexBdf2).unwrap();
        run(&mut stepper, 1.0, &mut rec).unwrap();
        errs.push((pack(&stepper.state()) - &exact).amax() / scale);
        if i == 3 {
            runs.push(Completed {
                name: "oracle",
                nonlinear: false,
                rows: rec.rows,
            });
        }
    }
    let orders: Vec<f64> = errs.windows(2).take(2).map(|w| (w[0] / w[1]).log2()).collect();
    let order = orders.iter().sum::<f64>() / orders.len() as f64;
    r.line(
        8,
        (order - 2.0).abs() <= 0.25 && errs[3] <= 1e-4,
        format!(
            "errors vs exp(A) at t = 1 for dt 0.02/0.01/0.005: {:.2e} {:.2e} {:.2e}, order {order:.3}; dt 0.001 error {:.2e}",
            errs[0], errs[1], errs[2], errs[3]
        ),
    );
    runs
}

/// Largest residual of the discrete energy identity over `[0.2, 1]`.
fn energy_residual(dt: f64) -> f64 {
    let m = model(32, 33, 0.1, 0.05, true);
    let x0 = init_state(&m.profile, &m.grid, &single_mode(1e-2, false)).unwrap();
    let mut stepper = Stepper::new(m, &x0, dt, Scheme::ImexBdf2).unwrap();
    let mut prev = linear_energy(stepper.model(), &stepper.state()).unwrap();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    while stepper.time() < 1.0 - 1e-12 {
        stepper.step().unwrap();
        let cur = linear_energy(stepper.model(), &stepper.state()).unwrap();
        if stepper.time() > 0.2 {
            let res = (cur.energy - prev.energy) / dt + 0.5 * (cur.dissipation + prev.dissipation);
            worst = worst.max(res.abs());
            scale = scale.max(cur.dissipation);
        }
        prev = cur;
    }
    worst / scale
}

fn criterion_9(r: &mut Report) {
    let a = energy_residual(0.01);
    let b = energy_residual(0.005);
    let ratio = a / b;
    r.line(
        9,
        ratio >= 3.5,
        format!("relative identity residual {a:.3e} at dt 0.01, {b:.3e} at dt 0.005, ratio {ratio:.2}"),
    );
}

fn criterion_10(r: &mut Report, rec: &Recorder) {
    let grid = Grid::new(geo(), 64, 1, 65, true).unwrap();
    match asymptotic_density(&grid, &rec.snapshots) {
        Ok(a) => {
            let rate = a.rate.unwrap_or(f64::NEG_INFINITY);
            r.line(
                10,
                a.converged || rate <= -0.4,
                format!(
                    "||rho - rho_inf||_1 ~ <t>^{rate:.3} (R2 {:.4}) over {} snapshots; last mode amplitude {:.2e}",
                    a.r2.unwrap_or(1.0),
                    a.residuals.len(),
                    a.final_mode_amplitude
                ),
            )
        }
        Err(e) => r.line(10, false, format!("error: {e}")),
    }
}

/// Short nonlinear run from data lifted to satisfy the wall condition on `d3 rho`.
fn lifted_run() -> Completed {
    let m = model(64, 65, 0.03, 2.0 * KAPPA_C_LINEAR, false);
    let mut rec = Recorder::new(10, u64::MAX);
    simulate(m, &single_mode(1e-3, true), 0.01, 5.0, &mut rec);
    Completed {
        name: "lifted",
        nonlinear: true,
        rows: rec.rows,
    }
}

fn main() {
    let mut r = Report::default();
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    let (status, t_final, stable) = stable_run();
    criterion_5(&mut r, &status, t_final, &stable);
    let mut runs = vec![criterion_6(&mut r)];
    let oracle = criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r, &stable);
    runs.push(Completed {
        name: "stable",
        nonlinear: true,
        rows: stable.rows,
    });
    runs.extend(oracle);
    runs.push(lifted_run());
    criterion_7(&mut r, &runs);
    if r.print() > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
