use korteweg::profiles::{
    hydrostatic_pressure, validate_profile, validate_profile_with, ConditionTolerances,
};
use korteweg::{make_profile, DensityProfile, Error, ProfileSpec};
use proptest::prelude::*;

fn exponential(base: f64, rate: f64, nz: usize) -> DensityProfile {
    make_profile(ProfileSpec::Exponential { base, rate }, 1.0, 1.0, nz, true).unwrap()
}

/// Composite Simpson rule of `f` on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let dz = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * dz);
    }
    s * dz / 3.0
}

#[test]
fn linear_samples_match_closed_form() {
    let p = make_profile(ProfileSpec::Linear { base: 2.0, slope: 1.0 }, 1.0, 1.0, 65, true).unwrap();
    for (j, &z) in p.grid.iter().enumerate() {
        assert!((p.rho_bar[j] - (2.0 + z)).abs() < 1e-14);
        assert_eq!(p.d1[j], 1.0);
        assert_eq!((p.d2[j], p.d3[j], p.d4[j]), (0.0, 0.0, 0.0));
    }
}

#[test]
fn vacuum_and_decreasing_profiles_are_rejected() {
    let e = make_profile(ProfileSpec::Linear { base: 0.5, slope: -1.0 }, 1.0, 1.0, 65, true).unwrap_err();
    assert!(matches!(e, Error::NonPositiveDensity { .. }), "{e}");
    let e = make_profile(ProfileSpec::Linear { base: 3.0, slope: -1.0 }, 1.0, 1.0, 65, true).unwrap_err();
    assert!(matches!(e, Error::StabilizingCondition { .. }), "{e}");
    assert!(make_profile(ProfileSpec::Linear { base: 3.0, slope: -1.0 }, 1.0, 1.0, 65, false).is_ok());
}

#[test]
fn exponential_spot_value() {
    let p = exponential(1.0, 0.5, 65);
    let e = p.eval(1.0);
    assert!((e[0] - 0.5f64.exp()).abs() < 1e-14);
    assert!((e[0] - 1.648_721_270_700_128).abs() < 1e-14);
    assert!((e[1] - 0.5 * 0.5f64.exp()).abs() < 1e-14);
}

#[test]
fn validation_examples() {
    let lin = make_profile(ProfileSpec::Linear { base: 2.0, slope: 1.0 }, 1.0, 1.0, 65, true).unwrap();
    let r = validate_profile(&lin);
    assert!(r.verdict);
    assert_eq!(r.stabilizing.margin, 1.0);

    let sign_change = make_profile(ProfileSpec::tanh_blend(2.0, 1.0, -0.5), 1.0, 1.0, 65, false).unwrap();
    let r = validate_profile(&sign_change);
    assert!(r.rt.passed);
    assert!(!r.stabilizing.passed);
    assert!(!r.verdict);

    let (base, rate) = (1.5, 0.8);
    let r = validate_profile(&exponential(base, rate, 65));
    assert!(!r.wall_curvature.passed);
    assert!((r.wall_curvature.margin - rate * rate * base * rate.exp()).abs() < 1e-12);
    let r0 = validate_profile(&make_profile(ProfileSpec::Exponential { base, rate }, 1.0, 1.0, 65, true).unwrap());
    assert!(r0.wall_curvature.margin >= rate * rate * base);
    assert_eq!(r0.failed(), vec!["wall_curvature"]);
}

#[test]
fn tanh_blend_satisfies_every_condition() {
    let p = make_profile(ProfileSpec::tanh_blend(1.0, 0.5, 1.0), 1.0, 1.0, 65, true).unwrap();
    let r = validate_profile(&p);
    assert!(r.verdict, "{:?}", r.failed());
}

#[test]
fn hydrostatic_pressure_examples() {
    let lin = make_profile(ProfileSpec::Linear { base: 2.0, slope: 1.0 }, 1.0, 1.0, 65, true).unwrap();
    for kappa in [0.0, 1.0] {
        let p = hydrostatic_pressure(&lin, kappa);
        for (j, &z) in lin.grid.iter().enumerate() {
            assert!((p[j] + 2.0 * z + 0.5 * z * z).abs() < 1e-13, "z={z}");
        }
    }

    let (base, rate) = (1.0, 0.5);
    let ex = exponential(base, rate, 65);
    let p0 = hydrostatic_pressure(&ex, 0.0);
    for (j, &z) in ex.grid.iter().enumerate() {
        assert!((p0[j] + base * ((rate * z).exp() - 1.0) / rate).abs() < 1e-13);
    }
    let p1 = hydrostatic_pressure(&ex, 1.0);
    for (j, &z) in ex.grid.iter().enumerate() {
        let reference = simpson(
            |s| {
                let r = base * (rate * s).exp();
                r * r * rate.powi(3) - r
            },
            0.0,
            z,
            4000,
        );
        assert!((p1[j] - reference).abs() < 1e-10, "z={z}: {} vs {reference}", p1[j]);
    }
}

#[test]
fn hydrostatic_pressure_is_resolution_independent() {
    let spec = ProfileSpec::tanh_blend(1.0, 0.5, 1.0);
    let coarse = make_profile(spec.clone(), 1.0, 1.0, 65, true).unwrap();
    let fine = coarse.resample(129).unwrap();
    let pc = hydrostatic_pressure(&coarse, 0.3);
    let pf = hydrostatic_pressure(&fine, 0.3);
    // node j of the coarse grid is node 2j of the refined one
    let diff = (0..65).map(|j| (pc[j] - pf[2 * j]).abs()).fold(0.0, f64::max);
    assert!(diff <= 65f64.powi(-4), "{diff}");
}

fn analytic_spec() -> impl Strategy<Value = ProfileSpec> {
    prop_oneof![
        (0.5..3.0f64, 0.1..2.0f64).prop_map(|(base, slope)| ProfileSpec::Linear { base, slope }),
        (0.5..3.0f64, 0.1..1.5f64).prop_map(|(base, rate)| ProfileSpec::Exponential { base, rate }),
        (1.0..3.0f64, 0.2..1.0f64, 0.1..1.0f64).prop_map(|(b, s, a)| ProfileSpec::tanh_blend(b, s, a)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn derivative_samples_match_central_differences(spec in analytic_spec()) {
        let p = make_profile(spec, 1.0, 1.0, 33, true).unwrap();
        for k in 1..5 {
            for &dz in &[1e-3, 5e-4] {
                let mut worst = 0.0f64;
                let mut scale = 1.0f64;
                for i in 1..40 {
                    let z = i as f64 / 40.0;
                    let fd = (p.eval(z + dz)[k - 1] - p.eval(z - dz)[k - 1]) / (2.0 * dz);
                    worst = worst.max((fd - p.eval(z)[k]).abs());
                    scale = scale.max(p.eval(z)[k].abs());
                }
                // O(dz^2) with a generous constant for the steep tanh layer
                prop_assert!(worst <= 1e3 * scale * dz * dz, "k={k} dz={dz} err={worst}");
            }
        }
    }

    #[test]
    fn loosening_tolerances_never_fails_a_passing_condition(
        spec in analytic_spec(),
        loosen in 0.0..1.0f64,
    ) {
        let p = make_profile(spec, 1.0, 1.0, 33, true).unwrap();
        let tight = ConditionTolerances::for_profile(&p);
        let loose = ConditionTolerances {
            positivity: tight.positivity - loosen,
            stabilizing: tight.stabilizing - loosen,
            rt: tight.rt - loosen,
            wall_curvature: tight.wall_curvature + loosen,
        };
        let a = validate_profile_with(&p, tight);
        let b = validate_profile_with(&p, loose);
        for (x, y) in a.conditions().iter().zip(b.conditions()) {
            prop_assert!(!x.passed || y.passed, "{} flipped", x.name);
        }
        prop_assert!(!a.verdict || b.verdict);
    }
}
