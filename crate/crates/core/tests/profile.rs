use hanging_core::profile::{
    axis_seed_sensitivity, integrate_from_axis, integrate_from_interior, read_profile_csv, rotational_residual,
    IntegratorConfig, ProfileEquation, ProfileError, Termination,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// u(1) for u0 = 1, from the fixed-step oracle below
const DOME_U1: f64 = 1.242_255_980_352_7;
// blow-up abscissa of the backward run from (2, 1, 0)
const BACKWARD_R_STAR: f64 = 1.066_573_936_3;

/// Classical RK4 with a fixed step, seeded like the library.
fn rk4_axis(u0: f64, delta: f64, r_end: f64, h: f64) -> (f64, f64) {
    let f = |r: f64, u: f64, p: f64| (1.0 + p * p) * (1.0 / u - p / r);
    let (mut r, mut u, mut p) = (delta, u0 + delta * delta / (4.0 * u0), delta / (2.0 * u0));
    let n = ((r_end - delta) / h).round() as usize;
    let h = (r_end - delta) / n as f64;
    for _ in 0..n {
        let k1 = (p, f(r, u, p));
        let k2 = (p + 0.5 * h * k1.1, f(r + 0.5 * h, u + 0.5 * h * k1.0, p + 0.5 * h * k1.1));
        let k3 = (p + 0.5 * h * k2.1, f(r + 0.5 * h, u + 0.5 * h * k2.0, p + 0.5 * h * k2.1));
        let k4 = (p + h * k3.1, f(r + h, u + h * k3.0, p + h * k3.1));
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        p += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        r += h;
    }
    (u, p)
}

fn blow_up_at(t: Termination) -> f64 {
    match t {
        Termination::SlopeBlowUp { at } | Termination::HeightBlowUp { at } => at,
        other => panic!("no blow-up: {other:?}"),
    }
}

#[test]
fn axis_start_matches_taylor() {
    let p = integrate_from_axis(1.0, 1.0, &IntegratorConfig::default()).unwrap();
    let (u, du) = p.eval(0.1).unwrap();
    assert!((u - (1.0 + 0.01 / 4.0)).abs() < 5e-5, "{u}");
    assert!((du - 0.05).abs() < 1e-3, "{du}");
}

#[test]
fn axis_start_matches_fixed_step_oracle() {
    let cfg = IntegratorConfig::default();
    let p = integrate_from_axis(1.0, 1.0, &cfg).unwrap();
    let (oracle, _) = rk4_axis(1.0, 1e-4, 1.0, 1e-6);
    assert!((p.last().height - oracle).abs() < 1e-8, "{} {oracle}", p.last().height);
    assert!((oracle - DOME_U1).abs() < 1e-11);
    assert_eq!(p.termination(), Termination::ReachedTarget);
}

#[test]
fn seed_offset_is_immaterial() {
    let d = axis_seed_sensitivity(1.0, 1.0, &IntegratorConfig::default()).unwrap();
    assert!(d < 1e-9, "{d}");
}

#[test]
fn axis_profile_is_increasing_and_convex_near_axis() {
    let p = integrate_from_axis(1.0, 2.0, &IntegratorConfig::default()).unwrap();
    let s = p.samples();
    assert!(s.windows(2).all(|w| w[1].abscissa > w[0].abscissa && w[1].height > w[0].height));
    assert!(!p.has_interior_max());
    let k = p.curvature_at(1).unwrap();
    assert!((k - 0.5).abs() < 1e-3, "{k}");
}

#[test]
fn axis_profile_residual_below_tolerance() {
    let p = integrate_from_axis(1.0, 2.0, &IntegratorConfig::default()).unwrap();
    assert!(p.max_residual() < 1e-8, "{}", p.max_residual());
}

#[test]
fn backward_run_blows_up_before_axis() {
    let cfg = IntegratorConfig::default();
    let p = integrate_from_interior(2.0, 1.0, 0.0, 0.0, &cfg).unwrap();
    let r_star = blow_up_at(p.termination());
    assert!(r_star > 0.0 && r_star < 2.0);
    let tight = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..cfg };
    let q = integrate_from_interior(2.0, 1.0, 0.0, 0.0, &tight).unwrap();
    assert!((blow_up_at(q.termination()) - r_star).abs() < 1e-6);
    assert!((r_star - BACKWARD_R_STAR).abs() < 1e-8, "{r_star}");
    assert_eq!(ProfileEquation::Rotational.second_derivative(2.0, 1.0, 0.0), 1.0);
    let k = p.curvature_at(1).unwrap();
    assert!((k - 1.0).abs() < 1e-2, "{k}");
}

#[test]
fn cone_is_reproduced() {
    let cfg = IntegratorConfig::default();
    for r_end in [0.5, 2.0] {
        let p = integrate_from_interior(1.0, 1.0, 1.0, r_end, &cfg).unwrap();
        for s in p.samples() {
            assert!((s.height - s.abscissa).abs() < 1e-8);
        }
        let mut r = 0.5;
        while r <= 2.0 {
            if let Some((u, _)) = p.eval(r) {
                assert!((u - r).abs() < 1e-8);
            }
            r += 0.01;
        }
    }
}

#[test]
fn cone_toward_axis_is_singular() {
    let err = integrate_from_interior(1.0, 1.0, 1.0, 0.0, &IntegratorConfig::default()).unwrap_err();
    assert!(matches!(err, ProfileError::HeightVanished { .. }), "{err:?}");
}

#[test]
fn cone_residual_vanishes_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let r: f64 = 10.0 * (1.0 - rng.gen::<f64>());
        assert!(rotational_residual(r, r, 1.0, 0.0).unwrap().abs() < 1e-12);
    }
}

#[test]
fn residual_examples() {
    assert_eq!(rotational_residual(1.0, 1.0, 1.0, 0.0).unwrap(), 0.0);
    assert_eq!(rotational_residual(2.0, 1.0, 0.0, 1.0).unwrap(), 0.0);
    assert_eq!(rotational_residual(1.0, 1.0, 0.0, 0.0).unwrap(), -1.0);
    assert!(rotational_residual(0.0, 1.0, 0.0, 0.0).is_err());
    assert!(rotational_residual(1.0, 0.0, 0.0, 0.0).is_err());
}

#[test]
fn rejects_bad_initial_data() {
    let cfg = IntegratorConfig::default();
    assert!(matches!(integrate_from_axis(0.0, 1.0, &cfg), Err(ProfileError::InvalidHeight(_))));
    assert!(matches!(integrate_from_interior(0.0, 1.0, 0.0, 1.0, &cfg), Err(ProfileError::InvalidAbscissa(_))));
    assert!(matches!(integrate_from_interior(1.0, -1.0, 0.0, 1.0, &cfg), Err(ProfileError::InvalidHeight(_))));
}

#[test]
fn csv_round_trip() {
    let p = integrate_from_axis(1.0, 1.0, &IntegratorConfig::default()).unwrap();
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    assert!(buf.starts_with(b"r,u,du\n"));
    let back = read_profile_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), p.samples().len());
    for (a, b) in back.iter().zip(p.samples()) {
        assert!((a.height - b.height).abs() <= 1e-12 * b.height);
    }
}

#[test]
fn dilation_covariance() {
    let cfg = IntegratorConfig::default();
    let base = integrate_from_axis(1.0, 2.0, &cfg).unwrap();
    for lambda in [0.5, 2.0, 3.0] {
        let scaled = integrate_from_axis(lambda, 2.0 * lambda, &cfg).unwrap();
        for k in 1..=40 {
            let r = 0.05 * k as f64;
            let (u, _) = base.eval(r).unwrap();
            let (v, _) = scaled.eval(lambda * r).unwrap();
            assert!((v - lambda * u).abs() <= 10.0 * cfg.rel_tol * v, "{lambda} {r}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn backward_runs_never_reach_axis(r0 in 0.2f64..5.0, u0 in 0.2f64..5.0) {
        let p = integrate_from_interior(r0, u0, 0.0, 0.0, &IntegratorConfig::default()).unwrap();
        prop_assert_ne!(p.termination(), Termination::ReachedAxis);
        let r_star = blow_up_at(p.termination());
        prop_assert!(r_star > 0.0 && r_star < r0);
    }

    #[test]
    fn axis_profiles_have_no_interior_max(u0 in 0.1f64..10.0) {
        let p = integrate_from_axis(u0, 3.0 * u0, &IntegratorConfig::default()).unwrap();
        prop_assert!(!p.has_interior_max());
        prop_assert!(p.samples().iter().all(|s| s.height > 0.0));
    }

    #[test]
    fn dilation_holds_for_any_scale(lambda in 0.2f64..5.0) {
        let cfg = IntegratorConfig::default();
        let base = integrate_from_axis(1.0, 1.5, &cfg).unwrap();
        let scaled = integrate_from_axis(lambda, 1.5 * lambda, &cfg).unwrap();
        for k in 1..=15 {
            let r = 0.1 * k as f64;
            let (u, _) = base.eval(r).unwrap();
            let (v, _) = scaled.eval(lambda * r).unwrap();
            prop_assert!((v - lambda * u).abs() <= 10.0 * cfg.rel_tol * v);
        }
    }
}
