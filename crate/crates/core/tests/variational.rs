use hanging_core::dirichlet::{harmonic_extension, solve, BoundaryData, GridFunction, GridSpec, NewtonConfig, Rectangle};
use hanging_core::variational::{
    cone_family_centroid, cone_family_sweep, first_variation, functional_j, functional_j_with, graph_area,
    variation_battery, write_sweep_csv, ConeAnnulusSurface, ConeMeshResolution, JRule, VariationalError,
    BATTERY_SEED, DEFAULT_SWEEP,
};
use proptest::prelude::*;

fn grid(domain: Rectangle, n: usize, f: impl Fn(f64, f64) -> f64) -> GridFunction {
    GridFunction::from_fn(GridSpec::over_rectangle(domain, n).unwrap(), f).unwrap()
}

const UNIT: Rectangle = Rectangle { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 };
const SQUARE: Rectangle = Rectangle { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };

#[test]
fn flat_functional_values() {
    let g = grid(UNIT, 11, |_, _| 1.0);
    assert!((functional_j(&g, 0.0) - 1.0).abs() < 1e-14);
    assert!((functional_j(&g, 2.0) - 3.0).abs() < 1e-14);
}

#[test]
fn cosh_strip_functional() {
    // ∫_{-1}^{1} cosh^2 x dx = 1 + sinh(2)/2
    let exact = 1.0 + 2f64.sinh() / 2.0;
    let strip = Rectangle { x_min: -1.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 };
    for (rule, order) in [(JRule::Trapezoid, 2.0), (JRule::Fourth, 4.0)] {
        let err = |n: usize| (functional_j_with(&grid(strip, n, |x, _| x.cosh()), 0.0, rule) - exact).abs();
        let (e1, e2) = (err(33), err(65));
        assert!(e2 < 1e-3, "{e2}");
        assert!(((e1 / e2).log2() - order).abs() < 0.15, "{rule:?} {e1} {e2}");
    }
}

#[test]
fn inversion_is_linear_in_the_weight() {
    let g = grid(SQUARE, 17, |x, y| x.cosh() + 0.1 * y);
    let z0 = 5.0;
    let inv = GridFunction::from_fn(*g.spec(), |_, _| 0.0).err();
    assert!(inv.is_some());
    let flipped = GridFunction::new(*g.spec(), g.values().iter().map(|u| 2.0 * z0 - u).collect()).unwrap();
    for rule in [JRule::Trapezoid, JRule::Fourth] {
        let lhs = functional_j_with(&flipped, 0.0, rule);
        let rhs = 2.0 * z0 * graph_area(&g, rule) - functional_j_with(&g, 0.0, rule);
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs(), "{lhs} {rhs}");
    }
}

#[test]
fn zero_and_boundary_perturbations() {
    let g = grid(UNIT, 9, |x, _| 1.0 + x * x);
    let zero = vec![0.0; g.values().len()];
    assert_eq!(first_variation(&g, &zero, 0.0).unwrap(), 0.0);
    let mut bad = zero.clone();
    bad[0] = 1e-3;
    assert!(matches!(first_variation(&g, &bad, 0.0), Err(VariationalError::BoundaryPerturbation { i: 0, j: 0, .. })));
    assert!(matches!(first_variation(&g, &zero[1..], 0.0), Err(VariationalError::ShapeMismatch { .. })));
}

#[test]
fn solution_is_critical_and_harmonic_guess_is_not() {
    let spec = GridSpec::over_rectangle(SQUARE, 65).unwrap();
    let data = BoundaryData::Catenary { a: 1.0, b: 0.0 };
    let (g, _) = solve(&data, spec, &NewtonConfig::default()).unwrap();
    let at_solution = variation_battery(&g, 0.0, BATTERY_SEED, JRule::Fourth).unwrap();
    let worst = at_solution.iter().fold(0.0f64, |m, s| m.max(s.ratio));
    assert!(worst < 1e-4, "{at_solution:?}");
    let phi = data.on_grid(spec, 1.0).unwrap();
    let harmonic = harmonic_extension(spec, &phi).unwrap();
    let off = variation_battery(&harmonic, 0.0, BATTERY_SEED, JRule::Fourth).unwrap();
    assert!(off.iter().any(|s| s.ratio > 1e-3), "{off:?}");
}

#[test]
fn cone_family_closed_forms() {
    let half = ConeAnnulusSurface::new(0.5).unwrap();
    assert!((half.centroid_height() + 1.25 / 6.0 * 6f64.sqrt()).abs() < 1e-15);
    assert!((half.centroid_height() - (-0.510310)).abs() < 1e-6);
    let tenth = ConeAnnulusSurface::new(0.1).unwrap();
    assert!((tenth.centroid_height() - (-1.70008)).abs() < 1e-5);
    // the cone's lateral area collapses to π(1 + R^2)
    assert!((tenth.cone_area() - std::f64::consts::PI * 1.01).abs() < 1e-13);
    assert!(ConeAnnulusSurface::new(1.0).is_err());
    assert!(ConeAnnulusSurface::new(0.0).is_err());
}

#[test]
fn cone_family_mesh_agrees() {
    for r in [0.5, 0.1, 0.01] {
        let rep = cone_family_centroid(r, ConeMeshResolution::default()).unwrap();
        assert!((rep.area_mesh / rep.area_closed - 1.0).abs() < 2e-3, "{rep:?}");
        assert!((rep.cg_mesh / rep.cg_closed - 1.0).abs() < 2e-3, "{rep:?}");
        assert!(rep.triangles >= 9_000 && rep.triangles <= 11_000);
    }
}

#[test]
fn sweep_sinks_without_bound() {
    let rows = cone_family_sweep(&DEFAULT_SWEEP, ConeMeshResolution::default()).unwrap();
    assert!(rows.windows(2).all(|w| w[1].cg_closed < w[0].cg_closed && w[1].cg_mesh < w[0].cg_mesh));
    assert!(rows.iter().any(|r| r.cg_closed < -5.0 && r.radius >= 1e-3));
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), rows.len() + 1);
    assert!(text.starts_with("R,area_closed,area_mesh,cg_closed,cg_mesh\n"));
}

proptest! {
    #[test]
    fn cone_family_area_is_constant(r in 1e-3f64..0.999) {
        let s = ConeAnnulusSurface::new(r).unwrap();
        prop_assert!((s.area() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        prop_assert!((s.centroid_from_parts() - s.centroid_height()).abs() < 1e-12 * s.depth);
    }
}
