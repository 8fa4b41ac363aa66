use crate::error::CliError;
use crate::CheckArgs;
use hanging_core::catenary::{two_catenary_build, unit_half_width, DEFAULT_MARGIN_FRACTION};
use hanging_core::dirichlet::{
    check_properties, convergence_study, harmonic_extension, solve, BoundaryData, CheckStatus, GridSpec, NewtonConfig,
    Rectangle,
};
use hanging_core::profile::{axis_seed_sensitivity, integrate_from_axis, integrate_from_interior};
use hanging_core::surface::{revolve_horizontal, revolve_vertical, singular_residual_sample, DEFAULT_THETA_RANGE};
use hanging_core::variational::{
    cone_family_centroid, cone_family_sweep, variation_battery, ConeAnnulusSurface, ConeMeshResolution, JRule,
    BATTERY_SEED, DEFAULT_SWEEP,
};
use hanging_core::{AnalyticSurface, IntegratorConfig, Profile, Termination};
use serde::Serialize;
use serde_json::json;

#[derive(Debug, Serialize)]
struct Outcome {
    module: &'static str,
    check: &'static str,
    passed: bool,
    value: f64,
    bound: String,
}

struct Suite {
    module: &'static str,
    outcomes: Vec<Outcome>,
}

impl Suite {
    fn new(module: &'static str) -> Self {
        Self { module, outcomes: Vec::new() }
    }

    fn below(&mut self, check: &'static str, value: f64, bound: f64) {
        self.push(check, value, value < bound, format!("< {bound:e}"));
    }

    fn push(&mut self, check: &'static str, value: f64, passed: bool, bound: String) {
        self.outcomes.push(Outcome { module: self.module, check, passed: passed && !value.is_nan(), value, bound });
    }

    /// Records an error from the library as a failed check.
    fn attempt<T, E: std::fmt::Display>(&mut self, check: &'static str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(check, f64::NAN, false, format!("error: {e}"));
                None
            }
        }
    }
}

fn blow_up(t: Termination) -> Option<f64> {
    match t {
        Termination::SlopeBlowUp { at } | Termination::HeightBlowUp { at } => Some(at),
        _ => None,
    }
}

fn profile_suite() -> Suite {
    let mut s = Suite::new("profile");
    let cfg = IntegratorConfig::default();
    if let Some(p) = s.attempt("axis_profile", integrate_from_axis(1.0, 2.0, &cfg)) {
        let u = p.eval(0.1).map_or(f64::NAN, |(u, _)| u);
        s.below("taylor_at_0.1", (u - 1.0025).abs(), 5e-5);
        s.below("residual", p.max_residual(), 1e-8);
        s.push("no_interior_max", 0.0, !p.has_interior_max(), "none".into());
        let increasing = p.samples().windows(2).all(|w| w[1].height > w[0].height);
        s.push("increasing", 0.0, increasing, "strict".into());
        let mut worst = 0.0f64;
        for lambda in [0.5, 2.0, 3.0] {
            if let Some(q) = s.attempt("dilation", integrate_from_axis(lambda, 2.0 * lambda, &cfg)) {
                worst = worst.max(dilation_defect(&p, &q, lambda));
            }
        }
        s.below("dilation", worst, 10.0 * cfg.rel_tol);
    }
    if let Some(d) = s.attempt("seed_halving", axis_seed_sensitivity(1.0, 1.0, &cfg)) {
        s.below("seed_halving", d, 1e-9);
    }
    let mut cone = 0.0f64;
    for r_end in [0.5, 2.0] {
        if let Some(p) = s.attempt("cone", integrate_from_interior(1.0, 1.0, 1.0, r_end, &cfg)) {
            cone = p.samples().iter().fold(cone, |m, q| m.max((q.height - q.abscissa).abs()));
        }
    }
    s.below("cone", cone, 1e-8);
    if let Some(p) = s.attempt("backward_blow_up", integrate_from_interior(2.0, 1.0, 0.0, 0.0, &cfg)) {
        let r = blow_up(p.termination()).unwrap_or(f64::NAN);
        s.push("backward_blow_up", r, r > 0.0 && r < 2.0, "in (0, 2)".into());
    }
    s
}

fn dilation_defect(base: &Profile, scaled: &Profile, lambda: f64) -> f64 {
    (1..=40)
        .map(|k| {
            let r = 0.05 * k as f64;
            match (base.eval(r), scaled.eval(lambda * r)) {
                (Some((u, _)), Some((v, _))) => (v - lambda * u).abs() / v,
                _ => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max)
}

fn catenary_suite() -> Suite {
    let mut s = Suite::new("catenary");
    let q = unit_half_width();
    s.below("half_width", (q.value - 1.31102).abs(), 1e-4);
    s.below("two_resolution", (q.value - q.coarse_value).abs(), 1e-10);
    let margin = DEFAULT_MARGIN_FRACTION * q.value;
    if let Some(tc) = s.attempt("build", two_catenary_build(1.0, 801, margin)) {
        s.below("first_integral", tc.first_integral_residual(), 1e-9);
        s.below("first_integral_u_le_10", tc.first_integral_residual_below(10.0), 1e-9);
        s.below("equation", tc.equation_residual(), 1e-8);
        s.below("symmetry", tc.symmetry_error(), 1e-10);
        let convex = tc.profile().samples().iter().all(|p| tc.second_derivative(p.height) > 0.0);
        s.push("convexity", 0.0, convex, "u'' > 0".into());
        if let Some(big) = s.attempt("scaling", two_catenary_build(2.0, 801, 2.0 * margin)) {
            let worst = tc
                .profile()
                .samples()
                .iter()
                .zip(big.profile().samples())
                .map(|(a, b)| {
                    ((b.abscissa - 2.0 * a.abscissa).abs() / (2.0 * tc.half_width))
                        .max((b.height - 2.0 * a.height).abs() / b.height)
                })
                .fold(0.0, f64::max);
            s.below("scaling", worst, 1e-8);
        }
        if let Some(x) = s.attempt("half_width_consistency", tc.abscissa_at(1e3)) {
            s.below("half_width_consistency", (x - tc.half_width).abs() / tc.half_width, 1e-3);
        }
    }
    s
}

fn surface_suite() -> Suite {
    let mut s = Suite::new("surface");
    let cfg = IntegratorConfig::default();
    let Some(p) = s.attempt("dome", integrate_from_axis(1.0, 2.0, &cfg)) else { return s };
    if let Some(r) = s.attempt("dome_residual", singular_residual_sample(&AnalyticSurface::Vertical { profile: &p, r_min: 0.1 })) {
        s.below("dome_residual", r.max, 1e-6);
    }
    if let Some(mesh) = s.attempt("dome_mesh", p.resampled(129).map_err(|e| e.to_string()).and_then(|q| revolve_vertical(&q, 128).map_err(|e| e.to_string()))) {
        let (a, inv) = (mesh.metrics(), mesh.invert_about_plane(2.0).metrics());
        s.below("inversion_area", (a.area - inv.area).abs() / a.area, 1e-12);
        s.below("inversion_centroid", (inv.centroid_height - (4.0 - a.centroid_height)).abs(), 1e-12);
        let moved = mesh.translated([3.0, -2.0, 0.0]).metrics();
        s.below("translation_area", (moved.area - a.area).abs() / a.area, 1e-12);
    }
    let cone = Profile::from_fn(0.0, 1.0, 256, |r| r + 1.0, |_| 1.0);
    if let Some(m) = s.attempt("cone_area", cone.map_err(|e| e.to_string()).and_then(|c| revolve_vertical(&c, 256).map_err(|e| e.to_string()))) {
        let exact = std::f64::consts::PI * std::f64::consts::SQRT_2;
        s.below("cone_area", (m.area() - exact).abs() / exact, 5e-3);
    }
    let q = unit_half_width();
    if let Some(tc) = s.attempt("roof", two_catenary_build(1.0, 401, DEFAULT_MARGIN_FRACTION * q.value)) {
        let stats = singular_residual_sample(&AnalyticSurface::Horizontal { two_cat: &tc, theta_range: DEFAULT_THETA_RANGE });
        if let Some(r) = s.attempt("roof_residual", stats) {
            s.below("roof_residual", r.max, 1e-6);
        }
        if let Some(mesh) = s.attempt("roof_mesh", revolve_horizontal(&tc, DEFAULT_THETA_RANGE, 65)) {
            let (lo, hi) = mesh.bounds();
            s.below("roof_x_extent", (hi[0] - lo[0] - 2.0 * (tc.half_width - tc.margin)).abs(), 1e-9);
            s.push("roof_above_ground", lo[2], lo[2] >= 0.0, ">= 0".into());
            let areas: Vec<f64> = [1.0, 2.0]
                .iter()
                .filter_map(|&w| mesh.clip_y(-w, w).ok().map(|m| m.area()))
                .collect();
            let monotone = areas.len() == 2 && areas[0] < areas[1] && areas[1] < mesh.area();
            s.push("clip_monotone", areas.first().copied().unwrap_or(f64::NAN), monotone, "area increases with width".into());
        }
    }
    s
}

fn dirichlet_suite() -> Suite {
    let mut s = Suite::new("dirichlet");
    let cfg = NewtonConfig::default();
    let square = Rectangle { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
    let cosh = BoundaryData::Catenary { a: 1.0, b: 0.0 };
    if let Some(study) = s.attempt("convergence", convergence_study(&cosh, square, &[17, 33, 65], &cfg)) {
        let lowest = study.orders.iter().copied().fold(f64::INFINITY, f64::min);
        let ok = study.orders.iter().all(|o| (1.8..=2.2).contains(o));
        s.push("convergence_order", lowest, ok, "in [1.8, 2.2]".into());
    }
    let spec = GridSpec::over_rectangle(square, 17);
    if let Some((g, _)) = s.attempt("catenary_solve", spec.and_then(|sp| solve(&cosh, sp, &cfg))) {
        let props = check_properties(&g);
        s.push("properties", g.interior_max(), props.all_passed(), "all four".into());
    }
    let small = Rectangle { x_min: -0.05, x_max: 0.05, y_min: -0.05, y_max: 0.05 };
    let spec = GridSpec::over_rectangle(small, 11);
    if let Some((g, _)) = s.attempt("constant_solve", spec.and_then(|sp| solve(&BoundaryData::Constant { value: 1.0 }, sp, &cfg))) {
        let props = check_properties(&g);
        let ok = props.all_passed() && props.below_boundary_plane == CheckStatus::Passed;
        s.push("below_boundary_plane", g.interior_max(), ok, "< 1".into());
    }
    let unit = Rectangle { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 };
    if let Ok(spec) = GridSpec::over_rectangle(unit, 17) {
        let failed = solve(&BoundaryData::Constant { value: 0.1 }, spec, &cfg).is_err_and(|e| e.report().is_some());
        s.push("small_data_fails", 0.1, failed, "structured failure".into());
    }
    s
}

fn variational_suite() -> Suite {
    let mut s = Suite::new("variational");
    for (r, expected) in [(0.5, -0.51031), (0.1, -1.7001)] {
        if let Some(c) = s.attempt("closed_form", ConeAnnulusSurface::new(r)) {
            s.below("closed_form", (c.centroid_height() - expected).abs(), 1e-4);
        }
    }
    if let Some(rep) = s.attempt("cone_mesh", cone_family_centroid(0.5, ConeMeshResolution::default())) {
        s.below("cone_mesh_area", (rep.area_mesh - rep.area_closed).abs() / rep.area_closed, 2e-3);
        s.below("cone_mesh_centroid", (rep.cg_mesh - rep.cg_closed).abs() / rep.cg_closed.abs(), 2e-3);
    }
    if let Some(rows) = s.attempt("sweep", cone_family_sweep(&DEFAULT_SWEEP, ConeMeshResolution::default())) {
        let monotone = rows.windows(2).all(|w| w[1].cg_closed < w[0].cg_closed);
        let lowest = rows.iter().map(|r| r.cg_closed).fold(f64::INFINITY, f64::min);
        s.push("sweep_monotone_below_-5", lowest, monotone && lowest < -5.0, "decreasing, min < -5".into());
    }
    let square = Rectangle { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
    let cosh = BoundaryData::Catenary { a: 1.0, b: 0.0 };
    let Ok(spec) = GridSpec::over_rectangle(square, 65) else { return s };
    if let Some((g, _)) = s.attempt("first_variation", solve(&cosh, spec, &NewtonConfig::default())) {
        if let Some(b) = s.attempt("first_variation", variation_battery(&g, 0.0, BATTERY_SEED, JRule::Fourth)) {
            let worst = b.iter().map(|v| v.ratio).fold(0.0, f64::max);
            s.below("first_variation", worst, 1e-4);
        }
        let harmonic = cosh
            .on_grid(spec, 1.0)
            .and_then(|phi| harmonic_extension(spec, &phi));
        if let Some(h) = s.attempt("harmonic_variation", harmonic) {
            if let Some(b) = s.attempt("harmonic_variation", variation_battery(&h, 0.0, BATTERY_SEED, JRule::Fourth)) {
                let worst = b.iter().map(|v| v.ratio).fold(0.0, f64::max);
                s.push("harmonic_variation", worst, worst > 1e-3, "> 1e-3".into());
            }
        }
    }
    s
}

pub fn run(a: &CheckArgs) -> Result<(), CliError> {
    let wanted = |m: &str| a.all || a.module.is_empty() || a.module.iter().any(|x| x == m);
    let suites: [(&str, fn() -> Suite); 5] = [
        ("profile", profile_suite),
        ("catenary", catenary_suite),
        ("surface", surface_suite),
        ("dirichlet", dirichlet_suite),
        ("variational", variational_suite),
    ];
    let mut total = 0;
    let mut failed = 0;
    for (name, suite) in suites {
        if !wanted(name) {
            continue;
        }
        for o in suite().outcomes {
            total += 1;
            failed += usize::from(!o.passed);
            println!("{}", json!(o));
        }
    }
    println!("{}", json!({ "checks": total, "failed": failed }));
    if failed > 0 {
        Err(CliError::Check { failed, total })
    } else {
        Ok(())
    }
}
