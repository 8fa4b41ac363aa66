use crate::error::CliError;
use crate::output::{FlaggedDefault, OutDir};
use crate::{ConeArgs, DomeArgs, HalfwidthArgs, RoofArgs, SolveArgs};
use hanging_core::catenary::{two_catenary_build, two_catenary_halfwidth, DEFAULT_MARGIN_FRACTION};
use hanging_core::dirichlet::{check_properties, convergence_study, solve as solve_dirichlet, ProblemSpec};
use hanging_core::profile::integrate_from_axis;
use hanging_core::surface::{
    revolve_horizontal, revolve_vertical, singular_residual_sample, write_metrics_csv, DEFAULT_THETA_RANGE,
};
use hanging_core::variational::{cone_family_sweep, write_sweep_csv, ConeMeshResolution, DEFAULT_SWEEP};
use hanging_core::{AnalyticSurface, CatenaryError, IntegratorConfig, MeshError, SurfaceMesh};
use serde_json::{json, Value};
use std::io::Write;

fn write_mesh(out: &mut OutDir, stem: &str, mesh: &SurfaceMesh) -> Result<(), CliError> {
    out.write_with(&format!("{stem}.obj"), |w| mesh.write_obj(w))?;
    out.write_with(&format!("{stem}.stl"), |w| mesh.write_stl(w))
}

fn bounds_json(mesh: &SurfaceMesh) -> Value {
    let (lo, hi) = mesh.bounds();
    json!({ "min": lo, "max": hi })
}

fn finish(out: &mut OutDir, mut record: Value) -> Result<(), CliError> {
    let mut files = out.written().to_vec();
    files.push(out.path_of("metrics.json"));
    record["files"] = json!(files);
    out.write_json("metrics.json", &record)?;
    println!("{record}");
    Ok(())
}

pub fn dome(a: &DomeArgs) -> Result<(), CliError> {
    let mut cfg = IntegratorConfig::default();
    if let Some(t) = a.rel_tol {
        cfg.rel_tol = t;
    }
    if let Some(t) = a.abs_tol {
        cfg.abs_tol = t;
    }
    cfg.seed_offset = a.seed_offset;
    let profile = integrate_from_axis(a.u0, a.rmax, &cfg)?;
    let r_end = profile.range().1;
    let r_min = a.residual_rmin.min(0.5 * r_end);
    let residuals = singular_residual_sample(&AnalyticSurface::Vertical { profile: &profile, r_min })?;
    let rings = profile.resampled(a.rings)?;
    let mut mesh = revolve_vertical(&rings, a.ntheta)?;
    if let Some(z0) = a.invert_z {
        mesh = mesh.invert_about_plane(z0);
    }
    let mut metrics = mesh.metrics();
    metrics.residual_stats = Some(residuals);

    let mut out = OutDir::create(&a.out)?;
    out.write_with("profile.csv", |w| profile.write_csv(w))?;
    out.write_json("profile.json", &profile.sidecar())?;
    write_mesh(&mut out, "dome", &mesh)?;
    out.write_with("metrics.csv", |w| write_metrics_csv(&metrics, w))?;

    let mut flagged = vec![
        FlaggedDefault { name: "slope_cap", value: json!(cfg.slope_cap), rule: "blow-up threshold on |u'|" },
        FlaggedDefault { name: "height_cap", value: json!(1e6 * a.u0), rule: "blow-up threshold, 1e6 · u0" },
    ];
    if a.seed_offset.is_none() {
        flagged.push(FlaggedDefault { name: "seed_offset", value: json!(1e-4 * a.u0), rule: "1e-4 · u0" });
    }
    let record = json!({
        "command": "dome",
        "parameters": {
            "u0": a.u0, "rmax": a.rmax, "ntheta": a.ntheta, "rings": a.rings, "invert_z": a.invert_z,
            "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol, "residual_rmin": r_min,
        },
        "defaults_flagged": flagged,
        "termination": profile.termination(),
        "profile_end": { "r": r_end, "u": profile.last().height, "du": profile.last().slope },
        "metrics": metrics,
        "triangles": mesh.triangles().len(),
        "bounds": bounds_json(&mesh),
    });
    finish(&mut out, record)
}

pub fn roof(a: &RoofArgs) -> Result<(), CliError> {
    if !(a.umin > 0.0) || !a.umin.is_finite() {
        return Err(CatenaryError::InvalidMinimum(a.umin).into());
    }
    let half_width = two_catenary_halfwidth(a.umin.powi(-2))?.value;
    let margin = a.margin.unwrap_or(DEFAULT_MARGIN_FRACTION * half_width);
    let tc = two_catenary_build(a.umin, a.samples, margin)?;
    let theta_range = (
        a.theta_min.unwrap_or(DEFAULT_THETA_RANGE.0),
        a.theta_max.unwrap_or(DEFAULT_THETA_RANGE.1),
    );
    let mut mesh = revolve_horizontal(&tc, theta_range, a.ntheta)?;
    let residuals = singular_residual_sample(&AnalyticSurface::Horizontal { two_cat: &tc, theta_range })?;
    let unclipped_area = mesh.area();
    if let Some(clip) = &a.clip_y {
        let (lo, hi) = (clip[0], clip[1]);
        if !(lo < hi) {
            return Err(MeshError::InvalidRange(format!("clip range [{lo}, {hi}] is empty")).into());
        }
        mesh = mesh.clip_y(lo, hi)?;
    }
    if let Some(z0) = a.invert_z {
        mesh = mesh.invert_about_plane(z0);
    }
    let mut metrics = mesh.metrics();
    metrics.residual_stats = Some(residuals);

    let mut out = OutDir::create(&a.out)?;
    out.write_with("profile.csv", |w| tc.profile().write_csv(w))?;
    out.write_json("twocatenary.json", &tc.summary())?;
    write_mesh(&mut out, "roof", &mesh)?;
    out.write_with("metrics.csv", |w| write_metrics_csv(&metrics, w))?;

    let mut flagged = Vec::new();
    if a.margin.is_none() {
        flagged.push(FlaggedDefault { name: "margin", value: json!(margin), rule: "1e-3 · a" });
    }
    if a.theta_min.is_none() {
        flagged.push(FlaggedDefault { name: "theta_min", value: json!(theta_range.0), rule: "-pi/2 + 1e-3" });
    }
    if a.theta_max.is_none() {
        flagged.push(FlaggedDefault { name: "theta_max", value: json!(theta_range.1), rule: "pi/2 - 1e-3" });
    }
    let (lo, hi) = mesh.bounds();
    let record = json!({
        "command": "roof",
        "parameters": {
            "umin": a.umin, "theta_min": theta_range.0, "theta_max": theta_range.1, "clip_y": a.clip_y,
            "invert_z": a.invert_z, "margin": margin, "samples": a.samples, "ntheta": a.ntheta,
        },
        "defaults_flagged": flagged,
        "two_catenary": tc.summary(),
        "footprint": { "x_extent": hi[0] - lo[0], "y_min": lo[1], "y_max": hi[1] },
        "unclipped_area": unclipped_area,
        "metrics": metrics,
        "triangles": mesh.triangles().len(),
        "bounds": bounds_json(&mesh),
    });
    finish(&mut out, record)
}

pub fn solve(a: &SolveArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.problem).map_err(|e| CliError::io(&a.problem, e))?;
    let problem = ProblemSpec::from_json(&text).map_err(|e| CliError::Parse {
        path: a.problem.display().to_string(),
        msg: e.to_string(),
    })?;
    let base = a.problem.parent().unwrap_or(std::path::Path::new("."));
    let boundary = problem.boundary_data(base)?;
    let spec = problem.grid_spec()?;
    let mut cfg = problem.newton;
    if let Some(n) = a.max_iters {
        cfg.max_iters = n;
    }
    if let Some(t) = a.residual_tol {
        cfg.residual_tol = t;
    }
    let phi = boundary.on_grid(spec, 0.0)?;
    let max_phi = spec
        .boundary_nodes()
        .iter()
        .map(|&(i, j)| phi[spec.index(i, j)])
        .fold(f64::NEG_INFINITY, f64::max);
    let (g, report) = solve_dirichlet(&boundary, spec, &cfg)
        .map_err(|source| CliError::Dirichlet { source, data: Some((problem.domain, max_phi)) })?;
    let properties = check_properties(&g);
    let max_error = boundary.exact(spec.x(0), spec.y(0)).map(|_| {
        let mut e = 0.0f64;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                e = e.max((g.at(i, j) - boundary.exact(spec.x(i), spec.y(j)).unwrap()).abs());
            }
        }
        e
    });
    let convergence = if problem.refinements.is_empty() {
        None
    } else {
        let mut grids = vec![problem.grid.nx];
        grids.extend(&problem.refinements);
        Some(convergence_study(&boundary, problem.domain, &grids, &cfg)?)
    };

    let mut out = OutDir::create(&a.out)?;
    out.write_with("solution.csv", |w| g.write_csv(w))?;
    let record = json!({
        "command": "solve",
        "problem": problem,
        "newton": cfg,
        "report": report,
        "properties": properties,
        "properties_passed": properties.all_passed(),
        "max_error": max_error,
        "convergence": convergence,
    });
    out.write_json("report.json", &record)?;
    let mut record = record;
    record["files"] = json!(out.written());
    println!("{record}");
    Ok(())
}

pub fn example_cone(a: &ConeArgs) -> Result<(), CliError> {
    let res = ConeMeshResolution { n_theta: a.n_theta, n_cone: a.n_cone, n_annulus: a.n_annulus };
    let radii: Vec<f64> = if a.sweep { DEFAULT_SWEEP.to_vec() } else { a.radius.clone() };
    let rows = cone_family_sweep(&radii, res)?;
    match (&a.out, a.sweep) {
        (Some(dir), true) => {
            let mut out = OutDir::create(dir)?;
            out.write_with("sweep.csv", |w| write_sweep_csv(&rows, w))?;
            out.write_json("sweep.json", &rows)?;
            println!("{}", json!({ "command": "example-cone", "files": out.written() }));
        }
        (Some(dir), false) => {
            let mut out = OutDir::create(dir)?;
            out.write_json("cone.json", &rows)?;
            println!("{}", json!({ "command": "example-cone", "files": out.written() }));
        }
        (None, true) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_sweep_csv(&rows, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))?;
        }
        (None, false) => {
            for r in &rows {
                println!("{}", serde_json::to_string(r).expect("reports serialize"));
            }
        }
    }
    Ok(())
}

pub fn halfwidth(a: &HalfwidthArgs) -> Result<(), CliError> {
    let q = two_catenary_halfwidth(a.c)?;
    println!(
        "{}",
        json!({
            "c": a.c,
            "half_width": q.value,
            "error_estimate": q.error_estimate,
            "coarse_value": q.coarse_value,
            "self_consistency": (q.value - q.coarse_value).abs(),
            "levels": q.levels,
            "evaluations": q.evaluations,
            "converged": q.converged,
        })
    );
    Ok(())
}
