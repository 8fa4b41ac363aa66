use hanging_core::catenary::{two_catenary_build, DEFAULT_MARGIN_FRACTION};
use hanging_core::dirichlet::{
    check_properties, harmonic_extension, solve, BoundaryData, GridFunction, GridSpec, NewtonConfig, Rectangle,
};
use hanging_core::profile::{axis_seed_sensitivity, integrate_from_axis, integrate_from_interior, rotational_residual};
use hanging_core::surface::{read_obj, revolve_vertical};
use hanging_core::variational::{
    cone_family_centroid, cone_family_sweep, variation_battery, ConeMeshResolution, JRule, BATTERY_SEED, DEFAULT_SWEEP,
};
use hanging_core::{IntegratorConfig, Termination};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::io::BufReader;
use std::process::{Command, ExitCode};
use std::time::Instant;

const HALF_WIDTH: f64 = 1.311_028_777_146_059_9;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new() -> Self {
        Self { passed: true, detail: String::new() }
    }

    fn expect(&mut self, ok: bool, what: impl AsRef<str>) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(what.as_ref());
        if !ok {
            self.detail.push_str(" [violated]");
            self.passed = false;
        }
    }

    fn fail(&mut self, what: impl std::fmt::Display) {
        self.expect(false, format!("error: {what}"));
    }
}

fn rk4_axis(u0: f64, delta: f64, r_end: f64, h: f64) -> f64 {
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
    u
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn cli(args: &[&str]) -> Result<serde_json::Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hanging-surfaces")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().last().unwrap_or("")).map_err(|e| e.to_string())
}

fn half_width_constant(v: &mut Verdict) {
    let t = Instant::now();
    match cli(&["halfwidth", "--c", "1"]) {
        Ok(rec) => {
            let secs = t.elapsed().as_secs_f64();
            let a = rec["half_width"].as_f64().unwrap_or(f64::NAN);
            let sc = rec["self_consistency"].as_f64().unwrap_or(f64::NAN);
            v.expect((a - 1.31102).abs() < 1e-4, format!("a(1) = {a:.13}, |a - 1.31102| = {:.2e} < 1e-4", (a - 1.31102).abs()));
            v.expect(sc < 1e-10, format!("two resolutions differ by {sc:.2e} < 1e-10"));
            v.expect(secs < 1.0, format!("runtime {secs:.3} s < 1 s"));
        }
        Err(e) => v.fail(e),
    }
}

fn first_integral(v: &mut Verdict) {
    let t = Instant::now();
    let built = two_catenary_build(1.0, 801, DEFAULT_MARGIN_FRACTION * HALF_WIDTH)
        .and_then(|tc| two_catenary_build(1.0, 801, 0.1 * HALF_WIDTH).map(|wide| (tc, wide)));
    let secs = t.elapsed().as_secs_f64();
    match built {
        Ok((tc, wide)) => {
            let rel = tc.first_integral_residual();
            let u_max = tc.summary().u_max;
            v.expect(rel < 1e-9, format!("default margin (u up to {u_max:.0}): max defect / max(1, u^4) = {rel:.2e} < 1e-9"));
            let abs = wide
                .profile()
                .samples()
                .iter()
                .map(|p| (p.slope * p.slope - (p.height.powi(4) - 1.0)).abs())
                .fold(0.0, f64::max);
            let u_wide = wide.summary().u_max;
            v.expect(abs < 1e-9, format!("margin 0.1a (u up to {u_wide:.2}): max |u'^2 - (u^4 - 1)| = {abs:.2e} < 1e-9"));
            v.expect(secs < 1.0, format!("runtime {secs:.3} s < 1 s"));
        }
        Err(e) => v.fail(e),
    }
}

fn cone_exactness(v: &mut Verdict) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r = 10.0 * (1.0 - rng.gen::<f64>());
        match rotational_residual(r, r, 1.0, 0.0) {
            Ok(x) => worst = worst.max(x.abs()),
            Err(e) => return v.fail(e),
        }
    }
    v.expect(worst < 1e-12, format!("residual on u = r at 1000 points: {worst:.2e} < 1e-12"));
    let cfg = IntegratorConfig::default();
    let mut dev = 0.0f64;
    for r_end in [0.5, 2.0] {
        match integrate_from_interior(1.0, 1.0, 1.0, r_end, &cfg) {
            Ok(p) => {
                dev = p.samples().iter().fold(dev, |m, s| m.max((s.height - s.abscissa).abs()));
                for k in 0..=100 {
                    let r = 0.5 + 1.5 * k as f64 / 100.0;
                    if let Some((u, _)) = p.eval(r) {
                        dev = dev.max((u - r).abs());
                    }
                }
            }
            Err(e) => return v.fail(e),
        }
    }
    v.expect(dev < 1e-8, format!("seeded cone over [0.5, 2]: max |u - r| = {dev:.2e} < 1e-8"));
}

fn axis_start(v: &mut Verdict) {
    let cfg = IntegratorConfig::default();
    let p = match integrate_from_axis(1.0, 1.0, &cfg) {
        Ok(p) => p,
        Err(e) => return v.fail(e),
    };
    let u = p.eval(0.1).map_or(f64::NAN, |(u, _)| u);
    let taylor = 1.0 + 0.01 / 4.0;
    v.expect((u - taylor).abs() < 5e-5, format!("|u(0.1) - Taylor| = {:.2e} < 5e-5", (u - taylor).abs()));
    let oracle = rk4_axis(1.0, 1e-4, 1.0, 1e-6);
    let d = (p.last().height - oracle).abs();
    v.expect(d < 1e-8, format!("u(1) = {:.12}, fixed-step RK4 (h = 1e-6) differs by {d:.2e} < 1e-8", p.last().height));
    match axis_seed_sensitivity(1.0, 1.0, &cfg) {
        Ok(s) => v.expect(s < 1e-9, format!("halving the seed offset moves u(1) by {s:.2e} < 1e-9")),
        Err(e) => v.fail(e),
    }
}

fn blow_up(t: Termination) -> Option<f64> {
    match t {
        Termination::SlopeBlowUp { at } | Termination::HeightBlowUp { at } => Some(at),
        _ => None,
    }
}

fn backward_blow_up(v: &mut Verdict) {
    let cfg = IntegratorConfig::default();
    let tight = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..cfg };
    let runs = integrate_from_interior(2.0, 1.0, 0.0, 0.0, &cfg)
        .and_then(|a| integrate_from_interior(2.0, 1.0, 0.0, 0.0, &tight).map(|b| (a, b)));
    match runs {
        Ok((a, b)) => {
            let (ra, rb) = (blow_up(a.termination()), blow_up(b.termination()));
            let (Some(ra), Some(rb)) = (ra, rb) else {
                return v.expect(false, format!("terminations {:?} / {:?}", a.termination(), b.termination()));
            };
            v.expect(ra > 0.0 && ra < 2.0, format!("r* = {ra:.10} in (0, 2), termination {:?}", a.termination()));
            v.expect((ra - rb).abs() < 1e-6, format!("tightening tolerances 100x moves r* by {:.2e} < 1e-6", (ra - rb).abs()));
        }
        Err(e) => v.fail(e),
    }
}

fn cone_family(v: &mut Verdict) {
    let t = Instant::now();
    let res = ConeMeshResolution::default();
    for (r, expected) in [(0.5, -0.51031), (0.1, -1.7001)] {
        match cone_family_centroid(r, res) {
            Ok(rep) => {
                v.expect((rep.cg_closed - expected).abs() < 1e-4, format!("R = {r}: cg = {:.6}", rep.cg_closed));
                let da = (rep.area_mesh - rep.area_closed).abs() / rep.area_closed;
                let dc = (rep.cg_mesh - rep.cg_closed).abs() / rep.cg_closed.abs();
                v.expect(
                    da < 2e-3 && dc < 2e-3,
                    format!("mesh of {} triangles: area off {:.2e}, cg off {:.2e} (< 2e-3)", rep.triangles, da, dc),
                );
            }
            Err(e) => v.fail(e),
        }
    }
    match cone_family_sweep(&DEFAULT_SWEEP, res) {
        Ok(rows) => {
            let monotone = rows.windows(2).all(|w| w[1].cg_closed < w[0].cg_closed && w[1].cg_mesh < w[0].cg_mesh);
            v.expect(monotone, "sweep strictly decreasing");
            let below = rows.iter().find(|r| r.cg_closed < -5.0 && r.radius >= 1e-3);
            v.expect(below.is_some(), format!("first R with cg < -5: {:?}", below.map(|r| r.radius)));
        }
        Err(e) => v.fail(e),
    }
    let secs = t.elapsed().as_secs_f64();
    v.expect(secs < 10.0, format!("runtime {secs:.2} s < 10 s"));
}

const COSH: BoundaryData = BoundaryData::Catenary { a: 1.0, b: 0.0 };

fn square() -> Rectangle {
    Rectangle { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 }
}

fn dirichlet_convergence(v: &mut Verdict, solutions: &mut Vec<GridFunction>) {
    let cfg = NewtonConfig::default();
    let mut levels = Vec::new();
    for n in [33, 65, 129] {
        let t = Instant::now();
        let spec = GridSpec::over_rectangle(square(), n).expect("valid grid");
        match solve(&COSH, spec, &cfg) {
            Ok((g, report)) => {
                let secs = t.elapsed().as_secs_f64();
                let mut err = 0.0f64;
                for j in 0..n {
                    for i in 0..n {
                        err = err.max((g.at(i, j) - spec.x(i).cosh()).abs());
                    }
                }
                v.expect(
                    report.converged && secs < 60.0,
                    format!("{n}^2: error {err:.3e}, {} Newton steps, {secs:.2} s", report.iterations),
                );
                levels.push((spec.h, err));
                solutions.push(g);
            }
            Err(e) => return v.fail(e),
        }
    }
    let mut text = String::new();
    let mut ok = true;
    for w in levels.windows(2) {
        let order = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
        ok &= (1.8..=2.2).contains(&order);
        let _ = write!(text, "{order:.3} ");
    }
    v.expect(ok, format!("orders {}in [1.8, 2.2]", text));
}

fn pde_properties(v: &mut Verdict, solutions: &[GridFunction]) {
    let cfg = NewtonConfig::default();
    let mut all: Vec<(String, GridFunction)> =
        solutions.iter().map(|g| (format!("cosh {}^2", g.spec().nx), g.clone())).collect();
    let extra = [
        ("constant 1 on [-0.05, 0.05]^2", BoundaryData::Constant { value: 1.0 }, Rectangle { x_min: -0.05, x_max: 0.05, y_min: -0.05, y_max: 0.05 }),
        ("constant 3 on [0, 1]^2", BoundaryData::Constant { value: 3.0 }, Rectangle { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }),
        ("cone on [1, 2] x [0.5, 1.5]", BoundaryData::Cone { x0: 0.0, y0: 0.0 }, Rectangle { x_min: 1.0, x_max: 2.0, y_min: 0.5, y_max: 1.5 }),
        ("shifted catenary", BoundaryData::Catenary { a: 2.0, b: 0.5 }, Rectangle { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 0.5 }),
    ];
    for (name, data, domain) in extra {
        let spec = GridSpec::over_rectangle(domain, 33).expect("valid grid");
        match solve(&data, spec, &cfg) {
            Ok((g, _)) => all.push((name.to_string(), g)),
            Err(e) => v.fail(format!("{name}: {e}")),
        }
    }
    for (name, g) in &all {
        let p = check_properties(g);
        v.expect(
            p.all_passed(),
            format!(
                "{name}: max {:?}, plane {:?}, area/length {:?}, area {:?}",
                p.no_interior_max, p.below_boundary_plane, p.area_length, p.area_exceeds_domain
            ),
        );
    }
}

fn first_variation(v: &mut Verdict, solutions: &[GridFunction]) {
    let Some(g) = solutions.iter().find(|g| g.spec().nx == 129) else {
        return v.fail("no 129^2 solution");
    };
    match variation_battery(g, 0.0, BATTERY_SEED, JRule::Fourth) {
        Ok(b) => {
            let worst = b.iter().map(|s| s.ratio).fold(0.0, f64::max);
            v.expect(
                b.len() == 16 && worst < 1e-4,
                format!("solution: {} perturbations, max |dJ|/|eta| = {worst:.2e} < 1e-4", b.len()),
            );
        }
        Err(e) => v.fail(e),
    }
    let spec = *g.spec();
    let harmonic = COSH.on_grid(spec, 1.0).and_then(|phi| harmonic_extension(spec, &phi));
    match harmonic.map(|h| variation_battery(&h, 0.0, BATTERY_SEED, JRule::Fourth)) {
        Ok(Ok(b)) => {
            let worst = b.iter().map(|s| s.ratio).fold(0.0, f64::max);
            v.expect(worst > 1e-3, format!("harmonic extension: max ratio {worst:.2e} > 1e-3"));
        }
        Ok(Err(e)) => v.fail(e),
        Err(e) => v.fail(e),
    }
}

fn invariance(v: &mut Verdict) {
    let cfg = IntegratorConfig::default();
    let Ok(base) = integrate_from_axis(1.0, 2.0, &cfg) else { return v.fail("axis profile") };
    for lambda in [0.5, 2.0, 3.0] {
        match integrate_from_axis(lambda, 2.0 * lambda, &cfg) {
            Ok(q) => {
                let worst = (1..=40)
                    .map(|k| {
                        let r = 0.05 * k as f64;
                        match (base.eval(r), q.eval(lambda * r)) {
                            (Some((u, _)), Some((w, _))) => (w - lambda * u).abs() / w,
                            _ => f64::INFINITY,
                        }
                    })
                    .fold(0.0, f64::max);
                v.expect(worst <= 10.0 * cfg.rel_tol, format!("dilation {lambda}: {worst:.2e} <= 10 rel_tol"));
            }
            Err(e) => v.fail(e),
        }
    }
    match two_catenary_build(1.0, 801, DEFAULT_MARGIN_FRACTION * HALF_WIDTH) {
        Ok(tc) => {
            let s = tc.symmetry_error();
            v.expect(s < 1e-10, format!("2-catenary symmetry {s:.2e} < 1e-10"));
        }
        Err(e) => v.fail(e),
    }
    match base.resampled(129).map_err(|e| e.to_string()).and_then(|p| revolve_vertical(&p, 128).map_err(|e| e.to_string())) {
        Ok(mesh) => {
            let (a, b) = (mesh.area(), mesh.invert_about_plane(3.0).area());
            v.expect((a - b).abs() < 1e-12 * a, format!("inversion changes area by {:.2e} (relative)", (a - b).abs() / a));
        }
        Err(e) => v.fail(e),
    }
}

fn mesh_fidelity(v: &mut Verdict) {
    let Ok(p) = integrate_from_axis(1.0, 1.5, &IntegratorConfig::default()) else { return v.fail("axis profile") };
    let oracle = 2.0 * std::f64::consts::PI
        * simpson(|r| r * p.eval(r).map_or(f64::NAN, |(_, du)| (1.0 + du * du).sqrt()), 0.0, 1.5, 2000);
    let mut errs = Vec::new();
    for n in [16, 32, 64, 128] {
        match p.resampled(n + 1).map_err(|e| e.to_string()).and_then(|q| revolve_vertical(&q, 4 * n).map_err(|e| e.to_string())) {
            Ok(m) => errs.push((m.area() - oracle).abs()),
            Err(e) => return v.fail(e),
        }
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    v.expect(
        orders.iter().all(|o| (1.8..=2.2).contains(o)),
        format!("dome area errors {}, orders {orders:.3?}", errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")),
    );
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return v.fail(e),
    };
    let out = dir.path().to_str().unwrap_or(".");
    if let Err(e) = cli(&["roof", "--umin", "1", "--clip-y", "-1", "1", "--invert-z", "3", "--out", out]) {
        return v.fail(e);
    }
    let mesh = std::fs::File::open(dir.path().join("roof.obj"))
        .map_err(|e| e.to_string())
        .and_then(|f| read_obj(BufReader::new(f)).map_err(|e| e.to_string()));
    match mesh {
        Ok(m) => {
            let (lo, hi) = m.bounds();
            let extent = hi[0] - lo[0];
            let rel = (extent - 2.0 * HALF_WIDTH).abs() / (2.0 * HALF_WIDTH);
            v.expect(rel < 0.01, format!("roof OBJ with {} triangles: x-extent {extent:.5} vs 2a, off {rel:.2e} < 1%", m.triangles().len()));
            v.expect(lo[1] >= -1.0 - 1e-12 && hi[1] <= 1.0 + 1e-12, format!("footprint y in [{:.3}, {:.3}]", lo[1], hi[1]));
        }
        Err(e) => v.fail(e),
    }
}

fn main() -> ExitCode {
    let mut solutions = Vec::new();
    let mut table: Vec<(&str, Verdict)> = Vec::new();
    let mut record = |name: &'static str, f: &mut dyn FnMut(&mut Verdict)| {
        let mut v = Verdict::new();
        f(&mut v);
        println!("{} {:>2} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, table.len() + 1, v.detail);
        table.push((name, v));
    };
    record("half-width constant", &mut half_width_constant);
    record("first-integral conservation", &mut first_integral);
    record("cone exactness", &mut cone_exactness);
    record("axis-start correctness", &mut axis_start);
    record("backward runs blow up before the axis", &mut backward_blow_up);
    record("cone family centroid", &mut cone_family);
    record("Dirichlet convergence", &mut |v| dirichlet_convergence(v, &mut solutions));
    record("qualitative PDE properties", &mut |v| pde_properties(v, &solutions));
    record("first variation", &mut |v| first_variation(v, &solutions));
    record("invariance suite", &mut invariance);
    record("mesh fidelity", &mut mesh_fidelity);
    let failed = table.iter().filter(|(_, v)| !v.passed).count();
    println!("{} of {} criteria passed", table.len() - failed, table.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
