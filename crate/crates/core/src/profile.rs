//! Generating curves of rotational singular minimal surfaces.
//!
//! A vertical-axis surface of revolution `z = u(r)` hangs under its own
//! weight when
//!
//! ```text
//! u'' / (1 + u'^2) = 1/u - u'/r
//! ```
//!
//! The equation is singular on the axis. Solutions that meet the axis have
//! `u'(0) = 0` and `u''(0) = 1/(2 u(0))`; they are started a short offset off
//! the axis from the corresponding two-term expansion. Solutions started away
//! from the axis with zero slope steepen and stop short of it.

use crate::ode::{self, State, StepControl, Stop};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid u0: height must be positive, got {0}")]
    InvalidHeight(f64),
    #[error("invalid r0: starting abscissa must be positive, got {0}")]
    InvalidAbscissa(f64),
    #[error("invalid integration range: {0}")]
    InvalidRange(String),
    #[error("singular input: r = {r}, u = {u}")]
    SingularInput { r: f64, u: f64 },
    #[error("height reached zero near r = {at}; the equation is singular there")]
    HeightVanished { at: f64 },
    #[error("integration stalled at r = {at} (step size underflow)")]
    Stalled { at: f64 },
    #[error("step budget exhausted at r = {at}")]
    StepBudget { at: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid profile samples: {0}")]
    InvalidSamples(String),
}

/// Which second-order equation a sampled curve satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileEquation {
    /// `u''/(1+u'^2) = 1/u - u'/r`, vertical rotation axis.
    Rotational,
    /// `u''/(1+u'^2) = 2/u`, generating curve of a horizontal-axis roof.
    TwoCatenary,
    /// Samples of an explicit curve; no equation attached.
    Explicit,
}

impl ProfileEquation {
    /// Second derivative prescribed by the equation.
    pub fn second_derivative(self, r: f64, u: f64, du: f64) -> f64 {
        match self {
            Self::Rotational => (1.0 + du * du) * (1.0 / u - du / r),
            Self::TwoCatenary => 2.0 * (1.0 + du * du) / u,
            Self::Explicit => f64::NAN,
        }
    }

    fn abscissa_label(self) -> &'static str {
        match self {
            Self::Rotational | Self::Explicit => "r",
            Self::TwoCatenary => "x",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub abscissa: f64,
    pub height: f64,
    pub slope: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedTarget,
    SlopeBlowUp { at: f64 },
    HeightBlowUp { at: f64 },
    ReachedAxis,
}

/// Initial data `u(r0) = u0`, `u'(r0) = du0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub r0: f64,
    pub u0: f64,
    pub du0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Offset from the axis at which axis solutions are seeded.
    /// `None` selects `1e-4 · u0`.
    pub seed_offset: Option<f64>,
    pub slope_cap: f64,
    /// `None` selects `1e6 · u0`.
    pub height_cap: Option<f64>,
    pub max_steps: usize,
    /// Relative accuracy of blow-up localization.
    pub event_rel_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            seed_offset: None,
            slope_cap: 1e6,
            height_cap: None,
            max_steps: 1_000_000,
            event_rel_tol: 1e-8,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("slope_cap", self.slope_cap),
            ("event_rel_tol", self.event_rel_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(ProfileError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if let Some(d) = self.seed_offset {
            if !(d > 0.0) {
                return Err(ProfileError::InvalidConfig("seed_offset must be positive".into()));
            }
        }
        if let Some(c) = self.height_cap {
            if !(c > 0.0) {
                return Err(ProfileError::InvalidConfig("height_cap must be positive".into()));
            }
        }
        if self.max_steps == 0 {
            return Err(ProfileError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }

    fn seed_for(&self, u0: f64) -> f64 {
        self.seed_offset.unwrap_or(1e-4 * u0)
    }

    fn height_cap_for(&self, u0: f64) -> f64 {
        self.height_cap.unwrap_or(1e6 * u0)
    }

    fn step_control(&self) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            max_steps: self.max_steps,
        }
    }
}

/// A sampled planar generating curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    samples: Vec<ProfileSample>,
    termination: Termination,
    params: InitialData,
    equation: ProfileEquation,
}

/// Residual of the rotational equation, `u''/(1+u'^2) - 1/u + u'/r`.
pub fn rotational_residual(r: f64, u: f64, du: f64, d2u: f64) -> Result<f64, ProfileError> {
    if r == 0.0 || u == 0.0 || !r.is_finite() || !u.is_finite() {
        return Err(ProfileError::SingularInput { r, u });
    }
    Ok(d2u / (1.0 + du * du) - 1.0 / u + du / r)
}

fn rotational_rhs(r: f64, y: &State) -> State {
    [y[1], ProfileEquation::Rotational.second_derivative(r, y[0], y[1])]
}

/// Solution of the rotational equation that meets the axis at height `u0`.
pub fn integrate_from_axis(u0: f64, r_max: f64, cfg: &IntegratorConfig) -> Result<Profile, ProfileError> {
    if !(u0 > 0.0) || !u0.is_finite() {
        return Err(ProfileError::InvalidHeight(u0));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(ProfileError::InvalidRange(format!("r_max must be positive, got {r_max}")));
    }
    cfg.validate()?;
    let delta = cfg.seed_for(u0);
    if delta >= r_max {
        return Err(ProfileError::InvalidRange(format!(
            "seed offset {delta} is not below r_max {r_max}"
        )));
    }
    let seed = [u0 + delta * delta / (4.0 * u0), delta / (2.0 * u0)];
    let params = InitialData { r0: 0.0, u0, du0: 0.0 };
    let mut samples = vec![ProfileSample { abscissa: 0.0, height: u0, slope: 0.0 }];
    let termination = run(delta, seed, r_max, cfg, u0, &mut samples)?;
    Ok(Profile {
        samples,
        termination,
        params,
        equation: ProfileEquation::Rotational,
    })
}

/// Solution of the rotational equation from interior data at `r0 > 0`,
/// integrated toward `r_end` (which may lie on either side of `r0`).
pub fn integrate_from_interior(
    r0: f64,
    u0: f64,
    du0: f64,
    r_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Profile, ProfileError> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(ProfileError::InvalidAbscissa(r0));
    }
    if !(u0 > 0.0) || !u0.is_finite() {
        return Err(ProfileError::InvalidHeight(u0));
    }
    if !(r_end >= 0.0) || !r_end.is_finite() || !du0.is_finite() {
        return Err(ProfileError::InvalidRange(format!("r_end must be non-negative, got {r_end}")));
    }
    cfg.validate()?;
    let params = InitialData { r0, u0, du0 };
    let mut samples = Vec::new();
    // The equation cannot be evaluated on the axis itself.
    let axis_guard = 1e-9 * r0;
    let target = r_end.max(axis_guard);
    let mut termination = run(r0, [u0, du0], target, cfg, u0, &mut samples)?;
    if termination == Termination::ReachedTarget && r_end < axis_guard {
        let last = samples.last().expect("trajectory holds its start point");
        if last.height < 1e-6 * u0 {
            // a singular solution such as the cone u = r
            return Err(ProfileError::HeightVanished { at: last.abscissa });
        }
        termination = Termination::ReachedAxis;
    }
    Ok(Profile {
        samples,
        termination,
        params,
        equation: ProfileEquation::Rotational,
    })
}

fn run(
    r0: f64,
    y0: State,
    r_end: f64,
    cfg: &IntegratorConfig,
    u_scale: f64,
    samples: &mut Vec<ProfileSample>,
) -> Result<Termination, ProfileError> {
    let slope_cap = cfg.slope_cap;
    let height_cap = cfg.height_cap_for(u_scale);
    let traj = ode::integrate(
        rotational_rhs,
        &cfg.step_control(),
        r0,
        y0,
        r_end,
        |r, y| y[0] > 0.0 && r > 0.0,
        |y| (y[1].abs() / slope_cap).max(y[0] / height_cap) - 1.0,
        cfg.event_rel_tol,
    );
    samples.extend(traj.points.iter().map(|(r, y)| ProfileSample {
        abscissa: *r,
        height: y[0],
        slope: y[1],
    }));
    let (r_last, y_last) = *traj.points.last().expect("trajectory holds its start point");
    match traj.stop {
        Stop::End => Ok(Termination::ReachedTarget),
        Stop::Event => {
            if y_last[1].abs() / slope_cap >= y_last[0] / height_cap {
                Ok(Termination::SlopeBlowUp { at: r_last })
            } else {
                Ok(Termination::HeightBlowUp { at: r_last })
            }
        }
        Stop::Stalled => {
            if y_last[0] < 1e-6 * u_scale {
                Err(ProfileError::HeightVanished { at: r_last })
            } else {
                Err(ProfileError::Stalled { at: r_last })
            }
        }
        Stop::MaxSteps => Err(ProfileError::StepBudget { at: r_last }),
    }
}

/// `|u_δ(r) − u_{δ/2}(r)|`: sensitivity of an axis solution to the seed offset.
pub fn axis_seed_sensitivity(u0: f64, r: f64, cfg: &IntegratorConfig) -> Result<f64, ProfileError> {
    let delta = cfg.seed_for(u0);
    let a = integrate_from_axis(u0, r, &IntegratorConfig { seed_offset: Some(delta), ..*cfg })?;
    let b = integrate_from_axis(u0, r, &IntegratorConfig { seed_offset: Some(0.5 * delta), ..*cfg })?;
    Ok((a.last().height - b.last().height).abs())
}

impl Profile {
    /// Builds a profile from explicit samples, checking the type invariants.
    pub fn from_samples(
        samples: Vec<ProfileSample>,
        equation: ProfileEquation,
        termination: Termination,
        params: InitialData,
    ) -> Result<Self, ProfileError> {
        if samples.len() < 2 {
            return Err(ProfileError::InvalidSamples("need at least two samples".into()));
        }
        let increasing = samples[1].abscissa > samples[0].abscissa;
        for w in samples.windows(2) {
            let ok = if increasing {
                w[1].abscissa > w[0].abscissa
            } else {
                w[1].abscissa < w[0].abscissa
            };
            if !ok {
                return Err(ProfileError::InvalidSamples("abscissae must be strictly monotone".into()));
            }
        }
        if let Some(s) = samples.iter().find(|s| !(s.height > 0.0) || !s.slope.is_finite()) {
            return Err(ProfileError::InvalidSamples(format!(
                "non-positive height or invalid slope at abscissa {}",
                s.abscissa
            )));
        }
        Ok(Self {
            samples,
            termination,
            params,
            equation,
        })
    }

    /// Samples an explicit curve `u(r)` with derivative `du(r)` on a uniform grid.
    pub fn from_fn(
        lo: f64,
        hi: f64,
        n: usize,
        u: impl Fn(f64) -> f64,
        du: impl Fn(f64) -> f64,
    ) -> Result<Self, ProfileError> {
        if n < 2 || !(hi > lo) {
            return Err(ProfileError::InvalidSamples("need n >= 2 and hi > lo".into()));
        }
        let samples = (0..n)
            .map(|k| {
                let r = if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
                ProfileSample { abscissa: r, height: u(r), slope: du(r) }
            })
            .collect();
        Self::from_samples(
            samples,
            ProfileEquation::Explicit,
            Termination::ReachedTarget,
            InitialData { r0: lo, u0: u(lo), du0: du(lo) },
        )
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn params(&self) -> InitialData {
        self.params
    }

    pub fn equation(&self) -> ProfileEquation {
        self.equation
    }

    pub fn first(&self) -> ProfileSample {
        self.samples[0]
    }

    pub fn last(&self) -> ProfileSample {
        *self.samples.last().expect("profiles are never empty")
    }

    /// Whether the first sample sits on the rotation axis.
    pub fn starts_on_axis(&self) -> bool {
        self.samples[0].abscissa == 0.0
    }

    fn is_increasing(&self) -> bool {
        self.samples.len() < 2 || self.samples[1].abscissa > self.samples[0].abscissa
    }

    /// Smallest and largest abscissa covered.
    pub fn range(&self) -> (f64, f64) {
        let a = self.samples[0].abscissa;
        let b = self.last().abscissa;
        (a.min(b), a.max(b))
    }

    /// Height and slope at an arbitrary abscissa inside the sampled range.
    ///
    /// The equation is re-integrated with small fixed RK4 steps from the
    /// nearest stored sample, so the result carries the integrator's accuracy
    /// rather than an interpolation error. Explicit profiles fall back to
    /// cubic Hermite interpolation.
    pub fn eval(&self, r: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.range();
        if !(r >= lo && r <= hi) {
            return None;
        }
        let idx = self.nearest(r);
        let s = self.samples[idx];
        if s.abscissa == r {
            return Some((s.height, s.slope));
        }
        if self.equation == ProfileEquation::Explicit {
            return Some(self.hermite(r));
        }
        // Axis solutions: the equation cannot be stepped through r = 0, but
        // the two-term expansion is exact to O(r^4) there.
        if self.starts_on_axis() && self.equation == ProfileEquation::Rotational {
            let seed = self.samples.get(1).map_or(0.0, |s| s.abscissa);
            if r < 0.5 * seed {
                let u0 = self.samples[0].height;
                return Some((u0 + r * r / (4.0 * u0), r / (2.0 * u0)));
            }
            if idx == 0 {
                return self.eval_from(1, r);
            }
        }
        self.eval_from(idx, r)
    }

    fn eval_from(&self, idx: usize, r: f64) -> Option<(f64, f64)> {
        let s = self.samples[idx];
        let spacing = self.local_spacing(idx);
        let steps = ((64.0 * (r - s.abscissa).abs() / spacing).ceil() as usize).max(4);
        let eq = self.equation;
        let y = ode::rk4(
            &|t: f64, y: &State| [y[1], eq.second_derivative(t, y[0], y[1])],
            s.abscissa,
            [s.height, s.slope],
            r,
            steps,
        );
        Some((y[0], y[1]))
    }

    fn hermite(&self, r: f64) -> (f64, f64) {
        let i = self.bracket(r);
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        let h = b.abscissa - a.abscissa;
        let t = (r - a.abscissa) / h;
        let (t2, t3) = (t * t, t * t * t);
        let u = (2.0 * t3 - 3.0 * t2 + 1.0) * a.height
            + (t3 - 2.0 * t2 + t) * h * a.slope
            + (-2.0 * t3 + 3.0 * t2) * b.height
            + (t3 - t2) * h * b.slope;
        let du = ((6.0 * t2 - 6.0 * t) * a.height
            + (3.0 * t2 - 4.0 * t + 1.0) * h * a.slope
            + (-6.0 * t2 + 6.0 * t) * b.height
            + (3.0 * t2 - 2.0 * t) * h * b.slope)
            / h;
        (u, du)
    }

    /// Index `i` with `r` between samples `i` and `i + 1`.
    fn bracket(&self, r: f64) -> usize {
        let n = self.samples.len();
        let pos = if self.is_increasing() {
            self.samples.partition_point(|s| s.abscissa <= r)
        } else {
            self.samples.partition_point(|s| s.abscissa >= r)
        };
        pos.clamp(1, n - 1) - 1
    }

    fn nearest(&self, r: f64) -> usize {
        let i = self.bracket(r);
        let a = (self.samples[i].abscissa - r).abs();
        let b = (self.samples[i + 1].abscissa - r).abs();
        if a <= b {
            i
        } else {
            i + 1
        }
    }

    fn local_spacing(&self, idx: usize) -> f64 {
        let n = self.samples.len();
        let left = if idx > 0 {
            (self.samples[idx].abscissa - self.samples[idx - 1].abscissa).abs()
        } else {
            f64::INFINITY
        };
        let right = if idx + 1 < n {
            (self.samples[idx + 1].abscissa - self.samples[idx].abscissa).abs()
        } else {
            f64::INFINITY
        };
        left.min(right)
    }

    /// Second derivative at sample `idx`, from a fourth-order central
    /// difference of the slope evaluated along the trajectory.
    pub fn curvature_at(&self, idx: usize) -> Option<f64> {
        let s = self.samples[idx];
        let (lo, hi) = self.range();
        let eta = 1e-2 * self.local_spacing(idx).min(s.height);
        if s.abscissa - 2.0 * eta < lo || s.abscissa + 2.0 * eta > hi {
            return None;
        }
        let slope = |r: f64| self.eval(r).map(|(_, du)| du);
        let (m2, m1) = (slope(s.abscissa - 2.0 * eta)?, slope(s.abscissa - eta)?);
        let (p1, p2) = (slope(s.abscissa + eta)?, slope(s.abscissa + 2.0 * eta)?);
        Some((m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * eta))
    }

    /// Residual of the rotational equation at every interior sample away
    /// from the axis. Returns `(abscissa, residual)` pairs.
    pub fn residuals(&self) -> Vec<(f64, f64)> {
        let n = self.samples.len();
        (1..n.saturating_sub(1))
            .filter_map(|i| {
                let s = self.samples[i];
                if s.abscissa <= 0.0 {
                    return None;
                }
                let d2u = self.curvature_at(i)?;
                rotational_residual(s.abscissa, s.height, s.slope, d2u)
                    .ok()
                    .map(|res| (s.abscissa, res))
            })
            .collect()
    }

    /// Largest absolute residual over [`Self::residuals`].
    pub fn max_residual(&self) -> f64 {
        self.residuals().iter().fold(0.0, |m, (_, r)| m.max(r.abs()))
    }

    /// True when some interior sample is a strict maximum of its neighbours.
    pub fn has_interior_max(&self) -> bool {
        self.samples
            .windows(3)
            .any(|w| w[1].height > w[0].height && w[1].height > w[2].height)
    }

    /// Copy resampled on `n` uniformly spaced abscissae spanning the profile.
    pub fn resampled(&self, n: usize) -> Result<Self, ProfileError> {
        if n < 2 {
            return Err(ProfileError::InvalidSamples("need at least two samples".into()));
        }
        let a = self.samples[0].abscissa;
        let b = self.last().abscissa;
        let samples = (0..n)
            .map(|k| {
                let r = if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 };
                let (u, du) = self.eval(r).expect("abscissa lies in range");
                ProfileSample { abscissa: r, height: u, slope: du }
            })
            .collect();
        Self::from_samples(samples, self.equation, self.termination, self.params)
    }

    /// Writes the samples as CSV (`r,u,du` or `x,u,du`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{},u,du", self.equation.abscissa_label())?;
        let mut line = String::new();
        for s in &self.samples {
            line.clear();
            let _ = write!(line, "{:.16e},{:.16e},{:.16e}", s.abscissa, s.height, s.slope);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Sidecar metadata describing how the samples were produced.
    pub fn sidecar(&self) -> ProfileSidecar {
        ProfileSidecar {
            equation: self.equation,
            termination: self.termination,
            params: self.params,
            samples: self.samples.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub equation: ProfileEquation,
    pub termination: Termination,
    pub params: InitialData,
    pub samples: usize,
}

/// Reads samples written by [`Profile::write_csv`].
pub fn read_profile_csv<R: BufRead>(r: R) -> Result<Vec<ProfileSample>, ProfileError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| ProfileError::InvalidSamples(e.to_string()))?
        .ok_or_else(|| ProfileError::InvalidSamples("empty file".into()))?;
    if header != "r,u,du" && header != "x,u,du" {
        return Err(ProfileError::InvalidSamples(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line.map_err(|e| ProfileError::InvalidSamples(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ProfileError::InvalidSamples(format!("{line:?}: {e}")))?;
        if vals.len() != 3 {
            return Err(ProfileError::InvalidSamples(format!("expected 3 columns in {line:?}")));
        }
        out.push(ProfileSample { abscissa: vals[0], height: vals[1], slope: vals[2] });
    }
    Ok(out)
}
