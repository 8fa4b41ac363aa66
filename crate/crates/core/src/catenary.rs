//! The catenary `u = cosh(ax + b)/a` and the 2-catenaries.
//!
//! A 2-catenary solves `u''/(1+u'^2) = 2/u`. Non-constant solutions obey the
//! first integral `u'^2 = c^2 u^4 - 1`, have a single minimum `u = 1/sqrt(c)`
//! and live on a bounded interval `(-a, a)` at whose ends they go vertical.
//! The half-width is
//!
//! ```text
//! a(c) = ∫_{u_min}^∞ du / sqrt(c^2 u^4 - 1) = u_min ∫_0^1 ds / sqrt(1 - s^4)
//! ```
//!
//! Curves are built in the height parametrization `x(u)`, where the slope
//! blow-up at the ends turns into a decaying integrand.

use crate::profile::{InitialData, Profile, ProfileEquation, ProfileSample, Termination};
use crate::quadrature::{quartic_tail, QuadratureResult, TanhSinh};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatenaryError {
    #[error("catenary coefficient a must be non-zero")]
    ZeroCoefficient,
    #[error("first-integral constant c must be positive, got {0}")]
    InvalidConstant(f64),
    #[error("minimum height must be positive, got {0}")]
    InvalidMinimum(f64),
    #[error("margin {margin} must lie in (0, half-width {half_width})")]
    InvalidMargin { margin: f64, half_width: f64 },
    #[error("need at least 5 samples, got {0}")]
    TooFewSamples(usize),
    #[error("abscissa {x} outside the maximal domain (-{half_width}, {half_width})")]
    OutsideDomain { x: f64, half_width: f64 },
    #[error("height {0} is below the minimum height")]
    BelowMinimum(f64),
}

/// `u(x) = cosh(a x + b) / a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catenary {
    pub a: f64,
    pub b: f64,
}

impl Catenary {
    pub fn new(a: f64, b: f64) -> Result<Self, CatenaryError> {
        if a == 0.0 || !a.is_finite() {
            return Err(CatenaryError::ZeroCoefficient);
        }
        Ok(Self { a, b })
    }

    /// `(u, u', u'')` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let t = self.a * x + self.b;
        let (c, s) = (t.cosh(), t.sinh());
        (c / self.a, s, self.a * c)
    }

    /// `u''/(1+u'^2) - 1/u`, identically zero up to rounding.
    pub fn residual(&self, x: f64) -> f64 {
        let (u, du, d2u) = self.eval(x);
        d2u / (1.0 + du * du) - 1.0 / u
    }
}

pub fn catenary_eval(a: f64, b: f64, x: f64) -> Result<(f64, f64, f64), CatenaryError> {
    Ok(Catenary::new(a, b)?.eval(x))
}

fn rule() -> TanhSinh {
    TanhSinh {
        rel_tol: 1e-15,
        min_levels: 4,
        ..TanhSinh::default()
    }
}

/// `∫_0^1 ds / sqrt(1 - s^4)`, the half-width of the 2-catenary with `c = 1`.
pub fn unit_half_width() -> QuadratureResult {
    quartic_tail(1.0, &rule())
}

/// Half-width `a(c)` of the maximal domain of the 2-catenary with first
/// integral constant `c`.
pub fn two_catenary_halfwidth(c: f64) -> Result<QuadratureResult, CatenaryError> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(CatenaryError::InvalidConstant(c));
    }
    let scale = c.sqrt().recip();
    let q = unit_half_width();
    Ok(QuadratureResult {
        value: scale * q.value,
        error_estimate: scale * q.error_estimate,
        coarse_value: scale * q.coarse_value,
        ..q
    })
}

/// `(u/u_min)^4 - 1` written in `q = (u - u_min)/u_min` to avoid cancellation.
fn quartic_excess(q: f64) -> f64 {
    q * (4.0 + q * (6.0 + q * (4.0 + q)))
}

/// A sampled 2-catenary, symmetric about `x = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoCatenary {
    pub c: f64,
    pub u_min: f64,
    pub half_width: f64,
    pub half_width_error: f64,
    pub margin: f64,
    profile: Profile,
}

/// Default truncation of the open domain, as a fraction of the half-width.
pub const DEFAULT_MARGIN_FRACTION: f64 = 1e-3;

/// Samples the 2-catenary with minimum height `u_min` on
/// `[-(a - margin), a - margin]`.
///
/// `n_samples` is rounded up to an odd count so that the minimum is a sample.
/// Samples are spread uniformly in `x + (u - u_min)` along each branch, which
/// keeps them dense both at the flat bottom and up the near-vertical walls.
pub fn two_catenary_build(u_min: f64, n_samples: usize, margin: f64) -> Result<TwoCatenary, CatenaryError> {
    if !(u_min > 0.0) || !u_min.is_finite() {
        return Err(CatenaryError::InvalidMinimum(u_min));
    }
    if n_samples < 5 {
        return Err(CatenaryError::TooFewSamples(n_samples));
    }
    let c = u_min.powi(-2);
    let hw = two_catenary_halfwidth(c)?;
    let a = hw.value;
    if !(margin > 0.0 && margin < a) {
        return Err(CatenaryError::InvalidMargin { margin, half_width: a });
    }
    let geometry = Branch { u_min, half_width: a };

    let u_end = geometry.height_at_gap(margin);
    let x_end = a - margin;
    let w_end = (u_end - u_min).sqrt();
    let length = x_end + (u_end - u_min);

    let m = n_samples / 2 + 1;
    let mut right = Vec::with_capacity(m);
    let mut w_prev = 0.0;
    for k in 0..m {
        let (x, w) = if k == 0 {
            (0.0, 0.0)
        } else if k == m - 1 {
            (x_end, w_end)
        } else {
            let target = length * k as f64 / (m - 1) as f64;
            let w = geometry.solve_w(
                |w| {
                    let x = geometry.abscissa_w(w);
                    (x + w * w - target, geometry.dx_dw(w) + 2.0 * w)
                },
                w_prev,
                w_end,
            );
            (geometry.abscissa_w(w), w)
        };
        w_prev = w;
        let q = w * w / u_min;
        right.push(ProfileSample {
            abscissa: x,
            height: u_min + w * w,
            slope: quartic_excess(q).sqrt(),
        });
    }

    let mut samples: Vec<ProfileSample> = right
        .iter()
        .skip(1)
        .rev()
        .map(|s| ProfileSample { abscissa: -s.abscissa, height: s.height, slope: -s.slope })
        .collect();
    samples.extend_from_slice(&right);

    let profile = Profile::from_samples(
        samples,
        ProfileEquation::TwoCatenary,
        Termination::ReachedTarget,
        InitialData { r0: 0.0, u0: u_min, du0: 0.0 },
    )
    .expect("2-catenary samples are monotone and positive");

    Ok(TwoCatenary {
        c,
        u_min,
        half_width: a,
        half_width_error: hw.error_estimate,
        margin,
        profile,
    })
}

/// Right branch geometry in the variable `w = sqrt(u - u_min)`, in which the
/// abscissa is smooth at the minimum.
struct Branch {
    u_min: f64,
    half_width: f64,
}

impl Branch {
    /// `x(u)` on the right branch for `u = u_min + w^2`.
    fn abscissa_w(&self, w: f64) -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        let u = self.u_min + w * w;
        let sigma = self.u_min / u;
        if sigma > 0.5 {
            // short interval next to the singular end
            self.u_min * quartic_tail(w * w / u, &rule()).value
        } else {
            self.half_width - self.u_min * head(sigma)
        }
    }

    /// `dx/dw = 2 w / sqrt(c^2 u^4 - 1)`, finite at `w = 0`.
    fn dx_dw(&self, w: f64) -> f64 {
        let q = w * w / self.u_min;
        2.0 * self.u_min.sqrt() / (4.0 + q * (6.0 + q * (4.0 + q))).sqrt()
    }

    /// Height at which the branch is `gap` short of the half-width.
    fn height_at_gap(&self, gap: f64) -> f64 {
        // u_min · ∫_0^σ ds/sqrt(1-s^4) = gap, solved for σ = u_min/u
        let target = gap / self.u_min;
        let mut sigma = target.min(0.5);
        for _ in 0..60 {
            let f = head(sigma) - target;
            let step = f * (1.0 - sigma.powi(4)).sqrt();
            let next = (sigma - step).clamp(0.5 * sigma, 1.0 - 0.5 * (1.0 - sigma));
            if (next - sigma).abs() <= 1e-16 * sigma {
                sigma = next;
                break;
            }
            sigma = next;
        }
        self.u_min / sigma
    }

    /// Safeguarded Newton on a monotone increasing function of `w`.
    fn solve_w<F>(&self, f: F, lo_start: f64, hi_start: f64) -> f64
    where
        F: Fn(f64) -> (f64, f64),
    {
        let (mut lo, mut hi) = (lo_start, hi_start);
        let mut w = 0.5 * (lo + hi);
        for _ in 0..100 {
            let (g, dg) = f(w);
            if g == 0.0 {
                return w;
            }
            if g > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            let mut next = w - g / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - w).abs() <= 4.0 * f64::EPSILON * w.max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * hi {
                return next;
            }
            w = next;
        }
        w
    }
}

/// `∫_0^σ ds / sqrt(1 - s^4)` for `σ ≤ 1`.
fn head(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    rule()
        .integrate(
            |s, _, _| 1.0 / ((1.0 - s * s) * (1.0 + s * s)).sqrt(),
            0.0,
            sigma,
        )
        .value
}

impl TwoCatenary {
    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Abscissa of the right branch at height `u ≥ u_min`.
    pub fn abscissa_at(&self, u: f64) -> Result<f64, CatenaryError> {
        if !(u >= self.u_min) {
            return Err(CatenaryError::BelowMinimum(u));
        }
        Ok(self.branch().abscissa_w((u - self.u_min).sqrt()))
    }

    /// `(u, u')` at any `x` in the open maximal domain.
    pub fn height_at(&self, x: f64) -> Result<(f64, f64), CatenaryError> {
        if !(x.abs() < self.half_width) {
            return Err(CatenaryError::OutsideDomain { x, half_width: self.half_width });
        }
        let b = self.branch();
        let target = x.abs();
        let mut hi = (target / self.u_min.sqrt()).max(1e-3 * self.u_min.sqrt());
        while b.abscissa_w(hi) < target {
            hi *= 2.0;
        }
        let w = if target == 0.0 {
            0.0
        } else {
            b.solve_w(|w| (b.abscissa_w(w) - target, b.dx_dw(w)), 0.0, hi)
        };
        let q = w * w / self.u_min;
        let slope = quartic_excess(q).sqrt();
        Ok((self.u_min + w * w, if x < 0.0 { -slope } else { slope }))
    }

    fn branch(&self) -> Branch {
        Branch { u_min: self.u_min, half_width: self.half_width }
    }

    /// `u'' = 2 c^2 u^3` from differentiating the first integral.
    pub fn second_derivative(&self, u: f64) -> f64 {
        2.0 * self.c * self.c * u.powi(3)
    }

    /// Largest first-integral defect `|u'^2 - (c^2 u^4 - 1)|`, each term
    /// normalized by `max(1, c^2 u^4)`.
    pub fn first_integral_residual(&self) -> f64 {
        self.profile
            .samples()
            .iter()
            .map(|s| {
                let cu4 = self.c * self.c * s.height.powi(4);
                (s.slope * s.slope - (cu4 - 1.0)).abs() / cu4.max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Unnormalized `max |u'^2 - (c^2 u^4 - 1)|` over samples with
    /// `u ≤ height_limit`.
    pub fn first_integral_residual_below(&self, height_limit: f64) -> f64 {
        self.profile
            .samples()
            .iter()
            .filter(|s| s.height <= height_limit)
            .map(|s| (s.slope * s.slope - (self.c * self.c * s.height.powi(4) - 1.0)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|u''/(1+u'^2) - 2/u|` with `u''` from the first integral.
    pub fn equation_residual(&self) -> f64 {
        self.profile
            .samples()
            .iter()
            .map(|s| (self.second_derivative(s.height) / (1.0 + s.slope * s.slope) - 2.0 / s.height).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|u(x) - u(-x)|` over mirrored sample pairs.
    pub fn symmetry_error(&self) -> f64 {
        let s = self.profile.samples();
        let n = s.len();
        (0..n / 2)
            .map(|i| {
                let (l, r) = (s[i], s[n - 1 - i]);
                (l.height - r.height).abs().max((l.abscissa + r.abscissa).abs())
            })
            .fold(0.0, f64::max)
    }

    /// JSON summary record.
    pub fn summary(&self) -> TwoCatenarySummary {
        let s = self.profile.samples();
        TwoCatenarySummary {
            c: self.c,
            u_min: self.u_min,
            half_width: self.half_width,
            half_width_error: self.half_width_error,
            margin: self.margin,
            x_extent: s.last().unwrap().abscissa - s[0].abscissa,
            u_max: s.last().unwrap().height,
            samples: s.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoCatenarySummary {
    pub c: f64,
    pub u_min: f64,
    pub half_width: f64,
    pub half_width_error: f64,
    pub margin: f64,
    pub x_extent: f64,
    pub u_max: f64,
    pub samples: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catenary_closed_form() {
        assert_eq!(catenary_eval(1.0, 0.0, 0.0).unwrap(), (1.0, 0.0, 1.0));
        let (u, du, d2u) = catenary_eval(1.0, 0.0, 1.0).unwrap();
        assert!((u - 1.5430806348152437).abs() < 1e-15);
        assert!((du - 1.1752011936438014).abs() < 1e-15);
        assert_eq!(d2u, u);
        let cat = Catenary::new(1.0, 0.0).unwrap();
        assert!(cat.residual(0.7).abs() < 1e-14);
        assert_eq!(Catenary::new(0.0, 1.0), Err(CatenaryError::ZeroCoefficient));
        let shifted = Catenary::new(-2.0, 0.3).unwrap();
        assert!(shifted.residual(0.4).abs() < 1e-14);
    }

    #[test]
    fn halfwidth_scaling_and_errors() {
        let a1 = two_catenary_halfwidth(1.0).unwrap();
        let a4 = two_catenary_halfwidth(4.0).unwrap();
        assert!((a4.value - 0.5 * a1.value).abs() < 1e-8 * a1.value);
        assert!(a1.value > 1.0 && a1.value < std::f64::consts::FRAC_PI_2);
        assert!(two_catenary_halfwidth(0.0).is_err());
        assert!(two_catenary_halfwidth(-1.0).is_err());
    }

    #[test]
    fn build_rejects_bad_input() {
        assert_eq!(two_catenary_build(0.0, 11, 1e-3), Err(CatenaryError::InvalidMinimum(0.0)));
        assert!(matches!(two_catenary_build(1.0, 11, 2.0), Err(CatenaryError::InvalidMargin { .. })));
        assert!(matches!(two_catenary_build(1.0, 11, 0.0), Err(CatenaryError::InvalidMargin { .. })));
        assert_eq!(two_catenary_build(1.0, 3, 1e-3), Err(CatenaryError::TooFewSamples(3)));
    }

    #[test]
    fn unit_two_catenary_invariants() {
        let a = two_catenary_halfwidth(1.0).unwrap().value;
        let tc = two_catenary_build(1.0, 401, 1e-3 * a).unwrap();
        let s = tc.profile().samples();
        assert_eq!(s.len(), 401);
        let mid = s[200];
        assert_eq!((mid.abscissa, mid.height, mid.slope), (0.0, 1.0, 0.0));
        assert!(tc.first_integral_residual() < 1e-12);
        assert!(tc.equation_residual() < 1e-8);
        assert!(tc.symmetry_error() < 1e-10);
        assert!((s[400].abscissa - (a - 1e-3 * a)).abs() < 1e-12);
        assert!(s.iter().all(|p| tc.second_derivative(p.height) > 0.0));
    }

    #[test]
    fn height_at_inverts_abscissa_at() {
        let tc = two_catenary_build(1.0, 51, 1e-3).unwrap();
        for &x in &[-1.2, -0.5, 0.0, 1e-6, 0.3, 1.0, 1.31] {
            let (u, du) = tc.height_at(x).unwrap();
            let back = tc.abscissa_at(u).unwrap();
            // x(u) has infinite slope at the minimum, so allow for rounding of u
            let tol = 1e-12 + 4.0 * f64::EPSILON * u / du.abs().max(1e-300);
            assert!((back - x.abs()).abs() < tol, "{x} {u} {back}");
            assert!((du * du - (u.powi(4) - 1.0)).abs() <= 1e-12 * u.powi(4).max(1.0));
        }
        assert!(tc.height_at(1.32).is_err());
        assert!(tc.abscissa_at(0.5).is_err());
    }
}
