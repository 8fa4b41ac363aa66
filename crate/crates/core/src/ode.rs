//! Embedded Dormand–Prince 5(4) integrator for planar second-order profiles.
//!
//! The state is `(height, slope)`. Steps are controlled in the mixed
//! absolute/relative max norm with a PI controller, and integration can be
//! stopped by a threshold event that is localized by bisection on the step.

pub(crate) type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// PI controller exponents (Hairer & Wanner's defaults for DOPRI5).
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One Dormand–Prince step. Returns the fifth-order solution, the embedded
/// error vector and the derivative at the new point (FSAL).
pub(crate) fn dopri_step<F>(f: &F, t: f64, y: &State, k1: &State, h: f64) -> (State, State, State)
where
    F: Fn(f64, &State) -> State,
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new);
    let mut err = [0.0; 2];
    for i in 0..2 {
        err[i] = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y_new, err, k7)
}

/// Classical fixed-step RK4, used for dense evaluation between stored samples.
pub(crate) fn rk4<F>(f: &F, t0: f64, y0: State, t1: f64, steps: usize) -> State
where
    F: Fn(f64, &State) -> State,
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let mut t = t0;
    for _ in 0..steps {
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k1)]));
        let k3 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k2)]));
        let k4 = f(t + h, &axpy(&y, h, &[(1.0, &k3)]));
        y = axpy(&y, h / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
        t += h;
    }
    y
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Stop {
    /// Integration reached the requested end point.
    End,
    /// The event function crossed zero; the final accepted point sits on it.
    Event,
    /// The state became invalid (non-finite or rejected by the validity
    /// predicate) and the step size collapsed.
    Stalled,
    MaxSteps,
}

pub(crate) struct Trajectory {
    pub points: Vec<(f64, State)>,
    pub stop: Stop,
}

fn error_norm(ctrl: &StepControl, y: &State, y_new: &State, err: &State) -> f64 {
    let mut norm: f64 = 0.0;
    for i in 0..2 {
        let sc = ctrl.abs_tol + ctrl.rel_tol * y[i].abs().max(y_new[i].abs());
        norm = norm.max((err[i] / sc).abs());
    }
    if norm.is_nan() {
        f64::INFINITY
    } else {
        norm
    }
}

/// Starting step after Hairer, Nørsett & Wanner (II.4).
fn initial_step<F>(f: &F, ctrl: &StepControl, t0: f64, y0: &State, k1: &State, dir: f64) -> f64
where
    F: Fn(f64, &State) -> State,
{
    let sc = |y: &State, i: usize| ctrl.abs_tol + ctrl.rel_tol * y[i].abs();
    let norm = |v: &State, y: &State| {
        ((v[0] / sc(y, 0)).powi(2) + (v[1] / sc(y, 1)).powi(2)).sqrt() / 2f64.sqrt()
    };
    let d0 = norm(y0, y0);
    let d1 = norm(k1, y0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(ctrl.max_step);
    let y1 = axpy(y0, dir * h0, &[(1.0, k1)]);
    let k2 = f(t0 + dir * h0, &y1);
    let diff = [k2[0] - k1[0], k2[1] - k1[1]];
    let d2 = norm(&diff, y0) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(ctrl.max_step)
}

/// Integrates from `t0` to `t1` (either direction).
///
/// `valid` rejects states where the equation is not defined; `event` is a
/// function of the state that starts negative and terminates integration when
/// it becomes non-negative, located by bisection to `event_rel_tol · |t|`.
pub(crate) fn integrate<F, V, G>(
    f: F,
    ctrl: &StepControl,
    t0: f64,
    y0: State,
    t1: f64,
    valid: V,
    event: G,
    event_rel_tol: f64,
) -> Trajectory
where
    F: Fn(f64, &State) -> State,
    V: Fn(f64, &State) -> bool,
    G: Fn(&State) -> f64,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut points = vec![(t0, y0)];
    if span == 0.0 {
        return Trajectory {
            points,
            stop: Stop::End,
        };
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(&f, ctrl, t0, &y0, &k1, dir).min(span);
    let mut err_prev: f64 = 1e-4;
    let mut rejected_last = false;

    for _ in 0..ctrl.max_steps {
        let remaining = (t1 - t).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(span * 1e-3);
        if h < h_min {
            return Trajectory {
                points,
                stop: Stop::Stalled,
            };
        }

        let (y_new, err, k_new) = dopri_step(&f, t, &y, &k1, dir * h);
        let t_new = if last { t1 } else { t + dir * h };
        let ok = y_new.iter().all(|v| v.is_finite()) && valid(t_new, &y_new);
        let en = if ok {
            error_norm(ctrl, &y, &y_new, &err)
        } else {
            f64::INFINITY
        };

        if en <= 1.0 {
            if event(&y_new) >= 0.0 {
                let (te, ye) = locate_event(&f, t, &y, &k1, dir * h, &event, event_rel_tol);
                points.push((te, ye));
                return Trajectory {
                    points,
                    stop: Stop::Event,
                };
            }
            let mut fac = SAFETY * en.max(1e-10).powf(-ALPHA) * err_prev.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected_last {
                fac = fac.min(1.0);
            }
            err_prev = en.max(1e-4);
            t = t_new;
            y = y_new;
            k1 = k_new;
            points.push((t, y));
            if last {
                return Trajectory {
                    points,
                    stop: Stop::End,
                };
            }
            h = (h * fac).min(ctrl.max_step);
            rejected_last = false;
        } else {
            let fac = if en.is_finite() {
                (SAFETY * en.powf(-ALPHA)).max(FAC_MIN)
            } else {
                FAC_MIN
            };
            h *= fac.min(1.0);
            rejected_last = true;
        }
    }
    Trajectory {
        points,
        stop: Stop::MaxSteps,
    }
}

/// Bisects the step fraction at which `event` first becomes non-negative.
fn locate_event<F, G>(
    f: &F,
    t: f64,
    y: &State,
    k1: &State,
    h: f64,
    event: &G,
    rel_tol: f64,
) -> (f64, State)
where
    F: Fn(f64, &State) -> State,
    G: Fn(&State) -> f64,
{
    let mut lo = 0.0;
    let mut hi = h.abs();
    let sign = h.signum();
    let mut y_hi = dopri_step(f, t, y, k1, h).0;
    let tol = rel_tol * t.abs().max(h.abs());
    while hi - lo > tol {
        let m = 0.5 * (lo + hi);
        let (ym, _, _) = dopri_step(f, t, y, k1, sign * m);
        let g = event(&ym);
        if g >= 0.0 || !ym.iter().all(|v| v.is_finite()) {
            hi = m;
            y_hi = ym;
        } else {
            lo = m;
        }
    }
    (t + sign * hi, y_hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctrl(rel: f64) -> StepControl {
        StepControl {
            rel_tol: rel,
            abs_tol: 1e-14,
            max_step: f64::INFINITY,
            max_steps: 100_000,
        }
    }

    #[test]
    fn harmonic_oscillator() {
        // y'' = -y, y(0)=1, y'(0)=0
        let f = |_t: f64, y: &State| [y[1], -y[0]];
        let tr = integrate(f, &ctrl(1e-11), 0.0, [1.0, 0.0], 3.0, |_, _| true, |_| -1.0, 1e-10);
        assert_eq!(tr.stop, Stop::End);
        let (t, y) = *tr.points.last().unwrap();
        assert_eq!(t, 3.0);
        assert!((y[0] - 3f64.cos()).abs() < 1e-9);
        assert!((y[1] + 3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn backward_direction() {
        let f = |_t: f64, y: &State| [y[1], y[0]];
        let tr = integrate(f, &ctrl(1e-11), 1.0, [1f64.exp(), 1f64.exp()], 0.0, |_, _| true, |_| -1.0, 1e-10);
        let (t, y) = *tr.points.last().unwrap();
        assert_eq!(t, 0.0);
        assert!((y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn event_localization_on_blow_up() {
        // y' = y^2 with y(0) = 1 blows up at t = 1; y = 1/(1-t).
        let f = |_t: f64, y: &State| [y[0] * y[0], 0.0];
        let tr = integrate(f, &ctrl(1e-12), 0.0, [1.0, 0.0], 2.0, |_, _| true, |y| y[0] - 1e6, 1e-12);
        assert_eq!(tr.stop, Stop::Event);
        let (t, _) = *tr.points.last().unwrap();
        assert!((t - (1.0 - 1e-6)).abs() < 1e-9, "{t}");
    }

    #[test]
    fn rk4_matches_exponential() {
        let f = |_t: f64, y: &State| [y[0], 0.0];
        let y = rk4(&f, 0.0, [1.0, 0.0], 1.0, 200);
        assert!((y[0] - 1f64.exp()).abs() < 1e-10);
    }
}
