//! Shared inputs for the kernel benchmarks.

use hanging_core::catenary::{two_catenary_build, unit_half_width, DEFAULT_MARGIN_FRACTION};
use hanging_core::dirichlet::{solve, BoundaryData, GridSpec, NewtonConfig, Rectangle};
use hanging_core::profile::integrate_from_axis;
use hanging_core::{GridFunction, IntegratorConfig, Profile, TwoCatenary};

pub const COSH: BoundaryData = BoundaryData::Catenary { a: 1.0, b: 0.0 };

/// Grid with `n` nodes per side over `[-1, 1]^2`.
pub fn square_grid(n: usize) -> GridSpec {
    let domain = Rectangle { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
    GridSpec::over_rectangle(domain, n).expect("n >= 3")
}

pub fn cosh_solution(n: usize) -> GridFunction {
    solve(&COSH, square_grid(n), &NewtonConfig::default()).expect("catenary data converges").0
}

pub fn dome() -> Profile {
    integrate_from_axis(1.0, 2.0, &IntegratorConfig::default()).expect("valid initial data")
}

pub fn unit_two_catenary(samples: usize) -> TwoCatenary {
    let a = unit_half_width().value;
    two_catenary_build(1.0, samples, DEFAULT_MARGIN_FRACTION * a).expect("valid margin")
}
