//! Numerical toolkit for singular minimal surfaces: surfaces that hang under
//! their own weight with a prescribed boundary.
//!
//! Modules, bottom up:
//!
//! - [`quadrature`]: tanh-sinh rule for endpoint-singular integrals.
//! - [`profile`]: rotational (vertical axis) generating curves, integrated
//!   from the axis or from interior data.
//! - [`catenary`]: the catenary and the 2-catenary family behind
//!   horizontal-axis roofs.
//! - [`surface`]: triangle meshes for every construction, inversion,
//!   clipping, metrics, residual sampling, OBJ/STL export.
//! - [`dirichlet`]: Newton solver for the graph equation on rectangles.
//! - [`variational`]: the hanging-surface functional, its first variation and
//!   the cone family with unbounded low center of gravity.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod ode;

pub mod catenary;
pub mod dirichlet;
pub mod profile;
pub mod quadrature;
pub mod surface;
pub mod variational;

pub use catenary::{Catenary, CatenaryError, TwoCatenary};
pub use dirichlet::{
    BoundaryData, DirichletError, GridFunction, GridSpec, NewtonConfig, PropertyReport, SolveReport,
};
pub use profile::{
    IntegratorConfig, Profile, ProfileEquation, ProfileError, ProfileSample, Termination,
};
pub use quadrature::{QuadratureResult, TanhSinh};
pub use surface::{AnalyticSurface, MeshError, MeshMetrics, ResidualStats, SurfaceMesh};
pub use variational::{ConeAnnulusSurface, VariationalError};
