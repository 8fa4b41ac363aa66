use hanging_core::catenary::CatenaryError;
use hanging_core::dirichlet::{area_length_condition, DirichletError, Rectangle};
use hanging_core::{MeshError, ProfileError, VariationalError};
use serde_json::{json, Value};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Catenary(#[from] CatenaryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{source}")]
    Dirichlet {
        source: DirichletError,
        /// Domain and largest boundary value, when known.
        data: Option<(Rectangle, f64)>,
    },
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("{failed} of {total} checks failed")]
    Check { failed: usize, total: usize },
}

impl From<DirichletError> for CliError {
    fn from(source: DirichletError) -> Self {
        CliError::Dirichlet { source, data: None }
    }
}

impl CliError {
    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), msg: e.to_string() }
    }

    pub fn family(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Profile(_) => "profile",
            CliError::Catenary(_) => "catenary",
            CliError::Mesh(_) | CliError::Variational(VariationalError::Mesh(_)) => "surface",
            CliError::Dirichlet { .. } | CliError::Variational(VariationalError::Grid(_)) => "dirichlet",
            CliError::Variational(_) => "variational",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Check { .. } => "check",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.family() {
            "usage" => 2,
            "profile" => 3,
            "catenary" => 4,
            "surface" => 5,
            "dirichlet" => 6,
            "variational" => 7,
            "io" => 8,
            "check" => 9,
            _ => 10,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "invalid arguments",
            CliError::Profile(e) => match e {
                ProfileError::InvalidHeight(_) => "invalid u0",
                ProfileError::InvalidAbscissa(_) => "invalid r0",
                ProfileError::InvalidRange(_) => "invalid range",
                ProfileError::SingularInput { .. } => "singular input",
                ProfileError::HeightVanished { .. } => "height vanished",
                ProfileError::Stalled { .. } => "integration stalled",
                ProfileError::StepBudget { .. } => "step budget exhausted",
                ProfileError::InvalidConfig(_) => "invalid tolerance",
                ProfileError::InvalidSamples(_) => "invalid samples",
            },
            CliError::Catenary(e) => match e {
                CatenaryError::ZeroCoefficient => "invalid a",
                CatenaryError::InvalidConstant(_) => "invalid c",
                CatenaryError::InvalidMinimum(_) => "invalid umin",
                CatenaryError::InvalidMargin { .. } => "invalid margin",
                CatenaryError::TooFewSamples(_) => "invalid samples",
                CatenaryError::OutsideDomain { .. } => "outside domain",
                CatenaryError::BelowMinimum(_) => "below minimum",
            },
            CliError::Mesh(e) | CliError::Variational(VariationalError::Mesh(e)) => mesh_kind(e),
            CliError::Dirichlet { source: e, .. } | CliError::Variational(VariationalError::Grid(e)) => match e {
                DirichletError::InvalidGrid(_) => "invalid grid",
                DirichletError::BadBoundary { .. } => "invalid boundary data",
                DirichletError::BelowFloor { .. } => "below floor",
                DirichletError::PositivityLoss { .. } => "positivity loss",
                DirichletError::NonConvergence { .. } => "no convergence",
                DirichletError::Singular(_) => "singular jacobian",
                DirichletError::InvalidConfig(_) => "invalid newton config",
                DirichletError::Problem(_) => "invalid problem",
                DirichletError::Io(_) => "io",
            },
            CliError::Variational(e) => match e {
                VariationalError::InvalidRadius(_) => "invalid R",
                VariationalError::BoundaryPerturbation { .. } => "boundary perturbation",
                VariationalError::ShapeMismatch { .. } => "shape mismatch",
                VariationalError::Grid(_) | VariationalError::Mesh(_) => unreachable!("matched above"),
            },
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse error",
            CliError::Check { .. } => "check failed",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "family": self.family(),
            "kind": self.kind(),
            "message": self.to_string(),
        });
        if let CliError::Dirichlet { source, data } = self {
            if let Some(report) = source.report() {
                v["report"] = serde_json::to_value(report).unwrap_or(Value::Null);
            }
            if let (Some((domain, max_phi)), Some(_)) = (data, source.report()) {
                let (ratio, ok) = area_length_condition(*domain, *max_phi);
                let explanation = if ok {
                    format!(
                        "area/length = {ratio} is below max boundary height {max_phi}; the necessary condition holds, \
                         so the failure is not explained by it"
                    )
                } else {
                    format!(
                        "area/length = {ratio} is not below max boundary height {max_phi}; no solution can exist \
                         for this boundary data"
                    )
                };
                v["area_length"] = json!({
                    "area_over_length": ratio,
                    "max_boundary_height": max_phi,
                    "satisfied": ok,
                    "explanation": explanation,
                });
            }
        }
        json!({ "error": v })
    }

    pub fn report(&self) -> ExitCode {
        eprintln!("{}", self.to_json());
        ExitCode::from(self.exit_code())
    }
}

fn mesh_kind(e: &MeshError) -> &'static str {
    match e {
        MeshError::InvalidCount { .. } => "invalid count",
        MeshError::EmptyProfile => "empty profile",
        MeshError::NonPositiveHeight(_) => "non-positive height",
        MeshError::InvalidRange(_) => "invalid range",
        MeshError::IndexOutOfBounds { .. } => "index out of bounds",
        MeshError::DegenerateTriangle(_) => "degenerate triangle",
        MeshError::NonFiniteVertex(_) => "non-finite vertex",
        MeshError::EmptyMesh => "empty mesh",
        MeshError::VanishingHeight(_) => "vanishing height",
        MeshError::Parse { .. } => "parse error",
        MeshError::Io(_) => "io",
    }
}
