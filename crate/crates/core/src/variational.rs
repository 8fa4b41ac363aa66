//! The hanging-surface functional `J(u) = ∫ (u + λ) sqrt(1 + |∇u|^2)`, its
//! first variation on grids, and the cone-plus-annulus family whose centre of
//! gravity sinks without bound at fixed area.

use crate::dirichlet::{DirichletError, GridFunction};
use crate::surface::{cone_annulus_mesh, MeshError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error("cone radius {0} must lie in (0, 1)")]
    InvalidRadius(f64),
    #[error("perturbation is {value} at boundary node ({i}, {j}); it must vanish there")]
    BoundaryPerturbation { i: usize, j: usize, value: f64 },
    #[error("perturbation has {got} values, grid has {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] DirichletError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Quadrature for `J` on a grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JRule {
    /// Trapezoid weights, central differences inside and one-sided
    /// three-point differences on the boundary ring. Second order.
    Trapezoid,
    /// Gregory end-corrected trapezoid weights with five-point differences
    /// (one-sided near the boundary). Fourth order; a direction with fewer
    /// than six nodes falls back to the trapezoid stencils.
    #[default]
    Fourth,
}

/// Derivative along one grid line of `n` nodes at node `k`.
fn line_derivative(rule: JRule, n: usize, k: usize, h: f64, at: &dyn Fn(usize) -> f64) -> f64 {
    if rule == JRule::Fourth && n >= 6 {
        let one_sided = |s: f64, f: &dyn Fn(usize) -> f64, k: usize| -> f64 {
            match k {
                0 => s * (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / (12.0 * h),
                _ => s * (-3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4)) / (12.0 * h),
            }
        };
        return if k < 2 {
            one_sided(1.0, at, k)
        } else if k + 2 >= n {
            one_sided(-1.0, &|m| at(n - 1 - m), n - 1 - k)
        } else {
            (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h)
        };
    }
    if k == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
    } else if k == n - 1 {
        (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
    } else {
        (at(k + 1) - at(k - 1)) / (2.0 * h)
    }
}

fn line_weight(rule: JRule, n: usize, k: usize) -> f64 {
    let e = k.min(n - 1 - k);
    if rule == JRule::Fourth && n >= 6 {
        [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].get(e).copied().unwrap_or(1.0)
    } else if e == 0 {
        0.5
    } else {
        1.0
    }
}

fn gradient(g: &GridFunction, rule: JRule, i: usize, j: usize) -> (f64, f64) {
    let s = g.spec();
    (
        line_derivative(rule, s.nx, i, s.h, &|k| g.at(k, j)),
        line_derivative(rule, s.ny, j, s.h, &|k| g.at(i, k)),
    )
}

/// `∫ w(u) sqrt(1 + |∇u|^2)` over the grid.
fn weighted_area<F: Fn(f64) -> f64>(g: &GridFunction, rule: JRule, weight: F) -> f64 {
    let s = g.spec();
    let mut sum = 0.0;
    for j in 0..s.ny {
        let wy = line_weight(rule, s.ny, j);
        for i in 0..s.nx {
            let wx = line_weight(rule, s.nx, i);
            let (ux, uy) = gradient(g, rule, i, j);
            sum += wx * wy * weight(g.at(i, j)) * (1.0 + ux * ux + uy * uy).sqrt();
        }
    }
    sum * s.h * s.h
}

pub fn functional_j(g: &GridFunction, lambda: f64) -> f64 {
    functional_j_with(g, lambda, JRule::default())
}

pub fn functional_j_with(g: &GridFunction, lambda: f64, rule: JRule) -> f64 {
    weighted_area(g, rule, |u| u + lambda)
}

/// Graph area with the same quadrature as [`functional_j_with`].
pub fn graph_area(g: &GridFunction, rule: JRule) -> f64 {
    weighted_area(g, rule, |_| 1.0)
}

/// Discrete L2 norm `sqrt(h^2 Σ η^2)` of a nodal field.
pub fn field_norm(g: &GridFunction, eta: &[f64]) -> f64 {
    let h = g.spec().h;
    h * eta.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `d/dt J(u + t η)` at `t = 0`, by a central difference with
/// `t = 1e-6 · max|u|`.
pub fn first_variation(g: &GridFunction, eta: &[f64], lambda: f64) -> Result<f64, VariationalError> {
    first_variation_with(g, eta, lambda, JRule::default())
}

pub fn first_variation_with(g: &GridFunction, eta: &[f64], lambda: f64, rule: JRule) -> Result<f64, VariationalError> {
    let s = *g.spec();
    if eta.len() != s.len() {
        return Err(VariationalError::ShapeMismatch { expected: s.len(), got: eta.len() });
    }
    for (i, j) in s.boundary_nodes() {
        let value = eta[s.index(i, j)];
        if value != 0.0 {
            return Err(VariationalError::BoundaryPerturbation { i, j, value });
        }
    }
    if eta.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let scale = g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let t = 1e-6 * scale;
    let shifted = |sign: f64| -> Result<f64, VariationalError> {
        let v = g.values().iter().zip(eta).map(|(u, e)| u + sign * t * e).collect();
        Ok(functional_j_with(&GridFunction::new(s, v)?, lambda, rule))
    };
    Ok((shifted(1.0)? - shifted(-1.0)?) / (2.0 * t))
}

/// A perturbation field with a label for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub label: String,
    pub values: Vec<f64>,
}

const BUMP_MODES: [(u32, u32); 8] = [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1), (2, 3), (3, 2)];

/// Eight sine bumps `sin(pπξ) sin(qπζ)` on the unit-scaled rectangle plus
/// eight random smooth fields (random mode mixtures from a ChaCha stream
/// seeded with `seed`). All vanish on the boundary.
pub fn perturbation_battery(g: &GridFunction, seed: u64) -> Vec<Perturbation> {
    let s = *g.spec();
    let (wx, wy) = ((s.nx - 1) as f64, (s.ny - 1) as f64);
    let field = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        let mut v = vec![0.0; s.len()];
        for j in 1..s.ny - 1 {
            for i in 1..s.nx - 1 {
                v[s.index(i, j)] = f(i as f64 / wx, j as f64 / wy);
            }
        }
        v
    };
    let mut out: Vec<Perturbation> = BUMP_MODES
        .iter()
        .map(|&(p, q)| Perturbation {
            label: format!("bump_{p}_{q}"),
            values: field(&|xi, zeta| (p as f64 * PI * xi).sin() * (q as f64 * PI * zeta).sin()),
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..8 {
        let coeffs: Vec<(f64, f64, f64)> = (1..=4)
            .flat_map(|p| (1..=4).map(move |q| (p as f64, q as f64)))
            .map(|(p, q)| (p, q, rng.gen_range(-1.0..1.0) / (p * p + q * q)))
            .collect();
        out.push(Perturbation {
            label: format!("random_{k}"),
            values: field(&|xi, zeta| {
                coeffs.iter().map(|&(p, q, c)| c * (p * PI * xi).sin() * (q * PI * zeta).sin()).sum()
            }),
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationSample {
    pub label: String,
    pub derivative: f64,
    pub norm: f64,
    /// `|dJ/dt| / ||η||`.
    pub ratio: f64,
}

/// First variation of `J` along every battery field.
pub fn variation_battery(g: &GridFunction, lambda: f64, seed: u64, rule: JRule) -> Result<Vec<VariationSample>, VariationalError> {
    perturbation_battery(g, seed)
        .into_iter()
        .map(|p| {
            let derivative = first_variation_with(g, &p.values, lambda, rule)?;
            let norm = field_norm(g, &p.values);
            Ok(VariationSample { label: p.label, derivative, norm, ratio: derivative.abs() / norm })
        })
        .collect()
}

/// Default seed for the random half of the battery.
pub const BATTERY_SEED: u64 = 0x5eed_1234;

/// The surface made of a cone of depth `h = sqrt(2 + 1/R^2)` over the disc of
/// radius `R`, hanging below the flat annulus `R ≤ r ≤ 1`. Its area is `2π`
/// for every `R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeAnnulusSurface {
    pub radius: f64,
    pub depth: f64,
}

impl ConeAnnulusSurface {
    pub fn new(radius: f64) -> Result<Self, VariationalError> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(VariationalError::InvalidRadius(radius));
        }
        Ok(Self { radius, depth: (2.0 + 1.0 / (radius * radius)).sqrt() })
    }

    pub fn cone_area(&self) -> f64 {
        PI * self.radius * self.depth.hypot(self.radius)
    }

    pub fn annulus_area(&self) -> f64 {
        PI * (1.0 - self.radius * self.radius)
    }

    pub fn area(&self) -> f64 {
        self.cone_area() + self.annulus_area()
    }

    /// `-(1 + R^2)/6 · sqrt(2 + 1/R^2)`.
    pub fn centroid_height(&self) -> f64 {
        -(1.0 + self.radius * self.radius) / 6.0 * self.depth
    }

    /// A hollow cone's centroid lies a third of its depth below the rim; the
    /// flat annulus adds no moment.
    pub fn centroid_from_parts(&self) -> f64 {
        -(self.depth / 3.0) * self.cone_area() / (2.0 * PI)
    }
}

/// Mesh resolution for the cone family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeMeshResolution {
    pub n_theta: usize,
    pub n_cone: usize,
    pub n_annulus: usize,
}

impl Default for ConeMeshResolution {
    /// About 10^4 triangles.
    fn default() -> Self {
        Self { n_theta: 100, n_cone: 25, n_annulus: 25 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeFamilyReport {
    #[serde(rename = "R")]
    pub radius: f64,
    pub area_closed: f64,
    pub area_mesh: f64,
    pub cg_closed: f64,
    pub cg_mesh: f64,
    pub triangles: usize,
}

pub fn cone_family_centroid(radius: f64, res: ConeMeshResolution) -> Result<ConeFamilyReport, VariationalError> {
    let s = ConeAnnulusSurface::new(radius)?;
    let mesh = cone_annulus_mesh(s.radius, s.depth, res.n_theta, res.n_cone, res.n_annulus)?;
    let m = mesh.metrics();
    Ok(ConeFamilyReport {
        radius,
        area_closed: s.area(),
        area_mesh: m.area,
        cg_closed: s.centroid_height(),
        cg_mesh: m.centroid_height,
        triangles: mesh.triangles().len(),
    })
}

/// Radii for the default sweep, decreasing towards the axis.
pub const DEFAULT_SWEEP: [f64; 9] = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001];

pub fn cone_family_sweep(radii: &[f64], res: ConeMeshResolution) -> Result<Vec<ConeFamilyReport>, VariationalError> {
    radii.iter().map(|&r| cone_family_centroid(r, res)).collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[ConeFamilyReport], mut w: W) -> io::Result<()> {
    writeln!(w, "R,area_closed,area_mesh,cg_closed,cg_mesh")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.radius, r.area_closed, r.area_mesh, r.cg_closed, r.cg_mesh
        )?;
    }
    Ok(())
}
