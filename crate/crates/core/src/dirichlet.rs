//! Dirichlet problem for hanging graphs `z = u(x, y)` over a rectangle.
//!
//! The graph equation in expanded form reads
//!
//! ```text
//! (1 + u_y^2) u_xx - 2 u_x u_y u_xy + (1 + u_x^2) u_yy = (1 + u_x^2 + u_y^2) / u
//! ```
//!
//! and is discretized with second-order central differences on a uniform
//! grid of square cells. Newton's method with an analytic nine-point Jacobian
//! and a banded direct solver does the rest. Existence is not guaranteed for
//! arbitrary boundary data, so failure comes back as a structured error with
//! the full iteration record.

use crate::catenary::Catenary;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirichletError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("boundary value {value} at node ({i}, {j}) is not positive")]
    BadBoundary { i: usize, j: usize, value: f64 },
    #[error("height {value} at node ({i}, {j}) is at or below the floor {floor}")]
    BelowFloor { i: usize, j: usize, value: f64, floor: f64 },
    #[error("Newton iteration lost positivity at node ({i}, {j})")]
    PositivityLoss { i: usize, j: usize, report: Box<SolveReport> },
    #[error("Newton iteration did not converge; best residual {best_residual:e}")]
    NonConvergence { best_residual: f64, report: Box<SolveReport> },
    #[error("linear system is singular at pivot {0}")]
    Singular(usize),
    #[error("invalid Newton configuration: {0}")]
    InvalidConfig(String),
    #[error("problem specification: {0}")]
    Problem(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl DirichletError {
    /// The iteration record, for failures that happened inside Newton.
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            DirichletError::PositivityLoss { report, .. } | DirichletError::NonConvergence { report, .. } => Some(report),
            _ => None,
        }
    }
}

impl From<io::Error> for DirichletError {
    fn from(e: io::Error) -> Self {
        DirichletError::Io(e.to_string())
    }
}

/// Uniform grid with square cells; node `(i, j)` sits at `(x0 + i h, y0 + j h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x0: f64, y0: f64, h: f64, nx: usize, ny: usize) -> Result<Self, DirichletError> {
        if nx < 3 || ny < 3 {
            return Err(DirichletError::InvalidGrid(format!("need at least 3x3 nodes, got {nx}x{ny}")));
        }
        if !(h > 0.0) || !h.is_finite() || !x0.is_finite() || !y0.is_finite() {
            return Err(DirichletError::InvalidGrid(format!("spacing {h} must be positive")));
        }
        Ok(Self { x0, y0, h, nx, ny })
    }

    /// Grid over `[x_min, x_max] × [y_min, y_max]` with `nx` nodes across;
    /// the node count in y follows from the square-cell requirement.
    pub fn over_rectangle(domain: Rectangle, nx: usize) -> Result<Self, DirichletError> {
        domain.validate()?;
        if nx < 3 {
            return Err(DirichletError::InvalidGrid(format!("need at least 3 nodes across, got {nx}")));
        }
        let h = domain.width() / (nx - 1) as f64;
        let cells = domain.height() / h;
        let ny_cells = cells.round();
        if (cells - ny_cells).abs() > 1e-9 * cells.max(1.0) {
            return Err(DirichletError::InvalidGrid(format!(
                "domain {} x {} cannot be covered by square cells of size {h}",
                domain.width(),
                domain.height()
            )));
        }
        Self::new(domain.x_min, domain.y_min, h, nx, ny_cells as usize + 1)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    pub fn rectangle(&self) -> Rectangle {
        Rectangle {
            x_min: self.x0,
            x_max: self.x(self.nx - 1),
            y_min: self.y0,
            y_max: self.y(self.ny - 1),
        }
    }

    /// Boundary nodes in counter-clockwise order starting at `(0, 0)`.
    pub fn boundary_nodes(&self) -> Vec<(usize, usize)> {
        let (nx, ny) = (self.nx, self.ny);
        let mut v = Vec::with_capacity(2 * (nx + ny) - 4);
        v.extend((0..nx).map(|i| (i, 0)));
        v.extend((1..ny).map(|j| (nx - 1, j)));
        v.extend((0..nx - 1).rev().map(|i| (i, ny - 1)));
        v.extend((1..ny - 1).rev().map(|j| (0, j)));
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rectangle {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    fn validate(&self) -> Result<(), DirichletError> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(DirichletError::InvalidGrid(format!("empty domain {self:?}")));
        }
        Ok(())
    }
}

/// Heights on a grid. Boundary nodes carry the Dirichlet data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self, DirichletError> {
        if values.len() != spec.len() {
            return Err(DirichletError::InvalidGrid(format!(
                "{} values for a {}x{} grid",
                values.len(),
                spec.nx,
                spec.ny
            )));
        }
        if let Some(k) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            let (i, j) = (k % spec.nx, k / spec.nx);
            return Err(DirichletError::BelowFloor { i, j, value: values[k], floor: 0.0 });
        }
        Ok(Self { spec, values })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(spec: GridSpec, f: F) -> Result<Self, DirichletError> {
        let values = (0..spec.ny)
            .flat_map(|j| (0..spec.nx).map(move |i| (i, j)))
            .map(|(i, j)| f(spec.x(i), spec.y(j)))
            .collect();
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn boundary_max(&self) -> f64 {
        self.spec.boundary_nodes().iter().fold(f64::NEG_INFINITY, |m, &(i, j)| m.max(self.at(i, j)))
    }

    pub fn boundary_min(&self) -> f64 {
        self.spec.boundary_nodes().iter().fold(f64::INFINITY, |m, &(i, j)| m.min(self.at(i, j)))
    }

    pub fn interior_max(&self) -> f64 {
        interior(&self.spec).fold(f64::NEG_INFINITY, |m, (i, j)| m.max(self.at(i, j)))
    }

    /// Area of the piecewise-linear graph over the grid, each cell split
    /// along its shorter diagonal in 3D.
    pub fn graph_area(&self) -> f64 {
        let s = &self.spec;
        let h = s.h;
        let rows: Vec<f64> = (0..s.ny - 1)
            .into_par_iter()
            .map(|j| {
                let mut sum = 0.0;
                for i in 0..s.nx - 1 {
                    let p = |di: usize, dj: usize| [di as f64 * h, dj as f64 * h, self.at(i + di, j + dj)];
                    let (a, b, c, d) = (p(0, 0), p(1, 0), p(1, 1), p(0, 1));
                    let tri = |p: [f64; 3], q: [f64; 3], r: [f64; 3]| {
                        let u = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
                        let v = [r[0] - p[0], r[1] - p[1], r[2] - p[2]];
                        let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                        0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
                    };
                    let d_ac = (c[2] - a[2]).powi(2);
                    let d_bd = (d[2] - b[2]).powi(2);
                    sum += if d_ac <= d_bd { tri(a, b, c) + tri(a, c, d) } else { tri(a, b, d) + tri(b, c, d) };
                }
                sum
            })
            .collect();
        rows.iter().sum()
    }

    /// Rows `i,j,x,y,u`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,j,x,y,u")?;
        for j in 0..self.spec.ny {
            for i in 0..self.spec.nx {
                writeln!(
                    w,
                    "{i},{j},{:.16e},{:.16e},{:.16e}",
                    self.spec.x(i),
                    self.spec.y(j),
                    self.at(i, j)
                )?;
            }
        }
        Ok(())
    }
}

/// Reads a solution written by [`GridFunction::write_csv`].
pub fn read_grid_csv<R: BufRead>(r: R) -> Result<GridFunction, DirichletError> {
    let mut rows: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if n == 0 {
            if line.trim() != "i,j,x,y,u" {
                return Err(DirichletError::Problem(format!("unexpected grid header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || DirichletError::Problem(format!("line {}: malformed grid row", n + 1));
        if f.len() != 5 {
            return Err(bad());
        }
        rows.push((
            f[0].trim().parse().map_err(|_| bad())?,
            f[1].trim().parse().map_err(|_| bad())?,
            f[2].trim().parse().map_err(|_| bad())?,
            f[3].trim().parse().map_err(|_| bad())?,
            f[4].trim().parse().map_err(|_| bad())?,
        ));
    }
    let nx = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
    let ny = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
    if rows.len() != nx * ny || nx < 3 || ny < 3 {
        return Err(DirichletError::Problem("grid rows do not form a full rectangle".into()));
    }
    let (x0, y0) = (rows[0].2, rows[0].3);
    let h = rows[1].2 - x0;
    let spec = GridSpec::new(x0, y0, h, nx, ny)?;
    let mut values = vec![0.0; nx * ny];
    for &(i, j, _, _, u) in &rows {
        values[spec.index(i, j)] = u;
    }
    GridFunction::new(spec, values)
}

fn interior(spec: &GridSpec) -> impl Iterator<Item = (usize, usize)> + '_ {
    (1..spec.ny - 1).flat_map(move |j| (1..spec.nx - 1).map(move |i| (i, j)))
}

/// Dirichlet data on the boundary of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    /// `cosh(a x + b) / a`, whose cylinder is an exact solution.
    Catenary { a: f64, b: f64 },
    Constant { value: f64 },
    /// `sqrt((x - x0)^2 + (y - y0)^2)`, an exact solution away from its apex.
    Cone {
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        y0: f64,
    },
    /// Explicit values per boundary node.
    Nodes { values: Vec<NodeValue> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeValue {
    pub i: usize,
    pub j: usize,
    pub phi: f64,
}

impl BoundaryData {
    /// Closed-form solution whose trace is this data, when one is known.
    pub fn exact(&self, x: f64, y: f64) -> Option<f64> {
        match *self {
            BoundaryData::Catenary { a, b } => Some(Catenary { a, b }.eval(x).0),
            BoundaryData::Constant { .. } | BoundaryData::Nodes { .. } => None,
            BoundaryData::Cone { x0, y0 } => Some((x - x0).hypot(y - y0)),
        }
    }

    /// Grid whose boundary nodes hold the data; interior nodes hold `fill`.
    pub fn on_grid(&self, spec: GridSpec, fill: f64) -> Result<Vec<f64>, DirichletError> {
        let mut values = vec![fill; spec.len()];
        match self {
            BoundaryData::Nodes { values: nodes } => {
                let mut seen = vec![false; spec.len()];
                for n in nodes {
                    if n.i >= spec.nx || n.j >= spec.ny || !spec.is_boundary(n.i, n.j) {
                        return Err(DirichletError::Problem(format!("node ({}, {}) is not a boundary node", n.i, n.j)));
                    }
                    let k = spec.index(n.i, n.j);
                    values[k] = n.phi;
                    seen[k] = true;
                }
                if let Some(&(i, j)) = spec.boundary_nodes().iter().find(|&&(i, j)| !seen[spec.index(i, j)]) {
                    return Err(DirichletError::Problem(format!("boundary node ({i}, {j}) has no value")));
                }
            }
            BoundaryData::Constant { value } => {
                for (i, j) in spec.boundary_nodes() {
                    values[spec.index(i, j)] = *value;
                }
            }
            _ => {
                for (i, j) in spec.boundary_nodes() {
                    values[spec.index(i, j)] = self.exact(spec.x(i), spec.y(j)).expect("closed form");
                }
            }
        }
        for (i, j) in spec.boundary_nodes() {
            let value = values[spec.index(i, j)];
            if !(value > 0.0) || !value.is_finite() {
                return Err(DirichletError::BadBoundary { i, j, value });
            }
        }
        Ok(values)
    }
}

/// Reads per-node boundary values from CSV rows `i,j,phi`.
pub fn read_boundary_csv<R: BufRead>(r: R) -> Result<Vec<NodeValue>, DirichletError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || (n == 0 && t.starts_with('i')) {
            continue;
        }
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        let bad = || DirichletError::Problem(format!("boundary csv line {}: expected i,j,phi", n + 1));
        if f.len() != 3 {
            return Err(bad());
        }
        out.push(NodeValue {
            i: f[0].parse().map_err(|_| bad())?,
            j: f[1].parse().map_err(|_| bad())?,
            phi: f[2].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    pub max_iters: usize,
    /// Stop once the max-norm of the discrete residual drops below this.
    pub residual_tol: f64,
    pub initial_step: f64,
    pub step_factor: f64,
    pub min_step: f64,
    /// Sufficient decrease constant for the residual 2-norm.
    pub armijo: f64,
    /// Absolute floor; `None` means `1e-6 · min φ`.
    pub u_floor: Option<f64>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            residual_tol: 1e-8,
            initial_step: 1.0,
            step_factor: 0.5,
            min_step: 2f64.powi(-20),
            armijo: 1e-4,
            u_floor: None,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), DirichletError> {
        let bad = |m: &str| Err(DirichletError::InvalidConfig(m.to_string()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.residual_tol > 0.0) {
            return bad("residual_tol must be positive");
        }
        if !(self.initial_step > 0.0 && self.initial_step <= 1.0) {
            return bad("initial_step must lie in (0, 1]");
        }
        if !(self.step_factor > 0.0 && self.step_factor < 1.0) {
            return bad("step_factor must lie in (0, 1)");
        }
        if !(self.min_step > 0.0 && self.min_step <= self.initial_step) {
            return bad("min_step must lie in (0, initial_step]");
        }
        if !(self.armijo >= 0.0 && self.armijo < 1.0) {
            return bad("armijo must lie in [0, 1)");
        }
        if let Some(f) = self.u_floor {
            if !(f > 0.0) {
                return bad("u_floor must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSearchRecord {
    pub iteration: usize,
    /// Accepted step length, or 0 when every trial was rejected.
    pub step: f64,
    pub halvings: usize,
    pub positivity_rejections: usize,
    pub residual_before: f64,
    pub residual_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub grid: GridSpec,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    /// Max-norm of the residual before each Newton step.
    pub residual_history: Vec<f64>,
    pub line_search: Vec<LineSearchRecord>,
    pub u_floor: f64,
    pub residual_tol: f64,
}

/// Central differences at interior node `(i, j)`:
/// `(u, u_x, u_y, u_xx, u_yy, u_xy)`.
#[inline]
fn stencil(u: &[f64], s: &GridSpec, i: usize, j: usize) -> [f64; 6] {
    let nx = s.nx;
    let k = i + nx * j;
    let (c, e, w, n, so) = (u[k], u[k + 1], u[k - 1], u[k + nx], u[k - nx]);
    let (ne, nw, se, sw) = (u[k + nx + 1], u[k + nx - 1], u[k - nx + 1], u[k - nx - 1]);
    let h = s.h;
    let h2 = h * h;
    [
        c,
        (e - w) / (2.0 * h),
        (n - so) / (2.0 * h),
        (e - 2.0 * c + w) / h2,
        (n - 2.0 * c + so) / h2,
        (ne - nw - se + sw) / (4.0 * h2),
    ]
}

#[inline]
fn node_residual(d: [f64; 6]) -> f64 {
    let [u, ux, uy, uxx, uyy, uxy] = d;
    (1.0 + uy * uy) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux * ux) * uyy - (1.0 + ux * ux + uy * uy) / u
}

/// Partial derivatives of the node residual with respect to the stencil
/// values, ordered `C, E, W, N, S, NE, NW, SE, SW`.
#[inline]
fn node_jacobian(d: [f64; 6], h: f64) -> [f64; 9] {
    let [u, ux, uy, uxx, uyy, uxy] = d;
    let g = 1.0 + ux * ux + uy * uy;
    let r_ux = 2.0 * ux * uyy - 2.0 * uy * uxy - 2.0 * ux / u;
    let r_uy = 2.0 * uy * uxx - 2.0 * ux * uxy - 2.0 * uy / u;
    let r_uxx = 1.0 + uy * uy;
    let r_uyy = 1.0 + ux * ux;
    let r_uxy = -2.0 * ux * uy;
    let h2 = h * h;
    let corner = r_uxy / (4.0 * h2);
    [
        -2.0 * (r_uxx + r_uyy) / h2 + g / (u * u),
        r_ux / (2.0 * h) + r_uxx / h2,
        -r_ux / (2.0 * h) + r_uxx / h2,
        r_uy / (2.0 * h) + r_uyy / h2,
        -r_uy / (2.0 * h) + r_uyy / h2,
        corner,
        -corner,
        -corner,
        corner,
    ]
}

/// Discrete residual at interior nodes, row-major over `(1..nx-1) × (1..ny-1)`.
pub fn pde_residual(g: &GridFunction) -> Vec<f64> {
    residual_of(&g.values, &g.spec)
}

fn residual_of(u: &[f64], s: &GridSpec) -> Vec<f64> {
    let m = s.nx - 2;
    let mut out = vec![0.0; m * (s.ny - 2)];
    out.par_chunks_mut(m).enumerate().for_each(|(jj, row)| {
        for (ii, r) in row.iter_mut().enumerate() {
            *r = node_residual(stencil(u, s, ii + 1, jj + 1));
        }
    });
    out
}

/// Residual with the floor check the solver applies.
pub fn pde_residual_checked(g: &GridFunction, floor: f64) -> Result<Vec<f64>, DirichletError> {
    if let Some(k) = g.values.iter().position(|&v| v <= floor) {
        let s = g.spec;
        return Err(DirichletError::BelowFloor { i: k % s.nx, j: k / s.nx, value: g.values[k], floor });
    }
    Ok(pde_residual(g))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, stored by
/// rows with `kl` extra super-diagonals of room for pivoting fill-in.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// LU factorization with partial pivoting, in place.
    pub fn factor(mut self) -> Result<BandedLu, DirichletError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(DirichletError::Singular(k));
            }
            piv[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            let row_k = self.slot(k, k);
            for i in k + 1..=last_row {
                let s = self.slot(i, k);
                let l = self.data[s] / pivot;
                self.data[s] = l;
                if l != 0.0 {
                    let cols = last_col - k;
                    let (head, tail) = self.data.split_at_mut(s);
                    let src = &head[row_k + 1..=row_k + cols];
                    for (d, &a) in tail[1..=cols].iter_mut().zip(src) {
                        *d -= l * a;
                    }
                }
            }
        }
        Ok(BandedLu { m: self, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandedLu {
    m: BandedMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    b[i] -= m.data[m.slot(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + m.kl + m.ku).min(n - 1) {
                s -= m.data[m.slot(k, j)] * b[j];
            }
            b[k] = s / m.data[m.slot(k, k)];
        }
    }
}

/// Maps interior nodes to unknowns, running fastest along the shorter side so
/// the bandwidth is as small as possible.
#[derive(Clone, Copy, Debug)]
struct Ordering {
    mx: usize,
    my: usize,
    x_fast: bool,
}

impl Ordering {
    fn new(s: &GridSpec) -> Self {
        let (mx, my) = (s.nx - 2, s.ny - 2);
        Self { mx, my, x_fast: mx <= my }
    }

    fn len(&self) -> usize {
        self.mx * self.my
    }

    fn bandwidth(&self) -> usize {
        (if self.x_fast { self.mx } else { self.my }) + 1
    }

    /// Unknown for interior node `(i, j)`, both 1-based grid indices.
    #[inline]
    fn unknown(&self, i: usize, j: usize) -> usize {
        if self.x_fast {
            (i - 1) + self.mx * (j - 1)
        } else {
            (j - 1) + self.my * (i - 1)
        }
    }

    /// Position of `(i, j)` in the row-major interior residual vector.
    #[inline]
    fn residual_slot(&self, i: usize, j: usize) -> usize {
        (i - 1) + self.mx * (j - 1)
    }
}

/// Jacobian of [`pde_residual`] with respect to the interior values, in the
/// row-major interior ordering.
pub fn interior_jacobian(g: &GridFunction) -> BandedMatrix {
    let s = g.spec;
    let mx = s.nx - 2;
    let n = mx * (s.ny - 2);
    let mut m = BandedMatrix::zeros(n, mx + 1, mx + 1);
    let order = Ordering { mx, my: s.ny - 2, x_fast: true };
    assemble(&g.values, &s, &order, &mut m);
    m
}

const OFFSETS: [(isize, isize); 9] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)];

fn assemble(u: &[f64], s: &GridSpec, order: &Ordering, m: &mut BandedMatrix) {
    let width = m.width;
    let (kl, ku) = (m.kl, m.ku);
    // rows of the band are disjoint, so each unknown's row fills in parallel
    m.data.par_chunks_mut(width).enumerate().for_each(|(row, out)| {
        out.iter_mut().for_each(|v| *v = 0.0);
        let (i, j) = if order.x_fast {
            (row % order.mx + 1, row / order.mx + 1)
        } else {
            (row / order.my + 1, row % order.my + 1)
        };
        let d = stencil(u, s, i, j);
        let jac = node_jacobian(d, s.h);
        for (&(di, dj), &v) in OFFSETS.iter().zip(&jac) {
            let (ni, nj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
            if s.is_boundary(ni, nj) {
                continue;
            }
            let col = order.unknown(ni, nj);
            debug_assert!(col + kl >= row && col <= row + ku);
            out[col + kl - row] = v;
        }
    });
}

/// Discrete harmonic extension of the boundary values (five-point Laplacian).
pub fn harmonic_extension(spec: GridSpec, boundary: &[f64]) -> Result<GridFunction, DirichletError> {
    let order = Ordering::new(&spec);
    let bw = order.bandwidth() - 1;
    let mut m = BandedMatrix::zeros(order.len(), bw, bw);
    let mut rhs = vec![0.0; order.len()];
    for (i, j) in interior(&spec) {
        let row = order.unknown(i, j);
        m.set(row, row, -4.0);
        for (di, dj) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
            let (ni, nj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
            if spec.is_boundary(ni, nj) {
                rhs[row] -= boundary[spec.index(ni, nj)];
            } else {
                m.set(row, order.unknown(ni, nj), 1.0);
            }
        }
    }
    m.factor()?.solve(&mut rhs);
    let mut values = boundary.to_vec();
    for (i, j) in interior(&spec) {
        values[spec.index(i, j)] = rhs[order.unknown(i, j)];
    }
    GridFunction::new(spec, values)
}

/// Solves the Dirichlet problem with damped Newton from the harmonic
/// extension of the data.
pub fn solve(boundary: &BoundaryData, spec: GridSpec, cfg: &NewtonConfig) -> Result<(GridFunction, SolveReport), DirichletError> {
    cfg.validate()?;
    let phi = boundary.on_grid(spec, 1.0)?;
    let start = harmonic_extension(spec, &phi)?;
    solve_from(start, cfg)
}

/// Newton from an arbitrary positive starting grid; its boundary values are
/// taken as the Dirichlet data.
pub fn solve_from(start: GridFunction, cfg: &NewtonConfig) -> Result<(GridFunction, SolveReport), DirichletError> {
    cfg.validate()?;
    let spec = start.spec;
    let floor = cfg.u_floor.unwrap_or_else(|| 1e-6 * start.boundary_min());
    let order = Ordering::new(&spec);
    let bw = order.bandwidth();
    let mut u = start.values;
    let mut report = SolveReport {
        grid: spec,
        converged: false,
        iterations: 0,
        final_residual: f64::INFINITY,
        residual_history: Vec::new(),
        line_search: Vec::new(),
        u_floor: floor,
        residual_tol: cfg.residual_tol,
    };
    if let Some(k) = u.iter().position(|&v| v <= floor) {
        let (i, j) = (k % spec.nx, k / spec.nx);
        return Err(DirichletError::PositivityLoss { i, j, report: Box::new(report) });
    }
    let mut res = residual_of(&u, &spec);
    let mut best = f64::INFINITY;

    loop {
        let rmax = max_abs(&res);
        best = best.min(rmax);
        report.residual_history.push(rmax);
        report.final_residual = rmax;
        if rmax < cfg.residual_tol {
            report.converged = true;
            break;
        }
        if report.iterations == cfg.max_iters {
            return Err(DirichletError::NonConvergence { best_residual: best, report: Box::new(report) });
        }
        report.iterations += 1;

        let mut jac = BandedMatrix::zeros(order.len(), bw, bw);
        assemble(&u, &spec, &order, &mut jac);
        let mut delta = vec![0.0; order.len()];
        for (i, j) in interior(&spec) {
            delta[order.unknown(i, j)] = -res[order.residual_slot(i, j)];
        }
        match jac.factor() {
            Ok(lu) => lu.solve(&mut delta),
            Err(_) => {
                return Err(DirichletError::NonConvergence { best_residual: best, report: Box::new(report) });
            }
        }
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(DirichletError::NonConvergence { best_residual: best, report: Box::new(report) });
        }

        let merit = norm2(&res);
        let mut step = cfg.initial_step;
        let mut record = LineSearchRecord {
            iteration: report.iterations,
            step: 0.0,
            halvings: 0,
            positivity_rejections: 0,
            residual_before: rmax,
            residual_after: rmax,
        };
        let mut lowest: Option<(usize, usize)> = None;
        let mut last_hit_floor = false;
        let mut accepted = None;
        while step >= cfg.min_step {
            let mut trial = u.clone();
            let mut worst = (f64::INFINITY, 0usize);
            for (i, j) in interior(&spec) {
                let k = spec.index(i, j);
                trial[k] += step * delta[order.unknown(i, j)];
                if trial[k] < worst.0 {
                    worst = (trial[k], k);
                }
            }
            last_hit_floor = worst.0 <= floor;
            if last_hit_floor {
                record.positivity_rejections += 1;
                lowest = Some((worst.1 % spec.nx, worst.1 / spec.nx));
            } else {
                let r = residual_of(&trial, &spec);
                let ok = r.iter().all(|v| v.is_finite()) && norm2(&r) <= (1.0 - cfg.armijo * step) * merit;
                if ok {
                    record.step = step;
                    record.residual_after = max_abs(&r);
                    accepted = Some((trial, r));
                    break;
                }
            }
            step *= cfg.step_factor;
            record.halvings += 1;
        }
        report.line_search.push(record);
        match accepted {
            Some((trial, r)) => {
                u = trial;
                res = r;
            }
            None => {
                // a floor hit even at the shortest step means the iterates are
                // being driven into the degenerate regime u -> 0
                return Err(match lowest {
                    Some((i, j)) if last_hit_floor => {
                        DirichletError::PositivityLoss { i, j, report: Box::new(report) }
                    }
                    _ => DirichletError::NonConvergence { best_residual: best, report: Box::new(report) },
                });
            }
        }
    }
    Ok((GridFunction { spec, values: u }, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    NotApplicable,
}

impl CheckStatus {
    fn from(ok: bool) -> Self {
        if ok {
            CheckStatus::Passed
        } else {
            CheckStatus::Failed
        }
    }

    pub fn ok(self) -> bool {
        self != CheckStatus::Failed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    /// Interior maximum strictly below the boundary maximum.
    pub no_interior_max: CheckStatus,
    pub interior_max: f64,
    pub boundary_max: f64,
    /// With constant data, every interior value lies below that plane.
    pub below_boundary_plane: CheckStatus,
    /// `area(Ω) / length(∂Ω) < max φ`, necessary for a solution to exist.
    pub area_length: CheckStatus,
    pub area_over_length: f64,
    /// `area(S) > area(Ω)`.
    pub area_exceeds_domain: CheckStatus,
    pub surface_area: f64,
    pub domain_area: f64,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        [self.no_interior_max, self.below_boundary_plane, self.area_length, self.area_exceeds_domain]
            .iter()
            .all(|c| c.ok())
    }
}

/// `(area/length, passed)` for the necessary condition on the data alone.
pub fn area_length_condition(domain: Rectangle, max_phi: f64) -> (f64, bool) {
    let ratio = domain.area() / domain.perimeter();
    (ratio, ratio < max_phi)
}

pub fn check_properties(g: &GridFunction) -> PropertyReport {
    let interior_max = g.interior_max();
    let boundary_max = g.boundary_max();
    let boundary_min = g.boundary_min();
    let below_boundary_plane = if boundary_max - boundary_min <= 1e-14 * boundary_max {
        CheckStatus::from(interior(&g.spec).all(|(i, j)| g.at(i, j) < boundary_min))
    } else {
        CheckStatus::NotApplicable
    };
    let domain = g.spec.rectangle();
    let (area_over_length, ok) = area_length_condition(domain, boundary_max);
    let surface_area = g.graph_area();
    PropertyReport {
        no_interior_max: CheckStatus::from(interior_max < boundary_max),
        interior_max,
        boundary_max,
        below_boundary_plane,
        area_length: CheckStatus::from(ok),
        area_over_length,
        area_exceeds_domain: CheckStatus::from(surface_area > domain.area()),
        surface_area,
        domain_area: domain.area(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub max_error: f64,
    pub iterations: usize,
    pub final_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub levels: Vec<ConvergenceLevel>,
    /// `log2(e_k / e_{k+1}) / log2(h_k / h_{k+1})` between successive levels.
    pub orders: Vec<f64>,
}

/// Solves on each grid and measures the max-norm error against the data's
/// closed-form solution.
pub fn convergence_study(boundary: &BoundaryData, domain: Rectangle, grids: &[usize], cfg: &NewtonConfig) -> Result<ConvergenceStudy, DirichletError> {
    if grids.len() < 2 {
        return Err(DirichletError::Problem("a convergence study needs at least two grids".into()));
    }
    if boundary.exact(domain.x_min, domain.y_min).is_none() {
        return Err(DirichletError::Problem("boundary data has no closed-form solution to compare with".into()));
    }
    let mut levels = Vec::with_capacity(grids.len());
    for &n in grids {
        let spec = GridSpec::over_rectangle(domain, n)?;
        let (g, report) = solve(boundary, spec, cfg)?;
        let mut max_error = 0.0f64;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let exact = boundary.exact(spec.x(i), spec.y(j)).expect("checked above");
                max_error = max_error.max((g.at(i, j) - exact).abs());
            }
        }
        levels.push(ConvergenceLevel {
            nx: spec.nx,
            ny: spec.ny,
            h: spec.h,
            max_error,
            iterations: report.iterations,
            final_residual: report.final_residual,
        });
    }
    let orders = levels
        .windows(2)
        .map(|w| (w[0].max_error / w[1].max_error).ln() / (w[0].h / w[1].h).ln())
        .collect();
    Ok(ConvergenceStudy { levels, orders })
}

/// Boundary data as written in a problem file; `csv` points at `i,j,phi` rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySpec {
    Catenary {
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        b: f64,
    },
    Constant { value: f64 },
    Cone {
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        y0: f64,
    },
    Nodes { values: Vec<NodeValue> },
    Csv { path: String },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSize {
    pub nx: usize,
    #[serde(default)]
    pub ny: Option<usize>,
}

/// JSON problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub domain: Rectangle,
    pub grid: GridSize,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub newton: NewtonConfig,
    /// Extra node counts across for a convergence study.
    #[serde(default)]
    pub refinements: Vec<usize>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self, DirichletError> {
        serde_json::from_str(text).map_err(|e| DirichletError::Problem(e.to_string()))
    }

    pub fn grid_spec(&self) -> Result<GridSpec, DirichletError> {
        let spec = GridSpec::over_rectangle(self.domain, self.grid.nx)?;
        if let Some(ny) = self.grid.ny {
            if ny != spec.ny {
                return Err(DirichletError::InvalidGrid(format!(
                    "ny = {ny} does not give square cells; expected {}",
                    spec.ny
                )));
            }
        }
        Ok(spec)
    }

    /// Boundary data, reading CSV files relative to `base`.
    pub fn boundary_data(&self, base: &Path) -> Result<BoundaryData, DirichletError> {
        Ok(match &self.boundary {
            BoundarySpec::Catenary { a, b } => {
                Catenary::new(*a, *b).map_err(|e| DirichletError::Problem(e.to_string()))?;
                BoundaryData::Catenary { a: *a, b: *b }
            }
            BoundarySpec::Constant { value } => BoundaryData::Constant { value: *value },
            BoundarySpec::Cone { x0, y0 } => BoundaryData::Cone { x0: *x0, y0: *y0 },
            BoundarySpec::Nodes { values } => BoundaryData::Nodes { values: values.clone() },
            BoundarySpec::Csv { path } => {
                let file = std::fs::File::open(base.join(path))?;
                BoundaryData::Nodes { values: read_boundary_csv(io::BufReader::new(file))? }
            }
        })
    }
}
