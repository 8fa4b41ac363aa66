//! Triangle meshes of the hanging surfaces.
//!
//! Every constructor triangulates a parametrized patch: domes revolved about
//! the vertical axis, roofs revolved about a horizontal axis, catenary
//! cylinders, and the cone-plus-annulus family. Triangles are wound so the
//! normal from the winding points upward (positive z) before any inversion.

use crate::catenary::{Catenary, TwoCatenary};
use crate::profile::Profile;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::{self, BufRead, Read, Write};
use thiserror::Error;

pub type Point = [f64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("{what} must be at least {min}, got {got}")]
    InvalidCount { what: &'static str, min: usize, got: usize },
    #[error("profile has no usable samples")]
    EmptyProfile,
    #[error("profile height {0} is not positive")]
    NonPositiveHeight(f64),
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("triangle {triangle} references vertex {index} of {len}")]
    IndexOutOfBounds { triangle: usize, index: usize, len: usize },
    #[error("triangle {0} has zero area")]
    DegenerateTriangle(usize),
    #[error("vertex {0} is not finite")]
    NonFiniteVertex(usize),
    #[error("clipping left no triangles")]
    EmptyMesh,
    #[error("sample point at height {0} makes the residual denominator vanish")]
    VanishingHeight(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<io::Error> for MeshError {
    fn from(e: io::Error) -> Self {
        MeshError::Io(e.to_string())
    }
}

/// How a mesh was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    RevolveVertical { rings: usize, n_theta: usize, on_axis: bool },
    RevolveHorizontal { u_min: f64, margin: f64, theta_min: f64, theta_max: f64, n_theta: usize },
    CatenaryCylinder { a: f64, b: f64, x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize },
    ConeAnnulus { radius: f64, depth: f64, n_theta: usize },
    Inverted { z0: f64, source: Box<Provenance> },
    Clipped { y_min: f64, y_max: f64, source: Box<Provenance> },
    Translated { offset: Point, source: Box<Provenance> },
    Imported,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    provenance: Provenance,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshMetrics {
    pub area: f64,
    /// Area-weighted mean of the triangle centroid heights.
    pub centroid_height: f64,
    pub residual_stats: Option<ResidualStats>,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Point, b: Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

// Fixed chunking keeps parallel sums independent of the thread count.
const CHUNK: usize = 4096;

impl SurfaceMesh {
    /// Checks that every index is valid and no triangle is degenerate.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, provenance: Provenance) -> Result<Self, MeshError> {
        if let Some(i) = vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(MeshError::NonFiniteVertex(i));
        }
        let len = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= len) {
                return Err(MeshError::IndexOutOfBounds { triangle: t, index, len });
            }
        }
        let mesh = Self { vertices, triangles, provenance };
        if let Some(t) = (0..mesh.triangles.len()).find(|&t| !(mesh.triangle_area(t) > 0.0)) {
            return Err(MeshError::DegenerateTriangle(t));
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized normal from the winding, twice the triangle area long.
    pub fn triangle_normal(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        cross(sub(b, a), sub(c, a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * norm(self.triangle_normal(t))
    }

    pub fn area(&self) -> f64 {
        self.chunked_sum(|t| self.triangle_area(t))
    }

    fn chunked_sum<F: Fn(usize) -> f64 + Sync>(&self, f: F) -> f64 {
        let n = self.triangles.len();
        let partial: Vec<f64> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
            .collect();
        partial.iter().sum()
    }

    pub fn metrics(&self) -> MeshMetrics {
        let area = self.area();
        let moment = self.chunked_sum(|t| {
            let [a, b, c] = self.corners(t);
            self.triangle_area(t) * (a[2] + b[2] + c[2]) / 3.0
        });
        MeshMetrics { area, centroid_height: moment / area, residual_stats: None }
    }

    /// Axis-aligned bounding box as `(min, max)` corners.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Reflection across the plane `z = z0`; winding is reversed so the
    /// winding normal is the reflected normal.
    pub fn invert_about_plane(&self, z0: f64) -> SurfaceMesh {
        SurfaceMesh {
            vertices: self.vertices.iter().map(|&[x, y, z]| [x, y, 2.0 * z0 - z]).collect(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            provenance: Provenance::Inverted { z0, source: Box::new(self.provenance.clone()) },
        }
    }

    pub fn translated(&self, offset: Point) -> SurfaceMesh {
        SurfaceMesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| [v[0] + offset[0], v[1] + offset[1], v[2] + offset[2]])
                .collect(),
            triangles: self.triangles.clone(),
            provenance: Provenance::Translated { offset, source: Box::new(self.provenance.clone()) },
        }
    }

    /// Keeps the part of the mesh in the slab `y_min ≤ y ≤ y_max`.
    ///
    /// Straddling triangles are cut to the slab and fan-triangulated. A cut
    /// point is computed once per (edge, plane) so neighbouring triangles
    /// share it and the result stays watertight along the cut.
    pub fn clip_y(&self, y_min: f64, y_max: f64) -> Result<SurfaceMesh, MeshError> {
        if !(y_min < y_max) {
            return Err(MeshError::InvalidRange(format!("clip needs y_min < y_max, got [{y_min}, {y_max}]")));
        }
        let inside = |p: Point| p[1] >= y_min && p[1] <= y_max;

        // keys: original vertex, or a cut of edge (lo, hi) by plane 0/1
        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        enum Key {
            Vertex(usize),
            Cut(usize, usize, u8),
        }
        let mut index: HashMap<Key, usize> = HashMap::new();
        let mut vertices: Vec<Point> = Vec::new();
        let mut triangles = Vec::new();
        let mut intern = |key: Key, p: Point, vertices: &mut Vec<Point>| -> usize {
            *index.entry(key).or_insert_with(|| {
                vertices.push(p);
                vertices.len() - 1
            })
        };

        for (t, tri) in self.triangles.iter().enumerate() {
            let pts = tri.map(|i| self.vertices[i]);
            if pts.iter().all(|&p| inside(p)) {
                let ids = tri.map(|i| intern(Key::Vertex(i), self.vertices[i], &mut vertices));
                triangles.push(ids);
                continue;
            }
            if pts.iter().all(|p| p[1] < y_min) || pts.iter().all(|p| p[1] > y_max) {
                continue;
            }
            // walk the boundary of triangle ∩ slab
            let mut poly: Vec<(Key, Point)> = Vec::with_capacity(5);
            for e in 0..3 {
                let (ia, ib) = (tri[e], tri[(e + 1) % 3]);
                let a = self.vertices[ia];
                if inside(a) {
                    poly.push((Key::Vertex(ia), a));
                }
                let (lo, hi) = if ia < ib { (ia, ib) } else { (ib, ia) };
                let (pl, ph) = (self.vertices[lo], self.vertices[hi]);
                let mut cuts: Vec<(f64, Key, Point)> = Vec::with_capacity(2);
                for (plane, y) in [(0u8, y_min), (1u8, y_max)] {
                    if (pl[1] - y) * (ph[1] - y) < 0.0 {
                        let s = (y - pl[1]) / (ph[1] - pl[1]);
                        let mut p = [pl[0] + s * (ph[0] - pl[0]), y, pl[2] + s * (ph[2] - pl[2])];
                        p[1] = y;
                        // parameter along a -> b orders the two possible cuts
                        let along = if lo == ia { s } else { 1.0 - s };
                        cuts.push((along, Key::Cut(lo, hi, plane), p));
                    }
                }
                cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
                poly.extend(cuts.into_iter().map(|(_, k, p)| (k, p)));
            }
            poly.dedup_by(|x, y| x.0 == y.0);
            if poly.len() > 1 && poly[0].0 == poly[poly.len() - 1].0 {
                poly.pop();
            }
            if poly.len() < 3 {
                continue;
            }
            let scale = self.triangle_area(t);
            let ids: Vec<usize> = poly.iter().map(|&(k, p)| intern(k, p, &mut vertices)).collect();
            for k in 1..ids.len() - 1 {
                let (a, b, c) = (ids[0], ids[k], ids[k + 1]);
                let area = 0.5 * norm(cross(sub(vertices[b], vertices[a]), sub(vertices[c], vertices[a])));
                if area > 1e-14 * scale {
                    triangles.push([a, b, c]);
                }
            }
        }
        if triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        compact(
            vertices,
            triangles,
            Provenance::Clipped { y_min, y_max, source: Box::new(self.provenance.clone()) },
        )
    }

    /// Wavefront OBJ: `v` lines then 1-based `f` lines.
    pub fn write_obj<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {:.12e} {:.12e} {:.12e}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// Binary little-endian STL with facet normals recomputed from the winding.
    pub fn write_stl<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = [b' '; 80];
        let tag = b"hanging-surfaces binary stl";
        header[..tag.len()].copy_from_slice(tag);
        w.write_all(&header)?;
        let count = u32::try_from(self.triangles.len())
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "too many triangles for STL"))?;
        w.write_all(&count.to_le_bytes())?;
        for t in 0..self.triangles.len() {
            let n = self.triangle_normal(t);
            let len = norm(n);
            let unit = [n[0] / len, n[1] / len, n[2] / len];
            for c in unit {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
            for p in self.corners(t) {
                for c in p {
                    w.write_all(&(c as f32).to_le_bytes())?;
                }
            }
            w.write_all(&0u16.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Drops unreferenced vertices and renumbers the rest in first-use order.
fn compact(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, provenance: Provenance) -> Result<SurfaceMesh, MeshError> {
    let mut map = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::new();
    let triangles = triangles
        .into_iter()
        .map(|t| {
            t.map(|i| {
                if map[i] == usize::MAX {
                    map[i] = kept.len();
                    kept.push(vertices[i]);
                }
                map[i]
            })
        })
        .collect();
    SurfaceMesh::new(kept, triangles, provenance)
}

/// Reads the subset of OBJ written by [`SurfaceMesh::write_obj`]; `f`
/// entries may carry `/`-separated texture or normal indices.
pub fn read_obj<R: BufRead>(r: R) -> Result<SurfaceMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let err = |msg: &str| MeshError::Parse { line: n + 1, msg: msg.to_string() };
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts
                    .map(|p| p.parse::<f64>().map_err(|_| err("bad coordinate")))
                    .collect::<Result<_, _>>()?;
                if c.len() < 3 {
                    return Err(err("vertex needs three coordinates"));
                }
                vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let ids: Vec<usize> = parts
                    .map(|p| {
                        p.split('/')
                            .next()
                            .and_then(|i| i.parse::<usize>().ok())
                            .filter(|&i| i > 0)
                            .map(|i| i - 1)
                            .ok_or_else(|| err("bad face index"))
                    })
                    .collect::<Result<_, _>>()?;
                if ids.len() < 3 {
                    return Err(err("face needs three vertices"));
                }
                for k in 1..ids.len() - 1 {
                    triangles.push([ids[0], ids[k], ids[k + 1]]);
                }
            }
            _ => {}
        }
    }
    SurfaceMesh::new(vertices, triangles, Provenance::Imported)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StlFacet {
    pub normal: [f32; 3],
    pub vertices: [[f32; 3]; 3],
}

/// Reads a binary STL file.
pub fn read_stl<R: Read>(mut r: R) -> Result<Vec<StlFacet>, MeshError> {
    let mut header = [0u8; 84];
    r.read_exact(&mut header)?;
    let count = u32::from_le_bytes([header[80], header[81], header[82], header[83]]) as usize;
    let mut facets = Vec::with_capacity(count);
    let mut rec = [0u8; 50];
    let f = |b: &[u8], k: usize| f32::from_le_bytes([b[4 * k], b[4 * k + 1], b[4 * k + 2], b[4 * k + 3]]);
    for _ in 0..count {
        r.read_exact(&mut rec)?;
        let v = |j: usize| [f(&rec, 3 * j), f(&rec, 3 * j + 1), f(&rec, 3 * j + 2)];
        facets.push(StlFacet { normal: v(0), vertices: [v(1), v(2), v(3)] });
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(MeshError::Parse { line: 0, msg: format!("{} trailing bytes after {count} facets", rest.len()) });
    }
    Ok(facets)
}

/// Metrics as a two-line CSV.
pub fn write_metrics_csv<W: Write>(m: &MeshMetrics, mut w: W) -> io::Result<()> {
    writeln!(w, "area,centroid_height,residual_max,residual_mean")?;
    let (max, mean) = m.residual_stats.map_or((f64::NAN, f64::NAN), |r| (r.max, r.mean));
    writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", m.area, m.centroid_height, max, mean)
}

/// Triangulates a structured grid of `rows × cols` vertices stored row-major
/// starting at `base`. Quad `(i, j)` spans rows `i, i + 1` and columns
/// `j, j + 1` (wrapping when `wrap`); it is split along its shorter diagonal.
/// With `flip` the winding is reversed.
fn grid_triangles(vertices: &[Point], base: usize, rows: usize, cols: usize, wrap: bool, flip: bool) -> Vec<[usize; 3]> {
    let quads = if wrap { cols } else { cols - 1 };
    (0..rows - 1)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..quads).flat_map(move |j| {
                let j1 = (j + 1) % cols;
                let a = base + i * cols + j;
                let b = base + (i + 1) * cols + j;
                let c = base + (i + 1) * cols + j1;
                let d = base + i * cols + j1;
                let pair = if dist(vertices[a], vertices[c]) <= dist(vertices[b], vertices[d]) {
                    [[a, b, c], [a, c, d]]
                } else {
                    [[a, b, d], [b, c, d]]
                };
                pair.map(|[p, q, r]| if flip { [p, r, q] } else { [p, q, r] })
            })
        })
        .collect()
}

/// Fan from `apex` to the first ring of a wrapped grid.
fn fan_triangles(apex: usize, ring: usize, cols: usize) -> Vec<[usize; 3]> {
    (0..cols).map(|j| [apex, ring + j, ring + (j + 1) % cols]).collect()
}

/// Rings `(r, z)` revolved about the vertical axis. A leading ring with
/// `r = 0` collapses to one axis vertex.
fn revolve_rings(rings: &[(f64, f64)], n_theta: usize) -> (Vec<Point>, Vec<[usize; 3]>) {
    let on_axis = rings[0].0 == 0.0;
    let ring_rows = if on_axis { &rings[1..] } else { rings };
    let mut vertices: Vec<Point> = Vec::with_capacity(ring_rows.len() * n_theta + 1);
    if on_axis {
        vertices.push([0.0, 0.0, rings[0].1]);
    }
    let base = vertices.len();
    let angles: Vec<(f64, f64)> = (0..n_theta)
        .map(|k| {
            let t = TAU * k as f64 / n_theta as f64;
            (t.cos(), t.sin())
        })
        .collect();
    vertices.par_extend(
        ring_rows
            .par_iter()
            .flat_map_iter(|&(r, z)| angles.iter().map(move |&(c, s)| [r * c, r * s, z])),
    );
    let mut triangles = if on_axis { fan_triangles(0, base, n_theta) } else { Vec::new() };
    triangles.extend(grid_triangles(&vertices, base, ring_rows.len(), n_theta, true, false));
    (vertices, triangles)
}

/// Surface of revolution `X(r, θ) = (r cos θ, r sin θ, u(r))` of a rotational
/// profile over the full turn.
pub fn revolve_vertical(profile: &Profile, n_theta: usize) -> Result<SurfaceMesh, MeshError> {
    if n_theta < 8 {
        return Err(MeshError::InvalidCount { what: "n_theta", min: 8, got: n_theta });
    }
    let mut rings: Vec<(f64, f64)> = profile.samples().iter().map(|s| (s.abscissa, s.height)).collect();
    if rings.len() < 2 {
        return Err(MeshError::EmptyProfile);
    }
    if let Some(&(_, z)) = rings.iter().find(|(_, z)| !(*z > 0.0)) {
        return Err(MeshError::NonPositiveHeight(z));
    }
    if rings[0].0 > rings[rings.len() - 1].0 {
        rings.reverse();
    }
    if rings[0].0 < 0.0 {
        return Err(MeshError::InvalidRange("rotational profiles need r ≥ 0".into()));
    }
    let (vertices, triangles) = revolve_rings(&rings, n_theta);
    SurfaceMesh::new(
        vertices,
        triangles,
        Provenance::RevolveVertical { rings: rings.len(), n_theta, on_axis: rings[0].0 == 0.0 },
    )
}

/// Default angular range for roofs: the open interval `(-π/2, π/2)` shrunk
/// by `1e-3` so the rulings stay strictly above the ground.
pub const DEFAULT_THETA_RANGE: (f64, f64) = (-FRAC_PI_2 + 1e-3, FRAC_PI_2 - 1e-3);

/// Roof `X(x, θ) = (x, -u sin θ, u cos θ)` of a 2-catenary.
pub fn revolve_horizontal(two_cat: &TwoCatenary, theta_range: (f64, f64), n_theta: usize) -> Result<SurfaceMesh, MeshError> {
    let (t0, t1) = theta_range;
    if !(t0 >= -FRAC_PI_2 && t0 < t1 && t1 <= FRAC_PI_2) {
        return Err(MeshError::InvalidRange(format!(
            "theta range [{t0}, {t1}] must satisfy -pi/2 <= min < max <= pi/2"
        )));
    }
    if n_theta < 2 {
        return Err(MeshError::InvalidCount { what: "n_theta", min: 2, got: n_theta });
    }
    let samples = two_cat.profile().samples();
    let cols = n_theta;
    let angles: Vec<(f64, f64)> = (0..cols)
        .map(|k| {
            let t = if k == cols - 1 { t1 } else { t0 + (t1 - t0) * k as f64 / (cols - 1) as f64 };
            (t.cos(), t.sin())
        })
        .collect();
    let vertices: Vec<Point> = samples
        .par_iter()
        .flat_map_iter(|s| angles.iter().map(move |&(c, sn)| [s.abscissa, -s.height * sn, s.height * c]))
        .collect();
    // increasing x and θ gives a downward winding normal
    let triangles = grid_triangles(&vertices, 0, samples.len(), cols, false, true);
    SurfaceMesh::new(
        vertices,
        triangles,
        Provenance::RevolveHorizontal {
            u_min: two_cat.u_min,
            margin: two_cat.margin,
            theta_min: t0,
            theta_max: t1,
            n_theta,
        },
    )
}

/// Ruled surface `X(x, y) = (x, y, u(x))` over a rectangle, `nx × ny` cells.
pub fn catenary_cylinder(cat: &Catenary, x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<SurfaceMesh, MeshError> {
    for (name, (lo, hi)) in [("x", x_range), ("y", y_range)] {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(MeshError::InvalidRange(format!("{name} range [{lo}, {hi}] is empty")));
        }
    }
    for (what, n) in [("nx", nx), ("ny", ny)] {
        if n < 1 {
            return Err(MeshError::InvalidCount { what, min: 1, got: n });
        }
    }
    let node = |lo: f64, hi: f64, k: usize, n: usize| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 };
    let ys: Vec<f64> = (0..=ny).map(|j| node(y_range.0, y_range.1, j, ny)).collect();
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for i in 0..=nx {
        let x = node(x_range.0, x_range.1, i, nx);
        let (u, _, _) = cat.eval(x);
        if !(u > 0.0) {
            return Err(MeshError::NonPositiveHeight(u));
        }
        vertices.extend(ys.iter().map(|&y| [x, y, u]));
    }
    let triangles = grid_triangles(&vertices, 0, nx + 1, ny + 1, false, false);
    SurfaceMesh::new(
        vertices,
        triangles,
        Provenance::CatenaryCylinder { a: cat.a, b: cat.b, x_range, y_range, nx, ny },
    )
}

/// The cone of depth `depth` over the disc `r ≤ radius` joined to the flat
/// annulus `radius ≤ r ≤ 1` in the plane `z = 0`.
pub fn cone_annulus_mesh(radius: f64, depth: f64, n_theta: usize, n_cone: usize, n_annulus: usize) -> Result<SurfaceMesh, MeshError> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(MeshError::InvalidRange(format!("cone radius {radius} must lie in (0, 1)")));
    }
    if !(depth > 0.0) {
        return Err(MeshError::InvalidRange(format!("cone depth {depth} must be positive")));
    }
    if n_theta < 8 {
        return Err(MeshError::InvalidCount { what: "n_theta", min: 8, got: n_theta });
    }
    for (what, n) in [("n_cone", n_cone), ("n_annulus", n_annulus)] {
        if n < 1 {
            return Err(MeshError::InvalidCount { what, min: 1, got: n });
        }
    }
    let mut rings = Vec::with_capacity(n_cone + n_annulus + 1);
    for k in 0..=n_cone {
        let r = radius * k as f64 / n_cone as f64;
        let z = if k == n_cone { 0.0 } else { -depth * (1.0 - r / radius) };
        rings.push((r, z));
    }
    for k in 1..=n_annulus {
        let r = if k == n_annulus { 1.0 } else { radius + (1.0 - radius) * k as f64 / n_annulus as f64 };
        rings.push((r, 0.0));
    }
    let (vertices, triangles) = revolve_rings(&rings, n_theta);
    SurfaceMesh::new(vertices, triangles, Provenance::ConeAnnulus { radius, depth, n_theta })
}

/// A surface together with its analytic description, for curvature checks.
#[derive(Clone, Debug)]
pub enum AnalyticSurface<'a> {
    /// Surface of revolution about the z-axis, sampled for `r ≥ r_min`.
    Vertical { profile: &'a Profile, r_min: f64 },
    /// Roof of a 2-catenary over `theta_range`.
    Horizontal { two_cat: &'a TwoCatenary, theta_range: (f64, f64) },
    /// Catenary cylinder sampled at `n` abscissae over `x_range`.
    Cylinder { cat: Catenary, x_range: (f64, f64) },
}

/// Mean curvature (sum of principal curvatures) and upward unit normal from
/// the first and second derivatives of a parametrization.
pub fn mean_curvature_from_frame(xu: Point, xv: Point, xuu: Point, xuv: Point, xvv: Point) -> (f64, Point) {
    let n = cross(xu, xv);
    let len = norm(n);
    let sign = if n[2] < 0.0 { -1.0 } else { 1.0 };
    let n = [sign * n[0] / len, sign * n[1] / len, sign * n[2] / len];
    let (e_, f_, g_) = (dot(xu, xu), dot(xu, xv), dot(xv, xv));
    let (l, m, nn) = (dot(xuu, n), dot(xuv, n), dot(xvv, n));
    ((l * g_ - 2.0 * m * f_ + nn * e_) / (e_ * g_ - f_ * f_), n)
}

/// Mean curvature of the rotational graph `z = u(r)` in closed form,
/// `u''/(1+u'^2)^{3/2} + u'/(r sqrt(1+u'^2))`.
pub fn mean_curvature_uu(r: f64, du: f64, d2u: f64) -> f64 {
    let w = (1.0 + du * du).sqrt();
    d2u / (w * w * w) + du / (r * w)
}

/// Angles at which residuals are sampled around each profile point.
const RESIDUAL_ANGLES: usize = 6;

/// Samples `H - <N, e_z>/<p, e_z>` over the surface and returns the absolute
/// residual statistics. `H` comes from the analytic profile; the normal and
/// position come from the parametrization.
pub fn singular_residual_sample(surface: &AnalyticSurface) -> Result<ResidualStats, MeshError> {
    let mut residuals = Vec::new();
    match *surface {
        AnalyticSurface::Vertical { profile, r_min } => {
            let samples = profile.samples();
            for (i, s) in samples.iter().enumerate() {
                let r = s.abscissa;
                if r < r_min || r <= 0.0 {
                    continue;
                }
                let Some(d2u) = profile.curvature_at(i) else { continue };
                let (u, du) = (s.height, s.slope);
                let h = mean_curvature_uu(r, du, d2u);
                for k in 0..RESIDUAL_ANGLES {
                    let t = TAU * k as f64 / RESIDUAL_ANGLES as f64;
                    let (c, sn) = (t.cos(), t.sin());
                    let p = [r * c, r * sn, u];
                    let xr = [c, sn, du];
                    let xt = [-r * sn, r * c, 0.0];
                    let (_, n) = mean_curvature_from_frame(xr, xt, [0.0, 0.0, d2u], [-sn, c, 0.0], [-r * c, -r * sn, 0.0]);
                    residuals.push(height_residual(h, n, p)?);
                }
            }
        }
        AnalyticSurface::Horizontal { two_cat, theta_range: (t0, t1) } => {
            for s in two_cat.profile().samples() {
                let (u, du) = (s.height, s.slope);
                let d2u = two_cat.second_derivative(u);
                for k in 0..RESIDUAL_ANGLES {
                    let t = t0 + (t1 - t0) * (k as f64 + 0.5) / RESIDUAL_ANGLES as f64;
                    let (c, sn) = (t.cos(), t.sin());
                    let p = [s.abscissa, -u * sn, u * c];
                    let (h, n) = mean_curvature_from_frame(
                        [1.0, -du * sn, du * c],
                        [0.0, -u * c, -u * sn],
                        [0.0, -d2u * sn, d2u * c],
                        [0.0, -du * c, -du * sn],
                        [0.0, u * sn, -u * c],
                    );
                    residuals.push(height_residual(h, n, p)?);
                }
            }
        }
        AnalyticSurface::Cylinder { cat, x_range: (x0, x1) } => {
            let n = 64;
            for k in 0..=n {
                let x = x0 + (x1 - x0) * k as f64 / n as f64;
                let (u, du, d2u) = cat.eval(x);
                let (h, nrm) = mean_curvature_from_frame([1.0, 0.0, du], [0.0, 1.0, 0.0], [0.0, 0.0, d2u], [0.0; 3], [0.0; 3]);
                residuals.push(height_residual(h, nrm, [x, 0.0, u])?);
            }
        }
    }
    if residuals.is_empty() {
        return Err(MeshError::EmptyProfile);
    }
    let max = residuals.iter().fold(0.0f64, |m, r| m.max(*r));
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    Ok(ResidualStats { max, mean, count: residuals.len() })
}

fn height_residual(h: f64, n: Point, p: Point) -> Result<f64, MeshError> {
    if !(p[2] > 0.0) {
        return Err(MeshError::VanishingHeight(p[2]));
    }
    Ok((h - n[2] / p[2]).abs())
}
