//! Surfaces that bound a region `N`: analytic shapes, triangle meshes,
//! closed polygons, node masks and implicit functions.
//!
//! Sign convention everywhere: `u < 0` inside `N`, `∇u` points out of `N`,
//! the inward normal is `ν = −∇u`.

use super::grid::Grid;
use super::LevelSet;
use crate::error::{invalid, Result};
use crate::linalg::{vec as v, SymForm};
use crate::mesh::OffMesh;
use serde::{Deserialize, Serialize};

/// A region boundary that signed distance can be built from.
pub trait Surface: Sync {
    fn dim(&self) -> usize;
    fn inside(&self, p: &[f64]) -> bool;
    /// Euclidean distance from `p` to the boundary.
    fn boundary_distance(&self, p: &[f64]) -> f64;
}

/// Analytic shapes with closed-form signed distance and derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    Sphere { center: Vec<f64>, radius: f64 },
    /// Points within `radius` of the line through `point` along `axis`.
    Cylinder { point: Vec<f64>, axis: Vec<f64>, radius: f64 },
    /// `{x : normal·x ≤ offset}` (normal need not be unit).
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// `{x : |n̂·x − offset| ≤ half_width}`.
    Slab { normal: Vec<f64>, offset: f64, half_width: f64 },
    Union { parts: Vec<Shape> },
    /// Closure of the outside of `inner`; flips every sign.
    Complement { inner: Box<Shape> },
}

impl Shape {
    pub fn sphere(center: Vec<f64>, radius: f64) -> Shape {
        Shape::Sphere { center, radius }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Sphere { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return Err(invalid("sphere needs a centre and a positive radius"));
                }
            }
            Shape::Cylinder { point, axis, radius } => {
                if point.len() != axis.len() || v::norm(axis) == 0.0 || !(*radius > 0.0) {
                    return Err(invalid("cylinder needs point/axis of equal dimension, nonzero axis, positive radius"));
                }
            }
            Shape::HalfSpace { normal, .. } => {
                if v::norm(normal) == 0.0 {
                    return Err(invalid("half-space normal must be nonzero"));
                }
            }
            Shape::Slab { normal, half_width, .. } => {
                if v::norm(normal) == 0.0 || !(*half_width > 0.0) {
                    return Err(invalid("slab needs a nonzero normal and positive half width"));
                }
            }
            Shape::Union { parts } => {
                if parts.is_empty() {
                    return Err(invalid("union of no shapes is empty"));
                }
                let d = parts[0].dim();
                for p in parts {
                    p.validate()?;
                    if p.dim() != d {
                        return Err(invalid("union parts differ in dimension"));
                    }
                }
            }
            Shape::Complement { inner } => inner.validate()?,
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Sphere { center, .. } => center.len(),
            Shape::Cylinder { point, .. } => point.len(),
            Shape::HalfSpace { normal, .. } | Shape::Slab { normal, .. } => normal.len(),
            Shape::Union { parts } => parts.first().map_or(0, |p| p.dim()),
            Shape::Complement { inner } => inner.dim(),
        }
    }

    /// Exact signed distance.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Sphere { center, radius } => v::dist(x, center) - radius,
            Shape::Cylinder { point, axis, radius } => {
                let (w, _) = cylinder_offset(x, point, axis);
                v::norm(&w) - radius
            }
            Shape::HalfSpace { normal, offset } => {
                let len = v::norm(normal);
                (v::dot(normal, x) - offset) / len
            }
            Shape::Slab {
                normal,
                offset,
                half_width,
            } => {
                let len = v::norm(normal);
                (v::dot(normal, x) / len - offset).abs() - half_width
            }
            Shape::Union { parts } => parts
                .iter()
                .map(|s| s.signed_distance(x))
                .fold(f64::INFINITY, f64::min),
            Shape::Complement { inner } => -inner.signed_distance(x),
        }
    }

    fn active_part(&self, x: &[f64]) -> &Shape {
        match self {
            Shape::Union { parts } => parts
                .iter()
                .min_by(|a, b| a.signed_distance(x).total_cmp(&b.signed_distance(x)))
                .expect("validated nonempty")
                .active_part(x),
            _ => self,
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self.active_part(x) {
            Shape::Sphere { center, .. } => {
                let d = v::sub(x, center);
                let r = v::norm(&d);
                v::scale(&d, 1.0 / r)
            }
            Shape::Cylinder { point, axis, .. } => {
                let (w, _) = cylinder_offset(x, point, axis);
                let r = v::norm(&w);
                v::scale(&w, 1.0 / r)
            }
            Shape::HalfSpace { normal, .. } => v::scale(normal, 1.0 / v::norm(normal)),
            Shape::Slab { normal, offset, .. } => {
                let len = v::norm(normal);
                let s = if v::dot(normal, x) / len - offset >= 0.0 { 1.0 } else { -1.0 };
                v::scale(normal, s / len)
            }
            Shape::Complement { inner } => v::scale(&inner.grad(x), -1.0),
            Shape::Union { .. } => unreachable!("active part is never a union"),
        }
    }

    pub fn hess(&self, x: &[f64]) -> SymForm {
        let n = self.dim();
        match self.active_part(x) {
            Shape::Sphere { center, .. } => {
                let d = v::sub(x, center);
                let r = v::norm(&d);
                let nn = SymForm::outer(&v::scale(&d, 1.0 / r));
                SymForm::identity(n).sub(&nn).expect("same dim").scale(1.0 / r)
            }
            Shape::Cylinder { point, axis, .. } => {
                let (w, a) = cylinder_offset(x, point, axis);
                let r = v::norm(&w);
                let proj = SymForm::identity(n)
                    .sub(&SymForm::outer(&a))
                    .and_then(|s| s.sub(&SymForm::outer(&v::scale(&w, 1.0 / r))))
                    .expect("same dim");
                proj.scale(1.0 / r)
            }
            Shape::HalfSpace { .. } | Shape::Slab { .. } => SymForm::zeros(n),
            Shape::Complement { inner } => inner.hess(x).scale(-1.0),
            Shape::Union { .. } => unreachable!("active part is never a union"),
        }
    }

    /// Image under `x ↦ λx`.
    pub fn dilate(&self, lambda: f64) -> Shape {
        match self {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: v::scale(center, lambda),
                radius: radius * lambda,
            },
            Shape::Cylinder { point, axis, radius } => Shape::Cylinder {
                point: v::scale(point, lambda),
                axis: axis.clone(),
                radius: radius * lambda,
            },
            Shape::HalfSpace { normal, offset } => Shape::HalfSpace {
                normal: normal.clone(),
                offset: offset * lambda,
            },
            Shape::Slab {
                normal,
                offset,
                half_width,
            } => Shape::Slab {
                normal: normal.clone(),
                offset: offset * lambda,
                half_width: half_width * lambda,
            },
            Shape::Union { parts } => Shape::Union {
                parts: parts.iter().map(|p| p.dilate(lambda)).collect(),
            },
            Shape::Complement { inner } => Shape::Complement {
                inner: Box::new(inner.dilate(lambda)),
            },
        }
    }
}

fn cylinder_offset(x: &[f64], point: &[f64], axis: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = v::scale(axis, 1.0 / v::norm(axis));
    let y = v::sub(x, point);
    let along = v::dot(&y, &a);
    (v::sub(&y, &v::scale(&a, along)), a)
}

impl Surface for Shape {
    fn dim(&self) -> usize {
        Shape::dim(self)
    }
    fn inside(&self, p: &[f64]) -> bool {
        self.signed_distance(p) <= 0.0
    }
    fn boundary_distance(&self, p: &[f64]) -> f64 {
        self.signed_distance(p).abs()
    }
}

impl LevelSet for Shape {
    fn dim(&self) -> usize {
        Shape::dim(self)
    }
    fn value(&self, p: &[f64]) -> Result<f64> {
        Ok(self.signed_distance(p))
    }
    fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.grad(p))
    }
    fn hessian(&self, p: &[f64]) -> Result<SymForm> {
        Ok(self.hess(p))
    }
    fn describe(&self) -> String {
        format!("analytic {}", serde_json::to_string(self).unwrap_or_default())
    }
}

/// Closed triangle mesh in R³.
#[derive(Debug, Clone)]
pub struct TriMeshSurface {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

impl TriMeshSurface {
    pub fn new(mesh: &OffMesh) -> Result<Self> {
        if mesh.dim() != 3 {
            return Err(invalid("triangle mesh surfaces live in R³"));
        }
        if mesh.faces.is_empty() {
            return Err(invalid("surface mesh has no faces"));
        }
        let vertices = mesh.vertices.iter().map(|p| [p[0], p[1], p[2]]).collect();
        let faces = mesh
            .faces
            .iter()
            .map(|f| {
                if f.len() == 3 {
                    Ok([f[0], f[1], f[2]])
                } else {
                    Err(invalid("surface mesh faces must be triangles"))
                }
            })
            .collect::<Result<_>>()?;
        Ok(TriMeshSurface { vertices, faces })
    }

    /// Generalized winding number (solid angle / 4π).
    pub fn winding(&self, p: &[f64]) -> f64 {
        let mut total = 0.0;
        for f in &self.faces {
            let a = sub3(self.vertices[f[0]], p);
            let b = sub3(self.vertices[f[1]], p);
            let c = sub3(self.vertices[f[2]], p);
            let (la, lb, lc) = (norm3(a), norm3(b), norm3(c));
            let num = dot3(a, cross3(b, c));
            let den = la * lb * lc + dot3(a, b) * lc + dot3(b, c) * la + dot3(c, a) * lb;
            total += 2.0 * num.atan2(den);
        }
        total / (4.0 * std::f64::consts::PI)
    }
}

impl Surface for TriMeshSurface {
    fn dim(&self) -> usize {
        3
    }
    fn inside(&self, p: &[f64]) -> bool {
        self.winding(p).abs() > 0.5
    }
    fn boundary_distance(&self, p: &[f64]) -> f64 {
        let q = [p[0], p[1], p[2]];
        self.faces
            .iter()
            .map(|f| {
                point_triangle_distance(q, self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Closed polygon in R².
#[derive(Debug, Clone)]
pub struct PolygonSurface {
    vertices: Vec<[f64; 2]>,
}

impl PolygonSurface {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(invalid("polygon needs at least three vertices"));
        }
        Ok(PolygonSurface { vertices })
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

impl Surface for PolygonSurface {
    fn dim(&self) -> usize {
        2
    }
    fn inside(&self, p: &[f64]) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
    fn boundary_distance(&self, p: &[f64]) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, &a, &b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Region given as a node mask on a grid. The boundary is taken to pass
/// through the midpoints of edges joining inside and outside nodes.
#[derive(Debug, Clone)]
pub struct NodeMask {
    grid: Grid,
    mask: Vec<bool>,
    crossings: Vec<Vec<f64>>,
}

impl NodeMask {
    pub fn new(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(invalid("mask needs one flag per node"));
        }
        let mut crossings = Vec::new();
        for i in 0..grid.len() {
            let idx = grid.unflat(i);
            for k in 0..grid.dim() {
                if idx[k] + 1 < grid.counts()[k] {
                    let j = i + grid.strides()[k];
                    if mask[i] != mask[j] {
                        let a = grid.node_flat(i);
                        let b = grid.node_flat(j);
                        crossings.push(v::scale(&v::add(&a, &b), 0.5));
                    }
                }
            }
        }
        Ok(NodeMask {
            grid,
            mask,
            crossings,
        })
    }

    pub fn from_fn(grid: Grid, inside: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let mask = (0..grid.len()).map(|i| inside(&grid.node_flat(i))).collect();
        Self::new(grid, mask)
    }
}

impl Surface for NodeMask {
    fn dim(&self) -> usize {
        self.grid.dim()
    }
    fn inside(&self, p: &[f64]) -> bool {
        let (base, frac) = self.grid.locate(p);
        let idx: Vec<usize> = base
            .iter()
            .zip(&frac)
            .map(|(b, f)| if *f >= 0.5 { b + 1 } else { *b })
            .collect();
        self.mask[self.grid.flat(&idx)]
    }
    fn boundary_distance(&self, p: &[f64]) -> f64 {
        self.crossings
            .iter()
            .map(|c| v::dist(c, p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Zero level set of a smooth function given with its gradient; inside is
/// `{φ ≤ 0}`. Distances come from closest-point iteration.
pub struct ImplicitSurface<F> {
    dim: usize,
    f: F,
}

impl<F> ImplicitSurface<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        ImplicitSurface { dim, f }
    }

    /// Newton projection along the gradient onto `{φ = 0}`.
    fn project(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut y = x.to_vec();
        for _ in 0..50 {
            let (phi, g) = (self.f)(&y);
            let g2 = v::dot(&g, &g);
            if g2 == 0.0 || !phi.is_finite() {
                return None;
            }
            let step = v::scale(&g, phi / g2);
            y = v::sub(&y, &step);
            if v::norm(&step) < 1e-15 * (1.0 + v::norm(&y)) {
                break;
            }
        }
        Some(y)
    }

    /// Closest point on the zero set, by alternating tangential moves and
    /// normal projections.
    pub fn closest_point(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut y = self.project(x)?;
        for _ in 0..100 {
            let (_, g) = (self.f)(&y);
            let gn = v::norm(&g);
            if gn == 0.0 {
                return None;
            }
            let nrm = v::scale(&g, 1.0 / gn);
            let d = v::sub(x, &y);
            let tangential = v::sub(&d, &v::scale(&nrm, v::dot(&d, &nrm)));
            if v::norm(&tangential) < 1e-14 * (1.0 + v::norm(&d)) {
                break;
            }
            y = self.project(&v::add(&y, &tangential))?;
        }
        Some(y)
    }
}

impl<F> Surface for ImplicitSurface<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn inside(&self, p: &[f64]) -> bool {
        (self.f)(p).0 <= 0.0
    }
    fn boundary_distance(&self, p: &[f64]) -> f64 {
        match self.closest_point(p) {
            Some(y) => v::dist(p, &y),
            None => f64::INFINITY,
        }
    }
}

pub(crate) fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = v::sub(b, a);
    let ap = v::sub(p, a);
    let len2 = v::dot(&ab, &ab);
    let t = if len2 > 0.0 {
        (v::dot(&ap, &ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    v::dist(p, &v::add(a, &v::scale(&ab, t)))
}

fn sub3(a: [f64; 3], p: &[f64]) -> [f64; 3] {
    [a[0] - p[0], a[1] - p[1], a[2] - p[2]]
}
fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Distance from `p` to triangle `abc` (Ericson's region classification).
pub(crate) fn point_triangle_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let d = |u: [f64; 3], w: [f64; 3]| [u[0] - w[0], u[1] - w[1], u[2] - w[2]];
    let ab = d(b, a);
    let ac = d(c, a);
    let ap = d(p, a);
    let d1 = dot3(ab, ap);
    let d2 = dot3(ac, ap);
    let closest = |q: [f64; 3]| norm3(d(p, q));
    let lerp = |u: [f64; 3], w: [f64; 3], t: f64| [u[0] + t * w[0], u[1] + t * w[1], u[2] + t * w[2]];
    if d1 <= 0.0 && d2 <= 0.0 {
        return closest(a);
    }
    let bp = d(p, b);
    let d3 = dot3(ab, bp);
    let d4 = dot3(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return closest(b);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return closest(lerp(a, ab, d1 / (d1 - d3)));
    }
    let cp = d(p, c);
    let d5 = dot3(ab, cp);
    let d6 = dot3(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return closest(c);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return closest(lerp(a, ac, d2 / (d2 - d6)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let bc = d(c, b);
        return closest(lerp(b, bc, (d4 - d3) / ((d4 - d3) + (d5 - d6))));
    }
    let denom = 1.0 / (va + vb + vc);
    let v_ = vb * denom;
    let w_ = vc * denom;
    let q = [
        a[0] + ab[0] * v_ + ac[0] * w_,
        a[1] + ab[1] * v_ + ac[1] * w_,
        a[2] + ab[2] * v_ + ac[2] * w_,
    ];
    closest(q)
}

/// Unsigned distance from `p` to a finite point set.
pub fn distance_to_points(p: &[f64], points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|q| v::dist(p, q))
        .fold(f64::INFINITY, f64::min)
}
