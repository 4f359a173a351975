use super::complex::{centroid, simplex_measure, subdivide, DiscreteVarifold};
use super::region::{Placement, Region};
use crate::error::{invalid, MhError, Result};
use crate::fields::VectorField;
use crate::linalg::vec as v;
use crate::par::{ordered_sum, Exec};
use crate::tol;
use serde::Serialize;
use std::collections::HashMap;

/// Volume of the unit ball in `Rᵐ`.
pub fn omega(m: usize) -> f64 {
    use std::f64::consts::PI;
    match m {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        // ω_m = 2π/m · ω_{m−2}
        _ => 2.0 * PI / m as f64 * omega(m - 2),
    }
}

/// Subdivision depth giving 256 leaves per face.
fn depth(m: usize) -> u32 {
    tol::SUBDIVISION_LEVELS * 2 / m as u32
}

fn leaf_sum(p: Vec<Vec<f64>>, level: u32, region: &Region, g: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>) -> f64 {
    let refs: Vec<&[f64]> = p.iter().map(|q| q.as_slice()).collect();
    let c = centroid(&refs);
    let reach = refs.iter().map(|q| v::dist(q, &c)).fold(0.0, f64::max);
    let placement = region.place(&c, reach);
    match (placement, g) {
        (Placement::Outside, _) => return 0.0,
        (Placement::Inside, None) => return simplex_measure(&refs),
        _ => {}
    }
    if level == 0 {
        let inside = placement == Placement::Inside || region.contains(&c);
        return if inside { simplex_measure(&refs) * g.map_or(1.0, |g| g(&c)) } else { 0.0 };
    }
    subdivide(&p).into_iter().map(|child| leaf_sum(child, level - 1, region, g)).sum()
}

/// `∫_{face ∩ U} g` by recursive midpoint subdivision; `g = 1` when absent.
fn face_integral(vf: &DiscreteVarifold, i: usize, region: &Region, g: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>) -> f64 {
    let p: Vec<Vec<f64>> = vf.face_points(i).iter().map(|q| q.to_vec()).collect();
    leaf_sum(p, depth(vf.m()), region, g)
}

/// `Σ θ_f · area(f ∩ U)`.
pub fn mass(vf: &DiscreteVarifold, region: &Region) -> f64 {
    mass_with(vf, region, Exec::default())
}

pub fn mass_with(vf: &DiscreteVarifold, region: &Region, exec: Exec) -> f64 {
    let per_face = exec.map(vf.len(), |i| {
        let t = vf.multiplicities()[i];
        if t == 0.0 {
            0.0
        } else {
            t * face_integral(vf, i, region, None)
        }
    });
    ordered_sum(&per_face)
}

/// `Σ θ_f ∫_{f ∩ U} g`.
pub fn integrate(vf: &DiscreteVarifold, region: &Region, g: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let per_face = Exec::default().map(vf.len(), |i| {
        let t = vf.multiplicities()[i];
        if t == 0.0 {
            0.0
        } else {
            t * face_integral(vf, i, region, Some(g))
        }
    });
    ordered_sum(&per_face)
}

/// Weighted `(m−1)`-measure of the boundary chain inside `U`.
pub fn boundary_mass(vf: &DiscreteVarifold, region: &Region) -> f64 {
    let per_cell: Vec<f64> = vf
        .boundary()
        .iter()
        .map(|c| {
            let p: Vec<Vec<f64>> = vf.cell_points(c).iter().map(|q| q.to_vec()).collect();
            let w = c.coefficient.abs();
            if p.len() == 1 {
                if region.contains(&p[0]) {
                    w
                } else {
                    0.0
                }
            } else {
                w * leaf_sum(p, 2 * tol::SUBDIVISION_LEVELS, region, None)
            }
        })
        .collect();
    ordered_sum(&per_cell)
}

/// Vector field with a Jacobian, row-major `J[c·n + k] = ∂_k X^c`.
pub trait SmoothVectorField: Sync {
    fn dim(&self) -> usize;
    fn value(&self, p: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, p: &[f64]) -> Result<Vec<f64>>;
}

impl SmoothVectorField for VectorField {
    fn dim(&self) -> usize {
        self.grid().dim()
    }
    fn value(&self, p: &[f64]) -> Result<Vec<f64>> {
        VectorField::value(self, p)
    }
    fn jacobian(&self, p: &[f64]) -> Result<Vec<f64>> {
        VectorField::jacobian(self, p)
    }
}

/// Closed-form field: `f(x)` returns the value and the row-major Jacobian.
pub struct AnalyticField<F> {
    dim: usize,
    f: F,
}

impl<F> AnalyticField<F>
where
    F: Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        AnalyticField { dim, f }
    }
}

impl<F> SmoothVectorField for AnalyticField<F>
where
    F: Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(p).0)
    }
    fn jacobian(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(p).1)
    }
}

/// `Σ τᵢ·(J τᵢ)` over an orthonormal tangent basis.
pub fn tangential_divergence(jac: &[f64], basis: &[Vec<f64>]) -> f64 {
    let n = basis[0].len();
    basis
        .iter()
        .map(|t| {
            let mut s = 0.0;
            for c in 0..n {
                for k in 0..n {
                    s += t[c] * jac[c * n + k] * t[k];
                }
            }
            s
        })
        .sum()
}

/// Quadrature nodes (barycentric) and weights summing to 1: two-point Gauss
/// on segments, edge midpoints on triangles. Both are exact for quadratics.
fn quadrature(m: usize) -> Vec<(Vec<f64>, f64)> {
    if m == 1 {
        let a = 0.5 - 0.5 / 3f64.sqrt();
        vec![(vec![1.0 - a, a], 0.5), (vec![a, 1.0 - a], 0.5)]
    } else {
        vec![
            (vec![0.5, 0.5, 0.0], 1.0 / 3.0),
            (vec![0.0, 0.5, 0.5], 1.0 / 3.0),
            (vec![0.5, 0.0, 0.5], 1.0 / 3.0),
        ]
    }
}

fn barycentric(p: &[&[f64]], w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; p[0].len()];
    for (q, wi) in p.iter().zip(w) {
        for k in 0..x.len() {
            x[k] += wi * q[k];
        }
    }
    x
}

fn check_dim(vf: &DiscreteVarifold, x: &dyn SmoothVectorField) -> Result<()> {
    if x.dim() != vf.dim() {
        return Err(invalid("vector field and varifold live in different dimensions"));
    }
    Ok(())
}

/// `δV(X) = Σ θ_f ∫_f div_M X`.
pub fn first_variation(vf: &DiscreteVarifold, x: &dyn SmoothVectorField) -> Result<f64> {
    check_dim(vf, x)?;
    let rule = quadrature(vf.m());
    let per_face = Exec::default().map(vf.len(), |i| -> Result<f64> {
        let t = vf.multiplicities()[i];
        if t == 0.0 {
            return Ok(0.0);
        }
        let p = vf.face_points(i);
        let basis = vf.tangent_basis(i);
        let mut s = 0.0;
        for (w, weight) in &rule {
            s += weight * tangential_divergence(&x.jacobian(&barycentric(&p, w))?, &basis);
        }
        Ok(t * vf.face_measure(i) * s)
    });
    let per_face = per_face.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(ordered_sum(&per_face))
}

/// `Σ |c| ∫_{cell} X·ν` over the boundary chain, `ν` the outward conormal.
pub fn boundary_flux(vf: &DiscreteVarifold, x: &dyn SmoothVectorField) -> Result<f64> {
    check_dim(vf, x)?;
    let mut parts = Vec::with_capacity(vf.boundary().len());
    for c in vf.boundary() {
        let nu = vf.conormal(c);
        let p = vf.cell_points(c);
        let val = if p.len() == 1 {
            v::dot(&x.value(p[0])?, &nu)
        } else {
            let mut s = 0.0;
            for (w, weight) in quadrature(1) {
                s += weight * v::dot(&x.value(&barycentric(&p, &w))?, &nu);
            }
            s * simplex_measure(&p)
        };
        parts.push(c.coefficient.abs() * val);
    }
    Ok(ordered_sum(&parts))
}

/// Density ratio at one radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub radius: f64,
    pub mass: f64,
    pub theta: f64,
}

/// `mass(V, B(x, r)) / (ω_m rᵐ)` for each radius in a decreasing list.
pub fn density(vf: &DiscreteVarifold, x: &[f64], radii: &[f64]) -> Result<Vec<DensityEstimate>> {
    if x.len() != vf.dim() {
        return Err(invalid("density point has the wrong dimension"));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("radii must be positive and strictly decreasing"));
    }
    let Some(&r_max) = radii.first() else { return Ok(Vec::new()) };
    let local = (0..vf.len())
        .filter(|&i| {
            let c = vf.face_centroid(i);
            v::dist(&c, x) <= r_max + vf.face_diameter(i)
        })
        .map(|i| vf.face_diameter(i))
        .fold(0.0, f64::max);
    let limit = tol::DENSITY_RESOLUTION * local;
    if let Some(&r) = radii.iter().find(|&&r| r < limit) {
        return Err(MhError::ResolutionLimit { radius: r, limit });
    }
    let w = omega(vf.m());
    Ok(radii
        .iter()
        .map(|&r| {
            let mass = mass(vf, &Region::ball(x.to_vec(), r));
            DensityEstimate { radius: r, mass, theta: mass / (w * r.powi(vf.m() as i32)) }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub alpha: f64,
    pub holds: bool,
    /// `(face, θ)` with `θ ∉ {1} ∪ [α, ∞)`.
    pub offenders: Vec<(usize, f64)>,
}

/// Whether every positive multiplicity lies in `{1} ∪ [α, ∞)`.
pub fn gap_alpha_check(vf: &DiscreteVarifold, alpha: f64) -> Result<GapReport> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(invalid("gap constant must exceed 1"));
    }
    let offenders: Vec<(usize, f64)> = vf
        .multiplicities()
        .iter()
        .enumerate()
        .filter(|(_, &t)| {
            t > 0.0 && (t - 1.0).abs() > tol::MULTIPLICITY && t < alpha - tol::MULTIPLICITY
        })
        .map(|(i, &t)| (i, t))
        .collect();
    Ok(GapReport { alpha, holds: offenders.is_empty(), offenders })
}

/// Buckets of faces by centroid for repeated ball queries.
pub(crate) struct FaceIndex {
    cell: f64,
    reach: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl FaceIndex {
    pub(crate) fn new(vf: &DiscreteVarifold, cell: f64) -> Self {
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let mut reach: f64 = 0.0;
        for i in 0..vf.len() {
            let c = vf.face_centroid(i);
            for p in vf.face_points(i) {
                reach = reach.max(v::dist(p, &c));
            }
            buckets.entry(key(&c, cell)).or_default().push(i);
        }
        FaceIndex { cell, reach, buckets }
    }

    /// Faces that may meet `B(x, r)`, in increasing order.
    pub(crate) fn near(&self, x: &[f64], r: f64) -> Vec<usize> {
        let ring = ((r + self.reach) / self.cell).ceil() as i64;
        let center = key(x, self.cell);
        let n = x.len();
        let mut out = Vec::new();
        let mut offset = vec![-ring; n];
        loop {
            let k: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
            if let Some(b) = self.buckets.get(&k) {
                out.extend_from_slice(b);
            }
            let mut d = 0;
            loop {
                if d == n {
                    out.sort_unstable();
                    return out;
                }
                offset[d] += 1;
                if offset[d] <= ring {
                    break;
                }
                offset[d] = -ring;
                d += 1;
            }
        }
    }
}

fn key(x: &[f64], cell: f64) -> Vec<i64> {
    x.iter().map(|c| (c / cell).floor() as i64).collect()
}

/// Ball mass restricted to candidate faces, summed in face order.
pub(crate) fn ball_mass(vf: &DiscreteVarifold, index: &FaceIndex, x: &[f64], r: f64) -> f64 {
    let region = Region::ball(x.to_vec(), r);
    let mut s = 0.0;
    for i in index.near(x, r) {
        let t = vf.multiplicities()[i];
        if t != 0.0 {
            s += t * face_integral(vf, i, &region, None);
        }
    }
    s
}
