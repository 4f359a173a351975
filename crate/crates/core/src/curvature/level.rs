use crate::error::{invalid, MhError, Result};
use crate::fields::{signed_distance, tangential_curvatures, Grid, ImplicitSurface, LevelSet, SignedDistance};
use crate::linalg::{vec as v, SymForm};
use crate::predicate::{margin_of, ClosedSet, TestFunction};
use serde::Serialize;

/// Ascending principal curvatures with respect to the normal pointing into
/// the region `{u < 0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalCurvatures {
    pub values: Vec<f64>,
}

impl PrincipalCurvatures {
    /// `κ₁ + … + κ_m`.
    pub fn h_m(&self, m: usize) -> Result<f64> {
        if m == 0 || m > self.values.len() {
            return Err(invalid(format!("m = {m} must lie in 1..={}", self.values.len())));
        }
        Ok(self.values[..m].iter().sum())
    }
}

/// Second fundamental form on an orthonormal basis of the tangent space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondFundamentalForm {
    pub form: SymForm,
    pub basis: Vec<Vec<f64>>,
}

/// Smallest `|∇u|` accepted as a distance-like gradient.
const MIN_GRAD: f64 = 0.5;

/// Principal curvatures of the level set of `u` through `p`.
///
/// The curvatures are the eigenvalues of `D²u/|∇u|` compressed to the
/// orthogonal complement of `∇u`.
pub fn level_set_curvatures(u: &dyn LevelSet, p: &[f64]) -> Result<(PrincipalCurvatures, SecondFundamentalForm)> {
    let g = u.gradient(p)?;
    let norm = v::norm(&g);
    if norm < MIN_GRAD {
        return Err(MhError::DegenerateGradient { norm });
    }
    let (values, form, basis) = tangential_curvatures(&g, &u.hessian(p)?)?;
    Ok((PrincipalCurvatures { values }, SecondFundamentalForm { form, basis }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchPoint {
    pub sample: Vec<f64>,
    /// Foot point on the region boundary.
    pub foot: Vec<f64>,
    pub h_m: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport {
    pub m: usize,
    pub h: f64,
    pub touching: Vec<TouchPoint>,
    /// `max(κ₁ + … + κ_m − h)` over touching points.
    pub max_excess: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Relative tolerance on `κ₁ + … + κ_m ≤ h` for grid curvatures.
pub const BARRIER_REL: f64 = 0.03;

/// Evaluates the barrier inequality at every sample of `z` within `cell`
/// of the boundary of `N = {u ≤ 0}`.
pub fn barrier_check(z: &ClosedSet, u: &dyn LevelSet, cell: f64, m: usize, h: f64) -> Result<BarrierReport> {
    if u.dim() != z.dim() || m == 0 || m >= z.dim() {
        return Err(invalid("barrier check needs matching dimensions and 1 ≤ m < n"));
    }
    let mut worst_out: f64 = 0.0;
    let mut touching = Vec::new();
    for p in z.points() {
        let d = u.value(p)?;
        worst_out = worst_out.max(d);
        if d.abs() > cell {
            continue;
        }
        let g = u.gradient(p)?;
        let g2 = v::dot(&g, &g);
        let foot = if g2 > 0.0 { v::sub(p, &v::scale(&g, d / g2)) } else { p.clone() };
        let (k, _) = level_set_curvatures(u, &foot)?;
        let h_m = k.h_m(m)?;
        touching.push(TouchPoint {
            sample: p.clone(),
            foot,
            h_m,
            excess: h_m - h,
        });
    }
    if worst_out > cell {
        return Err(MhError::ContainmentFailure { excess: worst_out });
    }
    if touching.is_empty() {
        return Err(MhError::NoContact);
    }
    let max_excess = touching.iter().map(|t| t.excess).fold(f64::NEG_INFINITY, f64::max);
    let scale = touching.iter().fold(h.abs(), |a, t| a.max(t.h_m.abs()));
    let tolerance = BARRIER_REL * scale;
    Ok(BarrierReport {
        m,
        h,
        touching,
        max_excess,
        tolerance,
        holds: max_excess <= tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConverseReport {
    pub point: Vec<f64>,
    pub m: usize,
    pub h: f64,
    pub margin: f64,
    /// `H_m(∂N, p)` from the gridded signed distance of `N`.
    pub h_m_grid: f64,
    /// The same from the exact jet of the normalized probe.
    pub h_m_analytic: f64,
    /// `max (f(z) − f(p))/|Df(p)|` over samples.
    pub containment_excess: f64,
    pub exceeds_h: bool,
    #[serde(skip)]
    pub region: Option<SignedDistance>,
}

/// Builds `N = {f ≤ f(p)}` for a violating probe and measures `H_m(∂N, p)`.
///
/// The probe is normalized to `|Df(p)| = 1`; `N` contains `z` and its
/// boundary passes through `p`, where the sum of the `m` smallest
/// curvatures must exceed `h`.
pub fn converse_barrier_build(
    z: &ClosedSet,
    f: &TestFunction,
    p: &[f64],
    m: usize,
    h: f64,
    grid: &Grid,
) -> Result<ConverseReport> {
    if grid.dim() != z.dim() || f.dim() != z.dim() {
        return Err(invalid("grid, set and probe must share a dimension"));
    }
    let jet = f.jet(p)?;
    let parts = margin_of(&jet, m, h, None)?;
    if parts.margin <= 0.0 {
        return Err(MhError::NotViolating { margin: parts.margin });
    }
    if parts.grad_norm < crate::tol::GRAD {
        return Err(MhError::DegenerateGradient { norm: parts.grad_norm });
    }
    let f = f.scaled(1.0 / parts.grad_norm)?;
    let level = f.value(p)?;
    let mut excess = f64::NEG_INFINITY;
    for q in z.points() {
        excess = excess.max(f.value(q)? - level);
    }
    let cell = grid.max_spacing();
    if excess > cell {
        return Err(MhError::ContainmentFailure { excess });
    }
    let jet = f.jet(p)?;
    let (k, _, _) = tangential_curvatures(&jet.grad, &jet.hess)?;
    let h_m_analytic = k[..m].iter().sum::<f64>();

    let surface = ImplicitSurface::new(grid.dim(), |x: &[f64]| match f.jet(x) {
        Ok(j) => (j.value - level, j.grad),
        Err(_) => (f64::NAN, vec![0.0; x.len()]),
    });
    let field = signed_distance(&surface, grid)?;
    let region = SignedDistance::new(field, 3.0 * cell)?;
    let (kg, _) = level_set_curvatures(&region, p)?;
    let h_m_grid = kg.h_m(m)?;
    Ok(ConverseReport {
        point: p.to_vec(),
        m,
        h,
        margin: parts.margin,
        h_m_grid,
        h_m_analytic,
        containment_excess: excess,
        exceeds_h: h_m_grid > h && h_m_analytic > h,
        region: Some(region),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Shape;

    #[test]
    fn analytic_shapes() {
        let plane = Shape::HalfSpace {
            normal: vec![0.0, 0.0, 1.0],
            offset: 0.0,
        };
        let (k, _) = level_set_curvatures(&plane, &[0.1, 0.2, 0.0]).unwrap();
        assert!(k.values.iter().all(|x| *x == 0.0));
        let cyl = Shape::Cylinder {
            point: vec![0.0; 3],
            axis: vec![0.0, 0.0, 1.0],
            radius: 0.5,
        };
        let (k, sff) = level_set_curvatures(&cyl, &[0.5, 0.0, 0.3]).unwrap();
        assert!(k.values[0].abs() < 1e-12 && (k.values[1] - 2.0).abs() < 1e-12);
        assert_eq!(sff.form.dim(), 2);
    }

    #[test]
    fn gridded_sphere_within_three_percent() {
        let r = 1.0;
        let g = Grid::cube_with_spacing(3, 1.25, r / 64.0).unwrap();
        let sd = SignedDistance::build(&Shape::sphere(vec![0.0; 3], r), &g, 0.1).unwrap();
        for p in [[r, 0.0, 0.0], [0.0, 0.6, 0.8], [0.577, -0.577, 0.577]] {
            let (k, _) = level_set_curvatures(&sd, &p).unwrap();
            for x in &k.values {
                assert!((x - 1.0 / r).abs() < 0.03 / r, "{x} at {p:?}");
            }
            let (kf, _) = level_set_curvatures(&sd.flipped().unwrap(), &p).unwrap();
            for (a, b) in k.values.iter().zip(kf.values.iter().rev()) {
                assert!((a + b).abs() < 1e-12);
            }
        }
    }
}
