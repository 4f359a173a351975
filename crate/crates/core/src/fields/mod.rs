//! Grid-sampled fields and the differential operators built on them.

mod barrier;
mod eikonal;
mod grid;
mod surface;

pub use barrier::ExpBarrier;
pub use eikonal::fast_sweep;
pub use grid::{
    metric_norm, BoundaryPolicy, Corners, FieldHeader, Grid, GridSpec, MetricField, ScalarField,
    VectorField,
};
pub use surface::{
    distance_to_points, ImplicitSurface, NodeMask, PolygonSurface, Shape, Surface, TriMeshSurface,
};

use crate::error::{invalid, MhError, Result};
use crate::linalg::{self, vec as v, SymForm};
use crate::par::Exec;

/// A function with first and second derivatives, used as a level-set
/// function `u` with `u < 0` inside the region.
pub trait LevelSet: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, p: &[f64]) -> Result<f64>;
    fn gradient(&self, p: &[f64]) -> Result<Vec<f64>>;
    fn hessian(&self, p: &[f64]) -> Result<SymForm>;
    fn describe(&self) -> String;
}

/// Band half-width (in cells) over which `signed_distance` uses direct
/// geometric distances instead of sweeping.
pub const EXACT_BAND_CELLS: usize = 3;

/// Signed distance to a surface on `grid`: negative inside, exact within
/// three cells of the interface, fast sweeping elsewhere.
pub fn signed_distance(surface: &dyn Surface, grid: &Grid) -> Result<ScalarField> {
    signed_distance_with(surface, grid, Exec::default())
}

pub fn signed_distance_with(surface: &dyn Surface, grid: &Grid, exec: Exec) -> Result<ScalarField> {
    if surface.dim() != grid.dim() {
        return Err(invalid(format!(
            "surface dimension {} does not match grid dimension {}",
            surface.dim(),
            grid.dim()
        )));
    }
    let inside = exec.map(grid.len(), |i| surface.inside(&grid.node_flat(i)));
    let band = interface_band(grid, &inside, EXACT_BAND_CELLS);
    if !band.iter().any(|b| *b) {
        return Err(invalid("surface does not cross the grid"));
    }
    let mut dist = exec.map(grid.len(), |i| {
        if band[i] {
            surface.boundary_distance(&grid.node_flat(i))
        } else {
            f64::INFINITY
        }
    });
    if dist.iter().zip(&band).any(|(d, b)| *b && !d.is_finite()) {
        return Err(invalid("surface distance undefined near the interface"));
    }
    eikonal::fast_sweep(grid, &mut dist, &band);
    let values = dist
        .iter()
        .zip(&inside)
        .map(|(d, ins)| if *ins { -d } else { *d })
        .collect();
    ScalarField::new(grid.clone(), values, BoundaryPolicy::ExtrapolateLinear)
}

/// Nodes within `cells` (Chebyshev, in index space) of a sign change.
pub(crate) fn interface_band(grid: &Grid, inside: &[bool], cells: usize) -> Vec<bool> {
    let n = grid.dim();
    let mut mark = vec![false; grid.len()];
    for i in 0..grid.len() {
        let idx = grid.unflat(i);
        for k in 0..n {
            if idx[k] + 1 < grid.counts()[k] {
                let j = i + grid.strides()[k];
                if inside[i] != inside[j] {
                    mark[i] = true;
                    mark[j] = true;
                }
            }
        }
    }
    // separable max filter per axis gives a Chebyshev cube
    for k in 0..n {
        let prev = mark.clone();
        let stride = grid.strides()[k];
        let count = grid.counts()[k];
        for i in 0..grid.len() {
            if prev[i] {
                continue;
            }
            let ik = (i / stride) % count;
            let lo = ik.saturating_sub(cells);
            let hi = (ik + cells).min(count - 1);
            mark[i] = (lo..=hi).any(|t| prev[i - ik * stride + t * stride]);
        }
    }
    mark
}

/// Signed-distance field together with the caller-declared band `|u| ≤ band`
/// on which it is treated as smooth.
#[derive(Debug, Clone)]
pub struct SignedDistance {
    pub field: ScalarField,
    pub smooth_band: f64,
}

impl SignedDistance {
    pub fn new(field: ScalarField, smooth_band: f64) -> Result<Self> {
        if !(smooth_band > 0.0) {
            return Err(invalid("smooth band must be positive"));
        }
        Ok(SignedDistance { field, smooth_band })
    }

    pub fn build(surface: &dyn Surface, grid: &Grid, smooth_band: f64) -> Result<Self> {
        Self::new(signed_distance(surface, grid)?, smooth_band)
    }

    fn check_band(&self, p: &[f64]) -> Result<f64> {
        let u = self.field.value(p)?;
        if u.abs() > self.smooth_band {
            return Err(MhError::OutsideSmoothBand {
                point: p.to_vec(),
                distance: u.abs(),
                band: self.smooth_band,
            });
        }
        Ok(u)
    }

    /// Same field with inside and outside exchanged.
    pub fn flipped(&self) -> Result<Self> {
        let values = self.field.values().iter().map(|x| -x).collect();
        Ok(SignedDistance {
            field: ScalarField::new(self.field.grid().clone(), values, self.field.policy())?,
            smooth_band: self.smooth_band,
        })
    }
}

impl LevelSet for SignedDistance {
    fn dim(&self) -> usize {
        self.field.grid().dim()
    }
    fn value(&self, p: &[f64]) -> Result<f64> {
        self.field.value(p)
    }
    fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_band(p)?;
        self.field.gradient(p)
    }
    fn hessian(&self, p: &[f64]) -> Result<SymForm> {
        self.check_band(p)?;
        self.field.hessian_flat(p)
    }
    fn describe(&self) -> String {
        format!(
            "gridded signed distance, {:?} nodes, band {}",
            self.field.grid().counts(),
            self.smooth_band
        )
    }
}

/// Principal curvatures of the level set through a point, from the gradient
/// and Hessian of any level-set function: the eigenvalues of the tangential
/// block of `D²u / |∇u|`, measured against the normal `ν = −∇u/|∇u|`.
/// Returns the ascending curvatures, the tangent-space form and its basis.
pub fn tangential_curvatures(
    grad: &[f64],
    hess: &SymForm,
) -> Result<(Vec<f64>, SymForm, Vec<Vec<f64>>)> {
    let norm = v::norm(grad);
    if !(norm > 0.0) {
        return Err(MhError::DegenerateGradient { norm });
    }
    let unit = v::scale(grad, 1.0 / norm);
    let basis = v::orthogonal_complement(&unit);
    let form = hess.restrict(&basis).scale(1.0 / norm);
    let values = linalg::eigh(&form)?.values;
    Ok((values, form, basis))
}

/// Image of a point set under `x ↦ λx`.
pub fn dilate_points(points: &[Vec<f64>], lambda: f64) -> Result<Vec<Vec<f64>>> {
    if !(lambda > 0.0) {
        return Err(invalid("dilation factor must be positive"));
    }
    Ok(points.iter().map(|p| v::scale(p, lambda)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_distance_is_exact_on_nodes() {
        let g = Grid::cube(3, 1.0, 21).unwrap();
        let plane = Shape::HalfSpace {
            normal: vec![1.0, 0.0, 0.0],
            offset: 0.0,
        };
        let u = signed_distance(&plane, &g).unwrap();
        for i in 0..g.len() {
            let x = g.node_flat(i)[0];
            assert!((u.values()[i] - x).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn empty_surface_rejected() {
        let g = Grid::cube(2, 1.0, 11).unwrap();
        let far = Shape::sphere(vec![10.0, 10.0], 1.0);
        assert!(matches!(
            signed_distance(&far, &g),
            Err(MhError::InvalidInput(_))
        ));
    }

    #[test]
    fn circle_signed_distance_accuracy() {
        let g = Grid::cube(2, 2.0, 81).unwrap();
        let dx = g.max_spacing();
        let c = Shape::sphere(vec![0.0, 0.0], 1.0);
        let u = signed_distance(&c, &g).unwrap();
        let mut band_err: f64 = 0.0;
        let mut global_err: f64 = 0.0;
        for i in 0..g.len() {
            let p = g.node_flat(i);
            let exact = v::norm(&p) - 1.0;
            let e = (u.values()[i] - exact).abs();
            global_err = global_err.max(e);
            if exact.abs() <= 3.0 * dx {
                band_err = band_err.max(e);
            }
        }
        assert!(band_err < 1e-12);
        assert!(global_err <= 3.0 * dx, "global {global_err}");
    }

    #[test]
    fn band_check_reports_outside() {
        let g = Grid::cube(2, 2.0, 41).unwrap();
        let sd = SignedDistance::build(&Shape::sphere(vec![0.0, 0.0], 1.0), &g, 0.2).unwrap();
        assert!(sd.hessian(&[1.05, 0.0]).is_ok());
        assert!(matches!(
            sd.hessian(&[0.2, 0.0]),
            Err(MhError::OutsideSmoothBand { .. })
        ));
    }

    #[test]
    fn tangential_curvatures_of_sphere() {
        let s = Shape::sphere(vec![0.0; 3], 2.0);
        let p = [0.0, 0.0, 2.0];
        let (k, form, basis) = tangential_curvatures(&s.grad(&p), &s.hess(&p)).unwrap();
        assert_eq!(basis.len(), 2);
        assert_eq!(form.dim(), 2);
        assert!(k.iter().all(|x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn dilation_of_points_and_shapes() {
        let pts = dilate_points(&[vec![1.0, 2.0]], 1.0).unwrap();
        assert_eq!(pts[0], vec![1.0, 2.0]);
        assert!(dilate_points(&pts, 0.0).is_err());
        let s = Shape::sphere(vec![0.0; 2], 1.5).dilate(2.0);
        assert_eq!(s, Shape::sphere(vec![0.0; 2], 3.0));
    }
}
