//! Sampled closed sets used by tests, scenarios and benches.

use super::set::{Aabb, ClosedSet};
use crate::error::{invalid, Result};

/// Trust windows stay this many resolutions away from truncation edges.
const EDGE_CELLS: f64 = 4.0;

pub fn singleton(n: usize, resolution: f64) -> Result<ClosedSet> {
    ClosedSet::point_cloud("singleton", vec![vec![0.0; n]], resolution)
}

/// Round sphere about the origin: Fibonacci lattice in R³, uniform in R².
pub fn sphere(n: usize, r: f64, count: usize) -> Result<ClosedSet> {
    if !(r > 0.0) || count < 4 {
        return Err(invalid("sphere needs a positive radius and at least 4 samples"));
    }
    let tau = std::f64::consts::TAU;
    match n {
        2 => {
            let pts = (0..count)
                .map(|i| {
                    let t = tau * i as f64 / count as f64;
                    vec![r * t.cos(), r * t.sin()]
                })
                .collect();
            ClosedSet::point_cloud("circle", pts, tau * r / count as f64)
        }
        3 => {
            let golden = tau * (1.0 - 1.0 / 1.618_033_988_749_895);
            let pts = (0..count)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * rho * t.cos(), r * rho * t.sin(), r * z]
                })
                .collect();
            let res = r * (4.0 * std::f64::consts::PI / count as f64).sqrt();
            ClosedSet::point_cloud("sphere", pts, res)
        }
        _ => Err(invalid("sphere fixture is available in dimensions 2 and 3")),
    }
}

fn check_extent(half: f64, res: f64) -> Result<()> {
    if !(half > 0.0 && res > 0.0) || !half.is_finite() || res > half {
        return Err(invalid("fixture needs a positive extent and a resolution below it"));
    }
    Ok(())
}

fn lattice(lo: f64, hi: f64, res: f64) -> Vec<f64> {
    let k = ((hi - lo) / res).round().max(1.0) as usize;
    (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect()
}

/// Square patch of the plane `x₃ = 0` in R³, trusted away from its edges.
pub fn plane_patch(half: f64, res: f64) -> Result<ClosedSet> {
    check_extent(half, res)?;
    let axis = lattice(-half, half, res);
    let pts = axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| vec![a, b, 0.0]))
        .collect();
    let e = half - EDGE_CELLS * res;
    ClosedSet::point_cloud("plane", pts, res)?.with_window(Aabb {
        lo: vec![-e, -e, f64::NEG_INFINITY],
        hi: vec![e, e, f64::INFINITY],
    })
}

/// `{x₁ ≤ 0, x₃ = 0}` in R³; the edge `x₁ = 0` is genuine.
pub fn half_plane(half: f64, res: f64) -> Result<ClosedSet> {
    check_extent(half, res)?;
    let a1 = lattice(-half, 0.0, res);
    let a2 = lattice(-half, half, res);
    let pts = a1
        .iter()
        .flat_map(|&a| a2.iter().map(move |&b| vec![a, b, 0.0]))
        .collect();
    let e = half - EDGE_CELLS * res;
    ClosedSet::point_cloud("half-plane", pts, res)?.with_window(Aabb {
        lo: vec![-e, -e, f64::NEG_INFINITY],
        hi: vec![f64::INFINITY, e, f64::INFINITY],
    })
}

/// `[−half, half] × {0}` in R², endpoints included.
pub fn segment(half: f64, res: f64) -> Result<ClosedSet> {
    check_extent(half, res)?;
    let pts = lattice(-half, half, res).into_iter().map(|x| vec![x, 0.0]).collect();
    ClosedSet::point_cloud("segment", pts, res)
}
