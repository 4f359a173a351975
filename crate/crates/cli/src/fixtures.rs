//! Named fixture registry shared by scenarios and `mh fixtures list`.

use crate::scenario::{FamilySpec, SetSpec, VarifoldSpec};
use anyhow::{bail, Result};
use mhsets::predicate::{fixtures as sets, Aabb, ClosedSet};
use mhsets::varifold::{counterexample_sequence, fixtures as vfs, DiscreteVarifold};
use serde::Serialize;

/// Truncated fixtures are trusted this many resolutions inside their edges.
const EDGE_CELLS: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub name: &'static str,
    pub category: &'static str,
    pub params: &'static str,
    pub description: &'static str,
}

pub const REGISTRY: &[Entry] = &[
    Entry { name: "singleton", category: "set", params: "dim, resolution", description: "the origin" },
    Entry { name: "sphere", category: "set", params: "dim, radius, count", description: "round sphere, circle in dim 2" },
    Entry { name: "plane", category: "set", params: "half, resolution", description: "patch of x3 = 0, trusted away from its edges" },
    Entry { name: "half-plane", category: "set", params: "half, resolution", description: "{x1 <= 0, x3 = 0}, genuine edge at x1 = 0" },
    Entry { name: "segment", category: "set", params: "half, resolution", description: "[-half, half] x {0} with endpoints" },
    Entry { name: "cylinder", category: "set", params: "radius, half_length, resolution", description: "lateral surface about the x3 axis" },
    Entry { name: "slab", category: "set", params: "half, half_width, resolution", description: "solid {|x3| <= half_width}" },
    Entry { name: "points", category: "set", params: "points, resolution", description: "inline samples" },
    Entry { name: "unit-square", category: "varifold", params: "theta", description: "two triangles on [0,1]^2" },
    Entry { name: "plane", category: "varifold", params: "half, k", description: "square patch, 2k^2 faces" },
    Entry { name: "disk", category: "varifold", params: "radius, k", description: "disk by the elliptical map, 2k^2 faces" },
    Entry { name: "octasphere", category: "varifold", params: "radius, level", description: "subdivided octahedron, 8*4^level faces" },
    Entry { name: "counterexample", category: "varifold", params: "n, resolution", description: "graph of g/n over [-1,1] plus the weighted axis" },
    Entry { name: "multiplicity-plane", category: "family", params: "count, half, k", description: "V_i = i * plane patch" },
    Entry { name: "bounded-disk", category: "family", params: "count, k", description: "copies of the unit disk" },
    Entry { name: "half-plane", category: "family", params: "count, half, k", description: "multiplicity i on {x1 <= 0}, 1 elsewhere" },
];

fn lattice(lo: f64, hi: f64, res: f64) -> Vec<f64> {
    let k = ((hi - lo) / res).round().max(1.0) as usize;
    (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect()
}

pub fn closed_set(spec: &SetSpec) -> Result<ClosedSet> {
    Ok(match spec {
        SetSpec::Singleton { dim, resolution } => sets::singleton(*dim, *resolution)?,
        SetSpec::Sphere { dim, radius, count } => sets::sphere(*dim, *radius, *count)?,
        SetSpec::Plane { half, resolution } => sets::plane_patch(*half, *resolution)?,
        SetSpec::HalfPlane { half, resolution } => sets::half_plane(*half, *resolution)?,
        SetSpec::Segment { half, resolution } => sets::segment(*half, *resolution)?,
        SetSpec::Cylinder { radius, half_length, resolution } => {
            if !(*radius > 0.0 && *half_length > 0.0 && *resolution > 0.0) {
                bail!("cylinder needs positive radius, length and resolution");
            }
            let k = (std::f64::consts::TAU * radius / resolution).ceil().max(8.0) as usize;
            let zs = lattice(-half_length, *half_length, *resolution);
            let pts = zs
                .iter()
                .flat_map(|&z| {
                    (0..k).map(move |i| {
                        let t = std::f64::consts::TAU * i as f64 / k as f64;
                        vec![radius * t.cos(), radius * t.sin(), z]
                    })
                })
                .collect();
            let e = half_length - EDGE_CELLS * resolution;
            let inf = f64::INFINITY;
            ClosedSet::point_cloud("cylinder", pts, *resolution)?
                .with_window(Aabb { lo: vec![-inf, -inf, -e], hi: vec![inf, inf, e] })?
        }
        SetSpec::Slab { half, half_width, resolution } => {
            if !(*half > 0.0 && *half_width > 0.0 && *resolution > 0.0) {
                bail!("slab needs positive size, width and resolution");
            }
            let a = lattice(-half, *half, *resolution);
            let zs = lattice(-half_width, *half_width, *resolution);
            let mut pts = Vec::with_capacity(a.len() * a.len() * zs.len());
            for &x in &a {
                for &y in &a {
                    for &z in &zs {
                        pts.push(vec![x, y, z]);
                    }
                }
            }
            let e = half - EDGE_CELLS * resolution;
            let inf = f64::INFINITY;
            ClosedSet::point_cloud("slab", pts, *resolution)?
                .with_window(Aabb { lo: vec![-e, -e, -inf], hi: vec![e, e, inf] })?
        }
        SetSpec::Points { points, resolution } => ClosedSet::point_cloud("points", points.clone(), *resolution)?,
    })
}

pub fn varifold(spec: &VarifoldSpec) -> Result<DiscreteVarifold> {
    Ok(match spec {
        VarifoldSpec::UnitSquare { theta } => vfs::unit_square(*theta)?,
        VarifoldSpec::Plane { half, k } => vfs::plane_patch(*half, *k)?,
        VarifoldSpec::Disk { radius, k } => vfs::disk(*radius, *k)?,
        VarifoldSpec::Octasphere { radius, level } => {
            if *level > 7 {
                bail!("octasphere level {level} exceeds 7");
            }
            vfs::octasphere(*radius, *level)?
        }
        VarifoldSpec::Counterexample { n, resolution } => counterexample_sequence(*n, *resolution)?.varifold,
    })
}

pub fn family(spec: &FamilySpec) -> Result<Vec<DiscreteVarifold>> {
    Ok(match spec {
        FamilySpec::MultiplicityPlane { count, half, k } => vfs::multiplicity_plane_family(*count, *half, *k)?,
        FamilySpec::BoundedDisk { count, k } => vfs::bounded_disk_family(*count, *k)?,
        FamilySpec::HalfPlane { count, half, k } => vfs::half_plane_family(*count, *half, *k)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_and_slab_samples() {
        let c = closed_set(&SetSpec::Cylinder { radius: 0.5, half_length: 1.0, resolution: 0.05 }).unwrap();
        assert!(c.points().iter().all(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - 0.5).abs() < 1e-12));
        assert!(c.trusted(&[0.5, 0.0, 0.0]) && !c.trusted(&[0.5, 0.0, 0.95]));
        let s = closed_set(&SetSpec::Slab { half: 1.0, half_width: 0.2, resolution: 0.1 }).unwrap();
        assert_eq!(s.len(), 21 * 21 * 5);
        assert!(s.points().iter().all(|p| p[2].abs() <= 0.2 + 1e-12));
    }

    #[test]
    fn registry_names_are_unique_per_category() {
        let mut seen = std::collections::HashSet::new();
        for e in REGISTRY {
            assert!(seen.insert((e.category, e.name)), "{} listed twice", e.name);
        }
    }
}
