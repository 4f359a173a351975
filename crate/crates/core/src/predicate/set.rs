use crate::error::{invalid, MhError, Result};
use crate::fields::Grid;
use crate::linalg::vec as v;
use crate::mesh::OffMesh;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Axis-aligned box; infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn unbounded(dim: usize) -> Self {
        Aabb {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    /// Moves every finite face inward by `by`.
    pub fn shrink(&self, by: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().map(|l| if l.is_finite() { l + by } else { *l }).collect(),
            hi: self.hi.iter().map(|h| if h.is_finite() { h - by } else { *h }).collect(),
        }
    }

    /// Smallest finite width, if any axis is bounded.
    pub fn min_finite_width(&self) -> Option<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .filter(|(l, h)| l.is_finite() && h.is_finite())
            .map(|(l, h)| h - l)
            .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.min(w))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetSource {
    PointCloud,
    GridMask,
    TriangleMesh,
}

/// A closed set `Z ⊂ Rⁿ`, represented by samples and a resolution radius.
///
/// A point is in the discretized set when it lies within the resolution of a
/// sample. The optional trust window marks where the samples represent `Z`
/// faithfully; fixtures that truncate an unbounded set use it to exclude
/// artificial edges.
#[derive(Debug, Clone)]
pub struct ClosedSet {
    id: String,
    dim: usize,
    points: Vec<Vec<f64>>,
    resolution: f64,
    window: Aabb,
    source: SetSource,
    index: CellIndex,
}

impl ClosedSet {
    pub fn point_cloud(id: impl Into<String>, points: Vec<Vec<f64>>, resolution: f64) -> Result<Self> {
        Self::build(id.into(), points, resolution, SetSource::PointCloud)
    }

    /// Nodes of `grid` whose flag is set; resolution is the largest spacing.
    pub fn from_grid_mask(id: impl Into<String>, grid: &Grid, mask: &[bool]) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(invalid("mask needs one flag per node"));
        }
        let points = (0..grid.len())
            .filter(|&i| mask[i])
            .map(|i| grid.node_flat(i))
            .collect();
        Self::build(id.into(), points, grid.max_spacing(), SetSource::GridMask)
    }

    /// Vertices and edge midpoints of a mesh; resolution is half the longest edge.
    pub fn from_mesh(id: impl Into<String>, mesh: &OffMesh) -> Result<Self> {
        let mut points = mesh.vertices.clone();
        let mut longest: f64 = 0.0;
        let mut seen = std::collections::BTreeSet::new();
        for f in &mesh.faces {
            for k in 0..f.len() {
                let (a, b) = (f[k], f[(k + 1) % f.len()]);
                if f.len() == 2 && k == 1 {
                    break;
                }
                let key = (a.min(b), a.max(b));
                if seen.insert(key) {
                    let (pa, pb) = (&mesh.vertices[a], &mesh.vertices[b]);
                    longest = longest.max(v::dist(pa, pb));
                    points.push(v::scale(&v::add(pa, pb), 0.5));
                }
            }
        }
        let res = if longest > 0.0 { 0.5 * longest } else { 1.0 };
        Self::build(id.into(), points, res, SetSource::TriangleMesh)
    }

    fn build(id: String, points: Vec<Vec<f64>>, resolution: f64, source: SetSource) -> Result<Self> {
        if points.is_empty() {
            return Err(MhError::EmptySet);
        }
        if !(resolution > 0.0) {
            return Err(invalid("resolution radius must be positive"));
        }
        let dim = points[0].len();
        if dim == 0 || points.iter().any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite())) {
            return Err(invalid("points must be finite and share one dimension"));
        }
        let index = CellIndex::new(&points, crate::tol::MAX_NEIGHBOURHOOD * resolution);
        Ok(ClosedSet {
            id,
            dim,
            window: Aabb::unbounded(dim),
            points,
            resolution,
            source,
            index,
        })
    }

    pub fn with_window(mut self, window: Aabb) -> Result<Self> {
        if window.lo.len() != self.dim || window.hi.len() != self.dim {
            return Err(invalid("window dimension mismatch"));
        }
        self.window = window;
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    pub fn window(&self) -> &Aabb {
        &self.window
    }
    pub fn source(&self) -> SetSource {
        self.source
    }

    pub fn trusted(&self, p: &[f64]) -> bool {
        self.window.contains(p)
    }

    pub fn bounding_box(&self) -> Aabb {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in &self.points {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Aabb { lo, hi }
    }

    pub fn centroid_of_box(&self) -> Vec<f64> {
        let b = self.bounding_box();
        b.lo.iter().zip(&b.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Bounding-box diagonal, or 1 for a single point.
    pub fn length_scale(&self) -> f64 {
        let b = self.bounding_box();
        let d = v::dist(&b.lo, &b.hi);
        if d > 0.0 {
            d
        } else {
            1.0
        }
    }

    /// Sample indices within `radius` of `p`.
    pub fn within(&self, p: &[f64], radius: f64) -> Vec<usize> {
        self.index
            .candidates(p, radius)
            .into_iter()
            .filter(|&j| v::dist(&self.points[j], p) <= radius)
            .collect()
    }

    /// Whether `pred` holds for every sample within `radius` of `p`; stops
    /// at the first failure, visiting the nearest cells first.
    pub fn all_within(&self, p: &[f64], radius: f64, mut pred: impl FnMut(usize) -> bool) -> bool {
        self.index.visit(p, radius, |j| {
            if v::dist(&self.points[j], p) <= radius {
                pred(j)
            } else {
                true
            }
        })
    }

    /// Distance from `p` to the nearest sample (brute force beyond the index radius).
    pub fn distance(&self, p: &[f64]) -> f64 {
        let near = self.index.candidates(p, self.index.cell);
        let local = near
            .iter()
            .map(|&j| v::dist(&self.points[j], p))
            .fold(f64::INFINITY, f64::min);
        if local <= self.index.cell {
            return local;
        }
        self.points
            .iter()
            .map(|q| v::dist(q, p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `p` belongs to the discretized set.
    pub fn contains(&self, p: &[f64]) -> bool {
        self.distance(p) <= self.resolution
    }
}

/// Uniform hash of sample indices by cell.
#[derive(Debug, Clone)]
struct CellIndex {
    cell: f64,
    map: HashMap<Vec<i64>, Vec<usize>>,
    /// Offsets of the 3ⁿ neighbouring cells, centre first.
    ring: Vec<Vec<i64>>,
}

impl CellIndex {
    fn new(points: &[Vec<f64>], cell: f64) -> Self {
        let mut map: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i);
        }
        let n = points.first().map_or(0, |p| p.len());
        let mut ring: Vec<Vec<i64>> = (0..3usize.pow(n as u32))
            .map(|t| (0..n).map(|k| (t / 3usize.pow(k as u32) % 3) as i64 - 1).collect())
            .collect();
        ring.sort_by_key(|o: &Vec<i64>| o.iter().map(|x| x.abs()).sum::<i64>());
        CellIndex { cell, map, ring }
    }

    /// Calls `f` on candidates until it returns false.
    fn visit(&self, p: &[f64], radius: f64, mut f: impl FnMut(usize) -> bool) -> bool {
        let center = Self::key(p, self.cell);
        if radius <= self.cell {
            let mut key = center.clone();
            for off in &self.ring {
                for (k, o) in key.iter_mut().zip(center.iter().zip(off)) {
                    *k = o.0 + o.1;
                }
                if let Some(ids) = self.map.get(&key) {
                    if !ids.iter().all(|&j| f(j)) {
                        return false;
                    }
                }
            }
            return true;
        }
        self.candidates(p, radius).into_iter().all(f)
    }

    fn key(p: &[f64], cell: f64) -> Vec<i64> {
        p.iter().map(|x| (x / cell).floor() as i64).collect()
    }

    /// Indices in the cells overlapping the cube of half-width `radius`, ascending.
    fn candidates(&self, p: &[f64], radius: f64) -> Vec<usize> {
        let reach = (radius / self.cell).ceil() as i64;
        let center = Self::key(p, self.cell);
        let n = p.len();
        let side = (2 * reach + 1) as usize;
        let mut out = Vec::new();
        let mut key = vec![0i64; n];
        for t in 0..side.pow(n as u32) {
            let mut rem = t;
            for k in 0..n {
                key[k] = center[k] - reach + (rem % side) as i64;
                rem /= side;
            }
            if let Some(ids) = self.map.get(&key) {
                out.extend_from_slice(ids);
            }
        }
        out.sort_unstable();
        out
    }
}
