use crate::error::{invalid, Result};
use crate::linalg::vec as v;
use crate::mesh::OffMesh;
use crate::tol;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// An oriented `(m−1)`-cell of the boundary chain.
///
/// `vertices` are sorted; the orientation is carried by the sign of
/// `coefficient`, relative to the sorted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCell {
    pub vertices: Vec<usize>,
    pub coefficient: f64,
    /// Face the cell bounds, used to orient the conormal.
    #[serde(default)]
    pub face: usize,
}

/// Multiplicities and boundary chain stored next to an OFF mesh.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<BoundaryCell>>,
}

/// A triangulated `m`-complex in `Rⁿ` with a nonnegative multiplicity per
/// face (`m = 1` for polygonal curves, `m = 2` for triangle meshes).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVarifold {
    dim: usize,
    m: usize,
    vertices: Vec<Vec<f64>>,
    faces: Vec<Vec<usize>>,
    theta: Vec<f64>,
    boundary: Vec<BoundaryCell>,
}

impl DiscreteVarifold {
    /// Builds the complex and derives its boundary chain.
    pub fn new(vertices: Vec<Vec<f64>>, faces: Vec<Vec<usize>>, theta: Vec<f64>) -> Result<Self> {
        let dim = vertices.first().map_or(0, |p| p.len());
        if dim == 0 || vertices.iter().any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite())) {
            return Err(invalid("vertices need a common positive dimension and finite coordinates"));
        }
        let m = faces.first().map_or(0, |f| f.len().saturating_sub(1));
        if !(1..=2).contains(&m) || m >= dim {
            return Err(invalid(format!("unsupported face size for dimension {dim}")));
        }
        if faces.iter().any(|f| f.len() != m + 1 || f.iter().any(|&i| i >= vertices.len())) {
            return Err(invalid("faces must share one size and index existing vertices"));
        }
        if theta.len() != faces.len() || theta.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("one finite nonnegative multiplicity per face is required"));
        }
        let mut out = DiscreteVarifold { dim, m, vertices, faces, theta, boundary: Vec::new() };
        let scale = out.scale();
        let min_area = tol::FACE_AREA * scale.powi(m as i32);
        if let Some(i) = (0..out.faces.len()).find(|&i| !(out.face_measure(i) > min_area)) {
            return Err(invalid(format!("face {i} is degenerate")));
        }
        out.boundary = out.algebraic_boundary()?;
        Ok(out)
    }

    /// Reads an OFF mesh; without a sidecar every multiplicity is 1. A
    /// sidecar boundary chain must agree with the derived one.
    pub fn from_off(mesh: &OffMesh, sidecar: Option<&Sidecar>) -> Result<Self> {
        let theta = match sidecar.and_then(|s| s.multiplicities.clone()) {
            Some(t) => t,
            None => vec![1.0; mesh.faces.len()],
        };
        let out = Self::new(mesh.vertices.clone(), mesh.faces.clone(), theta)?;
        if let Some(declared) = sidecar.and_then(|s| s.boundary.as_ref()) {
            out.check_declared_boundary(declared)?;
        }
        Ok(out)
    }

    pub fn to_off(&self) -> (OffMesh, Sidecar) {
        let mesh = OffMesh { vertices: self.vertices.clone(), faces: self.faces.clone() };
        let sidecar = Sidecar {
            multiplicities: Some(self.theta.clone()),
            boundary: Some(self.boundary.clone()),
        };
        (mesh, sidecar)
    }

    fn check_declared_boundary(&self, declared: &[BoundaryCell]) -> Result<()> {
        let key = |c: &BoundaryCell| {
            let mut vs = c.vertices.clone();
            vs.sort_unstable();
            vs
        };
        let derived: BTreeMap<Vec<usize>, f64> =
            self.boundary.iter().map(|c| (c.vertices.clone(), c.coefficient)).collect();
        let mut seen = 0;
        for c in declared {
            let k = key(c);
            if c.vertices.len() != self.m {
                return Err(invalid("boundary cell has the wrong number of vertices"));
            }
            // declared cells may list vertices in any order; fold the permutation parity in
            let coeff = if permutation_is_odd(&c.vertices) { -c.coefficient } else { c.coefficient };
            match derived.get(&k) {
                Some(d) if (d - coeff).abs() <= tol::MULTIPLICITY * d.abs().max(1.0) => seen += 1,
                _ => return Err(invalid(format!("declared boundary cell {k:?} disagrees with the complex"))),
            }
        }
        if seen != derived.len() {
            return Err(invalid("declared boundary chain is missing cells"));
        }
        Ok(())
    }

    /// Weighted algebraic boundary restricted to cells whose adjacent faces
    /// share one multiplicity. Cells on a multiplicity jump are skipped.
    fn algebraic_boundary(&self) -> Result<Vec<BoundaryCell>> {
        let mut cells: BTreeMap<Vec<usize>, (f64, Vec<usize>)> = BTreeMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for (cell, sign) in oriented_facets(f) {
                let e = cells.entry(cell).or_insert((0.0, Vec::new()));
                e.0 += sign * self.theta[fi];
                e.1.push(fi);
            }
        }
        let mut out = Vec::new();
        for (cell, (coeff, adj)) in cells {
            let t0 = self.theta[adj[0]];
            let constant = adj.iter().all(|&f| (self.theta[f] - t0).abs() <= tol::MULTIPLICITY * t0.max(1.0));
            if !constant || t0 == 0.0 {
                continue;
            }
            if coeff.abs() <= tol::MULTIPLICITY * t0.max(1.0) {
                continue;
            }
            if adj.len() > 1 {
                return Err(invalid(format!("faces around cell {cell:?} are inconsistently oriented")));
            }
            out.push(BoundaryCell { vertices: cell, coefficient: coeff, face: adj[0] });
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }
    pub fn multiplicities(&self) -> &[f64] {
        &self.theta
    }
    pub fn boundary(&self) -> &[BoundaryCell] {
        &self.boundary
    }
    pub fn len(&self) -> usize {
        self.faces.len()
    }
    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Same complex with every multiplicity multiplied by `c ≥ 0`.
    pub fn scaled_multiplicity(&self, c: f64) -> Result<Self> {
        let theta = self.theta.iter().map(|t| t * c).collect();
        self.with_multiplicities(theta)
    }

    pub fn with_multiplicities(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.vertices.clone(), self.faces.clone(), theta)
    }

    /// Diagonal of the vertex bounding box.
    pub fn scale(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in &self.vertices {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let d = v::dist(&lo, &hi);
        if d > 0.0 {
            d
        } else {
            1.0
        }
    }

    pub fn face_points(&self, i: usize) -> Vec<&[f64]> {
        self.faces[i].iter().map(|&k| self.vertices[k].as_slice()).collect()
    }

    /// Length or area of face `i`.
    pub fn face_measure(&self, i: usize) -> f64 {
        simplex_measure(&self.face_points(i))
    }

    /// Longest edge of face `i`.
    pub fn face_diameter(&self, i: usize) -> f64 {
        let p = self.face_points(i);
        let mut d: f64 = 0.0;
        for a in 0..p.len() {
            for b in a + 1..p.len() {
                d = d.max(v::dist(p[a], p[b]));
            }
        }
        d
    }

    pub fn face_centroid(&self, i: usize) -> Vec<f64> {
        centroid(&self.face_points(i))
    }

    /// Orthonormal basis of the plane of face `i`.
    pub fn tangent_basis(&self, i: usize) -> Vec<Vec<f64>> {
        let p = self.face_points(i);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(self.m);
        for q in &p[1..] {
            let mut w = v::sub(q, p[0]);
            for b in &basis {
                w = v::sub(&w, &v::scale(b, v::dot(&w, b)));
            }
            let n = v::norm(&w);
            basis.push(v::scale(&w, 1.0 / n));
        }
        basis
    }

    pub fn cell_points(&self, c: &BoundaryCell) -> Vec<&[f64]> {
        c.vertices.iter().map(|&k| self.vertices[k].as_slice()).collect()
    }

    /// Unit conormal of a boundary cell: tangent to its face, normal to the
    /// cell, pointing out of the face.
    pub fn conormal(&self, c: &BoundaryCell) -> Vec<f64> {
        let cell = self.cell_points(c);
        let face = &self.faces[c.face];
        let apex = face.iter().find(|k| !c.vertices.contains(k)).map(|&k| &self.vertices[k]);
        let apex = apex.expect("boundary cell belongs to its face");
        let mut w = v::sub(cell[0], apex);
        if cell.len() == 2 {
            let e = v::sub(cell[1], cell[0]);
            let e = v::scale(&e, 1.0 / v::norm(&e));
            w = v::sub(&w, &v::scale(&e, v::dot(&w, &e)));
        }
        v::scale(&w, 1.0 / v::norm(&w))
    }
}

/// Oriented codimension-one faces of a simplex with their signs.
fn oriented_facets(f: &[usize]) -> Vec<(Vec<usize>, f64)> {
    match f.len() {
        2 => vec![(vec![f[1]], 1.0), (vec![f[0]], -1.0)],
        _ => [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])]
            .iter()
            .map(|&(a, b)| if a < b { (vec![a, b], 1.0) } else { (vec![b, a], -1.0) })
            .collect(),
    }
}

fn permutation_is_odd(vs: &[usize]) -> bool {
    let mut inversions = 0;
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            if vs[i] > vs[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

pub(crate) fn centroid(p: &[&[f64]]) -> Vec<f64> {
    let n = p[0].len();
    let mut c = vec![0.0; n];
    for q in p {
        for k in 0..n {
            c[k] += q[k];
        }
    }
    v::scale(&c, 1.0 / p.len() as f64)
}

/// Length of a segment or area of a triangle in any ambient dimension.
pub(crate) fn simplex_measure(p: &[&[f64]]) -> f64 {
    match p.len() {
        1 => 1.0,
        2 => v::dist(p[0], p[1]),
        _ => {
            let a = v::sub(p[1], p[0]);
            let b = v::sub(p[2], p[0]);
            let g = v::dot(&a, &a) * v::dot(&b, &b) - v::dot(&a, &b).powi(2);
            0.5 * g.max(0.0).sqrt()
        }
    }
}

/// Children of one midpoint subdivision step: 2 for a segment, 4 for a triangle.
pub(crate) fn subdivide(p: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let mid = |a: &[f64], b: &[f64]| v::scale(&v::add(a, b), 0.5);
    match p.len() {
        2 => {
            let c = mid(&p[0], &p[1]);
            vec![vec![p[0].clone(), c.clone()], vec![c, p[1].clone()]]
        }
        _ => {
            let (ab, bc, ca) = (mid(&p[0], &p[1]), mid(&p[1], &p[2]), mid(&p[2], &p[0]));
            vec![
                vec![p[0].clone(), ab.clone(), ca.clone()],
                vec![ab.clone(), p[1].clone(), bc.clone()],
                vec![ca.clone(), bc.clone(), p[2].clone()],
                vec![ab, bc, ca],
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> DiscreteVarifold {
        DiscreteVarifold::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]
                .into_iter()
                .map(|mut p| {
                    p.push(0.0);
                    p
                })
                .collect(),
            vec![vec![0, 1, 2], vec![0, 2, 3]],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn square_boundary_is_the_four_sides() {
        let s = square();
        assert_eq!(s.boundary().len(), 4);
        let total: f64 = s.boundary().iter().map(|c| simplex_measure(&s.cell_points(c))).sum();
        assert!((total - 4.0).abs() < 1e-15);
        for c in s.boundary() {
            let nu = s.conormal(c);
            let mid = centroid(&s.cell_points(c));
            // conormals point away from the square's centre
            assert!(v::dot(&nu, &v::sub(&mid, &[0.5, 0.5, 0.0])) > 0.0);
        }
    }

    #[test]
    fn rejects_flipped_neighbour_and_degenerate_faces() {
        let p: Vec<Vec<f64>> = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert!(DiscreteVarifold::new(p.clone(), vec![vec![0, 1, 2], vec![0, 3, 2]], vec![1.0, 1.0]).is_err());
        let flat = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]];
        assert!(DiscreteVarifold::new(flat, vec![vec![0, 1, 2]], vec![1.0]).is_err());
    }

    #[test]
    fn multiplicity_jump_is_not_boundary() {
        let p: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        let c = DiscreteVarifold::new(p, vec![vec![0, 1], vec![1, 2]], vec![2.0, 1.0]).unwrap();
        let ends: Vec<Vec<usize>> = c.boundary().iter().map(|b| b.vertices.clone()).collect();
        assert_eq!(ends, vec![vec![0], vec![2]]);
        assert_eq!(c.boundary()[0].coefficient, -2.0);
    }

    #[test]
    fn off_round_trip_checks_the_sidecar() {
        let s = square().scaled_multiplicity(3.0).unwrap();
        let (mesh, side) = s.to_off();
        let text = serde_json::to_string(&side).unwrap();
        let back: Sidecar = serde_json::from_str(&text).unwrap();
        let again = DiscreteVarifold::from_off(&OffMesh::parse(&mesh.to_off()).unwrap(), Some(&back)).unwrap();
        assert_eq!(again, s);
        let mut wrong = back.clone();
        wrong.boundary.as_mut().unwrap()[0].coefficient *= 2.0;
        assert!(DiscreteVarifold::from_off(&mesh, Some(&wrong)).is_err());
        let mut short = back;
        short.boundary.as_mut().unwrap().pop();
        assert!(DiscreteVarifold::from_off(&mesh, Some(&short)).is_err());
    }

    #[test]
    fn subdivision_preserves_measure() {
        let tri = vec![vec![0.0, 0.0, 0.0], vec![2.0, 0.0, 1.0], vec![0.5, 1.0, 0.0]];
        let whole = simplex_measure(&tri.iter().map(|p| p.as_slice()).collect::<Vec<_>>());
        let parts: f64 = subdivide(&tri)
            .iter()
            .map(|c| simplex_measure(&c.iter().map(|p| p.as_slice()).collect::<Vec<_>>()))
            .sum();
        assert!((whole - parts).abs() < 1e-14);
    }
}
