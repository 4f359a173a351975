//! Meshed varifolds with known measures.

use super::complex::DiscreteVarifold;
use crate::error::{invalid, Result};
use crate::linalg::vec as v;

/// Two triangles covering `[0,1]²` in the plane `x₃ = 0` of `R³`.
pub fn unit_square(theta: f64) -> Result<DiscreteVarifold> {
    DiscreteVarifold::new(
        vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]],
        vec![vec![0, 1, 2], vec![0, 2, 3]],
        vec![theta; 2],
    )
}

/// `k × k` squares split into `2k²` triangles, vertices `map(u, v)` for
/// `(u, v)` on the lattice of `[−1,1]²`.
fn square_lattice(k: usize, map: impl Fn(f64, f64) -> Vec<f64>) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let mut verts = Vec::with_capacity((k + 1) * (k + 1));
    for j in 0..=k {
        for i in 0..=k {
            let u = -1.0 + 2.0 * i as f64 / k as f64;
            let w = -1.0 + 2.0 * j as f64 / k as f64;
            verts.push(map(u, w));
        }
    }
    let id = |i: usize, j: usize| j * (k + 1) + i;
    let mut faces = Vec::with_capacity(2 * k * k);
    for j in 0..k {
        for i in 0..k {
            faces.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (verts, faces)
}

/// The square `[−half, half]²` in `x₃ = 0`, `2k²` faces.
pub fn plane_patch(half: f64, k: usize) -> Result<DiscreteVarifold> {
    if k == 0 || !(half > 0.0) {
        return Err(invalid("plane patch needs k ≥ 1 and a positive size"));
    }
    let (verts, faces) = square_lattice(k, |u, w| vec![half * u, half * w, 0.0]);
    let n = faces.len();
    DiscreteVarifold::new(verts, faces, vec![1.0; n])
}

/// Disk of the given radius in `x₃ = 0`: the square lattice pushed onto the
/// disk by the elliptical map, `2k²` faces.
pub fn disk(radius: f64, k: usize) -> Result<DiscreteVarifold> {
    if k == 0 || !(radius > 0.0) {
        return Err(invalid("disk needs k ≥ 1 and a positive radius"));
    }
    let (verts, faces) = square_lattice(k, |u, w| {
        vec![radius * u * (1.0 - 0.5 * w * w).sqrt(), radius * w * (1.0 - 0.5 * u * u).sqrt(), 0.0]
    });
    let n = faces.len();
    DiscreteVarifold::new(verts, faces, vec![1.0; n])
}

/// Octahedron subdivided `level` times and projected onto the sphere:
/// `8·4^level` outward-oriented faces.
pub fn octasphere(radius: f64, level: u32) -> Result<DiscreteVarifold> {
    if !(radius > 0.0) {
        return Err(invalid("sphere radius must be positive"));
    }
    let mut verts: Vec<Vec<f64>> = vec![
        vec![1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.0, -1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    for _ in 0..level {
        let mut mids: std::collections::HashMap<(usize, usize), usize> = Default::default();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec<f64>>| {
            *mids.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let p = v::add(&verts[a], &verts[b]);
                verts.push(v::scale(&p, 1.0 / v::norm(&p)));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|p| v::scale(&p, radius)).collect();
    let n = faces.len();
    DiscreteVarifold::new(verts, faces.into_iter().map(|f| f.to_vec()).collect(), vec![1.0; n])
}

/// `V_i = i·P` for `i = 1..=count`, `P` the plane patch.
pub fn multiplicity_plane_family(count: usize, half: f64, k: usize) -> Result<Vec<DiscreteVarifold>> {
    let p = plane_patch(half, k)?;
    (1..=count).map(|i| p.scaled_multiplicity(i as f64)).collect()
}

/// `count` copies of the unit disk with multiplicity 1.
pub fn bounded_disk_family(count: usize, k: usize) -> Result<Vec<DiscreteVarifold>> {
    let d = disk(1.0, k)?;
    Ok(vec![d; count])
}

/// Plane patch with `θ = i` on `{x₁ ≤ 0}` and `θ = 1` elsewhere (`k` even
/// so the lattice contains the line `x₁ = 0`).
pub fn half_plane_family(count: usize, half: f64, k: usize) -> Result<Vec<DiscreteVarifold>> {
    if !k.is_multiple_of(2) {
        return Err(invalid("half-plane family needs an even lattice"));
    }
    let p = plane_patch(half, k)?;
    (1..=count)
        .map(|i| {
            let theta = (0..p.len())
                .map(|f| if p.face_centroid(f)[0] <= 0.0 { i as f64 } else { 1.0 })
                .collect();
            p.with_multiplicities(theta)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_counts() {
        assert_eq!(disk(1.0, 32).unwrap().len(), 2048);
        assert_eq!(octasphere(1.0, 5).unwrap().len(), 8192);
        assert!(octasphere(1.0, 2).unwrap().boundary().is_empty());
        assert_eq!(plane_patch(1.0, 4).unwrap().boundary().len(), 16);
    }

    #[test]
    fn octasphere_is_outward() {
        let s = octasphere(2.0, 1).unwrap();
        for i in 0..s.len() {
            let p = s.face_points(i);
            let a = v::sub(p[1], p[0]);
            let b = v::sub(p[2], p[0]);
            let n = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            assert!(v::dot(&n, &s.face_centroid(i)) > 0.0);
        }
    }
}
