use super::complex::DiscreteVarifold;
use crate::error::{invalid, Result};
use serde::Serialize;

/// Bump `g(x) = 1 − x²` on `|x| < 1`, zero elsewhere.
pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        1.0 - x * x
    } else {
        0.0
    }
}

fn bump_slope(x: f64) -> f64 {
    if x.abs() < 1.0 {
        -2.0 * x
    } else {
        0.0
    }
}

/// `φ(t)`: 2 on `[1, 2]`, 1 on `[3, ∞)`, joined by the smooth monotone step
/// built from `e^{−1/s}`.
pub fn plateau(t: f64) -> f64 {
    let psi = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let s = (3.0 - t).clamp(0.0, 1.0);
    1.0 + psi(s) / (psi(s) + psi(1.0 - s))
}

/// Declared density of the `n`-th member at a support point.
pub fn declared_density(x: f64) -> f64 {
    if x.abs() < 1.0 {
        1.0
    } else {
        plateau(x.abs())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub n: usize,
    #[serde(skip)]
    pub varifold: DiscreteVarifold,
    /// Distance from the support to the segment `[−5,5]×{0}`.
    pub hausdorff_to_segment: f64,
    /// Angle between the graph branch and the axis at `(−1,0)` and `(1,0)`.
    pub tangent_angle_jump: [f64; 2],
    /// Exact jump `atan(2/n)` of the smooth curves.
    pub tangent_angle_limit: f64,
    pub mass: f64,
    /// One-dimensional quadrature of the declared density.
    pub mass_oracle: f64,
}

/// The `n`-th curve: the graph of `g/n` over `[−1, 1]` together with the
/// axis `[−5, 5]×{0}`, multiplicity 1 on each branch inside `|x| < 1` and
/// `φ(|x|)` on the merged axis outside.
pub fn counterexample_sequence(n: usize, resolution: f64) -> Result<Counterexample> {
    if n == 0 {
        return Err(invalid("sequence index starts at 1"));
    }
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(invalid("resolution must lie in (0, 0.5]"));
    }
    // a multiple of 10 cells puts ±1, ±2, ±3 on the lattice
    let cells = ((10.0 / resolution / 10.0).ceil() as usize) * 10;
    let step = 10.0 / cells as f64;
    let xs: Vec<f64> = (0..=cells).map(|i| -5.0 + i as f64 * step).collect();
    let scale = 1.0 / n as f64;
    let mut verts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 0.0]).collect();
    let mut faces = Vec::new();
    let mut theta = Vec::new();
    for i in 0..cells {
        faces.push(vec![i, i + 1]);
        theta.push(declared_density(0.5 * (xs[i] + xs[i + 1])));
    }
    let left = cells * 2 / 5;
    let right = cells * 3 / 5;
    let mut prev = left;
    for i in left + 1..=right {
        let id = if i == right {
            right
        } else {
            verts.push(vec![xs[i], scale * bump(xs[i])]);
            verts.len() - 1
        };
        faces.push(vec![prev, id]);
        theta.push(1.0);
        prev = id;
    }
    let graph_start = cells + 1;
    let first = &verts[graph_start];
    let last = &verts[verts.len() - 1];
    let jump_left = (first[1] / (first[0] - xs[left])).atan();
    let jump_right = (last[1] / (xs[right] - last[0])).atan();
    let hausdorff = verts.iter().map(|p| p[1].abs()).fold(0.0, f64::max);
    let vf = DiscreteVarifold::new(verts, faces, theta)?;
    let mass = super::mass(&vf, &super::Region::All);
    Ok(Counterexample {
        n,
        varifold: vf,
        hausdorff_to_segment: hausdorff,
        tangent_angle_jump: [jump_left, jump_right],
        tangent_angle_limit: (2.0 * scale).atan(),
        mass,
        mass_oracle: mass_oracle(n),
    })
}

/// Composite Simpson over the branches.
fn mass_oracle(n: usize) -> f64 {
    let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, k: usize| {
        let h = (b - a) / k as f64;
        let mut s = f(a) + f(b);
        for i in 1..k {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let scale = 1.0 / n as f64;
    let graph = simpson(&|x| (1.0 + (scale * bump_slope(x)).powi(2)).sqrt(), -1.0, 1.0, 20_000);
    let outer = simpson(&plateau, 1.0, 5.0, 40_000);
    graph + 2.0 + 2.0 * outer
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_profile() {
        assert_eq!(plateau(1.0), 2.0);
        assert_eq!(plateau(2.0), 2.0);
        assert_eq!(plateau(3.0), 1.0);
        assert_eq!(plateau(7.0), 1.0);
        let mut last = 2.0;
        for i in 0..=100 {
            let p = plateau(2.0 + i as f64 / 100.0);
            assert!(p <= last && (1.0..=2.0).contains(&p));
            last = p;
        }
    }

    #[test]
    fn closed_up_at_the_junctions() {
        let c = counterexample_sequence(3, 0.05).unwrap();
        let ends: Vec<f64> = c
            .varifold
            .boundary()
            .iter()
            .map(|b| c.varifold.vertices()[b.vertices[0]][0])
            .collect();
        assert_eq!(ends, vec![-5.0, 5.0]);
        assert!((c.mass - c.mass_oracle).abs() < 5e-3 * c.mass_oracle);
    }
}
