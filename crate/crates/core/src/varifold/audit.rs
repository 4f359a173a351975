use super::complex::DiscreteVarifold;
use super::measures::tangential_divergence;
use crate::error::{invalid, Result};
use crate::linalg::{trace_m, vec as v, SymForm};
use crate::par::Exec;
use crate::predicate::{Jet, TestFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Anything with an exact second-order jet.
pub trait SmoothFunction: Sync {
    fn jet(&self, x: &[f64]) -> Result<Jet>;
}

impl SmoothFunction for TestFunction {
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        TestFunction::jet(self, x)
    }
}

/// `c + b·y + ½yᵀAy + ⅙T(y,y,y)` with `y = x − center` and `T` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Cubic {
    pub center: Vec<f64>,
    pub constant: f64,
    pub linear: Vec<f64>,
    pub quadratic: SymForm,
    /// `T[i][j][k]`, symmetric in all indices, stored densely.
    pub cubic: Vec<f64>,
}

impl Cubic {
    /// Random coefficients in `[−scale, scale]`, symmetrized.
    pub fn random(center: Vec<f64>, scale: f64, seed: u64) -> Self {
        let n = center.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = |rng: &mut ChaCha8Rng| rng.gen_range(-scale..=scale);
        let constant = u(&mut rng);
        let linear = (0..n).map(|_| u(&mut rng)).collect();
        let mut a = SymForm::zeros(n);
        for i in 0..n {
            for j in i..n {
                a.set(i, j, u(&mut rng));
            }
        }
        let mut cubic = vec![0.0; n * n * n];
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let c = u(&mut rng);
                    for (p, q, r) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        cubic[(p * n + q) * n + r] = c;
                    }
                }
            }
        }
        Cubic { center, constant, linear, quadratic: a, cubic }
    }
}

impl SmoothFunction for Cubic {
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let n = self.center.len();
        if x.len() != n {
            return Err(invalid("cubic evaluated at a point of the wrong dimension"));
        }
        let y = v::sub(x, &self.center);
        let ay = self.quadratic.matvec(&y);
        let mut hess = self.quadratic.clone();
        let mut grad = v::add(&self.linear, &ay);
        let mut tyyy = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut tij = 0.0;
                for k in 0..n {
                    tij += self.cubic[(i * n + j) * n + k] * y[k];
                }
                if j >= i {
                    hess.set(i, j, hess.get(i, j) + tij);
                }
                grad[i] += 0.5 * tij * y[j];
                tyyy += tij * y[i] * y[j];
            }
        }
        let value = self.constant + v::dot(&self.linear, &y) + 0.5 * v::dot(&y, &ay) + tyyy / 6.0;
        Ok(Jet { value, grad, hess })
    }
}

/// `DX` for `X = ∇(½f²) = f∇f`: `f D²f + Df ⊗ Df`.
pub fn gradient_field_jacobian(jet: &Jet) -> SymForm {
    let mut dx = jet.hess.scale(jet.value);
    let n = jet.grad.len();
    for i in 0..n {
        for j in i..n {
            dx.set(i, j, dx.get(i, j) + jet.grad[i] * jet.grad[j]);
        }
    }
    dx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceAudit {
    pub face: usize,
    pub f: f64,
    /// Tangential divergence of the linear interpolant of `X` on the face.
    pub div_m: f64,
    /// Pointwise tangential trace of `DX` at the centroid.
    pub div_m_exact: f64,
    pub trace_m_dx: f64,
    pub f_trace_m_hess: f64,
    pub first_holds: bool,
    /// `None` where `f < 0`, where the second step is not claimed.
    pub second_holds: Option<bool>,
    /// `|div_m − div_m_exact|`, the variation of `X` across the face.
    pub discretization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceAudit {
    pub m: usize,
    pub tolerance: f64,
    pub holds_fraction: f64,
    pub faces: Vec<FaceAudit>,
}

impl DivergenceAudit {
    pub fn flagged(&self) -> impl Iterator<Item = &FaceAudit> {
        self.faces.iter().filter(|a| !a.first_holds || a.second_holds == Some(false))
    }
}

/// Per-face audit of `div_M X ≥ Trace_m(DX) ≥ f·Trace_m(D²f)` for
/// `X = f∇f`. The tolerance is `10⁻²` times the largest `‖DX‖_F` over
/// face centroids.
pub fn divergence_bound_audit(vf: &DiscreteVarifold, f: &dyn SmoothFunction) -> Result<DivergenceAudit> {
    let m = vf.m();
    let n = vf.dim();
    let rows = Exec::default().map(vf.len(), |i| -> Result<(FaceAudit, f64)> {
        let p = vf.face_points(i);
        let x_at = |q: &[f64]| -> Result<Vec<f64>> {
            let j = f.jet(q)?;
            Ok(v::scale(&j.grad, j.value))
        };
        let xs = p.iter().map(|q| x_at(q)).collect::<Result<Vec<_>>>()?;
        let edges: Vec<Vec<f64>> = p[1..].iter().map(|q| v::sub(q, p[0])).collect();
        let dxs: Vec<Vec<f64>> = xs[1..].iter().map(|x| v::sub(x, &xs[0])).collect();
        let div_m = p1_divergence(&edges, &dxs);
        let c = vf.face_centroid(i);
        let jet = f.jet(&c)?;
        let dx = gradient_field_jacobian(&jet);
        let mut dense = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                dense[a * n + b] = dx.get(a, b);
            }
        }
        let div_m_exact = tangential_divergence(&dense, &vf.tangent_basis(i));
        let trace_m_dx = trace_m(&dx, m)?;
        let f_trace_m_hess = jet.value * trace_m(&jet.hess, m)?;
        let row = FaceAudit {
            face: i,
            f: jet.value,
            div_m,
            div_m_exact,
            trace_m_dx,
            f_trace_m_hess,
            first_holds: false,
            second_holds: None,
            discretization: (div_m - div_m_exact).abs(),
        };
        Ok((row, dx.frobenius()))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let scale = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let tolerance = 1e-2 * scale.max(f64::MIN_POSITIVE);
    let mut faces: Vec<FaceAudit> = rows.into_iter().map(|r| r.0).collect();
    let mut good = 0usize;
    for a in &mut faces {
        a.first_holds = a.div_m >= a.trace_m_dx - tolerance;
        if a.f >= 0.0 {
            a.second_holds = Some(a.trace_m_dx >= a.f_trace_m_hess - tolerance);
        }
        if a.first_holds && a.second_holds != Some(false) {
            good += 1;
        }
    }
    let holds_fraction = if faces.is_empty() { 1.0 } else { good as f64 / faces.len() as f64 };
    Ok(DivergenceAudit { m, tolerance, holds_fraction, faces })
}

/// Tangential divergence of the affine map taking edge `eᵢ` to `ΔXᵢ`:
/// `Σ G^{ij} ΔXᵢ·eⱼ` with `G` the edge Gram matrix.
fn p1_divergence(edges: &[Vec<f64>], dxs: &[Vec<f64>]) -> f64 {
    match edges.len() {
        1 => v::dot(&dxs[0], &edges[0]) / v::dot(&edges[0], &edges[0]),
        _ => {
            let g = [
                [v::dot(&edges[0], &edges[0]), v::dot(&edges[0], &edges[1])],
                [v::dot(&edges[1], &edges[0]), v::dot(&edges[1], &edges[1])],
            ];
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += inv[i][j] * v::dot(&dxs[i], &edges[j]);
                }
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_jet_matches_differences() {
        let c = Cubic::random(vec![0.1, -0.2, 0.3], 1.0, 4);
        let x = [0.4, 0.5, -0.6];
        let j = c.jet(&x).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut a = x;
            let mut b = x;
            a[k] += h;
            b[k] -= h;
            let (ja, jb) = (c.jet(&a).unwrap(), c.jet(&b).unwrap());
            assert!(((ja.value - jb.value) / (2.0 * h) - j.grad[k]).abs() < 1e-8);
            for l in 0..3 {
                let d = (ja.grad[l] - jb.grad[l]) / (2.0 * h);
                assert!((d - j.hess.get(k, l)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn p1_divergence_is_exact_for_affine_fields() {
        // X(x) = Bx with B = [[1,2,0],[0,3,0],[1,1,1]]; tangential trace on x₃ = 0 is 1 + 3
        let b = |x: &[f64]| vec![x[0] + 2.0 * x[1], 3.0 * x[1], x[0] + x[1] + x[2]];
        let p = [vec![0.1, 0.0, 0.0], vec![1.0, 0.2, 0.0], vec![0.3, 0.9, 0.0]];
        let edges: Vec<Vec<f64>> = p[1..].iter().map(|q| v::sub(q, &p[0])).collect();
        let dxs: Vec<Vec<f64>> = p[1..].iter().map(|q| v::sub(&b(q), &b(&p[0]))).collect();
        assert!((p1_divergence(&edges, &dxs) - 4.0).abs() < 1e-13);
    }
}
