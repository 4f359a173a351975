//! Dense symmetric linear algebra for small dimensions.
//!
//! Everything here is a pure function of immutable values. Eigenvalues come
//! from cyclic Jacobi rotations in a fixed sweep order, so a given input
//! always produces bit-identical output.

use crate::error::{invalid, Result};
use crate::tol;
use serde::{Deserialize, Serialize};

/// Dense symmetric `n×n` form stored row-major. Symmetrized on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymForm {
    dim: usize,
    entries: Vec<f64>,
}

/// Ascending eigenvalues with the matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Per-index comparison of two spectra, `gaps[k] = λ_k(Qp) − λ_k(Q)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dominance {
    pub holds: bool,
    pub gaps: Vec<f64>,
}

impl SymForm {
    /// Builds a form from row-major entries, replacing `S` by `(S + Sᵀ)/2`.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} entries for a {dim}x{dim} form, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let mut entries = entries;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (entries[i * dim + j] + entries[j * dim + i]);
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg;
            }
        }
        Ok(SymForm { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("rows must form a square matrix"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn zeros(dim: usize) -> Self {
        SymForm {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut f = Self::zeros(dim);
        for i in 0..dim {
            f.entries[i * dim + i] = s;
        }
        f
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut f = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            f.entries[i * diag.len() + i] = *d;
        }
        f
    }

    /// `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let n = v.len();
        let mut f = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                f.entries[i * n + j] = v[i] * v[j];
            }
        }
        f
    }

    /// `V diag(values) Vᵀ` from orthonormal vectors.
    pub fn from_spectrum(values: &[f64], vectors: &[Vec<f64>]) -> Self {
        let n = values.len();
        let mut f = Self::zeros(n);
        for (lam, v) in values.iter().zip(vectors) {
            for i in 0..n {
                for j in 0..n {
                    f.entries[i * n + j] += lam * v[i] * v[j];
                }
            }
        }
        // exact symmetry
        SymForm::new(n, f.entries).expect("square by construction")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Sets `(i,j)` and `(j,i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
        self.entries[j * self.dim + i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }

    pub fn add(&self, other: &SymForm) -> Result<SymForm> {
        self.same_dim(other)?;
        Ok(SymForm {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &SymForm) -> Result<SymForm> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> SymForm {
        SymForm {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * c).collect(),
        }
    }

    /// `S + t·I`.
    pub fn shift(&self, t: f64) -> SymForm {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.entries[i * self.dim + i] += t;
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                self.entries[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `vᵀ S w`.
    pub fn pair(&self, v: &[f64], w: &[f64]) -> f64 {
        self.matvec(w).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Product `S·T` (generally not symmetric) as row-major entries.
    pub fn mul_dense(&self, other: &SymForm) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `S²`, which is symmetric.
    pub fn square(&self) -> SymForm {
        SymForm::new(self.dim, self.mul_dense(self)).expect("square by construction")
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Restriction `Bᵀ S B` to the span of the given orthonormal vectors.
    pub fn restrict(&self, basis: &[Vec<f64>]) -> SymForm {
        let k = basis.len();
        let images: Vec<Vec<f64>> = basis.iter().map(|b| self.matvec(b)).collect();
        let mut out = SymForm::zeros(k);
        for a in 0..k {
            for b in a..k {
                let v: f64 = basis[a].iter().zip(&images[b]).map(|(x, y)| x * y).sum();
                out.set(a, b, v);
            }
        }
        out
    }

    fn same_dim(&self, other: &SymForm) -> Result<()> {
        if self.dim != other.dim {
            return Err(invalid(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

/// Symmetric eigen decomposition by cyclic Jacobi rotations.
pub fn eigh(s: &SymForm) -> Result<EigenSystem> {
    if !s.is_finite() {
        return Err(invalid("form has non-finite entries"));
    }
    let n = s.dim;
    if n > tol::MAX_DIM {
        return Err(invalid(format!(
            "dimension {n} exceeds the dense solver limit {}",
            tol::MAX_DIM
        )));
    }
    let mut a = s.entries.clone();
    // v[i*n + k]: component i of eigenvector k
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = s.frobenius();
    if norm > 0.0 {
        for _sweep in 0..tol::JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum::<f64>()
                .sqrt();
            if off <= tol::JACOBI_OFFDIAG * norm {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, n, p, q);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep solver order
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i * n + k]).collect())
        .collect();
    Ok(EigenSystem { values, vectors })
}

fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

impl EigenSystem {
    /// `‖S − VΛVᵀ‖_F`.
    pub fn reconstruction_error(&self, s: &SymForm) -> f64 {
        let r = SymForm::from_spectrum(&self.values, &self.vectors);
        s.sub(&r).map(|d| d.frobenius()).unwrap_or(f64::INFINITY)
    }

    pub fn sum_lowest(&self, m: usize) -> f64 {
        self.values[..m].iter().sum()
    }
}

/// Sum of the `m` smallest eigenvalues.
pub fn trace_m(s: &SymForm, m: usize) -> Result<f64> {
    check_m(s.dim, m)?;
    Ok(eigh(s)?.sum_lowest(m))
}

/// `Trace_m(S + t·I)`; equals `trace_m(S, m) + m·t` up to rounding.
pub fn trace_m_of_shifted(s: &SymForm, m: usize, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(invalid("shift must be finite"));
    }
    trace_m(&s.shift(t), m)
}

pub(crate) fn check_m(dim: usize, m: usize) -> Result<()> {
    if m == 0 || m > dim {
        return Err(invalid(format!("m = {m} must lie in 1..={dim}")));
    }
    Ok(())
}

/// Checks `λ_k(Q) ≤ λ_k(Qp)` for every `k`, allowing rounding at the scale of the forms.
pub fn dominance_check(q: &SymForm, qp: &SymForm) -> Result<Dominance> {
    let slack = 64.0 * f64::EPSILON * (q.frobenius() + qp.frobenius()).max(1e-300);
    dominance_check_with_tol(q, qp, slack)
}

pub fn dominance_check_with_tol(q: &SymForm, qp: &SymForm, slack: f64) -> Result<Dominance> {
    q.same_dim(qp)?;
    let a = eigh(q)?;
    let b = eigh(qp)?;
    let gaps: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| y - x)
        .collect();
    let holds = gaps.iter().all(|g| *g >= -slack);
    Ok(Dominance { holds, gaps })
}

/// Lower-triangular Cholesky factor (row-major) of an SPD form.
pub fn cholesky(s: &SymForm) -> Result<Vec<f64>> {
    let n = s.dim;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = s.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(invalid("form is not positive definite"));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_solve(l: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// `L⁻¹ S L⁻ᵀ` where `g = L Lᵀ`: the form whose eigenvalues are those of `S`
/// measured against the inner product `g`.
pub fn normalize_by_metric(s: &SymForm, g: &SymForm) -> Result<SymForm> {
    s.same_dim(g)?;
    let n = s.dim;
    let l = cholesky(g)?;
    // columns of W = L⁻¹ S
    let mut w = vec![0.0; n * n];
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| s.get(i, j)).collect();
        let x = forward_solve(&l, &col);
        for i in 0..n {
            w[i * n + j] = x[i];
        }
    }
    // (L⁻¹ Wᵀ)ᵀ = W L⁻ᵀ since S is symmetric
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| w[i * n + j]).collect();
        let x = forward_solve(&l, &row);
        for j in 0..n {
            out[i * n + j] = x[j];
        }
    }
    SymForm::new(n, out)
}

/// Euclidean helpers shared across modules.
pub mod vec {
    #[inline]
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[inline]
    pub fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    #[inline]
    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    #[inline]
    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    #[inline]
    pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
        a.iter().map(|x| x * c).collect()
    }

    #[inline]
    pub fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Orthonormal basis of the complement of the unit vector `n`
    /// (Gram–Schmidt against the coordinate axes, in axis order).
    pub fn orthogonal_complement(n: &[f64]) -> Vec<Vec<f64>> {
        let d = n.len();
        let mut basis: Vec<Vec<f64>> = vec![n.to_vec()];
        // axes least aligned with n first, for conditioning
        let mut axes: Vec<usize> = (0..d).collect();
        axes.sort_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs()));
        for &ax in &axes {
            if basis.len() == d {
                break;
            }
            let mut e = vec![0.0; d];
            e[ax] = 1.0;
            for b in &basis {
                let c = dot(&e, b);
                for k in 0..d {
                    e[k] -= c * b[k];
                }
            }
            let len = norm(&e);
            if len > 1e-8 {
                basis.push(e.iter().map(|x| x / len).collect());
            }
        }
        basis.remove(0);
        basis
    }
}
