use crate::error::{invalid, MhError, Result};
use crate::linalg::{self, SymForm};
use crate::tol;
use serde::{Deserialize, Serialize};

/// Uniform box grid. Node `(i_0, …, i_{n−1})` sits at `lower + i·spacing`;
/// flat indices run with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

/// Serialized form of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = MhError;
    fn try_from(s: GridSpec) -> Result<Self> {
        Grid::new(s.lower, s.upper, s.counts)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec {
            lower: g.lower,
            upper: g.upper,
            counts: g.counts,
        }
    }
}

pub const MIN_NODES: usize = 8;
pub const MAX_DIM: usize = 4;

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let n = lower.len();
        if n == 0 || n > MAX_DIM || upper.len() != n || counts.len() != n {
            return Err(invalid(format!(
                "grid needs matching corners and counts of dimension 1..={MAX_DIM}"
            )));
        }
        for k in 0..n {
            if !(lower[k].is_finite() && upper[k].is_finite()) || upper[k] <= lower[k] {
                return Err(invalid(format!("axis {k}: upper corner must exceed lower")));
            }
            if counts[k] < MIN_NODES {
                return Err(invalid(format!(
                    "axis {k}: at least {MIN_NODES} nodes required, got {}",
                    counts[k]
                )));
            }
        }
        let spacing = (0..n)
            .map(|k| (upper[k] - lower[k]) / (counts[k] - 1) as f64)
            .collect();
        let mut strides = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * counts[k + 1];
        }
        Ok(Grid {
            lower,
            upper,
            counts,
            spacing,
            strides,
        })
    }

    /// Cube `[-half, half]^dim` with `count` nodes per axis.
    pub fn cube(dim: usize, half: f64, count: usize) -> Result<Self> {
        Self::new(vec![-half; dim], vec![half; dim], vec![count; dim])
    }

    /// Cube centred at the origin whose spacing is exactly `dx` and which
    /// covers at least `[-half, half]`.
    pub fn cube_with_spacing(dim: usize, half: f64, dx: f64) -> Result<Self> {
        let cells = (half / dx).ceil() as usize;
        let h = cells as f64 * dx;
        Self::cube(dim, h, 2 * cells + 1)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }
    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }
    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Longest box side.
    pub fn scale(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.upper[k] - self.lower[k])
            .fold(0.0, f64::max)
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in 0..self.dim() {
            idx[k] = flat / self.strides[k];
            flat %= self.strides[k];
        }
        idx
    }

    pub fn node(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.dim())
            .map(|k| self.lower[k] + idx[k] as f64 * self.spacing[k])
            .collect()
    }

    pub fn node_flat(&self, flat: usize) -> Vec<f64> {
        self.node(&self.unflat(flat))
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && (0..self.dim()).all(|k| p[k] >= self.lower[k] && p[k] <= self.upper[k])
    }

    /// True when `p` is at least `cells` cells away from every face of the box.
    pub fn has_margin(&self, p: &[f64], cells: usize) -> bool {
        let slack = 1e-9;
        p.len() == self.dim()
            && (0..self.dim()).all(|k| {
                let m = cells as f64 * self.spacing[k] * (1.0 - slack);
                p[k] >= self.lower[k] + m && p[k] <= self.upper[k] - m
            })
    }

    pub fn require_margin(&self, p: &[f64], cells: usize) -> Result<()> {
        if self.has_margin(p, cells) {
            Ok(())
        } else {
            Err(MhError::OutOfDomain {
                point: p.to_vec(),
                margin: cells,
            })
        }
    }

    /// Lower cell corner and fractional offsets of `p` (clamped into the box).
    pub fn locate(&self, p: &[f64]) -> (Vec<usize>, Vec<f64>) {
        let mut base = vec![0; self.dim()];
        let mut frac = vec![0.0; self.dim()];
        for k in 0..self.dim() {
            let s = ((p[k] - self.lower[k]) / self.spacing[k]).clamp(0.0, (self.counts[k] - 1) as f64);
            let i = (s.floor() as usize).min(self.counts[k] - 2);
            base[k] = i;
            frac[k] = s - i as f64;
        }
        (base, frac)
    }

    /// Multilinear interpolation weights: `(flat index, weight)` for the `2^n` cell corners.
    pub fn corner_weights(&self, p: &[f64]) -> Vec<(usize, f64)> {
        let (base, frac) = self.locate(p);
        let n = self.dim();
        let mut out = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            for k in 0..n {
                let bit = (mask >> k) & 1;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                flat += (base[k] + bit) * self.strides[k];
            }
            out.push((flat, w));
        }
        out
    }

    /// Same grid with every coordinate multiplied by `lambda`.
    pub fn dilate(&self, lambda: f64) -> Result<Grid> {
        if !(lambda > 0.0) {
            return Err(invalid("dilation factor must be positive"));
        }
        Grid::new(
            self.lower.iter().map(|x| x * lambda).collect(),
            self.upper.iter().map(|x| x * lambda).collect(),
            self.counts.clone(),
        )
    }

    /// 1D first-derivative stencil at index `i` along an axis with `n` nodes.
    pub(crate) fn d1_stencil(i: usize, n: usize, h: f64) -> [(isize, f64); 3] {
        if i == 0 {
            [(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]
        } else if i == n - 1 {
            [(0, 1.5 / h), (-1, -2.0 / h), (-2, 0.5 / h)]
        } else {
            [(-1, -0.5 / h), (1, 0.5 / h), (0, 0.0)]
        }
    }

    /// 1D second-derivative stencil (second order, one-sided at the ends).
    pub(crate) fn d2_stencil(i: usize, n: usize, h: f64) -> [(isize, f64); 4] {
        let h2 = h * h;
        if i == 0 {
            [(0, 2.0 / h2), (1, -5.0 / h2), (2, 4.0 / h2), (3, -1.0 / h2)]
        } else if i == n - 1 {
            [(0, 2.0 / h2), (-1, -5.0 / h2), (-2, 4.0 / h2), (-3, -1.0 / h2)]
        } else {
            [(-1, 1.0 / h2), (0, -2.0 / h2), (1, 1.0 / h2), (0, 0.0)]
        }
    }

    #[inline]
    pub(crate) fn offset(&self, flat: usize, axis: usize, by: isize) -> usize {
        (flat as isize + by * self.strides[axis] as isize) as usize
    }

    /// Node gradient of `values` by central (one-sided at the box) differences.
    pub(crate) fn node_gradient(&self, values: &[f64], flat: usize) -> Vec<f64> {
        let idx = self.unflat(flat);
        (0..self.dim())
            .map(|k| {
                Grid::d1_stencil(idx[k], self.counts[k], self.spacing[k])
                    .iter()
                    .filter(|(_, w)| *w != 0.0)
                    .map(|&(o, w)| w * values[self.offset(flat, k, o)])
                    .sum()
            })
            .collect()
    }

    /// Node Hessian of `values`; mixed terms are products of 1D stencils.
    pub(crate) fn node_hessian(&self, values: &[f64], flat: usize) -> SymForm {
        let idx = self.unflat(flat);
        let n = self.dim();
        let mut h = SymForm::zeros(n);
        for a in 0..n {
            let d2: f64 = Grid::d2_stencil(idx[a], self.counts[a], self.spacing[a])
                .iter()
                .filter(|(_, w)| *w != 0.0)
                .map(|&(o, w)| w * values[self.offset(flat, a, o)])
                .sum();
            h.set(a, a, d2);
            let sa = Grid::d1_stencil(idx[a], self.counts[a], self.spacing[a]);
            for b in (a + 1)..n {
                let sb = Grid::d1_stencil(idx[b], self.counts[b], self.spacing[b]);
                let mut v = 0.0;
                for &(oa, wa) in sa.iter().filter(|(_, w)| *w != 0.0) {
                    let fa = self.offset(flat, a, oa);
                    for &(ob, wb) in sb.iter().filter(|(_, w)| *w != 0.0) {
                        v += wa * wb * values[self.offset(fa, b, ob)];
                    }
                }
                h.set(a, b, v);
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    #[default]
    ExtrapolateLinear,
    Clamp,
}

/// Real values on the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    policy: BoundaryPolicy,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>, policy: BoundaryPolicy) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at node {i}")));
        }
        Ok(ScalarField {
            grid,
            values,
            policy,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Result<Self> {
        let values = crate::par::Exec::default().map(grid.len(), |i| f(&grid.node_flat(i)));
        Self::new(grid, values, BoundaryPolicy::default())
    }

    pub fn with_policy(mut self, policy: BoundaryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn policy(&self) -> BoundaryPolicy {
        self.policy
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Largest absolute value, the natural field scale.
    pub fn scale(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Value at an index that may lie up to a few cells outside the grid,
    /// extended according to the boundary policy.
    pub fn padded(&self, idx: &[isize]) -> f64 {
        let g = &self.grid;
        let mut inside = vec![0usize; g.dim()];
        let mut outward: Option<(usize, isize)> = None;
        for k in 0..g.dim() {
            let n = g.counts[k] as isize;
            let i = idx[k];
            inside[k] = i.clamp(0, n - 1) as usize;
            if i < 0 {
                outward = Some((k, i));
            } else if i >= n {
                outward = Some((k, i - (n - 1)));
            }
        }
        let base = self.values[g.flat(&inside)];
        match (self.policy, outward) {
            (BoundaryPolicy::Clamp, _) | (_, None) => base,
            (BoundaryPolicy::ExtrapolateLinear, Some((k, by))) => {
                // one axis only; corners fall back to the clamped value
                let step = if by < 0 { 1 } else { -1 };
                let mut inner = inside.clone();
                inner[k] = (inner[k] as isize + step) as usize;
                let slope = base - self.values[g.flat(&inner)];
                base + slope * by.unsigned_abs() as f64
            }
        }
    }

    /// Multilinear interpolation of the node values.
    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        Ok(self
            .grid
            .corner_weights(p)
            .iter()
            .map(|&(i, w)| w * self.values[i])
            .sum())
    }

    /// Gradient at `p`: node central differences, interpolated multilinearly.
    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        self.grid.require_margin(p, 1)?;
        let mut g = vec![0.0; self.grid.dim()];
        for (i, w) in self.grid.corner_weights(p) {
            if w == 0.0 {
                continue;
            }
            for (gk, nk) in g.iter_mut().zip(self.grid.node_gradient(&self.values, i)) {
                *gk += w * nk;
            }
        }
        Ok(g)
    }

    /// Hessian at `p` in flat coordinates.
    pub fn hessian_flat(&self, p: &[f64]) -> Result<SymForm> {
        self.check_point(p)?;
        self.grid.require_margin(p, 2)?;
        let n = self.grid.dim();
        let mut acc = vec![0.0; n * n];
        for (i, w) in self.grid.corner_weights(p) {
            if w == 0.0 {
                continue;
            }
            let h = self.grid.node_hessian(&self.values, i);
            for (a, b) in acc.iter_mut().zip(h.entries()) {
                *a += w * b;
            }
        }
        SymForm::new(n, acc)
    }

    /// Covariant Hessian `∂²f − Γᵏ ∂_k f`; `None` means the flat metric.
    pub fn hessian(&self, p: &[f64], metric: Option<&MetricField>) -> Result<SymForm> {
        let Some(g) = metric else {
            return self.hessian_flat(p);
        };
        if g.grid() != &self.grid {
            return Err(invalid("metric and field must share a grid"));
        }
        self.check_point(p)?;
        self.grid.require_margin(p, 2)?;
        let n = self.grid.dim();
        let mut acc = vec![0.0; n * n];
        for (i, w) in self.grid.corner_weights(p) {
            if w == 0.0 {
                continue;
            }
            let h = self.grid.node_hessian(&self.values, i);
            let df = self.grid.node_gradient(&self.values, i);
            let gamma = g.christoffel_at_node(i)?;
            for a in 0..n {
                for b in 0..n {
                    let corr: f64 = (0..n).map(|k| gamma[k][a * n + b] * df[k]).sum();
                    acc[a * n + b] += w * (h.get(a, b) - corr);
                }
            }
        }
        SymForm::new(n, acc)
    }

    /// `f_λ(x) = f(x/λ)`, sampled on the dilated grid.
    pub fn dilate(&self, lambda: f64) -> Result<ScalarField> {
        Ok(ScalarField {
            grid: self.grid.dilate(lambda)?,
            values: self.values.clone(),
            policy: self.policy,
        })
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.grid.dim() {
            return Err(invalid(format!(
                "point has dimension {}, grid has {}",
                p.len(),
                self.grid.dim()
            )));
        }
        if !self.grid.contains(p) {
            return Err(MhError::OutOfDomain {
                point: p.to_vec(),
                margin: 0,
            });
        }
        Ok(())
    }
}

/// Symmetric positive definite metric tensor per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    grid: Grid,
    /// `n×n` row-major block per node.
    g: Vec<f64>,
}

impl MetricField {
    pub fn new(grid: Grid, g: Vec<f64>) -> Result<Self> {
        let n = grid.dim();
        if g.len() != grid.len() * n * n {
            return Err(invalid("metric needs an n×n block per node"));
        }
        for node in 0..grid.len() {
            let block = SymForm::new(n, g[node * n * n..(node + 1) * n * n].to_vec())?;
            let min = linalg::eigh(&block)
                .map_err(|e| MhError::InvalidMetric(e.to_string()))?
                .values[0];
            if !(min >= tol::METRIC_MIN_EIG) {
                return Err(MhError::InvalidMetric(format!(
                    "smallest eigenvalue {min} at node {node}"
                )));
            }
        }
        Ok(MetricField { grid, g })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> SymForm) -> Result<Self> {
        let n = grid.dim();
        let mut g = Vec::with_capacity(grid.len() * n * n);
        for i in 0..grid.len() {
            let s = f(&grid.node_flat(i));
            if s.dim() != n {
                return Err(invalid("metric block has the wrong dimension"));
            }
            g.extend_from_slice(s.entries());
        }
        Self::new(grid, g)
    }

    pub fn euclidean(grid: Grid) -> Self {
        let n = grid.dim();
        let id = SymForm::identity(n);
        let g = (0..grid.len()).flat_map(|_| id.entries().to_vec()).collect();
        MetricField { grid, g }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn at_node(&self, flat: usize) -> SymForm {
        let n = self.grid.dim();
        SymForm::new(n, self.g[flat * n * n..(flat + 1) * n * n].to_vec()).expect("valid block")
    }

    /// Interpolated metric at `p`.
    pub fn at(&self, p: &[f64]) -> Result<SymForm> {
        let n = self.grid.dim();
        let mut acc = vec![0.0; n * n];
        for (i, w) in self.grid.corner_weights(p) {
            for (a, b) in acc.iter_mut().zip(&self.g[i * n * n..(i + 1) * n * n]) {
                *a += w * b;
            }
        }
        SymForm::new(n, acc)
    }

    /// Interpolated Christoffel symbols at `p`, laid out as in the node version.
    pub fn christoffel_at(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.grid.dim();
        let mut acc = vec![vec![0.0; n * n]; n];
        for (i, w) in self.grid.corner_weights(p) {
            if w == 0.0 {
                continue;
            }
            for (a, g) in acc.iter_mut().zip(self.christoffel_at_node(i)?) {
                for (x, y) in a.iter_mut().zip(g) {
                    *x += w * y;
                }
            }
        }
        Ok(acc)
    }

    /// `Γᵏ_ij` at a node as `gamma[k][i*n + j]`.
    fn christoffel_at_node(&self, flat: usize) -> Result<Vec<Vec<f64>>> {
        let n = self.grid.dim();
        let idx = self.grid.unflat(flat);
        // dg[l][i*n+j] = ∂_l g_ij
        let mut dg = vec![vec![0.0; n * n]; n];
        for (l, dgl) in dg.iter_mut().enumerate() {
            for &(o, w) in Grid::d1_stencil(idx[l], self.grid.counts()[l], self.grid.spacing()[l])
                .iter()
                .filter(|(_, w)| *w != 0.0)
            {
                let node = self.grid.offset(flat, l, o);
                for (d, g) in dgl.iter_mut().zip(&self.g[node * n * n..(node + 1) * n * n]) {
                    *d += w * g;
                }
            }
        }
        let ginv = inverse(&self.at_node(flat))?;
        let mut gamma = vec![vec![0.0; n * n]; n];
        for (k, gk) in gamma.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[k * n + l]
                            * (dg[i][j * n + l] + dg[j][i * n + l] - dg[l][i * n + j]);
                    }
                    gk[i * n + j] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }
}

/// Inverse of an SPD form via its eigen decomposition.
pub(crate) fn inverse(s: &SymForm) -> Result<Vec<f64>> {
    let e = linalg::eigh(s)?;
    if e.values[0] <= 0.0 {
        return Err(MhError::InvalidMetric("not positive definite".into()));
    }
    let inv: Vec<f64> = e.values.iter().map(|v| 1.0 / v).collect();
    Ok(SymForm::from_spectrum(&inv, &e.vectors).entries().to_vec())
}

/// `|Df|_g = sqrt(g^{ij} ∂_i f ∂_j f)`.
pub fn metric_norm(g: &SymForm, covector: &[f64]) -> Result<f64> {
    let ginv = inverse(g)?;
    let n = covector.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += ginv[i * n + j] * covector[i] * covector[j];
        }
    }
    Ok(s.max(0.0).sqrt())
}

/// Vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    vectors: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid, vectors: Vec<f64>) -> Result<Self> {
        if vectors.len() != grid.len() * grid.dim() {
            return Err(invalid("vector field needs n components per node"));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(invalid("vector field has non-finite components"));
        }
        Ok(VectorField { grid, vectors })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Vec<f64> + Sync + Send) -> Result<Self> {
        let per_node = crate::par::Exec::default().map(grid.len(), |i| f(&grid.node_flat(i)));
        Self::new(grid, per_node.concat())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn component(&self, c: usize) -> Vec<f64> {
        let n = self.grid.dim();
        (0..self.grid.len()).map(|i| self.vectors[i * n + c]).collect()
    }

    pub fn value(&self, p: &[f64]) -> Result<Vec<f64>> {
        if !self.grid.contains(p) {
            return Err(MhError::OutOfDomain {
                point: p.to_vec(),
                margin: 0,
            });
        }
        let n = self.grid.dim();
        let mut v = vec![0.0; n];
        for (i, w) in self.grid.corner_weights(p) {
            for c in 0..n {
                v[c] += w * self.vectors[i * n + c];
            }
        }
        Ok(v)
    }

    /// Jacobian `J[c][k] = ∂_k X^c` at `p`, row-major.
    pub fn jacobian(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.grid.require_margin(p, 1)?;
        let n = self.grid.dim();
        let comps: Vec<Vec<f64>> = (0..n).map(|c| self.component(c)).collect();
        let mut j = vec![0.0; n * n];
        for (i, w) in self.grid.corner_weights(p) {
            if w == 0.0 {
                continue;
            }
            for (c, comp) in comps.iter().enumerate() {
                for (k, d) in self.grid.node_gradient(comp, i).into_iter().enumerate() {
                    j[c * n + k] += w * d;
                }
            }
        }
        Ok(j)
    }
}

/// JSON header for the flat binary field format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub corners: Corners,
    pub policy: BoundaryPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corners {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ScalarField {
    pub fn header(&self) -> FieldHeader {
        FieldHeader {
            dims: self.grid.counts.clone(),
            spacing: self.grid.spacing.clone(),
            corners: Corners {
                lower: self.grid.lower.clone(),
                upper: self.grid.upper.clone(),
            },
            policy: self.policy,
        }
    }

    /// Little-endian `f64` values in flat (last axis fastest) order.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_parts(header: &FieldHeader, bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(8) {
            return Err(MhError::Parse("binary payload is not a whole number of f64".into()));
        }
        let grid = Grid::new(
            header.corners.lower.clone(),
            header.corners.upper.clone(),
            header.dims.clone(),
        )?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        ScalarField::new(grid, values, header.policy)
    }

    /// Writes `<stem>.json` (header) and `<stem>.bin` (values).
    pub fn write(&self, stem: &std::path::Path) -> Result<()> {
        std::fs::write(
            stem.with_extension("json"),
            serde_json::to_vec_pretty(&self.header())?,
        )?;
        std::fs::write(stem.with_extension("bin"), self.to_bytes())?;
        Ok(())
    }

    pub fn read(stem: &std::path::Path) -> Result<Self> {
        let header: FieldHeader = serde_json::from_slice(&std::fs::read(stem.with_extension("json"))?)?;
        let bytes = std::fs::read(stem.with_extension("bin"))?;
        Self::from_parts(&header, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize) -> Grid {
        Grid::cube(2, 3.0, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![0.0], vec![1.0], vec![7]).is_err());
        assert!(Grid::new(vec![1.0], vec![0.0], vec![9]).is_err());
        let g = Grid::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![11, 21]).unwrap();
        assert_eq!(g.spacing(), &[0.1, 0.1]);
        assert_eq!(g.flat(&[2, 3]), 2 * 21 + 3);
        assert_eq!(g.unflat(45), vec![2, 3]);
    }

    #[test]
    fn linear_field_gradient_is_exact() {
        let f = ScalarField::from_fn(grid2(25), |x| x[0]).unwrap();
        let g = f.gradient(&[0.3, -1.1]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
    }

    #[test]
    fn quadratic_gradient_and_hessian_exact() {
        let f = ScalarField::from_fn(grid2(31), |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let g = f.gradient(&[1.0, 2.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 2.0).abs() < 1e-12);
        let h = f.hessian(&[0.37, -0.81], None).unwrap();
        assert!((h.get(0, 0) - 1.0).abs() < 1e-10);
        assert!((h.get(1, 1) - 1.0).abs() < 1e-10);
        assert!(h.get(0, 1).abs() < 1e-10);
    }

    #[test]
    fn margins_enforced() {
        let f = ScalarField::from_fn(grid2(25), |x| x[0]).unwrap();
        let h = f.grid().spacing()[0];
        assert!(matches!(
            f.gradient(&[3.0 - 0.5 * h, 0.0]),
            Err(MhError::OutOfDomain { .. })
        ));
        assert!(f.gradient(&[3.0 - h, 0.0]).is_ok());
        assert!(f.hessian(&[3.0 - 1.5 * h, 0.0], None).is_err());
        assert!(f.value(&[4.0, 0.0]).is_err());
    }

    #[test]
    fn one_sided_stencils_are_second_order_exact_on_quadratics() {
        let g = grid2(9);
        let f = ScalarField::from_fn(g.clone(), |x| x[0] * x[0] + 3.0 * x[0] * x[1]).unwrap();
        for flat in [0, g.len() - 1, g.flat(&[0, 4]), g.flat(&[8, 0])] {
            let p = g.node_flat(flat);
            let d = g.node_gradient(f.values(), flat);
            assert!((d[0] - (2.0 * p[0] + 3.0 * p[1])).abs() < 1e-10);
            assert!((d[1] - 3.0 * p[0]).abs() < 1e-10);
            let h = g.node_hessian(f.values(), flat);
            assert!((h.get(0, 0) - 2.0).abs() < 1e-9);
            assert!((h.get(0, 1) - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn padded_reads_follow_policy() {
        let g = Grid::new(vec![0.0], vec![7.0], vec![8]).unwrap();
        let f = ScalarField::new(g, (0..8).map(|i| i as f64 * 2.0).collect(), BoundaryPolicy::ExtrapolateLinear).unwrap();
        assert_eq!(f.padded(&[-1]), -2.0);
        assert_eq!(f.padded(&[9]), 18.0);
        let f = f.with_policy(BoundaryPolicy::Clamp);
        assert_eq!(f.padded(&[-1]), 0.0);
    }

    #[test]
    fn invalid_metric_rejected() {
        let g = grid2(9);
        let bad = MetricField::from_fn(g, |_| SymForm::from_diag(&[1.0, -1.0]));
        assert!(matches!(bad, Err(MhError::InvalidMetric(_))));
    }

    #[test]
    fn euclidean_metric_matches_flat_path() {
        let g = grid2(33);
        let f = ScalarField::from_fn(g.clone(), |x| (x[0] * 0.7).sin() * x[1].cos()).unwrap();
        let m = MetricField::euclidean(g);
        let p = [0.41, -0.77];
        let a = f.hessian(&p, None).unwrap();
        let b = f.hessian(&p, Some(&m)).unwrap();
        for (x, y) in a.entries().iter().zip(b.entries()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn binary_roundtrip() {
        let f = ScalarField::from_fn(grid2(9), |x| x[0] - 2.0 * x[1]).unwrap();
        let back = ScalarField::from_parts(&f.header(), &f.to_bytes()).unwrap();
        assert_eq!(back, f);
        let json = serde_json::to_string(&f.header()).unwrap();
        assert!(json.contains("\"policy\":\"extrapolate-linear\""));
    }
}
