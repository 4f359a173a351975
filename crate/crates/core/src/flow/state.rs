use crate::error::{invalid, MhError, Result};
use crate::fields::{fast_sweep, Grid, ScalarField};
use crate::par::Exec;
use crate::tol;
use serde::Serialize;

/// Nodes farther than this many cells from the interface are frozen
/// between reinitializations.
pub const BAND_CELLS: f64 = 6.0;

/// Level-set function `φ` (negative inside `K(t)`), time and forcing for
/// the flow with normal velocity `H − h`.
#[derive(Debug, Clone)]
pub struct FlowState {
    phi: ScalarField,
    pub t: f64,
    pub h: f64,
    pub steps: usize,
    pub steps_since_reinit: usize,
    band: Vec<usize>,
    exec: Exec,
}

/// Per-step diagnostics on interface nodes (`|φ| < 2Δx`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    /// Largest old `φ` at the new zero crossings: how far the interface
    /// moved outward, zero when `K(t+dt) ⊆ K(t)` on the crossings.
    pub max_outward: f64,
    pub max_abs_kappa: f64,
    /// Largest `|φ_new − φ_old|`.
    pub max_change: f64,
}

impl FlowState {
    pub fn new(phi: ScalarField, h: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(invalid("forcing must be finite"));
        }
        if !(2..=3).contains(&phi.grid().dim()) {
            return Err(invalid("flow runs on planar or spatial grids"));
        }
        let band = band_of(&phi);
        Ok(FlowState { phi, t: 0.0, h, steps: 0, steps_since_reinit: 0, band, exec: Exec::default() })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }
    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }
    pub fn dx(&self) -> f64 {
        self.grid().min_spacing()
    }

    /// `Δx²/(2n(1 + |h|Δx))`.
    pub fn stability_bound(&self) -> f64 {
        let dx = self.dx();
        dx * dx / (2.0 * self.grid().dim() as f64 * (1.0 + self.h.abs() * dx))
    }

    /// `0.4·Δx²/(2n)`, capped by the stability bound.
    pub fn default_dt(&self) -> f64 {
        let dx = self.dx();
        (tol::FLOW_CFL * dx * dx / (2.0 * self.grid().dim() as f64)).min(self.stability_bound())
    }

    /// Whether `{φ ≤ 0}` has no nodes left.
    pub fn is_extinct(&self) -> bool {
        self.phi.values().iter().all(|v| *v > 0.0)
    }

    /// One explicit step, returning the new state.
    pub fn step(&self, dt: f64) -> Result<FlowState> {
        let mut next = self.clone();
        next.advance(dt)?;
        Ok(next)
    }

    /// `φ ← φ + dt·(κ_φ|∇φ| − h|∇φ|)`: central differences for the
    /// curvature term with `κ_φ` clamped to `±1/Δx`, Godunov upwinding for
    /// the forcing term. Interfaces with positive mean curvature move inward.
    pub fn advance(&mut self, dt: f64) -> Result<StepStats> {
        let bound = self.stability_bound();
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(MhError::InvalidStep { dt, bound });
        }
        let st = Stencil::new(self.phi.grid());
        let values = self.phi.values();
        let h = self.h;
        let updates: Vec<(f64, f64)> = self.exec.map_slice(&self.band, |&i| {
            let (grad_c, kappa) = st.curvature(values, i);
            // central differences vanish at extrema, so sub-cell islands would never close
            let grad = if grad_c < 0.5 { st.godunov_norm(values, i, kappa < 0.0) } else { grad_c };
            let up = st.godunov_norm(values, i, h >= 0.0);
            (values[i] + dt * (kappa * grad - h * up), kappa)
        });
        let near = 2.0 * st.dx;
        let mut stats = StepStats { max_outward: 0.0, max_abs_kappa: 0.0, max_change: 0.0 };
        let mut new_values = values.to_vec();
        for (&i, &(v, kappa)) in self.band.iter().zip(&updates) {
            let old = values[i];
            if old.abs() < near {
                stats.max_abs_kappa = stats.max_abs_kappa.max(kappa.abs());
                stats.max_change = stats.max_change.max((v - old).abs());
            }
            new_values[i] = v;
        }
        let g = self.phi.grid();
        for &i in &self.band {
            for k in 0..g.dim() {
                let j = st.step(i, k, 1);
                let (a, b) = (new_values[i], new_values[j]);
                if j != i && (a <= 0.0) != (b <= 0.0) {
                    let s = a / (a - b);
                    let before = (1.0 - s) * values[i] + s * values[j];
                    stats.max_outward = stats.max_outward.max(before);
                }
            }
        }
        self.phi = ScalarField::new(self.phi.grid().clone(), new_values, self.phi.policy())?;
        self.t += dt;
        self.steps += 1;
        self.steps_since_reinit += 1;
        Ok(stats)
    }

    /// Replaces `φ` by a signed distance to its zero set. Nodes next to the
    /// interface keep `φ/|∇φ|`, or the distance to the planar fit of the
    /// edge crossings where the gradient degenerates; fast sweeping fills
    /// the rest.
    pub fn reinitialize(&self) -> Result<FlowState> {
        let mut next = self.clone();
        next.reinitialize_in_place()?;
        Ok(next)
    }

    pub fn reinitialize_in_place(&mut self) -> Result<()> {
        let grid = self.phi.grid().clone();
        let values = self.phi.values();
        let st = Stencil::new(&grid);
        let inside: Vec<bool> = values.iter().map(|v| *v <= 0.0).collect();
        let fixed: Vec<bool> = self.exec.map(grid.len(), |i| st.neighbours(i).any(|j| inside[j] != inside[i]));
        if !fixed.iter().any(|f| *f) {
            return Err(MhError::FlowExtinct);
        }
        // crossing distances along each axis, combined as for a plane, bound φ/|∇φ|
        let mut dist: Vec<f64> = self.exec.map(grid.len(), |i| {
            if !fixed[i] {
                return f64::INFINITY;
            }
            let mut inv2 = 0.0;
            for k in 0..grid.dim() {
                let mut dk = f64::INFINITY;
                for dir in [-1, 1] {
                    let j = st.step(i, k, dir);
                    if j != i && inside[j] != inside[i] {
                        dk = dk.min(grid.spacing()[k] * values[i].abs() / (values[i] - values[j]).abs());
                    }
                }
                if dk.is_finite() {
                    inv2 += 1.0 / (dk * dk).max(f64::MIN_POSITIVE);
                }
            }
            let planar = 1.0 / inv2.sqrt();
            // φ/|∇φ| is smoother where the central gradient is trustworthy
            let g = st.central_gradient(values, i);
            let smooth = values[i].abs() / g.iter().map(|x| x * x).sum::<f64>().sqrt().max(tol::FLOW_GRAD_FLOOR);
            if smooth <= 1.5 * planar {
                smooth
            } else {
                planar
            }
        });
        fast_sweep(&grid, &mut dist, &fixed);
        let signed = dist.iter().zip(&inside).map(|(d, ins)| if *ins { -d } else { *d }).collect();
        self.phi = ScalarField::new(grid, signed, self.phi.policy())?;
        self.band = band_of(&self.phi);
        self.steps_since_reinit = 0;
        Ok(())
    }

    /// Replaces `φ` by `min(φ, d)` on the active band.
    pub fn clip_below(&mut self, d: &[f64]) -> Result<()> {
        let mut values = self.phi.values().to_vec();
        for &i in &self.band {
            values[i] = values[i].min(d[i]);
        }
        self.phi = ScalarField::new(self.phi.grid().clone(), values, self.phi.policy())?;
        Ok(())
    }

    /// Zero crossings along grid edges, linearly interpolated.
    pub fn interface_points(&self) -> Vec<Vec<f64>> {
        interface_points(&self.phi)
    }

    /// `Σ δ_ε(φ)|∇φ| Δxⁿ` with the cosine delta of width `1.5Δx`.
    pub fn interface_measure(&self) -> f64 {
        let st = Stencil::new(self.grid());
        let eps = 1.5 * st.dx;
        let cell: f64 = self.grid().spacing().iter().product();
        let values = self.phi.values();
        let parts = self.exec.map_slice(&self.band, |&i| {
            let p = values[i];
            if p.abs() >= eps {
                return 0.0;
            }
            let delta = (1.0 + (std::f64::consts::PI * p / eps).cos()) / (2.0 * eps);
            let g = st.central_gradient(values, i);
            delta * g.iter().map(|x| x * x).sum::<f64>().sqrt() * cell
        });
        crate::par::ordered_sum(&parts)
    }

    /// Volume of `{φ ≤ 0}` with a smoothed Heaviside of width `1.5Δx`.
    pub fn enclosed_volume(&self) -> f64 {
        let eps = 1.5 * self.dx();
        let cell: f64 = self.grid().spacing().iter().product();
        let parts: Vec<f64> = self
            .phi
            .values()
            .iter()
            .map(|&p| {
                if p <= -eps {
                    1.0
                } else if p >= eps {
                    0.0
                } else {
                    let x = -p / eps;
                    0.5 * (1.0 + x + (std::f64::consts::PI * x).sin() / std::f64::consts::PI)
                }
            })
            .collect();
        crate::par::ordered_sum(&parts) * cell
    }

    /// Radius of the ball with the enclosed volume.
    pub fn equivalent_radius(&self) -> f64 {
        let n = self.grid().dim();
        (self.enclosed_volume() / crate::varifold::omega(n)).powf(1.0 / n as f64)
    }

    /// Curvature `div(∇φ/|∇φ|)` at the nodes next to the interface.
    pub fn interface_curvatures(&self) -> Vec<(Vec<f64>, f64)> {
        let st = Stencil::new(self.grid());
        let values = self.phi.values();
        let nodes: Vec<usize> = self
            .band
            .iter()
            .copied()
            .filter(|&i| st.neighbours(i).any(|j| (values[j] <= 0.0) != (values[i] <= 0.0)))
            .collect();
        self.exec.map_slice(&nodes, |&i| (self.grid().node_flat(i), st.curvature(values, i).1))
    }
}

fn band_of(phi: &ScalarField) -> Vec<usize> {
    let width = BAND_CELLS * phi.grid().min_spacing();
    phi.values().iter().enumerate().filter(|(_, v)| v.abs() < width).map(|(i, _)| i).collect()
}

pub(crate) fn interface_points(phi: &ScalarField) -> Vec<Vec<f64>> {
    let g = phi.grid();
    let values = phi.values();
    let mut out = Vec::new();
    for i in 0..g.len() {
        let idx = g.unflat(i);
        for k in 0..g.dim() {
            if idx[k] + 1 >= g.counts()[k] {
                continue;
            }
            let j = i + g.strides()[k];
            let (a, b) = (values[i], values[j]);
            if (a <= 0.0) != (b <= 0.0) {
                let s = a / (a - b);
                let mut p = g.node(&idx);
                p[k] += s * g.spacing()[k];
                out.push(p);
            }
        }
    }
    out
}

/// Clamped finite-difference stencils on flat node arrays.
struct Stencil<'a> {
    grid: &'a Grid,
    dx: f64,
}

impl<'a> Stencil<'a> {
    fn new(grid: &'a Grid) -> Self {
        Stencil { grid, dx: grid.min_spacing() }
    }

    /// Neighbour along axis `k` in direction `dir`, clamped at the box.
    fn step(&self, i: usize, k: usize, dir: isize) -> usize {
        let s = self.grid.strides()[k];
        let c = self.grid.counts()[k];
        let ik = (i / s) % c;
        if dir > 0 {
            if ik + 1 < c {
                i + s
            } else {
                i
            }
        } else if ik > 0 {
            i - s
        } else {
            i
        }
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.dim()).flat_map(move |k| [self.step(i, k, 1), self.step(i, k, -1)])
    }

    fn central_gradient(&self, f: &[f64], i: usize) -> Vec<f64> {
        (0..self.grid.dim())
            .map(|k| (f[self.step(i, k, 1)] - f[self.step(i, k, -1)]) / (2.0 * self.grid.spacing()[k]))
            .collect()
    }

    /// Central `|∇φ|` and clamped `div(∇φ/|∇φ|)`.
    fn curvature(&self, f: &[f64], i: usize) -> (f64, f64) {
        let n = self.grid.dim();
        let h = self.grid.spacing();
        let g = self.central_gradient(f, i);
        let mut hess = [[0.0; 3]; 3];
        for a in 0..n {
            let (p, m) = (self.step(i, a, 1), self.step(i, a, -1));
            hess[a][a] = (f[p] - 2.0 * f[i] + f[m]) / (h[a] * h[a]);
            for b in a + 1..n {
                let pp = self.step(p, b, 1);
                let pm = self.step(p, b, -1);
                let mp = self.step(m, b, 1);
                let mm = self.step(m, b, -1);
                let v = (f[pp] - f[pm] - f[mp] + f[mm]) / (4.0 * h[a] * h[b]);
                hess[a][b] = v;
                hess[b][a] = v;
            }
        }
        let g2: f64 = g.iter().map(|x| x * x).sum();
        let norm = g2.sqrt().max(tol::FLOW_GRAD_FLOOR);
        let mut num = 0.0;
        for a in 0..n {
            num += hess[a][a] * g2;
            for b in 0..n {
                num -= g[a] * g[b] * hess[a][b];
            }
        }
        let kappa = (num / norm.powi(3)).clamp(-1.0 / self.dx, 1.0 / self.dx);
        (norm, kappa)
    }

    /// Godunov `|∇φ|` for outward (`positive = true`) or inward motion.
    fn godunov_norm(&self, f: &[f64], i: usize, positive: bool) -> f64 {
        let mut s = 0.0;
        for k in 0..self.grid.dim() {
            let h = self.grid.spacing()[k];
            let minus = (f[i] - f[self.step(i, k, -1)]) / h;
            let plus = (f[self.step(i, k, 1)] - f[i]) / h;
            let m = if positive {
                minus.max(0.0).max(-plus.min(0.0))
            } else {
                (-minus.min(0.0)).max(plus.max(0.0))
            };
            s += m * m;
        }
        s.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(rho: f64, half: f64, count: usize) -> FlowState {
        let g = Grid::cube(2, half, count).unwrap();
        let phi = ScalarField::from_fn(g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt() - rho).unwrap();
        FlowState::new(phi, 0.0).unwrap()
    }

    #[test]
    fn rejects_unstable_steps() {
        let s = circle(0.5, 1.0, 41);
        let bound = s.stability_bound();
        assert!(matches!(s.step(1.01 * bound), Err(MhError::InvalidStep { .. })));
        assert!(s.step(bound).is_ok());
    }

    #[test]
    fn plane_is_stationary() {
        let g = Grid::cube(2, 1.0, 41).unwrap();
        let phi = ScalarField::from_fn(g, |x| x[1] - 0.013).unwrap();
        let mut s = FlowState::new(phi.clone(), 0.0).unwrap();
        let dt = s.default_dt();
        for _ in 0..10 {
            let st = s.advance(dt).unwrap();
            assert!(st.max_change < 1e-6);
        }
    }

    #[test]
    fn reinitialization_rescales_and_keeps_the_zero_set() {
        let s = circle(0.5, 1.0, 81);
        let doubled = ScalarField::new(
            s.grid().clone(),
            s.phi().values().iter().map(|v| 2.0 * v).collect(),
            s.phi().policy(),
        )
        .unwrap();
        let r = FlowState::new(doubled, 0.0).unwrap().reinitialize().unwrap();
        let dx = r.dx();
        for p in r.interface_points() {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 0.5).abs() < 0.1 * dx);
        }
        for (&a, &b) in r.phi().values().iter().zip(s.phi().values()) {
            if b.abs() < 5.0 * dx {
                assert!((a - b).abs() < 0.1 * dx, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn extinct_states_are_terminal() {
        let g = Grid::cube(2, 1.0, 21).unwrap();
        let phi = ScalarField::from_fn(g, |_| 1.0).unwrap();
        let s = FlowState::new(phi, 0.0).unwrap();
        assert!(s.is_extinct());
        assert!(matches!(s.reinitialize(), Err(MhError::FlowExtinct)));
    }

    #[test]
    fn circle_measures() {
        let s = circle(0.5, 1.0, 161);
        let pi = std::f64::consts::PI;
        assert!((s.interface_measure() - pi).abs() < 0.01 * pi);
        assert!((s.equivalent_radius() - 0.5).abs() < 1e-3);
    }
}
