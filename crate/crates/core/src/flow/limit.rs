use super::state::{interface_points, FlowState};
use crate::curvature::level_set_curvatures;
use crate::error::{invalid, MhError, Result};
use crate::fields::{signed_distance, Grid, LevelSet, ScalarField, Shape};
use crate::par::Exec;
use crate::predicate::ClosedSet;
use crate::tol;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Relative tolerance on `H_{∂N} ≥ h` at boundary samples.
pub const MEAN_CONVEX_REL: f64 = 0.02;

/// A region `N = {φ ≤ 0}` together with the check of `H_{∂N} ≥ h` on its
/// boundary, `H` the sum of principal curvatures towards the inside.
#[derive(Debug, Clone, Serialize)]
pub struct HMeanConvexRegion {
    #[serde(skip)]
    pub phi: ScalarField,
    pub h: f64,
    pub samples: usize,
    /// `min(H − h)` over boundary samples.
    pub min_excess: f64,
    pub tolerance: f64,
    pub verified: bool,
    /// `analytic` when curvatures come from a closed-form shape.
    pub curvature_source: String,
}

impl HMeanConvexRegion {
    /// Signed distance of `shape` on `grid`, verified with the shape's exact
    /// curvatures at the interface crossings.
    pub fn from_shape(shape: &Shape, grid: &Grid, h: f64) -> Result<Self> {
        let phi = signed_distance(shape, grid)?;
        let pts = interface_points(&phi);
        let mut hs = Vec::with_capacity(pts.len());
        for p in &pts {
            let (k, _) = level_set_curvatures(shape as &dyn LevelSet, p)?;
            hs.push(k.values.iter().sum::<f64>());
        }
        Ok(Self::judge(phi, h, hs, "analytic"))
    }

    /// Verification with grid curvatures at the nodes next to the interface.
    pub fn from_field(phi: ScalarField, h: f64) -> Result<Self> {
        let state = FlowState::new(phi.clone(), h)?;
        let hs = state.interface_curvatures().into_iter().map(|(_, k)| k).collect();
        Ok(Self::judge(phi, h, hs, "grid"))
    }

    fn judge(phi: ScalarField, h: f64, hs: Vec<f64>, source: &str) -> Self {
        let min_excess = hs.iter().map(|k| k - h).fold(f64::INFINITY, f64::min);
        let tolerance = MEAN_CONVEX_REL * h.abs().max(1.0 / phi.grid().scale());
        HMeanConvexRegion {
            phi,
            h,
            samples: hs.len(),
            min_excess,
            tolerance,
            verified: !hs.is_empty() && min_excess >= -tolerance,
            curvature_source: source.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    /// Defaults to `0.4·Δx²/(2n)`.
    pub dt: Option<f64>,
    pub max_steps: usize,
    pub reinit_every: usize,
    /// Stall threshold in cells of interface displacement per window.
    pub stall_cells: f64,
    pub window: usize,
    /// Clip `φ` below the distance to `Z` after every step.
    pub constrained: bool,
    /// CSV row cadence in steps.
    pub record_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            dt: None,
            max_steps: 200_000,
            reinit_every: tol::FLOW_REINIT_EVERY,
            stall_cells: tol::FLOW_STALL_CELLS,
            window: tol::FLOW_STALL_WINDOW,
            constrained: false,
            record_every: 50,
        }
    }
}

/// One row of the per-step CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRow {
    pub step: usize,
    pub t: f64,
    pub measure: f64,
    pub radius: f64,
    pub min_distance_to_z: Option<f64>,
    pub max_abs_kappa: f64,
}

pub fn rows_to_csv(rows: &[FlowRow]) -> String {
    let mut s = String::from("step,t,measure,radius,min_distance_to_z,max_abs_kappa\n");
    for r in rows {
        let d = r.min_distance_to_z.map_or(String::new(), |d| format!("{d:.16e}"));
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.step, r.t, r.measure, r.radius, d, r.max_abs_kappa
        );
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowLimit {
    #[serde(skip)]
    pub region: ScalarField,
    pub extinct: bool,
    /// Whether the stall criterion was met before the step cap.
    pub converged: bool,
    pub time: f64,
    pub steps: usize,
    pub reinitializations: usize,
    /// Ball radius with the enclosed volume.
    pub radius: f64,
    pub volume: f64,
    /// Largest outward speed of the zero set, per stall window.
    pub nesting_worst_rate: f64,
    pub nesting_tolerance: f64,
    pub nesting_ok: bool,
    /// Largest `φ` on the samples of `Z` at the end.
    pub z_worst_phi: Option<f64>,
    pub z_contained: Option<bool>,
    /// `max |κ − h|` at the final interface nodes.
    pub curvature_residual: Option<f64>,
    pub constrained: bool,
    pub rows: Vec<FlowRow>,
    #[serde(skip)]
    pub surface: Vec<Vec<f64>>,
}

/// Runs the forced flow from `N₀` until the interface stalls or vanishes.
pub fn flow_to_limit(
    n0: &HMeanConvexRegion,
    h: f64,
    z: Option<&ClosedSet>,
    opts: &FlowOptions,
) -> Result<FlowLimit> {
    if !n0.verified {
        return Err(MhError::InvalidSetup(format!(
            "initial region is not h-mean-convex (excess {})",
            n0.min_excess
        )));
    }
    if h > n0.h + n0.tolerance {
        return Err(MhError::InvalidSetup("forcing exceeds the verified h".into()));
    }
    if opts.window == 0 || opts.reinit_every == 0 || opts.record_every == 0 {
        return Err(invalid("window, reinitialization and record cadences must be positive"));
    }
    let mut state = FlowState::new(n0.phi.clone(), h)?;
    let grid = state.grid().clone();
    let dx = state.dx();
    // boundary contact is allowed so that Z = ∂N₀ can be run
    if let Some(z) = z {
        let outside = z.points().iter().any(|p| n0.phi.value(p).map_or(true, |v| v > 0.5 * dx));
        if outside {
            return Err(MhError::InvalidSetup("Z must lie in N₀".into()));
        }
    }
    let dz: Option<Vec<f64>> = match (z, opts.constrained) {
        (Some(z), true) => Some(Exec::default().map(grid.len(), |i| z.distance(&grid.node_flat(i)))),
        _ => None,
    };
    let dt = opts.dt.unwrap_or_else(|| state.default_dt());
    let scale = grid.scale();
    let nesting_tolerance = tol::FLOW_NESTING * scale;
    let mut worst_rate: f64 = 0.0;
    let mut reinits = 0;
    let mut rows = Vec::new();
    let mut extinct = false;
    let mut converged = false;
    let mut max_kappa: f64 = 0.0;
    let mut snapshot = (state.phi().clone(), state.interface_points(), state.t);
    // running pointwise maximum of φ, for the one-cell nesting gate
    let mut phi_max = state.phi().values().to_vec();
    let record = |state: &FlowState, max_kappa: f64, rows: &mut Vec<FlowRow>| {
        rows.push(FlowRow {
            step: state.steps,
            t: state.t,
            measure: state.interface_measure(),
            radius: state.equivalent_radius(),
            min_distance_to_z: z.map(|z| super::monitor::interface_distance(z, state)),
            max_abs_kappa: max_kappa,
        });
    };
    record(&state, 0.0, &mut rows);
    while state.steps < opts.max_steps {
        let stats = state.advance(dt)?;
        max_kappa = max_kappa.max(stats.max_abs_kappa);
        if let Some(d) = &dz {
            state.clip_below(d)?;
        }
        if state.is_extinct() {
            extinct = true;
            record(&state, max_kappa, &mut rows);
            break;
        }
        if state.steps_since_reinit >= opts.reinit_every {
            match state.reinitialize_in_place() {
                Ok(()) => reinits += 1,
                Err(MhError::FlowExtinct) => {
                    extinct = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        // a node inside now that was once more than a cell outside
        let values = state.phi().values();
        let mut fault: f64 = 0.0;
        for (m, &v) in phi_max.iter_mut().zip(values) {
            if v <= 0.0 {
                fault = fault.max(*m);
            }
            *m = m.max(v);
        }
        if fault > dx {
            return Err(MhError::NestingFault { amount: fault, time: state.t });
        }
        if state.steps % opts.record_every == 0 {
            record(&state, max_kappa, &mut rows);
            max_kappa = 0.0;
        }
        if state.steps % opts.window == 0 {
            let pts = state.interface_points();
            let (outward, moved) = displacement(&snapshot.0, &snapshot.1, state.phi(), &pts);
            worst_rate = worst_rate.max(outward / (state.t - snapshot.2));
            snapshot = (state.phi().clone(), pts, state.t);
            if moved < opts.stall_cells * dx {
                converged = true;
                break;
            }
        }
    }
    if !extinct && rows.last().is_none_or(|r| r.step != state.steps) {
        record(&state, max_kappa, &mut rows);
    }
    let (z_worst_phi, z_contained) = match z {
        Some(z) => {
            let worst = z
                .points()
                .iter()
                .map(|p| state.phi().value(p).unwrap_or(f64::INFINITY))
                .fold(f64::NEG_INFINITY, f64::max);
            (Some(worst), Some(worst <= dx))
        }
        None => (None, None),
    };
    let curvature_residual = if extinct {
        None
    } else {
        let k = state.interface_curvatures();
        Some(k.iter().map(|(_, k)| (k - h).abs()).fold(0.0, f64::max))
    };
    let surface = if extinct { Vec::new() } else { state.interface_points() };
    Ok(FlowLimit {
        extinct,
        converged,
        time: state.t,
        steps: state.steps,
        reinitializations: reinits,
        radius: if extinct { 0.0 } else { state.equivalent_radius() },
        volume: if extinct { 0.0 } else { state.enclosed_volume() },
        nesting_worst_rate: worst_rate,
        nesting_tolerance,
        nesting_ok: worst_rate <= nesting_tolerance,
        z_worst_phi,
        z_contained,
        curvature_residual,
        constrained: opts.constrained,
        rows,
        surface,
        region: state.phi().clone(),
    })
}

/// Outward motion and two-sided displacement of the zero set between two
/// snapshots. Crossings sit on grid edges, where interpolation of the other
/// field is linear along the edge, so a crossing that stays on its edge is
/// measured exactly.
fn displacement(old: &ScalarField, old_pts: &[Vec<f64>], new: &ScalarField, new_pts: &[Vec<f64>]) -> (f64, f64) {
    if new_pts.is_empty() || old_pts.is_empty() {
        return (0.0, f64::INFINITY);
    }
    let mut outward: f64 = 0.0;
    let mut moved: f64 = 0.0;
    for p in new_pts {
        let v = old.value(p).unwrap_or(f64::INFINITY);
        outward = outward.max(v);
        moved = moved.max(v.abs());
    }
    for q in old_pts {
        moved = moved.max(new.value(q).unwrap_or(f64::INFINITY).abs());
    }
    (outward, moved)
}
