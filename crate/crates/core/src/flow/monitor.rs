use super::state::FlowState;
use crate::error::{MhError, Result};
use crate::predicate::ClosedSet;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvoidanceReport {
    pub cell: f64,
    pub times: Vec<f64>,
    /// `d(t)`: distance from the zero set to `Z`.
    pub distances: Vec<f64>,
    /// Largest `d(0) − d(t)`.
    pub worst_approach: f64,
    /// `d(t) ≥ d(0) − Δx` at every recorded time.
    pub pass: bool,
}

/// Records the distance between a moving interface and a fixed set.
#[derive(Debug, Clone)]
pub struct AvoidanceMonitor<'a> {
    z: &'a ClosedSet,
    cell: f64,
    times: Vec<f64>,
    distances: Vec<f64>,
}

impl<'a> AvoidanceMonitor<'a> {
    /// Requires `Z` outside `{φ ≤ 0}` and at least two cells from its
    /// boundary.
    pub fn new(z: &'a ClosedSet, initial: &FlowState) -> Result<Self> {
        let cell = initial.dx();
        if z.dim() != initial.grid().dim() {
            return Err(MhError::InvalidSetup("set and grid dimensions differ".into()));
        }
        let phi = initial.phi();
        let inside = z
            .points()
            .iter()
            .any(|p| initial.grid().contains(p) && phi.value(p).is_ok_and(|v| v <= 0.0));
        if inside {
            return Err(MhError::InvalidSetup("the set meets the initial region".into()));
        }
        let d0 = interface_distance(z, initial);
        if !(d0 >= 2.0 * cell) {
            return Err(MhError::InvalidSetup(format!(
                "initial distance {d0} is below two cells ({})",
                2.0 * cell
            )));
        }
        Ok(AvoidanceMonitor { z, cell, times: vec![initial.t], distances: vec![d0] })
    }

    pub fn record(&mut self, state: &FlowState) {
        self.times.push(state.t);
        self.distances.push(interface_distance(self.z, state));
    }

    pub fn report(&self) -> AvoidanceReport {
        let d0 = self.distances[0];
        let worst_approach = self.distances.iter().map(|d| d0 - d).fold(f64::NEG_INFINITY, f64::max);
        AvoidanceReport {
            cell: self.cell,
            times: self.times.clone(),
            distances: self.distances.clone(),
            worst_approach,
            pass: worst_approach <= self.cell,
        }
    }
}

/// Minimum over interface points of the distance to `Z`; infinite once the
/// interface is gone.
pub fn interface_distance(z: &ClosedSet, state: &FlowState) -> f64 {
    state.interface_points().iter().map(|p| z.distance(p)).fold(f64::INFINITY, f64::min)
}

/// Monitor over a recorded history.
pub fn avoidance_monitor(history: &[FlowState], z: &ClosedSet) -> Result<AvoidanceReport> {
    let first = history.first().ok_or_else(|| MhError::InvalidSetup("empty history".into()))?;
    let mut m = AvoidanceMonitor::new(z, first)?;
    for s in &history[1..] {
        m.record(s);
    }
    Ok(m.report())
}
