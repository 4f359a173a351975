use super::complex::DiscreteVarifold;
use super::measures::{ball_mass, integrate, omega, FaceIndex};
use super::region::Region;
use crate::error::{invalid, Result};
use crate::fields::Grid;
use crate::par::Exec;
use crate::predicate::ClosedSet;
use serde::{Deserialize, Serialize};

/// Growth thresholds `T_i = base·ω_m rᵐ·(1 + i^exponent)` for the 1-based
/// family index `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub base: f64,
    pub exponent: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { base: 1.0, exponent: 0.5 }
    }
}

impl Schedule {
    pub fn threshold(&self, i: usize, m: usize, r: f64) -> f64 {
        self.base * omega(m) * r.powi(m as i32) * (1.0 + (i as f64).powf(self.exponent))
    }

    fn validate(&self) -> Result<()> {
        if !(self.base > 0.0 && self.exponent > 0.0) || !self.base.is_finite() || !self.exponent.is_finite() {
            return Err(invalid("schedule needs a positive base and exponent"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub radius: f64,
    pub schedule: Schedule,
    /// First 1-based index that must exceed its threshold.
    pub i0: usize,
    pub thresholds: Vec<f64>,
    pub nodes_checked: usize,
    pub marked: Vec<Vec<f64>>,
    #[serde(skip)]
    pub set: Option<ClosedSet>,
}

/// Grid nodes `x` with `mass(V_i, B(x, r)) ≥ T_i` for every sampled
/// `i ≥ i₀ = ⌈len/2⌉`, a finite-family stand-in for the points where the
/// masses are unbounded in every ball.
pub fn blowup_set(
    family: &[DiscreteVarifold],
    grid: &Grid,
    r: f64,
    schedule: Schedule,
) -> Result<BlowupReport> {
    if family.len() < 3 {
        return Err(invalid("blow-up estimation needs at least three members"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("radius must be positive"));
    }
    schedule.validate()?;
    let m = family[0].m();
    if family.iter().any(|v| v.m() != m || v.dim() != grid.dim()) {
        return Err(invalid("family members must share m and the grid dimension"));
    }
    let i0 = family.len().div_ceil(2);
    let thresholds: Vec<f64> = (1..=family.len()).map(|i| schedule.threshold(i, m, r)).collect();
    let indices: Vec<FaceIndex> = family.iter().map(|v| FaceIndex::new(v, r)).collect();
    let flags = Exec::default().map(grid.len(), |node| {
        let x = grid.node_flat(node);
        (i0..=family.len()).all(|i| ball_mass(&family[i - 1], &indices[i - 1], &x, r) >= thresholds[i - 1])
    });
    let marked: Vec<Vec<f64>> = (0..grid.len()).filter(|&i| flags[i]).map(|i| grid.node_flat(i)).collect();
    let set = if marked.is_empty() {
        None
    } else {
        Some(ClosedSet::point_cloud("blow-up", marked.clone(), r)?)
    };
    Ok(BlowupReport {
        radius: r,
        schedule,
        i0,
        thresholds,
        nodes_checked: grid.len(),
        marked,
        set,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralAudit {
    pub values: Vec<f64>,
    pub cap: f64,
    pub bounded: bool,
}

/// `∫_{V_i ∩ K} (|H| − h_i)⁺` for each member, with `|H|` from an analytic
/// oracle, compared with a declared cap.
pub fn excess_curvature_audit(
    family: &[DiscreteVarifold],
    h: &[f64],
    region: &Region,
    mean_curvature: &(dyn Fn(&[f64]) -> f64 + Sync),
    cap: f64,
) -> Result<IntegralAudit> {
    if h.len() != family.len() {
        return Err(invalid("one forcing value per family member is required"));
    }
    let values: Vec<f64> = family
        .iter()
        .zip(h)
        .map(|(v, &hi)| integrate(v, region, &|x: &[f64]| (mean_curvature(x).abs() - hi).max(0.0)))
        .collect();
    let bounded = values.iter().all(|x| *x <= cap);
    Ok(IntegralAudit { values, cap, bounded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varifold::fixtures;

    #[test]
    fn larger_schedule_marks_a_subset() {
        let fam = fixtures::multiplicity_plane_family(6, 1.0, 8).unwrap();
        let g = Grid::new(vec![-0.5, -0.5, -0.5], vec![0.5, 0.5, 0.5], vec![9, 9, 9]).unwrap();
        let low = blowup_set(&fam, &g, 0.25, Schedule { base: 0.5, exponent: 0.5 }).unwrap();
        let high = blowup_set(&fam, &g, 0.25, Schedule { base: 1.5, exponent: 0.5 }).unwrap();
        assert!(!low.marked.is_empty());
        assert!(high.marked.iter().all(|p| low.marked.contains(p)));
        assert!(high.marked.len() < low.marked.len());
    }

    #[test]
    fn rejects_small_families() {
        let fam = fixtures::multiplicity_plane_family(2, 1.0, 2).unwrap();
        let g = Grid::cube(3, 1.0, 9).unwrap();
        assert!(blowup_set(&fam, &g, 0.5, Schedule::default()).is_err());
    }
}
