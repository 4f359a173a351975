//! Tolerance table. Every threshold used by the library lives here.

use serde::Serialize;

/// Symmetry enforced on construction of a symmetric form.
pub const SYMMETRY: f64 = 1e-12;
/// Relative reconstruction error `‖S − VΛVᵀ‖ / ‖S‖` of an eigen decomposition.
pub const RECONSTRUCTION: f64 = 1e-10;
/// Agreement with an independent eigenvalue oracle.
pub const CROSS_ORACLE: f64 = 1e-9;
/// Orthonormality of eigenvectors.
pub const ORTHONORMAL: f64 = 1e-12;
/// Off-diagonal mass (relative) at which Jacobi sweeps stop.
pub const JACOBI_OFFDIAG: f64 = 1e-15;
pub const JACOBI_MAX_SWEEPS: usize = 64;
/// Largest dimension handled by the dense Jacobi solver.
pub const MAX_DIM: usize = 16;

/// Restricted-maximum tie tolerance, relative to the field scale.
pub const MAX_REL: f64 = 1e-6;
/// Margin above which a violation is reported, times `1/length`.
pub const MARGIN: f64 = 1e-3;
/// Gradient norm below which a maximum counts as critical.
pub const GRAD: f64 = 1e-6;
/// Local-max neighbourhood radius in units of the resolution radius.
pub const MAX_NEIGHBOURHOOD: f64 = 3.0;

/// Smallest admissible metric eigenvalue.
pub const METRIC_MIN_EIG: f64 = 1e-8;

/// `|κ|` beyond which a Riccati solution is declared blown up.
pub const BLOWUP_CURVATURE: f64 = 1e6;
/// Largest Riccati step.
pub const RICCATI_MAX_STEP: f64 = 1e-3;
/// Principal-curvature shrink applied near a cut locus, times `1/length`.
pub const CUT_LOCUS_SHRINK: f64 = 1e-3;

/// Multiplicity comparison tolerance for the gap property.
pub const MULTIPLICITY: f64 = 1e-9;
/// Face degeneracy threshold, times `scale^m`.
pub const FACE_AREA: f64 = 1e-12;
/// Subdivision depth used for face/region intersection.
pub const SUBDIVISION_LEVELS: u32 = 4;
/// Density radii must exceed this many local mesh sizes.
pub const DENSITY_RESOLUTION: f64 = 5.0;

/// Floor on `|∇φ|` inside curvature quotients.
pub const FLOW_GRAD_FLOOR: f64 = 1e-6;
/// Fraction of the parabolic limit used for the default time step.
pub const FLOW_CFL: f64 = 0.4;
pub const FLOW_REINIT_EVERY: usize = 20;
/// Interface displacement (cells) below which a window counts as stalled.
pub const FLOW_STALL_CELLS: f64 = 0.05;
pub const FLOW_STALL_WINDOW: usize = 50;
/// Nesting slack per unit time, times the box scale.
pub const FLOW_NESTING: f64 = 1e-3;

/// Snapshot of the tolerance table, embedded in reports.
#[derive(Debug, Clone, Serialize)]
pub struct ToleranceTable {
    pub symmetry: f64,
    pub reconstruction: f64,
    pub cross_oracle: f64,
    pub max_rel: f64,
    pub margin: f64,
    pub grad: f64,
    pub max_neighbourhood: f64,
    pub blowup_curvature: f64,
    pub multiplicity: f64,
    pub subdivision_levels: u32,
    pub flow_cfl: f64,
    pub flow_reinit_every: usize,
    pub flow_stall_cells: f64,
    pub flow_stall_window: usize,
    pub flow_nesting: f64,
}

pub fn snapshot() -> ToleranceTable {
    ToleranceTable {
        symmetry: SYMMETRY,
        reconstruction: RECONSTRUCTION,
        cross_oracle: CROSS_ORACLE,
        max_rel: MAX_REL,
        margin: MARGIN,
        grad: GRAD,
        max_neighbourhood: MAX_NEIGHBOURHOOD,
        blowup_curvature: BLOWUP_CURVATURE,
        multiplicity: MULTIPLICITY,
        subdivision_levels: SUBDIVISION_LEVELS,
        flow_cfl: FLOW_CFL,
        flow_reinit_every: FLOW_REINIT_EVERY,
        flow_stall_cells: FLOW_STALL_CELLS,
        flow_stall_window: FLOW_STALL_WINDOW,
        flow_nesting: FLOW_NESTING,
    }
}
