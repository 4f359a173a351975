//! Level-set curvatures, barrier inequalities and tubular Riccati comparison.

mod level;
mod riccati;

pub use level::{
    barrier_check, converse_barrier_build, level_set_curvatures, BarrierReport, ConverseReport,
    PrincipalCurvatures, SecondFundamentalForm, TouchPoint, BARRIER_REL,
};
pub use riccati::{
    blowup_distance, comparison_check, enlargement_comparison, riccati_closed_form,
    riccati_propagate, shrink_for_cut_locus, ComparisonReport, Inequality, RiccatiSolution,
    SpaceFormAmbient,
};
