//! Discrete varifolds: triangulated `m`-complexes with multiplicity, their
//! masses, first variation, density, gap property, the divergence chain
//! behind the blow-up argument and the area blow-up set estimator.

mod audit;
mod blowup;
mod complex;
mod counterexample;
pub mod fixtures;
mod measures;
mod region;

pub use audit::{
    divergence_bound_audit, gradient_field_jacobian, Cubic, DivergenceAudit, FaceAudit, SmoothFunction,
};
pub use blowup::{blowup_set, excess_curvature_audit, BlowupReport, IntegralAudit, Schedule};
pub use complex::{BoundaryCell, DiscreteVarifold, Sidecar};
pub use counterexample::{bump, counterexample_sequence, declared_density, plateau, Counterexample};
pub use measures::{
    boundary_flux, boundary_mass, density, first_variation, gap_alpha_check, integrate, mass, mass_with,
    omega, tangential_divergence, AnalyticField, DensityEstimate, GapReport, SmoothVectorField,
};
pub use region::{Placement, Region};
