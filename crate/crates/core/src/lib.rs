//! Numerical laboratory for the calculus of `(m,h)` sets.
//!
//! A closed set `Z` is an `(m,h)` set when every `C²` function `f` whose
//! restriction to `Z` has a local maximum at `p` satisfies
//! `Trace_m(D²f(p)) ≤ h·|Df(p)|`, where `Trace_m` is the sum of the `m`
//! smallest Hessian eigenvalues. This crate provides the pieces needed to
//! probe that predicate numerically and to exercise its geometric
//! consequences:
//!
//! * [`linalg`]: small dense symmetric eigensolver and `Trace_m`.
//! * [`fields`]: grid-sampled scalar fields, metric Hessians, signed distance
//!   and the exponential barrier test function.
//! * [`predicate`]: restricted maxima, the `(m,h)` inequality, violation
//!   certificates and a seeded probe falsifier.
//! * [`curvature`]: level-set principal curvatures, barrier checks and the
//!   space-form Riccati tube calculus.
//! * [`varifold`]: discrete varifolds, mass, first variation, density and the
//!   area blow-up set estimator.
//! * [`flow`]: level-set flow with normal velocity `H − h`, avoidance
//!   monitoring and flow to a limit region.
//!
//! Data-parallel loops go through [`par::Exec`]; disabling the default
//! `parallel` feature builds a purely sequential crate.

pub mod curvature;
pub mod error;
pub mod fields;
pub mod flow;
pub mod linalg;
pub mod mesh;
pub mod par;
pub mod predicate;
pub mod tol;
pub mod varifold;

pub use error::{MhError, Result};
