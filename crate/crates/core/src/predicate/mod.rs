//! The `(m, h)` predicate on discretized closed sets.
//!
//! `Z` is an `(m, h)` set when every C² function `f` whose restriction to
//! `Z` has a local maximum at `p` satisfies `Trace_m(D²f(p)) ≤ h|Df(p)|`.
//! Violations are certified by explicit probes; passes are evidence only.

mod check;
pub mod fixtures;
mod function;
mod search;
mod set;

pub use check::{
    is_strict_max, margin_of, mh_test, perturb_to_nonvanishing_gradient, restricted_max,
    restricted_max_with, sample_values, MarginParts, PassReport, Perturbation,
    PredicateTolerances, RestrictedMax, Verdict, ViolationCertificate,
};
pub use function::{Jet, ProbeKind, Quadratic, TestFunction};
pub use search::{
    critical_h, distance_enlargement_check, distance_set, probe_search, rebuild_probe, Ambient,
    DistanceReport, HBracket, ProbeFamily, SearchConfig,
};
pub use set::{Aabb, ClosedSet, SetSource};
