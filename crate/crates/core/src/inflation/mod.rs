//! Nonfanout inflations of the "(N−1)-way nonlocal resources plus shared
//! randomness" scenario, the `LP_sat` constraint system `(M1, M2, c)`, and the
//! primal/dual visibility machinery.
//!
//! All LP calls run internally on a symmetry-reduced correlator
//! parametrization of the inflation events (automorphism-invariant vectors
//! are enough by convexity, and nonsignalling is solved into the coordinates);
//! results are lifted back to event space, and dual certificates are verified
//! against the stored matrices by plain arithmetic.

mod graph;
mod solve;
mod system;

pub use graph::{
    automorphisms, canonical_injectable_set, injectable_sets, ring_inflation, scenario_graph,
    twisted_ring_inflation, validate_nonfanout, InflationGraph, InjectableSet, NonfanoutReport,
    PartyCopy, Scenario, SourceCopy,
};
pub use solve::{
    dual_certificate, feasibility_residuals, gmf_lower_bound, lp_sat_feasible, lp_sat_solution,
    verify_certificate, visibility_general, DualCertificate, VerificationReport,
};
pub use system::{
    build_constraint_system, build_constraint_system_multi, InflationConstraintSystem, M2Kind,
    SparseRow,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InflationError {
    #[error("inflation order must be at least 2, got {0}")]
    InvalidOrder(usize),
    #[error("graph violates the nonfanout invariant: {0}")]
    NotNonfanout(String),
    #[error("no full-size injectable set found in the canonical graph")]
    NoInjectableSet,
    #[error("constraint system would exceed the nonzero cap (estimate {estimate})")]
    SizeCap { estimate: usize },
    #[error("inflation does not match the scenario: {0}")]
    ScenarioMismatch(String),
    #[error("automorphism search exceeded its budget")]
    AutomorphismOverflow,
    #[error("inflation LP failed: {0}")]
    SolveFailed(String),
    #[error(transparent)]
    Lp(#[from] crate::polytope::LpError),
}
