//! Simulation and certification toolkit for device-independent witnesses of
//! genuine LOSR multipartite nonlocality in noisy GHZ experiments.
//!
//! The crate is organized around five subsystems:
//!
//! * [`qsim`] — exact dense simulation of N-qubit GHZ states, noise channels,
//!   dichotomic measurements and the conditional behaviors they generate;
//! * [`witness`] — correlator witnesses (`W3`, `W4`, the N-party family),
//!   closed-form noise thresholds and probability-form conversion;
//! * [`polytope`] — a self-contained dense simplex solver plus brute-force
//!   polytope oracles (deterministic vertices, the nonsignalling set);
//! * [`inflation`] — nonfanout inflations, the `LP_sat` / `LP_opt` constraint
//!   systems and primal/dual visibility machinery;
//! * [`expdata`] — ingestion of raw coincidence-count tables, experimental
//!   witness values, Monte Carlo error bars and the stabilizer fidelity bound.
//!
//! All types are immutable after construction and all operations are pure, so
//! everything here can be driven from parallel sweeps without coordination.

pub mod expdata;
pub mod inflation;
pub mod polytope;
pub mod qsim;
pub mod witness;

pub use expdata::{
    correlator_from_counts, eval_w3_from_data, eval_w4_from_data, monte_carlo_sigma,
    parse_dataset, stabilizer_fidelity, CountRecord, DataError, ExperimentDataset, SettingLabel,
};
pub use inflation::{
    build_constraint_system, dual_certificate, gmf_lower_bound, lp_sat_feasible, ring_inflation,
    validate_nonfanout, verify_certificate, visibility_general, DualCertificate, InflationError,
    InflationConstraintSystem, InflationGraph, Scenario,
};
pub use polytope::{
    extremize_over_nonsignalling, local_deterministic_vertices, polytope_visibility, solve_lp,
    Constraint, LinearProgram, LpError, LpSolution, LpStatus, Relation, Sense,
};
pub use qsim::{
    behavior_from_state, expectation, fidelity_to_ghz, ghz_state, noisy_ghz, Behavior,
    DichotomicObservable, GhzPhase, MeasurementStrategy, MixedState, PureState, QsimError,
};
pub use witness::{
    build_n_party, build_w3, build_w4, evaluate, n_party_strategy, threshold_mixed_noise,
    to_probability_form, visibility_specific, w3_strategy, w4_strategy, CorrelatorTerm,
    ProbabilityForm, ProbabilityFormWitness, Witness, WitnessError,
};
