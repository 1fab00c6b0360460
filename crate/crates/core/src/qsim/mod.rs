//! Exact finite-dimensional simulation of N-qubit GHZ states, noise channels,
//! dichotomic measurements, and the behaviors they generate.
//!
//! Outcome encoding: detector `+` maps to +1 and `-` to −1; `|0⟩` is the +1
//! eigenstate of `σ_z` and `|+⟩` the +1 eigenstate of `σ_x`. Behavior tables
//! index the first party as the most significant digit of both the setting and
//! the outcome index.

mod behavior;
mod observable;
mod state;

pub use behavior::Behavior;
pub use observable::{DichotomicObservable, MeasurementStrategy};
pub use state::{MixedState, PureState};

use num_complex::Complex64;
use thiserror::Error;

use crate::witness::CorrelatorTerm;

#[derive(Debug, Error)]
pub enum QsimError {
    #[error("GHZ states need at least 2 qubits, got {0}")]
    InvalidArity(usize),
    #[error("parameter {name} = {value} outside [0, 1]")]
    Domain { name: &'static str, value: f64 },
    #[error("state has {state_qubits} qubits but the strategy addresses {strategy_parties} parties")]
    ArityMismatch {
        state_qubits: usize,
        strategy_parties: usize,
    },
    #[error("state invariant violated: {0}")]
    InvalidState(String),
    #[error("term references party {party} setting {setting}, outside the behavior signature")]
    SignatureMismatch { party: usize, setting: usize },
    #[error("conditioning event has probability zero")]
    DegenerateCondition,
    #[error("party {0} referenced more than once by a correlator term")]
    DuplicateParty(usize),
}

/// Which GHZ superposition sign to prepare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhzPhase {
    Plus,
    Minus,
}

/// `(|0…0⟩ ± |1…1⟩)/√2` on `n ≥ 2` qubits.
pub fn ghz_state(n: usize, phase: GhzPhase) -> Result<PureState, QsimError> {
    if n < 2 {
        return Err(QsimError::InvalidArity(n));
    }
    let dim = 1usize << n;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
    let a = std::f64::consts::FRAC_1_SQRT_2;
    amplitudes[0] = Complex64::new(a, 0.0);
    amplitudes[dim - 1] = Complex64::new(
        match phase {
            GhzPhase::Plus => a,
            GhzPhase::Minus => -a,
        },
        0.0,
    );
    PureState::new(n, amplitudes)
}

/// The dephasing-plus-white noise model
/// `ρ = p·|GHZ⟩⟨GHZ| + k(1−p)·|GHZ⁻⟩⟨GHZ⁻| + (1−p)(1−k)·I/2^N`.
///
/// `k = 0` is the pure white-noise model, `k = 1` pure dephasing.
pub fn noisy_ghz(n: usize, p: f64, k: f64) -> Result<MixedState, QsimError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(QsimError::Domain { name: "p", value: p });
    }
    if !(0.0..=1.0).contains(&k) || !k.is_finite() {
        return Err(QsimError::Domain { name: "k", value: k });
    }
    let plus = ghz_state(n, GhzPhase::Plus)?.to_density();
    let minus = ghz_state(n, GhzPhase::Minus)?.to_density();
    let dim = 1usize << n;
    let mut density = vec![Complex64::new(0.0, 0.0); dim * dim];
    let w_plus = p;
    let w_minus = k * (1.0 - p);
    let w_white = (1.0 - p) * (1.0 - k) / dim as f64;
    for i in 0..dim * dim {
        density[i] = w_plus * plus[i] + w_minus * minus[i];
    }
    for i in 0..dim {
        density[i * dim + i] += w_white;
    }
    MixedState::new(n, density)
}

/// `⟨GHZ_N|ρ|GHZ_N⟩`. For `noisy_ghz(n, p, k)` this equals
/// `p + (1−p)(1−k)/2^n`.
pub fn fidelity_to_ghz(state: &MixedState) -> f64 {
    let n = state.n_qubits();
    let dim = 1usize << n;
    let d = state.density();
    // ⟨GHZ|ρ|GHZ⟩ = (ρ₀₀ + ρ₀ₗ + ρₗ₀ + ρₗₗ)/2 with l = dim−1.
    let l = dim - 1;
    0.5 * (d[0] + d[l] + d[l * dim] + d[l * dim + l]).re
}

/// The behavior `P(a⃗|x⃗) = Tr[ρ · ⊗ᵢ Πᵢ(aᵢ|xᵢ)]` generated by measuring
/// `state` with the per-party observables of `strategy`.
pub fn behavior_from_state(
    state: &MixedState,
    strategy: &MeasurementStrategy,
) -> Result<Behavior, QsimError> {
    let n = state.n_qubits();
    if n != strategy.n_parties() {
        return Err(QsimError::ArityMismatch {
            state_qubits: n,
            strategy_parties: strategy.n_parties(),
        });
    }
    let inputs: Vec<usize> = (0..n).map(|p| strategy.settings(p).len()).collect();
    let dim = 1usize << n;
    let density = state.density();

    let n_settings: usize = inputs.iter().product();
    let mut table = vec![0.0; n_settings * dim];
    let mut setting = vec![0usize; n];
    for s_idx in 0..n_settings {
        behavior::decode_setting(s_idx, &inputs, &mut setting);
        // Per-qubit eigenvector components for both outcomes at this setting.
        let eig: Vec<[[f64; 2]; 2]> = (0..n)
            .map(|p| strategy.settings(p)[setting[p]].eigenvectors())
            .collect();
        let mut vector = vec![0.0f64; dim];
        for a_idx in 0..dim {
            // v = ⊗ per-qubit eigenvector; all entries real.
            for (basis, value) in vector.iter_mut().enumerate() {
                let mut prod = 1.0;
                for p in 0..n {
                    let outcome_bit = (a_idx >> (n - 1 - p)) & 1;
                    let basis_bit = (basis >> (n - 1 - p)) & 1;
                    prod *= eig[p][outcome_bit][basis_bit];
                }
                *value = prod;
            }
            // P = v† ρ v
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &vi) in vector.iter().enumerate() {
                if vi == 0.0 {
                    continue;
                }
                let mut row = Complex64::new(0.0, 0.0);
                for (j, &vj) in vector.iter().enumerate() {
                    if vj != 0.0 {
                        row += density[i * dim + j] * vj;
                    }
                }
                acc += vi * row;
            }
            table[s_idx * dim + a_idx] = acc.re.max(0.0);
        }
    }
    Behavior::new(inputs, table)
}

/// Evaluates a (possibly conditional) correlator term on a behavior.
///
/// Unreferenced parties are marginalized out at their first setting; the
/// sign-flip flags negate that party's outcome before the product. The empty
/// term evaluates to 1.
pub fn expectation(behavior: &Behavior, term: &CorrelatorTerm) -> Result<f64, QsimError> {
    behavior.expectation_of(term)
}
