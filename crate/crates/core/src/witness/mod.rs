//! Witnesses of genuine LOSR multipartiteness over correlator terms, their
//! canonical measurement strategies, closed-form noise thresholds, and the
//! nonnegative probability-form representation.

mod probability;
mod term;

pub use probability::{to_probability_form, ProbabilityForm, ProbabilityFormWitness};
pub use term::{Condition, CorrelatorTerm, PartyRef};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsim::{
    behavior_from_state, expectation, noisy_ghz, Behavior, DichotomicObservable,
    MeasurementStrategy, QsimError,
};

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("witness does not fit scenario: {0}")]
    BadTerm(String),
    #[error("witness is for {expected} parties, behavior has {got}")]
    SignatureMismatch { expected: usize, got: usize },
    #[error("N-party family needs n ≥ 3, got {0}")]
    InvalidArity(usize),
    #[error("target and noise evaluate identically; no crossing")]
    NoCrossing,
    #[error("witness not violated at p = 1 (value {value}, bound {bound})")]
    NoViolationAtUnitP { value: f64, bound: f64 },
    #[error("conditional terms have no linear probability form")]
    UnsupportedConditional,
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// A linear functional `Σ coeff·⟨term⟩ ≤ bound` over a fixed scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    name: String,
    n_parties: usize,
    inputs_per_party: Vec<usize>,
    terms: Vec<CorrelatorTerm>,
    bound: f64,
}

impl Witness {
    pub fn new(
        name: impl Into<String>,
        inputs_per_party: Vec<usize>,
        terms: Vec<CorrelatorTerm>,
        bound: f64,
    ) -> Result<Self, WitnessError> {
        let w = Self {
            name: name.into(),
            n_parties: inputs_per_party.len(),
            inputs_per_party,
            terms,
            bound,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), WitnessError> {
        if self.n_parties != self.inputs_per_party.len() {
            return Err(WitnessError::BadTerm(format!(
                "n_parties {} does not match inputs_per_party of length {}",
                self.n_parties,
                self.inputs_per_party.len()
            )));
        }
        for t in &self.terms {
            t.fits(&self.inputs_per_party).map_err(WitnessError::BadTerm)?;
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn inputs_per_party(&self) -> &[usize] {
        &self.inputs_per_party
    }

    pub fn terms(&self) -> &[CorrelatorTerm] {
        &self.terms
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, WitnessError> {
        let w: Self = serde_json::from_str(s)
            .map_err(|e| WitnessError::BadTerm(format!("JSON parse error: {e}")))?;
        w.validate()?;
        Ok(w)
    }
}

/// The W3 strategy: Alice and Charlie measure `(σ_z, σ_x)`, Bob measures
/// `((σ_x+σ_z)/√2, (σ_x−σ_z)/√2)`.
pub fn w3_strategy() -> MeasurementStrategy {
    MeasurementStrategy::new(vec![
        vec![DichotomicObservable::sigma_z(), DichotomicObservable::sigma_x()],
        vec![DichotomicObservable::diag_plus(), DichotomicObservable::diag_minus()],
        vec![DichotomicObservable::sigma_z(), DichotomicObservable::sigma_x()],
    ])
}

/// The W4 strategy: as W3 with Dave behaving like Charlie.
pub fn w4_strategy() -> MeasurementStrategy {
    MeasurementStrategy::new(vec![
        vec![DichotomicObservable::sigma_z(), DichotomicObservable::sigma_x()],
        vec![DichotomicObservable::diag_plus(), DichotomicObservable::diag_minus()],
        vec![DichotomicObservable::sigma_z(), DichotomicObservable::sigma_x()],
        vec![DichotomicObservable::sigma_z(), DichotomicObservable::sigma_x()],
    ])
}

/// The N-party chain strategy: Alice `{σ_z, σ_x}`, Bob
/// `{(σ_x+σ_z)/√2, (−σ_x+σ_z)/√2, σ_z}`, every Charlie `{σ_z, σ_x}`.
pub fn n_party_strategy(n: usize) -> Result<MeasurementStrategy, WitnessError> {
    if n < 3 {
        return Err(WitnessError::InvalidArity(n));
    }
    let mut parties = Vec::with_capacity(n);
    parties.push(vec![DichotomicObservable::sigma_z(), DichotomicObservable::sigma_x()]);
    parties.push(vec![
        DichotomicObservable::diag_plus(),
        DichotomicObservable::diag_minus().flipped(),
        DichotomicObservable::sigma_z(),
    ]);
    for _ in 2..n {
        parties.push(vec![DichotomicObservable::sigma_z(), DichotomicObservable::sigma_x()]);
    }
    Ok(MeasurementStrategy::new(parties))
}

/// The seven-term tripartite witness with bound 8:
/// `⟨A₀B₀⟩ + ⟨B₀C₀⟩ − ⟨A₀B₁⟩ − ⟨B₁C₀⟩ + 4⟨A₀C₀⟩ + 2⟨A₁B₀C₁⟩ + 2⟨A₁B₁C₁⟩ ≤ 8`.
pub fn build_w3() -> Witness {
    let terms = vec![
        CorrelatorTerm::product(&[(0, 0), (1, 0)]),
        CorrelatorTerm::product(&[(1, 0), (2, 0)]),
        CorrelatorTerm::product(&[(0, 0), (1, 1)]).with_coefficient(-1.0),
        CorrelatorTerm::product(&[(1, 1), (2, 0)]).with_coefficient(-1.0),
        CorrelatorTerm::product(&[(0, 0), (2, 0)]).with_coefficient(4.0),
        CorrelatorTerm::product(&[(0, 1), (1, 0), (2, 1)]).with_coefficient(2.0),
        CorrelatorTerm::product(&[(0, 1), (1, 1), (2, 1)]).with_coefficient(2.0),
    ];
    Witness::new("W3", vec![2, 2, 2], terms, 8.0).expect("W3 is well formed")
}

/// The six-term quadripartite witness with bound 6:
/// `⟨A₀B₀⟩ − ⟨A₀B₁⟩ + 2⟨A₀D₀⟩ + 2⟨C₀D₀⟩ + ⟨A₁B₀C₁D₁⟩ + ⟨A₁B₁C₁D₁⟩ ≤ 6`.
pub fn build_w4() -> Witness {
    let terms = vec![
        CorrelatorTerm::product(&[(0, 0), (1, 0)]),
        CorrelatorTerm::product(&[(0, 0), (1, 1)]).with_coefficient(-1.0),
        CorrelatorTerm::product(&[(0, 0), (3, 0)]).with_coefficient(2.0),
        CorrelatorTerm::product(&[(2, 0), (3, 0)]).with_coefficient(2.0),
        CorrelatorTerm::product(&[(0, 1), (1, 0), (2, 1), (3, 1)]),
        CorrelatorTerm::product(&[(0, 1), (1, 1), (2, 1), (3, 1)]),
    ];
    Witness::new("W4", vec![2, 2, 2, 2], terms, 6.0).expect("W4 is well formed")
}

/// The N-party combined inequality with bound `2n`, stored pre-multiplied:
/// the conditioning indicator is expanded into joint correlators so evaluation
/// stays linear and division-free. Expanding
/// `(1+⟨C̃₁⟩)/2·I_Bell^{+} + (1−⟨C̃₁⟩)/2·I_Bell^{−}` leaves
/// `⟨A₀B₀⟩ + ⟨A₀B₁⟩ + ⟨A₁B₀C̃₁⟩ − ⟨A₁B₁C̃₁⟩`, and `2·I_same` contributes the
/// `n−1` two-body chain terms.
pub fn build_n_party(n: usize) -> Result<Witness, WitnessError> {
    if n < 3 {
        return Err(WitnessError::InvalidArity(n));
    }
    let mut inputs = vec![2usize; n];
    inputs[1] = 3;
    let charlies_at_x: Vec<(usize, usize)> = (2..n).map(|p| (p, 1)).collect();

    let mut terms = vec![
        CorrelatorTerm::product(&[(0, 0), (1, 0)]),
        CorrelatorTerm::product(&[(0, 0), (1, 1)]),
    ];
    let mut bell_plus = vec![(0, 1), (1, 0)];
    bell_plus.extend(&charlies_at_x);
    terms.push(CorrelatorTerm::product(&bell_plus));
    let mut bell_minus = vec![(0, 1), (1, 1)];
    bell_minus.extend(&charlies_at_x);
    terms.push(CorrelatorTerm::product(&bell_minus).with_coefficient(-1.0));

    // 2·I_same: ⟨A₀B₂⟩ + ⟨B₂C₁₀⟩ + Σ ⟨C_j₀ C_{j+1}₀⟩.
    terms.push(CorrelatorTerm::product(&[(0, 0), (1, 2)]).with_coefficient(2.0));
    terms.push(CorrelatorTerm::product(&[(1, 2), (2, 0)]).with_coefficient(2.0));
    for p in 2..n - 1 {
        terms.push(CorrelatorTerm::product(&[(p, 0), (p + 1, 0)]).with_coefficient(2.0));
    }

    Witness::new(format!("N{n}"), inputs, terms, 2.0 * n as f64)
}

/// `Σ coeff·expectation(term)` of `w` on `b`.
pub fn evaluate(w: &Witness, b: &Behavior) -> Result<f64, WitnessError> {
    if w.n_parties() != b.n_parties() {
        return Err(WitnessError::SignatureMismatch {
            expected: w.n_parties(),
            got: b.n_parties(),
        });
    }
    let mut total = 0.0;
    for t in w.terms() {
        total += t.coefficient() * expectation(b, t)?;
    }
    Ok(total)
}

/// Per-term values `coeff·⟨term⟩`, in witness term order.
pub fn evaluate_terms(w: &Witness, b: &Behavior) -> Result<Vec<f64>, WitnessError> {
    if w.n_parties() != b.n_parties() {
        return Err(WitnessError::SignatureMismatch {
            expected: w.n_parties(),
            got: b.n_parties(),
        });
    }
    w.terms()
        .iter()
        .map(|t| Ok(t.coefficient() * expectation(b, t)?))
        .collect()
}

/// Solves `v·w(target) + (1−v)·w(noise) = bound` for the visibility of
/// `target` against the specific noise behavior `noise`, clamped to [0, 1].
pub fn visibility_specific(
    w: &Witness,
    target: &Behavior,
    noise: &Behavior,
) -> Result<f64, WitnessError> {
    let vt = evaluate(w, target)?;
    let vn = evaluate(w, noise)?;
    if (vt - vn).abs() < 1e-12 {
        return Err(WitnessError::NoCrossing);
    }
    Ok(((w.bound() - vn) / (vt - vn)).clamp(0.0, 1.0))
}

/// The smallest `p` at which `w` on `noisy_ghz(n, p, k)` (measured with
/// `strategy`) exceeds its bound, together with the matching GHZ fidelity.
///
/// The witness value is affine in `p` for fixed `k`, so the crossing is exact:
/// no bisection or grid scan.
pub fn threshold_mixed_noise(
    w: &Witness,
    strategy: &MeasurementStrategy,
    n: usize,
    k: f64,
) -> Result<(f64, f64), WitnessError> {
    let at = |p: f64| -> Result<f64, WitnessError> {
        let state = noisy_ghz(n, p, k)?;
        evaluate(w, &behavior_from_state(&state, strategy)?)
    };
    let v0 = at(0.0)?;
    let v1 = at(1.0)?;
    if v1 <= w.bound() + 1e-12 {
        return Err(WitnessError::NoViolationAtUnitP { value: v1, bound: w.bound() });
    }
    let p_star = ((w.bound() - v0) / (v1 - v0)).clamp(0.0, 1.0);
    let f_star = p_star + (1.0 - p_star) * (1.0 - k) / (1u64 << n) as f64;
    Ok((p_star, f_star))
}
