use serde::{Deserialize, Serialize};

use super::{Witness, WitnessError};
use crate::qsim::Behavior;

/// A witness expressed over event probabilities with nonnegative coefficients,
/// the representation in which inflation dual certificates arrive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityFormWitness {
    pub name: String,
    pub inputs_per_party: Vec<usize>,
    /// One coefficient per `(setting, outcome)` event, setting-major, matching
    /// the behavior table layout.
    pub coefficients: Vec<f64>,
    pub bound: f64,
}

/// The affine relation between a correlator witness and its probability form:
/// `eval_corr(P) = scale·eval_prob(P) − offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityForm {
    pub scale: f64,
    pub offset: f64,
}

impl ProbabilityFormWitness {
    pub fn evaluate(&self, b: &Behavior) -> Result<f64, WitnessError> {
        if b.inputs() != self.inputs_per_party.as_slice() {
            return Err(WitnessError::SignatureMismatch {
                expected: self.inputs_per_party.len(),
                got: b.n_parties(),
            });
        }
        Ok(self
            .coefficients
            .iter()
            .zip(b.table())
            .map(|(c, p)| c * p)
            .sum())
    }

    pub fn min_coefficient(&self) -> f64 {
        self.coefficients.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Rewrites `w` over event probabilities. Negative event coefficients are
/// removed by adding per-setting multiples of the normalization
/// `Σ_a P(a|x) = 1`, then the whole form is rescaled so the largest
/// coefficient is 1. Conditional terms are rejected: dividing by a
/// conditioning probability is not linear in the behavior.
pub fn to_probability_form(
    w: &Witness,
) -> Result<(ProbabilityFormWitness, ProbabilityForm), WitnessError> {
    let inputs = w.inputs_per_party().to_vec();
    let n = inputs.len();
    let n_settings: usize = inputs.iter().product();
    let n_outcomes = 1usize << n;
    let mut coeffs = vec![0.0f64; n_settings * n_outcomes];

    for t in w.terms() {
        if t.condition().is_some() {
            return Err(WitnessError::UnsupportedConditional);
        }
        let mut setting = vec![0usize; n];
        for r in t.participants() {
            setting[r.party] = r.setting;
        }
        let mut s_idx = 0;
        for (p, &x) in setting.iter().enumerate() {
            s_idx = s_idx * inputs[p] + x;
        }
        for a in 0..n_outcomes {
            let mut sign = 1.0;
            for r in t.participants() {
                let bit = (a >> (n - 1 - r.party)) & 1;
                if (bit == 1) != r.flip {
                    sign = -sign;
                }
            }
            coeffs[s_idx * n_outcomes + a] += t.coefficient() * sign;
        }
    }

    // Per-setting shift to nonnegativity.
    let mut offset = 0.0;
    for s in 0..n_settings {
        let block = &mut coeffs[s * n_outcomes..(s + 1) * n_outcomes];
        let min = block.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < 0.0 {
            for c in block.iter_mut() {
                *c -= min;
            }
            offset += -min;
        }
    }
    // Normalize the largest coefficient to 1.
    let max = coeffs.iter().cloned().fold(0.0f64, f64::max);
    let scale = if max > 0.0 { max } else { 1.0 };
    if max > 0.0 {
        for c in coeffs.iter_mut() {
            *c /= scale;
        }
    }

    let bound = (w.bound() + offset) / scale;
    Ok((
        ProbabilityFormWitness {
            name: format!("{}-prob", w.name()),
            inputs_per_party: inputs,
            coefficients: coeffs,
            bound,
        },
        ProbabilityForm { scale, offset },
    ))
}
