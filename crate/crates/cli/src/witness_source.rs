use anyhow::{bail, Context, Result};
use ghzw_core::qsim::MeasurementStrategy;
use ghzw_core::witness::{
    build_n_party, build_w3, build_w4, n_party_strategy, w3_strategy, w4_strategy, Witness,
};

/// A witness together with the measurement strategy that attains its quantum
/// value.
pub struct ResolvedWitness {
    pub witness: Witness,
    pub strategy: MeasurementStrategy,
    pub n: usize,
}

/// Resolves `w3 | w4 | n-party | <path.json>`. File witnesses are paired with
/// the canonical strategy of a matching scenario signature.
pub fn resolve(source: &str, n: Option<usize>) -> Result<ResolvedWitness> {
    match source {
        "w3" => Ok(ResolvedWitness { witness: build_w3(), strategy: w3_strategy(), n: 3 }),
        "w4" => Ok(ResolvedWitness { witness: build_w4(), strategy: w4_strategy(), n: 4 }),
        "n-party" => {
            let n = n.context("--witness n-party needs --n")?;
            Ok(ResolvedWitness {
                witness: build_n_party(n)?,
                strategy: n_party_strategy(n)?,
                n,
            })
        }
        path => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading witness file {path}"))?;
            let witness = Witness::from_json(&text)?;
            let n_parties = witness.n_parties();
            let strategy = strategy_for_signature(witness.inputs_per_party())
                .with_context(|| {
                    format!(
                        "no builtin measurement strategy for signature {:?}; \
                         supported: all-binary 3 or 4 parties, or [2,3,2,…]",
                        witness.inputs_per_party()
                    )
                })?;
            if let Some(expected) = n {
                if expected != n_parties {
                    bail!("--n {expected} conflicts with the {n_parties}-party witness file");
                }
            }
            Ok(ResolvedWitness { witness, strategy, n: n_parties })
        }
    }
}

fn strategy_for_signature(inputs: &[usize]) -> Option<MeasurementStrategy> {
    if inputs == [2, 2, 2] {
        return Some(w3_strategy());
    }
    if inputs == [2, 2, 2, 2] {
        return Some(w4_strategy());
    }
    let n = inputs.len();
    if n >= 3 && inputs[0] == 2 && inputs[1] == 3 && inputs[2..].iter().all(|&m| m == 2) {
        return n_party_strategy(n).ok();
    }
    None
}
