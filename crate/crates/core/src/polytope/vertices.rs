use super::simplex::LpError;
use crate::qsim::Behavior;

/// All deterministic single-input-function behaviors of the scenario: each
/// party's output is a fixed ±1-valued function of its own input. There are
/// `∏ᵢ 2^(inputsᵢ)` of them; the enumeration is capped at 10⁶.
pub fn local_deterministic_vertices(inputs: &[usize]) -> Result<Vec<Behavior>, LpError> {
    if inputs.is_empty() {
        return Err(LpError::BadInput("no parties".into()));
    }
    let mut total: usize = 1;
    for &m in inputs {
        let per_party = 1usize
            .checked_shl(m as u32)
            .ok_or_else(|| LpError::BadInput("input cardinality too large".into()))?;
        total = total
            .checked_mul(per_party)
            .ok_or_else(|| LpError::BadInput("vertex count overflows".into()))?;
    }
    if total > 1_000_000 {
        return Err(LpError::BadInput(format!(
            "{total} deterministic vertices exceed the 10^6 cap"
        )));
    }

    let n = inputs.len();
    let mut vertices = Vec::with_capacity(total);
    // Function masks per party: bit x of mask = output bit on input x.
    let mut masks = vec![0usize; n];
    for idx in 0..total {
        let mut rem = idx;
        for p in (0..n).rev() {
            let functions = 1usize << inputs[p];
            masks[p] = rem % functions;
            rem /= functions;
        }
        let masks_ref = &masks;
        let b = Behavior::deterministic(inputs, |party, input| (masks_ref[party] >> input) & 1)
            .map_err(|e| LpError::BadInput(format!("vertex build: {e}")))?;
        vertices.push(b);
    }
    Ok(vertices)
}
