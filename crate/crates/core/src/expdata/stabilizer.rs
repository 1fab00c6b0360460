use super::counts::{correlator_from_counts, BasisTag, ExperimentDataset, SettingLabel};
use super::DataError;

/// Output of the two-setting stabilizer witness analysis.
#[derive(Debug, Clone, Copy)]
pub struct StabilizerReport {
    /// ⟨W⟩ = 3 − 2[(⟨S₁⟩+1)/2 + ⟨∏ₖ (Sₖ+1)/2⟩]; negative values witness
    /// genuine multipartite entanglement.
    pub witness_value: f64,
    /// F ≥ (1 − ⟨W⟩)/2.
    pub fidelity_lower_bound: f64,
    /// ⟨X⊗X⊗X⊗X⟩, the Hong-Ou-Mandel interference proxy.
    pub hom_visibility: f64,
}

/// Evaluates the GHZ stabilizer witness from the `XXXX` and `ZZZZ` rows.
///
/// `S₁ = X⊗X⊗X⊗X` is a plain correlator. The product `∏ₖ (Sₖ+1)/2` over the
/// pairwise stabilizers `Sₖ = Z⁽ᵏ⁻¹⁾Z⁽ᵏ⁾` is a product of commuting
/// projectors, so its expectation is the probability that all four Z outcomes
/// agree — not the product of the pairwise expectations.
pub fn stabilizer_fidelity(ds: &ExperimentDataset) -> Result<StabilizerReport, DataError> {
    let xxxx = ds.get(SettingLabel([BasisTag::X; 4]))?;
    let zzzz = ds.get(SettingLabel([BasisTag::Z; 4]))?;

    let (s1, _) = correlator_from_counts(
        xxxx,
        &[(0, false), (1, false), (2, false), (3, false)],
        None,
    )?;
    let total = zzzz.total();
    if total == 0 {
        return Err(DataError::ZeroTotal);
    }
    let all_equal = (zzzz.counts[0] + zzzz.counts[15]) as f64 / total as f64;

    let witness_value = 3.0 - 2.0 * ((s1 + 1.0) / 2.0 + all_equal);
    Ok(StabilizerReport {
        witness_value,
        fidelity_lower_bound: (1.0 - witness_value) / 2.0,
        hom_visibility: s1,
    })
}
