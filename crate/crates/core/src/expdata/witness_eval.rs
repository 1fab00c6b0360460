use super::counts::{correlator_from_counts, BasisTag, ExperimentDataset, SettingLabel};
use super::DataError;

use BasisTag::{DMinus, DPlus, X, Z};

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const D: usize = 3;

fn row(
    ds: &ExperimentDataset,
    tags: [BasisTag; 4],
    parties: &[(usize, bool)],
    condition: Option<(usize, i8)>,
) -> Result<f64, DataError> {
    let rec = ds.get(SettingLabel(tags))?;
    Ok(correlator_from_counts(rec, parties, condition)?.0)
}

/// The six-term quadripartite witness value from raw counts.
///
/// Term-to-row mapping: `⟨A₀B₀⟩ ← Z D+ X X`, `⟨A₀B₁⟩ ← Z D- X X` with the
/// B flip (the strategy's `B₁ = (X−Z)/√2` is minus the measured `(Z−X)/√2`),
/// `⟨A₀D₀⟩`, `⟨C₀D₀⟩ ← Z Z Z Z`, and both four-body terms from `X D± X X`.
pub fn eval_w4_from_data(ds: &ExperimentDataset) -> Result<f64, DataError> {
    let a0b0 = row(ds, [Z, DPlus, X, X], &[(A, false), (B, false)], None)?;
    let a0b1 = row(ds, [Z, DMinus, X, X], &[(A, false), (B, true)], None)?;
    let a0d0 = row(ds, [Z, Z, Z, Z], &[(A, false), (D, false)], None)?;
    let c0d0 = row(ds, [Z, Z, Z, Z], &[(C, false), (D, false)], None)?;
    let all_plus = row(
        ds,
        [X, DPlus, X, X],
        &[(A, false), (B, false), (C, false), (D, false)],
        None,
    )?;
    let all_minus = row(
        ds,
        [X, DMinus, X, X],
        &[(A, false), (B, true), (C, false), (D, false)],
        None,
    )?;
    Ok(a0b0 - a0b1 + 2.0 * a0d0 + 2.0 * c0d0 + all_plus + all_minus)
}

/// The seven-term tripartite witness value from raw counts, with the
/// three-photon data carved out by conditioning every term on Dave reading +1
/// in the X basis.
pub fn eval_w3_from_data(ds: &ExperimentDataset) -> Result<f64, DataError> {
    let cond = Some((D, 1));
    let a0b0 = row(ds, [Z, DPlus, X, X], &[(A, false), (B, false)], cond)?;
    let b0c0 = row(ds, [X, DPlus, Z, X], &[(B, false), (C, false)], cond)?;
    let a0b1 = row(ds, [Z, DMinus, X, X], &[(A, false), (B, true)], cond)?;
    let b1c0 = row(ds, [X, DMinus, Z, X], &[(B, true), (C, false)], cond)?;
    let a0c0 = row(ds, [Z, Z, Z, X], &[(A, false), (C, false)], cond)?;
    let abc_plus = row(ds, [X, DPlus, X, X], &[(A, false), (B, false), (C, false)], cond)?;
    let abc_minus = row(ds, [X, DMinus, X, X], &[(A, false), (B, true), (C, false)], cond)?;
    Ok(a0b0 + b0c0 - a0b1 - b1c0 + 4.0 * a0c0 + 2.0 * abc_plus + 2.0 * abc_minus)
}
