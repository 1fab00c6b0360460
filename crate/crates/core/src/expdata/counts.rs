use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use super::DataError;
use crate::qsim::{behavior_from_state, DichotomicObservable, MeasurementStrategy, MixedState};

/// Measurement basis of one photon in the recorded data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTag {
    Z,
    X,
    /// (Z+X)/√2
    DPlus,
    /// (Z−X)/√2
    DMinus,
}

impl BasisTag {
    pub fn parse(s: &str) -> Result<Self, DataError> {
        match s {
            "Z" => Ok(Self::Z),
            "X" => Ok(Self::X),
            "D+" => Ok(Self::DPlus),
            "D-" => Ok(Self::DMinus),
            other => Err(DataError::UnknownBasis(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Z => "Z",
            Self::X => "X",
            Self::DPlus => "D+",
            Self::DMinus => "D-",
        }
    }
}

/// The single-qubit observable actually measured under a basis tag.
pub fn basis_observable(tag: BasisTag) -> DichotomicObservable {
    match tag {
        BasisTag::Z => DichotomicObservable::sigma_z(),
        BasisTag::X => DichotomicObservable::sigma_x(),
        BasisTag::DPlus => DichotomicObservable::diag_plus(),
        BasisTag::DMinus => DichotomicObservable::new(-std::f64::consts::FRAC_PI_4),
    }
}

/// Per-party basis tags of one recorded setting (four parties).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SettingLabel(pub [BasisTag; 4]);

impl SettingLabel {
    pub fn to_string_compact(&self) -> String {
        self.0.iter().map(|t| t.as_str()).collect()
    }
}

impl std::fmt::Display for SettingLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_string_compact())
    }
}

/// One Table-row: sixteen coincidence counts indexed `++++ … −−−−`
/// (party A most significant; `+` = bit 0) plus the integration time.
#[derive(Debug, Clone)]
pub struct CountRecord {
    pub label: SettingLabel,
    pub counts: [u64; 16],
    pub seconds: f64,
}

impl CountRecord {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// A parsed dataset: one record per distinct setting label.
#[derive(Debug, Clone)]
pub struct ExperimentDataset {
    records: Vec<CountRecord>,
    provenance: String,
}

impl ExperimentDataset {
    pub fn new(records: Vec<CountRecord>, provenance: impl Into<String>) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        for (i, r) in records.iter().enumerate() {
            if r.total() == 0 {
                return Err(DataError::ZeroTotal);
            }
            for other in &records[..i] {
                if other.label == r.label {
                    return Err(DataError::DuplicateLabel(r.label.to_string()));
                }
            }
        }
        Ok(Self { records, provenance: provenance.into() })
    }

    pub fn records(&self) -> &[CountRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn get(&self, label: SettingLabel) -> Result<&CountRecord, DataError> {
        self.records
            .iter()
            .find(|r| r.label == label)
            .ok_or_else(|| DataError::MissingRow(label.to_string()))
    }

    /// A copy with the given counts table swapped in, preserving labels.
    pub(crate) fn with_counts(&self, tables: &[[u64; 16]]) -> Self {
        let records = self
            .records
            .iter()
            .zip(tables)
            .map(|(r, c)| CountRecord { label: r.label, counts: *c, seconds: r.seconds })
            .collect();
        Self { records, provenance: self.provenance.clone() }
    }
}

/// Parses the counts CSV: header
/// `basisA,basisB,basisC,basisD,t_seconds,n_pppp,…,n_mmmm`, sixteen integer
/// count columns in `++++ … −−−−` order.
pub fn parse_dataset(text: &str, provenance: &str) -> Result<ExperimentDataset, DataError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(DataError::EmptyDataset)?;
    let expected_header = "basisA,basisB,basisC,basisD,t_seconds";
    if !header.trim_start_matches('\u{feff}').starts_with(expected_header) {
        return Err(DataError::Parse {
            line: 1,
            message: format!("header must start with {expected_header:?}"),
        });
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 21 {
            return Err(DataError::Parse {
                line: idx + 1,
                message: format!("expected 21 columns, found {}", fields.len()),
            });
        }
        let mut tags = [BasisTag::Z; 4];
        for (i, t) in tags.iter_mut().enumerate() {
            *t = BasisTag::parse(fields[i])?;
        }
        let seconds: f64 = fields[4].parse().map_err(|e| DataError::Parse {
            line: idx + 1,
            message: format!("bad integration time: {e}"),
        })?;
        let mut counts = [0u64; 16];
        for (i, c) in counts.iter_mut().enumerate() {
            *c = fields[5 + i].parse().map_err(|e| DataError::Parse {
                line: idx + 1,
                message: format!("bad count in column {}: {e}", 6 + i),
            })?;
        }
        records.push(CountRecord { label: SettingLabel(tags), counts, seconds });
    }
    ExperimentDataset::new(records, provenance)
}

pub fn dataset_to_csv(ds: &ExperimentDataset) -> String {
    let mut out = String::from(
        "basisA,basisB,basisC,basisD,t_seconds,n_pppp,n_pppm,n_ppmp,n_ppmm,n_pmpp,n_pmpm,n_pmmp,n_pmmm,n_mppp,n_mppm,n_mpmp,n_mpmm,n_mmpp,n_mmpm,n_mmmp,n_mmmm\n",
    );
    for r in ds.records() {
        let tags: Vec<&str> = r.label.0.iter().map(|t| t.as_str()).collect();
        out.push_str(&tags.join(","));
        out.push_str(&format!(",{}", r.seconds));
        for c in r.counts {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

/// Frequency estimator for a product of ±1 outcomes over `parties`
/// (with per-party sign flips), optionally conditioned on one party's
/// outcome; unreferenced parties are marginalized. Returns the estimate and
/// the total counts in the conditioned slice.
pub fn correlator_from_counts(
    rec: &CountRecord,
    parties: &[(usize, bool)],
    condition: Option<(usize, i8)>,
) -> Result<(f64, u64), DataError> {
    for &(p, _) in parties {
        if p >= 4 {
            return Err(DataError::BadParty(p));
        }
    }
    if let Some((p, _)) = condition {
        if p >= 4 {
            return Err(DataError::BadParty(p));
        }
    }
    let mut signed_sum: i64 = 0;
    let mut total: u64 = 0;
    for (a, &count) in rec.counts.iter().enumerate() {
        if let Some((party, outcome)) = condition {
            let bit = (a >> (3 - party)) & 1;
            let sign: i8 = if bit == 0 { 1 } else { -1 };
            if sign != outcome {
                continue;
            }
        }
        total += count;
        let mut sign: i64 = 1;
        for &(party, flip) in parties {
            let bit = (a >> (3 - party)) & 1;
            if (bit == 1) != flip {
                sign = -sign;
            }
        }
        signed_sum += sign * count as i64;
    }
    if total == 0 {
        return Err(DataError::ZeroConditionedTotal(rec.label.to_string()));
    }
    Ok((signed_sum as f64 / total as f64, total))
}

/// Samples a synthetic dataset at the given settings from a four-qubit state:
/// `shots` multinomial draws per row from the exact outcome distribution.
pub fn synthetic_dataset(
    state: &MixedState,
    labels: &[SettingLabel],
    shots: u64,
    seed: u64,
) -> Result<ExperimentDataset, DataError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(labels.len());
    for label in labels {
        let strategy = MeasurementStrategy::new(
            label.0.iter().map(|&t| vec![basis_observable(t)]).collect(),
        );
        let behavior = behavior_from_state(state, &strategy).map_err(|e| DataError::Parse {
            line: 0,
            message: format!("behavior build failed: {e}"),
        })?;
        let probs: Vec<f64> = (0..16).map(|a| behavior.prob(0, a)).collect();
        let counts = multinomial(&mut rng, shots, &probs);
        records.push(CountRecord {
            label: *label,
            counts,
            seconds: shots as f64,
        });
    }
    ExperimentDataset::new(records, format!("synthetic-seed{seed}"))
}

fn multinomial(rng: &mut ChaCha12Rng, n: u64, probs: &[f64]) -> [u64; 16] {
    let mut out = [0u64; 16];
    let mut remaining = n;
    let mut rest: f64 = probs.iter().sum();
    for i in 0..16 {
        if remaining == 0 {
            break;
        }
        if i == 15 {
            out[15] = remaining;
            break;
        }
        let p = if rest > 1e-15 { (probs[i] / rest).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if p >= 1.0 {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(remaining, p).expect("valid binomial").sample(rng)
        };
        out[i] = draw;
        remaining -= draw;
        rest -= probs[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::bundled_table1;
    use super::*;

    #[test]
    fn bundled_has_nine_rows_and_exact_counts() {
        let ds = bundled_table1();
        assert_eq!(ds.records().len(), 9);
        let zzzz = ds
            .get(SettingLabel([BasisTag::Z; 4]))
            .unwrap();
        assert_eq!(zzzz.counts[0], 8552);
        assert_eq!(zzzz.counts[15], 8311);
        assert_eq!(zzzz.seconds, 20000.0);
    }

    #[test]
    fn csv_roundtrip() {
        let ds = bundled_table1();
        let csv = dataset_to_csv(&ds);
        let back = parse_dataset(&csv, "copy").unwrap();
        for (a, b) in ds.records().iter().zip(back.records()) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.counts, b.counts);
            assert_eq!(a.seconds, b.seconds);
        }
    }

    #[test]
    fn short_row_is_named_in_error() {
        let text = "basisA,basisB,basisC,basisD,t_seconds,n_pppp\nZ,Z,Z,Z,10,1,2,3\n";
        match parse_dataset(text, "t") {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let text = "basisA,basisB,basisC,basisD,t_seconds,n_pppp\n";
        assert!(matches!(parse_dataset(text, "t"), Err(DataError::EmptyDataset)));
    }

    #[test]
    fn hom_visibility_from_xxxx_row() {
        // Parity-weighted sum of the XXXX row: 3704/3822.
        let ds = bundled_table1();
        let rec = ds.get(SettingLabel([BasisTag::X; 4])).unwrap();
        let (v, total) = correlator_from_counts(
            rec,
            &[(0, false), (1, false), (2, false), (3, false)],
            None,
        )
        .unwrap();
        assert_eq!(total, 3822);
        assert!((v - 3704.0 / 3822.0).abs() < 1e-15);
        assert!((v - 0.9691).abs() < 1e-4);
    }

    #[test]
    fn four_body_diag_row() {
        // X(Z+X)/√2 X X: parity sum 2793/3965.
        let ds = bundled_table1();
        let rec = ds
            .get(SettingLabel([BasisTag::X, BasisTag::DPlus, BasisTag::X, BasisTag::X]))
            .unwrap();
        let (v, total) = correlator_from_counts(
            rec,
            &[(0, false), (1, false), (2, false), (3, false)],
            None,
        )
        .unwrap();
        assert_eq!(total, 3965);
        assert!((v - 2793.0 / 3965.0).abs() < 1e-15);
    }

    #[test]
    fn conditioned_pair_from_zzzx() {
        // ⟨A₀C₀⟩ conditioned on Dave = + in X: 9645/9759.
        let ds = bundled_table1();
        let rec = ds
            .get(SettingLabel([BasisTag::Z, BasisTag::Z, BasisTag::Z, BasisTag::X]))
            .unwrap();
        let (v, total) =
            correlator_from_counts(rec, &[(0, false), (2, false)], Some((3, 1))).unwrap();
        assert_eq!(total, 9759);
        assert!((v - 9645.0 / 9759.0).abs() < 1e-15);
    }

    #[test]
    fn empty_party_set_gives_one() {
        let ds = bundled_table1();
        let rec = ds.get(SettingLabel([BasisTag::X; 4])).unwrap();
        let (v, _) = correlator_from_counts(rec, &[], None).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn conditioning_consistency_identity() {
        // conditional × probability summed over both branches equals the
        // unconditioned product correlator, exactly on counts.
        let ds = bundled_table1();
        let rec = ds
            .get(SettingLabel([BasisTag::Z, BasisTag::Z, BasisTag::Z, BasisTag::X]))
            .unwrap();
        let parties = [(0, false), (2, false)];
        let grand_total = rec.total() as f64;
        let (uncond, _) = correlator_from_counts(rec, &parties, None).unwrap();
        let (plus, n_plus) = correlator_from_counts(rec, &parties, Some((3, 1))).unwrap();
        let (minus, n_minus) = correlator_from_counts(rec, &parties, Some((3, -1))).unwrap();
        let recombined =
            plus * n_plus as f64 / grand_total + minus * n_minus as f64 / grand_total;
        assert!((recombined - uncond).abs() < 1e-14);
    }
}
