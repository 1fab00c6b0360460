use super::QsimError;
use crate::witness::CorrelatorTerm;

/// A conditional outcome distribution `P(a⃗|x⃗)` over dichotomic parties.
///
/// The table is laid out setting-major: entry `s·2^N + a` where `s` is the
/// mixed-radix setting index and `a` the outcome bitstring (party 0 is the
/// most significant digit of both; outcome bit 0 encodes +1, bit 1 encodes −1).
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    inputs: Vec<usize>,
    table: Vec<f64>,
}

pub(super) fn decode_setting(mut s_idx: usize, inputs: &[usize], out: &mut [usize]) {
    for p in (0..inputs.len()).rev() {
        out[p] = s_idx % inputs[p];
        s_idx /= inputs[p];
    }
}

impl Behavior {
    pub fn new(inputs: Vec<usize>, table: Vec<f64>) -> Result<Self, QsimError> {
        if inputs.is_empty() || inputs.iter().any(|&m| m == 0) {
            return Err(QsimError::InvalidState(
                "every party needs at least one input".into(),
            ));
        }
        let n_settings: usize = inputs.iter().product();
        let n_outcomes = 1usize << inputs.len();
        if table.len() != n_settings * n_outcomes {
            return Err(QsimError::InvalidState(format!(
                "table has {} entries, expected {}",
                table.len(),
                n_settings * n_outcomes
            )));
        }
        let b = Self { inputs, table };
        if b.table.iter().any(|&v| v < -1e-12) {
            return Err(QsimError::InvalidState("negative probability".into()));
        }
        if b.normalization_violation() > 1e-10 {
            return Err(QsimError::InvalidState(
                "a conditional distribution does not sum to 1".into(),
            ));
        }
        Ok(b)
    }

    /// The deterministic behavior where party `p` on input `x` outputs the bit
    /// `f(p, x)` (0 ↦ +1, 1 ↦ −1).
    pub fn deterministic(
        inputs: &[usize],
        f: impl Fn(usize, usize) -> usize,
    ) -> Result<Self, QsimError> {
        let n = inputs.len();
        let n_settings: usize = inputs.iter().product();
        let n_outcomes = 1usize << n;
        let mut table = vec![0.0; n_settings * n_outcomes];
        let mut setting = vec![0usize; n];
        for s in 0..n_settings {
            decode_setting(s, inputs, &mut setting);
            let mut a = 0usize;
            for p in 0..n {
                a = (a << 1) | (f(p, setting[p]) & 1);
            }
            table[s * n_outcomes + a] = 1.0;
        }
        Self::new(inputs.to_vec(), table)
    }

    /// The uniform (white-noise) behavior.
    pub fn white_noise(inputs: &[usize]) -> Self {
        let n_settings: usize = inputs.iter().product();
        let n_outcomes = 1usize << inputs.len();
        let table = vec![1.0 / n_outcomes as f64; n_settings * n_outcomes];
        Self::new(inputs.to_vec(), table).expect("uniform table is valid")
    }

    /// Convex mixture; weights must sum to ~1 and signatures must match.
    pub fn mix(components: &[(f64, &Behavior)]) -> Result<Self, QsimError> {
        let first = components
            .first()
            .ok_or_else(|| QsimError::InvalidState("empty mixture".into()))?
            .1;
        let mut table = vec![0.0; first.table.len()];
        for (w, b) in components {
            if b.inputs != first.inputs {
                return Err(QsimError::InvalidState("mixture signature mismatch".into()));
            }
            for (t, v) in table.iter_mut().zip(&b.table) {
                *t += w * v;
            }
        }
        Self::new(first.inputs.clone(), table)
    }

    pub fn n_parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn n_settings(&self) -> usize {
        self.inputs.iter().product()
    }

    pub fn n_outcomes(&self) -> usize {
        1usize << self.inputs.len()
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn prob(&self, setting_idx: usize, outcome_idx: usize) -> f64 {
        self.table[setting_idx * self.n_outcomes() + outcome_idx]
    }

    pub fn setting_index(&self, setting: &[usize]) -> usize {
        let mut idx = 0;
        for (p, &x) in setting.iter().enumerate() {
            idx = idx * self.inputs[p] + x;
        }
        idx
    }

    pub fn normalization_violation(&self) -> f64 {
        let n_outcomes = self.n_outcomes();
        let mut worst = 0.0f64;
        for s in 0..self.n_settings() {
            let sum: f64 = self.table[s * n_outcomes..(s + 1) * n_outcomes].iter().sum();
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }

    /// Largest deviation from nonsignalling: for each party, the marginal over
    /// the remaining parties must not depend on that party's input.
    pub fn nonsignalling_violation(&self) -> f64 {
        let n = self.n_parties();
        let n_outcomes = self.n_outcomes();
        let mut worst = 0.0f64;
        let mut setting = vec![0usize; n];
        for p in 0..n {
            if self.inputs[p] < 2 {
                continue;
            }
            // Enumerate settings with party p's input fixed to 0, then compare
            // marginals against each alternative input of p.
            for s in 0..self.n_settings() {
                decode_setting(s, &self.inputs, &mut setting);
                if setting[p] != 0 {
                    continue;
                }
                for alt in 1..self.inputs[p] {
                    let mut alt_setting = setting.clone();
                    alt_setting[p] = alt;
                    let s_alt = self.setting_index(&alt_setting);
                    // Marginal over party p per joint outcome of the others.
                    for rest in 0..(n_outcomes >> 1) {
                        let mut m0 = 0.0;
                        let mut m1 = 0.0;
                        for bit in 0..2 {
                            let a = insert_bit(rest, n - 1 - p, bit);
                            m0 += self.table[s * n_outcomes + a];
                            m1 += self.table[s_alt * n_outcomes + a];
                        }
                        worst = worst.max((m0 - m1).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn is_nonsignalling(&self, tol: f64) -> bool {
        self.nonsignalling_violation() <= tol
    }

    /// Relabels parties: new party `i` is old party `perm[i]`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<Self, QsimError> {
        let n = self.n_parties();
        if perm.len() != n {
            return Err(QsimError::InvalidState("permutation length mismatch".into()));
        }
        let new_inputs: Vec<usize> = perm.iter().map(|&p| self.inputs[p]).collect();
        let n_outcomes = self.n_outcomes();
        let new_settings: usize = new_inputs.iter().product();
        let mut table = vec![0.0; new_settings * n_outcomes];
        let mut new_setting = vec![0usize; n];
        let mut old_setting = vec![0usize; n];
        for s_new in 0..new_settings {
            decode_setting(s_new, &new_inputs, &mut new_setting);
            for (i, &p) in perm.iter().enumerate() {
                old_setting[p] = new_setting[i];
            }
            let s_old = self.setting_index(&old_setting);
            for a_new in 0..n_outcomes {
                let mut a_old = 0usize;
                for (i, &p) in perm.iter().enumerate() {
                    let bit = (a_new >> (n - 1 - i)) & 1;
                    a_old |= bit << (n - 1 - p);
                }
                table[s_new * n_outcomes + a_new] = self.table[s_old * n_outcomes + a_old];
            }
        }
        Self::new(new_inputs, table)
    }

    pub(super) fn expectation_of(&self, term: &CorrelatorTerm) -> Result<f64, QsimError> {
        let n = self.n_parties();
        let n_outcomes = self.n_outcomes();

        let mut seen = vec![false; n];
        let mut setting = vec![0usize; n];
        for r in term.participants() {
            if r.party >= n || r.setting >= self.inputs[r.party] {
                return Err(QsimError::SignatureMismatch { party: r.party, setting: r.setting });
            }
            if seen[r.party] {
                return Err(QsimError::DuplicateParty(r.party));
            }
            seen[r.party] = true;
            setting[r.party] = r.setting;
        }
        if let Some(c) = term.condition() {
            if c.party >= n || c.setting >= self.inputs[c.party] {
                return Err(QsimError::SignatureMismatch { party: c.party, setting: c.setting });
            }
            if seen[c.party] {
                return Err(QsimError::DuplicateParty(c.party));
            }
            setting[c.party] = c.setting;
        }

        let s_idx = self.setting_index(&setting);
        let mut num = 0.0;
        let mut cond_mass = 0.0;
        for a in 0..n_outcomes {
            if let Some(c) = term.condition() {
                let bit = (a >> (n - 1 - c.party)) & 1;
                let sign: i8 = if bit == 0 { 1 } else { -1 };
                if sign != c.outcome {
                    continue;
                }
            }
            let p = self.table[s_idx * n_outcomes + a];
            cond_mass += p;
            let mut sign = 1.0;
            for r in term.participants() {
                let bit = (a >> (n - 1 - r.party)) & 1;
                if (bit == 1) != r.flip {
                    sign = -sign;
                }
            }
            num += sign * p;
        }
        if term.condition().is_some() {
            if cond_mass <= 1e-12 {
                return Err(QsimError::DegenerateCondition);
            }
            Ok(num / cond_mass)
        } else {
            Ok(num)
        }
    }
}

fn insert_bit(packed: usize, pos: usize, bit: usize) -> usize {
    let low_mask = (1usize << pos) - 1;
    let low = packed & low_mask;
    let high = packed >> pos;
    (high << (pos + 1)) | (bit << pos) | low
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_is_normalized_and_nonsignalling() {
        let b = Behavior::deterministic(&[2, 2, 2], |p, x| (p + x) % 2).unwrap();
        assert!(b.normalization_violation() < 1e-15);
        assert!(b.nonsignalling_violation() < 1e-15);
    }

    #[test]
    fn signalling_table_is_flagged() {
        // Party 0's output copies its own input: nonsignalling. Party 1's
        // output copies party 0's input: signalling.
        let inputs = vec![2, 2];
        let mut table = vec![0.0; 4 * 4];
        for x0 in 0..2 {
            for x1 in 0..2 {
                let s = x0 * 2 + x1;
                let a = (x0 << 1) | x0;
                table[s * 4 + a] = 1.0;
            }
        }
        let b = Behavior::new(inputs, table).unwrap();
        assert!(b.nonsignalling_violation() > 0.9);
    }

    #[test]
    fn setting_roundtrip() {
        let b = Behavior::white_noise(&[2, 3, 2]);
        let mut decoded = vec![0; 3];
        for s in 0..b.n_settings() {
            decode_setting(s, b.inputs(), &mut decoded);
            assert_eq!(b.setting_index(&decoded), s);
        }
    }

    #[test]
    fn mix_averages_tables() {
        let d0 = Behavior::deterministic(&[2, 2], |_, _| 0).unwrap();
        let d1 = Behavior::deterministic(&[2, 2], |_, _| 1).unwrap();
        let m = Behavior::mix(&[(0.25, &d0), (0.75, &d1)]).unwrap();
        assert!((m.prob(0, 0b00) - 0.25).abs() < 1e-15);
        assert!((m.prob(0, 0b11) - 0.75).abs() < 1e-15);
    }
}
