use serde::{Deserialize, Serialize};

/// A reference to one party's measurement inside a correlator product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartyRef {
    pub party: usize,
    pub setting: usize,
    #[serde(default, skip_serializing_if = "is_false")]
    pub flip: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Conditioning event: `party` measured `setting` and produced `outcome` (±1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub party: usize,
    pub setting: usize,
    pub outcome: i8,
}

/// One weighted correlator `coeff·⟨∏ participants⟩`, optionally conditioned on
/// a single party's outcome. A party appears at most once across participants
/// and condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTerm {
    #[serde(rename = "parties")]
    participants: Vec<PartyRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    condition: Option<Condition>,
    #[serde(rename = "coeff")]
    coefficient: f64,
}

impl CorrelatorTerm {
    pub fn new(
        participants: Vec<PartyRef>,
        condition: Option<Condition>,
        coefficient: f64,
    ) -> Self {
        Self { participants, condition, coefficient }
    }

    /// Unit-coefficient product over `(party, setting)` pairs, no flips.
    pub fn product(refs: &[(usize, usize)]) -> Self {
        Self {
            participants: refs
                .iter()
                .map(|&(party, setting)| PartyRef { party, setting, flip: false })
                .collect(),
            condition: None,
            coefficient: 1.0,
        }
    }

    pub fn with_coefficient(mut self, c: f64) -> Self {
        self.coefficient = c;
        self
    }

    /// Toggles the sign-flip flag on `party`'s reference.
    pub fn with_flip(mut self, party: usize) -> Self {
        for r in &mut self.participants {
            if r.party == party {
                r.flip = !r.flip;
            }
        }
        self
    }

    pub fn conditioned_on(mut self, party: usize, setting: usize, outcome: i8) -> Self {
        self.condition = Some(Condition { party, setting, outcome });
        self
    }

    pub fn participants(&self) -> &[PartyRef] {
        &self.participants
    }

    pub fn condition(&self) -> Option<Condition> {
        self.condition
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Checks no party is referenced twice and all settings fit `inputs`.
    pub fn fits(&self, inputs: &[usize]) -> Result<(), String> {
        let mut seen = vec![false; inputs.len()];
        let mut check = |party: usize, setting: usize| -> Result<(), String> {
            if party >= inputs.len() {
                return Err(format!("party {party} out of range"));
            }
            if setting >= inputs[party] {
                return Err(format!("setting {setting} out of range for party {party}"));
            }
            if seen[party] {
                return Err(format!("party {party} referenced more than once"));
            }
            seen[party] = true;
            Ok(())
        };
        for r in &self.participants {
            check(r.party, r.setting)?;
        }
        if let Some(c) = self.condition {
            check(c.party, c.setting)?;
            if c.outcome != 1 && c.outcome != -1 {
                return Err(format!("condition outcome {} must be ±1", c.outcome));
            }
        }
        Ok(())
    }
}
