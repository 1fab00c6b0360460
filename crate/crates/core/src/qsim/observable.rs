use serde::{Deserialize, Serialize};

/// A ±1-valued single-qubit observable `cos θ·σ_z + sin θ·σ_x`, with an
/// optional outcome-sign flip (the flipped observable is `−O`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomicObservable {
    angle: f64,
    #[serde(default)]
    flip: bool,
}

impl DichotomicObservable {
    pub fn new(angle: f64) -> Self {
        Self { angle, flip: false }
    }

    pub fn flipped(mut self) -> Self {
        self.flip = !self.flip;
        self
    }

    /// σ_z
    pub fn sigma_z() -> Self {
        Self::new(0.0)
    }

    /// σ_x
    pub fn sigma_x() -> Self {
        Self::new(std::f64::consts::FRAC_PI_2)
    }

    /// (σ_x + σ_z)/√2
    pub fn diag_plus() -> Self {
        Self::new(std::f64::consts::FRAC_PI_4)
    }

    /// (σ_x − σ_z)/√2
    pub fn diag_minus() -> Self {
        Self::new(3.0 * std::f64::consts::FRAC_PI_4)
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn flip(&self) -> bool {
        self.flip
    }

    /// Eigenvector components `[v_+1, v_-1]` in the computational basis, with
    /// the flip flag already folded in (outcome +1 of a flipped observable is
    /// the −1 eigenvector of the unflipped one).
    pub fn eigenvectors(&self) -> [[f64; 2]; 2] {
        let half = self.angle / 2.0;
        let plus = [half.cos(), half.sin()];
        let minus = [-half.sin(), half.cos()];
        if self.flip {
            [minus, plus]
        } else {
            [plus, minus]
        }
    }
}

/// Per-party ordered lists of observables, indexed by the parties' inputs.
#[derive(Debug, Clone)]
pub struct MeasurementStrategy {
    parties: Vec<Vec<DichotomicObservable>>,
}

impl MeasurementStrategy {
    /// Every party needs at least one setting.
    pub fn new(parties: Vec<Vec<DichotomicObservable>>) -> Self {
        assert!(
            !parties.is_empty() && parties.iter().all(|p| !p.is_empty()),
            "every party needs at least one setting"
        );
        Self { parties }
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn settings(&self, party: usize) -> &[DichotomicObservable] {
        &self.parties[party]
    }

    pub fn input_cardinalities(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p.len()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvectors_are_orthonormal() {
        for angle in [0.0, 0.3, std::f64::consts::FRAC_PI_4, 2.0] {
            let [p, m] = DichotomicObservable::new(angle).eigenvectors();
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-14);
            assert!((m[0] * m[0] + m[1] * m[1] - 1.0).abs() < 1e-14);
            assert!((p[0] * m[0] + p[1] * m[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn sigma_z_eigenvectors() {
        let [p, m] = DichotomicObservable::sigma_z().eigenvectors();
        assert_eq!(p, [1.0, 0.0]);
        assert_eq!(m, [-0.0, 1.0]);
    }

    #[test]
    fn flip_swaps_outcomes() {
        let o = DichotomicObservable::diag_minus();
        let [p, m] = o.eigenvectors();
        let [fp, fm] = o.flipped().eigenvectors();
        assert_eq!(p, fm);
        assert_eq!(m, fp);
    }
}
