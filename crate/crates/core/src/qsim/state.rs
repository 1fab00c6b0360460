use num_complex::Complex64;

use super::QsimError;

/// A normalized pure state on `n_qubits` qubits, amplitudes indexed by
/// computational basis strings (first qubit = most significant bit).
#[derive(Debug, Clone)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self, QsimError> {
        let dim = 1usize << n_qubits;
        if amplitudes.len() != dim {
            return Err(QsimError::InvalidState(format!(
                "expected {dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(QsimError::InvalidState(format!(
                "squared norm {norm} differs from 1 by more than 1e-12"
            )));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// The density matrix `|ψ⟩⟨ψ|` as a row-major `2^n × 2^n` buffer.
    pub fn to_density(&self) -> Vec<Complex64> {
        let dim = self.amplitudes.len();
        let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        out
    }

    pub fn to_density_state(&self) -> MixedState {
        MixedState::new(self.n_qubits, self.to_density())
            .expect("pure state projector is a valid density matrix")
    }
}

/// A density matrix on `n_qubits` qubits: Hermitian, unit trace, positive
/// semidefinite within tolerance.
#[derive(Debug, Clone)]
pub struct MixedState {
    n_qubits: usize,
    density: Vec<Complex64>,
}

impl MixedState {
    pub fn new(n_qubits: usize, density: Vec<Complex64>) -> Result<Self, QsimError> {
        let dim = 1usize << n_qubits;
        if density.len() != dim * dim {
            return Err(QsimError::InvalidState(format!(
                "expected {dim}×{dim} density matrix, got {} entries",
                density.len()
            )));
        }
        let mut trace = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            trace += density[i * dim + i];
            for j in 0..dim {
                let delta = (density[i * dim + j] - density[j * dim + i].conj()).norm();
                if delta > 1e-12 {
                    return Err(QsimError::InvalidState(format!(
                        "not Hermitian at ({i},{j}): asymmetry {delta:.3e}"
                    )));
                }
            }
        }
        if (trace.re - 1.0).abs() > 1e-12 || trace.im.abs() > 1e-12 {
            return Err(QsimError::InvalidState(format!("trace {trace} differs from 1")));
        }
        if !psd_within(&density, dim, 1e-10) {
            return Err(QsimError::InvalidState(
                "an eigenvalue is below -1e-10".to_string(),
            ));
        }
        Ok(Self { n_qubits, density })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn density(&self) -> &[Complex64] {
        &self.density
    }
}

/// Cholesky-based positive-semidefiniteness check of `m + shift·I`.
fn psd_within(m: &[Complex64], dim: usize, shift: f64) -> bool {
    // Factor a working copy; failure of the pivot to stay nonnegative means an
    // eigenvalue below -shift (up to roundoff slack on the pivot test).
    let mut a = m.to_vec();
    for i in 0..dim {
        a[i * dim + i] += shift;
    }
    let mut l = vec![Complex64::new(0.0, 0.0); dim * dim];
    for j in 0..dim {
        let mut d = a[j * dim + j].re;
        for k in 0..j {
            d -= l[j * dim + k].norm_sqr();
        }
        if d < -1e-12 {
            return false;
        }
        let d = d.max(0.0).sqrt();
        l[j * dim + j] = Complex64::new(d, 0.0);
        for i in (j + 1)..dim {
            let mut v = a[i * dim + j];
            for k in 0..j {
                v -= l[i * dim + k] * l[j * dim + k].conj();
            }
            l[i * dim + j] = if d > 1e-14 {
                v / d
            } else {
                // Zero pivot: the column must vanish for PSD to hold.
                if v.norm() > 1e-7 {
                    return false;
                }
                Complex64::new(0.0, 0.0)
            };
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_pure() {
        let amps = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(PureState::new(1, amps).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut d = vec![Complex64::new(0.0, 0.0); 4];
        d[0] = Complex64::new(1.0, 0.0);
        d[1] = Complex64::new(0.5, 0.0);
        assert!(MixedState::new(1, d).is_err());
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        // diag(1.5, -0.5) is Hermitian with unit trace but not PSD.
        let mut d = vec![Complex64::new(0.0, 0.0); 4];
        d[0] = Complex64::new(1.5, 0.0);
        d[3] = Complex64::new(-0.5, 0.0);
        assert!(MixedState::new(1, d).is_err());
    }

    #[test]
    fn accepts_maximally_mixed() {
        let mut d = vec![Complex64::new(0.0, 0.0); 16];
        for i in 0..4 {
            d[i * 4 + i] = Complex64::new(0.25, 0.0);
        }
        assert!(MixedState::new(2, d).is_ok());
    }
}
