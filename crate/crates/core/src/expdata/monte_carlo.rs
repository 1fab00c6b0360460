use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::counts::ExperimentDataset;
use super::DataError;

/// Monte Carlo propagation of Poisson counting noise: every count `n` is
/// replaced by an independent `Poisson(n)` draw and the witness re-evaluated.
/// Returns the resampled mean and standard deviation. Resamples draw from
/// per-index derived seeds, so the output is reproducible for a fixed seed
/// regardless of thread count.
pub fn monte_carlo_sigma<F>(
    ds: &ExperimentDataset,
    evaluator: F,
    n_resamples: usize,
    seed: u64,
) -> Result<(f64, f64), DataError>
where
    F: Fn(&ExperimentDataset) -> Result<f64, DataError> + Sync,
{
    if n_resamples < 1000 {
        return Err(DataError::TooFewResamples(n_resamples));
    }
    let values: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64
                .wrapping_mul(i as u64 + 1)));
            let tables: Vec<[u64; 16]> = ds
                .records()
                .iter()
                .map(|r| {
                    let mut out = [0u64; 16];
                    for (slot, &n) in out.iter_mut().zip(&r.counts) {
                        *slot = if n == 0 {
                            0
                        } else {
                            Poisson::new(n as f64).expect("positive mean").sample(&mut rng) as u64
                        };
                    }
                    out
                })
                .collect();
            evaluator(&ds.with_counts(&tables))
        })
        .collect::<Result<_, _>>()?;

    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}
