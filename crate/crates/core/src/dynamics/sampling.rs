use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{config, Result};
use crate::linalg::psd_sqrt;

const WEIGHT_STREAM: u64 = 0;
const CUMULANT_STREAM: u64 = 1;

/// Deterministic generator for `(seed, stream)`.
///
/// Independent jobs derive their randomness from distinct streams of one
/// master seed, so results do not depend on scheduling order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for Monte Carlo task `index` under a master seed (SplitMix64 finaliser).
pub fn task_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `M` i.i.d. `N(0, variance I_K)` weight vectors as the columns of a `K x M` matrix.
///
/// Columns are drawn in order, so the first `m` columns do not depend on `M`.
pub fn sample_weights(m: usize, k: usize, variance: f64, seed: u64) -> Result<DMatrix<f64>> {
    if m == 0 || k == 0 {
        return Err(config("need at least one head and one feature"));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(config(format!("weight variance {variance} must be positive")));
    }
    let sd = variance.sqrt();
    let mut rng = stream_rng(seed, WEIGHT_STREAM);
    Ok(DMatrix::from_fn(k, m, |_, _| sd * rng.sample::<f64, _>(StandardNormal)))
}

/// `M` i.i.d. `N(0, Σ)` reward vectors as the columns of an `|X| x M` matrix.
pub fn sample_cumulants(m: usize, sigma: &DMatrix<f64>, seed: u64) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(config("need at least one cumulant"));
    }
    let root = psd_sqrt(sigma)?;
    let n = sigma.nrows();
    let mut rng = stream_rng(seed, CUMULANT_STREAM);
    let z = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(root * z)
}

/// Weights where the heads of task `i` only touch the `i`-th block of features.
///
/// Features are split into `l` contiguous blocks of near-equal size and heads
/// into `l` contiguous groups as in [`super::head_assignment`].
pub fn block_orthogonal_weights(m: usize, k: usize, l: usize, variance: f64, seed: u64) -> Result<DMatrix<f64>> {
    if l == 0 || l > k || !m.is_multiple_of(l) {
        return Err(config(format!(
            "block initialisation needs 1 <= L <= K and L | M (M = {m}, K = {k}, L = {l})"
        )));
    }
    let mut w = sample_weights(m, k, variance, seed)?;
    let heads = super::head_assignment(m, l)?;
    let block_of = |feature: usize| feature * l / k;
    for (col, &task) in heads.iter().enumerate() {
        for row in 0..k {
            if block_of(row) != task {
                w[(row, col)] = 0.0;
            }
        }
    }
    Ok(w)
}
