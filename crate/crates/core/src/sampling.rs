use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::copula::Copula;
use crate::error::{CopulaError, Result};

/// Draws `count` pairs by conditional inversion: `u` uniform, then `v` the
/// conditional quantile of an independent uniform. Deterministic in `seed`.
pub fn sample(c: &Copula, count: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if count == 0 {
        return Err(CopulaError::Domain("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let w: f64 = rng.random();
            (u, c.conditional_quantile(u, w))
        })
        .collect())
}
