use ndarray::{ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Mean cosine distance `1 − cos(φ_i, φ_j)` over `pairs` seeded random
/// unordered row pairs, or over all pairs when `pairs` covers them.
///
/// Values near 0 mean the topic representations have collapsed onto one
/// direction.
pub fn cosine_distance_diagnostic(phi: ArrayView2<f64>, pairs: usize, seed: u64) -> Result<f64> {
    if pairs == 0 {
        return Err(Error::Config("diagnostic needs at least one pair".into()));
    }
    let n = phi.nrows();
    if n < 2 {
        return Err(Error::Config("diagnostic needs at least two rows".into()));
    }
    let norms = phi.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    let cos_dist = |i: usize, j: usize| -> Result<f64> {
        if norms[i] == 0.0 || norms[j] == 0.0 {
            let z = if norms[i] == 0.0 { i } else { j };
            return Err(Error::Numerical(format!("row {z} is all-zero")));
        }
        Ok(1.0 - phi.row(i).dot(&phi.row(j)) / (norms[i] * norms[j]))
    };

    let all = n * (n - 1) / 2;
    let mut sum = 0.0;
    if pairs >= all {
        for i in 0..n {
            for j in i + 1..n {
                sum += cos_dist(i, j)?;
            }
        }
        return Ok(sum / all as f64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        sum += cos_dist(i, j)?;
    }
    Ok(sum / pairs as f64)
}
