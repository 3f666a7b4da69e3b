//! Seeded instance generation. Every stream comes from `ChaCha8Rng` seeded
//! with `seed` and the order `n`, so instances are stable across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distance::DistanceMatrix;

pub const DEFAULT_MAX_WEIGHT: u32 = 100;

/// Generator for the stream identified by `(seed, n)`.
pub fn instance_rng(seed: u64, n: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng
}

/// Symmetric integer lengths uniform in `1..=max_weight`.
pub fn random_integral_instance(n: usize, seed: u64, max_weight: u32) -> DistanceMatrix {
    let mut rng = instance_rng(seed, n);
    let mut upper = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            upper[i * n + j] = rng.gen_range(1..=max_weight.max(1)) as f64;
        }
    }
    DistanceMatrix::from_fn(n, |i, j| upper[i * n + j]).expect("generated lengths are valid")
}

/// `count` instances cycling through `orders`, instance `k` seeded with
/// `seed + k`.
pub fn seeded_suite(seed: u64, orders: &[usize], count: usize) -> Vec<DistanceMatrix> {
    (0..count)
        .map(|k| {
            random_integral_instance(
                orders[k % orders.len()],
                seed.wrapping_add(k as u64),
                DEFAULT_MAX_WEIGHT,
            )
        })
        .collect()
}
