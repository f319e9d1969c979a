//! Seeded random admissible kernels for oracle comparisons and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::ExponentialKernel;

pub const CORPUS_MODES: [f64; 3] = [10.0, 100.0, 1000.0];
pub const CORPUS_XI: [f64; 3] = [0.25, 0.5, 0.75];
pub const CORPUS_MAX_TERMS: usize = 12;

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// One kernel with `1..=max_terms` terms: `gamma_1` log-uniform in `[0.1, 2]`,
/// gaps log-uniform in `[0.05, 5]`, and coefficients rescaled so that
/// `S = sum c_k / gamma_k` is uniform in `[0.1, 0.9)`.
pub fn random_kernel<R: Rng>(rng: &mut R, max_terms: usize) -> ExponentialKernel {
    let n = rng.random_range(1..=max_terms.max(1));
    let mut rates = Vec::with_capacity(n);
    let mut g = log_uniform(rng, 0.1, 2.0);
    for _ in 0..n {
        rates.push(g);
        g += log_uniform(rng, 0.05, 5.0);
    }
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let target = rng.random_range(0.1..0.9);
    let total: f64 = weights.iter().sum();
    let coeffs = weights
        .iter()
        .zip(&rates)
        .map(|(w, g)| target * w / total * g)
        .collect();
    ExponentialKernel::new(coeffs, rates).expect("generated ladder is valid")
}

/// `count` kernels from a ChaCha8 stream seeded with `seed`.
pub fn random_kernels(seed: u64, count: usize, max_terms: usize) -> Vec<ExponentialKernel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_kernel(&mut rng, max_terms))
        .collect()
}
