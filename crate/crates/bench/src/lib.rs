//! Fixtures shared by the benchmarks.

use gpspectra_core::{corpus::random_kernels, ExponentialKernel, ModePencil};

/// Seed of the benchmark corpus.
pub const SEED: u64 = 20_240_601;

/// Pencil with a random ladder of exactly `terms` modes at frequency `a`.
pub fn pencil_with_terms(terms: usize, a: f64) -> ModePencil {
    let kernel = random_kernels(SEED, 64, terms)
        .into_iter()
        .find(|k| k.len() == terms)
        .unwrap_or_else(|| geometric_ladder(terms));
    ModePencil::new(a, 0.5, kernel).expect("benchmark pencil is valid")
}

/// Admissible ladder `c_k = 0.5 / k^2`, `gamma_k = k`.
pub fn geometric_ladder(terms: usize) -> ExponentialKernel {
    let coeffs = (1..=terms).map(|k| 0.5 / (k * k) as f64).collect();
    let rates = (1..=terms).map(|k| k as f64).collect();
    ExponentialKernel::new(coeffs, rates).expect("ladder is valid")
}
