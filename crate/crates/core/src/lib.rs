//! Spectra of Gurtin-Pipkin mode pencils
//! `l_n(z) = z^2 + a_n^2 - a_n^(2 xi) K^(z)` with exponential-sum memory
//! kernels `K(t) = sum_k c_k exp(-gamma_k t)`.
//!
//! Each mode has one real zero between consecutive kernel poles plus a
//! complex-conjugate pair near `±i a_n`. The crate locates all of them,
//! certifies counts with the argument principle, evaluates the large-`a_n`
//! asymptotic laws, and cross-checks everything against independent oracles
//! (polynomial roots and time-domain simulation).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod complex_spectrum;
pub mod corpus;
mod dd;
pub mod error;
pub mod fit;
pub mod kernel;
pub mod oracle;
pub mod pencil;
pub mod quadrature;
pub mod real_spectrum;
pub mod spectrum;

pub use num_complex::Complex64;

pub use asymptotics::{
    classify_regime, constant_d, constant_d_quadrature, predict_finite_sum, predict_power_law,
    AsymptoticPrediction, Regime, RegimeTag,
};
pub use complex_spectrum::{
    count_zeros, fixed_point_pair, ladder_contour, newton_refine, solve_pair, ComplexPair,
    CountCertificate, FixedPointPair, PairSolution, RectContour,
};
pub use error::{Error, Result};
pub use fit::{empirical_order, log_log_slope, OrderEstimate, SlopeFit};
pub use kernel::{
    integral_approx, khat_asymptotic, ContinuumTail, ExponentialKernel, MemoryKernel,
    PowerLawFamily,
};
pub use oracle::{
    aberth_roots, build_mode_system, match_roots, polynomial_roots, simulate_decay, DecayEstimate,
    ModeSystem, RootMatching,
};
pub use pencil::ModePencil;
pub use real_spectrum::{f_roots, interlacing_violation, real_roots, BranchRoot};
pub use spectrum::{solve_mode, PairMethod, SpectrumResult};

/// Numerical tolerances shared by the root finders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Accept a root `z` when `|l(z)| <= residual_tol * max(a^2, |z|^2)`.
    pub residual_tol: f64,
    /// Absolute tolerance for adaptive quadrature.
    pub quadrature_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            quadrature_tol: 1e-10,
        }
    }
}
