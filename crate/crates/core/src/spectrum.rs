//! Full per-mode spectrum: the real branches and the complex pair.

use num_complex::Complex64;

use crate::complex_spectrum::{solve_pair, ComplexPair};
use crate::error::Result;
use crate::pencil::ModePencil;
use crate::real_spectrum::{real_roots, BranchRoot};
use crate::SolverOptions;

/// How the complex pair was seeded before Newton polishing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMethod {
    FixedPoint,
    /// The fixed-point map did not contract; Newton started from `i a`.
    NewtonFromAxis,
}

impl PairMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PairMethod::FixedPoint => "fixed_point",
            PairMethod::NewtonFromAxis => "newton_from_axis",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub a: f64,
    pub xi: f64,
    /// One root per kernel pole interval, ordered from `-gamma_1` leftwards.
    pub real: Vec<BranchRoot>,
    pub pair: ComplexPair,
    pub pair_residual: f64,
    pub pair_method: PairMethod,
    /// Fixed-point iterations used (0 when the map was not used).
    pub fixed_point_iterations: usize,
}

impl SpectrumResult {
    /// Real roots followed by `lambda^+` and `lambda^-`.
    pub fn all_roots(&self) -> Vec<Complex64> {
        let mut roots: Vec<Complex64> = self
            .real
            .iter()
            .map(|b| Complex64::new(b.value, 0.0))
            .collect();
        roots.push(self.pair.plus());
        roots.push(self.pair.minus());
        roots
    }
}

/// Solves one mode: every real branch of the finite ladder plus the pair.
pub fn solve_mode(p: &ModePencil, opts: &SolverOptions) -> Result<SpectrumResult> {
    let real = real_roots(p, p.ladder().len(), opts)?;
    let pair = solve_pair(p, opts)?;
    let (pair_method, fixed_point_iterations) = match pair.fixed_point {
        Some(fp) => (PairMethod::FixedPoint, fp.iterations),
        None => (PairMethod::NewtonFromAxis, 0),
    };
    Ok(SpectrumResult {
        a: p.a(),
        xi: p.xi(),
        real,
        pair: pair.refined.pair,
        pair_residual: pair.refined.residual,
        pair_method,
        fixed_point_iterations,
    })
}
