use thiserror::Error;

/// Errors raised by kernel evaluation, root finding and the oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluation point {point} lies within {distance:e} of the pole at {pole}")]
    PoleProximity {
        point: String,
        pole: f64,
        distance: f64,
    },

    #[error("evaluation point {0} lies on the branch cut of the continuum tail")]
    BranchCut(String),

    #[error("argument of {point} outside |arg| < pi - {delta}")]
    ArgumentRange { point: String, delta: f64 },

    #[error("quadrature failed to reach tolerance {tol:e} (estimated error {estimate:e})")]
    QuadratureNonConvergence { tol: f64, estimate: f64 },

    #[error("no sign change on ({lo}, {hi}): sampled values {f_lo:e}, {f_hi:e}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("residual {residual:e} exceeds tolerance {tolerance:e} at {point}")]
    Residual {
        point: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("fixed-point map is not contracting: |g'| = {derivative} at iteration {iteration}")]
    NonContraction { derivative: f64, iteration: usize },

    #[error("iteration did not converge within {0} steps")]
    MaxIterations(usize),

    #[error("Newton iteration diverged from seed {0}")]
    Divergence(String),

    #[error("contour quadrature defect {defect} did not shrink below 0.25")]
    ContourDefect { defect: f64 },

    #[error("polynomial coefficients overflow: predicted magnitude {0:e}")]
    Overflow(f64),

    #[error("cardinality mismatch: {0} vs {1}")]
    Cardinality(usize, usize),

    #[error("operation unsupported for kernels with a continuum tail: {0}")]
    ContinuumTail(&'static str),

    #[error("degenerate data for slope fit: {0}")]
    DegenerateFit(String),

    #[error("simulation rejected: {0}")]
    Simulation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn fmt_point(z: num_complex::Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}
