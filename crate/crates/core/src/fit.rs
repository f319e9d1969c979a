//! Log-log slope fitting: turns `O(a^-p)` claims into measurable exponents.

use crate::error::{Error, Result};

/// Least-squares slope of `ln(error)` against `ln(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two standard errors of the slope.
    pub half_width: f64,
    pub points: usize,
}

impl SlopeFit {
    /// `exp(intercept)`, the fitted prefactor `C` in `error ~ C a^slope`.
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Outcome of [`empirical_order`]: a fit, or the sentinel for series that hit
/// exact zero (nothing left to measure).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderEstimate {
    Fitted(SlopeFit),
    BelowFloor,
}

impl OrderEstimate {
    pub fn slope(&self) -> Option<f64> {
        match self {
            OrderEstimate::Fitted(f) => Some(f.slope),
            OrderEstimate::BelowFloor => None,
        }
    }

    pub fn fit(&self) -> Option<&SlopeFit> {
        match self {
            OrderEstimate::Fitted(f) => Some(f),
            OrderEstimate::BelowFloor => None,
        }
    }
}

/// Ordinary least squares on `(ln x, ln y)`; needs at least two distinct `x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("{} points", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::DegenerateFit(format!(
            "non-positive pair ({x}, {y})"
        )));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let half_width = if points.len() > 2 {
        let rss: f64 = logs
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        2.0 * (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        intercept,
        half_width,
        points: points.len(),
    })
}

/// Convergence order from `(a_n, error)` pairs: at least four points over at
/// least two decades in `a_n`.
pub fn empirical_order(pairs: &[(f64, f64)]) -> Result<OrderEstimate> {
    if pairs.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 points, got {}",
            pairs.len()
        )));
    }
    let (lo, hi) = pairs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (a, _)| {
            (lo.min(*a), hi.max(*a))
        });
    if !(lo > 0.0) || hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::DegenerateFit(format!(
            "abscissae span [{lo}, {hi}] covers less than two decades"
        )));
    }
    if pairs.iter().any(|(_, e)| *e == 0.0) {
        return Ok(OrderEstimate::BelowFloor);
    }
    log_log_slope(pairs).map(OrderEstimate::Fitted)
}
