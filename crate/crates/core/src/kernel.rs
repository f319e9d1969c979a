//! Memory kernels `K(t) = sum c_k exp(-gamma_k t)` and their Laplace transforms.
//!
//! Two representations are provided. [`ExponentialKernel`] is an explicit
//! finite ladder of amplitudes and rates. [`PowerLawFamily`] generates ladders
//! with `c_k = A / k^alpha`, `gamma_k = B k^beta`; such ladders are infinite,
//! so a materialized family may carry a [`ContinuumTail`] that replaces the
//! discarded terms `k > N` by the midpoint integral over `[N + 1/2, inf)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{fmt_point, Error, Result};
use crate::quadrature::{integrate, integrate_power_weighted, QuadratureOptions};

/// Relative distance to a pole below which evaluation is refused.
pub const POLE_GUARD_REL: f64 = 1e-13;

/// Default sector half-opening for the integral forms: `|arg z| < pi - delta`.
pub const DEFAULT_SECTOR_DELTA: f64 = 0.1;

/// Neumaier-compensated accumulator for complex sums.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

fn two_sum_comp(sum: f64, x: f64) -> (f64, f64) {
    let t = sum + x;
    let c = if sum.abs() >= x.abs() {
        (sum - t) + x
    } else {
        (x - t) + sum
    };
    (t, c)
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, z: Complex64) {
        let (re, cre) = two_sum_comp(self.sum.re, z.re);
        let (im, cim) = two_sum_comp(self.sum.im, z.im);
        self.sum = Complex64::new(re, im);
        self.comp += Complex64::new(cre, cim);
    }

    pub(crate) fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LadderSpec {
    coeffs: Vec<f64>,
    rates: Vec<f64>,
}

/// Finite ladder of exponential modes with strictly increasing rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LadderSpec")]
pub struct ExponentialKernel {
    coeffs: Vec<f64>,
    rates: Vec<f64>,
}

impl TryFrom<LadderSpec> for ExponentialKernel {
    type Error = Error;

    fn try_from(spec: LadderSpec) -> Result<Self> {
        Self::new(spec.coeffs, spec.rates)
    }
}

/// Summary of the kernel sums used by the admissibility conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    /// `sum c_k / gamma_k`, which equals `K^(0)`.
    pub s: f64,
    /// `sum c_k`, i.e. `K(0)`.
    pub s1: f64,
    pub admissible: bool,
    /// `max_k gamma_k (gamma_{k+1} - gamma_k)` over the available ladder. A
    /// finite stand-in for the divergence condition on infinite ladders; it
    /// cannot certify that condition.
    pub tail_gap_proxy: Option<f64>,
}

impl ExponentialKernel {
    pub fn new(coeffs: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "kernel needs at least one term".into(),
            ));
        }
        if coeffs.len() != rates.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients but {} rates",
                coeffs.len(),
                rates.len()
            )));
        }
        if let Some(c) = coeffs.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "coefficients must be positive and finite, got {c}"
            )));
        }
        if let Some(g) = rates.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "rates must be positive and finite, got {g}"
            )));
        }
        if let Some(w) = rates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "rates must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { coeffs, rates })
    }

    pub fn single(coeff: f64, rate: f64) -> Result<Self> {
        Self::new(vec![coeff], vec![rate])
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn max_rate(&self) -> f64 {
        *self.rates.last().expect("kernel is non-empty")
    }

    /// Copy with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.coeffs.iter().map(|c| c * factor).collect(),
            self.rates.clone(),
        )
    }

    /// `S = sum c_k / gamma_k`.
    pub fn s(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for (c, g) in self.coeffs.iter().zip(&self.rates) {
            acc.add(Complex64::new(c / g, 0.0));
        }
        acc.value().re
    }

    /// `S1 = sum c_k`.
    pub fn s1(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for c in &self.coeffs {
            acc.add(Complex64::new(*c, 0.0));
        }
        acc.value().re
    }

    pub fn pole_guard(&self) -> f64 {
        POLE_GUARD_REL * self.max_rate()
    }

    pub fn admissibility_report(&self) -> AdmissibilityReport {
        let s = self.s();
        let tail_gap_proxy = self
            .rates
            .windows(2)
            .map(|w| w[0] * (w[1] - w[0]))
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            });
        AdmissibilityReport {
            s,
            s1: self.s1(),
            admissible: s < 1.0,
            tail_gap_proxy,
        }
    }

    pub(crate) fn check_poles(&self, z: Complex64) -> Result<()> {
        let guard = self.pole_guard();
        for g in &self.rates {
            let d = (z + g).norm();
            if d < guard {
                return Err(Error::PoleProximity {
                    point: fmt_point(z),
                    pole: -g,
                    distance: d,
                });
            }
        }
        Ok(())
    }

    /// `K^(z) = sum c_k / (z + gamma_k)`.
    pub fn laplace(&self, z: Complex64) -> Result<Complex64> {
        self.check_poles(z)?;
        let mut acc = CompensatedSum::default();
        for (c, g) in self.coeffs.iter().zip(&self.rates) {
            acc.add(*c / (z + g));
        }
        Ok(acc.value())
    }

    /// `K^'(z) = -sum c_k / (z + gamma_k)^2`.
    pub fn laplace_deriv(&self, z: Complex64) -> Result<Complex64> {
        self.check_poles(z)?;
        let mut acc = CompensatedSum::default();
        for (c, g) in self.coeffs.iter().zip(&self.rates) {
            let d = z + g;
            acc.add(-*c / (d * d));
        }
        Ok(acc.value())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilySpec {
    amplitude: f64,
    scale: f64,
    alpha: f64,
    beta: f64,
    truncation: usize,
}

/// Power-law generator `c_k = A / k^alpha`, `gamma_k = B k^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilySpec")]
pub struct PowerLawFamily {
    pub amplitude: f64,
    pub scale: f64,
    pub alpha: f64,
    pub beta: f64,
    pub truncation: usize,
}

impl TryFrom<FamilySpec> for PowerLawFamily {
    type Error = Error;

    fn try_from(s: FamilySpec) -> Result<Self> {
        Self::new(s.amplitude, s.scale, s.alpha, s.beta, s.truncation)
    }
}

impl PowerLawFamily {
    pub fn new(
        amplitude: f64,
        scale: f64,
        alpha: f64,
        beta: f64,
        truncation: usize,
    ) -> Result<Self> {
        let family = Self {
            amplitude,
            scale,
            alpha,
            beta,
            truncation,
        };
        family.validate()?;
        Ok(family)
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "amplitude A must be positive, got {}",
                self.amplitude
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale B must be positive, got {}",
                self.scale
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.alpha + self.beta > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha + beta must exceed 1, got {}",
                self.alpha + self.beta
            )));
        }
        if self.truncation == 0 {
            return Err(Error::InvalidParameter(
                "truncation N must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Regularity exponent `r = (alpha + beta - 1) / beta`, in `(0, 1]`.
    pub fn r(&self) -> f64 {
        (self.alpha + self.beta - 1.0) / self.beta
    }

    pub fn with_truncation(&self, truncation: usize) -> Result<Self> {
        Self::new(
            self.amplitude,
            self.scale,
            self.alpha,
            self.beta,
            truncation,
        )
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.amplitude / (k as f64).powf(self.alpha)
    }

    pub fn rate(&self, k: usize) -> f64 {
        self.scale * (k as f64).powf(self.beta)
    }

    /// Leading-term ladder for `k = 1..=N`.
    pub fn materialize(&self) -> Result<ExponentialKernel> {
        self.validate()?;
        let n = self.truncation;
        ExponentialKernel::new(
            (1..=n).map(|k| self.coeff(k)).collect(),
            (1..=n).map(|k| self.rate(k)).collect(),
        )
    }

    /// Integral-comparison bound on the discarded `sum_{k>N} c_k/gamma_k`:
    /// `A / (B (alpha + beta - 1) N^(alpha + beta - 1))`.
    pub fn tail_bound(&self) -> f64 {
        let e = self.alpha + self.beta - 1.0;
        self.amplitude / (self.scale * e * (self.truncation as f64).powf(e))
    }

    /// Size of the leading midpoint-rule error left after adding the
    /// continuum tail, for `Re z >= 0`:
    /// `A (alpha + beta) / (24 B) (N + 1/2)^(-(alpha + beta + 1))`.
    pub fn corrected_tail_bound(&self) -> f64 {
        let t0 = self.truncation as f64 + 0.5;
        let e = self.alpha + self.beta;
        self.amplitude * e / (24.0 * self.scale) * t0.powf(-(e + 1.0))
    }

    /// Continuum replacement for the terms `k > N`.
    pub fn continuum_tail(&self) -> ContinuumTail {
        ContinuumTail {
            family: *self,
            start: self.truncation as f64 + 0.5,
        }
    }

    /// Ladder plus continuum tail: a finite representation of the infinite kernel.
    pub fn memory_kernel(&self) -> Result<MemoryKernel> {
        Ok(MemoryKernel {
            ladder: self.materialize()?,
            tail: Some(self.continuum_tail()),
        })
    }

    /// Smallest truncation whose [`Self::corrected_tail_bound`] is below `target`.
    pub fn truncation_for_corrected_tail(&self, target: f64) -> usize {
        let e = self.alpha + self.beta;
        let n = (self.amplitude * e / (24.0 * self.scale * target)).powf(1.0 / (e + 1.0));
        (n.ceil() as usize).max(1)
    }
}

/// `int_{t0}^inf A t^(-alpha) / (z + B t^beta) dt` and its derivative in `z`.
///
/// With `u = t^beta` and `u = u0 v^(-1/r)` the integral becomes
/// `A u0^(1-r) / (beta r) * int_0^1 dv / (z v^(1/r) + B u0)`, a bounded
/// integrand on a finite interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumTail {
    pub family: PowerLawFamily,
    pub start: f64,
}

const TAIL_QUADRATURE: QuadratureOptions = QuadratureOptions {
    abs_tol: 1e-16,
    rel_tol: 1e-13,
    max_panels: 4000,
};

impl ContinuumTail {
    fn u0(&self) -> f64 {
        self.start.powf(self.family.beta)
    }

    fn prefactor(&self) -> f64 {
        let r = self.family.r();
        self.family.amplitude * self.u0().powf(1.0 - r) / (self.family.beta * r)
    }

    /// Left end of the branch cut `(-inf, -B t0^beta]`.
    pub fn cut_start(&self) -> f64 {
        -self.family.scale * self.u0()
    }

    fn check_cut(&self, z: Complex64) -> Result<()> {
        let cut = self.cut_start();
        if z.re <= cut && z.im.abs() <= POLE_GUARD_REL * cut.abs() {
            return Err(Error::BranchCut(fmt_point(z)));
        }
        Ok(())
    }

    /// Contribution to `S = sum c_k/gamma_k`.
    pub fn s(&self) -> f64 {
        let f = &self.family;
        let e = f.alpha + f.beta - 1.0;
        f.amplitude * self.start.powf(-e) / (f.scale * e)
    }

    pub fn laplace_with(&self, z: Complex64, opts: &QuadratureOptions) -> Result<Complex64> {
        self.check_cut(z)?;
        let q = 1.0 / self.family.r();
        let bu0 = self.family.scale * self.u0();
        let r = integrate(|v| 1.0 / (z * v.powf(q) + bu0), 0.0, 1.0, opts)?;
        Ok(r.value * self.prefactor())
    }

    pub fn laplace(&self, z: Complex64) -> Result<Complex64> {
        self.laplace_with(z, &TAIL_QUADRATURE)
    }

    pub fn laplace_deriv(&self, z: Complex64) -> Result<Complex64> {
        self.check_cut(z)?;
        let q = 1.0 / self.family.r();
        let bu0 = self.family.scale * self.u0();
        let r = integrate(
            |v| {
                let w = v.powf(q);
                let d = z * w + bu0;
                w / (d * d)
            },
            0.0,
            1.0,
            &TAIL_QUADRATURE,
        )?;
        Ok(-r.value * self.prefactor())
    }
}

/// Kernel as seen by the pencil: an exact ladder and an optional continuum tail.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    pub ladder: ExponentialKernel,
    pub tail: Option<ContinuumTail>,
}

impl From<ExponentialKernel> for MemoryKernel {
    fn from(ladder: ExponentialKernel) -> Self {
        Self { ladder, tail: None }
    }
}

impl MemoryKernel {
    pub fn laplace(&self, z: Complex64) -> Result<Complex64> {
        let mut k = self.ladder.laplace(z)?;
        if let Some(t) = &self.tail {
            k += t.laplace(z)?;
        }
        Ok(k)
    }

    pub fn laplace_deriv(&self, z: Complex64) -> Result<Complex64> {
        let mut k = self.ladder.laplace_deriv(z)?;
        if let Some(t) = &self.tail {
            k += t.laplace_deriv(z)?;
        }
        Ok(k)
    }

    pub fn s(&self) -> f64 {
        self.ladder.s() + self.tail.map_or(0.0, |t| t.s())
    }

    /// `sum c_k`; infinite when a continuum tail with `alpha <= 1` is attached.
    pub fn s1(&self) -> f64 {
        match self.tail {
            Some(_) => f64::INFINITY,
            None => self.ladder.s1(),
        }
    }

    pub fn has_tail(&self) -> bool {
        self.tail.is_some()
    }
}

fn check_sector(z: Complex64, delta: f64) -> Result<()> {
    if z.norm() == 0.0 || z.arg().abs() >= PI - delta {
        return Err(Error::ArgumentRange {
            point: fmt_point(z),
            delta,
        });
    }
    Ok(())
}

/// `h(z) = int_1^inf A dt / (t^alpha (z + B t^beta))`, the integral stand-in for `K^`.
pub fn integral_approx(
    family: &PowerLawFamily,
    z: Complex64,
    delta: f64,
    opts: &QuadratureOptions,
) -> Result<Complex64> {
    check_sector(z, delta)?;
    ContinuumTail {
        family: *family,
        start: 1.0,
    }
    .laplace_with(z, opts)
}

/// `int_0^inf dt / (t^r (e^{i phi} + t))`, split at `t = 1`; the outer half
/// is folded back with `t = 1/s`.
pub fn phase_integral(r: f64, phi: f64, opts: &QuadratureOptions) -> Result<Complex64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "r must lie in (0, 1), got {r}"
        )));
    }
    let e = Complex64::from_polar(1.0, phi);
    let inner = integrate_power_weighted(|t| 1.0 / (e + t), r, opts)?;
    let outer = integrate_power_weighted(|s| 1.0 / (e * s + 1.0), 1.0 - r, opts)?;
    Ok(inner.value + outer.value)
}

/// Leading term of a large-argument expansion together with the declared
/// order `p` of its `O(|z|^-p)` remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingTerm {
    pub value: Complex64,
    pub remainder_order: f64,
}

/// Large-`|z|` form of `K^` for a power-law family.
///
/// `0 < r < 1`: `A B^(r-1) / (beta |z|^r) * int_0^inf dt / (t^r (e^{i phi} + t))`;
/// `r = 1`: `(A / beta) ln|z/B + 1| / z`. Both carry an `O(1/|z|)` remainder.
pub fn khat_asymptotic(family: &PowerLawFamily, z: Complex64, delta: f64) -> Result<LeadingTerm> {
    check_sector(z, delta)?;
    let r = family.r();
    let (a, b, beta) = (family.amplitude, family.scale, family.beta);
    let value = if (r - 1.0).abs() < 1e-12 {
        let modulus = (z / b + 1.0).norm().ln();
        Complex64::new(a / beta * modulus, 0.0) / z
    } else {
        let j = phase_integral(r, z.arg(), &QuadratureOptions::with_abs_tol(1e-13))?;
        j * (a * b.powf(r - 1.0) / (beta * z.norm().powf(r)))
    };
    Ok(LeadingTerm {
        value,
        remainder_order: 1.0,
    })
}
