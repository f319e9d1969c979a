//! Per-mode spectral symbol
//! `l(z) = z^2 + a^2 (1 - a^(-2(1-xi)) K^(z))`
//! and its Rouché companions `f = 1 - a^(-2(1-xi)) K^` and `g = z^2 / a^2`.

use num_complex::Complex64;

use crate::dd::{mul_linear, DoubleDouble};
use crate::error::{Error, Result};
use crate::kernel::{ExponentialKernel, MemoryKernel};

/// Largest ladder for which [`ModePencil::to_polynomial`] expands the symbol.
pub const POLY_MAX: usize = 64;

/// One mode of the pencil: eigenvalue `a` of the stiffness operator, the
/// coupling exponent `xi`, and the memory kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ModePencil {
    a: f64,
    xi: f64,
    kernel: MemoryKernel,
    weight: f64,
    coupling: f64,
}

impl ModePencil {
    pub fn new(a: f64, xi: f64, kernel: impl Into<MemoryKernel>) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "a_n must be positive, got {a}"
            )));
        }
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "xi must lie strictly inside (0,1), got {xi}"
            )));
        }
        let weight = a.powf(-2.0 * (1.0 - xi));
        let coupling = a.powf(2.0 * xi);
        if !(weight.is_finite() && weight > 0.0 && coupling.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight a^(-2(1-xi)) is not representable for a={a}, xi={xi}"
            )));
        }
        Ok(Self {
            a,
            xi,
            kernel: kernel.into(),
            weight,
            coupling,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn kernel(&self) -> &MemoryKernel {
        &self.kernel
    }

    pub fn ladder(&self) -> &ExponentialKernel {
        &self.kernel.ladder
    }

    /// `w = a^(-2(1-xi))`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `a^(2 xi) = a^2 w`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Same mode with the kernel replaced.
    pub fn with_kernel(&self, kernel: impl Into<MemoryKernel>) -> Result<Self> {
        Self::new(self.a, self.xi, kernel)
    }

    /// `l(z)`, with `z^2 + a^2` evaluated as `(z - ia)(z + ia)` so that the
    /// cancellation near `z = ±ia` costs no accuracy.
    pub fn eval_symbol(&self, z: Complex64) -> Result<Complex64> {
        let k = self.kernel.laplace(z)?;
        let ia = Complex64::new(0.0, self.a);
        Ok((z - ia) * (z + ia) - k * self.coupling)
    }

    pub fn eval_symbol_deriv(&self, z: Complex64) -> Result<Complex64> {
        let dk = self.kernel.laplace_deriv(z)?;
        Ok(z * 2.0 - dk * self.coupling)
    }

    pub fn eval_f(&self, z: Complex64) -> Result<Complex64> {
        Ok(1.0 - self.kernel.laplace(z)? * self.weight)
    }

    pub fn eval_g(&self, z: Complex64) -> Complex64 {
        z * z / (self.a * self.a)
    }

    /// Ascending coefficients of `P(z) = l(z) * prod_k (z + gamma_k)`, a monic
    /// polynomial of degree `N + 2` whose roots are exactly the zeros of `l`.
    pub fn to_polynomial(&self) -> Result<Vec<f64>> {
        Ok(self
            .to_polynomial_dd()?
            .into_iter()
            .map(DoubleDouble::to_f64)
            .collect())
    }

    /// [`Self::to_polynomial`] before rounding to `f64`.
    pub(crate) fn to_polynomial_dd(&self) -> Result<Vec<DoubleDouble>> {
        if self.kernel.has_tail() {
            return Err(Error::ContinuumTail("polynomial expansion"));
        }
        let ladder = &self.kernel.ladder;
        let n = ladder.len();
        if n > POLY_MAX {
            return Err(Error::InvalidParameter(format!(
                "ladder of {n} terms exceeds poly_max = {POLY_MAX}"
            )));
        }
        let log_mag: f64 = ladder
            .rates()
            .iter()
            .map(|g| (1.0 + g).log10())
            .sum::<f64>()
            + (1.0 + self.a * self.a).log10()
            + (1.0 + self.coupling * ladder.s1()).log10();
        if log_mag > 300.0 {
            return Err(Error::Overflow(10f64.powf(log_mag.min(308.0))));
        }

        let a2 = DoubleDouble::from(self.a) * DoubleDouble::from(self.a);
        let coupling = DoubleDouble::from(self.coupling);

        let mut full = vec![DoubleDouble::ONE];
        for &g in ladder.rates() {
            full = mul_linear(&full, g.into());
        }
        // (z^2 + a^2) * prod
        let mut poly = vec![DoubleDouble::ZERO; n + 3];
        for (i, &p) in full.iter().enumerate() {
            poly[i] = poly[i] + p * a2;
            poly[i + 2] = poly[i + 2] + p;
        }
        for (k, &c) in ladder.coeffs().iter().enumerate() {
            let mut partial = vec![DoubleDouble::ONE];
            for (j, &g) in ladder.rates().iter().enumerate() {
                if j != k {
                    partial = mul_linear(&partial, g.into());
                }
            }
            let scale = coupling * c.into();
            for (i, &p) in partial.iter().enumerate() {
                poly[i] = poly[i] - p * scale;
            }
        }
        Ok(poly)
    }
}

/// Horner evaluation of ascending coefficients at a complex point.
pub fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}
