//! Closed-form large-`a` laws for the complex pair, the constant `D`, and the
//! classification of the decay regimes.
//!
//! Every prediction is the leading term of `lambda^+` together with the
//! declared exponent `p` of its remainder, read as `O(a^-p)`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::PowerLawFamily;
use crate::quadrature::{integrate_power_weighted, QuadratureOptions};

const BOUNDARY_TOL: f64 = 1e-12;

/// Which asymptotic formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeTag {
    FiniteSumXiLtHalf,
    FiniteSumXiEqHalf,
    FiniteSumXiGtHalf,
    PowerRLtHalf,
    PowerRInHalfOne,
    PowerREqOne,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::FiniteSumXiLtHalf => "finite_sum_xi_lt_half",
            RegimeTag::FiniteSumXiEqHalf => "finite_sum_xi_eq_half",
            RegimeTag::FiniteSumXiGtHalf => "finite_sum_xi_gt_half",
            RegimeTag::PowerRLtHalf => "power_r_lt_half",
            RegimeTag::PowerRInHalfOne => "power_r_in_half_one",
            RegimeTag::PowerREqOne => "power_r_eq_one",
        }
    }

    /// Remainder exponents `(real part, imaginary part)` for this regime.
    pub fn remainder_orders(&self, xi: f64, r: f64) -> (f64, f64) {
        let real = 2.0 * (1.0 - xi);
        match self {
            RegimeTag::FiniteSumXiLtHalf => (real, 1.0 - 2.0 * xi),
            RegimeTag::FiniteSumXiEqHalf => (real, 0.0),
            RegimeTag::FiniteSumXiGtHalf => (real, -(1.0 - 2.0 * xi)),
            RegimeTag::PowerRLtHalf => {
                let p = 2.0 * (r - xi) + 1.0;
                (p, p)
            }
            RegimeTag::PowerRInHalfOne | RegimeTag::PowerREqOne => (real, real),
        }
    }
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Leading-term prediction of `lambda^+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticPrediction {
    pub value: Complex64,
    /// `value - i a`, kept separately so it carries full relative precision.
    pub correction: Complex64,
    /// Exponent of the remainder in the real part.
    pub remainder_order: f64,
    /// Exponent of the remainder in the imaginary part.
    pub imag_remainder_order: f64,
    pub regime_tag: RegimeTag,
}

impl AsymptoticPrediction {
    fn new(a: f64, correction: Complex64, tag: RegimeTag, xi: f64, r: f64) -> Self {
        let (remainder_order, imag_remainder_order) = tag.remainder_orders(xi, r);
        Self {
            value: correction + Complex64::new(0.0, a),
            correction,
            remainder_order,
            imag_remainder_order,
            regime_tag: tag,
        }
    }
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "r must lie in (0, 1), got {r}"
        )))
    }
}

/// `D(r) = (pi/2) exp(i pi (1-r)/2) / sin(pi r)`.
pub fn constant_d(r: f64) -> Result<Complex64> {
    check_r(r)?;
    Ok(Complex64::from_polar(
        PI / 2.0 / (PI * r).sin(),
        PI * (1.0 - r) / 2.0,
    ))
}

/// The two real integrals behind `D = (I1 + i I2) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DQuadrature {
    /// `int_0^inf t^-r / (1 + t^2) dt`.
    pub i1: f64,
    /// `int_0^inf t^(1-r) / (1 + t^2) dt`.
    pub i2: f64,
    pub error: f64,
}

impl DQuadrature {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.i1, self.i2) / 2.0
    }
}

/// `int_0^inf t^-p / (1 + t^2) dt`, split at 1 with `t = 1/s` on the outer half.
fn mellin_quarter(p: f64, opts: &QuadratureOptions) -> Result<(f64, f64)> {
    let g = |t: f64| Complex64::new(1.0 / (1.0 + t * t), 0.0);
    let inner = integrate_power_weighted(g, p, opts)?;
    let outer = integrate_power_weighted(g, -p, opts)?;
    Ok((inner.value.re + outer.value.re, inner.error + outer.error))
}

/// Quadrature evaluation of the two integrals defining `D(r)`.
pub fn constant_d_quadrature(r: f64, opts: &QuadratureOptions) -> Result<DQuadrature> {
    check_r(r)?;
    let (i1, e1) = mellin_quarter(r, opts)?;
    let (i2, e2) = mellin_quarter(r - 1.0, opts)?;
    Ok(DQuadrature {
        i1,
        i2,
        error: e1 + e2,
    })
}

/// `lambda^+ ~ -S1 / (2 a^(2(1-xi))) + i a` for finite-sum kernels.
pub fn predict_finite_sum(a: f64, xi: f64, s1: f64) -> AsymptoticPrediction {
    let tag = if (xi - 0.5).abs() <= BOUNDARY_TOL {
        RegimeTag::FiniteSumXiEqHalf
    } else if xi < 0.5 {
        RegimeTag::FiniteSumXiLtHalf
    } else {
        RegimeTag::FiniteSumXiGtHalf
    };
    let re = -s1 / (2.0 * a.powf(2.0 * (1.0 - xi)));
    AsymptoticPrediction::new(a, Complex64::new(re, 0.0), tag, xi, 1.0)
}

/// `M = -A D / (beta B^(1-r))`, the coefficient of `a^-(1+r-2 xi)` in
/// `lambda^+ - i a` for `0 < r < 1`.
pub fn power_law_coefficient(family: &PowerLawFamily) -> Result<Complex64> {
    let r = family.r();
    let d = constant_d(r)?;
    Ok(-d * family.amplitude / (family.beta * family.scale.powf(1.0 - r)))
}

/// Leading term of `lambda^+` for a power-law family.
pub fn predict_power_law(a: f64, xi: f64, family: &PowerLawFamily) -> Result<AsymptoticPrediction> {
    let r = family.r();
    if (r - 1.0).abs() <= BOUNDARY_TOL {
        let shift = family.amplitude / (2.0 * family.beta) * a.powf(-2.0 * (1.0 - xi)) * a.ln();
        return Ok(AsymptoticPrediction::new(
            a,
            Complex64::new(-shift, 0.0),
            RegimeTag::PowerREqOne,
            xi,
            1.0,
        ));
    }
    check_r(r)?;
    let tag = if r < 0.5 - BOUNDARY_TOL {
        RegimeTag::PowerRLtHalf
    } else {
        RegimeTag::PowerRInHalfOne
    };
    let m = power_law_coefficient(family)?;
    let correction = m * a.powf(-(1.0 + r - 2.0 * xi));
    Ok(AsymptoticPrediction::new(a, correction, tag, xi, r))
}

/// Long-time behavior of `Re lambda^+` as `a -> inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    TendsToAxis,
    ConstantOffset,
    UnboundedDecay,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::TendsToAxis => "tends_to_axis",
            Regime::ConstantOffset => "constant_offset",
            Regime::UnboundedDecay => "unbounded_decay",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Compares `xi` with `(r + 1) / 2`; `r = 1` always tends to the axis.
pub fn classify_regime(xi: f64, r: f64) -> Regime {
    if (r - 1.0).abs() <= BOUNDARY_TOL {
        return Regime::TendsToAxis;
    }
    let threshold = 0.5 * (r + 1.0);
    if (xi - threshold).abs() <= BOUNDARY_TOL {
        Regime::ConstantOffset
    } else if xi < threshold {
        Regime::TendsToAxis
    } else {
        Regime::UnboundedDecay
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn d_at_half() {
        let d = constant_d(0.5).unwrap();
        assert_relative_eq!(d.re, 1.110_720_734_539_591_5, max_relative = 1e-14);
        assert_relative_eq!(d.im, 1.110_720_734_539_591_5, max_relative = 1e-14);
        let q = constant_d_quadrature(0.5, &QuadratureOptions::default()).unwrap();
        assert_relative_eq!(q.i1, PI / 2f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(q.i2, PI / 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn d_modulus_symmetry() {
        for r in [0.1, 0.2, 0.3, 0.4] {
            let a = constant_d(r).unwrap().norm();
            let b = constant_d(1.0 - r).unwrap().norm();
            assert_relative_eq!(a, b, max_relative = 1e-14);
            assert_relative_eq!(a, PI / 2.0 / (PI * r).sin(), max_relative = 1e-14);
        }
    }

    #[test]
    fn d_quadrature_grid() {
        let opts = QuadratureOptions::default();
        for r in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let closed = constant_d(r).unwrap();
            let q = constant_d_quadrature(r, &opts).unwrap();
            assert!((q.value() - closed).norm() < 1e-8, "r={r}");
        }
        assert!(constant_d(0.0).is_err());
        assert!(constant_d(1.0).is_err());
    }

    #[test]
    fn finite_sum_examples() {
        let p = predict_finite_sum(10.0, 0.5, 1.0);
        assert_relative_eq!(p.value.re, -0.05, max_relative = 1e-15);
        assert_eq!(p.value.im, 10.0);
        assert_eq!(p.remainder_order, 1.0);
        assert_eq!(p.regime_tag, RegimeTag::FiniteSumXiEqHalf);

        let p = predict_finite_sum(100.0, 0.25, 2.0);
        assert_relative_eq!(p.value.re, -1e-3, max_relative = 1e-13);
        assert_eq!(p.regime_tag, RegimeTag::FiniteSumXiLtHalf);
        assert_relative_eq!(p.imag_remainder_order, 0.5);

        let p = predict_finite_sum(7.0, 0.75, 0.0);
        assert_eq!(p.value, Complex64::new(0.0, 7.0));
        assert_relative_eq!(p.imag_remainder_order, 0.5);
    }

    #[test]
    fn power_law_examples() {
        let fam = PowerLawFamily::new(1.0, 1.0, 1.0, 1.0, 10).unwrap();
        let a = 10f64.exp();
        let p = predict_power_law(a, 0.5, &fam).unwrap();
        assert_relative_eq!(p.value.re, -0.5 * 10.0 / a, max_relative = 1e-12);
        assert_eq!(p.regime_tag, RegimeTag::PowerREqOne);

        let fam = PowerLawFamily::new(1.0, 1.0, 0.5, 1.0, 10).unwrap();
        let p = predict_power_law(100.0, 0.5, &fam).unwrap();
        assert_relative_eq!(p.value.re, -0.111_072_073_453_959_15, max_relative = 1e-12);
        assert_eq!(p.regime_tag, RegimeTag::PowerRInHalfOne);
        assert_eq!(p.remainder_order, 1.0);

        // 1 + r - 2 xi = 0: the correction does not decay.
        let p1 = predict_power_law(1e2, 0.75, &fam).unwrap();
        let p2 = predict_power_law(1e6, 0.75, &fam).unwrap();
        assert_relative_eq!(p1.value.re, p2.value.re, max_relative = 1e-12);
        assert_relative_eq!(
            p1.value.re,
            -constant_d(0.5).unwrap().re,
            max_relative = 1e-12
        );

        let fam = PowerLawFamily::new(1.0, 1.0, 0.2, 1.0, 10).unwrap();
        let p = predict_power_law(100.0, 0.3, &fam).unwrap();
        assert_eq!(p.regime_tag, RegimeTag::PowerRLtHalf);
        assert_relative_eq!(
            p.remainder_order,
            2.0 * (0.2 - 0.3) + 1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(0.3, 0.5), Regime::TendsToAxis);
        assert_eq!(classify_regime(0.75, 0.5), Regime::ConstantOffset);
        assert_eq!(classify_regime(0.9, 0.5), Regime::UnboundedDecay);
        assert_eq!(classify_regime(0.99, 1.0), Regime::TendsToAxis);
    }
}
