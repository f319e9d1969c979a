//! The complex-conjugate pair `lambda^± = ±i a + tau a`.
//!
//! `tau` solves `tau = K^(a(i + tau)) / (a^(2(1-xi)) (tau + 2i))` and is found
//! by iterating that map from zero, then polished by Newton's method on the
//! same equation written as
//! `G(tau) = a^(2(1-xi)) tau (tau + 2i) - K^(a(i + tau)) = l / a^(2 xi)`.
//! Working in `tau` keeps the real part of `lambda`, which is many orders of
//! magnitude below `a`, at full relative precision.
//!
//! Zero counts are certified with the argument principle on rectangles.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{fmt_point, Error, Result};
use crate::pencil::ModePencil;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::SolverOptions;

/// A conjugate pair stored through its offset `tau = lambda^+/a - i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPair {
    pub a: f64,
    pub tau: Complex64,
}

impl ComplexPair {
    pub fn from_root(a: f64, lambda: Complex64) -> Self {
        Self {
            a,
            tau: lambda / a - Complex64::new(0.0, 1.0),
        }
    }

    pub fn plus(&self) -> Complex64 {
        Complex64::new(self.a * self.tau.re, self.a * (1.0 + self.tau.im))
    }

    pub fn minus(&self) -> Complex64 {
        self.plus().conj()
    }

    /// `Re lambda^+`.
    pub fn re(&self) -> f64 {
        self.a * self.tau.re
    }

    /// `Im lambda^+ - a`, exact where `plus().im - a` would cancel.
    pub fn im_shift(&self) -> f64 {
        self.a * self.tau.im
    }
}

fn lambda_of(p: &ModePencil, tau: Complex64) -> Complex64 {
    let a = p.a();
    Complex64::new(a * tau.re, a * (1.0 + tau.im))
}

/// Outcome of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointPair {
    pub pair: ComplexPair,
    pub iterations: usize,
    /// `|g'(tau)|` at the last iterate.
    pub contraction: f64,
}

impl FixedPointPair {
    pub fn plus(&self) -> Complex64 {
        self.pair.plus()
    }

    pub fn minus(&self) -> Complex64 {
        self.pair.minus()
    }
}

/// `g(tau)` and `g'(tau)` for the fixed-point map.
fn fixed_point_map(p: &ModePencil, tau: Complex64) -> Result<(Complex64, Complex64)> {
    let lambda = lambda_of(p, tau);
    let k = p.kernel().laplace(lambda)?;
    let dk = p.kernel().laplace_deriv(lambda)?;
    let s = tau + Complex64::new(0.0, 2.0);
    let w = p.weight();
    let g = k * w / s;
    let dg = (dk * p.a() * s - k) * w / (s * s);
    Ok((g, dg))
}

pub const FIXED_POINT_MAX_ITER: usize = 200;

/// Iterates `tau <- g(tau)` from `tau = 0` with a contraction monitor.
pub fn fixed_point_pair(p: &ModePencil) -> Result<FixedPointPair> {
    let mut tau = Complex64::new(0.0, 0.0);
    for iteration in 1..=FIXED_POINT_MAX_ITER {
        let (next, dg) = fixed_point_map(p, tau)?;
        let contraction = dg.norm();
        if !(contraction < 1.0) {
            return Err(Error::NonContraction {
                derivative: contraction,
                iteration,
            });
        }
        let done = (next - tau).norm() < 1e-14 * (1.0 + next.norm());
        tau = next;
        if done {
            return Ok(FixedPointPair {
                pair: ComplexPair { a: p.a(), tau },
                iterations: iteration,
                contraction,
            });
        }
    }
    Err(Error::MaxIterations(FIXED_POINT_MAX_ITER))
}

/// Newton-polished root with its residual `|l(root)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedRoot {
    pub pair: ComplexPair,
    pub residual: f64,
    pub steps: usize,
}

pub const NEWTON_MAX_STEPS: usize = 50;

fn tau_equation(p: &ModePencil, tau: Complex64) -> Result<(Complex64, Complex64)> {
    let lambda = lambda_of(p, tau);
    let k = p.kernel().laplace(lambda)?;
    let dk = p.kernel().laplace_deriv(lambda)?;
    let inv_w = 1.0 / p.weight();
    let two_i = Complex64::new(0.0, 2.0);
    let g = tau * (tau + two_i) * inv_w - k;
    let dg = (tau * 2.0 + two_i) * inv_w - dk * p.a();
    Ok((g, dg))
}

/// Newton's method on `l` in the offset variable `tau`, starting from `tau0`.
///
/// Fails with [`Error::Divergence`] when the residual grows during the first
/// three steps (seed outside the basin) or twice in a row later on.
pub fn refine_tau(p: &ModePencil, tau0: Complex64, opts: &SolverOptions) -> Result<RefinedRoot> {
    let a = p.a();
    let scale = p.coupling();
    let mut tau = tau0;
    let (mut g, mut dg) = tau_equation(p, tau)?;
    let mut residual = g.norm() * scale;
    let tolerance =
        |tau: Complex64| opts.residual_tol * a.powi(2).max(lambda_of(p, tau).norm_sqr());
    let mut rises = 0;
    let mut steps = 0;
    while steps < NEWTON_MAX_STEPS && residual > 0.0 {
        if dg.norm() == 0.0 {
            return Err(Error::Divergence(fmt_point(lambda_of(p, tau0))));
        }
        let step = g / dg;
        let next = tau - step;
        let (ng, ndg) = tau_equation(p, next)?;
        let next_residual = ng.norm() * scale;
        steps += 1;
        if next_residual > residual && residual > tolerance(tau) {
            rises += 1;
            if steps <= 3 || rises >= 2 {
                return Err(Error::Divergence(fmt_point(lambda_of(p, tau0))));
            }
        } else {
            rises = 0;
        }
        let converged = step.norm() <= 8.0 * f64::EPSILON * next.norm().max(f64::MIN_POSITIVE);
        if next_residual <= residual || residual > tolerance(tau) {
            tau = next;
            g = ng;
            dg = ndg;
            residual = next_residual;
        }
        if converged || (residual <= tolerance(tau) && next_residual >= residual && steps > 1) {
            break;
        }
    }
    let tol = tolerance(tau);
    if residual > tol {
        return Err(Error::Residual {
            point: fmt_point(lambda_of(p, tau)),
            residual,
            tolerance: tol,
        });
    }
    Ok(RefinedRoot {
        pair: ComplexPair { a, tau },
        residual,
        steps,
    })
}

/// Newton refinement of a zero of `l` from `seed`.
pub fn newton_refine(p: &ModePencil, seed: Complex64, opts: &SolverOptions) -> Result<Complex64> {
    let pair = ComplexPair::from_root(p.a(), seed);
    Ok(refine_tau(p, pair.tau, opts)?.pair.plus())
}

/// Fixed point, then Newton; falls back to Newton from `tau = 0` (the
/// unperturbed root `ia`) when the map does not contract.
pub fn solve_pair(p: &ModePencil, opts: &SolverOptions) -> Result<PairSolution> {
    let (seed, fixed_point) = match fixed_point_pair(p) {
        Ok(fp) => (fp.pair.tau, Some(fp)),
        Err(Error::NonContraction { .. }) | Err(Error::MaxIterations(_)) => {
            (Complex64::new(0.0, 0.0), None)
        }
        Err(e) => return Err(e),
    };
    let refined = refine_tau(p, seed, opts)?;
    if !(refined.pair.plus().im > 0.0) {
        return Err(Error::Divergence(format!(
            "pair search converged to the real axis at {}",
            fmt_point(refined.pair.plus())
        )));
    }
    Ok(PairSolution {
        fixed_point,
        refined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSolution {
    pub fixed_point: Option<FixedPointPair>,
    pub refined: RefinedRoot,
}

/// Axis-aligned rectangle traversed counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectContour {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Initial number of sub-panels per side.
    pub samples_per_side: usize,
}

impl RectContour {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max)
            || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "degenerate rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            samples_per_side: 16,
        })
    }

    pub fn edge_guard(&self) -> f64 {
        1e-3 * (self.x_max - self.x_min).min(self.y_max - self.y_min)
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.x_min, self.y_min),
            Complex64::new(self.x_max, self.y_min),
            Complex64::new(self.x_max, self.y_max),
            Complex64::new(self.x_min, self.y_max),
        ]
    }

    fn strictly_inside(&self, z: Complex64) -> bool {
        z.re > self.x_min && z.re < self.x_max && z.im > self.y_min && z.im < self.y_max
    }

    fn distance_to_boundary(&self, z: Complex64) -> f64 {
        let clamp = |v: f64, lo: f64, hi: f64| v.max(lo).min(hi);
        if self.strictly_inside(z) {
            (z.re - self.x_min)
                .min(self.x_max - z.re)
                .min(z.im - self.y_min)
                .min(self.y_max - z.im)
        } else {
            let nearest = Complex64::new(
                clamp(z.re, self.x_min, self.x_max),
                clamp(z.im, self.y_min, self.y_max),
            );
            (z - nearest).norm()
        }
    }

    pub fn scaled_height(&self, factor: f64) -> Result<Self> {
        let mut c = Self::new(
            self.x_min,
            self.x_max,
            self.y_min * factor,
            self.y_max * factor,
        )?;
        c.samples_per_side = self.samples_per_side;
        Ok(c)
    }
}

/// Argument-principle record for one contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountCertificate {
    /// Zeros minus poles enclosed.
    pub winding: i64,
    pub poles_inside: i64,
    pub zeros_inferred: i64,
    /// Distance of the raw winding integral from the nearest integer.
    pub max_quadrature_defect: f64,
    pub raw_winding: f64,
}

const MAX_COUNT_REFINEMENTS: usize = 6;

fn winding_integral(p: &ModePencil, c: &RectContour, panels_per_side: usize) -> Result<f64> {
    let corners = c.corners();
    let opts = QuadratureOptions {
        abs_tol: 1e-7,
        rel_tol: 0.0,
        max_panels: 20_000,
    };
    let mut total = Complex64::new(0.0, 0.0);
    for side in 0..4 {
        let z0 = corners[side];
        let z1 = corners[(side + 1) % 4];
        let dz = z1 - z0;
        for j in 0..panels_per_side {
            let t0 = j as f64 / panels_per_side as f64;
            let t1 = (j + 1) as f64 / panels_per_side as f64;
            // Evaluation failures cannot happen away from the poles, which the
            // edge guard keeps off the boundary; map them to NaN to surface them.
            let r = integrate(
                |t| {
                    let z = z0 + dz * t;
                    match (p.eval_symbol(z), p.eval_symbol_deriv(z)) {
                        (Ok(l), Ok(dl)) => dl / l * dz,
                        _ => Complex64::new(f64::NAN, f64::NAN),
                    }
                },
                t0,
                t1,
                &opts,
            )?;
            total += r.value;
        }
    }
    let raw = total / Complex64::new(0.0, 2.0 * PI);
    if !raw.re.is_finite() {
        return Err(Error::ContourDefect { defect: f64::NAN });
    }
    Ok(raw.re)
}

/// Counts zeros of `l` inside `contour` by integrating `l'/l`, refining the
/// panelling until the integral is within 0.25 of an integer.
pub fn count_zeros(p: &ModePencil, contour: &RectContour) -> Result<CountCertificate> {
    let guard = contour.edge_guard();
    for &g in p.ladder().rates() {
        let pole = Complex64::new(-g, 0.0);
        if contour.distance_to_boundary(pole) < guard {
            return Err(Error::InvalidParameter(format!(
                "pole {} within edge guard {guard:e} of the contour",
                -g
            )));
        }
    }
    if let Some(tail) = &p.kernel().tail {
        if contour.x_min <= tail.cut_start() && contour.y_min <= 0.0 && contour.y_max >= 0.0 {
            return Err(Error::ContinuumTail("contour crossing the branch cut"));
        }
    }
    let poles_inside = p
        .ladder()
        .rates()
        .iter()
        .filter(|g| contour.strictly_inside(Complex64::new(-**g, 0.0)))
        .count() as i64;

    let mut panels = contour.samples_per_side.max(1);
    let mut last_defect = f64::INFINITY;
    for _ in 0..MAX_COUNT_REFINEMENTS {
        match winding_integral(p, contour, panels) {
            Ok(raw) => {
                let winding = raw.round();
                let defect = (raw - winding).abs();
                if defect < 0.25 {
                    let winding = winding as i64;
                    return Ok(CountCertificate {
                        winding,
                        poles_inside,
                        zeros_inferred: winding + poles_inside,
                        max_quadrature_defect: defect,
                        raw_winding: raw,
                    });
                }
                last_defect = defect;
            }
            Err(Error::QuadratureNonConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
        panels *= 2;
    }
    Err(Error::ContourDefect {
        defect: last_defect,
    })
}

/// Rectangle enclosing the first `window` real branches and the pair.
///
/// Left edge at `-X`, `X = (gamma_w + gamma_{w+1}) / 2`. When `window` equals
/// the ladder length there is no `gamma_{w+1}`; it is extrapolated by
/// repeating the last gap (or `gamma_1` for a single-term ladder), floored
/// at `Y / 100` so the outermost pole clears the edge guard. Height
/// `Y = 1.1 a sqrt(1 + S1 a^(-2(1-xi)))`. The right edge sits at `max(X, Y)`.
pub fn ladder_contour(p: &ModePencil, window: usize) -> Result<RectContour> {
    if p.kernel().has_tail() {
        return Err(Error::ContinuumTail("contour around an infinite ladder"));
    }
    let rates = p.ladder().rates();
    let n = rates.len();
    if window == 0 || window > n {
        return Err(Error::InvalidParameter(format!(
            "window {window} outside 1..={n}"
        )));
    }
    let y = 1.1 * p.a() * (1.0 + p.ladder().s1() * p.weight()).sqrt();
    let g_w = rates[window - 1];
    let g_next = if window < n {
        rates[window]
    } else {
        let gap = if n >= 2 {
            rates[n - 1] - rates[n - 2]
        } else {
            rates[0]
        };
        rates[n - 1] + gap.max(0.01 * y)
    };
    let x = 0.5 * (g_w + g_next);
    RectContour::new(-x, x.max(y), -y, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ExponentialKernel;

    fn cubic() -> ModePencil {
        ModePencil::new(10.0, 0.5, ExponentialKernel::single(1.0, 2.0).unwrap()).unwrap()
    }

    /// Pair of z^3 + 2z^2 + 100z + 190 from its real root via Vieta:
    /// 2 Re = -2 - mu, |lambda|^2 = 190 / |mu|.
    fn cubic_pair() -> Complex64 {
        let p = |z: f64| ((z + 2.0) * z + 100.0) * z + 190.0;
        let (mut lo, mut hi) = (-2.0f64, 0.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if p(m) < 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        let mu = 0.5 * (lo + hi);
        let re = 0.5 * (-2.0 - mu);
        let im = (190.0 / mu.abs() - re * re).sqrt();
        Complex64::new(re, im)
    }

    #[test]
    fn fixed_point_cubic() {
        let fp = fixed_point_pair(&cubic()).unwrap();
        let exact = cubic_pair();
        assert!(
            (fp.plus() - exact).norm() < 1e-10,
            "{} vs {exact}",
            fp.plus()
        );
        assert!((exact - Complex64::new(-0.048_251_7, 9.990_694_6)).norm() < 1e-6);
        assert_eq!(fp.minus(), fp.plus().conj());
        assert!(fp.contraction < 1.0);
        // leading term -S1/(2a) = -0.05
        assert!((fp.plus().re + 0.05).abs() < 0.1 / 10.0);
    }

    #[test]
    fn zero_kernel_limit() {
        let k = ExponentialKernel::single(1e-12, 2.0).unwrap();
        let p = ModePencil::new(10.0, 0.5, k).unwrap();
        let fp = fixed_point_pair(&p).unwrap();
        assert!((fp.plus() - Complex64::new(0.0, 10.0)).norm() < 1e-10);
    }

    #[test]
    fn refine_improves_and_is_idempotent() {
        let p = cubic();
        let opts = SolverOptions::default();
        let fp = fixed_point_pair(&p).unwrap();
        let before = p.eval_symbol(fp.plus()).unwrap().norm();
        let refined = refine_tau(&p, fp.pair.tau, &opts).unwrap();
        // Refinement output is at the evaluation floor.
        assert!(refined.residual <= 1e-4 * before.max(1e-9));
        assert!(refined.residual < 1e-11);
        let again = refine_tau(&p, refined.pair.tau, &opts).unwrap();
        assert!(again.steps <= 1);
        assert!((again.pair.plus() - refined.pair.plus()).norm() < 1e-14);
    }

    #[test]
    fn refine_from_rough_seed() {
        let p = cubic();
        let root = newton_refine(&p, Complex64::new(0.0, 10.0), &SolverOptions::default()).unwrap();
        assert!((root - cubic_pair()).norm() < 1e-12);
        let conj =
            newton_refine(&p, Complex64::new(0.0, -10.0), &SolverOptions::default()).unwrap();
        assert!((conj - root.conj()).norm() < 1e-12);
    }

    #[test]
    fn refine_rejects_bad_seeds() {
        let p = cubic();
        let opts = SolverOptions::default();
        // At the pole itself.
        assert!(matches!(
            newton_refine(&p, Complex64::new(-2.0, 0.0), &opts),
            Err(Error::PoleProximity { .. })
        ));
        // Left of the pole, where l has no zeros: the first step overshoots.
        assert!(matches!(
            newton_refine(&p, Complex64::new(-5.0, 0.0), &opts),
            Err(Error::Divergence(_))
        ));
        // Just left of the pole: Newton walks into the zero-free half line.
        assert!(newton_refine(&p, Complex64::new(-2.0 - 1e-6, 0.0), &opts).is_err());
    }

    #[test]
    fn count_cubic() {
        let p = cubic();
        let c = count_zeros(&p, &RectContour::new(-0.5, 0.5, 9.0, 11.0).unwrap()).unwrap();
        assert_eq!((c.winding, c.poles_inside, c.zeros_inferred), (1, 0, 1));

        let c = count_zeros(&p, &RectContour::new(-3.0, 1.0, -11.0, 11.0).unwrap()).unwrap();
        assert_eq!((c.winding, c.poles_inside, c.zeros_inferred), (2, 1, 3));
        assert!(c.max_quadrature_defect < 0.25);

        let c = count_zeros(&p, &RectContour::new(5.0, 6.0, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!(c.zeros_inferred, 0);
    }

    #[test]
    fn ladder_contour_cubic() {
        let p = cubic();
        let rect = ladder_contour(&p, 1).unwrap();
        assert_eq!(rect.x_min, -3.0);
        let c = count_zeros(&p, &rect).unwrap();
        assert_eq!(c.zeros_inferred, 3);
        let taller = count_zeros(&p, &rect.scaled_height(2.0).unwrap()).unwrap();
        assert_eq!(taller.zeros_inferred, 3);
        assert!(ladder_contour(&p, 2).is_err());
    }

    #[test]
    fn contour_rejects_pole_on_edge() {
        let p = cubic();
        assert!(count_zeros(&p, &RectContour::new(-2.0, 1.0, -1.0, 1.0).unwrap()).is_err());
    }
}
