//! Adaptive Gauss-Kronrod quadrature for complex-valued integrands.
//!
//! Panels are refined by bisection, always splitting the panel with the
//! largest error estimate, until the summed estimate falls below
//! `max(abs_tol, rel_tol * |I|)`.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_panels: 4000,
        }
    }
}

impl QuadratureOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_panel<F: Fn(f64) -> Complex64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    Panel {
        lo,
        hi,
        value,
        error,
    }
}

/// Integrates `f` over the finite interval `[lo, hi]`.
pub fn integrate<F>(f: F, lo: f64, hi: f64, opts: &QuadratureOptions) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::InvalidParameter(format!(
            "quadrature interval [{lo}, {hi}] must be finite and ordered"
        )));
    }
    if hi == lo {
        return Ok(QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            panels: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod_panel(&f, lo, hi);
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);

    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if total_err <= target {
            break;
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::QuadratureNonConvergence {
                tol: target,
                estimate: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Panel at floating-point resolution; cannot refine further.
            return Err(Error::QuadratureNonConvergence {
                tol: target,
                estimate: total_err,
            });
        }
        let left = kronrod_panel(&f, worst.lo, mid);
        let right = kronrod_panel(&f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of the running updates.
    let panels = heap.len();
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for p in heap.into_vec() {
        value += p.value;
        error += p.error;
    }
    Ok(QuadratureResult {
        value,
        error,
        panels,
    })
}

/// Integrates `t^{-p} g(t)` over `[0, 1]` for `p < 1`.
///
/// The substitution `t = u^{1/(1-p)}` turns the integrand into
/// `g(u^{1/(1-p)}) / (1-p)`, which is bounded at the origin.
pub fn integrate_power_weighted<G>(
    g: G,
    p: f64,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult>
where
    G: Fn(f64) -> Complex64,
{
    if !(p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "power weight exponent {p} must be below 1"
        )));
    }
    let q = 1.0 / (1.0 - p);
    integrate(|u| g(u.powf(q)) * q, 0.0, 1.0, opts)
}
