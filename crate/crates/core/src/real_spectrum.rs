//! Real branches: one zero of `l` (and one of `f`) in every interval
//! `(-gamma_k, -gamma_{k-1})`, `gamma_0 = 0`.
//!
//! Each search runs in the offset `d = z + gamma_k` from the left pole, so
//! the distance to the pole (which shrinks like `a^(-2(1-xi))`) keeps full
//! relative precision and the interlacing order can be checked on offsets.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::{log_log_slope, SlopeFit};
use crate::kernel::{CompensatedSum, ExponentialKernel};
use crate::pencil::ModePencil;
use crate::SolverOptions;

/// A real zero located in its bracketing interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRoot {
    /// Branch index `k >= 1`.
    pub index: usize,
    pub value: f64,
    /// `value - interval.0`, carried separately at full relative precision.
    pub offset: f64,
    pub interval: (f64, f64),
    /// `|l(value)|` for zeros of `l`, `a^2 |f(value)|` for zeros of `f`.
    pub residual: f64,
}

/// Intervals `(-gamma_k, -gamma_{k-1})` for `k = 1..=count`.
pub fn bracket_intervals(kernel: &ExponentialKernel, count: usize) -> Result<Vec<(f64, f64)>> {
    if count > kernel.len() {
        return Err(Error::InvalidParameter(format!(
            "requested {count} branches but the ladder has {} poles",
            kernel.len()
        )));
    }
    let rates = kernel.rates();
    Ok((0..count)
        .map(|i| (-rates[i], if i == 0 { 0.0 } else { -rates[i - 1] }))
        .collect())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Target {
    Symbol,
    F,
}

/// Evaluates the target and its derivative at `z = -gamma_k + d`.
struct OffsetEval<'a> {
    pencil: &'a ModePencil,
    pole: usize,
    target: Target,
}

impl OffsetEval<'_> {
    fn point(&self, d: f64) -> f64 {
        -self.pencil.ladder().rates()[self.pole] + d
    }

    fn kernel_terms(&self, d: f64) -> Result<(f64, f64)> {
        let ladder = self.pencil.ladder();
        let gk = ladder.rates()[self.pole];
        let mut k = CompensatedSum::default();
        let mut dk = CompensatedSum::default();
        for (j, (c, g)) in ladder.coeffs().iter().zip(ladder.rates()).enumerate() {
            let den = if j == self.pole { d } else { (g - gk) + d };
            if den == 0.0 {
                return Err(Error::PoleProximity {
                    point: format!("{}", self.point(d)),
                    pole: -g,
                    distance: 0.0,
                });
            }
            k.add(Complex64::new(c / den, 0.0));
            dk.add(Complex64::new(-c / (den * den), 0.0));
        }
        let mut kv = k.value().re;
        let mut dkv = dk.value().re;
        if let Some(tail) = &self.pencil.kernel().tail {
            let z = Complex64::new(self.point(d), 0.0);
            kv += tail.laplace(z)?.re;
            dkv += tail.laplace_deriv(z)?.re;
        }
        Ok((kv, dkv))
    }

    fn value_and_slope(&self, d: f64) -> Result<(f64, f64)> {
        let (k, dk) = self.kernel_terms(d)?;
        let p = self.pencil;
        Ok(match self.target {
            Target::Symbol => {
                let z = self.point(d);
                let a2 = p.a() * p.a();
                (z * z + a2 - p.coupling() * k, 2.0 * z - p.coupling() * dk)
            }
            Target::F => (1.0 - p.weight() * k, -p.weight() * dk),
        })
    }

    fn value(&self, d: f64) -> Result<f64> {
        Ok(self.value_and_slope(d)?.0)
    }

    fn residual_scale(&self) -> f64 {
        match self.target {
            Target::Symbol => 1.0,
            Target::F => self.pencil.a() * self.pencil.a(),
        }
    }
}

const MAX_NEWTON_POLISH: usize = 8;

fn locate(
    eval: &OffsetEval,
    index: usize,
    interval: (f64, f64),
    opts: &SolverOptions,
) -> Result<BranchRoot> {
    let (lo, hi) = interval;
    let width = hi - lo;

    // Sign at each end is read off a standoff sample; the standoff shrinks if
    // the root sits closer to the pole than the default.
    let mut eta = 1e-9 * width;
    let min_eta = (eval.pencil.ladder().pole_guard()).max(4.0 * f64::EPSILON * lo.abs());
    let (mut dl, mut dh) = (eta, width - eta);
    let (mut fl, mut fh) = (eval.value(dl)?, eval.value(dh)?);
    while fl >= 0.0 && eta > min_eta {
        eta = (eta * 1e-3).max(min_eta);
        dl = eta;
        fl = eval.value(dl)?;
    }
    if !(fl < 0.0 && fh > 0.0) {
        return Err(Error::NoSignChange {
            lo,
            hi,
            f_lo: fl,
            f_hi: fh,
        });
    }

    let width_tol = 1e-13 * width;
    while dh - dl > width_tol {
        let mid = 0.5 * (dl + dh);
        if mid <= dl || mid >= dh {
            break;
        }
        let fm = eval.value(mid)?;
        if fm < 0.0 {
            dl = mid;
            fl = fm;
        } else {
            dh = mid;
            fh = fm;
        }
    }
    let _ = (fl, fh);

    // Newton polish inside the final bracket; keeps the bisection point if a
    // step would leave it.
    let mut d = 0.5 * (dl + dh);
    let (mut fd, mut slope) = eval.value_and_slope(d)?;
    for _ in 0..MAX_NEWTON_POLISH {
        if fd == 0.0 || slope == 0.0 {
            break;
        }
        let next = d - fd / slope;
        if !(next > dl && next < dh) || next == d {
            break;
        }
        let (fn_, sn) = eval.value_and_slope(next)?;
        if fn_.abs() >= fd.abs() {
            break;
        }
        if fn_ < 0.0 {
            dl = next;
        } else {
            dh = next;
        }
        let converged = (next - d).abs() <= 4.0 * f64::EPSILON * next.abs();
        d = next;
        fd = fn_;
        slope = sn;
        if converged {
            break;
        }
    }

    let residual = fd.abs() * eval.residual_scale();
    let a2 = eval.pencil.a() * eval.pencil.a();
    let tolerance = opts.residual_tol * a2;
    if residual > tolerance {
        return Err(Error::Residual {
            point: format!("{}", lo + d),
            residual,
            tolerance,
        });
    }
    Ok(BranchRoot {
        index,
        value: lo + d,
        offset: d,
        interval,
        residual,
    })
}

fn roots_of(
    p: &ModePencil,
    count: usize,
    target: Target,
    opts: &SolverOptions,
) -> Result<Vec<BranchRoot>> {
    bracket_intervals(p.ladder(), count)?
        .into_iter()
        .enumerate()
        .map(|(i, interval)| {
            let eval = OffsetEval {
                pencil: p,
                pole: i,
                target,
            };
            locate(&eval, i + 1, interval, opts)
        })
        .collect()
}

/// Zeros `mu_{n,k}` of `l` for `k = 1..=count`.
pub fn real_roots(p: &ModePencil, count: usize, opts: &SolverOptions) -> Result<Vec<BranchRoot>> {
    roots_of(p, count, Target::Symbol, opts)
}

/// Zeros `x_{n,k}` of `f` for `k = 1..=count`.
pub fn f_roots(p: &ModePencil, count: usize, opts: &SolverOptions) -> Result<Vec<BranchRoot>> {
    roots_of(p, count, Target::F, opts)
}

/// First violated link of `-gamma_k < mu_k < x_k < -gamma_{k-1}`, if any.
///
/// Compared on offsets from `-gamma_k`, where both roots are exact to a few
/// ulps of their distance to the pole.
pub fn interlacing_violation(mu: &[BranchRoot], x: &[BranchRoot]) -> Option<usize> {
    mu.iter().zip(x).find_map(|(m, f)| {
        let width = m.interval.1 - m.interval.0;
        let ordered =
            m.interval == f.interval && 0.0 < m.offset && m.offset < f.offset && f.offset < width;
        (!ordered).then_some(m.index)
    })
}

/// Approach of branch `k` to its pole along an increasing ladder of `a_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchLimitRecord {
    pub k: usize,
    pub a: Vec<f64>,
    /// `|mu_{n,k} + gamma_k|`.
    pub distance: Vec<f64>,
    /// `x_{n,k} - mu_{n,k}`.
    pub gap: Vec<f64>,
    /// Distance strictly decreasing along the ladder.
    pub monotone: bool,
    pub distance_slope: SlopeFit,
    pub gap_slope: SlopeFit,
    /// `gap_slope <= -2(1-xi) + 0.3`: consistent with `mu - x = O(a^(-2(1-xi)))`.
    pub gap_within_bound: bool,
}

pub fn branch_limit_check(
    kernel: &ExponentialKernel,
    xi: f64,
    ladder: &[f64],
    k: usize,
    opts: &SolverOptions,
) -> Result<BranchLimitRecord> {
    if k == 0 || k > kernel.len() {
        return Err(Error::InvalidParameter(format!(
            "branch {k} outside 1..={}",
            kernel.len()
        )));
    }
    if ladder.len() < 2 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "mode ladder must hold at least two increasing values".into(),
        ));
    }
    let mut distance = Vec::with_capacity(ladder.len());
    let mut gap = Vec::with_capacity(ladder.len());
    for &a in ladder {
        let p = ModePencil::new(a, xi, kernel.clone())?;
        let mu = real_roots(&p, k, opts)?[k - 1];
        let x = f_roots(&p, k, opts)?[k - 1];
        distance.push(mu.offset);
        gap.push(x.offset - mu.offset);
    }
    let monotone = distance.windows(2).all(|w| w[1] < w[0]);
    let pairs =
        |v: &[f64]| -> Vec<(f64, f64)> { ladder.iter().copied().zip(v.iter().copied()).collect() };
    let distance_slope = log_log_slope(&pairs(&distance))?;
    let gap_slope = log_log_slope(&pairs(&gap))?;
    Ok(BranchLimitRecord {
        k,
        a: ladder.to_vec(),
        distance,
        gap,
        monotone,
        distance_slope,
        gap_slope,
        gap_within_bound: gap_slope.slope <= -2.0 * (1.0 - xi) + 0.3,
    })
}
