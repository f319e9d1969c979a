//! Independent checks on the spectrum.
//!
//! * Polynomial route: expand `l_n * prod (z + gamma_k)` and find all its
//!   roots at once with the Aberth-Ehrlich iteration.
//! * Dynamical route: the mode equation
//!   `u'' + a^2 u - a^(2 xi) int_0^t K(t-s) u(s) ds = 0` becomes the linear
//!   system `u'' = -a^2 u + a^(2 xi) sum_k c_k w_k`, `w_k' = -gamma_k w_k + u`,
//!   whose matrix has exactly the zeros of `l_n` as eigenvalues. It is used
//!   for eigenvalues, the characteristic polynomial, and time integration.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::dd::{ComplexDD, DoubleDouble};
use crate::error::{Error, Result};
use crate::pencil::{ModePencil, POLY_MAX};

pub const ABERTH_MAX_SWEEPS: usize = 500;

/// Largest ladder for which [`build_mode_system`] builds a matrix.
pub const ODE_MAX: usize = 32;

/// Value, derivative, and a rounding-error bound of a polynomial at a point.
struct PolyEval {
    p: Complex64,
    dp: Complex64,
    noise: f64,
}

fn eval_f64(coeffs: &[f64], z: Complex64) -> PolyEval {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut bound = 0.0;
    let r = z.norm();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
        bound = bound * r + c.abs();
    }
    PolyEval {
        p,
        dp,
        noise: 4.0 * (coeffs.len() as f64) * f64::EPSILON * bound,
    }
}

fn eval_dd(coeffs: &[DoubleDouble], z: Complex64) -> PolyEval {
    let zz = ComplexDD::from_complex(z);
    let mut p = ComplexDD::ZERO;
    let mut dp = ComplexDD::ZERO;
    let mut bound = 0.0;
    let r = z.norm();
    for &c in coeffs.iter().rev() {
        dp = dp * zz + p;
        p = (p * zz).add_real(c);
        bound = bound * r + c.to_f64().abs();
    }
    PolyEval {
        p: p.to_complex(),
        dp: dp.to_complex(),
        noise: 4.0 * (coeffs.len() as f64) * 1e-32 * bound,
    }
}

fn check_monic(coeffs: &[f64]) -> Result<usize> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Err(Error::InvalidParameter("polynomial of degree 0".into()));
    }
    if coeffs[degree] != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "leading coefficient {} is not 1",
            coeffs[degree]
        )));
    }
    if degree > POLY_MAX + 2 {
        return Err(Error::InvalidParameter(format!(
            "degree {degree} exceeds poly_max + 2 = {}",
            POLY_MAX + 2
        )));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("non-finite coefficient".into()));
    }
    Ok(degree)
}

/// Fujiwara's bound on the root moduli of a monic polynomial.
fn fujiwara_radius(coeffs: &[f64]) -> f64 {
    let n = coeffs.len() - 1;
    let mut bound: f64 = 0.0;
    for k in 1..=n {
        let c = coeffs[n - k].abs() / if k == n { 2.0 } else { 1.0 };
        bound = bound.max(c.powf(1.0 / k as f64));
    }
    2.0 * bound.max(f64::MIN_POSITIVE)
}

fn aberth<E: Fn(Complex64) -> PolyEval>(
    degree: usize,
    radius: f64,
    eval: E,
) -> Result<Vec<Complex64>> {
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / degree as f64 + 0.4))
        .collect();
    let mut done = vec![false; degree];
    for _ in 0..ABERTH_MAX_SWEEPS {
        for i in 0..degree {
            if done[i] {
                continue;
            }
            let e = eval(z[i]);
            if e.p.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let newton = e.p / e.dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| 1.0 / (z[i] - z[j]))
                .sum();
            let step = newton / (1.0 - newton * repulsion);
            z[i] -= step;
            let floor = 16.0 * f64::EPSILON * z[i].norm() + e.noise / e.dp.norm();
            if step.norm() <= floor || !step.norm().is_finite() {
                done[i] = step.norm().is_finite();
            }
        }
        if done.iter().all(|d| *d) {
            sort_roots(&mut z);
            return Ok(z);
        }
    }
    Err(Error::MaxIterations(ABERTH_MAX_SWEEPS))
}

/// Orders roots by real part, then imaginary part.
fn sort_roots(z: &mut [Complex64]) {
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// All roots of a monic polynomial given by ascending coefficients.
pub fn aberth_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let degree = check_monic(coeffs)?;
    let roots = aberth(degree, fujiwara_radius(coeffs), |z| eval_f64(coeffs, z))?;
    for &z in &roots {
        let e = eval_f64(coeffs, z);
        let scale: f64 = coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * z.norm() + c.abs());
        if e.p.norm() > 1e-10 * scale {
            return Err(Error::Residual {
                point: crate::error::fmt_point(z),
                residual: e.p.norm(),
                tolerance: 1e-10 * scale,
            });
        }
    }
    Ok(roots)
}

/// All `N + 2` zeros of the truncated pencil symbol from its expanded
/// polynomial, with the Aberth corrections evaluated in double-double.
pub fn polynomial_roots(p: &ModePencil) -> Result<Vec<Complex64>> {
    let dd = p.to_polynomial_dd()?;
    let rounded: Vec<f64> = dd.iter().map(|c| c.to_f64()).collect();
    let degree = check_monic(&rounded)?;
    aberth(degree, fujiwara_radius(&rounded), |z| eval_dd(&dd, z))
}

/// State `(u, u', w_1, ..., w_N)` of one mode and its system matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSystem {
    matrix: DMatrix<f64>,
    a: f64,
}

pub fn build_mode_system(p: &ModePencil) -> Result<ModeSystem> {
    if p.kernel().has_tail() {
        return Err(Error::ContinuumTail("mode system"));
    }
    let ladder = p.ladder();
    let n = ladder.len();
    if n > ODE_MAX {
        return Err(Error::InvalidParameter(format!(
            "ladder of {n} terms exceeds ode_max = {ODE_MAX}"
        )));
    }
    let dim = n + 2;
    let mut m = DMatrix::zeros(dim, dim);
    m[(0, 1)] = 1.0;
    m[(1, 0)] = -p.a() * p.a();
    for (k, (&c, &g)) in ladder.coeffs().iter().zip(ladder.rates()).enumerate() {
        m[(1, k + 2)] = p.coupling() * c;
        m[(k + 2, 0)] = 1.0;
        m[(k + 2, k + 2)] = -g;
    }
    Ok(ModeSystem {
        matrix: m,
        a: p.a(),
    })
}

impl ModeSystem {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = self.matrix.complex_eigenvalues().iter().copied().collect();
        sort_roots(&mut z);
        z
    }

    /// Ascending coefficients of `det(z I - M)` from the Hessenberg form of `M`.
    pub fn characteristic_polynomial(&self) -> Vec<f64> {
        let h = self.matrix.clone().hessenberg().h();
        let n = h.nrows();
        // polys[k] holds the characteristic polynomial of the leading k x k block.
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 1..=n {
            let prev = &polys[k - 1];
            let mut next = vec![0.0; k + 1];
            for (i, &c) in prev.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= h[(k - 1, k - 1)] * c;
            }
            let mut sub = 1.0;
            for i in (1..k).rev() {
                sub *= h[(i, i - 1)];
                let factor = h[(i - 1, k - 1)] * sub;
                for (j, &c) in polys[i - 1].iter().enumerate() {
                    next[j] -= factor * c;
                }
            }
            polys.push(next);
        }
        polys.pop().unwrap_or_default()
    }

    fn derivative(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.matrix.row(i);
            let mut s = 0.0;
            for j in 0..n {
                s += row[j] * x[j];
            }
            *o = s;
        }
    }
}

/// Late-time exponential rate fitted to a simulated mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    /// Fitted `d ln(envelope) / dt`.
    pub rate: f64,
    /// Envelope maxima used in the fit.
    pub peaks: usize,
    /// `false` when the late-time signal did not oscillate, so the fit used
    /// the raw envelope and reflects a real root rather than the pair.
    pub oscillatory: bool,
}

fn linear_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

const MIN_PEAKS: usize = 8;

/// Integrates the mode system with classical RK4 from `u = 1`, `u' = w = 0`
/// and fits the decay rate of `|u| + |u'| / a` over `[T/2, T]` from its local
/// maxima.
pub fn simulate_decay(p: &ModePencil, t_end: f64, dt: f64) -> Result<DecayEstimate> {
    let sys = build_mode_system(p)?;
    let limit = 0.05 / p.a().max(p.ladder().max_rate());
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::Simulation(format!(
            "step {dt:e} exceeds the stability margin {limit:e}"
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Simulation(format!("invalid horizon {t_end}")));
    }
    let steps = (t_end / dt).round() as usize;
    let dim = sys.dimension();
    let mut x = vec![0.0; dim];
    x[0] = 1.0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );

    let envelope = |x: &[f64]| x[0].abs() + x[1].abs() / sys.a;
    let window_start = steps / 2;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    let mut history = [0.0f64; 2];
    let mut rescale = 0.0f64;

    for step in 1..=steps {
        sys.derivative(&x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        sys.derivative(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        sys.derivative(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + dt * k3[i];
        }
        sys.derivative(&tmp, &mut k4);
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !norm.is_finite() {
            return Err(Error::Simulation(format!("state overflow at step {step}")));
        }
        // Keep the state in range; the log-scale offset is carried separately.
        if !(1e-200..=1e200).contains(&norm) {
            for v in x.iter_mut() {
                *v /= norm;
            }
            rescale += norm.ln();
        }
        let e = envelope(&x).ln() + rescale;
        if step >= window_start {
            let t = step as f64 * dt;
            samples.push((t, e));
            let (prev2, prev1) = (history[0], history[1]);
            if step >= window_start + 2 && prev1 > prev2 && prev1 >= e {
                peaks.push((t - dt, prev1));
            }
        }
        history = [history[1], e];
    }

    if peaks.len() >= MIN_PEAKS {
        Ok(DecayEstimate {
            rate: linear_slope(&peaks),
            peaks: peaks.len(),
            oscillatory: true,
        })
    } else if samples.len() >= 2 {
        Ok(DecayEstimate {
            rate: linear_slope(&samples),
            peaks: peaks.len(),
            oscillatory: false,
        })
    } else {
        Err(Error::Simulation("horizon too short for a fit".into()))
    }
}

/// Pairing of two root sets.
#[derive(Debug, Clone, PartialEq)]
pub struct RootMatching {
    /// `pairs[i] = j` pairs `a[i]` with `b[j]`.
    pub pairs: Vec<usize>,
    /// `max_i |a_i - b_pairs[i]| / max(1, |a_i|)`.
    pub max_deviation: f64,
    pub used_assignment: bool,
}

fn deviation(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(1.0)
}

/// Greedy nearest-neighbour pairing; falls back to an optimal assignment when
/// some root has a runner-up candidate within twice its nearest distance.
pub fn match_roots(a: &[Complex64], b: &[Complex64]) -> Result<RootMatching> {
    if a.len() != b.len() {
        return Err(Error::Cardinality(a.len(), b.len()));
    }
    let n = a.len();
    let mut ambiguous = false;
    let mut used = vec![false; n];
    let mut pairs = vec![0; n];
    for i in 0..n {
        let mut best: Option<(usize, f64)> = None;
        let mut runner_up = f64::INFINITY;
        for (j, &bj) in b.iter().enumerate() {
            let d = deviation(a[i], bj);
            match best {
                Some((_, bd)) if d >= bd => runner_up = runner_up.min(d),
                _ => {
                    if let Some((_, bd)) = best {
                        runner_up = runner_up.min(bd);
                    }
                    best = Some((j, d));
                }
            }
        }
        let (j, d) = best.expect("non-empty candidate set");
        if used[j] || runner_up <= 2.0 * d {
            ambiguous = true;
        }
        used[j] = true;
        pairs[i] = j;
    }
    if ambiguous {
        let cost: Vec<Vec<f64>> = a
            .iter()
            .map(|&x| b.iter().map(|&y| deviation(x, y)).collect())
            .collect();
        pairs = hungarian(&cost);
    }
    let max_deviation = pairs
        .iter()
        .enumerate()
        .map(|(i, &j)| deviation(a[i], b[j]))
        .fold(0.0, f64::max);
    Ok(RootMatching {
        pairs,
        max_deviation,
        used_assignment: ambiguous,
    })
}

/// Minimum-cost perfect assignment on a square matrix (Kuhn-Munkres with
/// potentials); returns the column assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
