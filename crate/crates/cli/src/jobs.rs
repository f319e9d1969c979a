//! The five jobs. Each mode is solved independently on a dedicated thread
//! pool; rows are assembled afterwards in mode order, so the output does not
//! depend on the number of threads.

use std::fmt::Write as _;

use gpspectra_core::{
    build_mode_system, classify_regime, count_zeros, empirical_order, interlacing_violation,
    ladder_contour, log_log_slope, match_roots, newton_refine, polynomial_roots,
    predict_finite_sum, predict_power_law, real_spectrum::f_roots, solve_mode, solve_pair,
    AsymptoticPrediction, Complex64, Error, ModePencil, OrderEstimate, Regime, SolverOptions,
    SpectrumResult,
};
use rayon::prelude::*;

use crate::config::{JobKind, Validated};
use crate::CliError;

/// Relative deviation allowed between the solver and an oracle.
pub const ORACLE_LIMIT: f64 = 1e-8;
/// Relative error allowed in the root sum.
pub const VIETA_SUM_LIMIT: f64 = 1e-12;
/// Relative error allowed in the root product.
pub const VIETA_PRODUCT_LIMIT: f64 = 1e-10;
/// Relative distance allowed between a conjugate-seeded refinement and `conj(lambda^+)`.
pub const CONJUGACY_LIMIT: f64 = 1e-10;
/// Residual tolerance used by `verify` to locate roots before grading them.
const RELAXED_RESIDUAL_TOL: f64 = 1e-6;

/// Rendered report and the number of failed checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobOutput {
    pub text: String,
    pub failures: usize,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(job: JobKind, cfg: &Validated) -> String {
    let mut s = format!("# gpspectra {}\n# job: {}\n", crate::VERSION, job.as_str());
    for line in cfg.effective_json().lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

fn pencil(cfg: &Validated, a: f64) -> gpspectra_core::Result<ModePencil> {
    ModePencil::new(a, cfg.raw.xi, cfg.kernel.memory_kernel()?)
}

/// Maps `f` over the modes on a pool of `threads` workers, keeping mode order.
fn per_mode<T, F>(cfg: &Validated, threads: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize, f64) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        cfg.modes
            .par_iter()
            .enumerate()
            .map(|(i, &a)| f(i + 1, a))
            .collect()
    }))
}

/// Collects per-mode results, reporting the first failing mode.
fn all_ok<T>(cfg: &Validated, results: Vec<gpspectra_core::Result<T>>) -> Result<Vec<T>, CliError> {
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|source| CliError::Numerical {
                n: i + 1,
                a: cfg.modes[i],
                source,
            })
        })
        .collect()
}

/// Runs `job` and renders its report.
pub fn run_job(job: JobKind, cfg: &Validated, threads: usize) -> Result<JobOutput, CliError> {
    let mut text = header(job, cfg);
    let failures = match job {
        JobKind::Spectrum => spectrum(cfg, threads, &mut text)?,
        JobKind::Verify => verify(cfg, threads, &mut text)?,
        JobKind::Sweep => sweep(cfg, threads, &mut text)?,
        JobKind::OracleCheck => oracle_check(cfg, threads, &mut text)?,
        JobKind::Asymptote => asymptote(cfg, threads, &mut text)?,
    };
    Ok(JobOutput { text, failures })
}

fn spectrum(cfg: &Validated, threads: usize, out: &mut String) -> Result<usize, CliError> {
    let opts = cfg.solver_options();
    let results = per_mode(cfg, threads, |_, a| solve_mode(&pencil(cfg, a)?, &opts))?;
    let results = all_ok(cfg, results)?;
    out.push_str("n,a_n,xi,kind,k,re,im,residual,interval_lo,interval_hi\n");
    let xi = num(cfg.raw.xi);
    for (i, s) in results.iter().enumerate() {
        let n = i + 1;
        let a = num(s.a);
        for b in &s.real {
            let _ = writeln!(
                out,
                "{n},{a},{xi},real_{k},{k},{},{},{},{},{}",
                num(b.value),
                num(0.0),
                num(b.residual),
                num(b.interval.0),
                num(b.interval.1),
                k = b.index,
            );
        }
        let plus = s.pair.plus();
        let _ = writeln!(
            out,
            "{n},{a},{xi},pair,0,{},{},{},,",
            num(plus.re),
            num(plus.im),
            num(s.pair_residual)
        );
    }
    Ok(0)
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq)]
struct Check {
    name: &'static str,
    status: Status,
    value: f64,
    limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

impl Check {
    fn graded(name: &'static str, pass: bool, value: f64, limit: f64) -> Self {
        let status = if pass { Status::Pass } else { Status::Fail };
        Self {
            name,
            status,
            value,
            limit,
        }
    }

    fn below(name: &'static str, value: f64, limit: f64) -> Self {
        Self::graded(name, value <= limit, value, limit)
    }

    fn skipped(name: &'static str, limit: f64) -> Self {
        Self {
            name,
            status: Status::Skipped,
            value: f64::NAN,
            limit,
        }
    }

    fn failed(name: &'static str, limit: f64) -> Self {
        Self {
            name,
            status: Status::Fail,
            value: f64::NAN,
            limit,
        }
    }
}

/// Errors that mean "this check does not apply", not "this check failed".
fn not_applicable(e: &Error) -> bool {
    matches!(e, Error::ContinuumTail(_) | Error::Overflow(_))
        || matches!(e, Error::InvalidParameter(m) if m.contains("poly_max"))
}

fn verify_mode(cfg: &Validated, a: f64) -> (Vec<Check>, Vec<String>) {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let tol = cfg.raw.tolerances.residual_tol;
    let p = match pencil(cfg, a) {
        Ok(p) => p,
        Err(e) => {
            notes.push(format!("pencil: {e}"));
            checks.push(Check::failed("pencil", 0.0));
            return (checks, notes);
        }
    };
    let s = p.kernel().s();
    checks.push(Check::graded("admissibility", s < 1.0, s, 1.0));

    let relaxed = SolverOptions {
        residual_tol: tol.max(RELAXED_RESIDUAL_TOL),
        ..cfg.solver_options()
    };
    let spec = match solve_mode(&p, &relaxed) {
        Ok(spec) => {
            checks.push(Check::graded("solve", true, 0.0, 0.0));
            spec
        }
        Err(e) => {
            notes.push(format!("solve: {e}"));
            checks.push(Check::failed("solve", 0.0));
            return (checks, notes);
        }
    };
    checks.push(Check::below("residual", normalized_residual(&spec), tol));
    checks.push(interlacing_check(&p, &spec, &relaxed, &mut notes));
    vieta_checks(&p, &spec, &mut checks, &mut notes);
    checks.push(conjugacy_check(&p, &spec, &relaxed, &mut notes));
    checks.push(contour_check(&p, &mut notes));
    checks.push(oracle_match_check(&p, &spec, &mut notes));
    (checks, notes)
}

/// Largest `|l(z)| / max(a^2, |z|^2)` over the computed roots.
fn normalized_residual(spec: &SpectrumResult) -> f64 {
    let a2 = spec.a * spec.a;
    let real = spec
        .real
        .iter()
        .map(|b| b.residual / a2.max(b.value * b.value));
    let pair = spec.pair_residual / a2.max(spec.pair.plus().norm_sqr());
    real.fold(pair, f64::max)
}

/// Smallest gap in `-gamma_k < mu_k < x_k < -gamma_(k-1)`, relative to the
/// interval width.
fn interlacing_check(
    p: &ModePencil,
    spec: &SpectrumResult,
    opts: &SolverOptions,
    notes: &mut Vec<String>,
) -> Check {
    let x = match f_roots(p, spec.real.len(), opts) {
        Ok(x) => x,
        Err(e) => {
            notes.push(format!("interlacing: {e}"));
            return Check::failed("interlacing", 0.0);
        }
    };
    let margin = spec
        .real
        .iter()
        .zip(&x)
        .map(|(m, f)| {
            let width = m.interval.1 - m.interval.0;
            m.offset.min(f.offset - m.offset).min(width - f.offset) / width
        })
        .fold(f64::INFINITY, f64::min);
    let pass = interlacing_violation(&spec.real, &x).is_none();
    Check::graded("interlacing", pass, margin, 0.0)
}

fn vieta_checks(
    p: &ModePencil,
    spec: &SpectrumResult,
    checks: &mut Vec<Check>,
    notes: &mut Vec<String>,
) {
    let coeffs = match p.to_polynomial() {
        Ok(c) => c,
        Err(e) if not_applicable(&e) => {
            checks.push(Check::skipped("vieta_sum", VIETA_SUM_LIMIT));
            checks.push(Check::skipped("vieta_product", VIETA_PRODUCT_LIMIT));
            return;
        }
        Err(e) => {
            notes.push(format!("vieta: {e}"));
            checks.push(Check::failed("vieta_sum", VIETA_SUM_LIMIT));
            checks.push(Check::failed("vieta_product", VIETA_PRODUCT_LIMIT));
            return;
        }
    };
    let degree = coeffs.len() - 1;
    let roots = spec.all_roots();
    let sum: Complex64 = roots.iter().sum();
    let expected_sum = -coeffs[degree - 1];
    let scale: f64 = roots.iter().map(|z| z.norm()).sum::<f64>().max(1.0);
    checks.push(Check::below(
        "vieta_sum",
        (sum - expected_sum).norm() / scale,
        VIETA_SUM_LIMIT,
    ));
    let product: Complex64 = roots.iter().product();
    let sign = if degree % 2 == 0 { 1.0 } else { -1.0 };
    let expected_product = sign * coeffs[0];
    let dev = (product - expected_product).norm() / expected_product.abs().max(f64::MIN_POSITIVE);
    checks.push(Check::below("vieta_product", dev, VIETA_PRODUCT_LIMIT));
}

/// Newton from `lambda^-` must land on `conj(lambda^+)`.
fn conjugacy_check(
    p: &ModePencil,
    spec: &SpectrumResult,
    opts: &SolverOptions,
    notes: &mut Vec<String>,
) -> Check {
    let plus = spec.pair.plus();
    match newton_refine(p, plus.conj(), opts) {
        Ok(z) => Check::below(
            "conjugacy",
            (z - plus.conj()).norm() / plus.norm(),
            CONJUGACY_LIMIT,
        ),
        Err(e) => {
            notes.push(format!("conjugacy: {e}"));
            Check::failed("conjugacy", CONJUGACY_LIMIT)
        }
    }
}

/// Zeros enclosed by the contour around the whole ladder must equal `N + 2`.
fn contour_check(p: &ModePencil, notes: &mut Vec<String>) -> Check {
    let expected = (p.ladder().len() + 2) as f64;
    let result = ladder_contour(p, p.ladder().len()).and_then(|c| count_zeros(p, &c));
    match result {
        Ok(cert) => {
            let found = cert.zeros_inferred as f64;
            Check::graded("contour_count", found == expected, found, expected)
        }
        Err(e) if not_applicable(&e) => Check::skipped("contour_count", expected),
        Err(e) => {
            notes.push(format!("contour_count: {e}"));
            Check::failed("contour_count", expected)
        }
    }
}

fn oracle_match_check(p: &ModePencil, spec: &SpectrumResult, notes: &mut Vec<String>) -> Check {
    match polynomial_roots(p).and_then(|oracle| match_roots(&spec.all_roots(), &oracle)) {
        Ok(m) => Check::below("oracle_match", m.max_deviation, ORACLE_LIMIT),
        Err(e) if not_applicable(&e) => Check::skipped("oracle_match", ORACLE_LIMIT),
        Err(e) => {
            notes.push(format!("oracle_match: {e}"));
            Check::failed("oracle_match", ORACLE_LIMIT)
        }
    }
}

fn verify(cfg: &Validated, threads: usize, out: &mut String) -> Result<usize, CliError> {
    let results = per_mode(cfg, threads, |_, a| verify_mode(cfg, a))?;
    out.push_str("check,n,a_n,status,value,limit\n");
    let mut failures = 0;
    for (i, (checks, notes)) in results.iter().enumerate() {
        let n = i + 1;
        let a = cfg.modes[i];
        for c in checks {
            if c.status == Status::Fail {
                failures += 1;
            }
            let _ = writeln!(
                out,
                "{},{n},{},{},{},{}",
                c.name,
                num(a),
                c.status.as_str(),
                num(c.value),
                num(c.limit)
            );
        }
        for note in notes {
            eprintln!("gpspectra: mode n={n} (a_n={a}): {note}");
        }
    }
    let _ = writeln!(out, "# summary failures={failures}");
    Ok(failures)
}

fn prediction(cfg: &Validated, a: f64) -> gpspectra_core::Result<(AsymptoticPrediction, Regime)> {
    let xi = cfg.raw.xi;
    match cfg.kernel.family() {
        Some(f) => Ok((predict_power_law(a, xi, f)?, classify_regime(xi, f.r()))),
        None => {
            let s1 = cfg.kernel.memory_kernel()?.s1();
            Ok((predict_finite_sum(a, xi, s1), classify_regime(xi, 1.0)))
        }
    }
}

fn fit_line(out: &mut String, name: &str, pairs: &[(f64, f64)]) {
    match empirical_order(pairs) {
        Ok(OrderEstimate::Fitted(f)) => {
            let _ = writeln!(
                out,
                "# fit {name} slope={} half_width={} points={}",
                num(f.slope),
                num(f.half_width),
                f.points
            );
        }
        Ok(OrderEstimate::BelowFloor) => {
            let _ = writeln!(out, "# fit {name} below_floor");
        }
        Err(e) => {
            let _ = writeln!(out, "# fit {name} unavailable: {e}");
        }
    }
}

/// Rows for one mode of a sweep: pair, prediction and regime.
struct SweepPoint {
    re: f64,
    im_shift: f64,
    prediction: AsymptoticPrediction,
    regime: Regime,
}

fn sweep_point(cfg: &Validated, a: f64) -> gpspectra_core::Result<SweepPoint> {
    let p = pencil(cfg, a)?;
    let pair = solve_pair(&p, &cfg.solver_options())?.refined.pair;
    let (prediction, regime) = prediction(cfg, a)?;
    Ok(SweepPoint {
        re: pair.re(),
        im_shift: pair.im_shift(),
        prediction,
        regime,
    })
}

fn sweep(cfg: &Validated, threads: usize, out: &mut String) -> Result<usize, CliError> {
    let probe: Vec<(f64, f64)> = cfg.modes.iter().map(|&a| (a, 1.0)).collect();
    empirical_order(&probe).map_err(|e| CliError::Config(format!("modes: sweep {e}")))?;
    let points = per_mode(cfg, threads, |_, a| sweep_point(cfg, a))?;
    let points = all_ok(cfg, points)?;
    out.push_str("n,a_n,re,im_shift,pred_re,pred_im_shift,err_re,err_im,regime_tag,regime\n");
    let mut err_re = Vec::new();
    let mut err_im = Vec::new();
    let mut abs_re = Vec::new();
    for (i, pt) in points.iter().enumerate() {
        let a = cfg.modes[i];
        let pred_re = pt.prediction.value.re;
        let pred_im_shift = pt.prediction.correction.im;
        let e_re = (pt.re - pred_re).abs();
        let e_im = (pt.im_shift - pred_im_shift).abs();
        err_re.push((a, e_re));
        err_im.push((a, e_im));
        abs_re.push((a, pt.re.abs()));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            num(a),
            num(pt.re),
            num(pt.im_shift),
            num(pred_re),
            num(pred_im_shift),
            num(e_re),
            num(e_im),
            pt.prediction.regime_tag,
            pt.regime
        );
    }
    fit_line(out, "re_error", &err_re);
    fit_line(out, "im_error", &err_im);
    match log_log_slope(&abs_re) {
        Ok(f) => {
            let _ = writeln!(
                out,
                "# fit abs_re slope={} half_width={} prefactor={}",
                num(f.slope),
                num(f.half_width),
                num(f.prefactor())
            );
        }
        Err(e) => {
            let _ = writeln!(out, "# fit abs_re unavailable: {e}");
        }
    }
    Ok(0)
}

/// Deviations of the solver roots from each oracle for one mode;
/// `None` marks an oracle that does not apply.
fn oracle_mode(
    cfg: &Validated,
    a: f64,
) -> gpspectra_core::Result<[(&'static str, Option<f64>); 2]> {
    let p = pencil(cfg, a)?;
    let roots = solve_mode(&p, &cfg.solver_options())?.all_roots();
    let deviation = |oracle: gpspectra_core::Result<Vec<Complex64>>| match oracle {
        Ok(o) => match_roots(&roots, &o).map(|m| Some(m.max_deviation)),
        Err(e) if not_applicable(&e) => Ok(None),
        Err(e) => Err(e),
    };
    let poly = deviation(polynomial_roots(&p))?;
    let eig = deviation(build_mode_system(&p).map(|s| s.eigenvalues()))?;
    Ok([("polynomial", poly), ("mode_system", eig)])
}

fn oracle_check(cfg: &Validated, threads: usize, out: &mut String) -> Result<usize, CliError> {
    let results = per_mode(cfg, threads, |_, a| oracle_mode(cfg, a))?;
    let results = all_ok(cfg, results)?;
    out.push_str("n,a_n,oracle,status,max_deviation,limit\n");
    let mut failures = 0;
    for (i, rows) in results.iter().enumerate() {
        for (name, dev) in rows {
            let (status, value) = match dev {
                Some(d) if *d <= ORACLE_LIMIT => (Status::Pass, *d),
                Some(d) => {
                    failures += 1;
                    (Status::Fail, *d)
                }
                None => (Status::Skipped, f64::NAN),
            };
            let _ = writeln!(
                out,
                "{},{},{name},{},{},{}",
                i + 1,
                num(cfg.modes[i]),
                status.as_str(),
                num(value),
                num(ORACLE_LIMIT)
            );
        }
    }
    let _ = writeln!(out, "# summary failures={failures}");
    Ok(failures)
}

fn asymptote(cfg: &Validated, threads: usize, out: &mut String) -> Result<usize, CliError> {
    let points = per_mode(cfg, threads, |_, a| sweep_point(cfg, a))?;
    let points = all_ok(cfg, points)?;
    out.push_str(
        "n,a_n,re,im_shift,pred_re,pred_im_shift,abs_error,remainder_order,imag_remainder_order,regime_tag,regime\n",
    );
    let mut errors = Vec::new();
    for (i, pt) in points.iter().enumerate() {
        let a = cfg.modes[i];
        let pred = &pt.prediction;
        let err = Complex64::new(pt.re - pred.value.re, pt.im_shift - pred.correction.im).norm();
        errors.push((a, err));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            num(a),
            num(pt.re),
            num(pt.im_shift),
            num(pred.value.re),
            num(pred.correction.im),
            num(err),
            num(pred.remainder_order),
            num(pred.imag_remainder_order),
            pred.regime_tag,
            pt.regime
        );
    }
    fit_line(out, "abs_error", &errors);
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const CUBIC: &str =
        r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]}, "xi": 0.5, "modes": [10]}"#;

    #[test]
    fn cubic_spectrum_rows() {
        let cfg = parse_config(CUBIC).unwrap();
        let out = run_job(JobKind::Spectrum, &cfg, 1).unwrap();
        let rows: Vec<&str> = out.text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 3);
        let real: Vec<&str> = rows[1].split(',').collect();
        assert_eq!(&real[3..5], &["real_1", "1"]);
        assert!((real[5].parse::<f64>().unwrap() + 1.9035).abs() < 1e-4);
        assert_eq!(real[8].parse::<f64>().unwrap(), -2.0);
        let pair: Vec<&str> = rows[2].split(',').collect();
        assert_eq!(pair[3], "pair");
        let re: f64 = pair[5].parse().unwrap();
        let im: f64 = pair[6].parse().unwrap();
        assert!((re + 0.048_251_7).abs() < 1e-6);
        assert!((im - 9.990_694_6).abs() < 1e-6);
        assert!(out.text.starts_with("# gpspectra "));
    }

    #[test]
    fn cubic_verify_passes() {
        let cfg = parse_config(CUBIC).unwrap();
        let out = run_job(JobKind::Verify, &cfg, 1).unwrap();
        assert_eq!(out.failures, 0, "{}", out.text);
        assert!(!out.text.contains(",fail,"));
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let cfg = parse_config(
            r#"{"ladder": {"coeffs": [1.0, 0.5], "rates": [2.0, 5.0]}, "xi": 0.5, "modes": [10, 30, 100, 300]}"#,
        )
        .unwrap();
        for job in [JobKind::Spectrum, JobKind::Verify, JobKind::OracleCheck] {
            let one = run_job(job, &cfg, 1).unwrap();
            let four = run_job(job, &cfg, 4).unwrap();
            assert_eq!(one, four);
        }
    }

    #[test]
    fn sweep_needs_two_decades() {
        let cfg = parse_config(
            r#"{"ladder": {"coeffs": [1.0], "rates": [2.0]}, "xi": 0.5, "modes": [10, 20, 40, 80]}"#,
        )
        .unwrap();
        assert!(matches!(
            run_job(JobKind::Sweep, &cfg, 1),
            Err(CliError::Config(_))
        ));
    }
}
