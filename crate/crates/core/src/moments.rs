//! Discrete and continuous second moments of `zeta` on the critical line, the
//! main terms and error envelope, and two side targets: the first discrete
//! moment along a vertical progression and the fourth moment to the right of
//! the critical line.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::divisor::{divisor_sieve, euler_gamma_f64};
use crate::error::{Error, Result};
use crate::mp::{bits_for_digits, PrecisionComplex, MIN_DIGITS};
use crate::quad::gauss_legendre;
use crate::report::CsvRow;
use crate::sum::KahanSum;
use crate::zeta::{motohashi_residual, zeta_f64, zeta_sq_critical_approx};

/// Largest `T` for the reference-mode discrete moment.
pub const REFERENCE_T_CAP: f64 = 1.0e4;
/// Largest `T` for the AFE-mode discrete moment.
pub const AFE_T_CAP: f64 = 1.0e5;
/// Largest `T` for the continuous moment.
pub const CONTINUOUS_T_CAP: f64 = 1.0e4;
/// Smallest `T` accepted by [`error_envelope`]; `log log log T > 0` needs `T > e^e`.
pub const ENVELOPE_T_FLOOR: f64 = 16.0;
/// Absolute error target per unit of `t` in the continuous moment.
pub const CONTINUOUS_TARGET: f64 = 1.0e-4;

/// How `|zeta(1/2 + in)|^2` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    /// Euler–Maclaurin evaluation of `zeta`.
    #[default]
    Reference,
    /// Approximate functional equation plus the divisor-problem residual;
    /// heights below `2 pi`, where the AFE sum is empty, use the reference.
    Afe,
}

impl std::str::FromStr for MomentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(MomentMode::Reference),
            "afe" => Ok(MomentMode::Afe),
            other => Err(Error::domain(format!(
                "mode must be reference or afe, got {other:?}"
            ))),
        }
    }
}

/// `T log(T/2pi)`.
pub fn main_term(t: f64) -> f64 {
    t * (t / TAU).ln()
}

/// `(2 gamma - 1) T`.
pub fn second_main_term(t: f64) -> f64 {
    (2.0 * euler_gamma_f64() - 1.0) * t
}

fn check_budget(what: &'static str, t: f64, cap: f64) -> Result<()> {
    if t > cap {
        return Err(Error::Resource {
            what,
            requested: t,
            cap,
        });
    }
    Ok(())
}

fn mode_cap(mode: MomentMode) -> f64 {
    match mode {
        MomentMode::Reference => REFERENCE_T_CAP,
        MomentMode::Afe => AFE_T_CAP,
    }
}

/// `|zeta(1/2 + in)|^2` for `n` in `start..=n_max`, in order.
pub fn discrete_terms(n_max: u64, mode: MomentMode, start: u64) -> Result<Vec<f64>> {
    check_budget("discrete_second_moment", n_max as f64, mode_cap(mode))?;
    let table = match mode {
        MomentMode::Afe => Some(divisor_sieve(((n_max as f64) / TAU).ceil() as u64 + 1)?),
        MomentMode::Reference => None,
    };
    (start..=n_max)
        .into_par_iter()
        .map(|n| {
            let t = n as f64;
            match (&table, mode) {
                (Some(tab), MomentMode::Afe) if t >= TAU => {
                    Ok(zeta_sq_critical_approx(t, tab)? + motohashi_residual(t, tab)?)
                }
                _ => Ok(zeta_f64(0.5, t)?.norm_sqr()),
            }
        })
        .collect()
}

/// `sum_{1 <= n <= T} |zeta(1/2 + in)|^2`.
pub fn discrete_second_moment(t: f64, mode: MomentMode) -> Result<f64> {
    discrete_second_moment_from(t, mode, 1)
}

/// As [`discrete_second_moment`] with the summation starting at `start`
/// (0 or 1).
pub fn discrete_second_moment_from(t: f64, mode: MomentMode, start: u64) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::domain(format!(
            "discrete moment needs T >= 1, got {t}"
        )));
    }
    if start > 1 {
        return Err(Error::domain("summation starts at n = 0 or n = 1"));
    }
    let terms = discrete_terms(t.floor() as u64, mode, start)?;
    Ok(terms.into_iter().collect::<KahanSum>().value())
}

fn zeta_sq(t: f64) -> f64 {
    zeta_f64(0.5, t).map(|z| z.norm_sqr()).unwrap_or(f64::NAN)
}

fn gl_panel(lo: f64, hi: f64) -> f64 {
    let (nodes, weights) = gauss_legendre();
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = KahanSum::new();
    for (x, w) in nodes.iter().zip(weights) {
        acc.add(w * zeta_sq(mid + half * x));
    }
    acc.value() * half
}

fn adaptive_panel(lo: f64, hi: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (lo + hi);
    let left = gl_panel(lo, mid);
    let right = gl_panel(mid, hi);
    if (left + right - whole).abs() <= tol || depth >= 10 {
        left + right
    } else {
        adaptive_panel(lo, mid, left, tol / 2.0, depth + 1)
            + adaptive_panel(mid, hi, right, tol / 2.0, depth + 1)
    }
}

/// Integrals of `|zeta(1/2+it)|^2` over `[j, j+1]` for `j < floor(t_max)` and
/// over the final partial interval, in order.
fn continuous_panels(t_max: f64) -> Vec<f64> {
    let whole = t_max.floor() as u64;
    let mut bounds: Vec<(f64, f64)> = (0..whole).map(|j| (j as f64, j as f64 + 1.0)).collect();
    if t_max > whole as f64 {
        bounds.push((whole as f64, t_max));
    }
    bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let coarse = gl_panel(lo, hi);
            adaptive_panel(lo, hi, coarse, CONTINUOUS_TARGET * (hi - lo), 0)
        })
        .collect()
}

/// `int_0^T |zeta(1/2+it)|^2 dt` on unit panels with Richardson refinement.
pub fn continuous_second_moment(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!(
            "continuous moment needs T >= 0, got {t}"
        )));
    }
    check_budget("continuous_second_moment", t, CONTINUOUS_T_CAP)?;
    let v = continuous_panels(t)
        .into_iter()
        .collect::<KahanSum>()
        .value();
    if !v.is_finite() {
        return Err(Error::domain(
            "continuous moment quadrature produced a non-finite value",
        ));
    }
    Ok(v)
}

/// `T log T exp(-C log log T / log log log T)`.
pub fn error_envelope(t: f64, c: f64) -> Result<f64> {
    if !(t >= ENVELOPE_T_FLOOR) {
        return Err(Error::domain(format!(
            "error envelope needs T >= {ENVELOPE_T_FLOOR}, got {t}"
        )));
    }
    if !(c >= 0.0) {
        return Err(Error::domain(format!(
            "envelope constant must be >= 0, got {c}"
        )));
    }
    let prec = bits_for_digits(30);
    let tt = Float::with_val(prec, t);
    let l1 = Float::with_val(prec, tt.ln_ref());
    let l2 = Float::with_val(prec, l1.ln_ref());
    let l3 = Float::with_val(prec, l2.ln_ref());
    let mut e = Float::with_val(prec, &l2 / &l3) * (-c);
    e.exp_mut();
    Ok((tt * l1 * e).to_f64())
}

/// `(1/N) sum_{0 <= n < N} zeta(s0 + i n delta)`.
pub fn first_discrete_moment(
    s0: &PrecisionComplex,
    delta: f64,
    n: u64,
) -> Result<PrecisionComplex> {
    let sigma = s0.re().to_f64();
    let t0 = s0.im().to_f64();
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::domain(format!(
            "first moment needs 0 < Re s0 < 1, got {sigma}"
        )));
    }
    if !(delta > 0.0) || n == 0 {
        return Err(Error::domain("first moment needs delta > 0 and N >= 1"));
    }
    let top = t0 + delta * (n - 1) as f64;
    check_budget(
        "first_discrete_moment height",
        top.abs(),
        crate::zeta::ZETA_T_CAP,
    )?;
    let terms: Vec<Result<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| zeta_f64(sigma, t0 + delta * j as f64))
        .collect();
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for z in terms {
        let z = z?;
        re.add(z.re);
        im.add(z.im);
    }
    let nf = n as f64;
    Ok(PrecisionComplex::from_f64(
        re.value() / nf,
        im.value() / nf,
        MIN_DIGITS,
    ))
}

/// Limit of [`first_discrete_moment`]: `(1 - l^{-s0})^{-1}` when
/// `delta = 2 pi q / log l` for an integer `l >= 2`, otherwise 1. Only the
/// resonance with `q = 1` is recognised here.
pub fn first_moment_limit(s0: Complex64, delta: f64) -> Complex64 {
    let l = (TAU / delta).exp();
    let lr = l.round();
    if lr >= 2.0 && (l - lr).abs() < 1e-9 * lr {
        Complex64::new(1.0, 0.0) / (1.0 - Complex64::new(lr, 0.0).powc(-s0))
    } else {
        Complex64::new(1.0, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourthMoment {
    pub sigma: f64,
    pub d: f64,
    pub t: u64,
    pub empirical: f64,
    /// `T sum_m d(m)^2 m^{-2 sigma} = T zeta(2 sigma)^4 / zeta(4 sigma)`.
    pub predicted: f64,
    /// `(M, T sum_{m <= M} d(m)^2 m^{-2 sigma})` when a truncation point
    /// with relative tail below `1e-6` exists under the sieve cap.
    pub truncated: Option<(u64, f64)>,
}

/// Largest truncation point tried for the direct divisor-square sum.
const FOURTH_M_CAP: u64 = 1 << 22;

/// `sum_{0 <= n < T} |zeta(sigma + i n d)|^4` against `T sum d(m)^2 / m^{2 sigma}`.
pub fn fourth_moment_check(sigma: f64, d: f64, t: u64) -> Result<FourthMoment> {
    if !(sigma > 0.55) {
        return Err(Error::domain(format!(
            "fourth moment tail control needs sigma > 0.55, got {sigma}"
        )));
    }
    if !(d > 0.0) || t == 0 {
        return Err(Error::domain("fourth moment needs d > 0 and T >= 1"));
    }
    check_budget(
        "fourth_moment_check height",
        d * t as f64,
        crate::zeta::ZETA_T_CAP,
    )?;
    let terms: Vec<Result<f64>> = (0..t)
        .into_par_iter()
        .map(|n| zeta_f64(sigma, d * n as f64).map(|z| z.norm_sqr().powi(2)))
        .collect();
    let mut acc = KahanSum::new();
    for v in terms {
        acc.add(v?);
    }
    let z2 = zeta_f64(2.0 * sigma, 0.0)?.re;
    let z4 = zeta_f64(4.0 * sigma, 0.0)?.re;
    let series = z2.powi(4) / z4;
    Ok(FourthMoment {
        sigma,
        d,
        t,
        empirical: acc.value(),
        predicted: t as f64 * series,
        truncated: truncated_divisor_square_sum(sigma)?.map(|(m, v)| (m, v * t as f64)),
    })
}

/// `sum_{m <= M} d(m)^2 m^{-2 sigma}` with `M` the first power of two whose
/// integral tail estimate `int_M^inf log^3 x / pi^2 x^{-2 sigma} dx` is below
/// `1e-6` of the partial sum.
fn truncated_divisor_square_sum(sigma: f64) -> Result<Option<(u64, f64)>> {
    let s = 2.0 * sigma;
    let tail = |m: f64| {
        // log^3 x x^{-s}, integrated from M with the logarithm frozen at
        // a slightly enlarged value
        let l = m.ln() + 3.0 / (s - 1.0);
        l.powi(3) / (PI * PI) * m.powf(1.0 - s) / (s - 1.0)
    };
    let mut m = 1024u64;
    while m <= FOURTH_M_CAP {
        if tail(m as f64) < 1e-6 {
            let table = divisor_sieve(m)?;
            let v = (1..=m)
                .map(|j| f64::from(table.d(j)).powi(2) * (j as f64).powf(-s))
                .collect::<KahanSum>()
                .value();
            return Ok(Some((m, v)));
        }
        m *= 2;
    }
    Ok(None)
}

/// One row of a moment report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub discrete: f64,
    pub continuous: Option<f64>,
    pub main1: f64,
    pub main2: f64,
    pub envelope: Option<f64>,
    pub residual_discrete: f64,
    pub residual_continuous: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl CsvRow for MomentRow {
    fn header() -> &'static [&'static str] {
        &[
            "T",
            "discrete",
            "continuous",
            "main1",
            "main2",
            "envelope",
            "residual_discrete",
            "residual_continuous",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.t.to_string(),
            self.discrete.to_string(),
            opt(self.continuous),
            self.main1.to_string(),
            self.main2.to_string(),
            opt(self.envelope),
            self.residual_discrete.to_string(),
            opt(self.residual_continuous),
        ]
    }
}

/// Re-addition of the discrete moment over `(T/2^{j+1}, T/2^j]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DyadicCheck {
    pub t: f64,
    pub blocks: Vec<f64>,
    pub total: f64,
    pub reassembled: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub mode: MomentMode,
    pub start: u64,
    pub c_fit: f64,
    pub rows: Vec<MomentRow>,
    pub dyadic: Vec<DyadicCheck>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportOptions {
    pub mode: MomentMode,
    /// First summation index, 0 or 1.
    pub start: u64,
    pub continuous: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            mode: MomentMode::Afe,
            start: 1,
            continuous: true,
        }
    }
}

/// Moment report over an ascending grid, with the dyadic re-assembly check.
pub fn build_report(grid: &[f64], c_fit: f64) -> Result<MomentReport> {
    build_report_with(grid, c_fit, ReportOptions::default())
}

pub fn build_report_with(grid: &[f64], c_fit: f64, opts: ReportOptions) -> Result<MomentReport> {
    if grid.iter().any(|t| !(*t >= 1.0)) {
        return Err(Error::domain("grid values must be >= 1"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("grid must be sorted ascending"));
    }
    if opts.start > 1 {
        return Err(Error::domain("summation starts at n = 0 or n = 1"));
    }
    let t_max = grid.last().copied().unwrap_or(0.0);
    let n_max = t_max.floor() as u64;
    let terms = if grid.is_empty() {
        Vec::new()
    } else {
        discrete_terms(n_max, opts.mode, opts.start)?
    };
    // prefix[i] = sum of the first i terms
    let mut prefix = Vec::with_capacity(terms.len() + 1);
    let mut acc = KahanSum::new();
    prefix.push(0.0);
    for v in &terms {
        acc.add(*v);
        prefix.push(acc.value());
    }
    let upto = |n: u64| -> f64 {
        if n < opts.start {
            0.0
        } else {
            prefix[(n - opts.start + 1) as usize]
        }
    };
    let block = |lo: u64, hi: u64| -> f64 {
        // sum over lo < n <= hi, directly from the terms
        let first = (lo + 1).max(opts.start);
        if hi < first {
            return 0.0;
        }
        let a = (first - opts.start) as usize;
        let b = (hi - opts.start) as usize;
        terms[a..=b].iter().copied().collect::<KahanSum>().value()
    };

    let continuous_cum = if opts.continuous && !grid.is_empty() {
        check_budget("continuous_second_moment", t_max, CONTINUOUS_T_CAP)?;
        Some(continuous_prefix(grid)?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(grid.len());
    let mut dyadic = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let n = t.floor() as u64;
        let discrete = upto(n);
        let main1 = main_term(t);
        let main2 = second_main_term(t);
        let continuous = continuous_cum.as_ref().map(|c| c[i]);
        let envelope = if t >= ENVELOPE_T_FLOOR {
            Some(error_envelope(t, c_fit)?)
        } else {
            None
        };
        rows.push(MomentRow {
            t,
            discrete,
            continuous,
            main1,
            main2,
            envelope,
            residual_discrete: discrete - main1,
            residual_continuous: continuous.map(|c| c - main1 - main2),
        });

        let mut blocks = Vec::new();
        let mut j = 0u32;
        loop {
            let hi = (t / 2f64.powi(j as i32)).floor() as u64;
            let lo = (t / 2f64.powi(j as i32 + 1)).floor() as u64;
            if hi < 1 {
                break;
            }
            blocks.push(block(lo, hi));
            j += 1;
        }
        if opts.start == 0 {
            blocks.push(terms.first().copied().unwrap_or(0.0));
        }
        let reassembled = blocks.iter().copied().collect::<KahanSum>().value();
        let relative_error = if discrete == 0.0 {
            reassembled.abs()
        } else {
            ((reassembled - discrete) / discrete).abs()
        };
        dyadic.push(DyadicCheck {
            t,
            blocks,
            total: discrete,
            reassembled,
            relative_error,
        });
    }
    Ok(MomentReport {
        mode: opts.mode,
        start: opts.start,
        c_fit,
        rows,
        dyadic,
    })
}

/// Continuous moment at every grid point from one pass of unit panels.
fn continuous_prefix(grid: &[f64]) -> Result<Vec<f64>> {
    let t_max = *grid.last().expect("nonempty grid");
    let whole = t_max.floor() as u64;
    let unit: Vec<f64> = continuous_panels(whole as f64);
    let mut cum = Vec::with_capacity(unit.len() + 1);
    let mut acc = KahanSum::new();
    cum.push(0.0);
    for v in &unit {
        acc.add(*v);
        cum.push(acc.value());
    }
    grid.iter()
        .map(|&t| {
            let j = t.floor() as u64;
            let mut v = cum[j as usize];
            if t > j as f64 {
                let coarse = gl_panel(j as f64, t);
                v += adaptive_panel(j as f64, t, coarse, CONTINUOUS_TARGET * (t - j as f64), 0);
            }
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::domain(
                    "continuous moment quadrature produced a non-finite value",
                ))
            }
        })
        .collect()
}

impl MomentReport {
    pub fn max_dyadic_error(&self) -> f64 {
        self.dyadic
            .iter()
            .map(|d| d.relative_error)
            .fold(0.0, f64::max)
    }
}
