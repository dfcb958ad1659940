//! The phases `f(x) = (x/2pi) log(x/(2 pi e m))`, `g_k(x) = f(x) - kx`, their
//! oscillatory integrals, the saddle-point and derivative-test estimates, the
//! truncated Poisson exchange, and the S1/S2 pieces of the second moment.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::dd::cis_turns;
use crate::divisor::DivisorTable;
use crate::error::{Error, Result};
use crate::expsum::{resonant_frequency, resonant_required_digits, RESONANT_DIGITS_CAP};
use crate::mp::{bits_for_digits, two_pi, PrecisionComplex, MIN_DIGITS};
use crate::quad::{integrate, Phase, QuadResult};
use crate::report::CsvRow;
use crate::sum::{par_sum_complex, ComplexSum};

/// Largest right endpoint accepted by [`oscillatory_integral`].
pub const QUAD_B_CAP: f64 = 1.0e7;
/// Default absolute error target of the quadrature.
pub const QUAD_TARGET: f64 = 1.0e-8;
/// Largest `T` accepted by [`s1_contributions`] and [`s2_main`].
pub const S_T_CAP: f64 = 3.0e4;
/// Default shift of the Poisson `k`-window.
pub const DEFAULT_THETA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OscillatorSpec {
    pub m: u64,
    pub k: u32,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

impl OscillatorSpec {
    pub fn new(m: u64, k: u32, a: f64, b: f64) -> Self {
        OscillatorSpec {
            m,
            k,
            a,
            b,
            theta: DEFAULT_THETA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::domain("oscillator needs m >= 1"));
        }
        if !(self.a > 0.0 && self.a <= self.b && self.b.is_finite()) {
            return Err(Error::domain(format!(
                "oscillator needs 0 < a <= b, got [{}, {}]",
                self.a, self.b
            )));
        }
        if !(self.theta > 0.0 && self.theta <= 0.1) {
            return Err(Error::domain(format!(
                "theta must lie in (0, 0.1], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// `2 pi m e^{2 pi k}`, where `g_k' = 0`.
    pub fn saddle(&self) -> f64 {
        TAU * self.m as f64 * (TAU * f64::from(self.k)).exp()
    }

    fn kernel(&self) -> GPhase {
        GPhase::new(self.m, self.k)
    }
}

/// `g_k` in turns, evaluated in double precision.
#[derive(Clone, Copy, Debug)]
struct GPhase {
    ln_2pi_m: f64,
    k: f64,
}

impl GPhase {
    fn new(m: u64, k: u32) -> Self {
        GPhase {
            ln_2pi_m: (TAU * m as f64).ln(),
            k: f64::from(k),
        }
    }
}

impl Phase for GPhase {
    #[inline]
    fn value(&self, x: f64) -> f64 {
        x * ((x.ln() - self.ln_2pi_m - 1.0) / TAU - self.k)
    }

    #[inline]
    fn slope(&self, x: f64) -> f64 {
        (x.ln() - self.ln_2pi_m) / TAU - self.k
    }

    fn curvature_bound(&self, x: f64, _h: f64) -> f64 {
        1.0 / (TAU * x)
    }

    fn rounding_scale(&self, x: f64) -> f64 {
        x * ((x.ln().abs() + self.ln_2pi_m.abs() + 1.0) / TAU + self.k)
    }
}

/// `(f(x), g_k(x))` computed in MPFR at `digits` and rounded.
pub fn phase_eval(spec: &OscillatorSpec, x: f64) -> Result<(f64, f64)> {
    let digits = 30;
    let prec = bits_for_digits(digits);
    let xf = Float::with_val(prec, x);
    let (f, g) = phase_eval_mp(spec, &xf)?;
    Ok((f.to_f64(), g.to_f64()))
}

/// `(f(x), g_k(x))` at the precision of `x`.
pub fn phase_eval_mp(spec: &OscillatorSpec, x: &Float) -> Result<(Float, Float)> {
    if !(x.is_finite() && *x > 0) {
        return Err(Error::domain("phase needs x > 0"));
    }
    let prec = x.prec();
    let two_pi_m = two_pi(prec) * spec.m;
    let mut l = Float::with_val(prec, x / &two_pi_m);
    l.ln_mut();
    l -= 1u32;
    let f = Float::with_val(prec, x * &l) / two_pi(prec);
    let g = Float::with_val(prec, &f - Float::with_val(prec, x * spec.k));
    Ok((f, g))
}

/// `g_k'(x) = (1/2pi) log(x / 2 pi m) - k` at the precision of `x`.
pub fn phase_derivative_mp(spec: &OscillatorSpec, x: &Float) -> Float {
    let prec = x.prec();
    let two_pi_m = two_pi(prec) * spec.m;
    let mut l = Float::with_val(prec, x / &two_pi_m);
    l.ln_mut();
    l / two_pi(prec) - spec.k
}

/// `2 pi m e^{2 pi k}` at `digits`.
pub fn saddle_location_mp(m: u64, k: u32, digits: u32) -> Float {
    let prec = bits_for_digits(digits);
    let mut e = two_pi(prec) * k;
    e.exp_mut();
    e * two_pi(prec) * m
}

fn check_cap(b: f64) -> Result<()> {
    if b > QUAD_B_CAP {
        return Err(Error::Resource {
            what: "oscillatory quadrature endpoint",
            requested: b,
            cap: QUAD_B_CAP,
        });
    }
    Ok(())
}

/// `int_a^b e(g_k(x)) dx` to absolute accuracy [`QUAD_TARGET`].
pub fn oscillatory_integral(spec: &OscillatorSpec) -> Result<PrecisionComplex> {
    oscillatory_integral_with(spec, QUAD_TARGET)
        .map(|r| PrecisionComplex::from_c64(r.value, MIN_DIGITS))
}

pub fn oscillatory_integral_with(spec: &OscillatorSpec, target: f64) -> Result<QuadResult> {
    spec.validate()?;
    check_cap(spec.b)?;
    if !(target > 0.0) {
        return Err(Error::domain("quadrature target must be positive"));
    }
    Ok(integrate(&spec.kernel(), spec.a, spec.b, target))
}

fn integral_c64(m: u64, k: u32, a: f64, b: f64) -> Complex64 {
    integrate(&GPhase::new(m, k), a, b, QUAD_TARGET).value
}

/// `e^{pi i/4} e(-m e^{2 pi k}) 2 pi e^{pi k} sqrt(m)`.
pub fn saddle_point_value(m: u64, k: u32) -> Result<PrecisionComplex> {
    let digits = resonant_required_digits(k, m as f64);
    saddle_point_value_with(m, k, digits)
}

pub fn saddle_point_value_with(m: u64, k: u32, digits: u32) -> Result<PrecisionComplex> {
    if m == 0 {
        return Err(Error::domain("saddle value needs m >= 1"));
    }
    let required = resonant_required_digits(k, m as f64);
    if digits < required || required > RESONANT_DIGITS_CAP {
        return Err(Error::Precision {
            what: "saddle_point_value phase",
            required,
            available: digits.min(RESONANT_DIGITS_CAP),
        });
    }
    let beta = resonant_frequency(k, digits);
    let turns = 0.125 - beta.mul_frac(m as f64);
    let modulus = TAU * (PI * f64::from(k)).exp() * (m as f64).sqrt();
    Ok(PrecisionComplex::from_c64(
        cis_turns(turns) * modulus,
        digits,
    ))
}

/// `e^{pi i/4} pi sqrt(m)`, the half-saddle value of `int_{2 pi m}^{2T} e(f)`.
pub fn endpoint_saddle_value(m: u64) -> Complex64 {
    Complex64::from_polar(PI * (m as f64).sqrt(), PI / 4.0)
}

/// `5 (T/(2T - x0) + T/(x0 - T) + 1)` style error scale of the interior saddle.
pub fn saddle_error_scale(t: f64, x0: f64) -> f64 {
    t / (2.0 * t - x0) + t / (x0 - t) + 1.0
}

/// Error scale `T/(2T - 2 pi m) + 1` of the endpoint saddle.
pub fn endpoint_error_scale(t: f64, m: u64) -> f64 {
    t / (2.0 * t - TAU * m as f64) + 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivativeBounds {
    /// `8 pi / |log(endpoint / x0)|`; `None` when the saddle lies in `[a, b]`.
    pub first: Option<f64>,
    /// `16 sqrt(pi T)`.
    pub second: f64,
    pub actual: f64,
}

/// Both derivative-test bounds for `int_a^b e(g_k)` and the quadrature value.
pub fn derivative_test_bounds(spec: &OscillatorSpec, t: f64) -> Result<DerivativeBounds> {
    let r = oscillatory_integral_with(spec, QUAD_TARGET)?;
    let x0 = spec.saddle();
    let first = if x0 < spec.a {
        Some(8.0 * PI / (spec.a / x0).ln())
    } else if x0 > spec.b {
        Some(8.0 * PI / (x0 / spec.b).ln())
    } else {
        None
    };
    Ok(DerivativeBounds {
        first,
        second: 16.0 * (PI * t).sqrt(),
        actual: r.value.norm(),
    })
}

/// Integers `k` in the open window `((1/2pi) log(T/2 pi m) - theta, (1/2pi) log(T/pi m) + theta)`.
pub fn poisson_k_window(m: u64, t: f64, theta: f64) -> Vec<u32> {
    let mf = m as f64;
    let lo = (t / (TAU * mf)).ln() / TAU - theta;
    let hi = (t / (PI * mf)).ln() / TAU + theta;
    let first = (lo.floor() + 1.0).max(0.0) as i64;
    (first..)
        .take_while(|&k| (k as f64) < hi)
        .map(|k| k as u32)
        .collect()
}

/// `sum_{T < n <= 2T} e(f(n))` for one `m`.
pub fn direct_exp_sum(m: u64, t: f64) -> Complex64 {
    let phase = GPhase::new(m, 0);
    let lo = t.floor() as u64 + 1;
    let hi = (2.0 * t).floor() as u64;
    if hi < lo {
        return Complex64::new(0.0, 0.0);
    }
    par_sum_complex(lo..hi + 1, |n| cis_turns(phase.value(n as f64)))
}

/// Breakdown of one truncated Poisson exchange.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonDefect {
    pub m: u64,
    pub t: f64,
    pub theta: f64,
    pub ks: Vec<u32>,
    pub direct: [f64; 2],
    pub integrals: [f64; 2],
    pub defect: f64,
}

/// `|sum_{T<n<=2T} e(f(n)) - sum_k int_T^{2T} e(g_k)|` over the `theta` window.
pub fn truncated_poisson_defect(m: u64, t: f64, theta: f64) -> Result<f64> {
    truncated_poisson(m, t, theta).map(|d| d.defect)
}

pub fn truncated_poisson(m: u64, t: f64, theta: f64) -> Result<PoissonDefect> {
    if !(t >= 10.0) {
        return Err(Error::domain(format!(
            "Poisson exchange needs T >= 10, got {t}"
        )));
    }
    if m == 0 || m as f64 > t / PI {
        return Err(Error::domain(format!(
            "Poisson exchange needs 1 <= m <= T/pi, got m={m}"
        )));
    }
    if !(theta > 0.0 && theta <= 0.1) {
        return Err(Error::domain(format!(
            "theta must lie in (0, 0.1], got {theta}"
        )));
    }
    check_cap(2.0 * t)?;
    let direct = direct_exp_sum(m, t);
    let ks = poisson_k_window(m, t, theta);
    let mut acc = ComplexSum::new();
    for &k in &ks {
        acc.add(integral_c64(m, k, t, 2.0 * t));
    }
    let integrals = acc.value();
    Ok(PoissonDefect {
        m,
        t,
        theta,
        ks,
        direct: [direct.re, direct.im],
        integrals: [integrals.re, integrals.im],
        defect: (direct - integrals).norm(),
    })
}

/// The five `m`-intervals of the S1 decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum S1Case {
    I,
    II,
    III,
    IV,
    V,
}

impl S1Case {
    pub const ALL: [S1Case; 5] = [S1Case::I, S1Case::II, S1Case::III, S1Case::IV, S1Case::V];

    pub fn label(self) -> &'static str {
        match self {
            S1Case::I => "i",
            S1Case::II => "ii",
            S1Case::III => "iii",
            S1Case::IV => "iv",
            S1Case::V => "v",
        }
    }

    /// Case of `m` for `c = (T/2pi) e^{-2 pi k}`; first match wins.
    pub fn classify(m: f64, c: f64, theta: f64) -> Option<S1Case> {
        let w = (TAU * theta).exp();
        if m > c / w && m <= c - 1.0 {
            Some(S1Case::I)
        } else if m > c - 1.0 && m < c + 1.0 {
            Some(S1Case::II)
        } else if m >= c + 1.0 && m <= 2.0 * c - 1.0 {
            Some(S1Case::III)
        } else if m > 2.0 * c - 1.0 && m < 2.0 * c + 1.0 {
            Some(S1Case::IV)
        } else if m >= 2.0 * c + 1.0 && m < 2.0 * c * w {
            Some(S1Case::V)
        } else {
            None
        }
    }
}

/// Aggregate over one `(case, k)` cell of the S1 decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct S1Row {
    pub case: S1Case,
    pub k: u32,
    pub m_lo: u64,
    pub m_hi: u64,
    pub count: u64,
    pub re: f64,
    pub im: f64,
    /// Derivative-test bound (i, ii, iv, v) or saddle error scale (iii),
    /// weighted by `d(m) m^{-1/2}`.
    pub bound: f64,
    /// Weighted `|integral|` (i, ii, iv, v) or `|integral - closed form|` (iii).
    pub actual: f64,
}

impl CsvRow for S1Row {
    fn header() -> &'static [&'static str] {
        &[
            "case", "k", "m_lo", "m_hi", "count", "re", "im", "bound", "actual",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.case.label().to_string(),
            self.k.to_string(),
            self.m_lo.to_string(),
            self.m_hi.to_string(),
            self.count.to_string(),
            self.re.to_string(),
            self.im.to_string(),
            self.bound.to_string(),
            self.actual.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct S1Report {
    pub t: f64,
    pub theta: f64,
    pub rows: Vec<S1Row>,
    /// Per-case totals in the order i..v.
    pub case_totals: [[f64; 2]; 5],
    pub total: [f64; 2],
    /// `sum_{m <= T/2pi} d(m) m^{-1/2} sum_{T<n<=2T} e(f(n))`, the sum the
    /// decomposition approximates.
    pub direct: [f64; 2],
}

impl S1Report {
    pub fn total_c64(&self) -> Complex64 {
        Complex64::new(self.total[0], self.total[1])
    }

    pub fn case_total(&self, case: S1Case) -> Complex64 {
        let v = self.case_totals[case as usize];
        Complex64::new(v[0], v[1])
    }

    pub fn direct_c64(&self) -> Complex64 {
        Complex64::new(self.direct[0], self.direct[1])
    }
}

fn check_t(what: &'static str, t: f64, table: &DivisorTable) -> Result<()> {
    if !(t >= 10.0) {
        return Err(Error::domain(format!("{what} needs T >= 10, got {t}")));
    }
    if t > S_T_CAP {
        return Err(Error::Resource {
            what,
            requested: t,
            cap: S_T_CAP,
        });
    }
    table.check_range(what, t / PI)
}

struct Cell {
    case: S1Case,
    k: u32,
    m: u64,
}

/// S1 split into the five `m`-intervals for every `k` in the Poisson range.
pub fn s1_contributions(t: f64, theta: f64, table: &DivisorTable) -> Result<S1Report> {
    check_t("s1_contributions", t, table)?;
    if !(theta > 0.0 && theta <= 0.1) {
        return Err(Error::domain(format!(
            "theta must lie in (0, 0.1], got {theta}"
        )));
    }
    let m_max = (t / TAU).floor() as u64;
    let k_max = ((t / PI).ln() / TAU + theta).floor() as u32;
    let mut cells = Vec::new();
    for k in 0..=k_max {
        let c = t / TAU * (-TAU * f64::from(k)).exp();
        let upper = ((2.0 * c * (TAU * theta).exp()).ceil() as u64).min(m_max);
        for m in 1..=upper {
            if let Some(case) = S1Case::classify(m as f64, c, theta) {
                cells.push(Cell { case, k, m });
            }
        }
    }
    struct Eval {
        value: Complex64,
        bound: f64,
        actual: f64,
    }
    let evals: Vec<Result<Eval>> = cells
        .par_iter()
        .map(|cell| {
            let weight = f64::from(table.d(cell.m)) / (cell.m as f64).sqrt();
            let quad = integral_c64(cell.m, cell.k, t, 2.0 * t);
            let x0 = TAU * cell.m as f64 * (TAU * f64::from(cell.k)).exp();
            let (value, bound, actual) = match cell.case {
                S1Case::III => {
                    let closed = saddle_point_value(cell.m, cell.k)?.to_c64();
                    (closed, saddle_error_scale(t, x0), (quad - closed).norm())
                }
                S1Case::I => (quad, 8.0 * PI / (t / x0).ln(), quad.norm()),
                S1Case::V => (quad, 8.0 * PI / (x0 / (2.0 * t)).ln(), quad.norm()),
                S1Case::II | S1Case::IV => (quad, 16.0 * (PI * t).sqrt(), quad.norm()),
            };
            Ok(Eval {
                value: value * weight,
                bound: bound * weight,
                actual: actual * weight,
            })
        })
        .collect();

    let mut rows: Vec<S1Row> = Vec::new();
    let mut case_sums: Vec<ComplexSum> = (0..5).map(|_| ComplexSum::new()).collect();
    let mut total = ComplexSum::new();
    for (cell, eval) in cells.iter().zip(evals) {
        let eval = eval?;
        case_sums[cell.case as usize].add(eval.value);
        total.add(eval.value);
        match rows.last_mut() {
            Some(r) if r.case == cell.case && r.k == cell.k => {
                r.m_hi = cell.m;
                r.count += 1;
                r.re += eval.value.re;
                r.im += eval.value.im;
                r.bound += eval.bound;
                r.actual += eval.actual;
            }
            _ => rows.push(S1Row {
                case: cell.case,
                k: cell.k,
                m_lo: cell.m,
                m_hi: cell.m,
                count: 1,
                re: eval.value.re,
                im: eval.value.im,
                bound: eval.bound,
                actual: eval.actual,
            }),
        }
    }
    rows.sort_by_key(|r| (r.case, r.k));

    let direct_terms: Vec<Complex64> = (1..=m_max)
        .into_par_iter()
        .map(|m| direct_exp_sum(m, t) * (f64::from(table.d(m)) / (m as f64).sqrt()))
        .collect();
    let direct: ComplexSum = {
        let mut acc = ComplexSum::new();
        for z in direct_terms {
            acc.add(z);
        }
        acc
    };
    let mut case_totals = [[0.0; 2]; 5];
    for (slot, s) in case_totals.iter_mut().zip(&case_sums) {
        let v = s.value();
        *slot = [v.re, v.im];
    }
    let tv = total.value();
    let dv = direct.value();
    Ok(S1Report {
        t,
        theta,
        rows,
        case_totals,
        total: [tv.re, tv.im],
        direct: [dv.re, dv.im],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct S2Report {
    pub t: f64,
    pub computed: [f64; 2],
    pub predicted: [f64; 2],
    /// `sum_{T/2pi < m <= T/pi} d(m)`.
    pub divisor_count: u64,
    /// Largest `|int - e^{pi i/4} pi sqrt(m)| / (T/(2T - 2 pi m) + 1)` over `m`.
    pub endpoint_ratio_max: f64,
}

/// `(computed, predicted)` for the S2 main term.
pub fn s2_main(t: f64, table: &DivisorTable) -> Result<(PrecisionComplex, PrecisionComplex)> {
    let r = s2_report(t, table)?;
    Ok((
        PrecisionComplex::from_f64(r.computed[0], r.computed[1], MIN_DIGITS),
        PrecisionComplex::from_f64(r.predicted[0], r.predicted[1], MIN_DIGITS),
    ))
}

pub fn s2_report(t: f64, table: &DivisorTable) -> Result<S2Report> {
    check_t("s2_main", t, table)?;
    let lo = (t / TAU).floor() as u64 + 1;
    let hi = (t / PI).floor() as u64;
    let ms: Vec<u64> = (lo..=hi).collect();
    let parts: Vec<(Complex64, f64)> = ms
        .par_iter()
        .map(|&m| {
            let quad = integral_c64(m, 0, TAU * m as f64, 2.0 * t);
            let ratio = (quad - endpoint_saddle_value(m)).norm() / endpoint_error_scale(t, m);
            (quad * (f64::from(table.d(m)) / (m as f64).sqrt()), ratio)
        })
        .collect();
    let mut acc = ComplexSum::new();
    let mut ratio_max = 0.0f64;
    for (z, r) in parts {
        acc.add(z);
        ratio_max = ratio_max.max(r);
    }
    let count = if hi >= lo {
        table.prefix(hi) - table.prefix(lo - 1)
    } else {
        0
    };
    let predicted = Complex64::from_polar(PI * count as f64, PI / 4.0);
    let c = acc.value();
    Ok(S2Report {
        t,
        computed: [c.re, c.im],
        predicted: [predicted.re, predicted.im],
        divisor_count: count,
        endpoint_ratio_max: ratio_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::divisor_sieve;

    #[test]
    fn phase_special_points() {
        let spec = OscillatorSpec::new(3, 0, 1.0, 2.0);
        let e = std::f64::consts::E;
        let (f, g) = phase_eval(&spec, TAU * e * 3.0).unwrap();
        assert!(f.abs() < 1e-13 && g == f);
        let (f, _) = phase_eval(&spec, TAU * 3.0).unwrap();
        assert!((f + 3.0).abs() < 1e-13);
        let spec = OscillatorSpec::new(2, 1, 1.0, 2.0);
        let x = 123.4;
        let (f, g) = phase_eval(&spec, x).unwrap();
        assert!((f - x - g).abs() < 1e-12);
        assert!(phase_eval(&spec, 0.0).is_err());
    }

    #[test]
    fn finite_difference_derivative() {
        let spec = OscillatorSpec::new(5, 0, 1.0, 2.0);
        for x in [40.0, 300.0, 5000.0] {
            let h = 1e-5 * x;
            let fd = (phase_eval(&spec, x + h).unwrap().0 - phase_eval(&spec, x - h).unwrap().0)
                / (2.0 * h);
            let exact = (x / (TAU * 5.0)).ln() / TAU;
            assert!((fd - exact).abs() < 1e-9 * exact.abs().max(1.0), "{x}");
            // f'' = 1/(2 pi x) > 0
            let f2 = (phase_eval(&spec, x + h).unwrap().0 - 2.0 * phase_eval(&spec, x).unwrap().0
                + phase_eval(&spec, x - h).unwrap().0)
                / (h * h);
            assert!(f2 > 0.0 && (f2 * TAU * x - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn saddle_is_stationary() {
        for (m, k) in [(1u64, 0u32), (3, 1), (17, 2), (2, 4)] {
            let x0 = saddle_location_mp(m, k, 60);
            let spec = OscillatorSpec::new(m, k, 1.0, 2.0);
            let d = phase_derivative_mp(&spec, &x0);
            assert!(d.to_f64().abs() < 1e-55, "{m},{k}: {d}");
        }
    }

    #[test]
    fn quadrature_matches_simpson() {
        let spec = OscillatorSpec::new(1, 0, TAU, 2.0 * TAU);
        let got = oscillatory_integral(&spec).unwrap().to_c64();
        let n = 1_000_000usize;
        let h = (spec.b - spec.a) / n as f64;
        let phase = GPhase::new(1, 0);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += cis_turns(phase.value(spec.a + h * i as f64)) * w;
        }
        let simpson = acc * (h / 3.0);
        assert!((got - simpson).norm() < 1e-6);
    }

    #[test]
    fn degenerate_and_capped() {
        let spec = OscillatorSpec::new(1, 0, 5.0, 5.0);
        assert_eq!(
            oscillatory_integral(&spec).unwrap().to_c64(),
            Complex64::new(0.0, 0.0)
        );
        let spec = OscillatorSpec::new(1, 0, 5.0, 2e7);
        assert!(matches!(
            oscillatory_integral(&spec),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn halving_target_is_stable() {
        let spec = OscillatorSpec::new(2, 1, 800.0, 1600.0);
        let a = oscillatory_integral_with(&spec, 1e-6).unwrap().value;
        let b = oscillatory_integral_with(&spec, 5e-7).unwrap().value;
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn first_bound_roughly_halves_with_doubled_slope() {
        let t = 5000.0;
        let near = OscillatorSpec::new(1, 1, t, 2.0 * t);
        let far = OscillatorSpec::new(1, 2, t, 2.0 * t);
        let b1 = derivative_test_bounds(&near, t).unwrap();
        let b2 = derivative_test_bounds(&far, t).unwrap();
        let (f1, f2) = (b1.first.unwrap(), b2.first.unwrap());
        assert!(f2 < f1 && b1.actual <= f1 && b2.actual <= f2);
        assert!(b1.actual <= b1.second);
    }

    #[test]
    fn saddle_value_modulus() {
        for (m, k) in [(1u64, 1u32), (4, 2), (9, 3)] {
            let v = saddle_point_value(m, k).unwrap();
            let want = TAU * (PI * k as f64).exp() * (m as f64).sqrt();
            assert!((v.abs().to_f64() / want - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn interior_saddle_against_quadrature() {
        // x0 = 2 pi e^{2 pi} ~ 3364.6 inside (T, 2T) for T = 2400
        let t = 2400.0;
        let spec = OscillatorSpec::new(1, 1, t, 2.0 * t);
        let quad = oscillatory_integral(&spec).unwrap().to_c64();
        let closed = saddle_point_value(1, 1).unwrap().to_c64();
        let scale = saddle_error_scale(t, spec.saddle());
        assert!((quad - closed).norm() <= 5.0 * scale);
    }

    #[test]
    fn poisson_window_and_theta_stability() {
        // no integer lies in (0.39, 0.60): the direct sum is the whole defect
        assert!(poisson_k_window(1, 100.0, 0.05).is_empty());
        assert_eq!(poisson_k_window(10, 63.0, 0.05), vec![0]);
        let a = truncated_poisson_defect(1, 100.0, 0.01).unwrap();
        let b = truncated_poisson_defect(1, 100.0, 0.05).unwrap();
        let c = truncated_poisson_defect(1, 100.0, 0.09).unwrap();
        assert!(a <= 10.0 && (a - b).abs() < 1e-6 && (a - c).abs() < 1e-6);
        assert!(truncated_poisson_defect(1, 5.0, 0.05).is_err());
        assert!(truncated_poisson_defect(1, 100.0, 0.0).is_err());
    }

    #[test]
    fn case_three_empty_for_k_zero() {
        let table = divisor_sieve(1000).unwrap();
        let r = s1_contributions(1000.0, DEFAULT_THETA, &table).unwrap();
        assert!(!r
            .rows
            .iter()
            .any(|row| row.case == S1Case::III && row.k == 0));
        let sum: Complex64 = S1Case::ALL.iter().map(|&c| r.case_total(c)).sum();
        assert!((sum - r.total_c64()).norm() < 1e-9 * (1.0 + r.total_c64().norm()));
    }

    #[test]
    fn classification_precedence() {
        let c = 10.0;
        assert_eq!(S1Case::classify(8.0, c, 0.05), Some(S1Case::I));
        assert_eq!(S1Case::classify(9.0, c, 0.05), Some(S1Case::I));
        assert_eq!(S1Case::classify(9.5, c, 0.05), Some(S1Case::II));
        assert_eq!(S1Case::classify(11.0, c, 0.05), Some(S1Case::III));
        assert_eq!(S1Case::classify(19.5, c, 0.05), Some(S1Case::IV));
        assert_eq!(S1Case::classify(21.0, c, 0.05), Some(S1Case::V));
        assert_eq!(S1Case::classify(7.0, c, 0.05), None);
        assert_eq!(S1Case::classify(28.0, c, 0.05), None);
    }

    #[test]
    fn s2_phase_and_identity() {
        let table = divisor_sieve(1000).unwrap();
        let (computed, predicted) = s2_main(1000.0, &table).unwrap();
        let p = predicted.to_c64();
        assert!((p.arg() - PI / 4.0).abs() < 1e-15);
        let r = s2_report(1000.0, &table).unwrap();
        let back = 2.0 * (Complex64::from_polar(1.0, -PI / 4.0) * p).re;
        assert!((back - 2.0 * PI * r.divisor_count as f64).abs() < 1e-9 * back);
        let diff = (computed.to_c64() - p).norm();
        assert!(diff.is_finite());
    }
}
