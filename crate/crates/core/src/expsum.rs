//! Exponential sums with divisor coefficients: Wilton sums `D(x, eta)`, the
//! residual of Wilton's functional equation, and the resonant sum
//! `sum d(m) e(-m e^{2 pi k})`.

use num_complex::Complex64;
use rug::float::Constant;
use rug::Float;
use serde::Serialize;

use crate::dd::{cis_turns, Dd};
use crate::divisor::DivisorTable;
use crate::error::{Error, Result};
use crate::mp::{bits_for_digits, check_digits, PrecisionComplex};
use crate::report::CsvRow;
use crate::sum::par_sum_complex;

/// Largest working precision the resonant sum will request on its own.
pub const RESONANT_DIGITS_CAP: u32 = 5000;

#[derive(Clone, Debug, PartialEq)]
pub struct WiltonQuery {
    pub x: f64,
    pub eta: Float,
    pub digits: u32,
}

impl WiltonQuery {
    pub fn new(x: f64, eta: Float, digits: u32) -> Self {
        WiltonQuery { x, eta, digits }
    }

    /// Query whose precision is exactly the phase-accuracy minimum.
    pub fn with_required_digits(x: f64, eta: Float) -> Self {
        let digits = phase_digits(x * eta.to_f64().abs());
        WiltonQuery { x, eta, digits }
    }

    pub fn required_digits(&self) -> u32 {
        phase_digits(self.x * self.eta.to_f64().abs())
    }
}

fn phase_digits(scale: f64) -> u32 {
    scale.max(1.0).log10().ceil() as u32 + 20
}

/// `eta mod 1` canonicalised to `(0, 1]` and split into double-double.
fn reduced_frequency(eta: &Float, digits: u32) -> Dd {
    let prec = bits_for_digits(digits).max(eta.prec());
    let mut f = Float::with_val(prec, eta);
    f -= Float::with_val(prec, eta.floor_ref());
    if f.is_zero() {
        f += 1u32;
    }
    Dd::from_float(&f)
}

/// `sum_{m <= x} d(m) e(m beta)` with `beta` already reduced.
fn divisor_exp_sum(x: f64, beta: Dd, table: &DivisorTable) -> Complex64 {
    if x < 1.0 {
        return Complex64::new(0.0, 0.0);
    }
    let n = x.floor() as u64;
    par_sum_complex(1..n + 1, |m| {
        cis_turns(beta.mul_frac(m as f64)) * f64::from(table.d(m))
    })
}

fn check_x(what: &'static str, x: f64, table: &DivisorTable) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("{what} needs x >= 0, got {x}")));
    }
    table.check_range(what, x)
}

/// `D(x, eta) = sum_{m <= x} d(m) e^{2 pi i eta m}`.
pub fn wilton_sum(q: &WiltonQuery, table: &DivisorTable) -> Result<PrecisionComplex> {
    check_x("wilton_sum", q.x, table)?;
    if !q.eta.is_finite() {
        return Err(Error::domain("wilton_sum needs a finite frequency"));
    }
    check_digits("wilton_sum", q.digits)?;
    let required = q.required_digits();
    if q.digits < required {
        return Err(Error::Precision {
            what: "wilton_sum phases",
            required,
            available: q.digits,
        });
    }
    let beta = reduced_frequency(&q.eta, q.digits);
    Ok(PrecisionComplex::from_c64(
        divisor_exp_sum(q.x, beta, table),
        q.digits,
    ))
}

/// `|D(x, eta) - eta^{-1} D(eta^2 x, -1/eta)|` for `0 < eta <= 1`, `eta^2 x <= 1`.
pub fn wilton_identity_residual(q: &WiltonQuery, table: &DivisorTable) -> Result<f64> {
    let eta = q.eta.to_f64();
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain(format!(
            "Wilton identity needs 0 < eta <= 1, got {eta}"
        )));
    }
    let prec = bits_for_digits(q.digits).max(q.eta.prec());
    let eta_sq_x = Float::with_val(prec, q.eta.square_ref()) * q.x;
    let y = eta_sq_x.to_f64();
    if y > 1.0 {
        return Err(Error::domain(format!(
            "Wilton identity needs eta^2 x <= 1, got {y}"
        )));
    }
    let lhs = wilton_sum(q, table)?.to_c64();
    check_x("wilton_identity_residual", y, table)?;
    let inv = -Float::with_val(prec, q.eta.recip_ref());
    let beta = reduced_frequency(&inv, q.digits);
    let rhs = divisor_exp_sum(y, beta, table) / eta;
    Ok((lhs - rhs).norm())
}

/// Digits needed to reduce `m e^{2 pi k}` mod 1 for every `m <= x`.
pub fn resonant_required_digits(k: u32, x: f64) -> u32 {
    let int_digits = 2.0 * std::f64::consts::PI * f64::from(k) / std::f64::consts::LN_10;
    (int_digits + x.max(1.0).log10()).ceil() as u32 + 20
}

/// `e^{2 pi k} mod 1` at `digits` significant digits after the point.
pub fn resonant_frequency(k: u32, digits: u32) -> Dd {
    let int_digits = resonant_required_digits(k, 1.0);
    let prec = bits_for_digits(digits + int_digits);
    let mut e = Float::with_val(prec, Constant::Pi) * 2u32 * k;
    e.exp_mut();
    let frac = Float::with_val(prec, e.fract_ref());
    Dd::from_float(&frac)
}

/// `sum_{m <= x} d(m) e(-m e^{2 pi k})` at the minimum admissible precision.
pub fn resonant_divisor_sum(k: u32, x: f64, table: &DivisorTable) -> Result<PrecisionComplex> {
    let required = resonant_required_digits(k, x);
    if required > RESONANT_DIGITS_CAP {
        return Err(Error::Precision {
            what: "resonant_divisor_sum frequency",
            required,
            available: RESONANT_DIGITS_CAP,
        });
    }
    resonant_divisor_sum_with(k, x, table, required)
}

pub fn resonant_divisor_sum_with(
    k: u32,
    x: f64,
    table: &DivisorTable,
    digits: u32,
) -> Result<PrecisionComplex> {
    if k == 0 {
        return Err(Error::domain("resonant sum needs k >= 1"));
    }
    check_x("resonant_divisor_sum", x, table)?;
    check_digits("resonant_divisor_sum", digits)?;
    let required = resonant_required_digits(k, x);
    if digits < required {
        return Err(Error::Precision {
            what: "resonant_divisor_sum frequency",
            required,
            available: digits,
        });
    }
    let beta = -resonant_frequency(k, digits);
    Ok(PrecisionComplex::from_c64(
        divisor_exp_sum(x, beta, table),
        digits,
    ))
}

/// One line of the conditional-bound diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub k: u32,
    pub x: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub normalized: f64,
}

impl CsvRow for BoundRow {
    fn header() -> &'static [&'static str] {
        &["k", "x", "re", "im", "abs", "normalized"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.x.to_string(),
            self.re.to_string(),
            self.im.to_string(),
            self.abs.to_string(),
            self.normalized.to_string(),
        ]
    }
}

/// Rows `(x, |S|, |S| / (x^{1/2} log^{2+K} x))` for the resonant sum `S`.
pub fn conditional_bound_report(
    k: u32,
    x_grid: &[f64],
    big_k: f64,
    table: &DivisorTable,
) -> Result<Vec<BoundRow>> {
    if !(big_k >= 0.0) {
        return Err(Error::domain(format!("K must be >= 0, got {big_k}")));
    }
    x_grid
        .iter()
        .map(|&x| {
            let s = resonant_divisor_sum(k, x, table)?.to_c64();
            let abs = s.norm();
            Ok(BoundRow {
                k,
                x,
                re: s.re,
                im: s.im,
                abs,
                normalized: abs / (x.sqrt() * x.ln().powf(2.0 + big_k)),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::divisor_sieve;

    fn q(x: f64, eta: f64) -> WiltonQuery {
        WiltonQuery::with_required_digits(x, Float::with_val(128, eta))
    }

    #[test]
    fn integer_and_half_frequencies() {
        let t = divisor_sieve(10).unwrap();
        let s = wilton_sum(&q(10.0, 1.0), &t).unwrap().to_c64();
        assert!((s.re - 27.0).abs() < 1e-12 && s.im.abs() < 1e-12);
        let s = wilton_sum(&q(10.0, 0.5), &t).unwrap().to_c64();
        assert!((s.re - 7.0).abs() < 1e-12 && s.im.abs() < 1e-12);
    }

    #[test]
    fn matches_naive_double_precision() {
        let t = divisor_sieve(1000).unwrap();
        let eta = Float::with_val(200, 2u32).sqrt() - 1u32;
        let got = wilton_sum(&WiltonQuery::with_required_digits(1000.0, eta), &t)
            .unwrap()
            .to_c64();
        let e = std::f64::consts::SQRT_2 - 1.0;
        let mut naive = Complex64::new(0.0, 0.0);
        for m in 1..=1000u64 {
            let a = std::f64::consts::TAU * e * m as f64;
            naive += Complex64::new(a.cos(), a.sin()) * f64::from(t.d(m));
        }
        assert!((got - naive).norm() / naive.norm() < 1e-8);
    }

    #[test]
    fn precision_rule_enforced() {
        let t = divisor_sieve(100).unwrap();
        let bad = WiltonQuery::new(100.0, Float::with_val(64, 0.3), 10);
        assert!(matches!(wilton_sum(&bad, &t), Err(Error::Precision { .. })));
        assert!(matches!(
            wilton_sum(&q(200.0, 0.3), &t),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn periodicity_is_exact() {
        let t = divisor_sieve(5000).unwrap();
        let eta = Float::with_val(128, 0.1234567);
        let shifted = Float::with_val(256, &eta + 1u32);
        let a = wilton_sum(&WiltonQuery::new(5000.0, eta, 40), &t).unwrap();
        let b = wilton_sum(&WiltonQuery::new(5000.0, shifted, 40), &t).unwrap();
        assert_eq!(a.to_c64(), b.to_c64());
    }

    #[test]
    fn conjugate_symmetry_and_triangle() {
        let t = divisor_sieve(3000).unwrap();
        for eta in [0.377, 0.61803398875, 0.05] {
            let a = wilton_sum(&q(3000.0, eta), &t).unwrap().to_c64();
            let b = wilton_sum(&q(3000.0, -eta), &t).unwrap().to_c64();
            assert!((a.conj() - b).norm() < 1e-9 * t.prefix(3000) as f64);
            assert!(a.norm() <= t.prefix(3000) as f64);
        }
    }

    #[test]
    fn wilton_trivial_identity() {
        let t = divisor_sieve(10).unwrap();
        assert_eq!(wilton_identity_residual(&q(1.0, 1.0), &t).unwrap(), 0.0);
        assert!(matches!(
            wilton_identity_residual(&q(10.0, 0.5), &t),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            wilton_identity_residual(&q(5.0, 0.0), &t),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn resonant_single_term() {
        let t = divisor_sieve(10).unwrap();
        for k in [1u32, 3, 7] {
            let s = resonant_divisor_sum(k, 1.0, &t).unwrap();
            assert!((s.abs().to_f64() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn resonant_frequency_known_digits() {
        // e^{2 pi} = 535.4916555247646...
        let f = resonant_frequency(1, 30);
        assert!((f.hi - 0.491_655_524_764_736_5).abs() < 1e-15, "{}", f.hi);
    }

    #[test]
    fn resonant_precision_doubling() {
        let t = divisor_sieve(10_000).unwrap();
        let required = resonant_required_digits(1, 1e4);
        let a = resonant_divisor_sum_with(1, 1e4, &t, required)
            .unwrap()
            .to_c64();
        let b = resonant_divisor_sum_with(1, 1e4, &t, required + 15)
            .unwrap()
            .to_c64();
        assert!((a - b).norm() <= 1e-10 * a.norm());
        assert!(matches!(
            resonant_divisor_sum_with(1, 1e4, &t, required - 1),
            Err(Error::Precision { .. })
        ));
        assert!(matches!(
            resonant_divisor_sum(3000, 10.0, &t),
            Err(Error::Precision { required, .. }) if required > RESONANT_DIGITS_CAP
        ));
    }

    #[test]
    fn bound_report_shapes() {
        let t = divisor_sieve(10_000).unwrap();
        assert!(conditional_bound_report(1, &[], 0.0, &t)
            .unwrap()
            .is_empty());
        let rows = conditional_bound_report(1, &[1e2, 1e3, 1e4], 0.0, &t).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[0].x < w[1].x));
        assert!(rows.iter().all(|r| r.normalized.is_finite()));
        let k1 = conditional_bound_report(1, &[1e3], 1.0, &t).unwrap();
        let ratio = k1[0].normalized / rows[1].normalized;
        assert!((ratio * 1e3f64.ln() - 1.0).abs() < 1e-12);
    }
}
