//! `zeta(s)`, the factor `chi(s)` of the functional equation, and the
//! approximate functional equation of `zeta^2` on the critical line together
//! with its divisor-problem residual.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rug::{Assign, Float, Integer, Rational};

use crate::dd::{cis_turns, log_over_two_pi_table, DD_DIGITS};
use crate::divisor::{delta, DivisorTable};
use crate::error::{Error, Result};
use crate::mp::{
    bernoulli_even, bits_for_digits, check_digits, ln_gamma, pi, two_pi, PrecisionComplex,
    MIN_DIGITS,
};
use crate::sum::par_sum_complex;

/// Largest `|Im s|` accepted by [`zeta_reference`].
pub const ZETA_T_CAP: f64 = 1.0e6;

/// How `chi` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ChiMode {
    /// Product formula (reflected for `Re s > 1/2`), valid everywhere off the poles.
    #[default]
    Exact,
    /// Leading Stirling term `e^{-pi i/4} (t/2pi)^{sigma-1/2} e^{i t log(t/(2 pi e))}`
    /// with the `1 + O(1/t)` factor dropped; needs `|Im s| >= 1`.
    Asymptotic,
}

/// `chi(s) = 2^s pi^{s-1} sin(pi s/2) Gamma(1-s)`, so that `zeta(s) = chi(s) zeta(1-s)`.
pub fn chi(s: &PrecisionComplex, mode: ChiMode) -> Result<PrecisionComplex> {
    match mode {
        ChiMode::Exact => chi_exact(s),
        ChiMode::Asymptotic => chi_asymptotic(s),
    }
}

fn chi_exact(s: &PrecisionComplex) -> Result<PrecisionComplex> {
    let digits = s.digits();
    check_digits("chi", digits)?;
    let t_abs = s.im().to_f64().abs();
    // e^{pi t/2}-sized factors cancel; the exponent needs extra digits.
    let work = digits + 2 * (t_abs + 10.0).log10().ceil() as u32 + 10;
    let s = s.with_digits(work);
    let prec = s.prec();
    let sigma = s.re().to_f64();
    let one = PrecisionComplex::one(work);
    let half_pi = PrecisionComplex::from_real(pi(prec) / 2u32, work);
    let half_pi_s = &half_pi * &s;

    let value = if sigma <= 0.5 {
        // 2^s pi^{s-1} sin(pi s/2) Gamma(1-s)
        let ln2 = Float::with_val(prec, Float::ln_u(2));
        let ln_pi = Float::with_val(prec, pi(prec).ln());
        let s_minus_1 = &s - &one;
        let lg = ln_gamma(&(&one - &s))?;
        let exponent = &(&s.mul_real(&ln2) + &s_minus_1.mul_real(&ln_pi)) + &lg;
        &exponent.exp() * &half_pi_s.sin()
    } else {
        // reflected: (2 pi)^s / (2 cos(pi s/2) Gamma(s)); poles at odd positive integers
        let nearest_odd = ((sigma - 1.0) / 2.0).round() * 2.0 + 1.0;
        let dist = (sigma - nearest_odd).hypot(s.im().to_f64());
        if nearest_odd >= 1.0 && dist < 10f64.powf(-f64::from(digits) / 2.0) {
            return Err(Error::Pole(format!(
                "chi(s) at distance {dist:e} from s = {nearest_odd}"
            )));
        }
        let ln_2pi = Float::with_val(prec, two_pi(prec).ln());
        let lg = ln_gamma(&s)?;
        let exponent = &s.mul_real(&ln_2pi) - &lg;
        let denom = half_pi_s.cos().scale(2.0);
        exponent.exp().div(&denom)
    };
    if !value.is_finite() {
        return Err(Error::Pole("chi(s) is not finite".into()));
    }
    Ok(value.with_digits(digits))
}

fn chi_asymptotic(s: &PrecisionComplex) -> Result<PrecisionComplex> {
    let digits = s.digits();
    let prec = s.prec();
    let im = s.im().to_f64();
    if im.abs() < 1.0 {
        return Err(Error::domain(format!(
            "asymptotic chi needs |Im s| >= 1, got {im}"
        )));
    }
    // The expansion is for chi(1-w) with w = sigma + it, t >= 1.
    let (w, invert) = if im <= -1.0 {
        (&PrecisionComplex::one(digits) - s, false)
    } else {
        (s.clone(), true)
    };
    let sigma = Float::with_val(prec, w.re());
    let t = Float::with_val(prec, w.im());
    let ratio = Float::with_val(prec, &t / two_pi(prec));
    let modulus = Float::with_val(prec, ratio.ln_ref()) * (sigma - 0.5f64);
    let modulus = modulus.exp();
    let mut log_arg = Float::with_val(prec, ratio.ln_ref());
    log_arg -= 1u32;
    let mut phase = Float::with_val(prec, &t * &log_arg);
    phase -= pi(prec) / 4u32;
    let value = PrecisionComplex::cis(&phase, digits).mul_real(&modulus);
    Ok(if invert { value.recip() } else { value })
}

/// Number of Euler–Maclaurin head terms for height `t`.
pub fn euler_maclaurin_terms(t: f64) -> u64 {
    (2.0 * t.abs()).ceil().max(50.0) as u64
}

/// `zeta(s)` by Euler–Maclaurin summation with a rigorous truncation bound.
///
/// `digits <= 15` runs a double-precision evaluation whose phases
/// `t log n / 2 pi` are reduced mod 1 in double-double; larger `digits` run
/// entirely in MPFR. The result carries `max(digits, 15)` digits.
pub fn zeta_reference(s: &PrecisionComplex, digits: u32) -> Result<PrecisionComplex> {
    check_digits("zeta_reference", digits)?;
    let sigma = s.re().to_f64();
    let t = s.im().to_f64();
    let pole_tol = 10f64.powf(-f64::from(digits.max(MIN_DIGITS)) / 2.0);
    if (sigma - 1.0).hypot(t) < pole_tol {
        return Err(Error::Pole("zeta(s) at s = 1".into()));
    }
    if t.abs() > ZETA_T_CAP {
        return Err(Error::Resource {
            what: "zeta_reference height",
            requested: t.abs(),
            cap: ZETA_T_CAP,
        });
    }
    if digits <= MIN_DIGITS {
        let z = zeta_f64(sigma, t)?;
        Ok(PrecisionComplex::from_c64(z, MIN_DIGITS))
    } else {
        zeta_mp(s, digits)
    }
}

/// Double-precision tier of [`zeta_reference`].
pub(crate) fn zeta_f64(sigma: f64, t: f64) -> Result<Complex64> {
    let n_terms = euler_maclaurin_terms(t);
    let table = log_over_two_pi_table(n_terms);
    let s = Complex64::new(sigma, t);
    let head = par_sum_complex(1..n_terms, |n| {
        let nf = n as f64;
        let mag = if sigma == 0.5 {
            1.0 / nf.sqrt()
        } else {
            nf.powf(-sigma)
        };
        cis_turns(table[n as usize].mul_frac(-t)) * mag
    });
    let nf = n_terms as f64;
    // N^{-s}
    let n_pow = cis_turns(table[n_terms as usize].mul_frac(-t)) * nf.powf(-sigma);
    let mut total = head + n_pow * nf / (s - 1.0) + n_pow * 0.5;

    let eps = f64::EPSILON * (1.0 + total.norm());
    let mut poch = s;
    let mut n_factor = n_pow / nf;
    let mut factorial = 2.0f64;
    for j in 1..200usize {
        let b = Float::with_val(64, &bernoulli_even(j)).to_f64();
        let term = poch * n_factor * (b / factorial);
        let k = (2 * j - 1) as f64;
        let bound = term.norm() * (s + k).norm() / (sigma + k);
        if sigma + k > 0.0 && bound < eps {
            return Ok(total);
        }
        total += term;
        poch *= (s + k) * (s + k + 1.0);
        n_factor /= nf * nf;
        factorial *= (k + 2.0) * (k + 3.0);
    }
    Err(Error::Precision {
        what: "zeta_reference (double tier)",
        required: MIN_DIGITS,
        available: MIN_DIGITS,
    })
}

fn zeta_mp(s: &PrecisionComplex, digits: u32) -> Result<PrecisionComplex> {
    let t = s.im().to_f64();
    let n_terms = euler_maclaurin_terms(t);
    let ln_n_max = (n_terms as f64).ln();
    let extra = (n_terms as f64).log10() + (t.abs() * ln_n_max + 1.0).log10() + 10.0;
    let work = digits + extra.ceil() as u32;
    let prec = bits_for_digits(work);
    let s = s.with_digits(work);
    let sigma = Float::with_val(prec, s.re());
    let tt = Float::with_val(prec, s.im());

    let mut re = Float::with_val(prec, 0);
    let mut im = Float::with_val(prec, 0);
    let mut ln_n = Float::new(prec);
    for n in 1..n_terms {
        ln_n.assign(Float::ln_u(n as u32));
        let mag = Float::with_val(prec, &sigma * &ln_n);
        let mag = (-mag).exp();
        let angle = Float::with_val(prec, &tt * &ln_n);
        let (sn, cs) = angle.sin_cos(Float::new(prec));
        re += Float::with_val(prec, &mag * &cs);
        im -= Float::with_val(prec, &mag * &sn);
    }
    let head = PrecisionComplex::new(re, im, work);

    let one = PrecisionComplex::one(work);
    let n_big = Float::with_val(prec, n_terms);
    let neg_s = -s.clone();
    let n_pow = PrecisionComplex::real_base_pow(&n_big, &neg_s);
    let s_minus_1 = &s - &one;
    let mut total = &head + &n_pow.mul_real(&n_big).div(&s_minus_1);
    total = &total + &n_pow.scale(0.5);

    let target = Float::with_val(prec, Float::u_pow_u(10, digits + 2)).recip();
    let inv_n = Float::with_val(prec, n_big.recip_ref());
    let inv_n2 = Float::with_val(prec, inv_n.square_ref());
    let mut poch = s.clone();
    let mut n_factor = n_pow.mul_real(&inv_n);
    let mut factorial = Integer::from(2);
    let sigma_f = s.re().to_f64();
    for j in 1..5000usize {
        let b = Float::with_val(prec, &bernoulli_even(j) / Rational::from(factorial.clone()));
        let term = (&poch * &n_factor).mul_real(&b);
        let k = (2 * j - 1) as u32;
        let shifted = &s + &PrecisionComplex::from_f64(f64::from(k), 0.0, work);
        if sigma_f + f64::from(k) > 0.0 {
            let mut bound = term.abs() * shifted.abs();
            bound /= Float::with_val(prec, &sigma + k);
            if bound < target {
                return Ok(total.with_digits(digits));
            }
        }
        total = &total + &term;
        let shifted2 = &shifted + &one;
        poch = &(&poch * &shifted) * &shifted2;
        n_factor = n_factor.mul_real(&inv_n2);
        factorial *= (k + 2) * (k + 3);
    }
    Err(Error::Precision {
        what: "zeta_reference Euler-Maclaurin tail",
        required: digits,
        available: digits,
    })
}

/// Riemann–Siegel `theta(t) = Im ln Gamma(1/4 + it/2) - (t/2) ln pi`.
pub fn riemann_siegel_theta(t: f64, digits: u32) -> Result<Float> {
    let z = PrecisionComplex::from_f64(0.25, t / 2.0, digits);
    let lg = ln_gamma(&z)?;
    let prec = lg.prec();
    let half_t_ln_pi = Float::with_val(prec, pi(prec).ln()) * (t / 2.0);
    Ok(Float::with_val(prec, lg.im()) - half_t_ln_pi)
}

/// Hardy's function `Z(t) = e^{i theta(t)} zeta(1/2 + it)`, real for real `t`.
pub fn hardy_z(t: f64, digits: u32) -> Result<f64> {
    let theta = riemann_siegel_theta(t, digits)?;
    let rot = PrecisionComplex::cis(&theta, digits);
    let z = zeta_reference(&PrecisionComplex::from_f64(0.5, t, digits), digits)?;
    Ok((&rot * &z).re().to_f64())
}

/// Digits the phases `t ln n / 2 pi` need for a faithful AFE sum at height `t`.
pub fn afe_required_digits(t: f64) -> u32 {
    (t * t.ln()).max(1.0).log10().ceil() as u32 + 20
}

/// `2 Re[ chi(1/2 - it) sum_{n <= t/2 pi} d(n) n^{-1/2-it} ]`, the main part of
/// `|zeta(1/2+it)|^2` in the approximate functional equation.
pub fn zeta_sq_critical_approx(t: f64, table: &DivisorTable) -> Result<f64> {
    zeta_sq_critical_approx_with(t, table, DD_DIGITS)
}

/// As [`zeta_sq_critical_approx`] with an explicit phase working precision;
/// `digits > 31` switches the Dirichlet sum to MPFR.
pub fn zeta_sq_critical_approx_with(t: f64, table: &DivisorTable, digits: u32) -> Result<f64> {
    if !(t >= TAU) {
        return Err(Error::domain(format!("AFE needs t >= 2 pi, got {t}")));
    }
    let x = t / TAU;
    table.check_range("zeta_sq_critical_approx", x)?;
    let required = afe_required_digits(t);
    if digits < required {
        return Err(Error::Precision {
            what: "zeta_sq_critical_approx phases",
            required,
            available: digits,
        });
    }
    check_digits("zeta_sq_critical_approx", digits)?;
    let n_max = x.floor() as u64;
    let chi_digits = digits.max(30);
    let c = chi(
        &PrecisionComplex::from_f64(0.5, -t, chi_digits),
        ChiMode::Exact,
    )?
    .to_c64();
    let dirichlet = if digits <= DD_DIGITS {
        let logs = log_over_two_pi_table(n_max);
        par_sum_complex(1..n_max + 1, |n| {
            cis_turns(logs[n as usize].mul_frac(-t)) * (f64::from(table.d(n)) / (n as f64).sqrt())
        })
    } else {
        dirichlet_mp(t, n_max, table, digits)
    };
    Ok(2.0 * (c * dirichlet).re)
}

fn dirichlet_mp(t: f64, n_max: u64, table: &DivisorTable, digits: u32) -> Complex64 {
    let prec = bits_for_digits(digits);
    let inv_two_pi = Float::with_val(prec, two_pi(prec).recip_ref());
    let tt = Float::with_val(prec, t);
    let mut acc = crate::sum::ComplexSum::new();
    let mut phase = Float::new(prec);
    for n in 1..=n_max {
        phase.assign(Float::ln_u(n as u32));
        phase *= &inv_two_pi;
        phase *= &tt;
        let turns = Float::with_val(prec, phase.fract_ref()).to_f64();
        acc.add(cis_turns(-turns) * (f64::from(table.d(n)) / (n as f64).sqrt()));
    }
    acc.value()
}

/// `-sqrt(2) (t/2 pi)^{-1/2} Delta(t/2 pi)`, the leading part of
/// `chi(1-s) R(s; t/2 pi)` on the critical line.
pub fn motohashi_residual(t: f64, table: &DivisorTable) -> Result<f64> {
    if !(t >= TAU) {
        return Err(Error::domain(format!("residual needs t >= 2 pi, got {t}")));
    }
    let x = t / TAU;
    let d = delta(x, table)?;
    Ok(-std::f64::consts::SQRT_2 * d / x.sqrt())
}

/// `|zeta(1/2+it)|^2` from the double-precision reference tier.
pub fn zeta_sq_reference(t: f64) -> Result<f64> {
    if t.abs() > ZETA_T_CAP {
        return Err(Error::Resource {
            what: "zeta_reference height",
            requested: t.abs(),
            cap: ZETA_T_CAP,
        });
    }
    Ok(zeta_f64(0.5, t)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::divisor_sieve;

    fn pc(re: f64, im: f64, digits: u32) -> PrecisionComplex {
        PrecisionComplex::from_f64(re, im, digits)
    }

    #[test]
    fn chi_at_one_half_is_one() {
        let v = chi(&pc(0.5, 0.0, 40), ChiMode::Exact).unwrap();
        assert!((&v - &PrecisionComplex::one(40)).abs().to_f64() < 1e-38);
    }

    #[test]
    fn chi_unimodular_on_critical_line() {
        let v = chi(&pc(0.5, 50.0, 30), ChiMode::Exact).unwrap();
        assert!((v.abs().to_f64() - 1.0).abs() < 1e-28);
    }

    #[test]
    fn chi_exact_vs_asymptotic() {
        let s = pc(0.5, 1000.0, 30);
        let exact = chi(&s, ChiMode::Exact).unwrap();
        let asym = chi(&s, ChiMode::Asymptotic).unwrap();
        let rel = (&exact - &asym).abs().to_f64() / exact.abs().to_f64();
        assert!(rel <= 10.0 / 1000.0, "{rel}");
        // the dropped factor is 1 + O(1/t): the gap is of order 1/t, not smaller
        assert!(rel > 1e-6);
    }

    #[test]
    fn chi_poles_and_even_integers() {
        assert!(matches!(
            chi(&pc(1.0, 0.0, 20), ChiMode::Exact),
            Err(Error::Pole(_))
        ));
        assert!(matches!(
            chi(&pc(3.0, 0.0, 20), ChiMode::Exact),
            Err(Error::Pole(_))
        ));
        // chi(2) = zeta(2)/zeta(-1) = (pi^2/6)/(-1/12) = -2 pi^2
        let v = chi(&pc(2.0, 0.0, 30), ChiMode::Exact).unwrap().to_c64();
        let want = -2.0 * std::f64::consts::PI.powi(2);
        assert!((v.re - want).abs() < 1e-12 && v.im.abs() < 1e-12, "{v}");
        assert!(chi(&pc(0.5, 0.5, 20), ChiMode::Asymptotic).is_err());
    }

    #[test]
    fn zeta_classical_values() {
        let z2 = zeta_reference(&pc(2.0, 0.0, 40), 40).unwrap();
        let prec = z2.prec();
        let want = Float::with_val(prec, pi(prec).square_ref()) / 6u32;
        assert!(Float::with_val(prec, z2.re() - &want).abs().to_f64() < 1e-39);
        let z0 = zeta_reference(&pc(0.0, 0.0, 30), 30).unwrap();
        assert!((z0.re().to_f64() + 0.5).abs() < 1e-29);
        let z0_fast = zeta_reference(&pc(0.0, 0.0, 15), 15).unwrap();
        assert!((z0_fast.re().to_f64() + 0.5).abs() < 1e-14);
        assert!(matches!(
            zeta_reference(&pc(1.0, 0.0, 20), 20),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn double_tier_matches_mpfr_tier() {
        for (x, y) in [(0.5, 14.0), (0.75, 123.4), (0.5, 2500.0), (2.0, 7.0)] {
            let hi = zeta_reference(&pc(x, y, 30), 30).unwrap();
            let lo = zeta_reference(&pc(x, y, 15), 15).unwrap();
            let d = (&hi - &lo).abs().to_f64();
            assert!(d < 1e-11, "({x},{y}): {d}");
        }
    }

    #[test]
    fn first_zero_from_hardy_z_sign_change() {
        // locate the sign change of Z on [14, 14.3] by bisection
        let (mut lo, mut hi) = (14.0f64, 14.3f64);
        let zlo = hardy_z(lo, 25).unwrap();
        assert!(zlo * hardy_z(hi, 25).unwrap() < 0.0);
        for _ in 0..45 {
            let mid = 0.5 * (lo + hi);
            if hardy_z(mid, 25).unwrap() * zlo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let gamma1 = 0.5 * (lo + hi);
        assert!((gamma1 - 14.134_725_141_734_693).abs() < 1e-9, "{gamma1}");
        let z = zeta_reference(&pc(0.5, 14.134_725_141_7, 30), 30).unwrap();
        assert!(z.abs().to_f64() < 1e-6);
    }

    #[test]
    fn precision_levels_agree() {
        let s = pc(0.5, 77.7, 50);
        let a = zeta_reference(&s, 30).unwrap();
        let b = zeta_reference(&s, 40).unwrap();
        assert_eq!(a.digits(), 30);
        assert!((&a - &b).abs().to_f64() < 1e-29);
    }

    #[test]
    fn functional_equation_holds() {
        let digits = 25;
        for (x, y) in [(0.2, 3.0), (0.5, 40.0), (0.9, 300.0)] {
            let s = pc(x, y, digits);
            let one_minus_s = &PrecisionComplex::one(digits) - &s;
            let lhs = zeta_reference(&one_minus_s, digits).unwrap();
            let c = chi(&one_minus_s, ChiMode::Exact).unwrap();
            let rhs = &c * &zeta_reference(&s, digits).unwrap();
            let rel = (&lhs - &rhs).abs().to_f64() / lhs.abs().to_f64();
            assert!(rel < 1e-20, "({x},{y}): {rel}");
            let prod = &chi(&s, ChiMode::Exact).unwrap() * &c;
            assert!((&prod - &PrecisionComplex::one(digits)).abs().to_f64() < 1e-20);
        }
    }

    #[test]
    fn afe_single_term_at_two_pi() {
        let table = divisor_sieve(10).unwrap();
        let got = zeta_sq_critical_approx(TAU, &table).unwrap();
        let c = chi(&pc(0.5, -TAU, 30), ChiMode::Exact).unwrap().to_c64();
        assert!((got - 2.0 * c.re).abs() < 1e-14);
    }

    #[test]
    fn afe_close_to_reference_at_100() {
        let table = divisor_sieve(100).unwrap();
        let approx = zeta_sq_critical_approx(100.0, &table).unwrap();
        let exact = zeta_sq_reference(100.0).unwrap();
        assert!((approx - exact).abs() <= 5.0 * 100f64.powf(-1.0 / 6.0));
    }

    #[test]
    fn afe_precision_paths_agree() {
        let table = divisor_sieve(2000).unwrap();
        let t = 4321.5;
        let fast = zeta_sq_critical_approx(t, &table).unwrap();
        let slow = zeta_sq_critical_approx_with(t, &table, 40).unwrap();
        assert!((fast - slow).abs() < 1e-11, "{fast} {slow}");
        assert!(matches!(
            zeta_sq_critical_approx_with(t, &table, 20),
            Err(Error::Precision { .. })
        ));
    }

    #[test]
    fn afe_rejects_bad_heights() {
        let table = divisor_sieve(10).unwrap();
        assert!(matches!(
            zeta_sq_critical_approx(3.0, &table),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            zeta_sq_critical_approx(1000.0, &table),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn motohashi_compositions() {
        let table = divisor_sieve(100).unwrap();
        let at_2pi = motohashi_residual(TAU, &table).unwrap();
        assert!((at_2pi + std::f64::consts::SQRT_2 * delta(1.0, &table).unwrap()).abs() < 1e-15);
        let t = 8.0 * std::f64::consts::PI.powi(2);
        let x = 4.0 * std::f64::consts::PI;
        let want = -std::f64::consts::SQRT_2 / x.sqrt() * delta(x, &table).unwrap();
        assert!((motohashi_residual(t, &table).unwrap() - want).abs() < 1e-13);
    }
}
