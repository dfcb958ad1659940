//! Multi-precision scalars: working-precision bookkeeping, certified constants,
//! Bernoulli numbers, and a complex type carried on MPFR reals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Smallest working precision ever carried by a [`PrecisionComplex`].
pub const MIN_DIGITS: u32 = 15;
/// Hard cap on requested working precision.
pub const MAX_DIGITS: u32 = 200_000;
/// Guard bits added on top of the decimal working precision.
const GUARD_BITS: u32 = 24;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Binary precision carrying `digits` decimal digits plus guard bits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (f64::from(digits) * LOG2_10).ceil() as u32 + GUARD_BITS
}

pub(crate) fn check_digits(what: &'static str, digits: u32) -> Result<()> {
    if digits > MAX_DIGITS {
        return Err(Error::Resource {
            what,
            requested: f64::from(digits),
            cap: f64::from(MAX_DIGITS),
        });
    }
    Ok(())
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn two_pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi) * 2u32
}

/// Euler's constant to 50 decimal places.
const EULER_GAMMA_50: &str = "0.57721566490153286060651209008240243104215933593992";

/// Euler's constant, taken from the stored literal after a one-time check
/// against [`euler_gamma_series`] at 40 digits.
pub fn euler_gamma() -> Float {
    static GAMMA: OnceLock<Float> = OnceLock::new();
    GAMMA
        .get_or_init(|| {
            let prec = bits_for_digits(50);
            let literal = Float::with_val(prec, Float::parse(EULER_GAMMA_50).expect("literal"));
            let series = euler_gamma_series(40);
            let diff = Float::with_val(prec, &literal - &series).abs();
            assert!(
                diff < Float::with_val(prec, Float::i_exp(1, -133)),
                "Euler constant self-check failed: literal and series differ by {diff}"
            );
            literal
        })
        .clone()
}

pub fn euler_gamma_f64() -> f64 {
    euler_gamma().to_f64()
}

/// Euler's constant by the Brent–McMillan series
/// `gamma = A/B - ln n`, `A = sum (n^k/k!)^2 H_k`, `B = sum (n^k/k!)^2`,
/// whose truncation error is below `pi e^{-4n}`.
pub fn euler_gamma_series(digits: u32) -> Float {
    let prec = bits_for_digits(digits + 10);
    let n = (f64::from(digits) * std::f64::consts::LN_10 / 4.0).ceil() as u32 + 2;
    let n2 = Float::with_val(prec, n) * n;
    let mut term = Float::with_val(prec, 1);
    let mut harmonic = Float::with_val(prec, 0);
    let mut a = Float::with_val(prec, 0);
    let mut b = Float::with_val(prec, 1);
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32) - 8));
    let mut k = 1u32;
    loop {
        term *= &n2;
        term /= k;
        term /= k;
        harmonic += Float::with_val(prec, 1) / k;
        a += Float::with_val(prec, &term * &harmonic);
        b += &term;
        if term < Float::with_val(prec, &b * &eps) && k > n {
            break;
        }
        k += 1;
    }
    let ln_n = Float::with_val(prec, Float::ln_u(n));
    Float::with_val(prec, a / b) - ln_n
}

/// Even-index Bernoulli number `B_{2j}` as an exact rational.
pub fn bernoulli_even(j: usize) -> Rational {
    static CACHE: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![Rational::from(1)]));
    let mut table = cache.lock().expect("bernoulli cache poisoned");
    while table.len() <= j {
        // B_n = -1/(n+1) * sum_{k<n} C(n+1, k) B_k, with B_1 = -1/2 and
        // odd-index numbers beyond B_1 vanishing.
        let n = 2 * table.len() as u32;
        let mut acc = Rational::from(1);
        acc += Rational::from((Integer::from(n + 1), -2));
        for (idx, bk) in table.iter().enumerate().skip(1) {
            let binom = Integer::from(n + 1).binomial(2 * idx as u32);
            acc += Rational::from(bk * binom);
        }
        let next = -acc / Rational::from(n + 1);
        table.push(next);
    }
    table[j].clone()
}

/// Complex number on a pair of MPFR reals with its working precision in
/// decimal digits. Binary operations keep the smaller precision of the two.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionComplex {
    re: Float,
    im: Float,
    digits: u32,
}

impl PrecisionComplex {
    pub fn new(re: Float, im: Float, digits: u32) -> Self {
        let digits = digits.max(MIN_DIGITS);
        let prec = bits_for_digits(digits);
        PrecisionComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
            digits,
        }
    }

    pub fn from_f64(re: f64, im: f64, digits: u32) -> Self {
        let digits = digits.max(MIN_DIGITS);
        let prec = bits_for_digits(digits);
        PrecisionComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
            digits,
        }
    }

    pub fn from_c64(z: Complex64, digits: u32) -> Self {
        Self::from_f64(z.re, z.im, digits)
    }

    pub fn from_real(re: Float, digits: u32) -> Self {
        Self::new(re, Float::new(2), digits)
    }

    pub fn zero(digits: u32) -> Self {
        Self::from_f64(0.0, 0.0, digits)
    }

    pub fn one(digits: u32) -> Self {
        Self::from_f64(1.0, 0.0, digits)
    }

    /// `e^{i theta}`.
    pub fn cis(theta: &Float, digits: u32) -> Self {
        let prec = bits_for_digits(digits.max(MIN_DIGITS));
        let (s, c) = Float::with_val(prec, theta).sin_cos(Float::new(prec));
        Self::new(c, s, digits)
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    /// Same value re-rounded to another working precision.
    pub fn with_digits(&self, digits: u32) -> Self {
        Self::new(self.re.clone(), self.im.clone(), digits)
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn norm_sqr(&self) -> Float {
        let prec = self.prec();
        Float::with_val(prec, self.re.square_ref()) + Float::with_val(prec, self.im.square_ref())
    }

    pub fn abs(&self) -> Float {
        self.re.clone().hypot(&self.im)
    }

    pub fn arg(&self) -> Float {
        self.im.clone().atan2(&self.re)
    }

    pub fn conj(&self) -> Self {
        PrecisionComplex {
            re: self.re.clone(),
            im: -self.im.clone(),
            digits: self.digits,
        }
    }

    pub fn mul_real(&self, r: &Float) -> Self {
        let prec = self.prec();
        PrecisionComplex {
            re: Float::with_val(prec, &self.re * r),
            im: Float::with_val(prec, &self.im * r),
            digits: self.digits,
        }
    }

    pub fn scale(&self, r: f64) -> Self {
        PrecisionComplex {
            re: self.re.clone() * r,
            im: self.im.clone() * r,
            digits: self.digits,
        }
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr();
        let prec = self.prec();
        PrecisionComplex {
            re: Float::with_val(prec, &self.re / &n),
            im: -Float::with_val(prec, &self.im / &n),
            digits: self.digits,
        }
    }

    pub fn div(&self, rhs: &Self) -> Self {
        self * &rhs.recip()
    }

    pub fn exp(&self) -> Self {
        let prec = self.prec();
        let m = self.re.clone().exp();
        let (s, c) = self.im.clone().sin_cos(Float::new(prec));
        PrecisionComplex {
            re: Float::with_val(prec, &m * &c),
            im: Float::with_val(prec, &m * &s),
            digits: self.digits,
        }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        PrecisionComplex {
            re: self.abs().ln(),
            im: self.arg(),
            digits: self.digits,
        }
    }

    pub fn sin(&self) -> Self {
        let prec = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(prec));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(prec));
        PrecisionComplex {
            re: Float::with_val(prec, &s * &ch),
            im: Float::with_val(prec, &c * &sh),
            digits: self.digits,
        }
    }

    pub fn cos(&self) -> Self {
        let prec = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(prec));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(prec));
        PrecisionComplex {
            re: Float::with_val(prec, &c * &ch),
            im: -Float::with_val(prec, &s * &sh),
            digits: self.digits,
        }
    }

    /// `base^self` for a positive real base.
    pub fn real_base_pow(base: &Float, exponent: &Self) -> Self {
        let ln_base = Float::with_val(exponent.prec(), base.ln_ref());
        exponent.mul_real(&ln_base).exp()
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one(self.digits);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<'a> Add<&'a PrecisionComplex> for &'a PrecisionComplex {
    type Output = PrecisionComplex;
    fn add(self, rhs: &'a PrecisionComplex) -> PrecisionComplex {
        let digits = self.digits.min(rhs.digits);
        let prec = bits_for_digits(digits);
        PrecisionComplex {
            re: Float::with_val(prec, &self.re + &rhs.re),
            im: Float::with_val(prec, &self.im + &rhs.im),
            digits,
        }
    }
}

impl<'a> Sub<&'a PrecisionComplex> for &'a PrecisionComplex {
    type Output = PrecisionComplex;
    fn sub(self, rhs: &'a PrecisionComplex) -> PrecisionComplex {
        let digits = self.digits.min(rhs.digits);
        let prec = bits_for_digits(digits);
        PrecisionComplex {
            re: Float::with_val(prec, &self.re - &rhs.re),
            im: Float::with_val(prec, &self.im - &rhs.im),
            digits,
        }
    }
}

impl<'a> Mul<&'a PrecisionComplex> for &'a PrecisionComplex {
    type Output = PrecisionComplex;
    fn mul(self, rhs: &'a PrecisionComplex) -> PrecisionComplex {
        let digits = self.digits.min(rhs.digits);
        let prec = bits_for_digits(digits);
        let ac = Float::with_val(prec, &self.re * &rhs.re);
        let bd = Float::with_val(prec, &self.im * &rhs.im);
        let ad = Float::with_val(prec, &self.re * &rhs.im);
        let bc = Float::with_val(prec, &self.im * &rhs.re);
        PrecisionComplex {
            re: ac - bd,
            im: ad + bc,
            digits,
        }
    }
}

impl Neg for PrecisionComplex {
    type Output = PrecisionComplex;
    fn neg(self) -> PrecisionComplex {
        PrecisionComplex {
            re: -self.re,
            im: -self.im,
            digits: self.digits,
        }
    }
}

impl fmt::Display for PrecisionComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.digits as usize;
        write!(
            f,
            "{} {} {}i",
            self.re.to_string_radix(10, Some(d)),
            if self.im.is_sign_negative() { '-' } else { '+' },
            Float::with_val(self.prec(), self.im.abs_ref()).to_string_radix(10, Some(d))
        )
    }
}

/// Principal-branch `ln Gamma(z)` for `Re z > 0` by upward shift and the
/// Stirling series with its rigorous remainder bound.
pub fn ln_gamma(z: &PrecisionComplex) -> Result<PrecisionComplex> {
    if z.re().to_f64() <= 0.0 {
        return Err(Error::domain("ln_gamma requires Re z > 0"));
    }
    let digits = z.digits();
    let prec = z.prec();
    let radius = 0.4 * f64::from(digits) + 12.0;
    let mut w = z.clone();
    let mut shift_logs = PrecisionComplex::zero(digits);
    let one = PrecisionComplex::one(digits);
    if z.abs().to_f64() < radius {
        let shift = (radius - z.re().to_f64()).ceil().max(0.0) as u32;
        for _ in 0..shift {
            shift_logs = &shift_logs + &w.ln();
            w = &w + &one;
        }
    }

    let half = PrecisionComplex::from_f64(0.5, 0.0, digits);
    let ln_w = w.ln();
    let mut acc = &(&(&w - &half) * &ln_w) - &w;
    let half_ln_2pi = Float::with_val(prec, two_pi(prec).ln()) / 2u32;
    acc = &acc + &PrecisionComplex::from_real(half_ln_2pi, digits);

    let w_abs = w.abs().to_f64();
    // sec(arg w / 2)^2 from the remainder bound
    let half_arg = w.arg().to_f64() / 2.0;
    let sec2 = 1.0 / half_arg.cos().powi(2);
    let target = -(f64::from(digits) + 2.0) * std::f64::consts::LN_10;
    let inv_w = w.recip();
    let inv_w2 = &inv_w * &inv_w;
    let mut power = inv_w.clone();
    let max_terms = (std::f64::consts::PI * w_abs) as usize;
    let mut j = 1usize;
    loop {
        if j > max_terms {
            return Err(Error::Precision {
                what: "ln_gamma Stirling series",
                required: digits,
                available: digits,
            });
        }
        let b = bernoulli_even(j);
        let denom = Integer::from((2 * j) * (2 * j - 1));
        let coeff = Float::with_val(prec, &b / Rational::from(denom));
        acc = &acc + &power.mul_real(&coeff);
        power = &power * &inv_w2;

        // bound on the remainder after the j-th term
        let next = Float::with_val(64, &bernoulli_even(j + 1)).abs().to_f64();
        let m = (j + 1) as f64;
        let log_bound =
            next.ln() - ((2.0 * m) * (2.0 * m - 1.0)).ln() - (2.0 * m - 1.0) * w_abs.ln()
                + m * sec2.ln();
        if log_bound < target {
            break;
        }
        j += 1;
    }
    Ok(&acc - &shift_logs)
}

/// Natural logarithm of a big integer as `f64`, valid beyond the `f64` range.
pub fn ln_integer(n: &Integer) -> f64 {
    let (mantissa, exp) = n.to_f64_exp();
    mantissa.ln() + f64::from(exp) * std::f64::consts::LN_2
}

/// `10^{-digits}` at the precision matching `digits`.
pub fn ten_pow_neg(digits: u32) -> Float {
    let prec = bits_for_digits(digits);
    Float::with_val(prec, 10u32).pow(-(digits as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_grow_with_digits() {
        assert!(bits_for_digits(30) > bits_for_digits(15));
        assert_eq!(bits_for_digits(0), GUARD_BITS);
    }

    #[test]
    fn euler_gamma_matches_mpfr_constant() {
        let prec = bits_for_digits(45);
        let reference = Float::with_val(prec, Constant::Euler);
        let series = euler_gamma_series(45);
        let diff = Float::with_val(prec, &reference - &series).abs().to_f64();
        assert!(diff < 1e-44, "diff {diff}");
        let lit = euler_gamma();
        let diff = Float::with_val(prec, &reference - &lit).abs().to_f64();
        assert!(diff < 1e-49, "diff {diff}");
    }

    #[test]
    fn bernoulli_numbers() {
        assert_eq!(bernoulli_even(0), Rational::from(1));
        assert_eq!(bernoulli_even(1), Rational::from((1, 6)));
        assert_eq!(bernoulli_even(2), Rational::from((-1, 30)));
        assert_eq!(bernoulli_even(3), Rational::from((1, 42)));
        assert_eq!(bernoulli_even(6), Rational::from((691, -2730)));
        assert_eq!(bernoulli_even(7), Rational::from((7, 6)));
    }

    #[test]
    fn ln_gamma_real_points() {
        let digits = 40;
        let prec = bits_for_digits(digits);
        for x in [0.5, 1.0, 2.5, 7.0, 33.25] {
            let z = PrecisionComplex::from_f64(x, 0.0, digits);
            let got = ln_gamma(&z).unwrap();
            let (want, _) = Float::with_val(prec, x).ln_abs_gamma();
            let diff = Float::with_val(prec, got.re() - &want).abs().to_f64();
            assert!(diff < 1e-38, "x={x}: diff {diff}");
            assert!(got.im().to_f64().abs() < 1e-38);
        }
    }

    #[test]
    fn ln_gamma_recurrence_off_axis() {
        // ln Gamma(z+1) - ln Gamma(z) = ln z on the principal branch for Re z > 0
        let digits = 30;
        for (x, y) in [(0.25, 3.0), (0.75, -40.0), (0.5, 1000.0)] {
            let z = PrecisionComplex::from_f64(x, y, digits);
            let z1 = &z + &PrecisionComplex::one(digits);
            let lhs = &ln_gamma(&z1).unwrap() - &ln_gamma(&z).unwrap();
            let d = (&lhs - &z.ln()).abs().to_f64();
            assert!(d < 1e-24, "({x},{y}): {d}");
        }
    }

    #[test]
    fn complex_ops_keep_min_digits() {
        let a = PrecisionComplex::from_f64(1.0, 2.0, 40);
        let b = PrecisionComplex::from_f64(3.0, -1.0, 20);
        let c = &a * &b;
        assert_eq!(c.digits(), 20);
        assert_eq!(c.to_c64(), Complex64::new(5.0, 5.0));
        let q = a.div(&b);
        let back = &q * &b;
        assert!((back.to_c64() - a.to_c64()).norm() < 1e-15);
        assert_eq!(PrecisionComplex::from_f64(1.0, 0.0, 3).digits(), MIN_DIGITS);
    }

    #[test]
    fn exp_ln_sin_cos_identities() {
        let z = PrecisionComplex::from_f64(0.3, -1.7, 35);
        let round = z.ln().exp();
        assert!((&round - &z).abs().to_f64() < 1e-33);
        let s = z.sin();
        let c = z.cos();
        let one = &(&s * &s) + &(&c * &c);
        assert!((&one - &PrecisionComplex::one(35)).abs().to_f64() < 1e-33);
    }

    #[test]
    fn ln_integer_large() {
        let n = Integer::from(10u32).pow(400u32);
        let v = ln_integer(&n);
        assert!((v - 400.0 * std::f64::consts::LN_10).abs() < 1e-9);
    }
}
