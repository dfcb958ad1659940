//! Double-double phase reduction.
//!
//! Exponential sums in this crate need `e(theta) = exp(2 pi i theta)` for
//! phases `theta` far larger than one. The phase is carried as an unevaluated
//! sum `hi + lo` of two `f64` (about 31 significant digits), multiplied by the
//! integer or `f64` coordinate with an exact two-product, and reduced mod 1
//! before a single `f64` sine/cosine.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rug::Float;

use crate::mp::two_pi;

/// Working precision (decimal digits) of the double-double representation.
pub const DD_DIGITS: u32 = 31;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    pub fn from_float(x: &Float) -> Self {
        let hi = x.to_f64();
        let lo = Float::with_val(x.prec().max(64), x - hi).to_f64();
        Dd { hi, lo }
    }

    /// `(self * a) mod 1` in `[0, 1)`.
    #[inline]
    pub fn mul_frac(self, a: f64) -> f64 {
        let p = self.hi * a;
        let e = self.hi.mul_add(a, -p);
        let head = p - p.floor();
        let r = head + (e + self.lo * a);
        r - r.floor()
    }

    /// `self mod 1` in `[0, 1)`.
    pub fn frac(self) -> f64 {
        let head = self.hi - self.hi.floor();
        let r = head + self.lo;
        r - r.floor()
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;

    fn neg(self) -> Dd {
        Dd::new(-self.hi, -self.lo)
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;

    #[inline]
    fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let hi = s + e;
        Dd::new(hi, e - (hi - s))
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `ln(n) / (2 pi)` for `0 < n <= len`, shared process-wide and grown on
/// demand. Prime entries come from MPFR; composites add the entries of a
/// factorisation in double-double.
pub fn log_over_two_pi_table(len: u64) -> Arc<Vec<Dd>> {
    static TABLE: OnceLock<Mutex<Arc<Vec<Dd>>>> = OnceLock::new();
    let cell = TABLE.get_or_init(|| Mutex::new(Arc::new(vec![Dd::default(); 2])));
    let mut guard = cell.lock().expect("log table poisoned");
    if (guard.len() as u64) <= len {
        let target = (len + 1).max(2 * guard.len() as u64) as usize;
        *guard = Arc::new(build_log_table(target));
    }
    Arc::clone(&guard)
}

fn build_log_table(size: usize) -> Vec<Dd> {
    let prec = 160;
    let inv_two_pi = Float::with_val(prec, 1u32) / two_pi(prec);
    let mut smallest = vec![0u32; size];
    let mut table = vec![Dd::default(); size];
    for n in 2..size {
        if smallest[n] == 0 {
            for j in (n..size).step_by(n) {
                if smallest[j] == 0 {
                    smallest[j] = n as u32;
                }
            }
            let v = Float::with_val(prec, Float::ln_u(n as u32)) * &inv_two_pi;
            table[n] = Dd::from_float(&v);
        } else {
            let p = smallest[n] as usize;
            table[n] = table[p] + table[n / p];
        }
    }
    table
}

/// `exp(2 pi i x)` for an already reduced phase.
#[inline]
pub fn cis_turns(x: f64) -> Complex64 {
    let centered = x - x.round();
    let (s, c) = (std::f64::consts::TAU * centered).sin_cos();
    Complex64::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp::{bits_for_digits, two_pi};

    #[test]
    fn reduction_matches_mpfr() {
        let prec = bits_for_digits(60);
        let ln7 = Float::with_val(prec, Float::ln_u(7)) / two_pi(prec);
        let dd = Dd::from_float(&ln7);
        for t in [1.0, 1234.5, 98_765.0, 3.3e6] {
            let exact = Float::with_val(prec, &ln7 * t).fract().to_f64();
            let got = dd.mul_frac(t);
            let d = (exact - got).abs().min(1.0 - (exact - got).abs());
            assert!(d < 1e-15, "t={t}: {exact} vs {got}");
        }
    }

    #[test]
    fn log_table_matches_mpfr() {
        let table = log_over_two_pi_table(5000);
        let prec = 200;
        for n in [2u32, 3, 64, 97, 360, 4096, 4999] {
            let exact = Float::with_val(prec, Float::ln_u(n)) / two_pi(prec);
            let e = table[n as usize];
            let got = Float::with_val(prec, e.hi) + e.lo;
            let diff = Float::with_val(prec, &got - &exact);
            let rel = (diff / &exact).abs().to_f64();
            assert!(rel < 1e-30, "n={n}: {rel}");
        }
        assert_eq!(table[1], Dd::default());
    }

    #[test]
    fn frac_is_in_unit_interval() {
        for v in [-3.75, -1e-20, 0.0, 2.5, 1e9 + 0.25] {
            let f = Dd::new(v, 0.0).frac();
            assert!((0.0..1.0).contains(&f), "{v} -> {f}");
        }
    }

    #[test]
    fn cis_turns_quarter() {
        let z = cis_turns(0.25);
        assert!((z - Complex64::new(0.0, 1.0)).norm() < 1e-16);
    }
}
