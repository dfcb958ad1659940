//! Divisor-function arithmetic: sieve, halved prefix sums and the
//! divisor-problem error term `Delta(x)`.

use rug::Float;

use crate::error::{Error, Result};
use crate::mp::bits_for_digits;
pub use crate::mp::{euler_gamma, euler_gamma_f64};

/// Largest table the sieve will allocate unless told otherwise.
pub const DEFAULT_SIEVE_CAP: u64 = 1 << 27;

/// Working precision of [`delta_mp`].
pub const DELTA_DIGITS: u32 = 32;

/// `d(n)` for `1 <= n <= limit` together with prefix sums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisorTable {
    limit: u64,
    // index 0 is padding so that `values[n] = d(n)`
    values: Vec<u32>,
    prefix: Vec<u64>,
}

impl DivisorTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// `d(1), ..., d(limit)`.
    pub fn values(&self) -> &[u32] {
        &self.values[1..]
    }

    #[inline]
    pub fn d(&self, n: u64) -> u32 {
        self.values[n as usize]
    }

    /// `sum_{m <= n} d(m)`; zero for `n = 0`.
    #[inline]
    pub fn prefix(&self, n: u64) -> u64 {
        self.prefix[n as usize]
    }

    pub(crate) fn check_range(&self, what: &'static str, x: f64) -> Result<()> {
        if !(x.is_finite() && x <= self.limit as f64) {
            return Err(Error::OutOfRange {
                what,
                value: x,
                min: 0.0,
                max: self.limit as f64,
            });
        }
        Ok(())
    }
}

pub fn divisor_sieve(limit: u64) -> Result<DivisorTable> {
    divisor_sieve_with_cap(limit, DEFAULT_SIEVE_CAP)
}

pub fn divisor_sieve_with_cap(limit: u64, cap: u64) -> Result<DivisorTable> {
    if limit == 0 {
        return Err(Error::domain("divisor sieve needs N >= 1"));
    }
    if limit > cap {
        return Err(Error::Resource {
            what: "divisor sieve",
            requested: limit as f64,
            cap: cap as f64,
        });
    }
    let n = limit as usize;
    let mut values = vec![0u32; n + 1];
    for i in 1..=n {
        for j in (i..=n).step_by(i) {
            values[j] += 1;
        }
    }
    let mut prefix = vec![0u64; n + 1];
    for i in 1..=n {
        prefix[i] = prefix[i - 1] + u64::from(values[i]);
    }
    Ok(DivisorTable {
        limit,
        values,
        prefix,
    })
}

/// `sum'_{n <= x} d(n)` where the last term is halved when `x` is an integer.
pub fn divisor_sum_halved(x: f64, table: &DivisorTable) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "divisor_sum_halved needs x > 0, got {x}"
        )));
    }
    table.check_range("divisor_sum_halved", x)?;
    let n = x.floor() as u64;
    let full = table.prefix(n) as f64;
    if x == x.floor() {
        Ok(full - f64::from(table.d(n)) / 2.0)
    } else {
        Ok(full)
    }
}

fn delta_args(x: &Float, table: &DivisorTable) -> Result<u64> {
    let xf = x.to_f64();
    if !(xf >= 1.0) {
        return Err(Error::domain(format!("Delta(x) needs x >= 1, got {xf}")));
    }
    table.check_range("delta", xf)?;
    Ok(x.clone().floor().to_f64() as u64)
}

/// `Delta(x) = sum'_{n <= x} d(n) - x(log x + 2 gamma - 1) - 1/4` at
/// [`DELTA_DIGITS`] significant digits.
pub fn delta_mp(x: &Float, table: &DivisorTable) -> Result<Float> {
    let n = delta_args(x, table)?;
    let prec = bits_for_digits(DELTA_DIGITS) + x.prec().min(256);
    let mut sum = Float::with_val(prec, table.prefix(n));
    if x.is_integer() {
        sum -= Float::with_val(prec, table.d(n)) / 2u32;
    }
    let gamma = euler_gamma();
    let x = Float::with_val(prec, x);
    let mut bracket = Float::with_val(prec, x.ln_ref());
    bracket += Float::with_val(prec, &gamma * 2u32);
    bracket -= 1u32;
    let main = Float::with_val(prec, &x * &bracket);
    Ok(sum - main - Float::with_val(prec, 0.25))
}

pub fn delta(x: f64, table: &DivisorTable) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("Delta(x) needs finite x"));
    }
    let xf = Float::with_val(64, x);
    delta_mp(&xf, table).map(|v| v.to_f64())
}

/// One-sided limits `(Delta(n-), Delta(n+))` at an integer `n >= 1`.
pub fn delta_limits(n: u64, table: &DivisorTable) -> Result<(f64, f64)> {
    let mid = delta(n as f64, table)?;
    let half = f64::from(table.d(n)) / 2.0;
    Ok((mid - half, mid + half))
}

/// `max_{2 <= x <= limit} |Delta(x)| / x^{1/3}`.
///
/// `Delta` decreases between consecutive integers, so the supremum on
/// `[n, n+1)` is attained at `n+` or approached at `(n+1)-`.
pub fn delta_sup_ratio(limit: u64, table: &DivisorTable) -> Result<f64> {
    if limit < 2 {
        return Err(Error::domain("delta_sup_ratio needs limit >= 2"));
    }
    table.check_range("delta_sup_ratio", limit as f64)?;
    let two_gamma_m1 = 2.0 * euler_gamma_f64() - 1.0;
    let main = |x: f64| x * (x.ln() + two_gamma_m1) + 0.25;
    let mut best = 0.0f64;
    for n in 2..=limit {
        let x = n as f64;
        let right = table.prefix(n) as f64 - main(x);
        let left = table.prefix(n - 1) as f64 - main(x);
        let scale = x.cbrt();
        best = best.max(right.abs() / scale).max(left.abs() / scale);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_d(n: u64) -> u32 {
        (1..=n).filter(|k| n / k * k == n).count() as u32
    }

    #[test]
    fn small_tables() {
        assert_eq!(divisor_sieve(1).unwrap().values(), &[1]);
        let t = divisor_sieve(12).unwrap();
        assert_eq!(t.d(12), 6);
        assert_eq!(t.values(), &[1, 2, 2, 3, 2, 4, 2, 4, 3, 4, 2, 6]);
    }

    #[test]
    fn primes_have_two_divisors() {
        let t = divisor_sieve(1000).unwrap();
        for p in 2..=1000u64 {
            if (2..p).take_while(|q| q * q <= p).all(|q| p % q != 0) {
                assert_eq!(t.d(p), 2, "p={p}");
            }
        }
    }

    #[test]
    fn sieve_rejects_bad_sizes() {
        assert!(matches!(divisor_sieve(0), Err(Error::Domain(_))));
        assert!(matches!(
            divisor_sieve_with_cap(1001, 1000),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn halved_sums() {
        let t = divisor_sieve(10).unwrap();
        assert_eq!(divisor_sum_halved(4.0, &t).unwrap(), 6.5);
        assert_eq!(divisor_sum_halved(4.5, &t).unwrap(), 8.0);
        assert_eq!(divisor_sum_halved(1.0, &t).unwrap(), 0.5);
        assert_eq!(divisor_sum_halved(0.5, &t).unwrap(), 0.0);
        assert!(matches!(
            divisor_sum_halved(10.5, &t),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn delta_at_small_integers() {
        let t = divisor_sieve(10).unwrap();
        let g = euler_gamma_f64();
        assert!((delta(1.0, &t).unwrap() - (1.25 - 2.0 * g)).abs() < 1e-15);
        let want = 6.5 - 4.0 * (4f64.ln() + 2.0 * g - 1.0) - 0.25;
        assert!((delta(4.0, &t).unwrap() - want).abs() < 1e-14);
        assert!(delta(0.5, &t).is_err());
    }

    #[test]
    fn delta_mp_carries_thirty_digits() {
        let t = divisor_sieve(10).unwrap();
        let prec = bits_for_digits(40);
        let got = delta_mp(&Float::with_val(prec, 1), &t).unwrap();
        let want = Float::with_val(prec, 1.25) - euler_gamma() * 2u32;
        let diff = Float::with_val(prec, &got - &want).abs().to_f64();
        assert!(diff < 1e-30, "{diff}");
    }

    #[test]
    fn delta_jumps_by_d_n() {
        let t = divisor_sieve(200).unwrap();
        for n in [2u64, 12, 60, 97, 120, 180] {
            let eps = 1e-9;
            let jump = delta(n as f64 + eps, &t).unwrap() - delta(n as f64 - eps, &t).unwrap();
            assert!((jump - f64::from(t.d(n))).abs() < 1e-6, "n={n}: {jump}");
            let (l, r) = delta_limits(n, &t).unwrap();
            assert!((r - l - f64::from(t.d(n))).abs() < 1e-12);
        }
    }

    #[test]
    fn hyperbola_identity_to_ten_thousand() {
        let t = divisor_sieve(10_000).unwrap();
        for n in 1..=10_000u64 {
            let h: u64 = (1..=n).map(|j| n / j).sum();
            assert_eq!(t.prefix(n), h);
        }
    }

    #[test]
    fn delta_ratio_stable_under_doubling() {
        let t = divisor_sieve(100_000).unwrap();
        let mut prev = delta_sup_ratio(12_500, &t).unwrap();
        for limit in [25_000u64, 50_000, 100_000] {
            let cur = delta_sup_ratio(limit, &t).unwrap();
            assert!(
                cur.is_finite() && cur / prev <= 1.2,
                "{limit}: {prev} -> {cur}"
            );
            prev = cur;
        }
    }

    proptest! {
        #[test]
        fn sieve_matches_trial_division(n in 1u64..3000) {
            let t = divisor_sieve(n).unwrap();
            prop_assert_eq!(t.d(n), naive_d(n));
            prop_assert!(t.prefix(n) >= t.prefix(n - 1));
        }

        #[test]
        fn halving_matches_limits(x in 1.0f64..500.0) {
            let t = divisor_sieve(500).unwrap();
            let n = x.floor() as u64;
            let s = divisor_sum_halved(x, &t).unwrap();
            prop_assert!(s <= t.prefix(n) as f64);
            prop_assert!(s >= t.prefix(n) as f64 - f64::from(t.d(n)) / 2.0);
        }
    }
}
