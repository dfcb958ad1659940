//! Compensated accumulation and order-fixed parallel reduction.
//!
//! Reductions split the index range into blocks whose boundaries depend only
//! on the range, never on the thread count, and combine block results in
//! index order, so the rounded result is identical for any pool size.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

/// Neumaier-compensated sum of `f64`.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &ComplexSum) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Block length of the deterministic reductions.
pub const BLOCK: u64 = 4096;

fn blocks(range: Range<u64>) -> Vec<Range<u64>> {
    let mut out = Vec::new();
    let mut lo = range.start;
    while lo < range.end {
        let hi = (lo + BLOCK).min(range.end);
        out.push(lo..hi);
        lo = hi;
    }
    out
}

/// `sum_{j in range} f(j)` with fixed blocks reduced in parallel and merged
/// in order.
pub fn par_sum_complex<F>(range: Range<u64>, f: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let partial: Vec<ComplexSum> = blocks(range)
        .into_par_iter()
        .map(|block| {
            let mut acc = ComplexSum::new();
            for j in block {
                acc.add(f(j));
            }
            acc
        })
        .collect();
    let mut total = ComplexSum::new();
    for p in &partial {
        total.merge(p);
    }
    total.value()
}

pub fn par_sum_real<F>(range: Range<u64>, f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    let partial: Vec<KahanSum> = blocks(range)
        .into_par_iter()
        .map(|block| block.map(&f).collect::<KahanSum>())
        .collect();
    let mut total = KahanSum::new();
    for p in &partial {
        total.merge(p);
    }
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn parallel_sum_is_thread_count_independent() {
        let f = |j: u64| Complex64::new((j as f64).sqrt().sin(), 1.0 / (j as f64 + 1.0));
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(7)
            .build()
            .unwrap();
        let a = one.install(|| par_sum_complex(0..100_000, f));
        let b = many.install(|| par_sum_complex(0..100_000, f));
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    #[test]
    fn empty_range_sums_to_zero() {
        assert_eq!(par_sum_real(5..5, |j| j as f64), 0.0);
    }
}
