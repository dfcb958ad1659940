//! Continued fractions of `e^{pi k}`: certified expansion, convergents and the
//! growth diagnostics for the partial quotients.

use rug::float::Constant;
use rug::{Float, Integer, Rational};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mp::{bits_for_digits, check_digits, ln_integer};

/// Default working precision of [`continued_fraction`].
pub const DEFAULT_CF_DIGITS: u32 = 10_000;
/// Extra digits of the certifying recomputation.
pub const CERTIFY_EXTRA_DIGITS: u32 = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFractionRecord {
    pub k: i32,
    pub digits_used: u32,
    /// `a_0, ..., a_{certified_upto}`.
    pub quotients: Vec<Integer>,
    /// `None` when not even `a_0` survived the recomputation.
    pub certified_upto: Option<usize>,
}

impl ContinuedFractionRecord {
    /// Record built from quotients already known to be exact.
    pub fn from_quotients(k: i32, digits_used: u32, quotients: Vec<Integer>) -> Self {
        let certified_upto = quotients.len().checked_sub(1);
        ContinuedFractionRecord {
            k,
            digits_used,
            quotients,
            certified_upto,
        }
    }

    pub fn certified_len(&self) -> usize {
        self.certified_upto.map_or(0, |n| n + 1)
    }

    fn certified(&self) -> Result<&[Integer]> {
        match self.certified_upto {
            Some(n) => Ok(&self.quotients[..=n]),
            None => Err(Error::Uncertified(format!(
                "continued fraction of e^(pi*{}) has no certified quotient",
                self.k
            ))),
        }
    }
}

impl Serialize for ContinuedFractionRecord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            k: i32,
            digits_used: u32,
            quotients: Vec<String>,
            certified_upto: &'a Option<usize>,
        }
        Wire {
            k: self.k,
            digits_used: self.digits_used,
            quotients: self.quotients.iter().map(Integer::to_string).collect(),
            certified_upto: &self.certified_upto,
        }
        .serialize(s)
    }
}

fn check_k(k: i32) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("e^(pi k) needs a nonzero k"));
    }
    Ok(())
}

/// `e^{pi k}` with absolute error below `10^{-digits}`.
pub fn exp_pi_k(k: i32, digits: u32) -> Result<Float> {
    check_k(k)?;
    check_digits("exp_pi_k", digits)?;
    // the integer part and the relative error amplification |pi k| both
    // consume bits on top of the fractional digits
    let kf = f64::from(k);
    let int_bits = (std::f64::consts::PI * kf.max(0.0) / std::f64::consts::LN_2).ceil() as u32;
    let amp_bits = (std::f64::consts::PI * kf.abs()).log2().max(0.0).ceil() as u32;
    let prec = bits_for_digits(digits + 10) + int_bits + amp_bits + 8;
    let mut x = Float::with_val(prec, Constant::Pi) * k;
    x.exp_mut();
    Ok(x)
}

/// Partial quotients of the exact rational value of `x`, at most `limit` of them.
fn quotients_of(x: &Float, limit: usize) -> Vec<Integer> {
    let (mantissa, exp) = x.to_integer_exp().expect("finite value");
    let (mut num, mut den) = if exp >= 0 {
        (mantissa << exp as u32, Integer::from(1))
    } else {
        (mantissa, Integer::from(1) << (-exp) as u32)
    };
    let mut out = Vec::new();
    while out.len() < limit && den != 0 {
        let (q, r) = num.div_rem_floor(den.clone());
        out.push(q);
        num = den;
        den = r;
    }
    out
}

/// Expansion of `e^{pi k}` at `digits`, certified against a recomputation
/// at `digits + 20`; only the common prefix of the two expansions is kept,
/// and never the final quotient of a terminating expansion.
pub fn continued_fraction(k: i32, n_terms: usize, digits: u32) -> Result<ContinuedFractionRecord> {
    let hi = digits.saturating_add(CERTIFY_EXTRA_DIGITS);
    check_digits("continued_fraction", hi)?;
    let lo_q = quotients_of(&exp_pi_k(k, digits)?, n_terms + 1);
    let hi_q = quotients_of(&exp_pi_k(k, hi)?, n_terms + 1);
    let mut agree = lo_q.iter().zip(&hi_q).take_while(|(a, b)| a == b).count();
    if agree == lo_q.len() && lo_q.len() <= n_terms {
        // the low-precision expansion terminated: its last quotient absorbs
        // the rounding of the value
        agree = agree.saturating_sub(1);
    }
    let keep = agree.min(n_terms);
    let mut quotients = lo_q;
    quotients.truncate(keep);
    Ok(ContinuedFractionRecord {
        k,
        digits_used: digits,
        certified_upto: keep.checked_sub(1),
        quotients,
    })
}

/// `(p_i, q_i)` from `p_i = a_i p_{i-1} + p_{i-2}`, `q_i = a_i q_{i-1} + q_{i-2}`.
pub fn convergents(quotients: &[Integer]) -> Vec<(Integer, Integer)> {
    let (mut p2, mut q2) = (Integer::from(0), Integer::from(1));
    let (mut p1, mut q1) = (Integer::from(1), Integer::from(0));
    let mut out = Vec::with_capacity(quotients.len());
    for a in quotients {
        let p = Integer::from(a * &p1) + &p2;
        let q = Integer::from(a * &q1) + &q2;
        p2 = std::mem::replace(&mut p1, p.clone());
        q2 = std::mem::replace(&mut q1, q.clone());
        out.push((p, q));
    }
    out
}

/// Whether `p_i q_{i-1} - p_{i-1} q_i = (-1)^{i-1}` holds for every `i >= 1`.
pub fn determinant_identity_holds(conv: &[(Integer, Integer)]) -> bool {
    conv.windows(2).enumerate().all(|(j, w)| {
        let i = j + 1;
        let det = Integer::from(&w[1].0 * &w[0].1) - Integer::from(&w[0].0 * &w[1].1);
        let sign = if i % 2 == 1 { 1 } else { -1 };
        det == sign
    })
}

/// Outcome of the growth inequality at one index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma1Status {
    /// `a_n <= e`: `log log a_n` is not positive.
    Vacuous,
    Pass,
    Fail,
    /// `a_n > e` while `(n + log|k|) log(n + log|k|) <= 0`: no `c > 0` works.
    Unsatisfiable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub k: i32,
    pub c: f64,
    pub statuses: Vec<Lemma1Status>,
    /// `max log log a_n / ((n + log|k|) log(n + log|k|))` over the indices
    /// where the right factor is positive and `a_n > e`.
    pub min_c: Option<f64>,
    pub unsatisfiable: Vec<usize>,
}

impl Lemma1Report {
    pub fn all_pass(&self) -> bool {
        self.statuses
            .iter()
            .all(|s| matches!(s, Lemma1Status::Pass | Lemma1Status::Vacuous))
    }
}

fn lemma1_rhs_factor(n: usize, k: i32) -> f64 {
    let u = n as f64 + f64::from(k.unsigned_abs()).ln();
    if u == 0.0 {
        0.0
    } else {
        u * u.ln()
    }
}

/// `log log a_n(k) < c (n + log|k|) log(n + log|k|)` on every certified index.
pub fn lemma1_check(record: &ContinuedFractionRecord, c: f64) -> Result<Lemma1Report> {
    if !(c > 0.0) {
        return Err(Error::domain(format!(
            "lemma constant must be positive, got {c}"
        )));
    }
    let qs = record.certified()?;
    let mut statuses = Vec::with_capacity(qs.len());
    let mut min_c: Option<f64> = None;
    let mut unsatisfiable = Vec::new();
    for (n, a) in qs.iter().enumerate() {
        let lnln = if *a >= 3 {
            ln_integer(a).ln()
        } else {
            f64::NEG_INFINITY
        };
        if lnln <= 0.0 {
            statuses.push(Lemma1Status::Vacuous);
            continue;
        }
        let psi = lemma1_rhs_factor(n, record.k);
        if psi <= 0.0 {
            statuses.push(Lemma1Status::Unsatisfiable);
            unsatisfiable.push(n);
            continue;
        }
        let need = lnln / psi;
        min_c = Some(min_c.map_or(need, |m: f64| m.max(need)));
        statuses.push(if lnln < c * psi {
            Lemma1Status::Pass
        } else {
            Lemma1Status::Fail
        });
    }
    Ok(Lemma1Report {
        k: record.k,
        c,
        statuses,
        min_c,
        unsatisfiable,
    })
}

/// One constant for several expansions: the largest per-record minimum.
pub fn pooled_min_c(reports: &[Lemma1Report]) -> Option<f64> {
    reports
        .iter()
        .filter_map(|r| r.min_c)
        .fold(None, |acc: Option<f64>, c| {
            Some(acc.map_or(c, |a| a.max(c)))
        })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaldschmidtCheck {
    pub k: u32,
    pub p: String,
    pub q: String,
    /// `log10 |e^{pi k} - p/q|`.
    pub lhs_log10: f64,
    /// `log10 exp(-2^72 log(2k) log p log log p)`.
    pub rhs_log10: f64,
    pub pass: bool,
    /// The right side is below the smallest magnitude the working precision resolves.
    pub rhs_below_precision_floor: bool,
}

/// `|e^{pi k} - p/q| > exp(-2^72 log(2k) log p log log p)` for `p >= 3`.
pub fn waldschmidt_check(k: u32, p: &Integer, q: &Integer) -> Result<WaldschmidtCheck> {
    if k == 0 {
        return Err(Error::domain("Waldschmidt bound needs k >= 1"));
    }
    if *p < 3 {
        return Err(Error::domain(format!(
            "Waldschmidt bound needs p >= 3 so that log log p > 0, got p = {p}"
        )));
    }
    if *q < 1 {
        return Err(Error::domain("Waldschmidt bound needs q >= 1"));
    }
    let k_i32 = i32::try_from(k).map_err(|_| Error::domain("k too large"))?;
    let q_digits = (ln_integer(q) / std::f64::consts::LN_10).ceil() as u32;
    let digits = 2 * q_digits + 40;
    let x = exp_pi_k(k_i32, digits)?;
    let ratio = Rational::from((p.clone(), q.clone()));
    let diff = Float::with_val(x.prec(), &x - &ratio).abs();
    let lhs_log10 = if diff.is_zero() {
        f64::NEG_INFINITY
    } else {
        let (m, e) = diff.to_f64_exp();
        m.abs().log10() + f64::from(e) * std::f64::consts::LOG10_2
    };
    let ln_p = ln_integer(p);
    let exponent = 2f64.powi(72) * (2.0 * f64::from(k)).ln() * ln_p * ln_p.ln();
    let rhs_log10 = -exponent / std::f64::consts::LN_10;
    Ok(WaldschmidtCheck {
        k,
        p: p.to_string(),
        q: q.to_string(),
        lhs_log10,
        rhs_log10,
        pass: lhs_log10 > rhs_log10,
        rhs_below_precision_floor: rhs_log10 < -f64::from(digits),
    })
}

/// Largest `log q_{i+1} / log q_i + 1` over the second half of the
/// certified convergents with `q_i > 1`.
pub fn irrationality_exponent_estimate(record: &ContinuedFractionRecord) -> Result<f64> {
    let qs = record.certified()?;
    if qs.len() < 4 {
        return Err(Error::domain(format!(
            "exponent estimate needs certified_upto >= 3, got {}",
            qs.len() as i64 - 1
        )));
    }
    let conv = convergents(qs);
    let start = (qs.len() - 1) / 2;
    let mut best: Option<f64> = None;
    for i in start..conv.len() - 1 {
        let qi = &conv[i].1;
        if *qi <= 1 {
            continue;
        }
        let ratio = ln_integer(&conv[i + 1].1) / ln_integer(qi) + 1.0;
        best = Some(best.map_or(ratio, |b| b.max(ratio)));
    }
    best.ok_or_else(|| Error::domain("no convergent denominator exceeds 1"))
}
