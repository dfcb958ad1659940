//! Versioned harness constants and the routines that fit them.

use std::path::Path;

use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::divisor::{divisor_sieve, DivisorTable};
use crate::error::{Error, Result};
use crate::expsum::{wilton_identity_residual, WiltonQuery};
use crate::saddle::{s1_contributions, s2_report, DEFAULT_THETA};

const BUILTIN: &str = include_str!("../calibration/calibration.toml");

/// Constants that bound O-terms and tolerances at desk scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub version: String,
    /// `|zeta|^2` AFE error at the `t^{-1/6}` scale.
    pub afe_defect_const: f64,
    /// Largest AFE defect times `t^{1/4}` on the reference grid.
    pub afe_quarter_const: f64,
    /// Absolute bound on the truncated Poisson defect.
    pub poisson_const: f64,
    /// Multiplier of the saddle-point error scale.
    pub saddle_const: f64,
    /// Bound on the Wilton residual over `x^{1/2} log x`.
    pub wilton_const: f64,
    /// Envelope constant dominating `|S1(T)|`.
    pub s1_c_fit: f64,
    /// Bound on the S2 main-term gap over `T^{0.6}`.
    pub s2_const: f64,
    /// Relative tolerance of the fourth moment at `sigma = 0.8`.
    pub fourth_moment_tolerance: f64,
}

impl Calibration {
    /// The file shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN).expect("shipped calibration parses")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cal: Calibration = toml::from_str(s).map_err(|e| Error::Calibration(e.to_string()))?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Calibration(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("calibration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version.trim().is_empty() {
            return Err(Error::Calibration("version must be nonempty".into()));
        }
        let fields = [
            ("afe_defect_const", self.afe_defect_const),
            ("afe_quarter_const", self.afe_quarter_const),
            ("poisson_const", self.poisson_const),
            ("saddle_const", self.saddle_const),
            ("wilton_const", self.wilton_const),
            ("s1_c_fit", self.s1_c_fit),
            ("s2_const", self.s2_const),
            ("fourth_moment_tolerance", self.fourth_moment_tolerance),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Calibration(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Twelve `(x, eta)` pairs with `x` log-spaced on `[10^3, 10^5]` and
/// `eta^2 x` spread over `[0.3, 1]`.
pub fn wilton_pairs() -> Vec<(f64, f64)> {
    (0..12)
        .map(|i| {
            let s = f64::from(i) / 11.0;
            let x = 10f64.powf(3.0 + 2.0 * s).round();
            let eta = ((0.3 + 0.7 * s) / x).sqrt();
            (x, eta)
        })
        .collect()
}

/// Heights used for the S1 envelope fit.
pub const S1_GRID: [f64; 5] = [1000.0, 2000.0, 3000.0, 5000.0, 10000.0];
/// Heights used for the S2 main-term fit.
pub const S2_GRID: [f64; 5] = [500.0, 1000.0, 2000.0, 5000.0, 10000.0];

/// `residual / (x^{1/2} log x)` for each pair.
pub fn wilton_ratios(pairs: &[(f64, f64)], table: &DivisorTable) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(x, eta)| {
            let q = WiltonQuery::with_required_digits(x, Float::with_val(128, eta));
            let r = wilton_identity_residual(&q, table)?;
            Ok(r / (x.sqrt() * x.ln()))
        })
        .collect()
}

/// Largest `C` with `|S1(T)| <= T log T exp(-C log log T / log log log T)`.
pub fn s1_c_max(t: f64, s1_abs: f64) -> f64 {
    let l1 = t.ln();
    let l2 = l1.ln();
    let l3 = l2.ln();
    (t * l1 / s1_abs).ln() * l3 / l2
}

/// `|S1(T)|` at each height.
pub fn s1_magnitudes(grid: &[f64], theta: f64, table: &DivisorTable) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&t| s1_contributions(t, theta, table).map(|r| r.total_c64().norm()))
        .collect()
}

/// `|computed - predicted| / T^{0.6}` at each height.
pub fn s2_ratios(grid: &[f64], table: &DivisorTable) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|&t| {
            let r = s2_report(t, table)?;
            let gap = ((r.computed[0] - r.predicted[0]).powi(2)
                + (r.computed[1] - r.predicted[1]).powi(2))
            .sqrt();
            Ok(gap / t.powf(0.6))
        })
        .collect()
}

/// Refits the Wilton, S1 and S2 constants on the standard grids, keeping the
/// remaining fields of `base`. Fitted bounds carry a 25% margin and the S1
/// envelope constant a 10% one.
pub fn calibrate(base: &Calibration, version: &str) -> Result<Calibration> {
    let t_top = S1_GRID
        .iter()
        .chain(&S2_GRID)
        .fold(0.0f64, |a, b| a.max(*b));
    let x_top = wilton_pairs().iter().fold(0.0f64, |a, p| a.max(p.0));
    let table = divisor_sieve((t_top / std::f64::consts::PI).ceil().max(x_top) as u64 + 1)?;
    let wilton = wilton_ratios(&wilton_pairs(), &table)?
        .into_iter()
        .fold(0.0f64, f64::max);
    let s1 = s1_magnitudes(&S1_GRID, DEFAULT_THETA, &table)?;
    let c_min = S1_GRID
        .iter()
        .zip(&s1)
        .map(|(&t, &a)| s1_c_max(t, a))
        .fold(f64::INFINITY, f64::min);
    if !(c_min > 0.0) {
        return Err(Error::Calibration(format!(
            "no positive envelope constant dominates S1 on the grid (best {c_min})"
        )));
    }
    let s2 = s2_ratios(&S2_GRID, &table)?
        .into_iter()
        .fold(0.0f64, f64::max);
    let out = Calibration {
        version: version.to_string(),
        wilton_const: round_up(1.25 * wilton),
        s1_c_fit: round_down(0.9 * c_min),
        s2_const: round_up(1.25 * s2),
        ..base.clone()
    };
    out.validate()?;
    Ok(out)
}

fn round_up(v: f64) -> f64 {
    (v * 1000.0).ceil() / 1000.0
}

fn round_down(v: f64) -> f64 {
    (v * 1000.0).floor() / 1000.0
}
