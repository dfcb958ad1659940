//! Run configuration: a flat `key = value` file overlaid by command-line
//! flags, validated against the cost caps of the selected subcommand.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use zmoment_core::divisor::DEFAULT_SIEVE_CAP;
use zmoment_core::expsum::{resonant_required_digits, RESONANT_DIGITS_CAP};
use zmoment_core::moments::{MomentMode, AFE_T_CAP, CONTINUOUS_T_CAP, REFERENCE_T_CAP};
use zmoment_core::mp::{MAX_DIGITS, MIN_DIGITS};
use zmoment_core::saddle::{DEFAULT_THETA, S_T_CAP};
use zmoment_core::zeta::ZETA_T_CAP;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Moment,
    Afe,
    Expsum,
    Saddle,
    Cf,
    Report,
    Calibrate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Moment => "moment",
            Command::Afe => "afe",
            Command::Expsum => "expsum",
            Command::Saddle => "saddle",
            Command::Cf => "cf",
            Command::Report => "report",
            Command::Calibrate => "calibrate",
        }
    }

    fn default_grid(self) -> Vec<f64> {
        match self {
            Command::Moment => vec![1000.0],
            Command::Afe => vec![100.0, 1000.0],
            Command::Expsum => vec![1000.0, 10000.0],
            Command::Saddle => vec![1000.0],
            Command::Report => vec![1000.0, 2000.0, 5000.0],
            Command::Cf | Command::Calibrate => Vec::new(),
        }
    }

    fn default_k(self) -> Vec<i32> {
        match self {
            Command::Cf => vec![1, 2, 3, 4],
            Command::Expsum => vec![1],
            _ => Vec::new(),
        }
    }
}

/// Every key a config file may set.
pub const KEYS: &[&str] = &[
    "precision",
    "grid",
    "k",
    "theta",
    "mode",
    "out",
    "threads",
    "calibration",
    "start",
    "continuous",
    "terms",
    "bound_exponent",
    "golden",
    "version_tag",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// `None` selects each module's own working precision.
    pub precision_digits: Option<u32>,
    pub t_grid: Vec<f64>,
    pub k_range: Vec<i32>,
    pub theta: f64,
    pub mode: MomentMode,
    pub start: u64,
    pub continuous: bool,
    pub terms: usize,
    pub bound_exponent: f64,
    pub output_dir: PathBuf,
    /// `None` leaves the thread count to the runtime.
    pub threads: Option<usize>,
    pub calibration_path: Option<PathBuf>,
    pub golden: Option<PathBuf>,
    pub version_tag: String,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("config line {}: expected key = value", i + 1)))?;
        let k = k.trim().to_string();
        if !KEYS.contains(&k.as_str()) {
            return Err(bad(format!("config line {}: unknown key {k:?}", i + 1)));
        }
        out.insert(k, v.trim().trim_matches('"').to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(format!("{key}: not a finite number: {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

/// `1..4`, `1,3,5` or a single integer.
fn parse_k(v: &str) -> Result<Vec<i32>, CliError> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let int = |s: &str| {
            s.trim()
                .parse::<i32>()
                .map_err(|_| bad(format!("k: not an integer: {s:?}")))
        };
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (int(a)?, int(b.trim_start_matches('='))?);
            if a > b {
                return Err(bad(format!("k: empty range {part}")));
            }
            out.extend(a..=b);
        } else {
            out.push(int(part)?);
        }
    }
    Ok(out)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn parse_uint(key: &str, v: &str) -> Result<u64, CliError> {
    v.trim()
        .parse::<u64>()
        .map_err(|_| bad(format!("{key}: not a nonnegative integer: {v:?}")))
}

impl RunConfig {
    /// Resolves `values` (file entries with overrides already applied) for
    /// `command` and validates the result.
    pub fn resolve(command: Command, values: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let get = |k: &str| values.get(k).map(String::as_str);
        let precision_digits = get("precision")
            .map(|v| parse_uint("precision", v).map(|d| d.min(u64::from(u32::MAX)) as u32))
            .transpose()?;
        let t_grid = match get("grid") {
            Some(v) => parse_list("grid", v)?,
            None => command.default_grid(),
        };
        let k_range = match get("k") {
            Some(v) => parse_k(v)?,
            None => command.default_k(),
        };
        let theta = get("theta")
            .map(|v| parse_f64("theta", v))
            .transpose()?
            .unwrap_or(DEFAULT_THETA);
        let mode = match get("mode") {
            Some(v) => v.parse::<MomentMode>().map_err(|e| bad(e.to_string()))?,
            None => MomentMode::default(),
        };
        let start = get("start")
            .map(|v| parse_uint("start", v))
            .transpose()?
            .unwrap_or(1);
        let continuous = get("continuous")
            .map(|v| parse_bool("continuous", v))
            .transpose()?
            .unwrap_or(true);
        let terms = get("terms")
            .map(|v| parse_uint("terms", v))
            .transpose()?
            .unwrap_or(100) as usize;
        let bound_exponent = get("bound_exponent")
            .map(|v| parse_f64("bound_exponent", v))
            .transpose()?
            .unwrap_or(1.0);
        let threads = match get("threads") {
            None | Some("auto") => None,
            Some(v) => Some(parse_uint("threads", v)? as usize),
        };
        let cfg = RunConfig {
            command,
            precision_digits,
            t_grid,
            k_range,
            theta,
            mode,
            start,
            continuous,
            terms,
            bound_exponent,
            output_dir: PathBuf::from(get("out").unwrap_or(".")),
            threads,
            calibration_path: get("calibration").map(PathBuf::from),
            golden: get("golden").map(PathBuf::from),
            version_tag: get("version_tag").unwrap_or("refit").to_string(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.theta > 0.0 && self.theta <= 0.1) {
            return Err(bad(format!(
                "theta must lie in (0, 0.1], got {}",
                self.theta
            )));
        }
        if let Some(d) = self.precision_digits {
            if !(MIN_DIGITS..=MAX_DIGITS).contains(&d) {
                return Err(bad(format!(
                    "precision must lie in [{MIN_DIGITS}, {MAX_DIGITS}] digits, got {d}"
                )));
            }
        }
        if self.threads == Some(0) {
            return Err(bad("threads must be >= 1 or auto"));
        }
        if self.start > 1 {
            return Err(bad("start must be 0 or 1"));
        }
        if !(self.bound_exponent >= 0.0) {
            return Err(bad("bound_exponent must be >= 0"));
        }
        if self.grid_needed() && self.t_grid.is_empty() {
            return Err(bad("grid is empty"));
        }
        if self.t_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("grid must be sorted ascending"));
        }
        for &t in &self.t_grid {
            self.check_grid_value(t)?;
        }
        match self.command {
            Command::Cf => {
                if self.k_range.is_empty() {
                    return Err(bad("k range is empty"));
                }
                if self.k_range.contains(&0) {
                    return Err(bad("k must be nonzero for continued fractions"));
                }
                if self.terms == 0 {
                    return Err(bad("terms must be >= 1"));
                }
            }
            Command::Expsum => {
                if self.k_range.is_empty() || self.k_range.iter().any(|&k| k < 1) {
                    return Err(bad("expsum needs k >= 1"));
                }
                for &k in &self.k_range {
                    for &x in &self.t_grid {
                        let need = resonant_required_digits(k as u32, x);
                        if need > RESONANT_DIGITS_CAP {
                            return Err(bad(format!(
                                "k={k}, x={x} needs {need} digits, above the cap {RESONANT_DIGITS_CAP}"
                            )));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn grid_needed(&self) -> bool {
        !matches!(self.command, Command::Cf | Command::Calibrate)
    }

    fn check_grid_value(&self, t: f64) -> Result<(), CliError> {
        let range = |lo: f64, hi: f64, what: &str| {
            if t >= lo && t <= hi {
                Ok(())
            } else {
                Err(bad(format!(
                    "grid value {t} outside [{lo}, {hi}] ({what} cap)"
                )))
            }
        };
        match self.command {
            Command::Moment | Command::Report => {
                let (cap, what) = match self.mode {
                    MomentMode::Reference => (REFERENCE_T_CAP, "reference-mode moment"),
                    MomentMode::Afe => (AFE_T_CAP, "afe-mode moment"),
                };
                range(1.0, cap, what)?;
                if self.continuous {
                    range(1.0, CONTINUOUS_T_CAP, "continuous moment")?;
                }
                if self.command == Command::Report {
                    range(10.0, S_T_CAP, "saddle assembly")?;
                }
                Ok(())
            }
            Command::Afe => range(TAU, ZETA_T_CAP, "zeta reference"),
            Command::Expsum => range(2.0, DEFAULT_SIEVE_CAP as f64, "divisor sieve"),
            Command::Saddle => range(10.0, S_T_CAP, "saddle assembly"),
            Command::Cf | Command::Calibrate => Ok(()),
        }
    }

    /// Largest divisor-table argument the run needs.
    pub fn sieve_limit(&self) -> u64 {
        let top = self.t_grid.iter().copied().fold(0.0f64, f64::max);
        let x = match self.command {
            Command::Expsum => top,
            Command::Afe => top / TAU,
            _ => top / PI,
        };
        x.ceil() as u64 + 2
    }

    /// SHA-256 over every setting that affects computed values; output
    /// location, thread count and file paths are left out.
    pub fn hash(&self, calibration_version: &str) -> String {
        let mut lines = BTreeMap::new();
        lines.insert("command", self.command.name().to_string());
        lines.insert(
            "precision",
            self.precision_digits
                .map_or("default".into(), |d| d.to_string()),
        );
        lines.insert("grid", format!("{:?}", self.t_grid));
        lines.insert("k", format!("{:?}", self.k_range));
        lines.insert("theta", format!("{:?}", self.theta));
        lines.insert("mode", format!("{:?}", self.mode));
        lines.insert("start", self.start.to_string());
        lines.insert("continuous", self.continuous.to_string());
        lines.insert("terms", self.terms.to_string());
        lines.insert("bound_exponent", format!("{:?}", self.bound_exponent));
        lines.insert("version_tag", self.version_tag.clone());
        lines.insert("calibration_version", calibration_version.to_string());
        let mut h = Sha256::new();
        for (k, v) in lines {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn parses_file_and_comments() {
        let m = parse_config_text("# run\ngrid = 100, 200\nmode = afe # inline\n\n").unwrap();
        assert_eq!(m["grid"], "100, 200");
        assert_eq!(m["mode"], "afe");
        assert!(parse_config_text("bogus = 1").is_err());
        assert!(parse_config_text("grid 100").is_err());
    }

    #[test]
    fn k_ranges() {
        assert_eq!(parse_k("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_k("-2,3").unwrap(), vec![-2, 3]);
        assert_eq!(parse_k("1..=2").unwrap(), vec![1, 2]);
        assert!(parse_k("4..1").is_err());
    }

    #[test]
    fn validation_names_caps() {
        let e = RunConfig::resolve(Command::Moment, &map(&[("grid", "20000")])).unwrap_err();
        assert!(e.to_string().contains("cap"), "{e}");
        let e = RunConfig::resolve(Command::Saddle, &map(&[("theta", "0")])).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
        assert!(RunConfig::resolve(Command::Cf, &map(&[("k", "0..2")])).is_err());
        assert!(RunConfig::resolve(Command::Moment, &map(&[("grid", "500,100")])).is_err());
        let ok = RunConfig::resolve(
            Command::Moment,
            &map(&[("grid", "20000"), ("mode", "afe"), ("continuous", "false")]),
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn hash_ignores_threads_and_out() {
        let a =
            RunConfig::resolve(Command::Moment, &map(&[("threads", "1"), ("out", "a")])).unwrap();
        let b =
            RunConfig::resolve(Command::Moment, &map(&[("threads", "8"), ("out", "b")])).unwrap();
        assert_eq!(a.hash("1"), b.hash("1"));
        assert_ne!(a.hash("1"), a.hash("2"));
        let c = RunConfig::resolve(Command::Moment, &map(&[("grid", "500")])).unwrap();
        assert_ne!(a.hash("1"), c.hash("1"));
    }
}
