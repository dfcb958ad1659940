//! Subcommand bodies. Each returns the artifact files it wants written;
//! nothing touches the disk until every computation has succeeded.

use serde::Serialize;
use serde_json::json;
use zmoment_core::calibration::{calibrate, Calibration};
use zmoment_core::cf::{
    continued_fraction, convergents, irrationality_exponent_estimate, lemma1_check, pooled_min_c,
    waldschmidt_check, DEFAULT_CF_DIGITS,
};
use zmoment_core::divisor::{divisor_sieve, DivisorTable};
use zmoment_core::expsum::conditional_bound_report;
use zmoment_core::moments::{build_report_with, error_envelope, ReportOptions, ENVELOPE_T_FLOOR};
use zmoment_core::report::{to_csv, to_json, CsvRow, Metadata};
use zmoment_core::saddle::{s1_contributions, s2_report, S1Report, S2Report};
use zmoment_core::zeta::{
    motohashi_residual, zeta_sq_critical_approx, zeta_sq_critical_approx_with, zeta_sq_reference,
};

use crate::config::{Command, RunConfig};
use crate::error::CliError;

/// A file name relative to the output directory and its contents.
pub type Artifact = (String, String);

pub fn execute(
    cfg: &RunConfig,
    cal: &Calibration,
    meta: &Metadata,
) -> Result<Vec<Artifact>, CliError> {
    let meta = meta.clone().with("command", cfg.command.name());
    match cfg.command {
        Command::Moment => moment(cfg, cal, &meta),
        Command::Afe => afe(cfg, &meta),
        Command::Expsum => expsum(cfg, &meta),
        Command::Saddle => saddle(cfg, cal, &meta),
        Command::Cf => cf(cfg, &meta),
        Command::Report => report(cfg, cal, &meta),
        Command::Calibrate => recalibrate(cfg, cal),
    }
}

fn sieve(cfg: &RunConfig) -> Result<DivisorTable, CliError> {
    Ok(divisor_sieve(cfg.sieve_limit())?)
}

fn moment_options(cfg: &RunConfig) -> ReportOptions {
    ReportOptions {
        mode: cfg.mode,
        start: cfg.start,
        continuous: cfg.continuous,
    }
}

fn moment(cfg: &RunConfig, cal: &Calibration, meta: &Metadata) -> Result<Vec<Artifact>, CliError> {
    let report = build_report_with(&cfg.t_grid, cal.s1_c_fit, moment_options(cfg))?;
    let meta = meta
        .clone()
        .with("mode", format!("{:?}", cfg.mode).to_lowercase())
        .with("start", cfg.start)
        .with("c_fit", cal.s1_c_fit);
    Ok(vec![
        ("moment.csv".into(), to_csv(&report.rows, &meta)),
        ("moment.json".into(), to_json(&report, &meta)),
    ])
}

#[derive(Serialize)]
struct AfeRow {
    t: f64,
    reference: f64,
    approx: f64,
    residual: f64,
    defect: f64,
    defect_scaled: f64,
}

impl CsvRow for AfeRow {
    fn header() -> &'static [&'static str] {
        &[
            "t",
            "reference",
            "approx",
            "residual",
            "defect",
            "defect_scaled",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.t.to_string(),
            self.reference.to_string(),
            self.approx.to_string(),
            self.residual.to_string(),
            self.defect.to_string(),
            self.defect_scaled.to_string(),
        ]
    }
}

fn afe(cfg: &RunConfig, meta: &Metadata) -> Result<Vec<Artifact>, CliError> {
    let table = sieve(cfg)?;
    let rows = cfg
        .t_grid
        .iter()
        .map(|&t| {
            let reference = zeta_sq_reference(t)?;
            let approx = match cfg.precision_digits {
                Some(d) => zeta_sq_critical_approx_with(t, &table, d)?,
                None => zeta_sq_critical_approx(t, &table)?,
            };
            let residual = motohashi_residual(t, &table)?;
            let defect = reference - approx - residual;
            Ok(AfeRow {
                t,
                reference,
                approx,
                residual,
                defect,
                defect_scaled: defect.abs() * t.powf(0.25),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(vec![
        ("afe.csv".into(), to_csv(&rows, meta)),
        ("afe.json".into(), to_json(&rows, meta)),
    ])
}

fn expsum(cfg: &RunConfig, meta: &Metadata) -> Result<Vec<Artifact>, CliError> {
    let table = sieve(cfg)?;
    let mut rows = Vec::new();
    for &k in &cfg.k_range {
        rows.extend(conditional_bound_report(
            k as u32,
            &cfg.t_grid,
            cfg.bound_exponent,
            &table,
        )?);
    }
    let meta = meta.clone().with("bound_exponent", cfg.bound_exponent);
    Ok(vec![
        ("expsum.csv".into(), to_csv(&rows, &meta)),
        ("expsum.json".into(), to_json(&rows, &meta)),
    ])
}

#[derive(Serialize)]
struct SaddleRow {
    t: f64,
    theta: f64,
    s1: [f64; 2],
    direct: [f64; 2],
    envelope: Option<f64>,
    s2_computed: [f64; 2],
    s2_predicted: [f64; 2],
    endpoint_ratio_max: f64,
}

impl CsvRow for SaddleRow {
    fn header() -> &'static [&'static str] {
        &[
            "T",
            "theta",
            "s1_re",
            "s1_im",
            "s1_abs",
            "direct_re",
            "direct_im",
            "envelope",
            "s2_re",
            "s2_im",
            "s2_predicted_re",
            "s2_predicted_im",
            "endpoint_ratio_max",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.t.to_string(),
            self.theta.to_string(),
            self.s1[0].to_string(),
            self.s1[1].to_string(),
            self.s1[0].hypot(self.s1[1]).to_string(),
            self.direct[0].to_string(),
            self.direct[1].to_string(),
            self.envelope.map_or_else(String::new, |e| e.to_string()),
            self.s2_computed[0].to_string(),
            self.s2_computed[1].to_string(),
            self.s2_predicted[0].to_string(),
            self.s2_predicted[1].to_string(),
            self.endpoint_ratio_max.to_string(),
        ]
    }
}

struct SaddleRun {
    rows: Vec<SaddleRow>,
    s1: Vec<S1Report>,
    s2: Vec<S2Report>,
}

fn saddle_run(cfg: &RunConfig, cal: &Calibration) -> Result<SaddleRun, CliError> {
    let table = sieve(cfg)?;
    let mut out = SaddleRun {
        rows: Vec::new(),
        s1: Vec::new(),
        s2: Vec::new(),
    };
    for &t in &cfg.t_grid {
        let s1 = s1_contributions(t, cfg.theta, &table)?;
        let s2 = s2_report(t, &table)?;
        let envelope = if t >= ENVELOPE_T_FLOOR {
            Some(error_envelope(t, cal.s1_c_fit)?)
        } else {
            None
        };
        out.rows.push(SaddleRow {
            t,
            theta: cfg.theta,
            s1: s1.total,
            direct: s1.direct,
            envelope,
            s2_computed: s2.computed,
            s2_predicted: s2.predicted,
            endpoint_ratio_max: s2.endpoint_ratio_max,
        });
        out.s1.push(s1);
        out.s2.push(s2);
    }
    Ok(out)
}

fn saddle(cfg: &RunConfig, cal: &Calibration, meta: &Metadata) -> Result<Vec<Artifact>, CliError> {
    let run = saddle_run(cfg, cal)?;
    let meta = meta
        .clone()
        .with("theta", cfg.theta)
        .with("c_fit", cal.s1_c_fit);
    Ok(vec![
        ("saddle.csv".into(), to_csv(&run.rows, &meta)),
        (
            "saddle.json".into(),
            to_json(&json!({ "s1": run.s1, "s2": run.s2 }), &meta),
        ),
    ])
}

#[derive(Serialize)]
struct CfRow {
    k: i32,
    digits_used: u32,
    certified_terms: usize,
    irrationality_estimate: Option<f64>,
    lemma_min_c: Option<f64>,
    lemma_unsatisfiable: usize,
}

impl CsvRow for CfRow {
    fn header() -> &'static [&'static str] {
        &[
            "k",
            "digits_used",
            "certified_terms",
            "irrationality_estimate",
            "lemma_min_c",
            "lemma_unsatisfiable",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        vec![
            self.k.to_string(),
            self.digits_used.to_string(),
            self.certified_terms.to_string(),
            opt(self.irrationality_estimate),
            opt(self.lemma_min_c),
            self.lemma_unsatisfiable.to_string(),
        ]
    }
}

fn cf(cfg: &RunConfig, meta: &Metadata) -> Result<Vec<Artifact>, CliError> {
    let digits = cfg.precision_digits.unwrap_or(DEFAULT_CF_DIGITS);
    let records = cfg
        .k_range
        .iter()
        .map(|&k| continued_fraction(k, cfg.terms, digits))
        .collect::<Result<Vec<_>, _>>()?;
    let probes = records
        .iter()
        .map(|r| lemma1_check(r, 1.0))
        .collect::<Result<Vec<_>, _>>()?;
    let pooled = pooled_min_c(&probes);
    let lemma = records
        .iter()
        .map(|r| lemma1_check(r, pooled.map_or(1.0, |c| c * (1.0 + 1e-9))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut waldschmidt = Vec::new();
    for (r, l) in records.iter().zip(&lemma) {
        rows.push(CfRow {
            k: r.k,
            digits_used: r.digits_used,
            certified_terms: r.certified_len(),
            irrationality_estimate: irrationality_exponent_estimate(r).ok(),
            lemma_min_c: l.min_c,
            lemma_unsatisfiable: l.unsatisfiable.len(),
        });
        if r.k > 0 {
            let conv = convergents(&r.quotients[..r.certified_len()]);
            for (p, q) in conv.iter().take(10).filter(|(p, _)| *p >= 3) {
                waldschmidt.push(waldschmidt_check(r.k as u32, p, q)?);
            }
        }
    }
    let meta = meta.clone().with("digits", digits).with("terms", cfg.terms);
    let diagnostics = json!({
        "pooled_min_c": pooled,
        "lemma": lemma,
        "waldschmidt": waldschmidt,
    });
    Ok(vec![
        ("cf.csv".into(), to_csv(&rows, &meta)),
        ("cf.json".into(), to_json(&records, &meta)),
        ("cf_diagnostics.json".into(), to_json(&diagnostics, &meta)),
    ])
}

fn report(cfg: &RunConfig, cal: &Calibration, meta: &Metadata) -> Result<Vec<Artifact>, CliError> {
    let moments = build_report_with(&cfg.t_grid, cal.s1_c_fit, moment_options(cfg))?;
    let saddle = saddle_run(cfg, cal)?;
    let meta = meta
        .clone()
        .with("mode", format!("{:?}", cfg.mode).to_lowercase())
        .with("start", cfg.start)
        .with("theta", cfg.theta)
        .with("c_fit", cal.s1_c_fit);
    let csv = to_csv(&moments.rows, &meta);
    let files = vec![
        ("report.csv".into(), csv),
        ("report_saddle.csv".into(), to_csv(&saddle.rows, &meta)),
        (
            "report.json".into(),
            to_json(
                &json!({ "moments": moments, "s1": saddle.s1, "s2": saddle.s2 }),
                &meta,
            ),
        ),
    ];
    Ok(files)
}

fn recalibrate(cfg: &RunConfig, cal: &Calibration) -> Result<Vec<Artifact>, CliError> {
    let fitted = calibrate(cal, &cfg.version_tag)?;
    let text = format!(
        "# Refitted from calibration version {}.\n{}",
        cal.version,
        fitted.to_toml_string()
    );
    Ok(vec![("calibration.toml".into(), text)])
}

/// CSV text without its `#` metadata lines.
pub fn csv_body_of(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}
