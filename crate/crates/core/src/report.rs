//! CSV and JSON emission shared by every report type.

use std::fmt::Write as _;

use serde::Serialize;

/// A record that can be written as one CSV line.
pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Provenance written into every artifact.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub calibration_version: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(config_hash: impl Into<String>, calibration_version: impl Into<String>) -> Self {
        Metadata {
            config_hash: config_hash.into(),
            calibration_version: calibration_version.into(),
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.extra.push((key.into(), value.to_string()));
        self
    }

    fn comment_lines(&self, out: &mut String) {
        let _ = writeln!(out, "# config_hash: {}", self.config_hash);
        let _ = writeln!(out, "# calibration_version: {}", self.calibration_version);
        for (k, v) in &self.extra {
            let _ = writeln!(out, "# {k}: {v}");
        }
    }
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Header row plus one line per record, without metadata.
pub fn csv_body<R: CsvRow>(rows: &[R]) -> String {
    let mut out = String::new();
    out.push_str(&R::header().join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.fields().iter().map(|f| escape(f)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// `#`-prefixed metadata lines followed by [`csv_body`].
pub fn to_csv<R: CsvRow>(rows: &[R], meta: &Metadata) -> String {
    let mut out = String::new();
    meta.comment_lines(&mut out);
    out.push_str(&csv_body(rows));
    out
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a Metadata,
    records: &'a T,
}

/// `{"meta": ..., "records": ...}` pretty-printed.
pub fn to_json<T: Serialize>(records: &T, meta: &Metadata) -> String {
    let env = Envelope { meta, records };
    let mut s = serde_json::to_string_pretty(&env).expect("report values serialize");
    s.push('\n');
    s
}
