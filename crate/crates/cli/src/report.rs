//! Experiment result rows and report rendering (CSV and markdown).

use std::path::Path;

use matpencil::{Error, Result};

/// One experiment outcome: a class set evaluated with one feature spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub classes: String,
    pub feature_spec: String,
    pub k: usize,
    pub ridge: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy_pct: f64,
    pub seconds: f64,
}

pub const REPORT_COLUMNS: [&str; 8] = [
    "classes",
    "feature_spec",
    "k",
    "ridge",
    "n_train",
    "n_test",
    "accuracy_pct",
    "seconds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl ReportFormat {
    /// Infer the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(ReportFormat::Csv),
            Some("md") | Some("markdown") => Ok(ReportFormat::Markdown),
            other => Err(Error::ConfigError(format!(
                "cannot infer report format from extension {other:?}; use .csv or .md"
            ))),
        }
    }
}

fn row_fields(row: &ReportRow) -> [String; 8] {
    [
        row.classes.clone(),
        row.feature_spec.clone(),
        row.k.to_string(),
        row.ridge.to_string(),
        row.n_train.to_string(),
        row.n_test.to_string(),
        format!("{:.2}", row.accuracy_pct),
        format!("{:.3}", row.seconds),
    ]
}

/// Render rows in the requested format. CSV column order is fixed.
pub fn render_report(rows: &[ReportRow], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(REPORT_COLUMNS)
                .map_err(|e| Error::ConfigError(format!("csv write failed: {e}")))?;
            for row in rows {
                writer
                    .write_record(row_fields(row))
                    .map_err(|e| Error::ConfigError(format!("csv write failed: {e}")))?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| Error::ConfigError(format!("csv write failed: {e}")))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            out.push_str("| ");
            out.push_str(&REPORT_COLUMNS.join(" | "));
            out.push_str(" |\n|");
            out.push_str(&"---|".repeat(REPORT_COLUMNS.len()));
            out.push('\n');
            for row in rows {
                let fields = row_fields(row);
                out.push_str("| ");
                let escaped: Vec<String> =
                    fields.iter().map(|f| f.replace('|', "\\|")).collect();
                out.push_str(&escaped.join(" | "));
                out.push_str(" |\n");
            }
            Ok(out)
        }
    }
}

/// Write rows to a file in the requested format.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(rows, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parse a CSV report back into rows.
pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| {
        Error::ConfigError(format!("cannot open report {}: {e}", path.display()))
    })?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::ConfigError(format!("malformed report row: {e}")))?;
        if record.len() != REPORT_COLUMNS.len() {
            return Err(Error::ConfigError(format!(
                "report row has {} fields, expected {}",
                record.len(),
                REPORT_COLUMNS.len()
            )));
        }
        let field = |i: usize| record.get(i).unwrap().to_string();
        let parse_f64 = |i: usize| -> Result<f64> {
            record.get(i).unwrap().parse().map_err(|_| {
                Error::ConfigError(format!("bad numeric field {:?}", record.get(i).unwrap()))
            })
        };
        let parse_usize = |i: usize| -> Result<usize> {
            record.get(i).unwrap().parse().map_err(|_| {
                Error::ConfigError(format!("bad integer field {:?}", record.get(i).unwrap()))
            })
        };
        rows.push(ReportRow {
            classes: field(0),
            feature_spec: field(1),
            k: parse_usize(2)?,
            ridge: parse_f64(3)?,
            n_train: parse_usize(4)?,
            n_test: parse_usize(5)?,
            accuracy_pct: parse_f64(6)?,
            seconds: parse_f64(7)?,
        });
    }
    Ok(rows)
}
