use std::fmt::Write;
use std::str::FromStr;

use super::metrics::{MetricsReport, OverlapBreakdown};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown report format `{other}`"))),
        }
    }
}

pub const CSV_HEADER: &str = "config,accuracy,precision,recall,f1,auc";

/// Three decimals, halves rounded away from zero.
pub fn format3(x: f64) -> String {
    let r = (x * 1000.0).round() / 1000.0;
    // Avoid printing "-0.000".
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.3}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn values(r: &MetricsReport) -> [String; 5] {
    [r.accuracy, r.precision, r.recall, r.f1, r.auc].map(format3)
}

pub fn emit_report(reports: &[MetricsReport], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in reports {
                let _ = writeln!(out, "{},{}", csv_field(&r.config), values(r).join(","));
            }
        }
        ReportFormat::Text => {
            let heads = ["Config", "Accuracy", "Precision", "Recall", "F1", "AUC"];
            let w0 = reports
                .iter()
                .map(|r| r.config.chars().count())
                .chain([heads[0].len()])
                .max()
                .unwrap_or(0);
            let _ = write!(out, "{:<w0$}", heads[0]);
            for h in &heads[1..] {
                let _ = write!(out, "  {h:>9}");
            }
            out.push('\n');
            let _ = writeln!(out, "{}", "-".repeat(w0 + 11 * 5));
            for r in reports {
                let _ = write!(out, "{:<w0$}", r.config);
                for v in values(r) {
                    let _ = write!(out, "  {v:>9}");
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn emit_overlap(o: &OverlapBreakdown, format: ReportFormat) -> String {
    let rows = [
        ("both", o.both),
        ("only_lr", o.only_lr),
        ("only_nn", o.only_nn),
        ("neither", o.neither),
    ];
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("category,count\n");
            for (k, v) in rows {
                let _ = writeln!(out, "{k},{v}");
            }
        }
        ReportFormat::Text => {
            let _ = writeln!(out, "Gold-hateful comments by detecting model (total {})", o.total());
            for (k, v) in rows {
                let _ = writeln!(out, "  {k:<8} {v:>6}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::ConfusionMatrix;

    fn report(config: &str, v: [f64; 5]) -> MetricsReport {
        MetricsReport {
            config: config.into(),
            n: 10,
            accuracy: v[0],
            precision: v[1],
            recall: v[2],
            f1: v[3],
            auc: v[4],
            confusion: ConfusionMatrix::default(),
            zero_division: false,
        }
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(format3(0.0005), "0.001");
        assert_eq!(format3(0.0015), "0.002");
        assert_eq!(format3(0.0025), "0.003");
        assert_eq!(format3(2.0 / 3.0), "0.667");
        assert_eq!(format3(1.0), "1.000");
        assert_eq!(format3(0.0), "0.000");
        assert_eq!(format3(-0.0004), "0.000");
    }

    #[test]
    fn one_row_has_five_metric_columns() {
        let csv = emit_report(&[report("a", [0.5; 5])], ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), 6);
        let text = emit_report(&[report("a", [0.5; 5])], ReportFormat::Text);
        assert_eq!(text.lines().nth(2).unwrap().split_whitespace().count(), 6);
    }

    #[test]
    fn golden_tables() {
        let reports = [
            report("char (baseline)", [0.7375, 0.5490, 0.46875, 0.504, 2.0 / 3.0]),
            report("+ title, quoted", [0.75, 0.1234, 0.0, 1.0, 0.99951]),
        ];
        assert_eq!(emit_report(&reports, ReportFormat::Csv), include_str!("testdata/report.csv"));
        assert_eq!(emit_report(&reports, ReportFormat::Text), include_str!("testdata/report.txt"));
    }

    #[test]
    fn overlap_rendering() {
        let o = OverlapBreakdown { both: 3, only_lr: 1, only_nn: 2, neither: 4 };
        assert_eq!(emit_overlap(&o, ReportFormat::Csv), "category,count\nboth,3\nonly_lr,1\nonly_nn,2\nneither,4\n");
        assert!(emit_overlap(&o, ReportFormat::Text).contains("total 10"));
    }
}
