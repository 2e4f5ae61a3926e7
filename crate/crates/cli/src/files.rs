//! Score, label and metrics files.

use std::path::Path;

use anyhow::{bail, Context, Result};

use hatectx::eval::{ConfusionMatrix, MetricsReport, CSV_HEADER};
use hatectx::numcore::{format_f64, parse_f64};

pub fn write_scores(path: &Path, scores: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["comment_id", "score"])?;
    for (id, s) in scores {
        w.write_record([id.as_str(), &format_f64(*s)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scores(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["comment_id", "score"] {
        bail!("{}: expected header `comment_id,score`", path.display());
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {}", path.display(), i + 1))?;
        let score = parse_f64(&rec[1]).with_context(|| format!("{}: line {}", path.display(), i + 2))?;
        out.push((rec[0].to_string(), score));
    }
    Ok(out)
}

/// One `0` or `1` per line; blank lines are skipped.
pub fn read_labels(path: &Path) -> Result<Vec<bool>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => bail!("{}:{}: expected 0 or 1, found `{other}`", path.display(), i + 1),
        })
        .collect()
}

/// Reads a metrics table written by `evaluate`. Only the five rounded
/// metric columns are recovered.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsReport>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if headers.join(",") != CSV_HEADER {
        bail!("{}: expected header `{CSV_HEADER}`", path.display());
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .with_context(|| format!("{}: line {}, column {}", path.display(), i + 2, headers[k]))
        };
        out.push(MetricsReport {
            config: rec[0].to_string(),
            n: 0,
            accuracy: num(1)?,
            precision: num(2)?,
            recall: num(3)?,
            f1: num(4)?,
            auc: num(5)?,
            confusion: ConfusionMatrix::default(),
            zero_division: false,
        });
    }
    Ok(out)
}

/// File-name form of a row label.
pub fn slug(label: &str) -> String {
    let mut s = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_matches('_').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let scores = vec![("a,1".to_string(), 0.1 + 0.2), ("b".to_string(), 1.0 / 3.0)];
        write_scores(&p, &scores).unwrap();
        assert_eq!(read_scores(&p).unwrap(), scores);
    }

    #[test]
    fn labels_parse_strictly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.txt");
        std::fs::write(&p, "1\n0\n\n1\n").unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![true, false, true]);
        std::fs::write(&p, "1\nyes\n").unwrap();
        assert!(read_labels(&p).unwrap_err().to_string().contains(":2:"));
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("char (baseline)"), "char_baseline");
        assert_eq!(slug("bi-LSTM+attention + title"), "bi_lstm_attention_title");
    }
}
