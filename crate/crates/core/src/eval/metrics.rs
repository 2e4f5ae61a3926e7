use serde::Serialize;

use crate::error::{Error, Result};

/// Scores at or above this are predicted hateful.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(preds: &[bool], gold: &[bool]) -> Result<ConfusionMatrix> {
    if preds.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: gold.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &g) in preds.iter().zip(gold) {
        match (p, g) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when any of the three had a zero denominator and was reported 0.
    pub zero_division: bool,
}

fn ratio(num: usize, den: usize, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Positive class is hateful. Zero denominators yield 0 and set the flag.
pub fn prf1(cm: &ConfusionMatrix) -> Prf1 {
    let mut zero_division = false;
    let precision = ratio(cm.tp, cm.tp + cm.fp, &mut zero_division);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, &mut zero_division);
    // F1 = 2tp / (2tp + fp + fn), equal to the harmonic mean when defined.
    let f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_, &mut zero_division);
    let f1 = if cm.tp == 0 { 0.0 } else { f1 };
    Prf1 {
        precision,
        recall,
        f1,
        zero_division: zero_division || cm.tp == 0,
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    let n = cm.total();
    if n == 0 {
        0.0
    } else {
        (cm.tp + cm.tn) as f64 / n as f64
    }
}

/// ROC AUC from rank statistics: the chance a random positive scores above
/// a random negative, ties counting one half. The pair count is kept in
/// half-units as an integer, so the result is one exact division.
pub fn roc_auc(scores: &[f64], gold: &[bool]) -> Result<f64> {
    if scores.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: gold.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score {bad}")));
    }
    let n_pos = gold.iter().filter(|&&g| g).count();
    let n_neg = gold.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if gold[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        twice_u += pos * (2 * neg_below + neg);
        neg_below += neg;
        i = j;
    }
    Ok(twice_u as f64 / (2 * n_pos as u128 * n_neg as u128) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub config: String,
    pub n: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub confusion: ConfusionMatrix,
    pub zero_division: bool,
}

impl MetricsReport {
    pub fn from_scores(config: impl Into<String>, scores: &[f64], gold: &[bool]) -> Result<Self> {
        let preds: Vec<bool> = scores.iter().map(|&s| s >= DECISION_THRESHOLD).collect();
        let cm = confusion(&preds, gold)?;
        let p = prf1(&cm);
        Ok(MetricsReport {
            config: config.into(),
            n: gold.len(),
            accuracy: accuracy(&cm),
            precision: p.precision,
            recall: p.recall,
            f1: p.f1,
            auc: roc_auc(scores, gold)?,
            confusion: cm,
            zero_division: p.zero_division,
        })
    }
}

/// Gold-hateful comments split by which model caught them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OverlapBreakdown {
    pub both: usize,
    pub only_lr: usize,
    pub only_nn: usize,
    pub neither: usize,
}

impl OverlapBreakdown {
    pub fn total(&self) -> usize {
        self.both + self.only_lr + self.only_nn + self.neither
    }
}

pub fn prediction_overlap(lr: &[bool], nn: &[bool], gold: &[bool]) -> Result<OverlapBreakdown> {
    if lr.len() != gold.len() || nn.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: lr.len().max(nn.len()),
            right: gold.len(),
        });
    }
    let mut out = OverlapBreakdown::default();
    for ((&a, &b), _) in lr.iter().zip(nn).zip(gold).filter(|(_, &g)| g) {
        match (a, b) {
            (true, true) => out.both += 1,
            (true, false) => out.only_lr += 1,
            (false, true) => out.only_nn += 1,
            (false, false) => out.neither += 1,
        }
    }
    Ok(out)
}
