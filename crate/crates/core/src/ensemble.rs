//! Equal-weight score combination of the two model families.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrediction {
    pub comment_id: String,
    pub p_lr: f64,
    pub p_nn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combiner {
    Max,
    Average,
}

impl Combiner {
    pub fn apply(self, p_lr: f64, p_nn: f64) -> f64 {
        match self {
            Combiner::Max => max_ensemble(p_lr, p_nn),
            Combiner::Average => avg_ensemble(p_lr, p_nn),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Combiner::Max => "Max Score Ensemble",
            Combiner::Average => "Average Score Ensemble",
        }
    }
}

pub fn max_ensemble(p_lr: f64, p_nn: f64) -> f64 {
    p_lr.max(p_nn)
}

pub fn avg_ensemble(p_lr: f64, p_nn: f64) -> f64 {
    0.5 * (p_lr + p_nn)
}

impl ScoredPrediction {
    pub fn new(comment_id: impl Into<String>, p_lr: f64, p_nn: f64) -> Result<Self> {
        for p in [p_lr, p_nn] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("score {p} outside [0, 1]")));
            }
        }
        Ok(ScoredPrediction {
            comment_id: comment_id.into(),
            p_lr,
            p_nn,
        })
    }

    pub fn combine(&self, how: Combiner) -> f64 {
        how.apply(self.p_lr, self.p_nn)
    }
}

/// Pairs two score lists by comment id. Both must cover the same ids.
pub fn align_scores(lr: &[(String, f64)], nn: &[(String, f64)]) -> Result<Vec<ScoredPrediction>> {
    use std::collections::HashMap;
    if lr.len() != nn.len() {
        return Err(Error::LengthMismatch {
            left: lr.len(),
            right: nn.len(),
        });
    }
    let nn_by_id: HashMap<&str, f64> = nn.iter().map(|(id, p)| (id.as_str(), *p)).collect();
    if nn_by_id.len() != nn.len() {
        return Err(Error::InvalidArgument("duplicate comment id in scores".into()));
    }
    lr.iter()
        .map(|(id, p)| {
            let q = nn_by_id
                .get(id.as_str())
                .ok_or_else(|| Error::UnknownComment(id.clone()))?;
            ScoredPrediction::new(id.clone(), *p, *q)
        })
        .collect()
}
