use super::cv::CvOutcome;
use super::metrics::{prediction_overlap, MetricsReport, OverlapBreakdown, DECISION_THRESHOLD};
use crate::encoder::{NetConfig, VARIANTS};
use crate::ensemble::{align_scores, Combiner};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureGroup, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    LogReg,
    Net,
    Ensemble,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logreg" => Ok(Suite::LogReg),
            "nn" | "net" => Ok(Suite::Net),
            "ensemble" => Ok(Suite::Ensemble),
            other => Err(Error::InvalidArgument(format!("unknown suite `{other}`"))),
        }
    }
}

/// Logistic regression rows: feature groups grow over the comment alone,
/// then the full feature set gains context sources.
pub fn lr_suite() -> Vec<(String, FeatureConfig)> {
    use FeatureGroup::*;
    use Source::*;
    let all = [CharNgram, WordNgram, CategoryLex, EmotionLex];
    let rows: [(&str, &[FeatureGroup], &[Source]); 7] = [
        ("char (baseline)", &[CharNgram], &[Comment]),
        ("char+word", &[CharNgram, WordNgram], &[Comment]),
        ("char+LIWC+NRC", &[CharNgram, CategoryLex, EmotionLex], &[Comment]),
        ("char+word+LIWC+NRC", &all, &[Comment]),
        ("char+word+LIWC+NRC + username", &all, &[Comment, Username]),
        ("char+word+LIWC+NRC + title", &all, &[Comment, Title]),
        ("char+word+LIWC+NRC + title + username", &all, &[Comment, Title, Username]),
    ];
    rows.iter()
        .map(|(label, g, s)| {
            let cfg = FeatureConfig::new(g.iter().copied(), s.iter().copied()).expect("nonempty");
            (label.to_string(), cfg)
        })
        .collect()
}

/// Network rows, each taking its hyperparameters from `base`.
pub fn nn_suite(base: &NetConfig) -> Vec<(String, NetConfig)> {
    VARIANTS
        .iter()
        .map(|&(label, encoder, title, username)| {
            let cfg = NetConfig {
                comment_encoder: encoder,
                title,
                username,
                ..base.clone()
            };
            (label.to_string(), cfg)
        })
        .collect()
}

/// Rows of [`lr_suite`] and [`nn_suite`] that feed the ensembles.
pub const BASELINE_LR_ROW: usize = 0;
pub const BEST_LR_ROW: usize = 6;
pub const BEST_NN_ROW: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutcome {
    pub max: CvOutcome,
    pub avg: CvOutcome,
    pub overlap: OverlapBreakdown,
}

/// Combines two pooled score sets. `gold` maps every comment id to its label
/// and fixes the output order.
pub fn ensemble_outcome(lr: &[(String, f64)], nn: &[(String, f64)], gold: &[(String, bool)]) -> Result<EnsembleOutcome> {
    let pairs = align_scores(lr, nn)?;
    let by_id: std::collections::HashMap<&str, &crate::ensemble::ScoredPrediction> =
        pairs.iter().map(|p| (p.comment_id.as_str(), p)).collect();
    if by_id.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: by_id.len(),
            right: gold.len(),
        });
    }
    let ordered = gold
        .iter()
        .map(|(id, _)| by_id.get(id.as_str()).copied().ok_or_else(|| Error::UnknownComment(id.clone())))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<bool> = gold.iter().map(|(_, g)| *g).collect();
    let combine = |how: Combiner| -> Result<CvOutcome> {
        let scores: Vec<(String, f64)> = ordered.iter().map(|p| (p.comment_id.clone(), p.combine(how))).collect();
        let values: Vec<f64> = scores.iter().map(|(_, s)| *s).collect();
        Ok(CvOutcome {
            report: MetricsReport::from_scores(how.name(), &values, &labels)?,
            scores,
        })
    };
    let lr_pred: Vec<bool> = ordered.iter().map(|p| p.p_lr >= DECISION_THRESHOLD).collect();
    let nn_pred: Vec<bool> = ordered.iter().map(|p| p.p_nn >= DECISION_THRESHOLD).collect();
    Ok(EnsembleOutcome {
        max: combine(Combiner::Max)?,
        avg: combine(Combiner::Average)?,
        overlap: prediction_overlap(&lr_pred, &nn_pred, &labels)?,
    })
}
