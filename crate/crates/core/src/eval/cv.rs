use rayon::prelude::*;

use super::metrics::MetricsReport;
use crate::corpus::{Corpus, FoldAssignment};
use crate::encoder::{self, CharVocab, ContextNet, EmbeddingTable, NetConfig};
use crate::error::{Error, Result};
use crate::features::{build_vocabulary, featurize, Document, FeatureConfig, Lexicons};
use crate::logreg::{predict_proba, train_logreg, LogRegConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    LogReg { features: FeatureConfig, solver: LogRegConfig },
    Net(NetConfig),
}

/// External data a model may need: lexicons for the lexicon feature
/// groups, word vectors for the network.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub lexicons: Lexicons,
    pub embeddings: Option<EmbeddingTable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: MetricsReport,
    /// `(comment id, pooled out-of-fold score)` in corpus order.
    pub scores: Vec<(String, f64)>,
}

/// Seed of one fold's worker, distinct per fold and per purpose.
pub fn fold_seed(seed: u64, fold: usize, stream: u64) -> u64 {
    let mut z = seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stream.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `score_fold(fold, train, test)` for every fold and scatters the
/// returned test scores back into one pooled vector. With `jobs = Some(n)`
/// folds run on a private pool of `n` threads.
pub fn pooled_cv<F>(fold_of: &[usize], k: usize, jobs: Option<usize>, score_fold: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &[usize], &[usize]) -> Result<Vec<f64>> + Sync,
{
    if let Some(&bad) = fold_of.iter().find(|&&f| f >= k) {
        return Err(Error::InvalidArgument(format!("fold index {bad} with k = {k}")));
    }
    let run = |fold: usize| -> Result<(Vec<usize>, Vec<f64>)> {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..fold_of.len()).partition(|&i| fold_of[i] == fold);
        if test.is_empty() || train.is_empty() {
            return Err(Error::Fold {
                fold,
                source: Box::new(Error::InvalidArgument("empty split".into())),
            });
        }
        let scores = score_fold(fold, &train, &test).map_err(|e| Error::Fold { fold, source: Box::new(e) })?;
        if scores.len() != test.len() {
            return Err(Error::Fold {
                fold,
                source: Box::new(Error::LengthMismatch {
                    left: scores.len(),
                    right: test.len(),
                }),
            });
        }
        Ok((test, scores))
    };
    let results: Vec<Result<(Vec<usize>, Vec<f64>)>> = match jobs {
        Some(1) => (0..k).map(run).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| (0..k).into_par_iter().map(run).collect()),
        None => (0..k).into_par_iter().map(run).collect(),
    };
    let mut pooled = vec![f64::NAN; fold_of.len()];
    for r in results {
        let (test, scores) = r?;
        for (i, s) in test.into_iter().zip(scores) {
            pooled[i] = s;
        }
    }
    Ok(pooled)
}

struct Row<'a> {
    id: &'a str,
    doc: Document<'a>,
    label: bool,
}

fn rows(corpus: &Corpus) -> Vec<Row<'_>> {
    corpus
        .comments()
        .map(|(t, c)| Row {
            id: &c.id,
            doc: Document {
                comment: &c.text,
                title: &t.news_title,
                username: &c.user,
            },
            label: c.label.is_hateful(),
        })
        .collect()
}

fn score_logreg(rows: &[Row<'_>], train: &[usize], test: &[usize], features: &FeatureConfig, solver: &LogRegConfig, lex: &Lexicons) -> Result<Vec<f64>> {
    let train_docs: Vec<Document<'_>> = train.iter().map(|&i| rows[i].doc).collect();
    let vocab = build_vocabulary(&train_docs, features, lex)?;
    let x = train_docs
        .iter()
        .map(|d| featurize(d, &vocab, lex, features))
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<bool> = train.iter().map(|&i| rows[i].label).collect();
    let fit = train_logreg(&x, &y, vocab.n_columns(), solver)?;
    test.iter()
        .map(|&i| predict_proba(&fit.model, &featurize(&rows[i].doc, &vocab, lex, features)?))
        .collect()
}

fn score_net(rows: &[Row<'_>], train: &[usize], test: &[usize], config: &NetConfig, table: &EmbeddingTable, seed: u64, fold: usize) -> Result<Vec<f64>> {
    let chars = config
        .username
        .then(|| CharVocab::from_texts(train.iter().map(|&i| rows[i].doc.username)));
    let mut net = ContextNet::new(config.clone(), table.dim(), chars, fold_seed(seed, fold, 0))?;
    let encode = |i: usize| {
        let r = &rows[i];
        net.encode(table, r.doc.comment, r.doc.title, r.doc.username, r.label)
    };
    let train_x = train.iter().map(|&i| encode(i)).collect::<Result<Vec<_>>>()?;
    let test_x = test.iter().map(|&i| encode(i)).collect::<Result<Vec<_>>>()?;
    encoder::train(&mut net, &train_x, fold_seed(seed, fold, 1))?;
    test_x.iter().map(|x| net.predict(x)).collect()
}

/// k-fold cross-validation with pooled out-of-fold scores. Each fold builds
/// its vocabulary, class weights and character inventory from its own
/// training split.
pub fn cross_validate(
    corpus: &Corpus,
    folds: &FoldAssignment,
    label: &str,
    spec: &ModelSpec,
    resources: &Resources,
    seed: u64,
    jobs: Option<usize>,
) -> Result<CvOutcome> {
    let rows = rows(corpus);
    let fold_of = folds.per_comment(corpus)?;
    let pooled = match spec {
        ModelSpec::LogReg { features, solver } => pooled_cv(&fold_of, folds.k(), jobs, |_, train, test| {
            score_logreg(&rows, train, test, features, solver, &resources.lexicons)
        })?,
        ModelSpec::Net(config) => {
            let table = resources
                .embeddings
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("neural models need word embeddings".into()))?;
            pooled_cv(&fold_of, folds.k(), jobs, |fold, train, test| {
                score_net(&rows, train, test, config, table, seed, fold)
            })?
        }
    };
    let gold: Vec<bool> = rows.iter().map(|r| r.label).collect();
    let report = MetricsReport::from_scores(label, &pooled, &gold)?;
    let scores = rows.iter().map(|r| r.id.to_string()).zip(pooled).collect();
    Ok(CvOutcome { report, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_index_scored_once() {
        let fold_of = vec![0, 1, 2, 0, 1, 2, 0];
        let pooled = pooled_cv(&fold_of, 3, Some(2), |fold, train, test| {
            assert!(test.iter().all(|&i| fold_of[i] == fold));
            assert!(train.iter().all(|&i| fold_of[i] != fold));
            assert_eq!(train.len() + test.len(), fold_of.len());
            Ok(test.iter().map(|&i| i as f64).collect())
        })
        .unwrap();
        assert_eq!(pooled, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn fold_errors_carry_the_index() {
        let err = pooled_cv(&[0, 1, 0, 1], 2, Some(1), |fold, _, test| {
            if fold == 1 {
                Err(Error::SingleClass)
            } else {
                Ok(vec![0.0; test.len()])
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Fold { fold: 1, .. }));
        assert!(pooled_cv(&[0, 0], 2, None, |_, _, t| Ok(vec![0.0; t.len()])).is_err());
    }

    #[test]
    fn fold_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..10).flat_map(|f| [fold_seed(7, f, 0), fold_seed(7, f, 1)]).collect();
        assert_eq!(seeds.len(), 20);
        assert_eq!(fold_seed(7, 3, 1), fold_seed(7, 3, 1));
    }
}
