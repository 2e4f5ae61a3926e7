use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};

/// Comment id to fold index, `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    k: usize,
    assignment: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    /// Fold index per comment, in corpus order.
    pub fn per_comment(&self, corpus: &Corpus) -> Result<Vec<usize>> {
        corpus
            .comments()
            .map(|(_, c)| {
                self.fold_of(&c.id)
                    .ok_or_else(|| Error::UnknownComment(c.id.clone()))
            })
            .collect()
    }
}

/// Stratified fold index for each label.
///
/// Positives and negatives are shuffled separately and then dealt into folds
/// as one continuous round robin (positives first), so both the fold sizes
/// and the per-fold positive counts differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if positives.len() < k || negatives.len() < k {
        return Err(Error::TooFewExamples {
            k,
            positives: positives.len(),
            negatives: negatives.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    let mut folds = vec![0; labels.len()];
    for (slot, &i) in positives.iter().chain(negatives.iter()).enumerate() {
        folds[i] = slot % k;
    }
    Ok(folds)
}

pub fn make_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment> {
    let folds = stratified_folds(&corpus.labels(), k, seed)?;
    let assignment = corpus
        .comments()
        .zip(folds)
        .map(|((_, c), f)| (c.id.clone(), f))
        .collect();
    Ok(FoldAssignment { k, assignment })
}
