use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::lexicon::{category_vector, emotion_vector, N_EMOTIONS};
use super::text::{char_ngrams, word_ngrams, GramCounts};
use super::{Document, FeatureConfig, FeatureGroup, Lexicons, Source};
use crate::error::{Error, Result};

/// Sparse row: strictly increasing column indices with finite values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pairs: Vec<(usize, f64)>,
}

impl FeatureVector {
    /// Builds from arbitrary pairs; duplicate columns are summed and zeros
    /// dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("feature column {i}")));
            }
            *acc.entry(i).or_insert(0.0) += v;
        }
        Ok(FeatureVector {
            pairs: acc.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        })
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        Self::from_pairs(values.iter().copied().enumerate())
    }

    pub fn pairs(&self) -> &[(usize, f64)] {
        &self.pairs
    }

    pub fn nnz(&self) -> usize {
        self.pairs.len()
    }

    pub fn get(&self, column: usize) -> f64 {
        self.pairs
            .binary_search_by_key(&column, |&(i, _)| i)
            .map(|k| self.pairs[k].1)
            .unwrap_or(0.0)
    }

    /// One past the largest column in use.
    pub fn min_width(&self) -> usize {
        self.pairs.last().map_or(0, |&(i, _)| i + 1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.pairs.iter().map(|&(i, v)| v * dense[i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct LexBlock {
    source: Source,
    group: FeatureGroup,
    offset: usize,
    width: usize,
}

/// Column layout: sorted namespaced n-gram keys first, then one dense block
/// per enabled (source, lexicon) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    config: FeatureConfig,
    entries: BTreeMap<String, usize>,
    lex_blocks: Vec<LexBlock>,
    n_columns: usize,
}

fn key(source: Source, group: FeatureGroup, gram: &str) -> String {
    format!("{}|{}|{}", source.name(), group.name(), gram)
}

fn ngram_counts(doc: &Document<'_>, source: Source, group: FeatureGroup, config: &FeatureConfig) -> GramCounts {
    match group {
        FeatureGroup::CharNgram => char_ngrams(doc.text(source), config.char_orders()),
        FeatureGroup::WordNgram => word_ngrams(&doc.tokens(source), config.word_orders()),
        _ => GramCounts::new(),
    }
}

const NGRAM_GROUPS: [FeatureGroup; 2] = [FeatureGroup::CharNgram, FeatureGroup::WordNgram];

impl Vocabulary {
    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    pub fn n_ngram_columns(&self) -> usize {
        self.entries.len()
    }

    pub fn index_of(&self, source: Source, group: FeatureGroup, gram: &str) -> Option<usize> {
        self.entries.get(&key(source, group, gram)).copied()
    }

    pub fn entries(&self) -> &BTreeMap<String, usize> {
        &self.entries
    }

    /// Column range of the given (source, group) block. N-gram blocks are not
    /// contiguous, so this answers only for lexicon groups.
    pub fn lexicon_block(&self, source: Source, group: FeatureGroup) -> Option<std::ops::Range<usize>> {
        self.lex_blocks
            .iter()
            .find(|b| b.source == source && b.group == group)
            .map(|b| b.offset..b.offset + b.width)
    }

    /// The (source, group) pair that owns a column.
    pub fn owner(&self, column: usize) -> Option<(Source, FeatureGroup)> {
        if column < self.entries.len() {
            // Entries are densely numbered in key order, so the key is found by rank.
            let k = self.entries.keys().nth(column)?;
            let mut parts = k.splitn(3, '|');
            let source = parts.next()?.parse().ok()?;
            let group = parts.next()?.parse().ok()?;
            return Some((source, group));
        }
        self.lex_blocks
            .iter()
            .find(|b| (b.offset..b.offset + b.width).contains(&column))
            .map(|b| (b.source, b.group))
    }
}

fn lexicon_width(group: FeatureGroup, lexicons: &Lexicons) -> Result<usize> {
    match group {
        FeatureGroup::CategoryLex => lexicons
            .category
            .as_ref()
            .map(|l| l.n_categories())
            .ok_or_else(|| Error::ConfigMismatch("category lexicon features enabled but no lexicon given".into())),
        FeatureGroup::EmotionLex => lexicons
            .emotion
            .as_ref()
            .map(|_| N_EMOTIONS)
            .ok_or_else(|| Error::ConfigMismatch("emotion lexicon features enabled but no lexicon given".into())),
        _ => Ok(0),
    }
}

pub fn build_vocabulary(train: &[Document<'_>], config: &FeatureConfig, lexicons: &Lexicons) -> Result<Vocabulary> {
    let mut keys = BTreeSet::new();
    for doc in train {
        for &source in config.sources() {
            for group in NGRAM_GROUPS {
                if !config.has(group) {
                    continue;
                }
                for gram in ngram_counts(doc, source, group, config).into_keys() {
                    keys.insert(key(source, group, &gram));
                }
            }
        }
    }
    let entries: BTreeMap<String, usize> = keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut offset = entries.len();
    let mut lex_blocks = Vec::new();
    for &source in config.sources() {
        for group in [FeatureGroup::CategoryLex, FeatureGroup::EmotionLex] {
            if !config.has(group) {
                continue;
            }
            let width = lexicon_width(group, lexicons)?;
            lex_blocks.push(LexBlock {
                source,
                group,
                offset,
                width,
            });
            offset += width;
        }
    }
    Ok(Vocabulary {
        config: config.clone(),
        entries,
        lex_blocks,
        n_columns: offset,
    })
}

/// Feature vector of one document. Grams absent from the vocabulary are
/// dropped.
pub fn featurize(
    doc: &Document<'_>,
    vocab: &Vocabulary,
    lexicons: &Lexicons,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    if *config != vocab.config {
        return Err(Error::ConfigMismatch(
            "feature config differs from the one the vocabulary was built with".into(),
        ));
    }
    let mut pairs = Vec::new();
    for &source in config.sources() {
        for group in NGRAM_GROUPS {
            if !config.has(group) {
                continue;
            }
            for (gram, count) in ngram_counts(doc, source, group, config) {
                if let Some(&col) = vocab.entries.get(&key(source, group, &gram)) {
                    pairs.push((col, count as f64));
                }
            }
        }
    }
    for block in &vocab.lex_blocks {
        let width = lexicon_width(block.group, lexicons)?;
        if width != block.width {
            return Err(Error::ConfigMismatch(format!(
                "lexicon width {width} differs from vocabulary block width {}",
                block.width
            )));
        }
        let tokens = doc.tokens(block.source);
        let values: Vec<f64> = match block.group {
            FeatureGroup::CategoryLex => category_vector(&tokens, lexicons.category.as_ref().expect("checked")),
            FeatureGroup::EmotionLex => emotion_vector(&tokens, lexicons.emotion.as_ref().expect("checked")).to_vec(),
            _ => unreachable!("n-gram groups have no dense block"),
        };
        pairs.extend(values.into_iter().enumerate().map(|(i, v)| (block.offset + i, v)));
    }
    FeatureVector::from_pairs(pairs)
}
