//! Sparse features for the logistic regression models: character n-grams,
//! word n-grams, category-lexicon counts and emotion-lexicon counts, each
//! extracted from the comment and optionally from its context (news title,
//! screen name).

mod lexicon;
mod text;
mod vocab;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lexicon::{
    category_vector, emotion_vector, load_category_lexicon, load_emotion_lexicon, CategoryLexicon,
    EmotionLexicon, EMOTIONS, N_EMOTIONS,
};
pub use text::{char_ngrams, tokenize, word_ngrams, GramCounts, WORD_SEPARATOR};
pub use vocab::{build_vocabulary, featurize, FeatureVector, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Comment,
    Title,
    Username,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Comment, Source::Title, Source::Username];

    pub fn name(self) -> &'static str {
        match self {
            Source::Comment => "comment",
            Source::Title => "title",
            Source::Username => "username",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "comment" => Ok(Source::Comment),
            "title" => Ok(Source::Title),
            "username" | "user" => Ok(Source::Username),
            other => Err(Error::InvalidArgument(format!("unknown source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    CharNgram,
    WordNgram,
    CategoryLex,
    EmotionLex,
}

impl FeatureGroup {
    /// Short name used in namespaced vocabulary keys and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::CharNgram => "char",
            FeatureGroup::WordNgram => "word",
            FeatureGroup::CategoryLex => "liwc",
            FeatureGroup::EmotionLex => "nrc",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "char" => Ok(FeatureGroup::CharNgram),
            "word" => Ok(FeatureGroup::WordNgram),
            "liwc" | "category" => Ok(FeatureGroup::CategoryLex),
            "nrc" | "emotion" => Ok(FeatureGroup::EmotionLex),
            other => Err(Error::InvalidArgument(format!("unknown feature group `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    groups: BTreeSet<FeatureGroup>,
    sources: BTreeSet<Source>,
    char_orders: Vec<usize>,
    word_orders: Vec<usize>,
}

impl FeatureConfig {
    pub const DEFAULT_CHAR_ORDERS: [usize; 3] = [2, 3, 4];
    pub const DEFAULT_WORD_ORDERS: [usize; 2] = [1, 2];

    pub fn new(
        groups: impl IntoIterator<Item = FeatureGroup>,
        sources: impl IntoIterator<Item = Source>,
    ) -> Result<Self> {
        let groups: BTreeSet<_> = groups.into_iter().collect();
        let sources: BTreeSet<_> = sources.into_iter().collect();
        if groups.is_empty() {
            return Err(Error::InvalidArgument("no feature groups enabled".into()));
        }
        if sources.is_empty() {
            return Err(Error::InvalidArgument("no feature sources enabled".into()));
        }
        Ok(FeatureConfig {
            groups,
            sources,
            char_orders: Self::DEFAULT_CHAR_ORDERS.to_vec(),
            word_orders: Self::DEFAULT_WORD_ORDERS.to_vec(),
        })
    }

    pub fn with_orders(mut self, char_orders: Vec<usize>, word_orders: Vec<usize>) -> Result<Self> {
        if char_orders.iter().chain(&word_orders).any(|&n| n == 0) {
            return Err(Error::InvalidArgument("n-gram order 0".into()));
        }
        self.char_orders = char_orders;
        self.word_orders = word_orders;
        Ok(self)
    }

    pub fn groups(&self) -> &BTreeSet<FeatureGroup> {
        &self.groups
    }

    pub fn sources(&self) -> &BTreeSet<Source> {
        &self.sources
    }

    pub fn has(&self, group: FeatureGroup) -> bool {
        self.groups.contains(&group)
    }

    pub fn char_orders(&self) -> &[usize] {
        &self.char_orders
    }

    pub fn word_orders(&self) -> &[usize] {
        &self.word_orders
    }
}

/// A comment together with its two context texts.
#[derive(Debug, Clone, Copy)]
pub struct Document<'a> {
    pub comment: &'a str,
    pub title: &'a str,
    pub username: &'a str,
}

impl<'a> Document<'a> {
    pub fn text(&self, source: Source) -> &'a str {
        match source {
            Source::Comment => self.comment,
            Source::Title => self.title,
            Source::Username => self.username,
        }
    }

    /// Tokens of one source. The screen name is a single token.
    pub fn tokens(&self, source: Source) -> Vec<String> {
        match source {
            Source::Username if self.username.trim().is_empty() => Vec::new(),
            Source::Username => vec![self.username.trim().to_lowercase()],
            other => tokenize(self.text(other)),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub category: Option<CategoryLexicon>,
    pub emotion: Option<EmotionLexicon>,
}
