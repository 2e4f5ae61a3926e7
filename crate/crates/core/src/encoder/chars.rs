use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::numcore::Tensor;

/// Character inventory for one-hot screen-name encoding. Width is
/// `chars.len() + 1`; the last slot stands for any unseen character.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharVocab {
    chars: Vec<char>,
}

impl CharVocab {
    pub fn new(chars: impl IntoIterator<Item = char>) -> Self {
        let set: BTreeSet<char> = chars.into_iter().collect();
        CharVocab {
            chars: set.into_iter().collect(),
        }
    }

    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        CharVocab::new(texts.into_iter().flat_map(str::chars))
    }

    pub fn width(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn index(&self, c: char) -> usize {
        self.chars.binary_search(&c).unwrap_or(self.chars.len())
    }

    /// `[len, width]` one-hot rows; an empty text becomes one unknown char.
    pub fn encode(&self, text: &str) -> Tensor {
        let w = self.width();
        let idx: Vec<usize> = if text.is_empty() {
            vec![self.chars.len()]
        } else {
            text.chars().map(|c| self.index(c)).collect()
        };
        let mut data = vec![0.0; idx.len() * w];
        for (row, &i) in idx.iter().enumerate() {
            data[row * w + i] = 1.0;
        }
        Tensor::new(vec![idx.len(), w], data).expect("finite one-hot")
    }
}
