//! Word-to-category dictionaries.
//!
//! Category lexicon file:
//!
//! ```text
//! #categories 125
//! kill<TAB>3,7
//! ```
//!
//! Emotion lexicon file, one `word<TAB>emotion<TAB>flag` triple per line, as
//! distributed with the NRC word-emotion association lexicon.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

pub const EMOTIONS: [&str; 10] = [
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "sadness",
    "surprise",
    "trust",
    "negative",
    "positive",
];

pub const N_EMOTIONS: usize = EMOTIONS.len();

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryLexicon {
    n_categories: usize,
    word_map: HashMap<String, Vec<usize>>,
}

impl CategoryLexicon {
    pub fn new(n_categories: usize, entries: impl IntoIterator<Item = (String, Vec<usize>)>) -> Result<Self> {
        let mut word_map: HashMap<String, BTreeSet<usize>> = HashMap::new();
        for (word, cats) in entries {
            if let Some(&bad) = cats.iter().find(|&&c| c >= n_categories) {
                return Err(Error::InvalidArgument(format!(
                    "category {bad} out of range for `{word}` (n_categories = {n_categories})"
                )));
            }
            word_map.entry(word.to_lowercase()).or_default().extend(cats);
        }
        Ok(CategoryLexicon {
            n_categories,
            word_map: word_map
                .into_iter()
                .map(|(w, s)| (w, s.into_iter().collect()))
                .collect(),
        })
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn len(&self) -> usize {
        self.word_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_map.is_empty()
    }

    pub fn categories(&self, word: &str) -> Option<&[usize]> {
        self.word_map.get(word).map(Vec::as_slice)
    }

    pub fn parse(input: &str) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, 1, "missing `#categories N` header"))?;
        let n_categories = header
            .trim()
            .strip_prefix("#categories")
            .and_then(|rest| rest.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::parse(hline + 1, 1, "expected `#categories N` header"))?;

        let mut entries = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let (word, cats) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(line_no, 1, "expected `word<TAB>categories`"))?;
            let word = word.trim();
            if word.is_empty() {
                return Err(Error::parse(line_no, 1, "empty word"));
            }
            let mut parsed = Vec::new();
            for field in cats.split(',') {
                let c: usize = field.trim().parse().map_err(|_| {
                    Error::parse(line_no, word.len() + 2, format!("bad category index `{}`", field.trim()))
                })?;
                if c >= n_categories {
                    return Err(Error::parse(
                        line_no,
                        word.len() + 2,
                        format!("category {c} out of range (n_categories = {n_categories})"),
                    ));
                }
                parsed.push(c);
            }
            entries.push((word.to_string(), parsed));
        }
        CategoryLexicon::new(n_categories, entries)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmotionLexicon {
    word_map: HashMap<String, [u8; N_EMOTIONS]>,
}

impl EmotionLexicon {
    pub fn new(entries: impl IntoIterator<Item = (String, [u8; N_EMOTIONS])>) -> Result<Self> {
        let mut word_map = HashMap::new();
        for (word, v) in entries {
            if v.iter().any(|&b| b > 1) {
                return Err(Error::InvalidArgument(format!("non-binary emotion vector for `{word}`")));
            }
            word_map.insert(word.to_lowercase(), v);
        }
        Ok(EmotionLexicon { word_map })
    }

    pub fn len(&self) -> usize {
        self.word_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_map.is_empty()
    }

    pub fn vector(&self, word: &str) -> Option<&[u8; N_EMOTIONS]> {
        self.word_map.get(word)
    }

    pub fn parse(input: &str) -> Result<Self> {
        let mut word_map: HashMap<String, [u8; N_EMOTIONS]> = HashMap::new();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(line_no, 1, "expected `word<TAB>emotion<TAB>0|1`"));
            }
            let word = fields[0].trim().to_lowercase();
            if word.is_empty() {
                return Err(Error::parse(line_no, 1, "empty word"));
            }
            let dim = EMOTIONS
                .iter()
                .position(|&e| e == fields[1].trim())
                .ok_or_else(|| Error::parse(line_no, fields[0].len() + 2, format!("unknown emotion `{}`", fields[1])))?;
            let flag = match fields[2].trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::parse(
                        line_no,
                        fields[0].len() + fields[1].len() + 3,
                        format!("flag must be 0 or 1, got `{other}`"),
                    ))
                }
            };
            let v = word_map.entry(word).or_insert([0; N_EMOTIONS]);
            if flag == 1 {
                v[dim] = 1;
            }
        }
        Ok(EmotionLexicon { word_map })
    }
}

pub fn load_category_lexicon(path: impl AsRef<Path>) -> Result<CategoryLexicon> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CategoryLexicon::parse(&s)
}

pub fn load_emotion_lexicon(path: impl AsRef<Path>) -> Result<EmotionLexicon> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmotionLexicon::parse(&s)
}

/// Count of token occurrences per category.
pub fn category_vector<S: AsRef<str>>(tokens: &[S], lex: &CategoryLexicon) -> Vec<f64> {
    let mut v = vec![0.0; lex.n_categories];
    for t in tokens {
        if let Some(cats) = lex.categories(t.as_ref()) {
            for &c in cats {
                v[c] += 1.0;
            }
        }
    }
    v
}

/// Sum of the tokens' emotion indicator vectors.
pub fn emotion_vector<S: AsRef<str>>(tokens: &[S], lex: &EmotionLexicon) -> [f64; N_EMOTIONS] {
    let mut v = [0.0; N_EMOTIONS];
    for t in tokens {
        if let Some(bits) = lex.vector(t.as_ref()) {
            for (acc, &b) in v.iter_mut().zip(bits) {
                *acc += f64::from(b);
            }
        }
    }
    v
}
