//! Pretrained word vectors in the plain text format: one `word v1 ... vn`
//! line per word, optionally preceded by a `count dim` header.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    word_map: HashMap<String, Vec<f64>>,
    zeros: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            word_map: HashMap::new(),
            zeros: vec![0.0; dim],
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::LengthMismatch {
                left: self.dim,
                right: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding component".into()));
        }
        self.word_map.insert(word.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.word_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_map.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.word_map.contains_key(word)
    }

    /// The word's vector, or the zero vector when unknown.
    pub fn lookup(&self, word: &str) -> &[f64] {
        self.word_map.get(word).map_or(&self.zeros, Vec::as_slice)
    }

    pub fn read<R: BufRead>(reader: R, dim: usize) -> Result<Self> {
        let mut table = EmbeddingTable::new(dim);
        let mut declared: Option<usize> = None;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(line_no, 1, e.to_string()))?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 && dim != 1 {
                if let (Ok(count), Ok(d)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                    if d != dim {
                        return Err(Error::parse(line_no, 1, format!("header declares dim {d}, expected {dim}")));
                    }
                    declared = Some(count);
                    continue;
                }
            }
            if rest.len() != dim {
                return Err(Error::parse(
                    line_no,
                    word.len() + 2,
                    format!("expected {dim} components for `{word}`, found {}", rest.len()),
                ));
            }
            let vector = rest
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(line_no, 1, format!("bad component `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            table.word_map.insert(word.to_string(), vector);
        }
        if let Some(count) = declared {
            if count != table.len() {
                return Err(Error::parse(1, 1, format!("header declares {count} words, file has {}", table.len())));
            }
        }
        Ok(table)
    }

    /// Writes with a `count dim` header, words sorted. Components use the
    /// shortest representation that parses back to the same value.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        let mut words: Vec<&String> = self.word_map.keys().collect();
        words.sort();
        for w in words {
            write!(out, "{w}")?;
            for v in &self.word_map[w] {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn load_embeddings(path: impl AsRef<Path>, dim: usize) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::read(std::io::BufReader::new(f), dim)
}
