use std::collections::BTreeMap;

/// Gram string to occurrence count.
pub type GramCounts = BTreeMap<String, usize>;

/// Separator placed between tokens of word n-grams. Tokens never contain
/// whitespace, so the join is unambiguous.
pub const WORD_SEPARATOR: char = ' ';

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Lowercases, splits on whitespace, then splits each chunk so that every
/// maximal run of punctuation becomes its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut current = String::new();
        let mut current_punct = false;
        for c in chunk.chars() {
            let p = is_punct(c);
            if !current.is_empty() && p != current_punct {
                tokens.push(std::mem::take(&mut current));
            }
            current_punct = p;
            current.extend(c.to_lowercase());
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// Contiguous character n-grams of the lowercased text, no padding.
pub fn char_ngrams(text: &str, orders: &[usize]) -> GramCounts {
    let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let mut out = GramCounts::new();
    for &n in orders {
        if n == 0 || n > chars.len() {
            continue;
        }
        for window in chars.windows(n) {
            *out.entry(window.iter().collect()).or_insert(0) += 1;
        }
    }
    out
}

pub fn word_ngrams<S: AsRef<str>>(tokens: &[S], orders: &[usize]) -> GramCounts {
    let mut out = GramCounts::new();
    for &n in orders {
        if n == 0 || n > tokens.len() {
            continue;
        }
        for window in tokens.windows(n) {
            let mut gram = String::new();
            for (i, t) in window.iter().enumerate() {
                if i > 0 {
                    gram.push(WORD_SEPARATOR);
                }
                gram.push_str(t.as_ref());
            }
            *out.entry(gram).or_insert(0) += 1;
        }
    }
    out
}
