//! Threaded news-comment corpus: loading, validation, summary counts and
//! context lookup.
//!
//! The on-disk form is a JSON array of threads:
//!
//! ```json
//! [{"thread_id": "t1", "news_title": "...", "article_text": null,
//!   "comments": [{"id": "c1", "user": "...", "text": "...",
//!                 "parent_id": null, "label": 0}]}]
//! ```

mod adapter;
mod folds;
mod kappa;

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adapter::convert_released;
pub use folds::{make_folds, stratified_folds, FoldAssignment};
pub use kappa::cohen_kappa;

/// Word count above which a comment counts as long.
pub const LONG_COMMENT_WORDS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NonHateful,
    Hateful,
}

impl Label {
    pub fn is_hateful(self) -> bool {
        self == Label::Hateful
    }

    pub fn from_bool(hateful: bool) -> Self {
        if hateful {
            Label::Hateful
        } else {
            Label::NonHateful
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::NonHateful => 0,
            Label::Hateful => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub id: String,
    pub thread_id: String,
    /// Screen name of the poster.
    pub user: String,
    pub text: String,
    pub parent_id: Option<String>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub thread_id: String,
    pub news_title: String,
    /// Kept for completeness; no model reads it.
    pub article_text: Option<String>,
    pub comments: Vec<Comment>,
}

/// A validated corpus. Comment ids are globally unique and reply links form
/// a forest inside each thread.
#[derive(Debug, Clone)]
pub struct Corpus {
    threads: Vec<Thread>,
    index: HashMap<String, (usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_comments: usize,
    pub n_hateful: usize,
    pub n_threads: usize,
    pub n_users: usize,
    pub n_long_comments: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentContext<'a> {
    pub news_title: &'a str,
    pub username: &'a str,
}

#[derive(Serialize, Deserialize)]
struct RawThread {
    thread_id: String,
    news_title: String,
    #[serde(default)]
    article_text: Option<String>,
    comments: Vec<RawComment>,
}

#[derive(Serialize, Deserialize)]
struct RawComment {
    id: String,
    user: String,
    text: String,
    #[serde(default)]
    parent_id: Option<String>,
    label: i64,
}

impl Corpus {
    pub fn new(threads: Vec<Thread>) -> Result<Self> {
        if threads.is_empty() {
            return Err(Error::InvalidCorpus("corpus has no threads".into()));
        }
        let mut thread_ids = HashSet::new();
        let mut index = HashMap::new();
        for (ti, thread) in threads.iter().enumerate() {
            if thread.thread_id.is_empty() {
                return Err(Error::InvalidCorpus(format!("thread {ti} has an empty id")));
            }
            if !thread_ids.insert(thread.thread_id.as_str()) {
                return Err(Error::DuplicateId(thread.thread_id.clone()));
            }
            if thread.news_title.trim().is_empty() {
                return Err(Error::InvalidCorpus(format!(
                    "thread `{}` has an empty news title",
                    thread.thread_id
                )));
            }
            for (ci, comment) in thread.comments.iter().enumerate() {
                if comment.id.is_empty() {
                    return Err(Error::InvalidCorpus(format!(
                        "comment {ci} in thread `{}` has an empty id",
                        thread.thread_id
                    )));
                }
                if comment.thread_id != thread.thread_id {
                    return Err(Error::InvalidCorpus(format!(
                        "comment `{}` claims thread `{}` but sits in `{}`",
                        comment.id, comment.thread_id, thread.thread_id
                    )));
                }
                if index.insert(comment.id.clone(), (ti, ci)).is_some() {
                    return Err(Error::DuplicateId(comment.id.clone()));
                }
            }
            check_reply_forest(thread)?;
        }
        Ok(Corpus { threads, index })
    }

    pub fn threads(&self) -> &[Thread] {
        &self.threads
    }

    /// All comments in file order, paired with their thread.
    pub fn comments(&self) -> impl Iterator<Item = (&Thread, &Comment)> + '_ {
        self.threads
            .iter()
            .flat_map(|t| t.comments.iter().map(move |c| (t, c)))
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<(&Thread, &Comment)> {
        self.index.get(id).map(|&(ti, ci)| {
            let thread = &self.threads[ti];
            (thread, &thread.comments[ci])
        })
    }

    pub fn labels(&self) -> Vec<bool> {
        self.comments().map(|(_, c)| c.label.is_hateful()).collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: Vec<RawThread> = serde_json::from_str(s)
            .map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))?;
        let mut threads = Vec::with_capacity(raw.len());
        for rt in raw {
            let mut comments = Vec::with_capacity(rt.comments.len());
            for rc in rt.comments {
                let label = match rc.label {
                    0 => Label::NonHateful,
                    1 => Label::Hateful,
                    other => {
                        return Err(Error::InvalidLabel {
                            comment: rc.id,
                            label: other,
                        })
                    }
                };
                comments.push(Comment {
                    id: rc.id,
                    thread_id: rt.thread_id.clone(),
                    user: rc.user,
                    text: rc.text,
                    parent_id: rc.parent_id,
                    label,
                });
            }
            threads.push(Thread {
                thread_id: rt.thread_id,
                news_title: rt.news_title,
                article_text: rt.article_text,
                comments,
            });
        }
        Corpus::new(threads)
    }

    pub fn to_json_string(&self) -> String {
        let raw: Vec<RawThread> = self
            .threads
            .iter()
            .map(|t| RawThread {
                thread_id: t.thread_id.clone(),
                news_title: t.news_title.clone(),
                article_text: t.article_text.clone(),
                comments: t
                    .comments
                    .iter()
                    .map(|c| RawComment {
                        id: c.id.clone(),
                        user: c.user.clone(),
                        text: c.text.clone(),
                        parent_id: c.parent_id.clone(),
                        label: i64::from(c.label.as_u8()),
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&raw).expect("corpus serializes")
    }
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.threads == other.threads
    }
}

fn check_reply_forest(thread: &Thread) -> Result<()> {
    let parents: HashMap<&str, Option<&str>> = thread
        .comments
        .iter()
        .map(|c| (c.id.as_str(), c.parent_id.as_deref()))
        .collect();
    for comment in &thread.comments {
        if let Some(parent) = comment.parent_id.as_deref() {
            if !parents.contains_key(parent) {
                return Err(Error::DanglingParent {
                    comment: comment.id.clone(),
                    parent: parent.to_string(),
                    thread: thread.thread_id.clone(),
                });
            }
        }
    }
    // Walk each chain upwards; a chain longer than the thread means a cycle.
    for comment in &thread.comments {
        let mut current = comment.parent_id.as_deref();
        let mut steps = 0;
        while let Some(id) = current {
            steps += 1;
            if steps > thread.comments.len() {
                return Err(Error::InvalidCorpus(format!(
                    "reply links in thread `{}` form a cycle through `{}`",
                    thread.thread_id, comment.id
                )));
            }
            current = parents[id];
        }
    }
    Ok(())
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let mut s = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| Error::io(path, e))?;
    Corpus::from_json_str(&s)
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut users = HashSet::new();
    let mut n_hateful = 0;
    let mut n_long = 0;
    for (_, c) in corpus.comments() {
        users.insert(c.user.as_str());
        if c.label.is_hateful() {
            n_hateful += 1;
        }
        if c.text.split_whitespace().count() > LONG_COMMENT_WORDS {
            n_long += 1;
        }
    }
    CorpusStats {
        n_comments: corpus.len(),
        n_hateful,
        n_threads: corpus.threads().len(),
        n_users: users.len(),
        n_long_comments: n_long,
    }
}

/// The news title of the comment's thread and the comment's screen name.
pub fn resolve_context<'a>(comment_id: &str, corpus: &'a Corpus) -> Result<CommentContext<'a>> {
    let (thread, comment) = corpus
        .get(comment_id)
        .ok_or_else(|| Error::UnknownComment(comment_id.to_string()))?;
    Ok(CommentContext {
        news_title: &thread.news_title,
        username: &comment.user,
    })
}
