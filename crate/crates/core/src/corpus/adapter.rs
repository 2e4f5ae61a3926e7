//! One-shot conversion of the publicly released comment dump into the
//! canonical corpus schema.
//!
//! The input is either a JSON array or JSON lines, one object per comment,
//! carrying at least `title`, `user`, `text` and `label`. Comments are grouped
//! into threads by title in order of first appearance. Thread ids are `t0`,
//! `t1`, ...; comment ids are the object's `id` field when present and
//! `<thread>-<n>` otherwise. Reply structure is not reconstructed.

use std::collections::HashMap;

use serde::Deserialize;

use super::{Comment, Corpus, Label, Thread};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct ReleasedComment {
    #[serde(default)]
    id: Option<serde_json::Value>,
    title: String,
    #[serde(alias = "username")]
    user: String,
    text: String,
    label: i64,
}

pub fn convert_released(input: &str) -> Result<Corpus> {
    let records = parse_records(input)?;
    let mut threads: Vec<Thread> = Vec::new();
    let mut by_title: HashMap<String, usize> = HashMap::new();
    for rec in records {
        let ti = *by_title.entry(rec.title.clone()).or_insert_with(|| {
            threads.push(Thread {
                thread_id: format!("t{}", threads.len()),
                news_title: rec.title.clone(),
                article_text: None,
                comments: Vec::new(),
            });
            threads.len() - 1
        });
        let thread = &mut threads[ti];
        let id = match rec.id {
            Some(serde_json::Value::String(s)) => s,
            Some(v) if !v.is_null() => v.to_string(),
            _ => format!("{}-{}", thread.thread_id, thread.comments.len()),
        };
        let label = match rec.label {
            0 => Label::NonHateful,
            1 => Label::Hateful,
            other => return Err(Error::InvalidLabel { comment: id, label: other }),
        };
        thread.comments.push(Comment {
            id,
            thread_id: thread.thread_id.clone(),
            user: rec.user,
            text: rec.text,
            parent_id: None,
            label,
        });
    }
    Corpus::new(threads)
}

fn parse_records(input: &str) -> Result<Vec<ReleasedComment>> {
    if input.trim_start().starts_with('[') {
        return serde_json::from_str(input).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()));
    }
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| Error::parse(i + 1, e.column(), e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_by_title() {
        let input = r#"{"title":"A","user":"u1","text":"x","label":1}
{"title":"B","user":"u2","text":"y","label":0}

{"title":"A","username":"u3","text":"z","label":0}"#;
        let c = convert_released(input).unwrap();
        assert_eq!(c.threads().len(), 2);
        assert_eq!(c.threads()[0].comments.len(), 2);
        assert_eq!(c.threads()[0].comments[1].id, "t0-1");
        assert_eq!(c.threads()[0].comments[1].user, "u3");
    }

    #[test]
    fn bad_line_reports_line_number() {
        let input = "{\"title\":\"A\",\"user\":\"u\",\"text\":\"x\",\"label\":1}\nnot json";
        assert!(matches!(convert_released(input), Err(Error::Parse { line: 2, .. })));
    }
}
