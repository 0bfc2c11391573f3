//! JSONL corpus and stage-file IO shared by the pipeline stages.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::doc::{parse_document_json, Document};

/// A per-record failure. `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusError {
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    pub message: String,
}

impl CorpusError {
    pub fn new(line: usize, doc_id: Option<String>, message: String) -> Self {
        Self {
            line,
            doc_id,
            message,
        }
    }
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.doc_id {
            Some(id) => write!(f, "line {} ({id}): {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunReport {
    pub documents: usize,
    pub errors: Vec<CorpusError>,
}

impl RunReport {
    pub fn is_partial(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// Reads a whole JSONL corpus, skipping blank lines. Bad records and
/// repeated ids are reported, not fatal.
pub fn read_corpus<R: BufRead>(input: R) -> io::Result<(Vec<Document>, Vec<CorpusError>)> {
    let mut docs = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_document_json(line.as_bytes()) {
            Ok(doc) => {
                if seen.insert(doc.id.clone()) {
                    docs.push(doc);
                } else {
                    errors.push(CorpusError::new(
                        i + 1,
                        Some(doc.id),
                        "duplicate document id".into(),
                    ));
                }
            }
            Err(e) => errors.push(CorpusError::new(i + 1, None, e.to_string())),
        }
    }
    Ok((docs, errors))
}

/// Reads any JSONL file of serde records.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(
    input: R,
) -> io::Result<(Vec<T>, Vec<CorpusError>)> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            Err(e) => errors.push(CorpusError::new(i + 1, None, e.to_string())),
        }
    }
    Ok((out, errors))
}

pub fn write_jsonl<T: Serialize, W: Write>(mut out: W, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
