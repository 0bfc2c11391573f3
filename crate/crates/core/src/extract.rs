//! Per-document itemsets: every typed mention the lexicon and the grammar
//! find in a document's blocks.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::concept::ConceptType;
use crate::corpus::{CorpusError, RunReport};
use crate::doc::{parse_document_json, Document};
use crate::grammar::{apply_rules_text, PatternRule};
use crate::lexicon::Lexicon;
use crate::mention::{Match, Span};
use crate::par::{ordered_map, Parallelism};

/// Field order is the serialized order in mentions files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub doc_id: String,
    pub block: usize,
    pub concept: ConceptType,
    pub canonical_id: String,
    pub surface: String,
    pub span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NaiveDate>,
}

impl EntityMention {
    fn sort_key(&self) -> (usize, usize, ConceptType, usize, &str, &str) {
        (
            self.block,
            self.span.start(),
            self.concept,
            self.span.end(),
            &self.canonical_id,
            &self.surface,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocItemset {
    pub doc_id: String,
    pub mentions: Vec<EntityMention>,
}

impl DocItemset {
    pub fn empty(doc_id: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            mentions: Vec::new(),
        }
    }

    /// Sorts by (block, start, concept), then end, id and surface so the
    /// order is total.
    pub fn sort(&mut self) {
        self.mentions
            .sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }

    pub fn in_block(&self, block: usize) -> impl Iterator<Item = &EntityMention> {
        self.mentions.iter().filter(move |m| m.block == block)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("itemset serialization is infallible")
    }
}

/// Merges dictionary and grammar matches of one block. When a lexicon and
/// a grammar match of the same concept overlap, the longer one survives and
/// the lexicon wins ties. Matches from the same source are left alone.
pub fn resolve_overlaps(mut matches: Vec<Match>) -> Vec<Match> {
    let mut order: Vec<usize> = (0..matches.len()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (&matches[a], &matches[b]);
        mb.span
            .len()
            .cmp(&ma.span.len())
            .then(ma.source.cmp(&mb.source))
            .then(ma.span.start().cmp(&mb.span.start()))
            .then(a.cmp(&b))
    });
    let mut keep = vec![false; matches.len()];
    let mut accepted: Vec<usize> = Vec::new();
    for i in order {
        let m = &matches[i];
        let blocked = accepted.iter().any(|&j| {
            let other = &matches[j];
            other.concept == m.concept && other.source != m.source && other.span.overlaps(m.span)
        });
        if !blocked {
            keep[i] = true;
            accepted.push(i);
        }
    }
    let mut i = 0;
    matches.retain(|_| {
        i += 1;
        keep[i - 1]
    });
    matches
}

/// Runs the lexicon and the rules over every block of `doc`.
pub fn extract_document(doc: &Document, lexicon: &Lexicon, rules: &[PatternRule]) -> DocItemset {
    let mut itemset = DocItemset::empty(doc.id.clone());
    for block in &doc.blocks {
        let mut found = lexicon.match_block(block);
        let grammar = apply_rules_text(rules, &block.text);
        if !grammar.is_empty() {
            found.extend(grammar);
            found = resolve_overlaps(found);
        }
        itemset
            .mentions
            .extend(found.into_iter().map(|m| EntityMention {
                doc_id: doc.id.clone(),
                block: block.index,
                concept: m.concept,
                canonical_id: m.canonical_id,
                surface: m.surface,
                span: m.span,
                norm: m.norm,
            }));
    }
    itemset.sort();
    itemset
}

/// In-memory batch version of [`extract_corpus`].
pub fn extract_all(
    docs: &[Document],
    lexicon: &Lexicon,
    rules: &[PatternRule],
    parallelism: Parallelism,
) -> Vec<DocItemset> {
    ordered_map(docs, parallelism, |d| extract_document(d, lexicon, rules))
}

const CHUNK_LINES: usize = 4096;

/// Streams a JSONL corpus into a JSONL mentions file, one itemset per
/// document in input order. Malformed or duplicate documents are recorded
/// in the report and skipped.
pub fn extract_corpus<R: BufRead, W: Write>(
    input: R,
    mut out: W,
    lexicon: &Lexicon,
    rules: &[PatternRule],
    parallelism: Parallelism,
) -> io::Result<RunReport> {
    let mut report = RunReport::default();
    let mut seen = HashSet::new();
    let mut chunk: Vec<(usize, String)> = Vec::with_capacity(CHUNK_LINES);

    let mut flush = |chunk: &mut Vec<(usize, String)>, report: &mut RunReport| -> io::Result<()> {
        let results = ordered_map(chunk, parallelism, |(line, text)| {
            parse_document_json(text.as_bytes())
                .map(|doc| extract_document(&doc, lexicon, rules))
                .map_err(|e| CorpusError::new(*line, None, e.to_string()))
        });
        for (result, (line, _)) in results.into_iter().zip(chunk.iter()) {
            match result {
                Ok(itemset) => {
                    if !seen.insert(itemset.doc_id.clone()) {
                        report.errors.push(CorpusError::new(
                            *line,
                            Some(itemset.doc_id.clone()),
                            "duplicate document id".into(),
                        ));
                        continue;
                    }
                    writeln!(out, "{}", itemset.to_json_line())?;
                    report.documents += 1;
                }
                Err(e) => report.errors.push(e),
            }
        }
        chunk.clear();
        Ok(())
    };

    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        chunk.push((i + 1, line));
        if chunk.len() == CHUNK_LINES {
            flush(&mut chunk, &mut report)?;
        }
    }
    flush(&mut chunk, &mut report)?;
    Ok(report)
}
