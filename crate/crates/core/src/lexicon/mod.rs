//! Domain thesaurus loading and dictionary matching.
//!
//! Surfaces are folded (see [`fold`]) and stored in a char trie. Matching
//! walks the trie from every token boundary of the folded block text and
//! keeps candidates that also end on a boundary; within one concept type the
//! candidates are then reduced leftmost-longest.

mod fold;

use std::collections::HashMap;

use serde::Serialize;

use crate::concept::ConceptType;
use crate::doc::Block;
use crate::mention::{slice_chars, Match, MatchSource, Span};

pub use fold::{fold, is_word_char, tokenize, word_tokens, FoldedText, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(
        "line {line}: surface {surface:?} ({concept}) already maps to {existing}, cannot also map to {conflicting}"
    )]
    AmbiguousSurface {
        line: usize,
        surface: String,
        concept: ConceptType,
        existing: String,
        conflicting: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LexiconEntry {
    pub canonical_id: String,
    pub concept: ConceptType,
    /// Surfaces as written in the lexicon file, in file order.
    pub surfaces: Vec<String>,
}

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<char, u32>,
    /// (concept, entry index) pairs whose folded surface ends here.
    terminals: Vec<(ConceptType, usize)>,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    by_id: HashMap<String, usize>,
    nodes: Vec<TrieNode>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            by_id: HashMap::new(),
            nodes: vec![TrieNode::default()],
        }
    }
}

impl Lexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn get(&self, canonical_id: &str) -> Option<&LexiconEntry> {
        self.by_id.get(canonical_id).map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds one surface. `line` is only used for error reporting.
    pub fn insert(
        &mut self,
        canonical_id: &str,
        concept: ConceptType,
        surface: &str,
        line: usize,
    ) -> Result<(), LexiconError> {
        let format = |message: String| LexiconError::Format { line, message };
        if canonical_id.is_empty() {
            return Err(format("empty canonical id".into()));
        }
        match canonical_id.split_once(':') {
            Some((prefix, rest)) if prefix == concept.as_str() && !rest.is_empty() => {}
            _ => {
                return Err(format(format!(
                    "canonical id {canonical_id:?} must be of the form \"{concept}:<name>\""
                )))
            }
        }
        let folded = fold(surface);
        if folded.is_empty() {
            return Err(format("empty surface".into()));
        }

        let entry_idx = match self.by_id.get(canonical_id) {
            Some(&i) => {
                if self.entries[i].concept != concept {
                    return Err(format(format!(
                        "canonical id {canonical_id:?} already declared with concept {}",
                        self.entries[i].concept
                    )));
                }
                i
            }
            None => {
                self.entries.push(LexiconEntry {
                    canonical_id: canonical_id.to_string(),
                    concept,
                    surfaces: Vec::new(),
                });
                self.by_id
                    .insert(canonical_id.to_string(), self.entries.len() - 1);
                self.entries.len() - 1
            }
        };

        let mut node = 0usize;
        for c in folded.chars() {
            node = match self.nodes[node].children.get(&c) {
                Some(&n) => n as usize,
                None => {
                    self.nodes.push(TrieNode::default());
                    let n = self.nodes.len() - 1;
                    self.nodes[node].children.insert(c, n as u32);
                    n
                }
            };
        }
        let terminals = &mut self.nodes[node].terminals;
        if let Some(&(_, existing)) = terminals.iter().find(|(c, _)| *c == concept) {
            if existing != entry_idx {
                return Err(LexiconError::AmbiguousSurface {
                    line,
                    surface: surface.to_string(),
                    concept,
                    existing: self.entries[existing].canonical_id.clone(),
                    conflicting: canonical_id.to_string(),
                });
            }
        } else {
            terminals.push((concept, entry_idx));
        }
        if !self.entries[entry_idx]
            .surfaces
            .iter()
            .any(|s| s == surface)
        {
            self.entries[entry_idx].surfaces.push(surface.to_string());
        }
        Ok(())
    }

    /// Parses the TSV thesaurus format:
    /// `canonical_id <TAB> concept_type <TAB> surface`, `#` comments.
    pub fn load_tsv(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::empty();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() != 3 {
                return Err(LexiconError::Format {
                    line,
                    message: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            }
            let concept: ConceptType =
                cols[1]
                    .trim()
                    .parse()
                    .map_err(|e: crate::concept::UnknownConcept| LexiconError::Format {
                        line,
                        message: e.to_string(),
                    })?;
            lex.insert(cols[0].trim(), concept, cols[2].trim(), line)?;
        }
        Ok(lex)
    }

    /// Every boundary-aligned occurrence of any folded surface, unreduced:
    /// `(folded start, folded end, concept, entry index)`.
    fn candidates(&self, folded: &FoldedText) -> Vec<(usize, usize, ConceptType, usize)> {
        let chars = &folded.chars;
        let mut out = Vec::new();
        for start in 0..chars.len() {
            if chars[start] == ' ' || !folded.is_boundary(start) {
                continue;
            }
            let mut node = 0usize;
            for (pos, c) in chars.iter().enumerate().skip(start) {
                let Some(&next) = self.nodes[node].children.get(c) else {
                    break;
                };
                node = next as usize;
                let end = pos + 1;
                if !self.nodes[node].terminals.is_empty() && folded.is_boundary(end) {
                    for &(concept, idx) in &self.nodes[node].terminals {
                        out.push((start, end, concept, idx));
                    }
                }
            }
        }
        out
    }

    /// Dictionary matches in one block, sorted by (start, concept).
    pub fn match_block(&self, block: &Block) -> Vec<Match> {
        self.match_text(&block.text)
    }

    pub fn match_text(&self, text: &str) -> Vec<Match> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        let folded = FoldedText::new(text);
        let mut cands = self.candidates(&folded);
        // Leftmost first, longest first, per concept.
        cands.sort_by(|a, b| a.2.cmp(&b.2).then(a.0.cmp(&b.0)).then(b.1.cmp(&a.1)));
        let mut out = Vec::new();
        let mut last: Option<(ConceptType, usize)> = None;
        for (start, end, concept, idx) in cands {
            if let Some((c, e)) = last {
                if c == concept && start < e {
                    continue;
                }
            }
            last = Some((concept, end));
            let (s, e) = folded.source_span(start, end);
            let span = Span(s, e);
            out.push(Match {
                concept,
                canonical_id: self.entries[idx].canonical_id.clone(),
                surface: slice_chars(text, span),
                span,
                norm: None,
                source: MatchSource::Lexicon,
            });
        }
        out.sort_by_key(|m| (m.span.start(), m.concept));
        out
    }
}
