use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::concept::ConceptType;

/// Half-open code-point range into a block's text. Serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span(pub usize, pub usize);

impl Span {
    pub fn start(self) -> usize {
        self.0
    }

    pub fn end(self) -> usize {
        self.1
    }

    pub fn len(self) -> usize {
        self.1 - self.0
    }

    pub fn is_empty(self) -> bool {
        self.1 <= self.0
    }

    pub fn overlaps(self, other: Span) -> bool {
        self.0 < other.1 && other.0 < self.1
    }
}

/// Where a match came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchSource {
    Lexicon,
    Grammar,
}

/// A typed occurrence inside one block, before it is attached to a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub concept: ConceptType,
    pub canonical_id: String,
    pub surface: String,
    pub span: Span,
    pub norm: Option<NaiveDate>,
    pub source: MatchSource,
}

/// Returns the code-point slice `[start, end)` of `text`.
pub fn slice_chars(text: &str, span: Span) -> String {
    text.chars().skip(span.start()).take(span.len()).collect()
}
