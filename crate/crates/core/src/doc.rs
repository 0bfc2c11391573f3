//! Bulletin documents: ordered header/title/subtitle/paragraph blocks.
//!
//! Documents arrive either as plain text, which [`segment_plaintext`] splits
//! into blocks with a few layout heuristics, or as one JSON object per line
//! in the corpus format handled by [`parse_document_json`].

use std::fmt;
use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocError {
    #[error("input has no non-blank line")]
    EmptyInput,
    #[error("format error: {0}")]
    Format(String),
}

fn format_err(msg: impl Into<String>) -> DocError {
    DocError::Format(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Header,
    Title,
    Subtitle,
    Paragraph,
}

impl BlockKind {
    /// Section level for headings: 1 for titles, 2 for subtitles.
    pub fn heading_level(self) -> Option<u8> {
        match self {
            BlockKind::Title => Some(1),
            BlockKind::Subtitle => Some(2),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Header => "header",
            BlockKind::Title => "title",
            BlockKind::Subtitle => "subtitle",
            BlockKind::Paragraph => "paragraph",
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One block of a document. `index` is the block's 0-based position and is
/// not part of the serialized form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub kind: BlockKind,
    pub text: String,
    #[serde(skip)]
    pub index: usize,
}

/// Curated per-document values that take precedence over anything
/// extracted from the header.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<String>,
}

impl DocMeta {
    pub fn is_empty(&self) -> bool {
        self.date.is_none() && self.region.is_none() && self.issue.is_none()
    }
}

/// A validated bulletin.
///
/// Construct through [`Document::new`], [`parse_document_json`] or
/// [`segment_plaintext`]; all three enforce the block invariants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDocument")]
pub struct Document {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<DocMeta>,
    pub blocks: Vec<Block>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        blocks: Vec<(BlockKind, String)>,
        meta: Option<DocMeta>,
    ) -> Result<Self, DocError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(format_err("document id must be non-empty"));
        }
        if blocks.is_empty() {
            return Err(format_err(format!("document {id:?} has no blocks")));
        }
        let mut seen_body = false;
        let mut out = Vec::with_capacity(blocks.len());
        for (index, (kind, text)) in blocks.into_iter().enumerate() {
            if text.trim().is_empty() {
                return Err(format_err(format!(
                    "document {id:?}: block {index} has empty text"
                )));
            }
            if kind == BlockKind::Header {
                if seen_body {
                    return Err(format_err(format!(
                        "document {id:?}: header block {index} follows a non-header block"
                    )));
                }
            } else {
                seen_body = true;
            }
            out.push(Block { kind, text, index });
        }
        Ok(Self {
            id,
            meta: meta.filter(|m| !m.is_empty()),
            blocks: out,
        })
    }

    pub fn has_headings(&self) -> bool {
        self.blocks.iter().any(|b| b.kind.heading_level().is_some())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("document serialization is infallible")
    }
}

#[derive(Deserialize)]
struct RawBlock {
    kind: String,
    text: String,
}

#[derive(Deserialize)]
#[doc(hidden)]
pub struct RawDocument {
    id: Option<String>,
    #[serde(default)]
    meta: Option<RawMeta>,
    blocks: Option<Vec<RawBlock>>,
}

#[derive(Deserialize)]
struct RawMeta {
    date: Option<String>,
    region: Option<String>,
    issue: Option<String>,
}

/// Parses one corpus record. Unknown fields are ignored.
pub fn parse_document_json(bytes: &[u8]) -> Result<Document, DocError> {
    let raw: RawDocument =
        serde_json::from_slice(bytes).map_err(|e| format_err(format!("invalid JSON: {e}")))?;
    Document::try_from(raw)
}

impl TryFrom<RawDocument> for Document {
    type Error = DocError;

    fn try_from(raw: RawDocument) -> Result<Self, Self::Error> {
        let id = raw.id.ok_or_else(|| format_err("missing field `id`"))?;
        let raw_blocks = raw
            .blocks
            .ok_or_else(|| format_err("missing field `blocks`"))?;
        let mut blocks = Vec::with_capacity(raw_blocks.len());
        for (i, b) in raw_blocks.into_iter().enumerate() {
            let kind = match b.kind.as_str() {
                "header" => BlockKind::Header,
                "title" => BlockKind::Title,
                "subtitle" => BlockKind::Subtitle,
                "paragraph" => BlockKind::Paragraph,
                other => return Err(format_err(format!("block {i}: unknown kind {other:?}"))),
            };
            blocks.push((kind, b.text));
        }
        let meta = match raw.meta {
            None => None,
            Some(m) => {
                let date = match m.date {
                    None => None,
                    Some(s) => Some(
                        NaiveDate::parse_from_str(&s, "%Y-%m-%d")
                            .map_err(|_| format_err(format!("bad date {s:?}, want YYYY-MM-DD")))?,
                    ),
                };
                Some(DocMeta {
                    date,
                    region: m.region,
                    issue: m.issue,
                })
            }
        };
        Document::new(id, blocks, meta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    pub header_line_limit: usize,
    pub title_max_len: usize,
    /// Minimum share of uppercase letters among all letters for a title line.
    pub title_upper_ratio: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            header_line_limit: 5,
            title_max_len: 60,
            title_upper_ratio: 0.8,
        }
    }
}

fn is_title_line(line: &str, cfg: &SegmenterConfig) -> bool {
    let trimmed = line.trim();
    if trimmed.chars().count() > cfg.title_max_len {
        return false;
    }
    let (mut letters, mut upper) = (0usize, 0usize);
    for c in trimmed.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if c.is_uppercase() {
            upper += 1;
        }
    }
    letters > 0 && upper as f64 / letters as f64 + 1e-9 >= cfg.title_upper_ratio
}

fn is_subtitle_line(line: &str, cfg: &SegmenterConfig) -> bool {
    let trimmed = line.trim();
    trimmed.ends_with(':') && trimmed.chars().count() <= cfg.title_max_len
}

/// Splits raw bulletin text into blocks.
///
/// The leading run of non-blank lines becomes one header block per line when
/// it is closed by a blank line, is followed by more content, and has at most
/// `header_line_limit` lines. Afterwards each line is classified on its own:
/// mostly-uppercase short lines are titles, short lines ending in `:` are
/// subtitles, and everything else accumulates into blank-line separated
/// paragraphs whose lines are joined with `\n`.
pub fn segment_plaintext(
    id: impl Into<String>,
    raw: &str,
    cfg: &SegmenterConfig,
) -> Result<Document, DocError> {
    let lines: Vec<&str> = raw
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let is_blank = |l: &str| l.trim().is_empty();
    let Some(first) = lines.iter().position(|l| !is_blank(l)) else {
        return Err(DocError::EmptyInput);
    };

    let mut blocks: Vec<(BlockKind, String)> = Vec::new();
    let mut pos = first;

    let run_end = lines[first..]
        .iter()
        .position(|l| is_blank(l))
        .map(|n| first + n);
    if let Some(end) = run_end {
        let has_more = lines[end..].iter().any(|l| !is_blank(l));
        if has_more && end - first <= cfg.header_line_limit {
            for line in &lines[first..end] {
                blocks.push((BlockKind::Header, (*line).to_string()));
            }
            pos = end;
        }
    }

    let mut para: Vec<&str> = Vec::new();
    let flush = |para: &mut Vec<&str>, blocks: &mut Vec<(BlockKind, String)>| {
        if !para.is_empty() {
            blocks.push((BlockKind::Paragraph, para.join("\n")));
            para.clear();
        }
    };
    for line in &lines[pos..] {
        if is_blank(line) {
            flush(&mut para, &mut blocks);
        } else if is_title_line(line, cfg) {
            flush(&mut para, &mut blocks);
            blocks.push((BlockKind::Title, (*line).to_string()));
        } else if is_subtitle_line(line, cfg) {
            flush(&mut para, &mut blocks);
            blocks.push((BlockKind::Subtitle, (*line).to_string()));
        } else {
            para.push(line);
        }
    }
    flush(&mut para, &mut blocks);

    Document::new(id, blocks, None)
}

/// A heading block together with the blocks it governs.
///
/// `body` is a half-open range of block ordinals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionSpan {
    pub title_block: usize,
    pub body: Range<usize>,
    pub level: u8,
}

/// Computes one span per title/subtitle. A span's body runs until the next
/// heading of equal or higher rank (titles outrank subtitles) or the end of
/// the document.
pub fn sectionize(doc: &Document) -> Vec<SectionSpan> {
    let blocks = &doc.blocks;
    let mut spans = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        let Some(level) = block.kind.heading_level() else {
            continue;
        };
        let end = blocks[i + 1..]
            .iter()
            .position(|b| b.kind.heading_level().is_some_and(|l| l <= level))
            .map_or(blocks.len(), |n| i + 1 + n);
        spans.push(SectionSpan {
            title_block: i,
            body: i + 1..end,
            level,
        });
    }
    spans
}
