//! Case/diacritic folding and the shared token definition.

use unicode_normalization::char::{decompose_canonical, is_combining_mark};

/// Folded text plus, for every folded char, the code-point index of the
/// original char it came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FoldedText {
    pub chars: Vec<char>,
    pub origin: Vec<usize>,
    pub source_len: usize,
}

impl FoldedText {
    pub fn new(text: &str) -> Self {
        let mut chars = Vec::with_capacity(text.len());
        let mut origin = Vec::with_capacity(text.len());
        let mut pending_space: Option<usize> = None;
        let mut source_len = 0;
        for (idx, c) in text.chars().enumerate() {
            source_len = idx + 1;
            if c.is_whitespace() {
                if !chars.is_empty() && pending_space.is_none() {
                    pending_space = Some(idx);
                }
                continue;
            }
            for lower in c.to_lowercase() {
                decompose_canonical(lower, |d| {
                    if is_combining_mark(d) {
                        return;
                    }
                    if let Some(sp) = pending_space.take() {
                        chars.push(' ');
                        origin.push(sp);
                    }
                    chars.push(d);
                    origin.push(idx);
                });
            }
        }
        Self {
            chars,
            origin,
            source_len,
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// True when folded position `pos` sits between a letter/digit and
    /// anything else (or at either end).
    pub fn is_boundary(&self, pos: usize) -> bool {
        if pos == 0 || pos >= self.chars.len() {
            return true;
        }
        is_word_char(self.chars[pos - 1]) != is_word_char(self.chars[pos])
    }

    /// Maps a folded half-open range back to an original code-point range.
    pub fn source_span(&self, start: usize, end: usize) -> (usize, usize) {
        debug_assert!(start < end && end <= self.chars.len());
        (self.origin[start], self.origin[end - 1] + 1)
    }

    pub fn as_string(&self) -> String {
        self.chars.iter().collect()
    }
}

pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Lowercases, strips diacritics, collapses whitespace runs to one space and
/// trims.
pub fn fold(s: &str) -> String {
    FoldedText::new(s).as_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    /// A maximal run of letters and/or digits.
    Word,
    /// Any other single non-space char.
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// Folded char range.
    pub folded: (usize, usize),
}

impl Token {
    pub fn is_digits(&self) -> bool {
        self.kind == TokenKind::Word && self.text.chars().all(|c| c.is_ascii_digit())
    }

    pub fn is_letters(&self) -> bool {
        self.kind == TokenKind::Word && self.text.chars().all(char::is_alphabetic)
    }
}

/// Splits folded text into word runs and single symbol chars; spaces only
/// separate.
pub fn tokenize(folded: &FoldedText) -> Vec<Token> {
    let chars = &folded.chars;
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == ' ' {
            i += 1;
        } else if is_word_char(c) {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            tokens.push(Token {
                text: chars[start..i].iter().collect(),
                kind: TokenKind::Word,
                folded: (start, i),
            });
        } else {
            tokens.push(Token {
                text: c.to_string(),
                kind: TokenKind::Symbol,
                folded: (i, i + 1),
            });
            i += 1;
        }
    }
    tokens
}

/// Folds and tokenizes, returning only the word tokens' text.
pub fn word_tokens(s: &str) -> Vec<String> {
    tokenize(&FoldedText::new(s))
        .into_iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.text)
        .collect()
}
