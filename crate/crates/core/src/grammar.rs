//! Local-grammar token patterns for productive concepts (dates, issue
//! numbers, damage expressions, developmental stages).
//!
//! Rule file grammar, one rule per line, `#` starts a comment line:
//!
//! ```text
//! rule    := "rule" NAME "->" CONCEPT ":" pattern
//! pattern := item* ( "[" item+ "]" )? item*        at least one item overall
//! item    := atom "?"?
//! atom    := STRING | "<NUM>" | "<WORD>" | "<PCT>" | "(" STRING ( "|" STRING )* ")"
//! STRING  := '"' ( any char except '"' and '\' | '\"' | '\\' )+ '"'
//! NAME    := [A-Za-z0-9_]+
//! CONCEPT := one of the eleven concept type names
//! ```
//!
//! Literals are folded and must fold to exactly one token. `<NUM>` matches a
//! token made only of ASCII digits, `<WORD>` a token made only of letters,
//! `<PCT>` the `%` token. The bracketed group is the capture (the mention
//! text); without brackets the whole pattern is captured.

use std::collections::HashSet;

use chrono::NaiveDate;

use crate::concept::ConceptType;
use crate::doc::Block;
use crate::lexicon::{fold, tokenize, FoldedText, Token, TokenKind};
use crate::mention::{slice_chars, Match, MatchSource, Span};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate rule name {name:?}")]
    DuplicateRule { line: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenClass {
    Literal(String),
    Num,
    Word,
    Pct,
    Set(Vec<String>),
}

impl TokenClass {
    fn accepts(&self, tok: &Token) -> bool {
        match self {
            TokenClass::Literal(l) => tok.text == *l,
            TokenClass::Num => tok.is_digits(),
            TokenClass::Word => tok.is_letters(),
            TokenClass::Pct => tok.kind == TokenKind::Symbol && tok.text == "%",
            TokenClass::Set(alts) => alts.contains(&tok.text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMatcher {
    pub class: TokenClass,
    pub optional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternRule {
    pub name: String,
    pub emits: ConceptType,
    pub pattern: Vec<TokenMatcher>,
    /// Half-open range of matcher indices forming the mention text.
    pub capture: (usize, usize),
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, GrammarError> {
        Err(GrammarError::Syntax {
            line: self.line,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let want: Vec<char> = s.chars().collect();
        if self.chars[self.pos..].starts_with(&want) {
            self.pos += want.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), GrammarError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> Result<String, GrammarError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected identifier");
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn string(&mut self) -> Result<String, GrammarError> {
        self.expect("\"")?;
        let mut out = String::new();
        loop {
            match self.chars.get(self.pos) {
                None => return self.err("unterminated string literal"),
                Some('"') => {
                    self.pos += 1;
                    break;
                }
                Some('\\') => {
                    match self.chars.get(self.pos + 1) {
                        Some(c @ ('"' | '\\')) => out.push(*c),
                        _ => return self.err("invalid escape in string literal"),
                    }
                    self.pos += 2;
                }
                Some(c) => {
                    out.push(*c);
                    self.pos += 1;
                }
            }
        }
        let folded = fold(&out);
        let toks = tokenize(&FoldedText::new(&folded));
        if toks.len() != 1 {
            return self.err(format!("literal {out:?} must be exactly one token"));
        }
        Ok(folded)
    }

    fn atom(&mut self) -> Result<TokenClass, GrammarError> {
        match self.peek() {
            Some('"') => Ok(TokenClass::Literal(self.string()?)),
            Some('<') => {
                if self.eat("<NUM>") {
                    Ok(TokenClass::Num)
                } else if self.eat("<WORD>") {
                    Ok(TokenClass::Word)
                } else if self.eat("<PCT>") {
                    Ok(TokenClass::Pct)
                } else {
                    self.err("unknown token class (want <NUM>, <WORD> or <PCT>)")
                }
            }
            Some('(') => {
                self.pos += 1;
                let mut alts = vec![self.string()?];
                while self.eat("|") {
                    alts.push(self.string()?);
                }
                self.expect(")")?;
                Ok(TokenClass::Set(alts))
            }
            Some(c) => self.err(format!("unexpected `{c}`")),
            None => self.err("unexpected end of line"),
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

fn parse_rule(src: &str, line: usize) -> Result<PatternRule, GrammarError> {
    let mut cur = Cursor::new(src, line);
    if cur.ident()? != "rule" {
        return cur.err("rule lines start with `rule`");
    }
    let name = cur.ident()?;
    cur.expect("->")?;
    let concept_name = cur.ident()?;
    let emits: ConceptType = match concept_name.parse() {
        Ok(c) => c,
        Err(e) => return cur.err(e.to_string()),
    };
    cur.expect(":")?;

    let mut pattern = Vec::new();
    let mut capture: Option<(usize, usize)> = None;
    let mut open: Option<usize> = None;
    while !cur.at_end() {
        if cur.eat("[") {
            if capture.is_some() || open.is_some() {
                return cur.err("only one capture bracket is allowed");
            }
            open = Some(pattern.len());
            continue;
        }
        if cur.eat("]") {
            let Some(start) = open.take() else {
                return cur.err("unmatched `]`");
            };
            if start == pattern.len() {
                return cur.err("empty pattern");
            }
            capture = Some((start, pattern.len()));
            continue;
        }
        let class = cur.atom()?;
        let optional = cur.eat("?");
        pattern.push(TokenMatcher { class, optional });
    }
    if open.is_some() {
        return cur.err("unclosed `[`");
    }
    if pattern.is_empty() {
        return cur.err("empty pattern");
    }
    let capture = capture.unwrap_or((0, pattern.len()));
    Ok(PatternRule {
        name,
        emits,
        pattern,
        capture,
    })
}

/// Parses a rule file. Rule names must be unique.
pub fn parse_rules(text: &str) -> Result<Vec<PatternRule>, GrammarError> {
    let mut rules = Vec::new();
    let mut names = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rule = parse_rule(trimmed, line)?;
        if !names.insert(rule.name.clone()) {
            return Err(GrammarError::DuplicateRule {
                line,
                name: rule.name,
            });
        }
        rules.push(rule);
    }
    Ok(rules)
}

/// Token positions of one successful match: `end` is the token after the
/// match, `cap` the token range of the capture group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RuleMatch {
    end: usize,
    cap: (usize, usize),
}

impl PatternRule {
    /// Longest match anchored at token `start`. Optional matchers prefer
    /// consuming, so among equally long matches the greedy one wins.
    fn longest_at(&self, tokens: &[Token], start: usize) -> Option<RuleMatch> {
        let mut best: Option<RuleMatch> = None;
        self.search(tokens, 0, start, (start, start), &mut best);
        best.filter(|m| m.end > start)
    }

    fn search(
        &self,
        tokens: &[Token],
        mi: usize,
        ti: usize,
        mut cap: (usize, usize),
        best: &mut Option<RuleMatch>,
    ) {
        if mi == self.capture.0 {
            cap.0 = ti;
        }
        if mi == self.capture.1 {
            cap.1 = ti;
        }
        if mi == self.pattern.len() {
            if best.is_none_or(|b| ti > b.end) {
                *best = Some(RuleMatch { end: ti, cap });
            }
            return;
        }
        let m = &self.pattern[mi];
        if ti < tokens.len() && m.class.accepts(&tokens[ti]) {
            self.search(tokens, mi + 1, ti + 1, cap, best);
        }
        if m.optional {
            self.search(tokens, mi + 1, ti, cap, best);
        }
    }

    /// Non-overlapping leftmost-longest matches over a token sequence.
    fn scan(&self, tokens: &[Token]) -> Vec<RuleMatch> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            match self.longest_at(tokens, i) {
                Some(m) => {
                    out.push(m);
                    i = m.end;
                }
                None => i += 1,
            }
        }
        out
    }
}

const MONTHS: [(&str, u32); 16] = [
    ("janvier", 1),
    ("fevrier", 2),
    ("mars", 3),
    ("avril", 4),
    ("mai", 5),
    ("juin", 6),
    ("juillet", 7),
    ("aout", 8),
    ("septembre", 9),
    ("octobre", 10),
    ("novembre", 11),
    ("decembre", 12),
    ("janv", 1),
    ("fev", 2),
    ("sept", 9),
    ("oct", 10),
];

fn month_number(folded: &str) -> Option<u32> {
    MONTHS.iter().find(|(m, _)| *m == folded).map(|(_, n)| *n)
}

/// Two-digit years below 30 are read as 20xx, the rest as 19xx.
pub fn expand_year(y: u32, digits: usize) -> i32 {
    match digits {
        1 | 2 if y < 30 => 2000 + y as i32,
        1 | 2 => 1900 + y as i32,
        _ => y as i32,
    }
}

/// Normalizes a captured date such as `12 avril 1998`, `1er mai 52` or
/// `12/04/1998`. Returns `None` unless day, month and year are all present
/// and form a valid calendar date.
pub fn normalize_date(tokens: &[Token]) -> Option<NaiveDate> {
    let mut day = None;
    let mut month = None;
    let mut year = None;
    let mut numbers: Vec<(u32, usize)> = Vec::new();
    let mut month_seen_at = None;
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::Word) {
        if let Some(m) = month_number(&tok.text) {
            month = Some(m);
            month_seen_at = Some(numbers.len());
        } else if tok.is_digits() && tok.text.len() <= 4 {
            numbers.push((tok.text.parse().ok()?, tok.text.len()));
        } else if tok.text == "1er" {
            numbers.push((1, 1));
        }
    }
    match month_seen_at {
        Some(at) => {
            if at >= 1 {
                day = Some(numbers[at - 1].0);
            }
            if let Some(&(y, d)) = numbers.get(at) {
                year = Some(expand_year(y, d));
            }
        }
        None if numbers.len() >= 3 => {
            day = Some(numbers[0].0);
            month = Some(numbers[1].0);
            year = Some(expand_year(numbers[2].0, numbers[2].1));
        }
        None => {}
    }
    NaiveDate::from_ymd_opt(year?, month?, day?)
}

/// Applies every rule to one block.
pub fn apply_rules(rules: &[PatternRule], block: &Block) -> Vec<Match> {
    apply_rules_text(rules, &block.text)
}

pub fn apply_rules_text(rules: &[PatternRule], text: &str) -> Vec<Match> {
    if rules.is_empty() {
        return Vec::new();
    }
    let folded = FoldedText::new(text);
    let tokens = tokenize(&folded);
    let mut out = Vec::new();
    for rule in rules {
        for m in rule.scan(&tokens) {
            let (cs, ce) = m.cap;
            if cs >= ce {
                continue;
            }
            let (s, e) = folded.source_span(tokens[cs].folded.0, tokens[ce - 1].folded.1);
            let span = Span(s, e);
            let captured = &tokens[cs..ce];
            let norm = match rule.emits {
                ConceptType::PubTime => normalize_date(captured),
                _ => None,
            };
            out.push(Match {
                concept: rule.emits,
                canonical_id: format!("{}:{}", rule.emits, rule.name),
                surface: slice_chars(text, span),
                span,
                norm,
                source: MatchSource::Grammar,
            });
        }
    }
    out.sort_by(|a, b| {
        (a.span.start(), a.concept, a.span.end(), &a.canonical_id).cmp(&(
            b.span.start(),
            b.concept,
            b.span.end(),
            &b.canonical_id,
        ))
    });
    out
}
