//! Crop-centred relations from itemsets and document structure.
//!
//! Structured documents (at least one title or subtitle) relate the target
//! entities named in a heading to the partner entities found in that
//! heading's section body. Documents made only of paragraphs fall back to
//! pairing target and partner mentions that share a paragraph. In both
//! modes blocks inside an avoided range contribute nothing, and every
//! relation carries the document-wide header context.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::concept::ConceptType;
use crate::doc::{sectionize, BlockKind, Document};
use crate::extract::{DocItemset, EntityMention};
use crate::lexicon::fold;
use crate::mention::Span;
use crate::par::{ordered_map, Parallelism};

pub const SNIPPET_MAX_CHARS: usize = 160;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RelationError {
    #[error("itemset for {itemset:?} does not belong to document {doc:?}")]
    MismatchedItemset { doc: String, itemset: String },
    #[error("invalid relation config: {0}")]
    InvalidConfig(String),
}

/// A block range excluded from relation extraction. It opens at the first
/// block starting with `start` and closes before the next block starting
/// with `end`, or runs to the end of the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvoidRule {
    pub start: String,
    #[serde(default)]
    pub end: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelationConfig {
    pub target: ConceptType,
    pub partners: BTreeSet<ConceptType>,
    pub attach: BTreeSet<ConceptType>,
    pub context: BTreeSet<ConceptType>,
    pub avoid: Vec<AvoidRule>,
}

impl Default for RelationConfig {
    fn default() -> Self {
        Self {
            target: ConceptType::Crop,
            partners: [ConceptType::Pest, ConceptType::Disease].into(),
            attach: [ConceptType::Damage].into(),
            context: [
                ConceptType::PubTime,
                ConceptType::IssueNo,
                ConceptType::Region,
            ]
            .into(),
            avoid: Vec::new(),
        }
    }
}

impl RelationConfig {
    pub fn validate(&self) -> Result<(), RelationError> {
        if self.partners.contains(&self.target) {
            return Err(RelationError::InvalidConfig(format!(
                "target concept {} cannot also be a partner",
                self.target
            )));
        }
        if self.partners.is_empty() {
            return Err(RelationError::InvalidConfig("no partner concepts".into()));
        }
        for rule in &self.avoid {
            if fold(&rule.start).is_empty()
                || rule.end.as_deref().is_some_and(|e| fold(e).is_empty())
            {
                return Err(RelationError::InvalidConfig(
                    "avoid phrases must be non-empty".into(),
                ));
            }
        }
        Ok(())
    }

    /// Parses and validates `relation.json`.
    pub fn from_json(bytes: &[u8]) -> Result<Self, RelationError> {
        let cfg: RelationConfig = serde_json::from_slice(bytes)
            .map_err(|e| RelationError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub concept: ConceptType,
    pub id: String,
}

impl EntityRef {
    fn of(m: &EntityMention) -> Self {
        Self {
            concept: m.concept,
            id: m.canonical_id.clone(),
        }
    }
}

/// Document-wide values read from the header (or from curated metadata).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Evidence {
    pub block: usize,
    /// The cooccurrence unit the pair was found in: the heading block of
    /// the section, or the paragraph itself in paragraph mode.
    pub unit: usize,
    pub snippet: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationSource {
    /// Target named in a heading, partner in its section.
    H1,
    /// Target and partner share a paragraph of a heading-free document.
    #[serde(rename = "PARA")]
    Para,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub doc_id: String,
    pub subject: EntityRef,
    pub object: EntityRef,
    pub damage: Vec<String>,
    pub context: Context,
    pub evidence: Vec<Evidence>,
    pub source: RelationSource,
}

impl Relation {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("relation serialization is infallible")
    }
}

/// Ordinals of every block inside an avoided range.
pub fn mark_avoid(doc: &Document, cfg: &RelationConfig) -> BTreeSet<usize> {
    let folded: Vec<String> = doc.blocks.iter().map(|b| fold(&b.text)).collect();
    let mut out = BTreeSet::new();
    for rule in &cfg.avoid {
        let start_phrase = fold(&rule.start);
        if start_phrase.is_empty() {
            continue;
        }
        let Some(open) = folded.iter().position(|t| t.starts_with(&start_phrase)) else {
            continue;
        };
        let close = rule
            .end
            .as_deref()
            .map(fold)
            .filter(|e| !e.is_empty())
            .and_then(|end| folded[open + 1..].iter().position(|t| t.starts_with(&end)))
            .map_or(folded.len(), |n| open + 1 + n);
        out.extend(open..close);
    }
    out
}

/// Reads date, region and issue from mentions in header blocks, first
/// occurrence of each. Avoided header blocks are skipped. Values in
/// `doc.meta` take precedence.
///
/// Regions come from `region:<Name>` canonical ids and yield `<Name>`.
pub fn header_context(itemset: &DocItemset, doc: &Document, cfg: &RelationConfig) -> Context {
    let mut ctx = Context::default();
    let avoided = mark_avoid(doc, cfg);
    let header_blocks: HashSet<usize> = doc
        .blocks
        .iter()
        .filter(|b| b.kind == BlockKind::Header && !avoided.contains(&b.index))
        .map(|b| b.index)
        .collect();
    for m in itemset
        .mentions
        .iter()
        .filter(|m| header_blocks.contains(&m.block))
    {
        if !cfg.context.contains(&m.concept) {
            continue;
        }
        match m.concept {
            ConceptType::PubTime if ctx.date.is_none() => ctx.date = m.norm,
            ConceptType::Region if ctx.region.is_none() => {
                let name = m
                    .canonical_id
                    .split_once(':')
                    .map_or(m.canonical_id.as_str(), |(_, n)| n);
                ctx.region = Some(name.to_string());
            }
            ConceptType::IssueNo if ctx.issue.is_none() => ctx.issue = Some(m.surface.clone()),
            _ => {}
        }
    }
    if let Some(meta) = &doc.meta {
        if meta.date.is_some() {
            ctx.date = meta.date;
        }
        if meta.region.is_some() {
            ctx.region = meta.region.clone();
        }
        if meta.issue.is_some() {
            ctx.issue = meta.issue.clone();
        }
    }
    ctx
}

/// Whitespace-normalized excerpt of at most [`SNIPPET_MAX_CHARS`] code
/// points, centred on `span` when the text is longer.
pub fn snippet(text: &str, span: Span) -> String {
    let chars: Vec<char> = text.chars().collect();
    let window = if chars.len() <= SNIPPET_MAX_CHARS {
        &chars[..]
    } else {
        let centre = (span.start() + span.end()) / 2;
        let start = centre
            .saturating_sub(SNIPPET_MAX_CHARS / 2)
            .min(chars.len() - SNIPPET_MAX_CHARS);
        &chars[start..start + SNIPPET_MAX_CHARS]
    };
    let s: String = window.iter().collect();
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One (subject, object) emission before per-document merging.
#[derive(Debug, Clone)]
struct Emission<'a> {
    subject: EntityRef,
    partner: &'a EntityMention,
    unit: usize,
}

/// Extracts the relations of one document.
pub fn relate_document(
    doc: &Document,
    itemset: &DocItemset,
    cfg: &RelationConfig,
) -> Result<Vec<Relation>, RelationError> {
    if itemset.doc_id != doc.id {
        return Err(RelationError::MismatchedItemset {
            doc: doc.id.clone(),
            itemset: itemset.doc_id.clone(),
        });
    }
    let avoided = mark_avoid(doc, cfg);
    let mut by_block: Vec<Vec<&EntityMention>> = vec![Vec::new(); doc.blocks.len()];
    for m in &itemset.mentions {
        if let Some(v) = by_block.get_mut(m.block) {
            v.push(m);
        }
    }

    let mut emissions: Vec<Emission<'_>> = Vec::new();
    let source = if doc.has_headings() {
        for span in sectionize(doc) {
            if avoided.contains(&span.title_block) {
                continue;
            }
            let targets: BTreeSet<EntityRef> = by_block[span.title_block]
                .iter()
                .filter(|m| m.concept == cfg.target)
                .map(|m| EntityRef::of(m))
                .collect();
            if targets.is_empty() {
                continue;
            }
            for b in span.body.clone().filter(|b| !avoided.contains(b)) {
                for p in by_block[b]
                    .iter()
                    .filter(|m| cfg.partners.contains(&m.concept))
                {
                    for t in &targets {
                        emissions.push(Emission {
                            subject: t.clone(),
                            partner: p,
                            unit: span.title_block,
                        });
                    }
                }
            }
        }
        RelationSource::H1
    } else {
        for block in doc.blocks.iter().filter(|b| b.kind == BlockKind::Paragraph) {
            if avoided.contains(&block.index) {
                continue;
            }
            let mentions = &by_block[block.index];
            let targets: BTreeSet<EntityRef> = mentions
                .iter()
                .filter(|m| m.concept == cfg.target)
                .map(|m| EntityRef::of(m))
                .collect();
            for p in mentions
                .iter()
                .filter(|m| cfg.partners.contains(&m.concept))
            {
                for t in &targets {
                    emissions.push(Emission {
                        subject: t.clone(),
                        partner: p,
                        unit: block.index,
                    });
                }
            }
        }
        RelationSource::Para
    };

    if emissions.is_empty() {
        return Ok(Vec::new());
    }
    let context = header_context(itemset, doc, cfg);

    let mut merged: BTreeMap<(String, String), Relation> = BTreeMap::new();
    for e in emissions {
        let block = e.partner.block;
        let object = EntityRef::of(e.partner);
        let rel = merged
            .entry((e.subject.id.clone(), object.id.clone()))
            .or_insert_with(|| Relation {
                doc_id: doc.id.clone(),
                subject: e.subject.clone(),
                object,
                damage: Vec::new(),
                context: context.clone(),
                evidence: Vec::new(),
                source,
            });
        for d in by_block[block]
            .iter()
            .filter(|m| cfg.attach.contains(&m.concept))
        {
            if !rel.damage.contains(&d.surface) {
                rel.damage.push(d.surface.clone());
            }
        }
        let ev = Evidence {
            block,
            unit: e.unit,
            snippet: snippet(&doc.blocks[block].text, e.partner.span),
        };
        if !rel
            .evidence
            .iter()
            .any(|x| x.block == ev.block && x.unit == ev.unit)
        {
            rel.evidence.push(ev);
        }
    }
    let mut out: Vec<Relation> = merged.into_values().collect();
    for r in &mut out {
        r.evidence.sort();
    }
    Ok(out)
}

/// Number of cooccurrence units in a document: non-avoided sections in
/// structured documents, non-avoided paragraphs otherwise.
pub fn unit_count(doc: &Document, cfg: &RelationConfig) -> usize {
    let avoided = mark_avoid(doc, cfg);
    if doc.has_headings() {
        sectionize(doc)
            .iter()
            .filter(|s| !avoided.contains(&s.title_block))
            .count()
    } else {
        doc.blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Paragraph && !avoided.contains(&b.index))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoocScore {
    pub pair: (String, String),
    pub count: u64,
    pub pmi: Option<f64>,
}

/// Unit-level cooccurrence counts and PMI over a set of relations.
///
/// `count(a, b)` is the number of distinct units (document, evidence unit)
/// in which the pair was emitted; the marginal `c(a)` counts the units in
/// which `a` takes part in any emitted pair. PMI is
/// `log2(N * count(a, b) / (c(a) * c(b)))`. Output is sorted by count
/// descending, then pair ascending.
pub fn cooc_scores(relations: &[Relation], unit_count: usize) -> Vec<CoocScore> {
    let mut pair_units: BTreeMap<(&str, &str), HashSet<(&str, usize)>> = BTreeMap::new();
    let mut marginal: HashMap<&str, HashSet<(&str, usize)>> = HashMap::new();
    for r in relations {
        for ev in &r.evidence {
            let unit = (r.doc_id.as_str(), ev.unit);
            pair_units
                .entry((&r.subject.id, &r.object.id))
                .or_default()
                .insert(unit);
            marginal.entry(&r.subject.id).or_default().insert(unit);
            marginal.entry(&r.object.id).or_default().insert(unit);
        }
    }
    let n = unit_count as f64;
    let mut out: Vec<CoocScore> = pair_units
        .into_iter()
        .map(|((a, b), units)| {
            let count = units.len() as u64;
            let ca = marginal.get(a).map_or(0, |s| s.len());
            let cb = marginal.get(b).map_or(0, |s| s.len());
            let pmi = (ca > 0 && cb > 0 && unit_count > 0)
                .then(|| (n * count as f64 / (ca as f64 * cb as f64)).log2());
            CoocScore {
                pair: (a.to_string(), b.to_string()),
                count,
                pmi,
            }
        })
        .collect();
    out.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.pair.cmp(&y.pair)));
    out
}

/// Result of relating a whole corpus.
#[derive(Debug, Clone, Default)]
pub struct RelateRun {
    pub relations: Vec<Relation>,
    pub units: usize,
    /// Documents without a matching itemset, by id.
    pub missing_itemsets: Vec<String>,
}

/// Relates every document, pairing itemsets by document id. Output keeps
/// corpus order.
pub fn relate_corpus(
    docs: &[Document],
    itemsets: &[DocItemset],
    cfg: &RelationConfig,
    parallelism: Parallelism,
) -> RelateRun {
    let by_id: HashMap<&str, &DocItemset> =
        itemsets.iter().map(|i| (i.doc_id.as_str(), i)).collect();
    let per_doc = ordered_map(docs, parallelism, |doc| match by_id.get(doc.id.as_str()) {
        Some(itemset) => {
            let rels = relate_document(doc, itemset, cfg).expect("itemset paired by id");
            Some((rels, unit_count(doc, cfg)))
        }
        None => None,
    });
    let mut run = RelateRun::default();
    for (doc, result) in docs.iter().zip(per_doc) {
        match result {
            Some((rels, units)) => {
                run.relations.extend(rels);
                run.units += units;
            }
            None => run.missing_itemsets.push(doc.id.clone()),
        }
    }
    run
}
