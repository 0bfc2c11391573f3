//! Immutable on-disk index over documents, mentions and relations.
//!
//! Directory layout (all files UTF-8, LF line endings):
//!
//! | file              | content                                                          |
//! |-------------------|------------------------------------------------------------------|
//! | `documents.jsonl` | one [`IndexedDoc`] per line, sorted by id; line number = ordinal |
//! | `relations.jsonl` | one relation per line, sorted by (subject, object, doc_id)       |
//! | `concepts.jsonl`  | `{"id","concept","label","docs"}` per canonical id, sorted by id |
//! | `tokens.jsonl`    | `{"key","docs"}` per folded word token, sorted by token          |
//! | `regions.jsonl`   | `{"key","docs"}` per region in list order, then `unknown`        |
//! | `manifest.json`   | [`Manifest`], written last                                       |
//!
//! `docs` arrays hold ascending document ordinals. The manifest's
//! `content_hash` is `sha256:` followed by the lowercase hex SHA-256 of, for
//! each data file in the order above: the file name, a NUL byte, the file
//! length as a little-endian u64, then the file bytes.

mod query;
mod regions;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::concept::ConceptType;
use crate::doc::Document;
use crate::extract::DocItemset;
use crate::lexicon::word_tokens;
use crate::relation::{header_context, Relation, RelationConfig};

pub use query::{Citation, DocHit, PartnerCount, Query, QueryResult, SortOrder};
pub use regions::{RegionList, FRENCH_REGIONS_PRE_2016, UNKNOWN_REGION};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILES: [&str; 5] = [
    "documents.jsonl",
    "relations.jsonl",
    "concepts.jsonl",
    "tokens.jsonl",
    "regions.jsonl",
];

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("unknown region {0:?}")]
    UnknownRegion(String),
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A document together with its resolved context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    /// A name from the region list, or absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<String>,
    pub document: Document,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub id: String,
    pub concept: ConceptType,
    /// Most frequent surface form (ties: smallest string).
    pub label: String,
    pub docs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Posting {
    key: String,
    docs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub content_hash: String,
    pub documents: usize,
    pub relations: usize,
    pub mentions: usize,
    pub regions: RegionList,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexSummary {
    pub docs: usize,
    pub relations: usize,
    pub mentions: usize,
    pub content_hash: String,
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("index records serialize");
        out.push(b'\n');
    }
    out
}

fn content_hash(files: &[(&str, &[u8])]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in files {
        h.update(name.as_bytes());
        h.update([0u8]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    format!("sha256:{}", hex::encode(h.finalize()))
}

/// Resolves each document's date, region and issue. Documents with
/// relations take the relations' context; the rest read their header.
fn resolve_docs(
    corpus: &[Document],
    itemsets: &HashMap<&str, &DocItemset>,
    relations: &[Relation],
    regions: &RegionList,
) -> Vec<IndexedDoc> {
    let mut rel_ctx = HashMap::new();
    for r in relations {
        rel_ctx.entry(r.doc_id.as_str()).or_insert(&r.context);
    }
    let default_cfg = RelationConfig::default();
    let mut docs: Vec<IndexedDoc> = corpus
        .iter()
        .map(|doc| {
            let ctx = match rel_ctx.get(doc.id.as_str()) {
                Some(c) => (*c).clone(),
                None => {
                    let empty = DocItemset::empty(doc.id.clone());
                    let it = itemsets.get(doc.id.as_str()).copied().unwrap_or(&empty);
                    header_context(it, doc, &default_cfg)
                }
            };
            IndexedDoc {
                id: doc.id.clone(),
                date: ctx.date,
                region: ctx
                    .region
                    .as_deref()
                    .and_then(|r| regions.resolve(r))
                    .map(str::to_string),
                issue: ctx.issue,
                document: doc.clone(),
            }
        })
        .collect();
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    docs
}

/// Writes an index directory for the given stage outputs.
pub fn build_index(
    corpus: &[Document],
    itemsets: &[DocItemset],
    relations: &[Relation],
    regions: &RegionList,
    out_dir: &Path,
) -> Result<IndexSummary, IndexError> {
    let mut ids = HashMap::new();
    for d in corpus {
        if ids.insert(d.id.as_str(), ()).is_some() {
            return Err(IndexError::InconsistentInputs(format!(
                "duplicate document id {:?}",
                d.id
            )));
        }
    }
    let mut by_doc: HashMap<&str, &DocItemset> = HashMap::new();
    for it in itemsets {
        if !ids.contains_key(it.doc_id.as_str()) {
            return Err(IndexError::InconsistentInputs(format!(
                "mentions reference unknown document {:?}",
                it.doc_id
            )));
        }
        by_doc.insert(&it.doc_id, it);
    }
    for r in relations {
        if !ids.contains_key(r.doc_id.as_str()) {
            return Err(IndexError::InconsistentInputs(format!(
                "relations reference unknown document {:?}",
                r.doc_id
            )));
        }
    }

    let docs = resolve_docs(corpus, &by_doc, relations, regions);
    let ordinal: HashMap<&str, u32> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i as u32))
        .collect();

    let mut rels: Vec<&Relation> = relations.iter().collect();
    rels.sort_by(|a, b| {
        (&a.subject.id, &a.object.id, &a.doc_id).cmp(&(&b.subject.id, &b.object.id, &b.doc_id))
    });

    // id -> (concept, surface counts, doc ordinals)
    type Tally<'a> = (ConceptType, BTreeMap<&'a str, usize>, BTreeSet<u32>);
    let mut concepts: BTreeMap<&str, Tally> = BTreeMap::new();
    let mut mention_count = 0;
    for it in itemsets {
        let ord = ordinal[it.doc_id.as_str()];
        for m in &it.mentions {
            mention_count += 1;
            let e = concepts
                .entry(&m.canonical_id)
                .or_insert_with(|| (m.concept, BTreeMap::new(), BTreeSet::new()));
            *e.1.entry(&m.surface).or_default() += 1;
            e.2.insert(ord);
        }
    }
    let concept_entries = concepts.into_iter().map(|(id, (concept, surfaces, docs))| {
        let label = surfaces
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(s, _)| s.to_string())
            .unwrap_or_default();
        ConceptEntry {
            id: id.to_string(),
            concept,
            label,
            docs: docs.into_iter().collect(),
        }
    });

    let mut tokens: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
    let mut region_docs: Vec<Vec<u32>> = vec![Vec::new(); regions.names().len() + 1];
    for (i, d) in docs.iter().enumerate() {
        for b in &d.document.blocks {
            for t in word_tokens(&b.text) {
                tokens.entry(t).or_default().insert(i as u32);
            }
        }
        let slot = d
            .region
            .as_deref()
            .and_then(|r| regions.names().iter().position(|n| n == r))
            .unwrap_or(regions.names().len());
        region_docs[slot].push(i as u32);
    }
    let region_postings = regions
        .names()
        .iter()
        .map(String::as_str)
        .chain([UNKNOWN_REGION])
        .zip(region_docs)
        .map(|(k, docs)| Posting {
            key: k.to_string(),
            docs,
        });

    let bytes: [Vec<u8>; 5] = [
        jsonl(&docs),
        jsonl(&rels),
        jsonl(concept_entries),
        jsonl(tokens.into_iter().map(|(key, d)| Posting {
            key,
            docs: d.into_iter().collect(),
        })),
        jsonl(region_postings),
    ];
    let named: Vec<(&str, &[u8])> = DATA_FILES
        .iter()
        .copied()
        .zip(bytes.iter().map(Vec::as_slice))
        .collect();
    let hash = content_hash(&named);
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        content_hash: hash.clone(),
        documents: docs.len(),
        relations: rels.len(),
        mentions: mention_count,
        regions: regions.clone(),
        files: DATA_FILES.iter().map(|s| s.to_string()).collect(),
    };

    fs::create_dir_all(out_dir)?;
    let _ = fs::remove_file(out_dir.join(MANIFEST_FILE));
    for (name, data) in &named {
        fs::write(out_dir.join(name), data)?;
    }
    let tmp = out_dir.join(".manifest.json.tmp");
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    manifest_bytes.push(b'\n');
    fs::write(&tmp, manifest_bytes)?;
    fs::rename(&tmp, out_dir.join(MANIFEST_FILE))?;

    Ok(IndexSummary {
        docs: docs.len(),
        relations: rels.len(),
        mentions: mention_count,
        content_hash: hash,
    })
}

type PairKey = (String, String);

/// A loaded, read-only index.
#[derive(Debug)]
pub struct Index {
    manifest: Manifest,
    docs: Vec<IndexedDoc>,
    doc_by_id: HashMap<String, u32>,
    relations: Vec<Relation>,
    /// Relation indices per (subject, object).
    pair_relations: HashMap<PairKey, Vec<usize>>,
    /// Documents per canonical id appearing on either side of a relation.
    species_docs: HashMap<String, BTreeSet<u32>>,
    pair_docs: HashMap<PairKey, BTreeSet<u32>>,
    /// Relation indices per document ordinal.
    doc_relations: Vec<Vec<usize>>,
    concepts: Vec<ConceptEntry>,
    tokens: HashMap<String, Vec<u32>>,
    region_docs: HashMap<String, Vec<u32>>,
}

fn read_jsonl_file<T: serde::de::DeserializeOwned>(
    name: &str,
    bytes: &[u8],
) -> Result<Vec<T>, IndexError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| IndexError::Corrupt(format!("{name}: not UTF-8")))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| IndexError::Corrupt(format!("{name}:{}: {e}", i + 1)))
        })
        .collect()
}

impl Index {
    /// Loads and verifies an index directory.
    pub fn open(dir: &Path) -> Result<Self, IndexError> {
        let manifest_bytes = fs::read(dir.join(MANIFEST_FILE))?;
        let manifest: Manifest = serde_json::from_slice(&manifest_bytes)
            .map_err(|e| IndexError::Corrupt(format!("manifest: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(IndexError::Corrupt(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        let mut files = Vec::with_capacity(DATA_FILES.len());
        for name in DATA_FILES {
            files.push(fs::read(dir.join(name))?);
        }
        let named: Vec<(&str, &[u8])> = DATA_FILES
            .iter()
            .copied()
            .zip(files.iter().map(Vec::as_slice))
            .collect();
        if content_hash(&named) != manifest.content_hash {
            return Err(IndexError::Corrupt("content hash mismatch".into()));
        }

        let docs: Vec<IndexedDoc> = read_jsonl_file(DATA_FILES[0], &files[0])?;
        let relations: Vec<Relation> = read_jsonl_file(DATA_FILES[1], &files[1])?;
        let concepts: Vec<ConceptEntry> = read_jsonl_file(DATA_FILES[2], &files[2])?;
        let tokens: Vec<Posting> = read_jsonl_file(DATA_FILES[3], &files[3])?;
        let regions: Vec<Posting> = read_jsonl_file(DATA_FILES[4], &files[4])?;

        let doc_by_id: HashMap<String, u32> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i as u32))
            .collect();
        let mut pair_relations: HashMap<PairKey, Vec<usize>> = HashMap::new();
        let mut species_docs: HashMap<String, BTreeSet<u32>> = HashMap::new();
        let mut pair_docs: HashMap<PairKey, BTreeSet<u32>> = HashMap::new();
        let mut doc_relations = vec![Vec::new(); docs.len()];
        for (i, r) in relations.iter().enumerate() {
            let ord = *doc_by_id.get(&r.doc_id).ok_or_else(|| {
                IndexError::Corrupt(format!("relation for unknown doc {:?}", r.doc_id))
            })?;
            let key = (r.subject.id.clone(), r.object.id.clone());
            pair_relations.entry(key.clone()).or_default().push(i);
            pair_docs.entry(key).or_default().insert(ord);
            species_docs
                .entry(r.subject.id.clone())
                .or_default()
                .insert(ord);
            species_docs
                .entry(r.object.id.clone())
                .or_default()
                .insert(ord);
            doc_relations[ord as usize].push(i);
        }

        Ok(Self {
            manifest,
            docs,
            doc_by_id,
            relations,
            pair_relations,
            species_docs,
            pair_docs,
            doc_relations,
            concepts,
            tokens: tokens.into_iter().map(|p| (p.key, p.docs)).collect(),
            region_docs: regions.into_iter().map(|p| (p.key, p.docs)).collect(),
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn regions(&self) -> &RegionList {
        &self.manifest.regions
    }

    pub fn documents(&self) -> &[IndexedDoc] {
        &self.docs
    }

    pub fn document(&self, id: &str) -> Option<&IndexedDoc> {
        self.doc_by_id.get(id).map(|&i| &self.docs[i as usize])
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn concepts(&self) -> &[ConceptEntry] {
        &self.concepts
    }
}
