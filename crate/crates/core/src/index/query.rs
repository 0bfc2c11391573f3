use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Index, IndexError, IndexedDoc, UNKNOWN_REGION};
use crate::concept::ConceptType;
use crate::lexicon::{fold, word_tokens};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    #[default]
    DateDesc,
    DateAsc,
}

impl std::str::FromStr for SortOrder {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "date_desc" | "date-desc" | "desc" => Ok(SortOrder::DateDesc),
            "date_asc" | "date-asc" | "asc" => Ok(SortOrder::DateAsc),
            other => Err(IndexError::InvalidQuery(format!(
                "unknown sort order {other:?}"
            ))),
        }
    }
}

/// A portal query. Species values are canonical ids; a bare name such as
/// `ble` in the `crop` field is read as `crop:ble`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub crop: Option<String>,
    pub disease: Option<String>,
    pub pest: Option<String>,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
    pub free_word: Option<String>,
    pub region: Option<String>,
    #[serde(default)]
    pub sort: SortOrder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Species {
    Single(String),
    Pair(String, String),
}

fn qualify(concept: ConceptType, id: &Option<String>) -> Option<String> {
    let id = id.as_deref()?.trim();
    if id.is_empty() {
        return None;
    }
    Some(if id.contains(':') {
        id.to_string()
    } else {
        format!("{concept}:{id}")
    })
}

impl Query {
    pub fn validate(&self) -> Result<(), IndexError> {
        self.species().map(|_| ())?;
        if let (Some(from), Some(to)) = (self.date_from, self.date_to) {
            if from > to {
                return Err(IndexError::InvalidQuery(format!(
                    "date_from {from} is after date_to {to}"
                )));
            }
        }
        Ok(())
    }

    fn species(&self) -> Result<Species, IndexError> {
        let crop = qualify(ConceptType::Crop, &self.crop);
        let disease = qualify(ConceptType::Disease, &self.disease);
        let pest = qualify(ConceptType::Pest, &self.pest);
        match (crop, disease, pest) {
            (None, None, None) => Err(IndexError::InvalidQuery(
                "at least one of crop, disease or pest is required".into(),
            )),
            (Some(c), None, None) => Ok(Species::Single(c)),
            (None, Some(d), None) => Ok(Species::Single(d)),
            (None, None, Some(p)) => Ok(Species::Single(p)),
            (Some(c), Some(d), None) => Ok(Species::Pair(c, d)),
            (Some(c), None, Some(p)) => Ok(Species::Pair(c, p)),
            _ => Err(IndexError::InvalidQuery(
                "combine a crop with either a disease or a pest, not both".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocHit {
    pub doc_id: String,
    pub date: Option<NaiveDate>,
    pub region: Option<String>,
    pub issue: Option<String>,
}

impl DocHit {
    fn of(d: &IndexedDoc) -> Self {
        Self {
            doc_id: d.id.clone(),
            date: d.date,
            region: d.region.clone(),
            issue: d.issue.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub docs: Vec<DocHit>,
    /// Every listed region plus `unknown`; values sum to `total`.
    pub region_hits: BTreeMap<String, usize>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartnerCount {
    pub id: String,
    pub concept: ConceptType,
    /// Number of documents in the region relating the species to this partner.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    pub doc_id: String,
    pub date: Option<NaiveDate>,
    pub region: Option<String>,
    pub block: usize,
    pub snippet: String,
    pub damage: Vec<String>,
}

/// Date ordering with undated documents last in both directions, then id.
fn cmp_dated(
    a: (Option<NaiveDate>, &str),
    b: (Option<NaiveDate>, &str),
    order: SortOrder,
) -> Ordering {
    let by_date = match (a.0, b.0) {
        (Some(x), Some(y)) => match order {
            SortOrder::DateDesc => y.cmp(&x),
            SortOrder::DateAsc => x.cmp(&y),
        },
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    };
    by_date.then_with(|| a.1.cmp(b.1))
}

impl Index {
    /// Resolves a region filter to a listed name or `unknown`.
    fn region_key(&self, region: &str) -> Option<String> {
        if fold(region) == UNKNOWN_REGION {
            return Some(UNKNOWN_REGION.to_string());
        }
        self.regions().resolve(region).map(str::to_string)
    }

    pub fn search(&self, q: &Query) -> Result<QueryResult, IndexError> {
        q.validate()?;
        let candidates: Option<&BTreeSet<u32>> = match q.species()? {
            Species::Single(id) => self.species_docs.get(&id),
            Species::Pair(a, b) => self.pair_docs.get(&(a, b)),
        };
        let region = match q.region.as_deref().map(str::trim).filter(|r| !r.is_empty()) {
            None => None,
            Some(r) => Some(
                self.region_key(r)
                    .ok_or_else(|| IndexError::InvalidQuery(format!("unknown region {r:?}")))?,
            ),
        };
        let word_filter: Option<Vec<HashSet<u32>>> = q.free_word.as_deref().and_then(|w| {
            let toks = word_tokens(w);
            (!toks.is_empty()).then(|| {
                toks.iter()
                    .map(|t| {
                        self.tokens
                            .get(t)
                            .map(|v| v.iter().copied().collect())
                            .unwrap_or_default()
                    })
                    .collect()
            })
        });

        let mut hits: Vec<&IndexedDoc> = Vec::new();
        for &ord in candidates.into_iter().flatten() {
            let d = &self.docs[ord as usize];
            if q.date_from.is_some() || q.date_to.is_some() {
                let Some(date) = d.date else { continue };
                if q.date_from.is_some_and(|f| date < f) || q.date_to.is_some_and(|t| date > t) {
                    continue;
                }
            }
            if let Some(r) = &region {
                if d.region.as_deref().unwrap_or(UNKNOWN_REGION) != r {
                    continue;
                }
            }
            if let Some(sets) = &word_filter {
                if !sets.iter().all(|s| s.contains(&ord)) {
                    continue;
                }
            }
            hits.push(d);
        }
        hits.sort_by(|a, b| cmp_dated((a.date, &a.id), (b.date, &b.id), q.sort));

        let mut region_hits: BTreeMap<String, usize> = self
            .regions()
            .names()
            .iter()
            .map(|r| (r.clone(), 0))
            .collect();
        region_hits.insert(UNKNOWN_REGION.to_string(), 0);
        for d in &hits {
            *region_hits
                .entry(d.region.clone().unwrap_or_else(|| UNKNOWN_REGION.into()))
                .or_default() += 1;
        }
        Ok(QueryResult {
            total: hits.len(),
            docs: hits.into_iter().map(DocHit::of).collect(),
            region_hits,
        })
    }

    /// Partners related to `species` in documents of `region`, by document
    /// count descending then id.
    pub fn partners(&self, region: &str, species: &str) -> Result<Vec<PartnerCount>, IndexError> {
        let key = self
            .region_key(region)
            .ok_or_else(|| IndexError::UnknownRegion(region.to_string()))?;
        let mut counts: BTreeMap<(&str, ConceptType), BTreeSet<u32>> = BTreeMap::new();
        for &ord in self.region_docs.get(&key).into_iter().flatten() {
            for &ri in &self.doc_relations[ord as usize] {
                let r = &self.relations[ri];
                let partner = if r.subject.id == species {
                    &r.object
                } else if r.object.id == species {
                    &r.subject
                } else {
                    continue;
                };
                counts
                    .entry((&partner.id, partner.concept))
                    .or_default()
                    .insert(ord);
            }
        }
        let mut out: Vec<PartnerCount> = counts
            .into_iter()
            .map(|((id, concept), docs)| PartnerCount {
                id: id.to_string(),
                concept,
                count: docs.len(),
            })
            .collect();
        out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.id.cmp(&b.id)));
        Ok(out)
    }

    /// Evidence snippets of the (subject, object) relation, newest first.
    pub fn citations(&self, subject: &str, object: &str, region: Option<&str>) -> Vec<Citation> {
        let region = match region.map(str::trim).filter(|r| !r.is_empty()) {
            None => None,
            Some(r) => match self.region_key(r) {
                Some(k) => Some(k),
                None => return Vec::new(),
            },
        };
        let key = (subject.to_string(), object.to_string());
        let mut out = Vec::new();
        for &ri in self.pair_relations.get(&key).into_iter().flatten() {
            let r = &self.relations[ri];
            let Some(d) = self.document(&r.doc_id) else {
                continue;
            };
            if let Some(k) = &region {
                if d.region.as_deref().unwrap_or(UNKNOWN_REGION) != k {
                    continue;
                }
            }
            for ev in &r.evidence {
                out.push(Citation {
                    doc_id: d.id.clone(),
                    date: d.date,
                    region: d.region.clone(),
                    block: ev.block,
                    snippet: ev.snippet.clone(),
                    damage: r.damage.clone(),
                });
            }
        }
        out.sort_by(|a, b| {
            cmp_dated(
                (a.date, &a.doc_id),
                (b.date, &b.doc_id),
                SortOrder::DateDesc,
            )
            .then(a.block.cmp(&b.block))
        });
        out.dedup();
        out
    }
}
