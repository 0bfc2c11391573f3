//! Randomized portal queries against a linear scan of the raw inputs.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use phytomine_core::index::{
    build_index, Index, Query, RegionList, SortOrder, FRENCH_REGIONS_PRE_2016,
};
use phytomine_core::relation::{Context, EntityRef, Evidence, Relation, RelationSource};
use phytomine_core::{BlockKind, ConceptType, DocMeta, Document};

use crate::common::{date, ensure, oracle_fold, oracle_words};

const DATES: [Option<&str>; 9] = [
    None,
    Some("1945-11-01"),
    Some("1945-11-02"),
    Some("1945-11-03"),
    Some("1977-03-15"),
    Some("2006-09-30"),
    Some("2011-07-27"),
    Some("2011-07-28"),
    Some("2011-07-29"),
];
const REGIONS: [Option<&str>; 8] = [
    None,
    Some("Centre"),
    Some("CENTRE"),
    Some("Bourgogne"),
    Some("Midi-Pyrénées"),
    Some("midi-pyrenees"),
    Some("Picardie"),
    Some("Atlantis"),
];
const WORDS: [&str; 8] = [
    "gel", "gelée", "Gelées", "pluie", "vent", "Blé", "orge", "sec",
];
const CROPS: [&str; 3] = ["crop:ble", "crop:colza", "crop:pomme_de_terre"];
const PARTNERS: [(ConceptType, &str); 4] = [
    (ConceptType::Disease, "disease:rouille"),
    (ConceptType::Disease, "disease:mildiou"),
    (ConceptType::Pest, "pest:mouche"),
    (ConceptType::Pest, "pest:altise"),
];

struct Corpus {
    docs: Vec<Document>,
    relations: Vec<Relation>,
}

fn corpus(rng: &mut StdRng) -> Corpus {
    let n = rng.random_range(30..=50);
    let mut docs = Vec::new();
    let mut relations = Vec::new();
    for i in 0..n {
        let meta = DocMeta {
            date: DATES.choose(rng).unwrap().map(date),
            region: REGIONS.choose(rng).unwrap().map(Into::into),
            issue: None,
        };
        let words: Vec<&str> = (0..rng.random_range(1..6))
            .map(|_| *WORDS.choose(rng).unwrap())
            .collect();
        let doc = Document::new(
            format!("s{i:02}"),
            vec![
                (BlockKind::Title, "BULLETIN".into()),
                (BlockKind::Paragraph, words.join(", ")),
            ],
            Some(meta.clone()),
        )
        .unwrap();
        let mut pairs = BTreeSet::new();
        for _ in 0..rng.random_range(0..=3) {
            pairs.insert((*CROPS.choose(rng).unwrap(), *PARTNERS.choose(rng).unwrap()));
        }
        for (crop, (concept, partner)) in pairs {
            relations.push(Relation {
                doc_id: doc.id.clone(),
                subject: EntityRef {
                    concept: ConceptType::Crop,
                    id: crop.into(),
                },
                object: EntityRef {
                    concept,
                    id: partner.into(),
                },
                damage: vec![],
                context: Context {
                    date: meta.date,
                    region: meta.region.clone(),
                    issue: None,
                },
                evidence: vec![Evidence {
                    block: 1,
                    unit: 0,
                    snippet: doc.blocks[1].text.clone(),
                }],
                source: RelationSource::H1,
            });
        }
        docs.push(doc);
    }
    Corpus { docs, relations }
}

fn random_query(rng: &mut StdRng) -> Query {
    let mut pick = |pool: &[&str]| -> Option<String> {
        if rng.random_bool(0.5) {
            return None;
        }
        let id = *pool.choose(rng).unwrap();
        Some(if rng.random_bool(0.5) {
            id.split_once(':').unwrap().1.to_string()
        } else {
            id.to_string()
        })
    };
    let crop = pick(&CROPS);
    let disease = pick(&["disease:rouille", "disease:mildiou"]);
    let pest = pick(&["pest:mouche", "pest:altise"]);
    // Mostly legal shapes: keep a crop or drop one of disease and pest.
    let (crop, disease, pest) = match rng.random_range(0..10) {
        0..=3 => (crop.or(Some("ble".into())), disease, None),
        4..=6 => (crop, None, pest.or(Some("pest:mouche".into()))),
        _ => (crop, disease, pest),
    };
    Query {
        crop,
        disease,
        pest,
        date_from: DATES.choose(rng).unwrap().map(date),
        date_to: DATES.choose(rng).unwrap().map(date),
        free_word: [
            None,
            Some("gel"),
            Some("GEL"),
            Some("gelée"),
            Some("gel pluie"),
            Some("vent"),
            Some("  "),
        ]
        .choose(rng)
        .unwrap()
        .map(Into::into),
        region: [
            None,
            Some("centre"),
            Some("BOURGOGNE"),
            Some("unknown"),
            Some("Atlantis"),
            Some("Midi-Pyrenees"),
        ]
        .choose(rng)
        .unwrap()
        .map(Into::into),
        sort: if rng.random_bool(0.5) {
            SortOrder::DateDesc
        } else {
            SortOrder::DateAsc
        },
    }
}

/// Expected result, or `None` when the query must be rejected.
struct Scan {
    docs: Vec<String>,
    hits: BTreeMap<String, usize>,
}

fn qualify(prefix: &str, v: &Option<String>) -> Option<String> {
    let v = v.as_deref()?.trim();
    if v.is_empty() {
        None
    } else if v.contains(':') {
        Some(v.to_string())
    } else {
        Some(format!("{prefix}:{v}"))
    }
}

fn region_of(raw: Option<&str>) -> String {
    raw.and_then(|r| {
        FRENCH_REGIONS_PRE_2016
            .iter()
            .find(|n| oracle_fold(n) == oracle_fold(r))
    })
    .map_or("unknown".to_string(), |n| n.to_string())
}

fn linear_scan(c: &Corpus, q: &Query) -> Option<Scan> {
    let crop = qualify("crop", &q.crop);
    let disease = qualify("disease", &q.disease);
    let pest = qualify("pest", &q.pest);
    let wanted_pair = match (&crop, &disease, &pest) {
        (None, None, None) | (_, Some(_), Some(_)) => return None,
        (Some(c), Some(o), None) | (Some(c), None, Some(o)) => Some((c.clone(), o.clone())),
        _ => None,
    };
    let single = crop.clone().or(disease.clone()).or(pest.clone()).unwrap();
    if let (Some(f), Some(t)) = (q.date_from, q.date_to) {
        if f > t {
            return None;
        }
    }
    let region_filter = match q.region.as_deref().map(str::trim).filter(|r| !r.is_empty()) {
        None => None,
        Some(r) if oracle_fold(r) == "unknown" => Some("unknown".to_string()),
        Some(r) => Some(
            FRENCH_REGIONS_PRE_2016
                .iter()
                .find(|n| oracle_fold(n) == oracle_fold(r))?
                .to_string(),
        ),
    };
    let wanted_words = q.free_word.as_deref().map(oracle_words).unwrap_or_default();

    let mut hits: Vec<(Option<NaiveDate>, String, String)> = Vec::new();
    for d in &c.docs {
        let rels: Vec<&Relation> = c.relations.iter().filter(|r| r.doc_id == d.id).collect();
        let matches_species = match &wanted_pair {
            Some((a, b)) => rels.iter().any(|r| &r.subject.id == a && &r.object.id == b),
            None => rels
                .iter()
                .any(|r| r.subject.id == single || r.object.id == single),
        };
        if !matches_species {
            continue;
        }
        let meta = d.meta.clone().unwrap_or_default();
        if q.date_from.is_some() || q.date_to.is_some() {
            match meta.date {
                None => continue,
                Some(x) => {
                    if q.date_from.is_some_and(|f| x < f) || q.date_to.is_some_and(|t| x > t) {
                        continue;
                    }
                }
            }
        }
        let region = region_of(meta.region.as_deref());
        if region_filter.as_ref().is_some_and(|r| *r != region) {
            continue;
        }
        let words: BTreeSet<String> = d
            .blocks
            .iter()
            .flat_map(|b| oracle_words(&b.text))
            .collect();
        if !wanted_words.is_subset(&words) {
            continue;
        }
        hits.push((meta.date, d.id.clone(), region));
    }
    hits.sort_by(|a, b| {
        let by_date = match (a.0, b.0) {
            (Some(x), Some(y)) if q.sort == SortOrder::DateAsc => x.cmp(&y),
            (Some(x), Some(y)) => y.cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        by_date.then(a.1.cmp(&b.1))
    });
    let mut counts: BTreeMap<String, usize> = FRENCH_REGIONS_PRE_2016
        .iter()
        .map(|r| (r.to_string(), 0))
        .collect();
    counts.insert("unknown".into(), 0);
    for h in &hits {
        *counts.get_mut(&h.2).unwrap() += 1;
    }
    Some(Scan {
        docs: hits.into_iter().map(|h| h.1).collect(),
        hits: counts,
    })
}

pub fn search_equivalence() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    let c = corpus(&mut rng);
    let dir = tempfile::tempdir().unwrap();
    build_index(
        &c.docs,
        &[],
        &c.relations,
        &RegionList::default(),
        dir.path(),
    )
    .map_err(|e| e.to_string())?;
    let index = Index::open(dir.path()).map_err(|e| e.to_string())?;

    let (mut accepted, mut rejected, mut boundary_hits) = (0, 0, 0);
    let bounds = [date("1945-11-02"), date("2011-07-28")];
    for i in 0..500 {
        let q = random_query(&mut rng);
        let got = index.search(&q);
        match (linear_scan(&c, &q), got) {
            (None, Err(_)) => rejected += 1,
            (None, Ok(r)) => {
                return Err(format!("query {i} {q:?} should fail, got {} docs", r.total))
            }
            (Some(_), Err(e)) => return Err(format!("query {i} {q:?} failed: {e}")),
            (Some(want), Ok(r)) => {
                let ids: Vec<String> = r.docs.iter().map(|d| d.doc_id.clone()).collect();
                ensure(ids == want.docs, || {
                    format!("query {i} {q:?}: docs {ids:?}, want {:?}", want.docs)
                })?;
                ensure(r.region_hits == want.hits, || {
                    format!("query {i} {q:?}: histogram {:?}", r.region_hits)
                })?;
                ensure(
                    r.total == ids.len() && r.region_hits.values().sum::<usize>() == r.total,
                    || {
                        format!(
                            "query {i} {q:?}: histogram sum differs from total {}",
                            r.total
                        )
                    },
                )?;
                accepted += 1;
                if r.docs
                    .iter()
                    .any(|d| d.date.is_some_and(|x| bounds.contains(&x)))
                    && (q.date_from.is_some_and(|f| bounds.contains(&f))
                        || q.date_to.is_some_and(|t| bounds.contains(&t)))
                {
                    boundary_hits += 1;
                }
            }
        }
    }
    ensure(boundary_hits > 0, || {
        "no query exercised an inclusive boundary".into()
    })?;
    Ok(format!(
        "{} docs, 500 queries ({accepted} answered, {rejected} rejected, {boundary_hits} on date bounds)",
        c.docs.len()
    ))
}
