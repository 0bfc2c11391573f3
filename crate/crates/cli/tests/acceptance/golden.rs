use std::collections::BTreeSet;
use std::fs;
use std::time::{Duration, Instant};

use phytomine_core::corpus::read_jsonl;
use phytomine_core::relation::{Relation, RelationSource};

use crate::common::{ensure, fixture, pipeline, read};

/// One relation as written in `golden_relations.tsv`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Gold {
    pub doc: String,
    pub subject: String,
    pub object: String,
    pub source: String,
    pub damage: BTreeSet<String>,
    pub date: Option<String>,
    pub region: Option<String>,
    pub issue: Option<String>,
}

fn non_empty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

pub fn golden_truth() -> Vec<Gold> {
    let text = fs::read_to_string(fixture("golden_relations.tsv")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            assert_eq!(c.len(), 8, "bad golden line {l:?}");
            Gold {
                doc: c[0].into(),
                subject: c[1].into(),
                object: c[2].into(),
                source: c[3].into(),
                damage: c[4]
                    .split(';')
                    .filter(|d| !d.is_empty())
                    .map(Into::into)
                    .collect(),
                date: non_empty(c[5]),
                region: non_empty(c[6]),
                issue: non_empty(c[7]),
            }
        })
        .collect()
}

pub fn as_gold(r: &Relation) -> Gold {
    Gold {
        doc: r.doc_id.clone(),
        subject: r.subject.id.clone(),
        object: r.object.id.clone(),
        source: match r.source {
            RelationSource::H1 => "H1".into(),
            RelationSource::Para => "PARA".into(),
        },
        damage: r.damage.iter().cloned().collect(),
        date: r.context.date.map(|d| d.to_string()),
        region: r.context.region.clone(),
        issue: r.context.issue.clone(),
    }
}

pub fn golden_relations() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let run = pipeline(&fixture("golden"), dir.path(), None)?;
    let elapsed = start.elapsed();

    let bytes = read(&run.relations)?;
    let (rels, errors) = read_jsonl::<Relation, _>(&bytes[..]).unwrap();
    ensure(errors.is_empty(), || {
        format!("unreadable relations: {errors:?}")
    })?;
    let got: BTreeSet<Gold> = rels.iter().map(as_gold).collect();
    ensure(got.len() == rels.len(), || {
        "duplicate (doc, subject, object) rows".into()
    })?;
    let want: BTreeSet<Gold> = golden_truth().into_iter().collect();

    let missing: Vec<_> = want.difference(&got).collect();
    let extra: Vec<_> = got.difference(&want).collect();
    ensure(missing.is_empty() && extra.is_empty(), || {
        format!("missing {missing:#?}\nunexpected {extra:#?}")
    })?;

    let flagship = rels.iter().find(|r| {
        r.doc_id == "d01" && r.subject.id == "crop:ble" && r.object.id == "disease:rouille"
    });
    ensure(
        flagship.is_some_and(|r| r.damage == ["12% de parcelles touchées"]),
        || format!("flagship relation wrong: {flagship:?}"),
    )?;
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} relations, exact match, {:.2?}",
        rels.len(),
        elapsed
    ))
}
