use std::fs;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;

use phytomine_core::doc::{segment_plaintext, SegmenterConfig};
use phytomine_core::extract::extract_all;
use phytomine_core::grammar::parse_rules;
use phytomine_core::relation::{relate_corpus, RelationConfig};
use phytomine_core::{Lexicon, Parallelism};

use crate::common::{data, ensure, synthetic_bulletin};

pub fn throughput() -> Result<String, String> {
    let lexicon = Lexicon::load_tsv(&fs::read_to_string(data("lexicon.tsv")).unwrap())
        .map_err(|e| e.to_string())?;
    let rules =
        parse_rules(&fs::read_to_string(data("rules.grm")).unwrap()).map_err(|e| e.to_string())?;
    let cfg = RelationConfig::from_json(&fs::read(data("relation.json")).unwrap())
        .map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    let cfg_seg = SegmenterConfig::default();
    let docs: Vec<_> = (0..10_000)
        .map(|i| {
            segment_plaintext(format!("t{i:05}"), &synthetic_bulletin(&mut rng), &cfg_seg).unwrap()
        })
        .collect();
    let chars: usize = docs
        .iter()
        .flat_map(|d| &d.blocks)
        .map(|b| b.text.chars().count())
        .sum();

    let start = Instant::now();
    let itemsets = extract_all(&docs, &lexicon, &rules, Parallelism::Sequential);
    let run = relate_corpus(&docs, &itemsets, &cfg, Parallelism::Sequential);
    let elapsed = start.elapsed();

    let mentions: usize = itemsets.iter().map(|i| i.mentions.len()).sum();
    ensure(run.missing_itemsets.is_empty(), || "itemsets lost".into())?;
    ensure(!run.relations.is_empty(), || "no relations produced".into())?;
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "10000 docs ({:.1} MB text), {mentions} mentions, {} relations in {elapsed:.2?} single-threaded",
        chars as f64 / 1e6,
        run.relations.len()
    ))
}
