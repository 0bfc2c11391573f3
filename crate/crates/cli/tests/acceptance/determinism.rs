use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::SeedableRng;

use phytomine_core::index::{Manifest, DATA_FILES, MANIFEST_FILE};

use crate::common::{cli, ensure, fixture, pipeline, read, relate_only, synthetic_bulletin, Run};

fn manifest_hash(index: &Path) -> Result<String, String> {
    let m: Manifest =
        serde_json::from_slice(&read(&index.join(MANIFEST_FILE))?).map_err(|e| e.to_string())?;
    Ok(m.content_hash)
}

fn same_bytes(a: &Path, b: &Path) -> Result<(), String> {
    ensure(read(a)? == read(b)?, || {
        format!("{} and {} differ", a.display(), b.display())
    })
}

pub fn determinism() -> Result<String, String> {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = pipeline(&fixture("golden"), d1.path(), None)?;
    let b = pipeline(&fixture("golden"), d2.path(), None)?;
    for (x, y) in [
        (&a.corpus, &b.corpus),
        (&a.mentions, &b.mentions),
        (&a.relations, &b.relations),
    ] {
        same_bytes(x, y)?;
    }
    for name in DATA_FILES.iter().chain([&MANIFEST_FILE]) {
        same_bytes(&a.index.join(name), &b.index.join(name))?;
    }
    let hash = manifest_hash(&a.index)?;
    ensure(hash == manifest_hash(&b.index)?, || {
        "manifest hashes differ".into()
    })?;

    // --jobs 1 against --jobs 8 on a corpus large enough to be split.
    let src = tempfile::tempdir().unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    for i in 0..1500 {
        fs::write(
            src.path().join(format!("b{i:05}.txt")),
            synthetic_bulletin(&mut rng),
        )
        .unwrap();
    }
    let (j1, j8) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let serial = pipeline(src.path(), j1.path(), Some(1))?;
    let parallel = Run::in_dir(j8.path());
    fs::copy(&serial.corpus, &parallel.corpus).unwrap();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    cli(
        &[
            "extract",
            "--corpus",
            &s(&parallel.corpus),
            "--lexicon",
            &s(&crate::common::data("lexicon.tsv")),
            "--rules",
            &s(&crate::common::data("rules.grm")),
            "--out",
            &s(&parallel.mentions),
            "--jobs",
            "8",
        ],
        0,
    )?;
    same_bytes(&serial.mentions, &parallel.mentions)?;
    relate_only(&parallel, Some("8"))?;
    same_bytes(&serial.relations, &parallel.relations)?;
    Ok(format!(
        "two runs byte-identical, hash {}…; jobs 1 = jobs 8 on 1500 documents",
        &hash[..15]
    ))
}
