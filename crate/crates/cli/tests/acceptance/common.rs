use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::NaiveDate;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;

pub const BIN: &str = env!("CARGO_BIN_EXE_phytomine");

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Runs the CLI and requires the given exit code.
pub fn cli(args: &[&str], want_code: i32) -> Result<Output, String> {
    let out = Command::new(BIN)
        .args(args)
        .output()
        .map_err(|e| format!("spawn: {e}"))?;
    let code = out.status.code().unwrap_or(-1);
    ensure(code == want_code, || {
        format!(
            "`phytomine {}` exited {code}, wanted {want_code}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        )
    })?;
    Ok(out)
}

/// Stage outputs of one pipeline run.
pub struct Run {
    pub corpus: PathBuf,
    pub mentions: PathBuf,
    pub relations: PathBuf,
    pub index: PathBuf,
}

impl Run {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            corpus: dir.join("corpus.jsonl"),
            mentions: dir.join("mentions.jsonl"),
            relations: dir.join("relations.jsonl"),
            index: dir.join("index"),
        }
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// ingest (text) → extract → relate → index with the sample data files.
pub fn pipeline(input: &Path, dir: &Path, jobs: Option<usize>) -> Result<Run, String> {
    let run = Run::in_dir(dir);
    cli(
        &[
            "ingest",
            "--input",
            s(input),
            "--format",
            "text",
            "--out",
            s(&run.corpus),
        ],
        0,
    )?;
    let jobs = jobs.map(|j| j.to_string());
    let (lexicon, rules) = (data("lexicon.tsv"), data("rules.grm"));
    let mut extract = vec![
        "extract",
        "--corpus",
        s(&run.corpus),
        "--lexicon",
        s(&lexicon),
        "--rules",
        s(&rules),
        "--out",
        s(&run.mentions),
    ];
    if let Some(j) = &jobs {
        extract.extend(["--jobs", j]);
    }
    cli(&extract, 0)?;
    relate_only(&run, jobs.as_deref())?;
    cli(
        &[
            "index",
            "--corpus",
            s(&run.corpus),
            "--mentions",
            s(&run.mentions),
            "--relations",
            s(&run.relations),
            "--out",
            s(&run.index),
        ],
        0,
    )?;
    Ok(run)
}

pub fn relate_only(run: &Run, jobs: Option<&str>) -> Result<(), String> {
    let config = data("relation.json");
    let mut relate = vec![
        "relate",
        "--corpus",
        s(&run.corpus),
        "--mentions",
        s(&run.mentions),
        "--config",
        s(&config),
        "--out",
        s(&run.relations),
    ];
    if let Some(j) = jobs {
        relate.extend(["--jobs", j]);
    }
    cli(&relate, 0).map(|_| ())
}

pub fn read(p: &Path) -> Result<Vec<u8>, String> {
    fs::read(p).map_err(|e| format!("{}: {e}", p.display()))
}

/// Case and accent folding for the Latin letters used in the fixtures,
/// written without the library's Unicode tables.
pub fn oracle_fold(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars().flat_map(char::to_lowercase) {
        let base = match c {
            'à' | 'â' | 'ä' => 'a',
            'é' | 'è' | 'ê' | 'ë' => 'e',
            'î' | 'ï' => 'i',
            'ô' | 'ö' => 'o',
            'ù' | 'û' | 'ü' => 'u',
            'ç' => 'c',
            other => other,
        };
        out.push(base);
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn oracle_words(s: &str) -> BTreeSet<String> {
    oracle_fold(s)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

const FILLER: [&str; 24] = [
    "les",
    "parcelles",
    "observées",
    "cette",
    "semaine",
    "montrent",
    "une",
    "situation",
    "variable",
    "selon",
    "les",
    "secteurs",
    "et",
    "la",
    "pression",
    "reste",
    "modérée",
    "dans",
    "l'ensemble",
    "des",
    "exploitations",
    "suivies",
    "par",
    "le réseau",
];
const CROPS: [&str; 6] = ["BLÉ", "COLZA", "ORGE", "MAÏS", "POMME DE TERRE", "VIGNE"];
const AGENTS: [&str; 12] = [
    "rouille",
    "mildiou",
    "oïdium",
    "septoriose",
    "piétin-verse",
    "mouche",
    "mouche du chou",
    "pucerons",
    "altises",
    "doryphores",
    "taupins",
    "limaces",
];
const EXTRAS: [&str; 8] = [
    "coccinelles",
    "bouillie bordelaise",
    "gelées",
    "pluies",
    "stade épiaison",
    "floraison",
    "soufre",
    "sécheresse",
];
const REGIONS: [&str; 6] = [
    "Centre",
    "Bourgogne",
    "Midi-Pyrénées",
    "Picardie",
    "Alsace",
    "Bretagne",
];
const MONTHS: [&str; 12] = [
    "janvier",
    "février",
    "mars",
    "avril",
    "mai",
    "juin",
    "juillet",
    "août",
    "septembre",
    "octobre",
    "novembre",
    "décembre",
];

/// A plaintext bulletin of roughly one page.
pub fn synthetic_bulletin(rng: &mut StdRng) -> String {
    let mut t = String::new();
    t.push_str("AVERTISSEMENTS AGRICOLES\n");
    t.push_str(&format!("Station {}\n", REGIONS.choose(rng).unwrap()));
    t.push_str(&format!(
        "Bulletin n° {} du {} {} {}\n\n",
        rng.random_range(1..400),
        rng.random_range(1..29),
        MONTHS.choose(rng).unwrap(),
        rng.random_range(1945..2012)
    ));
    for _ in 0..rng.random_range(3..6) {
        t.push_str(CROPS.choose(rng).unwrap());
        t.push_str("\n\n");
        for _ in 0..rng.random_range(1..3) {
            let mut line: Vec<String> = Vec::new();
            for _ in 0..rng.random_range(40..70) {
                let roll = rng.random_range(0..100);
                let w = if roll < 8 {
                    AGENTS.choose(rng).unwrap().to_string()
                } else if roll < 11 {
                    EXTRAS.choose(rng).unwrap().to_string()
                } else if roll < 12 {
                    format!("{}% de parcelles touchées", rng.random_range(1..90))
                } else {
                    FILLER.choose(rng).unwrap().to_string()
                };
                line.push(w);
            }
            t.push_str(&line.join(" "));
            t.push_str(".\n\n");
        }
    }
    t
}
