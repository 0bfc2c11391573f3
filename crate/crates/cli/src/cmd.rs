use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use phytomine_core::corpus::{read_corpus, read_jsonl, write_jsonl};
use phytomine_core::extract::extract_corpus;
use phytomine_core::grammar::parse_rules;
use phytomine_core::index::{build_index, Index, IndexError, Query, RegionList, SortOrder};
use phytomine_core::relation::{cooc_scores, relate_corpus, RelationConfig};
use phytomine_core::{
    doc::{segment_plaintext, SegmenterConfig},
    DocItemset, Document, Lexicon, Parallelism,
};
use serde::Serialize;

use crate::{
    CitationsArgs, ExtractArgs, Failure, IndexArgs, IngestArgs, InputFormat, Outcome, OutputFormat,
    PartnersArgs, QueryArgs, RelateArgs, ServeArgs, Sort,
};

type CmdResult = Result<Outcome, Failure>;

fn fatal(what: impl std::fmt::Display, path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    let what = what.to_string();
    move |e| Failure::Fatal(format!("{what} {}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(fatal("cannot open", path))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(fatal("cannot read", path))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(fatal("cannot create", path))
}

fn outcome(partial: bool) -> Outcome {
    if partial {
        Outcome::Partial
    } else {
        Outcome::Complete
    }
}

fn load_corpus(path: &Path) -> Result<(Vec<Document>, bool), Failure> {
    let (docs, errors) = read_corpus(open(path)?).map_err(fatal("cannot read", path))?;
    for e in &errors {
        eprintln!("{}: {e}", path.display());
    }
    Ok((docs, !errors.is_empty()))
}

fn load_itemsets(path: &Path) -> Result<(Vec<DocItemset>, bool), Failure> {
    let (items, errors) =
        read_jsonl::<DocItemset, _>(open(path)?).map_err(fatal("cannot read", path))?;
    for e in &errors {
        eprintln!("{}: {e}", path.display());
    }
    Ok((items, !errors.is_empty()))
}

fn input_files(input: &Path, format: InputFormat) -> Result<Vec<PathBuf>, Failure> {
    let meta = fs::metadata(input).map_err(fatal("cannot read", input))?;
    if !meta.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let ext = match format {
        InputFormat::Text => "txt",
        InputFormat::Jsonl => "jsonl",
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(input).map_err(fatal("cannot read", input))? {
        let path = entry.map_err(fatal("cannot read", input))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn ingest(a: &IngestArgs) -> CmdResult {
    if !(0.0..=1.0).contains(&a.title_upper_ratio) {
        return Err(Failure::Usage(
            "--title-upper-ratio must lie in [0, 1]".into(),
        ));
    }
    let cfg = SegmenterConfig {
        header_line_limit: a.header_lines,
        title_max_len: a.title_max_len,
        title_upper_ratio: a.title_upper_ratio,
    };
    let files = input_files(&a.input, a.format)?;
    let mut docs: Vec<Document> = Vec::new();
    let mut partial = false;
    let mut seen = HashSet::new();
    let mut keep = |doc: Document, origin: &Path, docs: &mut Vec<Document>, partial: &mut bool| {
        if seen.insert(doc.id.clone()) {
            docs.push(doc);
        } else {
            eprintln!("{}: duplicate document id {:?}", origin.display(), doc.id);
            *partial = true;
        }
    };
    for file in &files {
        match a.format {
            InputFormat::Text => {
                let id = file
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let parsed = fs::read_to_string(file)
                    .map_err(|e| e.to_string())
                    .and_then(|raw| segment_plaintext(id, &raw, &cfg).map_err(|e| e.to_string()));
                match parsed {
                    Ok(doc) => keep(doc, file, &mut docs, &mut partial),
                    Err(e) => {
                        eprintln!("{}: {e}", file.display());
                        partial = true;
                    }
                }
            }
            InputFormat::Jsonl => {
                match File::open(file).map(BufReader::new).and_then(read_corpus) {
                    Ok((file_docs, errors)) => {
                        for e in &errors {
                            eprintln!("{}: {e}", file.display());
                        }
                        partial |= !errors.is_empty();
                        for doc in file_docs {
                            keep(doc, file, &mut docs, &mut partial);
                        }
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", file.display());
                        partial = true;
                    }
                }
            }
        }
    }
    let mut out = create(&a.out)?;
    for doc in &docs {
        writeln!(out, "{}", doc.to_json_line()).map_err(fatal("cannot write", &a.out))?;
    }
    out.flush().map_err(fatal("cannot write", &a.out))?;
    eprintln!(
        "ingested {} documents from {} files",
        docs.len(),
        files.len()
    );
    Ok(outcome(partial))
}

pub fn extract(a: &ExtractArgs) -> CmdResult {
    let lexicon = Lexicon::load_tsv(&read_text(&a.lexicon)?)
        .map_err(|e| Failure::Fatal(format!("{}: {e}", a.lexicon.display())))?;
    let rules = match &a.rules {
        Some(p) => parse_rules(&read_text(p)?)
            .map_err(|e| Failure::Fatal(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let input = open(&a.corpus)?;
    let mut out = create(&a.out)?;
    let report = extract_corpus(
        input,
        &mut out,
        &lexicon,
        &rules,
        Parallelism::from_jobs(a.jobs),
    )
    .map_err(fatal("extraction failed on", &a.corpus))?;
    out.flush().map_err(fatal("cannot write", &a.out))?;
    for e in &report.errors {
        eprintln!("{}: {e}", a.corpus.display());
    }
    eprintln!("extracted {} documents", report.documents);
    Ok(outcome(report.is_partial()))
}

pub fn relate(a: &RelateArgs) -> CmdResult {
    let cfg = match &a.config {
        Some(p) => {
            let bytes = fs::read(p).map_err(fatal("cannot read", p))?;
            RelationConfig::from_json(&bytes)
                .map_err(|e| Failure::Fatal(format!("{}: {e}", p.display())))?
        }
        None => RelationConfig::default(),
    };
    let (docs, mut partial) = load_corpus(&a.corpus)?;
    let (itemsets, bad_items) = load_itemsets(&a.mentions)?;
    partial |= bad_items;
    let run = relate_corpus(&docs, &itemsets, &cfg, Parallelism::from_jobs(a.jobs));
    for id in &run.missing_itemsets {
        eprintln!("{}: no mentions for document {id:?}", a.mentions.display());
    }
    partial |= !run.missing_itemsets.is_empty();

    let mut out = create(&a.out)?;
    write_jsonl(&mut out, &run.relations).map_err(fatal("cannot write", &a.out))?;
    out.flush().map_err(fatal("cannot write", &a.out))?;
    if let Some(path) = &a.cooc {
        let mut out = create(path)?;
        write_jsonl(&mut out, &cooc_scores(&run.relations, run.units))
            .map_err(fatal("cannot write", path))?;
        out.flush().map_err(fatal("cannot write", path))?;
    }
    eprintln!(
        "{} relations from {} documents",
        run.relations.len(),
        docs.len()
    );
    Ok(outcome(partial))
}

pub fn index(a: &IndexArgs) -> CmdResult {
    let regions = match &a.regions {
        Some(p) => RegionList::parse(&read_text(p)?),
        None => RegionList::default(),
    };
    let (docs, mut partial) = load_corpus(&a.corpus)?;
    let (itemsets, bad_items) = load_itemsets(&a.mentions)?;
    partial |= bad_items;
    let (relations, errors) =
        read_jsonl(open(&a.relations)?).map_err(fatal("cannot read", &a.relations))?;
    for e in &errors {
        eprintln!("{}: {e}", a.relations.display());
    }
    partial |= !errors.is_empty();
    let summary =
        build_index(&docs, &itemsets, &relations, &regions, &a.out).map_err(|e| match e {
            IndexError::InconsistentInputs(m) => {
                Failure::Fatal(format!("inconsistent inputs: {m}"))
            }
            other => Failure::Fatal(other.to_string()),
        })?;
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    Ok(outcome(partial))
}

fn open_index(path: &Path) -> Result<Index, Failure> {
    Index::open(path).map_err(|e| Failure::Fatal(format!("{}: {e}", path.display())))
}

pub fn serve(a: &ServeArgs) -> CmdResult {
    let index = Arc::new(open_index(&a.index)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Fatal(e.to_string()))?;
    runtime
        .block_on(phytomine_service::serve(
            index,
            SocketAddr::new(a.bind, a.port),
        ))
        .map_err(|e| Failure::Fatal(format!("server: {e}")))?;
    Ok(Outcome::Complete)
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("output serializes")
    );
}

fn wants_json(o: &OutputFormat) -> bool {
    o.json && !o.table
}

/// Left-aligned columns separated by two spaces.
fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        println!("{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
}

fn opt(v: Option<impl ToString>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn query(a: &QueryArgs) -> CmdResult {
    let q = Query {
        crop: a.crop.clone(),
        disease: a.disease.clone(),
        pest: a.pest.clone(),
        date_from: a.from,
        date_to: a.to,
        free_word: a.q.clone(),
        region: a.region.clone(),
        sort: match a.sort {
            Sort::DateDesc => SortOrder::DateDesc,
            Sort::DateAsc => SortOrder::DateAsc,
        },
    };
    q.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let index = open_index(&a.index)?;
    let result = index.search(&q).map_err(|e| match e {
        IndexError::InvalidQuery(m) => Failure::Usage(m),
        other => Failure::Fatal(other.to_string()),
    })?;
    if wants_json(&a.output) {
        print_json(&result);
        return Ok(Outcome::Complete);
    }
    let rows: Vec<Vec<String>> = result
        .docs
        .iter()
        .map(|d| {
            vec![
                d.doc_id.clone(),
                opt(d.date),
                opt(d.region.as_ref()),
                opt(d.issue.as_ref()),
            ]
        })
        .collect();
    print_table(&["doc", "date", "region", "issue"], &rows);
    println!();
    let hist: Vec<Vec<String>> = result
        .region_hits
        .iter()
        .filter(|(_, n)| **n > 0)
        .map(|(r, n)| vec![r.clone(), n.to_string()])
        .collect();
    print_table(&["region", "hits"], &hist);
    println!("total: {}", result.total);
    Ok(Outcome::Complete)
}

pub fn partners(a: &PartnersArgs) -> CmdResult {
    let index = open_index(&a.index)?;
    let list = index.partners(&a.region, &a.species).map_err(|e| match e {
        IndexError::UnknownRegion(r) => Failure::Usage(format!("unknown region {r:?}")),
        other => Failure::Fatal(other.to_string()),
    })?;
    if wants_json(&a.output) {
        print_json(&list);
    } else {
        let rows: Vec<Vec<String>> = list
            .iter()
            .map(|p| vec![p.id.clone(), p.concept.to_string(), p.count.to_string()])
            .collect();
        print_table(&["partner", "concept", "docs"], &rows);
    }
    Ok(Outcome::Complete)
}

pub fn citations(a: &CitationsArgs) -> CmdResult {
    let index = open_index(&a.index)?;
    let list = index.citations(&a.subject, &a.object, a.region.as_deref());
    if wants_json(&a.output) {
        print_json(&list);
    } else {
        let rows: Vec<Vec<String>> = list
            .iter()
            .map(|c| {
                vec![
                    c.doc_id.clone(),
                    opt(c.date),
                    opt(c.region.as_ref()),
                    c.snippet.clone(),
                ]
            })
            .collect();
        print_table(&["doc", "date", "region", "snippet"], &rows);
    }
    Ok(Outcome::Complete)
}
