//! Stage runners with file handoff between stages.
//!
//! Every stage reads the files written by earlier stages, writes one primary
//! output (plus, for a few stages, companion reports) and records a run
//! manifest next to the primary output as `<file>.manifest.json`.
//!
//! Layout under the output directory:
//!
//! ```text
//! scan.csv
//! <city>/accepted.jsonl    filter_report.csv
//! <city>/documents.tsv     prep_report.csv
//! <city>/vocab.tsv         corpus.bow
//! <city>/model.lda         top_words.csv
//! <city>/assignments.csv
//! <city>/groups.csv
//! <city>/entities.csv      weekday.csv  hourly.csv  users.csv
//! <city>/heatmap.csv       heatmap.svg (optional)
//! compare_<a>_<b>.csv
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, FixedOffset, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{CityConfig, PipelineConfig};
use crate::geofilter::{classify, GeoDecision};
use crate::ingest::{open_records, parse_post, read_chunk, scan_corpus, IngestReport, RawPost, CHUNK_LINES};
use crate::lda::{train, LdaError, TopicModel};
use crate::reporting::{
    aggregate_groups, compare_cities, entity_stats, hourly_distribution, topic_weekday_heatmap,
    user_activity_histogram, weekday_distribution, write_hourly_csv, EntityStats, GroupReport,
    ReportError, TopicGroupMap,
};
use crate::textprep::{prep_post, Document, PrepReport, StopWords};
use crate::vocab::{vectorize, BowDocument, TermCounts, VocabError, Vocabulary};

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl PipelineError {
    /// 1 usage/config, 2 data, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Data(_) => 2,
            PipelineError::Io { .. } => 3,
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn data_at(path: &Path, what: impl std::fmt::Display) -> PipelineError {
    PipelineError::Data(format!("{}: {what}", path.display()))
}

fn vocab_err(path: &Path, e: VocabError) -> PipelineError {
    match e {
        VocabError::Io(source) => PipelineError::Io { path: path.to_path_buf(), source },
        VocabError::InvalidParams(m) => PipelineError::Config(m),
        other => data_at(path, other),
    }
}

fn lda_err(path: &Path, e: LdaError) -> PipelineError {
    match e {
        LdaError::Io(source) => PipelineError::Io { path: path.to_path_buf(), source },
        LdaError::InvalidConfig(m) => PipelineError::Config(m),
        other => data_at(path, other),
    }
}

/// Errors while loading a configuration-side file (group map) are config errors.
fn report_err(path: &Path, e: ReportError, config_side: bool) -> PipelineError {
    match e {
        ReportError::Io(source) => PipelineError::Io { path: path.to_path_buf(), source },
        ReportError::Csv(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(source) => PipelineError::Io { path: path.to_path_buf(), source },
            _ => unreachable!("checked is_io_error"),
        },
        other if config_side => PipelineError::Config(format!("{}: {other}", path.display())),
        other => data_at(path, other),
    }
}

/// One stage invocation, as recorded in manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "kebab-case")]
pub enum Stage {
    Scan { inputs: Vec<PathBuf> },
    Filter { city: String, inputs: Vec<PathBuf> },
    Prep { city: String },
    Vocab { city: String },
    Train { city: String },
    Assign { city: String },
    Aggregate { city: String },
    Compare { a: String, b: String },
    Stats { city: String },
    Heatmap { city: String, svg: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub invocation: Stage,
    pub config: PipelineConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub elapsed_ms: u128,
    pub summary: BTreeMap<String, Value>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| data_at(path, e))
    }

    pub fn primary_output(&self) -> &Path {
        &self.outputs[0].path
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().unwrap_or_default().to_os_string();
    name.push(MANIFEST_SUFFIX);
    primary.with_file_name(name)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn config_sha256(cfg: &PipelineConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Write through a temporary sibling and rename, so an interrupted stage
/// never leaves a truncated output behind.
fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let file = File::create(&tmp).map_err(io_err(&tmp))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(io_err(&tmp))?;
    drop(w);
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    open_records(path).map_err(io_err(path))
}

/// Feed `path` to `f` in chunks of lines; `f` gets the 1-based number of the
/// chunk's first line.
fn for_each_chunk<F>(path: &Path, mut f: F) -> Result<()>
where
    F: FnMut(&[String], usize) -> Result<()>,
{
    let mut reader = open_input(path)?;
    let mut buf = Vec::with_capacity(CHUNK_LINES);
    let mut first = 1;
    loop {
        let more = read_chunk(&mut reader, &mut buf, CHUNK_LINES).map_err(io_err(path))?;
        if !buf.is_empty() {
            f(&buf, first)?;
            first += buf.len();
        }
        if !more {
            return Ok(());
        }
    }
}

fn write_key_values(path: &Path, rows: &[(String, u64)]) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "key,value").map_err(io_err(path))?;
        for (k, v) in rows {
            writeln!(w, "{k},{v}").map_err(io_err(path))?;
        }
        Ok(())
    })
}

fn summary_of(rows: &[(String, u64)]) -> BTreeMap<String, Value> {
    rows.iter().map(|(k, v)| (k.clone(), json!(v))).collect()
}

/// Per-city filter bookkeeping. Language and location rejections are
/// counted separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub total: u64,
    pub malformed: u64,
    pub lang_other: u64,
    pub lang_match: u64,
    pub in_by_coordinates: u64,
    pub in_by_place: u64,
    pub out_overlap_only: u64,
    pub out_outside: u64,
    pub out_no_geo: u64,
}

impl FilterReport {
    pub fn accepted(&self) -> u64 {
        self.in_by_coordinates + self.in_by_place
    }

    pub fn is_consistent(&self) -> bool {
        self.total == self.malformed + self.lang_other + self.lang_match
            && self.lang_match
                == self.accepted() + self.out_overlap_only + self.out_outside + self.out_no_geo
    }

    pub fn entries(&self) -> Vec<(String, u64)> {
        [
            ("total", self.total),
            ("malformed", self.malformed),
            ("lang_other", self.lang_other),
            ("lang_match", self.lang_match),
            ("in_by_coordinates", self.in_by_coordinates),
            ("in_by_place", self.in_by_place),
            ("out_overlap_only", self.out_overlap_only),
            ("out_outside", self.out_outside),
            ("out_no_geo", self.out_no_geo),
            ("accepted", self.accepted()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

enum LineFate {
    Malformed,
    OtherLanguage,
    Geo(GeoDecision),
}

/// Paths of every stage's files for one configuration.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn scan(&self) -> PathBuf {
        self.root.join("scan.csv")
    }

    pub fn city_file(&self, city: &str, name: &str) -> PathBuf {
        self.root.join(city).join(name)
    }

    pub fn compare(&self, a: &str, b: &str) -> PathBuf {
        self.root.join(format!("compare_{a}_{b}.csv"))
    }
}

/// Result of one stage before its manifest is written.
struct Outcome {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    summary: BTreeMap<String, Value>,
}

/// Run one stage and write its manifest.
pub fn run_stage(cfg: &PipelineConfig, stage: &Stage) -> Result<Manifest> {
    let started_at = Utc::now().to_rfc3339();
    let clock = Instant::now();
    let layout = Layout::new(&cfg.output.dir);
    let outcome = match stage {
        Stage::Scan { inputs } => scan(&layout, inputs)?,
        Stage::Filter { city, inputs } => filter(cfg, &layout, city_cfg(cfg, city)?, inputs)?,
        Stage::Prep { city } => prep(cfg, &layout, city_cfg(cfg, city)?)?,
        Stage::Vocab { city } => vocab(cfg, &layout, city_cfg(cfg, city)?)?,
        Stage::Train { city } => train_stage(cfg, &layout, city_cfg(cfg, city)?)?,
        Stage::Assign { city } => assign(&layout, city_cfg(cfg, city)?)?,
        Stage::Aggregate { city } => aggregate(cfg, &layout, city_cfg(cfg, city)?)?,
        Stage::Compare { a, b } => compare(&layout, city_cfg(cfg, a)?, city_cfg(cfg, b)?)?,
        Stage::Stats { city } => stats(&layout, city_cfg(cfg, city)?)?,
        Stage::Heatmap { city, svg } => heatmap(cfg, &layout, city_cfg(cfg, city)?, *svg)?,
    };
    let digest = |paths: &[PathBuf]| -> Result<Vec<FileDigest>> {
        paths
            .iter()
            .map(|p| Ok(FileDigest { path: p.clone(), sha256: sha256_file(p)? }))
            .collect()
    };
    let manifest = Manifest {
        tool: "geotopic".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        invocation: stage.clone(),
        config: cfg.clone(),
        config_sha256: config_sha256(cfg),
        seed: cfg.lda.seed,
        inputs: digest(&outcome.inputs)?,
        outputs: digest(&outcome.outputs)?,
        started_at,
        elapsed_ms: clock.elapsed().as_millis(),
        summary: outcome.summary,
    };
    let path = manifest_path(manifest.primary_output());
    write_file(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest).map_err(|e| data_at(&path, e))?;
        writeln!(w).map_err(io_err(&path))
    })?;
    Ok(manifest)
}

fn city_cfg<'a>(cfg: &'a PipelineConfig, name: &str) -> Result<&'a CityConfig> {
    cfg.city(name).map_err(PipelineError::Config)
}

fn offset_of(city: &CityConfig) -> Result<FixedOffset> {
    city.offset().map_err(PipelineError::Config)
}

/// Every stage for every city, then a comparison for each pair of cities.
pub fn run_all(cfg: &PipelineConfig, svg: bool) -> Result<Vec<Manifest>> {
    if cfg.ingest.inputs.is_empty() {
        return Err(PipelineError::Config("ingest.inputs is empty".into()));
    }
    let inputs = cfg.ingest.inputs.clone();
    let mut stages = vec![Stage::Scan { inputs: inputs.clone() }];
    for c in &cfg.cities {
        let city = c.name.clone();
        stages.extend([
            Stage::Filter { city: city.clone(), inputs: inputs.clone() },
            Stage::Prep { city: city.clone() },
            Stage::Vocab { city: city.clone() },
            Stage::Train { city: city.clone() },
            Stage::Assign { city: city.clone() },
            Stage::Aggregate { city: city.clone() },
            Stage::Stats { city: city.clone() },
            Stage::Heatmap { city, svg },
        ]);
    }
    for (i, a) in cfg.cities.iter().enumerate() {
        for b in &cfg.cities[i + 1..] {
            stages.push(Stage::Compare { a: a.name.clone(), b: b.name.clone() });
        }
    }
    stages.iter().map(|s| run_stage(cfg, s)).collect()
}

/// Re-run the stage recorded in a manifest with its recorded configuration
/// and check that the outputs come out byte-identical.
pub fn replay(manifest_file: &Path) -> Result<Manifest> {
    let old = Manifest::read(manifest_file)?;
    for input in &old.inputs {
        let now = sha256_file(&input.path)?;
        if now != input.sha256 {
            return Err(data_at(&input.path, "input changed since the manifest was written"));
        }
    }
    let new = run_stage(&old.config, &old.invocation)?;
    for (was, now) in old.outputs.iter().zip(&new.outputs) {
        if was != now {
            return Err(data_at(&now.path, "replayed output differs from the recorded one"));
        }
    }
    if old.outputs.len() != new.outputs.len() {
        return Err(data_at(manifest_file, "replay produced a different set of outputs"));
    }
    Ok(new)
}

fn scan(layout: &Layout, inputs: &[PathBuf]) -> Result<Outcome> {
    if inputs.is_empty() {
        return Err(PipelineError::Config("no input files given".into()));
    }
    let mut report = IngestReport::default();
    for path in inputs {
        let mut reader = open_input(path)?;
        report = report.merge(scan_corpus(&mut reader).map_err(io_err(path))?);
    }
    let out = layout.scan();
    let rows = report.entries();
    write_key_values(&out, &rows)?;
    Ok(Outcome { inputs: inputs.to_vec(), outputs: vec![out], summary: summary_of(&rows) })
}

fn filter(cfg: &PipelineConfig, layout: &Layout, city: &CityConfig, inputs: &[PathBuf]) -> Result<Outcome> {
    if inputs.is_empty() {
        return Err(PipelineError::Config("no input files given".into()));
    }
    let accepted_path = layout.city_file(&city.name, "accepted.jsonl");
    let report_path = layout.city_file(&city.name, "filter_report.csv");
    let lang = cfg.filter.language.as_str();
    let mut report = FilterReport::default();
    write_file(&accepted_path, |w| {
        for path in inputs {
            for_each_chunk(path, |lines, _| {
                let fates: Vec<Option<LineFate>> = lines
                    .par_iter()
                    .map(|line| {
                        if line.trim().is_empty() {
                            return None;
                        }
                        Some(match parse_post(line) {
                            Err(_) => LineFate::Malformed,
                            Ok(p) if p.lang != lang => LineFate::OtherLanguage,
                            Ok(p) => LineFate::Geo(classify(&p, &city.bbox)),
                        })
                    })
                    .collect();
                for (line, fate) in lines.iter().zip(fates) {
                    let Some(fate) = fate else { continue };
                    report.total += 1;
                    match fate {
                        LineFate::Malformed => report.malformed += 1,
                        LineFate::OtherLanguage => report.lang_other += 1,
                        LineFate::Geo(d) => {
                            report.lang_match += 1;
                            match d {
                                GeoDecision::InByCoordinates => report.in_by_coordinates += 1,
                                GeoDecision::InByPlace => report.in_by_place += 1,
                                GeoDecision::OverlapOnly => report.out_overlap_only += 1,
                                GeoDecision::Outside => report.out_outside += 1,
                                GeoDecision::NoGeo => report.out_no_geo += 1,
                            }
                            if matches!(d, GeoDecision::InByCoordinates | GeoDecision::InByPlace) {
                                writeln!(w, "{line}").map_err(io_err(&accepted_path))?;
                            }
                        }
                    }
                }
                Ok(())
            })?;
        }
        Ok(())
    })?;
    debug_assert!(report.is_consistent());
    let rows = report.entries();
    write_key_values(&report_path, &rows)?;
    Ok(Outcome {
        inputs: inputs.to_vec(),
        outputs: vec![accepted_path, report_path],
        summary: summary_of(&rows),
    })
}

/// Parse a chunk of an accepted-records file; every line must be valid.
fn parse_accepted(path: &Path, lines: &[String], first: usize) -> Result<Vec<RawPost>> {
    lines
        .par_iter()
        .enumerate()
        .map(|(i, line)| parse_post(line).map_err(|e| data_at(path, format!("line {}: {e}", first + i))))
        .collect()
}

fn load_stopwords(path: &Path) -> Result<StopWords> {
    let file = File::open(path).map_err(io_err(path))?;
    StopWords::load(BufReader::new(file)).map_err(io_err(path))
}

fn prep(cfg: &PipelineConfig, layout: &Layout, city: &CityConfig) -> Result<Outcome> {
    let input = layout.city_file(&city.name, "accepted.jsonl");
    let docs_path = layout.city_file(&city.name, "documents.tsv");
    let report_path = layout.city_file(&city.name, "prep_report.csv");
    let stopwords = load_stopwords(&cfg.textprep.stopwords)?;
    let mut report = PrepReport::default();
    write_file(&docs_path, |w| {
        for_each_chunk(&input, |lines, first| {
            let posts = parse_accepted(&input, lines, first)?;
            let docs: Vec<Option<Document>> = posts.par_iter().map(|p| prep_post(p, &stopwords)).collect();
            for doc in docs {
                report.input_count += 1;
                match doc {
                    Some(d) => {
                        report.emitted_count += 1;
                        writeln!(w, "{}", d.to_line()).map_err(io_err(&docs_path))?;
                    }
                    None => report.emptied_count += 1,
                }
            }
            Ok(())
        })
    })?;
    let rows = vec![
        ("input_count".to_string(), report.input_count),
        ("emptied_count".to_string(), report.emptied_count),
        ("emitted_count".to_string(), report.emitted_count),
    ];
    write_key_values(&report_path, &rows)?;
    Ok(Outcome {
        inputs: vec![input, cfg.textprep.stopwords.clone()],
        outputs: vec![docs_path, report_path],
        summary: summary_of(&rows),
    })
}

fn parse_documents(path: &Path, lines: &[String], first: usize) -> Result<Vec<Document>> {
    lines
        .par_iter()
        .enumerate()
        .map(|(i, line)| Document::from_line(line).map_err(|e| data_at(path, format!("line {}: {e}", first + i))))
        .collect()
}

fn vocab(cfg: &PipelineConfig, layout: &Layout, city: &CityConfig) -> Result<Outcome> {
    let input = layout.city_file(&city.name, "documents.tsv");
    let vocab_path = layout.city_file(&city.name, "vocab.tsv");
    let bow_path = layout.city_file(&city.name, "corpus.bow");
    let params = cfg.vocab.params();
    params.validate().map_err(|e| vocab_err(&input, e))?;

    let mut counts = TermCounts::default();
    for_each_chunk(&input, |lines, first| {
        let docs = parse_documents(&input, lines, first)?;
        let chunk = docs
            .par_iter()
            .fold(TermCounts::default, |mut c, d| {
                c.add_document(&d.tokens);
                c
            })
            .reduce(TermCounts::default, TermCounts::merge);
        counts = std::mem::take(&mut counts).merge(chunk);
        Ok(())
    })?;
    let vocabulary = counts.prune(&params).map_err(|e| vocab_err(&input, e))?;
    write_file(&vocab_path, |w| vocabulary.write(w).map_err(io_err(&vocab_path)))?;

    let mut empty = 0u64;
    let mut docs = 0u64;
    write_file(&bow_path, |w| {
        for_each_chunk(&input, |lines, first| {
            let chunk = parse_documents(&input, lines, first)?;
            let bows: Vec<BowDocument> =
                chunk.par_iter().map(|d| vectorize(&d.post_id, &d.tokens, &vocabulary)).collect();
            for b in bows {
                docs += 1;
                empty += u64::from(b.length == 0);
                writeln!(w, "{}", b.to_line()).map_err(io_err(&bow_path))?;
            }
            Ok(())
        })
    })?;
    let mut summary = BTreeMap::new();
    summary.insert("terms".into(), json!(vocabulary.len()));
    summary.insert("documents".into(), json!(docs));
    summary.insert("documents_without_terms".into(), json!(empty));
    Ok(Outcome { inputs: vec![input], outputs: vec![vocab_path, bow_path], summary })
}

fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    let file = File::open(path).map_err(io_err(path))?;
    Vocabulary::read(BufReader::new(file)).map_err(|e| vocab_err(path, e))
}

fn read_model(path: &Path) -> Result<TopicModel> {
    let file = File::open(path).map_err(io_err(path))?;
    TopicModel::read(BufReader::new(file)).map_err(|e| lda_err(path, e))
}

fn train_stage(cfg: &PipelineConfig, layout: &Layout, city: &CityConfig) -> Result<Outcome> {
    let vocab_path = layout.city_file(&city.name, "vocab.tsv");
    let bow_path = layout.city_file(&city.name, "corpus.bow");
    let model_path = layout.city_file(&city.name, "model.lda");
    let top_path = layout.city_file(&city.name, "top_words.csv");
    let vocabulary = read_vocabulary(&vocab_path)?;

    let mut corpus = Vec::new();
    let mut skipped = 0u64;
    for_each_chunk(&bow_path, |lines, first| {
        for (i, line) in lines.iter().enumerate() {
            let b = BowDocument::from_line(line).map_err(|e| data_at(&bow_path, format!("line {}: {e}", first + i)))?;
            if b.length == 0 {
                skipped += 1;
            } else {
                corpus.push(b);
            }
        }
        Ok(())
    })?;
    if corpus.is_empty() {
        return Err(data_at(&bow_path, "no document has any vocabulary term"));
    }
    let lda_cfg = cfg.lda.config();
    let model = train(&corpus, vocabulary.len(), lda_cfg).map_err(|e| lda_err(&bow_path, e))?;
    write_file(&model_path, |w| model.write(w).map_err(io_err(&model_path)))?;

    let n = cfg.lda.top_words;
    write_file(&top_path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| data_at(&top_path, e);
        out.write_record(["topic", "rank", "term", "phi"]).map_err(csv_err)?;
        for t in 0..model.num_topics() {
            let top = model.top_words(t, n).map_err(|e| lda_err(&model_path, e))?;
            for (rank, (w_idx, phi)) in top.into_iter().enumerate() {
                let term = vocabulary.term(w_idx).unwrap_or_default();
                out.write_record([t.to_string(), (rank + 1).to_string(), term.to_string(), phi.to_string()])
                    .map_err(csv_err)?;
            }
        }
        out.flush().map_err(io_err(&top_path))
    })?;

    let mut summary = BTreeMap::new();
    summary.insert("documents".into(), json!(corpus.len()));
    summary.insert("documents_skipped_empty".into(), json!(skipped));
    summary.insert("tokens".into(), json!(model.assignments().len()));
    summary.insert("topics".into(), json!(lda_cfg.topics));
    summary.insert("iterations".into(), json!(lda_cfg.iterations));
    summary.insert("log_likelihood".into(), json!(model.log_likelihood(&corpus).map_err(|e| lda_err(&bow_path, e))?));
    Ok(Outcome {
        inputs: vec![vocab_path, bow_path],
        outputs: vec![model_path, top_path],
        summary,
    })
}

fn assign(layout: &Layout, city: &CityConfig) -> Result<Outcome> {
    let model_path = layout.city_file(&city.name, "model.lda");
    let out = layout.city_file(&city.name, "assignments.csv");
    let model = read_model(&model_path)?;
    write_file(&out, |w| {
        writeln!(w, "post_id,topic").map_err(io_err(&out))?;
        for (d, id) in model.doc_ids().iter().enumerate() {
            let t = model.dominant_topic(d).map_err(|e| lda_err(&model_path, e))?;
            writeln!(w, "{id},{t}").map_err(io_err(&out))?;
        }
        Ok(())
    })?;
    let mut summary = BTreeMap::new();
    summary.insert("documents".into(), json!(model.num_docs()));
    Ok(Outcome { inputs: vec![model_path], outputs: vec![out], summary })
}

/// `post_id,topic` rows in file order.
pub fn read_assignments(path: &Path) -> Result<Vec<(String, usize)>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if n == 0 {
            if line != "post_id,topic" {
                return Err(data_at(path, "expected header post_id,topic"));
            }
            continue;
        }
        let parsed = line.split_once(',').and_then(|(id, t)| Some((id.to_string(), t.parse().ok()?)));
        out.push(parsed.ok_or_else(|| data_at(path, format!("line {}: expected post_id,topic", n + 1)))?);
    }
    Ok(out)
}

fn load_group_map(cfg: &PipelineConfig, city: &CityConfig) -> Result<TopicGroupMap> {
    let path = cfg.group_map_for(city);
    let file = File::open(path).map_err(io_err(path))?;
    TopicGroupMap::load(BufReader::new(file), cfg.lda.topics).map_err(|e| report_err(path, e, true))
}

fn aggregate(cfg: &PipelineConfig, layout: &Layout, city: &CityConfig) -> Result<Outcome> {
    let input = layout.city_file(&city.name, "assignments.csv");
    let out = layout.city_file(&city.name, "groups.csv");
    let map = load_group_map(cfg, city)?;
    let assignments = read_assignments(&input)?;
    let report = aggregate_groups(assignments.iter().map(|(_, t)| *t), &map).map_err(|e| report_err(&input, e, false))?;
    write_file(&out, |w| report.write_csv(w).map_err(|e| report_err(&out, e, false)))?;
    let mut summary = BTreeMap::new();
    summary.insert("documents".into(), json!(report.total_docs));
    summary.insert("groups".into(), json!(report.rows.len()));
    Ok(Outcome {
        inputs: vec![input, cfg.group_map_for(city).to_path_buf()],
        outputs: vec![out],
        summary,
    })
}

pub fn read_group_report(path: &Path) -> Result<GroupReport> {
    let file = File::open(path).map_err(io_err(path))?;
    GroupReport::read_csv(file).map_err(|e| report_err(path, e, false))
}

fn compare(layout: &Layout, a: &CityConfig, b: &CityConfig) -> Result<Outcome> {
    let a_path = layout.city_file(&a.name, "groups.csv");
    let b_path = layout.city_file(&b.name, "groups.csv");
    let out = layout.compare(&a.name, &b.name);
    let table = compare_cities(&a.name, &read_group_report(&a_path)?, &b.name, &read_group_report(&b_path)?);
    write_file(&out, |w| table.write_csv(w).map_err(|e| report_err(&out, e, false)))?;
    let mut summary = BTreeMap::new();
    summary.insert("rows".into(), json!(table.rows.len()));
    Ok(Outcome { inputs: vec![a_path, b_path], outputs: vec![out], summary })
}

fn stats(layout: &Layout, city: &CityConfig) -> Result<Outcome> {
    let input = layout.city_file(&city.name, "accepted.jsonl");
    let names = ["entities.csv", "weekday.csv", "hourly.csv", "users.csv"];
    let [ent_path, wd_path, hr_path, users_path] = names.map(|n| layout.city_file(&city.name, n));
    let offset = offset_of(city)?;

    let mut totals = [0u64; 4];
    let mut seen = 0u64;
    let mut times: Vec<DateTime<FixedOffset>> = Vec::new();
    let mut users: Vec<String> = Vec::new();
    for_each_chunk(&input, |lines, first| {
        let posts = parse_accepted(&input, lines, first)?;
        let chunk = entity_stats(&posts, None);
        for (t, c) in totals.iter_mut().zip(chunk.totals) {
            *t += c;
        }
        seen += chunk.reference_count;
        for p in posts {
            times.push(p.created_at);
            users.push(p.user_id);
        }
        Ok(())
    })?;
    let reference = city.entity_reference.unwrap_or(seen);
    if reference < seen {
        return Err(PipelineError::Config(format!(
            "city {}: entity_reference {reference} is below the {seen} accepted posts",
            city.name
        )));
    }
    let entities = EntityStats::from_totals(totals, reference);
    write_file(&ent_path, |w| entities.write_csv(w).map_err(|e| report_err(&ent_path, e, false)))?;
    let weekdays = weekday_distribution(&times, offset);
    write_file(&wd_path, |w| weekdays.write_csv(w).map_err(|e| report_err(&wd_path, e, false)))?;
    let hours = hourly_distribution(&times, offset);
    write_file(&hr_path, |w| write_hourly_csv(&hours, w).map_err(|e| report_err(&hr_path, e, false)))?;
    let activity = user_activity_histogram(users.iter().map(String::as_str));
    write_file(&users_path, |w| activity.write_csv(w).map_err(|e| report_err(&users_path, e, false)))?;

    let mut summary = BTreeMap::new();
    summary.insert("posts".into(), json!(seen));
    summary.insert("entity_reference".into(), json!(reference));
    summary.insert("distinct_users".into(), json!(activity.distinct_users));
    Ok(Outcome {
        inputs: vec![input],
        outputs: vec![ent_path, wd_path, hr_path, users_path],
        summary,
    })
}

fn heatmap(cfg: &PipelineConfig, layout: &Layout, city: &CityConfig, svg: bool) -> Result<Outcome> {
    let assign_path = layout.city_file(&city.name, "assignments.csv");
    let docs_path = layout.city_file(&city.name, "documents.tsv");
    let csv_path = layout.city_file(&city.name, "heatmap.csv");
    let svg_path = layout.city_file(&city.name, "heatmap.svg");
    let offset = offset_of(city)?;
    let map = load_group_map(cfg, city)?;

    let mut created: HashMap<String, DateTime<FixedOffset>> = HashMap::new();
    for_each_chunk(&docs_path, |lines, first| {
        for d in parse_documents(&docs_path, lines, first)? {
            created.insert(d.post_id, d.created_at);
        }
        Ok(())
    })?;
    let assignments = read_assignments(&assign_path)?;
    let mut joined = Vec::with_capacity(assignments.len());
    for (id, topic) in &assignments {
        let t = created
            .get(id)
            .ok_or_else(|| data_at(&assign_path, format!("post {id} has no entry in {}", docs_path.display())))?;
        joined.push((*topic, t));
    }
    let table = topic_weekday_heatmap(joined, &map, &cfg.reporting.heatmap_groups, offset)
        .map_err(|e| match e {
            ReportError::UnknownGroup(_) => PipelineError::Config(e.to_string()),
            other => report_err(&assign_path, other, false),
        })?;
    write_file(&csv_path, |w| table.write_csv(w).map_err(|e| report_err(&csv_path, e, false)))?;
    let mut outputs = vec![csv_path];
    if svg {
        write_file(&svg_path, |w| w.write_all(table.to_svg().as_bytes()).map_err(io_err(&svg_path)))?;
        outputs.push(svg_path);
    }
    let mut summary = BTreeMap::new();
    summary.insert("rows".into(), json!(table.rows.len()));
    summary.insert("empty_rows".into(), json!(table.rows.iter().filter(|r| r.empty).count()));
    Ok(Outcome {
        inputs: vec![assign_path, docs_path, cfg.group_map_for(city).to_path_buf()],
        outputs,
        summary,
    })
}
