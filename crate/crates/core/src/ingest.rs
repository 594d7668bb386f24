//! Reading archived post records.
//!
//! Input files hold one JSON object per line in the platform's v1.1 layout.
//! Lines that cannot be turned into a [`RawPost`] are counted as malformed and
//! skipped; a dump of millions of lines always carries some junk.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use chrono::{DateTime, FixedOffset};
use flate2::read::MultiGzDecoder;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::geofilter::{GeoBox, GeoError, GeoPoint};

/// Number of entities of each kind attached to a post.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EntityCounts {
    pub hashtags: u32,
    pub mentions: u32,
    pub urls: u32,
    pub media: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawPost {
    pub id: String,
    pub text: String,
    pub created_at: DateTime<FixedOffset>,
    pub lang: String,
    pub point: Option<GeoPoint>,
    pub place_box: Option<GeoBox>,
    pub user_id: String,
    pub entities: EntityCounts,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseFailure {
    #[error("not a JSON object: {0}")]
    Malformed(String),
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("field `{0}` must not contain control characters")]
    InvalidField(&'static str),
    #[error("unrecognised timestamp {0:?}")]
    InvalidTimestamp(String),
    #[error("bad coordinates: {0}")]
    InvalidCoordinates(String),
}

impl From<GeoError> for ParseFailure {
    fn from(e: GeoError) -> Self {
        ParseFailure::InvalidCoordinates(e.to_string())
    }
}

#[derive(Deserialize)]
struct Wire {
    id_str: Option<String>,
    text: Option<String>,
    created_at: Option<String>,
    lang: Option<String>,
    user: Option<WireUser>,
    coordinates: Option<WireCoordinates>,
    place: Option<WirePlace>,
    entities: Option<WireEntities>,
}

#[derive(Deserialize)]
struct WireUser {
    id_str: Option<String>,
}

#[derive(Deserialize)]
struct WireCoordinates {
    coordinates: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct WirePlace {
    bounding_box: Option<WireBoundingBox>,
}

#[derive(Deserialize)]
struct WireBoundingBox {
    coordinates: Option<Value>,
}

#[derive(Deserialize)]
struct WireEntities {
    #[serde(default)]
    hashtags: Vec<Value>,
    #[serde(default)]
    user_mentions: Vec<Value>,
    #[serde(default)]
    urls: Vec<Value>,
    #[serde(default)]
    media: Vec<Value>,
}

/// The platform's `created_at` layout, e.g. `Wed Mar 01 12:00:00 +0000 2017`.
const PLATFORM_TIME_FORMAT: &str = "%a %b %d %H:%M:%S %z %Y";

pub fn parse_timestamp(raw: &str) -> Result<DateTime<FixedOffset>, ParseFailure> {
    DateTime::parse_from_str(raw, PLATFORM_TIME_FORMAT)
        .or_else(|_| DateTime::parse_from_rfc3339(raw))
        .map_err(|_| ParseFailure::InvalidTimestamp(raw.to_string()))
}

fn required(v: Option<String>, name: &'static str) -> Result<String, ParseFailure> {
    v.ok_or(ParseFailure::MissingField(name))
}

fn identifier(v: Option<String>, name: &'static str) -> Result<String, ParseFailure> {
    let v = required(v, name)?;
    if v.is_empty() || v.chars().any(|c| c.is_control() || c.is_whitespace()) {
        return Err(ParseFailure::InvalidField(name));
    }
    Ok(v)
}

/// Collect `[lon, lat]` pairs from a place polygon. Accepts the GeoJSON ring
/// nesting (`[[[lon, lat], ...]]`) as well as a flat list of corners.
fn collect_corners(v: &Value, out: &mut Vec<GeoPoint>) -> Result<(), ParseFailure> {
    let arr = v
        .as_array()
        .ok_or_else(|| ParseFailure::InvalidCoordinates("place corners must be arrays".into()))?;
    if arr.len() == 2 && arr.iter().all(Value::is_number) {
        let lon = arr[0].as_f64().unwrap_or(f64::NAN);
        let lat = arr[1].as_f64().unwrap_or(f64::NAN);
        out.push(GeoPoint::new(lat, lon)?);
        return Ok(());
    }
    for item in arr {
        collect_corners(item, out)?;
    }
    Ok(())
}

/// Parse one input line. Never panics; every line yields a post or a failure.
pub fn parse_post(line: &str) -> Result<RawPost, ParseFailure> {
    let wire: Wire = serde_json::from_str(line).map_err(|e| ParseFailure::Malformed(e.to_string()))?;

    let id = identifier(wire.id_str, "id_str")?;
    let text = required(wire.text, "text")?;
    let created_raw = required(wire.created_at, "created_at")?;
    let lang = required(wire.lang, "lang")?;
    let user_id = identifier(wire.user.and_then(|u| u.id_str), "user.id_str")?;
    let created_at = parse_timestamp(&created_raw)?;

    let point = match wire.coordinates.and_then(|c| c.coordinates) {
        None => None,
        Some(c) if c.len() == 2 => Some(GeoPoint::new(c[1], c[0])?),
        Some(c) => {
            return Err(ParseFailure::InvalidCoordinates(format!(
                "expected [lon, lat], got {} values",
                c.len()
            )))
        }
    };

    let place_box = match wire.place.and_then(|p| p.bounding_box).and_then(|b| b.coordinates) {
        None | Some(Value::Null) => None,
        Some(v) => {
            let mut corners = Vec::with_capacity(4);
            collect_corners(&v, &mut corners)?;
            if corners.is_empty() {
                None
            } else {
                Some(GeoBox::hull(corners)?)
            }
        }
    };

    let entities = wire
        .entities
        .map(|e| EntityCounts {
            hashtags: e.hashtags.len() as u32,
            mentions: e.user_mentions.len() as u32,
            urls: e.urls.len() as u32,
            media: e.media.len() as u32,
        })
        .unwrap_or_default();

    Ok(RawPost {
        id,
        text,
        created_at,
        lang,
        point,
        place_box,
        user_id,
        entities,
    })
}

/// Open a record file, transparently decompressing gzip (detected by magic
/// bytes, not by extension).
pub fn open_records(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let n = read_prefix(&mut file, &mut magic)?;
    let file = File::open(path)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

fn read_prefix(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}

/// Lines handed to worker threads at once by the chunked readers.
pub const CHUNK_LINES: usize = 8192;

/// Read up to `max` lines into `buf` (cleared first). Returns false at EOF
/// with nothing read. Trailing `\r\n` / `\n` are stripped.
pub fn read_chunk<R: BufRead + ?Sized>(reader: &mut R, buf: &mut Vec<String>, max: usize) -> io::Result<bool> {
    buf.clear();
    while buf.len() < max {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        while line.ends_with('\n') || line.ends_with('\r') {
            line.pop();
        }
        buf.push(line);
    }
    Ok(!buf.is_empty())
}

/// Corpus composition counts. `total` counts well-formed posts only;
/// malformed lines are tallied separately.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub total: u64,
    pub by_lang: BTreeMap<String, u64>,
    pub with_point: u64,
    pub with_place_only: u64,
    pub with_neither: u64,
    pub malformed: u64,
}

impl IngestReport {
    pub fn record(&mut self, post: &RawPost) {
        self.total += 1;
        *self.by_lang.entry(post.lang.clone()).or_insert(0) += 1;
        match (post.point, post.place_box) {
            (Some(_), _) => self.with_point += 1,
            (None, Some(_)) => self.with_place_only += 1,
            (None, None) => self.with_neither += 1,
        }
    }

    pub fn record_line(&mut self, line: &str) {
        match parse_post(line) {
            Ok(p) => self.record(&p),
            Err(_) => self.malformed += 1,
        }
    }

    pub fn merge(mut self, other: IngestReport) -> IngestReport {
        self.total += other.total;
        self.with_point += other.with_point;
        self.with_place_only += other.with_place_only;
        self.with_neither += other.with_neither;
        self.malformed += other.malformed;
        for (lang, n) in other.by_lang {
            *self.by_lang.entry(lang).or_insert(0) += n;
        }
        self
    }

    /// Flat key/value view in a fixed order; languages appear as `lang.<code>`.
    pub fn entries(&self) -> Vec<(String, u64)> {
        let mut out = vec![
            ("total".to_string(), self.total),
            ("malformed".to_string(), self.malformed),
            ("with_point".to_string(), self.with_point),
            ("with_place_only".to_string(), self.with_place_only),
            ("with_neither".to_string(), self.with_neither),
        ];
        out.extend(self.by_lang.iter().map(|(k, v)| (format!("lang.{k}"), *v)));
        out
    }
}

/// Count the composition of a record stream. Lines are read in bounded
/// chunks and parsed in parallel; only the per-language map grows with input.
pub fn scan_corpus<R: BufRead + ?Sized>(reader: &mut R) -> io::Result<IngestReport> {
    let mut report = IngestReport::default();
    let mut chunk = Vec::with_capacity(CHUNK_LINES);
    while read_chunk(reader, &mut chunk, CHUNK_LINES)? {
        let partial = chunk
            .par_iter()
            .fold(IngestReport::default, |mut r, line| {
                r.record_line(line);
                r
            })
            .reduce(IngestReport::default, IngestReport::merge);
        report = report.merge(partial);
    }
    Ok(report)
}
