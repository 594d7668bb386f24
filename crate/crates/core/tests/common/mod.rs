//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::{DateTime, FixedOffset, TimeZone};
use geotopic::geofilter::{GeoBox, GeoPoint};
use geotopic::ingest::{EntityCounts, RawPost};
use geotopic::vocab::{BowDocument, VocabParams};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Gamma;

pub fn sample_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample/sample.toml")
}

// ---- geometry ----

/// Point containment by clamping: a point is inside exactly when clamping it
/// to the box leaves it unchanged.
pub fn clamp_contains(b: &GeoBox, p: GeoPoint) -> bool {
    let lat = p.lat.clamp(b.sw().lat, b.ne().lat);
    let lon = p.lon.clamp(b.sw().lon, b.ne().lon);
    lat == p.lat && lon == p.lon
}

/// Boxes whose corners sit on an integer grid `0..=GRID` (shifted by a base
/// offset), so relations can be decided by enumerating grid points.
pub const GRID: i32 = 5;

pub fn grid_box<R: Rng>(rng: &mut R, base: (f64, f64)) -> GeoBox {
    let (a, b) = (rng.random_range(0..=GRID), rng.random_range(0..=GRID));
    let (c, d) = (rng.random_range(0..=GRID), rng.random_range(0..=GRID));
    GeoBox::from_degrees(
        base.0 + a.min(b) as f64,
        base.1 + c.min(d) as f64,
        base.0 + a.max(b) as f64,
        base.1 + c.max(d) as f64,
    )
    .unwrap()
}

fn grid_points(base: (f64, f64)) -> impl Iterator<Item = GeoPoint> {
    (0..=GRID).flat_map(move |i| {
        (0..=GRID).map(move |j| GeoPoint { lat: base.0 + i as f64, lon: base.1 + j as f64 })
    })
}

/// Two grid boxes intersect (edges included) iff some grid point lies in both.
pub fn grid_overlap(a: &GeoBox, b: &GeoBox, base: (f64, f64)) -> bool {
    grid_points(base).any(|p| clamp_contains(a, p) && clamp_contains(b, p))
}

/// A grid box is inside another iff every grid point of it is.
pub fn grid_contains(outer: &GeoBox, inner: &GeoBox, base: (f64, f64)) -> bool {
    grid_points(base).filter(|p| clamp_contains(inner, *p)).all(|p| clamp_contains(outer, p))
}

pub fn random_box<R: Rng>(rng: &mut R) -> GeoBox {
    let (la, lb) = (rng.random_range(-90.0..=90.0), rng.random_range(-90.0..=90.0));
    let (oa, ob) = (rng.random_range(-180.0..=180.0), rng.random_range(-180.0..=180.0));
    GeoBox::from_degrees(f64::min(la, lb), f64::min(oa, ob), f64::max(la, lb), f64::max(oa, ob)).unwrap()
}

pub fn random_point<R: Rng>(rng: &mut R) -> GeoPoint {
    GeoPoint { lat: rng.random_range(-90.0..=90.0), lon: rng.random_range(-180.0..=180.0) }
}

/// A point that is inside, on the edge of, or outside `b` with comparable odds.
pub fn point_near<R: Rng>(rng: &mut R, b: &GeoBox) -> GeoPoint {
    let pick = |rng: &mut R, lo: f64, hi: f64, min: f64, max: f64| match rng.random_range(0..5) {
        0 => lo,
        1 => hi,
        2 => rng.random_range(lo..=hi),
        3 => rng.random_range(min..=lo),
        _ => rng.random_range(hi..=max),
    };
    GeoPoint {
        lat: pick(rng, b.sw().lat, b.ne().lat, -90.0, 90.0),
        lon: pick(rng, b.sw().lon, b.ne().lon, -180.0, 180.0),
    }
}

pub fn timestamp(secs: i64) -> DateTime<FixedOffset> {
    FixedOffset::east_opt(0).unwrap().timestamp_opt(secs, 0).unwrap()
}

pub fn random_post<R: Rng>(rng: &mut R, near: &GeoBox) -> RawPost {
    let point = rng.random_bool(0.5).then(|| point_near(rng, near));
    let place_box = rng.random_bool(0.6).then(|| {
        if rng.random_bool(0.5) {
            let a = point_near(rng, near);
            let b = point_near(rng, near);
            GeoBox::from_degrees(a.lat.min(b.lat), a.lon.min(b.lon), a.lat.max(b.lat), a.lon.max(b.lon)).unwrap()
        } else {
            random_box(rng)
        }
    });
    RawPost {
        id: rng.random::<u64>().to_string(),
        text: String::new(),
        created_at: timestamp(1_488_800_000 + rng.random_range(0..2_000_000)),
        lang: "pt".into(),
        point,
        place_box,
        user_id: "u".into(),
        entities: EntityCounts::default(),
    }
}

// ---- text ----

const PIECES: &[&str] = &[
    "casa", "casas", "ações", "papéis", "jogos", "amor", "loooool", "kkkkkk", "ÔNIBUS", "Açaí", "http://x.co/a",
    "https://t.co/9z", "www.site.br", "@fulano", "#tag", "#", "@", "123", "4º", "²", "Ⅻ", "¡", "...", "!!!", "\u{2014}", "'",
    "e\u{301}", "ǅ", "İ", "ß", "ΣΑΣ", "日本語", "😀", "\u{200b}", "\t", "\n", " ", "  ", "aff", "que", "aaaa",
    "ééééé", "rs", "não", "mães", "irmãos", "anéis", "fuzis", "lápis", "mês",
];

/// Text mixing Portuguese words, entities, digits, punctuation, odd Unicode
/// and completely random code points.
pub fn fuzz_text<R: Rng>(rng: &mut R) -> String {
    let n = rng.random_range(0..12);
    let mut s = String::new();
    for _ in 0..n {
        match rng.random_range(0..4) {
            0 => {
                for _ in 0..rng.random_range(1..6) {
                    s.push(rng.random::<char>());
                }
            }
            1 => {
                let c = char::from_u32(rng.random_range(0x20..0x250)).unwrap_or('x');
                for _ in 0..rng.random_range(1..7) {
                    s.push(c);
                }
            }
            _ => s.push_str(PIECES[rng.random_range(0..PIECES.len())]),
        }
        if rng.random_bool(0.7) {
            s.push(' ');
        }
    }
    s
}

// ---- vocabulary ----

/// Straightforward re-implementation of the pruning rules: scan every
/// document for every candidate term.
pub fn brute_force_vocab(docs: &[Vec<String>], p: &VocabParams) -> Vec<(String, u64, u64)> {
    let terms: BTreeSet<&String> = docs.iter().flatten().collect();
    let n = docs.len() as f64;
    let mut kept: Vec<(String, u64, u64)> = terms
        .into_iter()
        .map(|t| {
            let total = docs.iter().map(|d| d.iter().filter(|x| *x == t).count() as u64).sum();
            let df = docs.iter().filter(|d| d.contains(t)).count() as u64;
            (t.clone(), total, df)
        })
        .filter(|(_, total, df)| *total >= p.min_count && (*df as f64) / n < p.max_df)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    kept.truncate(p.cap);
    kept
}

pub fn random_docs<R: Rng>(rng: &mut R, docs: usize, alphabet: usize) -> Vec<Vec<String>> {
    (0..docs)
        .map(|_| {
            let len = rng.random_range(0..15);
            // skewed term choice gives a spread of counts and document frequencies
            (0..len).map(|_| format!("t{}", (rng.random::<f64>().powi(2) * alphabet as f64) as usize)).collect()
        })
        .collect()
}

// ---- LDA ----

pub fn bow(id: usize, counts: &BTreeMap<u32, u32>) -> BowDocument {
    BowDocument::new(id.to_string(), counts.iter().map(|(&w, &c)| (w, c)).collect())
}

pub fn random_corpus<R: Rng>(rng: &mut R, docs: usize, vocab: usize, max_len: usize) -> Vec<BowDocument> {
    (0..docs)
        .map(|d| {
            let mut counts = BTreeMap::new();
            for _ in 0..rng.random_range(1..=max_len) {
                *counts.entry(rng.random_range(0..vocab as u32)).or_insert(0) += 1;
            }
            bow(d, &counts)
        })
        .collect()
}

fn dirichlet<R: Rng>(rng: &mut R, alpha: &[f64]) -> Vec<f64> {
    let draws: Vec<f64> = alpha.iter().map(|&a| Gamma::new(a, 1.0).unwrap().sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|x| x / total).collect()
}

/// Documents drawn from `k` topics whose mass sits on disjoint blocks of the
/// vocabulary (plus a little noise everywhere). Returns true phi rows and the corpus.
pub fn separated_topics_corpus<R: Rng>(
    rng: &mut R,
    docs: usize,
    vocab: usize,
    k: usize,
    doc_alpha: f64,
) -> (Vec<Vec<f64>>, Vec<BowDocument>) {
    let block = vocab / k;
    let phi: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            let alpha: Vec<f64> = (0..vocab).map(|w| if w / block == t { 1.0 } else { 0.01 }).collect();
            dirichlet(rng, &alpha)
        })
        .collect();
    let word_dists: Vec<WeightedIndex<f64>> = phi.iter().map(|row| WeightedIndex::new(row).unwrap()).collect();
    let corpus = (0..docs)
        .map(|d| {
            let theta = WeightedIndex::new(dirichlet(rng, &vec![doc_alpha; k])).unwrap();
            let mut counts = BTreeMap::new();
            for _ in 0..rng.random_range(30..=70) {
                let t = theta.sample(rng);
                *counts.entry(word_dists[t].sample(rng) as u32).or_insert(0) += 1;
            }
            bow(d, &counts)
        })
        .collect();
    (phi, corpus)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Mean cosine of the best one-to-one matching, by exhaustive search.
pub fn best_permutation_cosine(truth: &[Vec<f64>], learned: &[Vec<f64>]) -> f64 {
    let k = truth.len();
    permutations(k)
        .into_iter()
        .map(|p| (0..k).map(|i| cosine(&truth[i], &learned[p[i]])).sum::<f64>() / k as f64)
        .fold(f64::NEG_INFINITY, f64::max)
}
