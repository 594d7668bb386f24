//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//!
//! Every token carries a topic assignment. A sweep visits the tokens in
//! document order and resamples each one from
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk + α) · (n_kw + β) / (n_k + V·β)
//! ```
//!
//! where all counts exclude the token being resampled. After the last sweep
//! the smoothed estimates are
//!
//! ```text
//! phi[k][w]   = (n_kw + β) / (n_k + V·β)
//! theta[d][k] = (n_dk + α) / (len_d + K·α)
//! ```
//!
//! Randomness comes from a ChaCha8 generator seeded with `LdaConfig::seed`.
//! Initial assignments and then every sweep draw from that single stream in
//! document order, so a (corpus, config) pair always yields the same model.
//! There is no parallel sweep mode.

use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::vocab::BowDocument;

pub const MODEL_FORMAT_TAG: &str = "geotopic-lda 1";

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("invalid LDA configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("topic {topic} out of range (model has {topics})")]
    TopicOutOfRange { topic: usize, topics: usize },
    #[error("document {doc} out of range (model has {docs})")]
    DocOutOfRange { doc: usize, docs: usize },
    #[error("model file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaConfig {
    pub topics: usize,
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl LdaConfig {
    /// 20 sweeps, α = 50/K, β = 0.01.
    pub fn new(topics: usize) -> Self {
        Self {
            topics,
            iterations: 20,
            alpha: default_alpha(topics),
            beta: 0.01,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        if self.topics < 1 {
            return Err(LdaError::InvalidConfig("topic count must be at least 1".into()));
        }
        if self.iterations < 1 {
            return Err(LdaError::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(LdaError::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(LdaError::InvalidConfig(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

pub fn default_alpha(topics: usize) -> f64 {
    50.0 / topics.max(1) as f64
}

/// Normalized collapsed conditional over topics for one token, given counts
/// that already exclude it. `n_kw` holds the counts of the token's term in
/// each topic.
pub fn gibbs_conditional(n_dk: &[u32], n_kw: &[u32], n_k: &[u64], alpha: f64, beta: f64, vocab_size: usize) -> Vec<f64> {
    let vbeta = vocab_size as f64 * beta;
    let mut p: Vec<f64> = n_dk
        .iter()
        .zip(n_kw)
        .zip(n_k)
        .map(|((&dk, &kw), &k)| topic_weight(dk, kw, k, alpha, beta, vbeta))
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

#[inline]
fn topic_weight(n_dk: u32, n_kw: u32, n_k: u64, alpha: f64, beta: f64, vbeta: f64) -> f64 {
    (n_dk as f64 + alpha) * (n_kw as f64 + beta) / (n_k as f64 + vbeta)
}

/// Gibbs sampling state. Use [`train`] unless you need to look at the counts
/// between sweeps.
pub struct Sampler {
    config: LdaConfig,
    vocab_size: usize,
    doc_ids: Vec<String>,
    doc_offsets: Vec<usize>,
    words: Vec<u32>,
    z: Vec<u32>,
    n_dk: Vec<u32>,
    // word-major (V x K) so one token's topic counts are contiguous
    n_wk: Vec<u32>,
    n_k: Vec<u64>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
    sweeps: usize,
}

impl Sampler {
    pub fn new(corpus: &[BowDocument], vocab_size: usize, config: LdaConfig) -> Result<Self, LdaError> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(LdaError::InvalidCorpus("no documents".into()));
        }
        if vocab_size == 0 {
            return Err(LdaError::InvalidCorpus("vocabulary is empty".into()));
        }
        let k = config.topics;
        let mut doc_offsets = Vec::with_capacity(corpus.len() + 1);
        let mut words = Vec::new();
        doc_offsets.push(0);
        for doc in corpus {
            if doc.length == 0 {
                return Err(LdaError::InvalidCorpus(format!("document {} is empty", doc.post_id)));
            }
            for &(w, c) in &doc.pairs {
                if w as usize >= vocab_size {
                    return Err(LdaError::InvalidCorpus(format!(
                        "document {} uses term {w} but the vocabulary has {vocab_size}",
                        doc.post_id
                    )));
                }
                words.extend(std::iter::repeat_n(w, c as usize));
            }
            doc_offsets.push(words.len());
        }

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut n_dk = vec![0u32; corpus.len() * k];
        let mut n_wk = vec![0u32; vocab_size * k];
        let mut n_k = vec![0u64; k];
        let mut z = Vec::with_capacity(words.len());
        for d in 0..corpus.len() {
            for &w in &words[doc_offsets[d]..doc_offsets[d + 1]] {
                let t = rng.random_range(0..k);
                z.push(t as u32);
                n_dk[d * k + t] += 1;
                n_wk[w as usize * k + t] += 1;
                n_k[t] += 1;
            }
        }

        Ok(Self {
            config,
            vocab_size,
            doc_ids: corpus.iter().map(|d| d.post_id.clone()).collect(),
            doc_offsets,
            words,
            z,
            n_dk,
            n_wk,
            n_k,
            rng,
            weights: vec![0.0; k],
            sweeps: 0,
        })
    }

    pub fn sweep(&mut self) {
        let k = self.config.topics;
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let vbeta = self.vocab_size as f64 * beta;
        for d in 0..self.doc_ids.len() {
            let dk = &mut self.n_dk[d * k..(d + 1) * k];
            for i in self.doc_offsets[d]..self.doc_offsets[d + 1] {
                let w = self.words[i] as usize;
                let wk = &mut self.n_wk[w * k..(w + 1) * k];
                let old = self.z[i] as usize;
                dk[old] -= 1;
                wk[old] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += topic_weight(dk[t], wk[t], self.n_k[t], alpha, beta, vbeta);
                    self.weights[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[i] = new as u32;
                dk[new] += 1;
                wk[new] += 1;
                self.n_k[new] += 1;
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps
    }

    pub fn assignments(&self) -> &[u32] {
        &self.z
    }

    pub fn total_tokens(&self) -> usize {
        self.words.len()
    }

    /// Verify the count tables against the assignments and each other.
    pub fn check_counts(&self) -> Result<(), String> {
        let k = self.config.topics;
        for d in 0..self.doc_ids.len() {
            let len = self.doc_offsets[d + 1] - self.doc_offsets[d];
            let row: u64 = self.n_dk[d * k..(d + 1) * k].iter().map(|&c| c as u64).sum();
            if row != len as u64 {
                return Err(format!("doc {d}: topic counts sum to {row}, length is {len}"));
            }
        }
        for t in 0..k {
            let col: u64 = (0..self.vocab_size).map(|w| self.n_wk[w * k + t] as u64).sum();
            if col != self.n_k[t] {
                return Err(format!("topic {t}: term counts sum to {col}, n_k is {}", self.n_k[t]));
            }
        }
        let all: u64 = self.n_k.iter().sum();
        if all != self.words.len() as u64 {
            return Err(format!("topic totals sum to {all}, corpus has {} tokens", self.words.len()));
        }
        // recount from z
        let mut recount = vec![0u32; self.n_dk.len()];
        for d in 0..self.doc_ids.len() {
            for i in self.doc_offsets[d]..self.doc_offsets[d + 1] {
                recount[d * k + self.z[i] as usize] += 1;
            }
        }
        if recount != self.n_dk {
            return Err("document-topic counts disagree with assignments".into());
        }
        Ok(())
    }

    pub fn model(&self) -> TopicModel {
        let k = self.config.topics;
        let mut n_kw = vec![0u32; k * self.vocab_size];
        for w in 0..self.vocab_size {
            for t in 0..k {
                n_kw[t * self.vocab_size + w] = self.n_wk[w * k + t];
            }
        }
        TopicModel::from_counts(
            self.config,
            self.vocab_size,
            self.doc_ids.clone(),
            self.n_dk.clone(),
            n_kw,
            self.z.clone(),
        )
    }
}

/// Run `config.iterations` sweeps and return the final model.
pub fn train(corpus: &[BowDocument], vocab_size: usize, config: LdaConfig) -> Result<TopicModel, LdaError> {
    let mut sampler = Sampler::new(corpus, vocab_size, config)?;
    for _ in 0..config.iterations {
        sampler.sweep();
    }
    Ok(sampler.model())
}

/// Trained LDA state: raw counts plus the smoothed `phi` (K x V) and
/// `theta` (D x K) tables derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    config: LdaConfig,
    vocab_size: usize,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u64>,
    n_dk: Vec<u32>,
    n_kw: Vec<u32>,
    n_k: Vec<u64>,
    /// Per-token assignments in document order. Empty for models read from disk.
    z: Vec<u32>,
    phi: Vec<f64>,
    theta: Vec<f64>,
}

impl TopicModel {
    fn from_counts(
        config: LdaConfig,
        vocab_size: usize,
        doc_ids: Vec<String>,
        n_dk: Vec<u32>,
        n_kw: Vec<u32>,
        z: Vec<u32>,
    ) -> Self {
        let k = config.topics;
        let v = vocab_size;
        let n_k: Vec<u64> = (0..k).map(|t| n_kw[t * v..(t + 1) * v].iter().map(|&c| c as u64).sum()).collect();
        let doc_lengths: Vec<u64> = n_dk.chunks(k).map(|r| r.iter().map(|&c| c as u64).sum()).collect();

        let vbeta = v as f64 * config.beta;
        let mut phi = Vec::with_capacity(k * v);
        for t in 0..k {
            let denom = n_k[t] as f64 + vbeta;
            phi.extend(n_kw[t * v..(t + 1) * v].iter().map(|&c| (c as f64 + config.beta) / denom));
        }
        let kalpha = k as f64 * config.alpha;
        let mut theta = Vec::with_capacity(n_dk.len());
        for (row, &len) in n_dk.chunks(k).zip(&doc_lengths) {
            let denom = len as f64 + kalpha;
            theta.extend(row.iter().map(|&c| (c as f64 + config.alpha) / denom));
        }

        Self {
            config,
            vocab_size,
            doc_ids,
            doc_lengths,
            n_dk,
            n_kw,
            n_k,
            z,
            phi,
            theta,
        }
    }

    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    pub fn num_topics(&self) -> usize {
        self.config.topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_length(&self, d: usize) -> u64 {
        self.doc_lengths[d]
    }

    pub fn assignments(&self) -> &[u32] {
        &self.z
    }

    pub fn doc_topic_counts(&self, d: usize) -> &[u32] {
        let k = self.config.topics;
        &self.n_dk[d * k..(d + 1) * k]
    }

    pub fn topic_word_counts(&self, t: usize) -> &[u32] {
        &self.n_kw[t * self.vocab_size..(t + 1) * self.vocab_size]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.n_k
    }

    pub fn phi(&self, t: usize) -> &[f64] {
        &self.phi[t * self.vocab_size..(t + 1) * self.vocab_size]
    }

    pub fn theta(&self, d: usize) -> &[f64] {
        let k = self.config.topics;
        &self.theta[d * k..(d + 1) * k]
    }

    /// Terms of topic `t` ranked by phi, highest first; ties go to the lower
    /// term index. Returns `min(n, V)` entries.
    pub fn top_words(&self, t: usize, n: usize) -> Result<Vec<(u32, f64)>, LdaError> {
        if t >= self.num_topics() {
            return Err(LdaError::TopicOutOfRange {
                topic: t,
                topics: self.num_topics(),
            });
        }
        let row = self.phi(t);
        let mut idx: Vec<u32> = (0..row.len() as u32).collect();
        idx.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
        idx.truncate(n);
        Ok(idx.into_iter().map(|w| (w, row[w as usize])).collect())
    }

    pub fn dominant_topic(&self, d: usize) -> Result<usize, LdaError> {
        if d >= self.num_docs() {
            return Err(LdaError::DocOutOfRange {
                doc: d,
                docs: self.num_docs(),
            });
        }
        Ok(argmax_first(self.theta(d)))
    }

    /// Σ over tokens of ln Σ_k theta[d][k]·phi[k][w]. `corpus` must be the
    /// training corpus, in training order.
    pub fn log_likelihood(&self, corpus: &[BowDocument]) -> Result<f64, LdaError> {
        if corpus.len() != self.num_docs() {
            return Err(LdaError::InvalidCorpus(format!(
                "model has {} documents, corpus has {}",
                self.num_docs(),
                corpus.len()
            )));
        }
        let mut ll = 0.0;
        for (d, doc) in corpus.iter().enumerate() {
            let theta = self.theta(d);
            for &(w, c) in &doc.pairs {
                if w as usize >= self.vocab_size {
                    return Err(LdaError::InvalidCorpus(format!("term {w} outside vocabulary")));
                }
                let p: f64 = theta
                    .iter()
                    .enumerate()
                    .map(|(t, th)| th * self.phi[t * self.vocab_size + w as usize])
                    .sum();
                ll += c as f64 * p.ln();
            }
        }
        Ok(ll)
    }

    /// Count-table consistency and row-stochasticity of phi/theta.
    pub fn check_invariants(&self, tol: f64) -> Result<(), String> {
        let k = self.num_topics();
        for t in 0..k {
            let s: u64 = self.topic_word_counts(t).iter().map(|&c| c as u64).sum();
            if s != self.n_k[t] {
                return Err(format!("topic {t}: term counts {s} != n_k {}", self.n_k[t]));
            }
            check_row(self.phi(t), tol).map_err(|e| format!("phi row {t}: {e}"))?;
        }
        let tokens: u64 = self.doc_lengths.iter().sum();
        if self.n_k.iter().sum::<u64>() != tokens {
            return Err("topic totals do not add up to the token count".into());
        }
        for d in 0..self.num_docs() {
            check_row(self.theta(d), tol).map_err(|e| format!("theta row {d}: {e}"))?;
        }
        Ok(())
    }

    /// Plain-text model: format tag, config, dimensions, then one sparse
    /// `doc` line per document and one sparse `topic` line per topic.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        let c = &self.config;
        writeln!(out, "{MODEL_FORMAT_TAG}")?;
        writeln!(out, "topics {}", c.topics)?;
        writeln!(out, "iterations {}", c.iterations)?;
        writeln!(out, "alpha {}", c.alpha)?;
        writeln!(out, "beta {}", c.beta)?;
        writeln!(out, "seed {}", c.seed)?;
        writeln!(out, "vocab_size {}", self.vocab_size)?;
        writeln!(out, "docs {}", self.num_docs())?;
        for (d, id) in self.doc_ids.iter().enumerate() {
            write!(out, "doc {id}")?;
            write_sparse(&mut out, self.doc_topic_counts(d))?;
        }
        for t in 0..c.topics {
            write!(out, "topic {t}")?;
            write_sparse(&mut out, self.topic_word_counts(t))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, LdaError> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| l.map(|l| (i + 1, l)));
        let mut next = |what: &str| -> Result<(usize, String), LdaError> {
            lines.next().transpose()?.ok_or_else(|| LdaError::Format {
                line: 0,
                reason: format!("unexpected end of file, expected {what}"),
            })
        };
        let (n, tag) = next("format tag")?;
        if tag != MODEL_FORMAT_TAG {
            return Err(LdaError::Format {
                line: n,
                reason: format!("unknown format tag {tag:?}"),
            });
        }
        fn field<T: std::str::FromStr>((n, line): (usize, String), key: &str) -> Result<T, LdaError> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| LdaError::Format {
                    line: n,
                    reason: format!("expected `{key} <value>`"),
                })
        }
        let config = LdaConfig {
            topics: field(next("topics")?, "topics")?,
            iterations: field(next("iterations")?, "iterations")?,
            alpha: field(next("alpha")?, "alpha")?,
            beta: field(next("beta")?, "beta")?,
            seed: field(next("seed")?, "seed")?,
        };
        config.validate()?;
        let vocab_size: usize = field(next("vocab_size")?, "vocab_size")?;
        let docs: usize = field(next("docs")?, "docs")?;
        let k = config.topics;

        let mut doc_ids = Vec::with_capacity(docs);
        let mut n_dk = vec![0u32; docs * k];
        for d in 0..docs {
            let (n, line) = next("doc line")?;
            let rest = line.strip_prefix("doc ").ok_or_else(|| LdaError::Format {
                line: n,
                reason: "expected `doc <id> ...`".into(),
            })?;
            let mut parts = rest.split(' ');
            doc_ids.push(parts.next().unwrap_or_default().to_string());
            read_sparse(parts, &mut n_dk[d * k..(d + 1) * k], n)?;
        }
        let mut n_kw = vec![0u32; k * vocab_size];
        for t in 0..k {
            let (n, line) = next("topic line")?;
            let mut parts = line.split(' ');
            if parts.next() != Some("topic") || parts.next() != Some(t.to_string().as_str()) {
                return Err(LdaError::Format {
                    line: n,
                    reason: format!("expected `topic {t} ...`"),
                });
            }
            read_sparse(parts, &mut n_kw[t * vocab_size..(t + 1) * vocab_size], n)?;
        }

        let model = Self::from_counts(config, vocab_size, doc_ids, n_dk, n_kw, Vec::new());
        // per-topic totals seen from documents must match those seen from terms
        for t in 0..k {
            let from_docs: u64 = (0..docs).map(|d| model.doc_topic_counts(d)[t] as u64).sum();
            if from_docs != model.n_k[t] {
                return Err(LdaError::Format {
                    line: 0,
                    reason: format!("topic {t}: document counts {from_docs} != term counts {}", model.n_k[t]),
                });
            }
        }
        Ok(model)
    }
}

fn write_sparse<W: Write>(out: &mut W, row: &[u32]) -> io::Result<()> {
    for (i, &c) in row.iter().enumerate() {
        if c > 0 {
            write!(out, " {i}:{c}")?;
        }
    }
    writeln!(out)
}

fn read_sparse<'a>(parts: impl Iterator<Item = &'a str>, row: &mut [u32], line: usize) -> Result<(), LdaError> {
    for p in parts.filter(|p| !p.is_empty()) {
        let parsed = p
            .split_once(':')
            .and_then(|(i, c)| Some((i.parse::<usize>().ok()?, c.parse::<u32>().ok()?)));
        match parsed {
            Some((i, c)) if i < row.len() => row[i] = c,
            _ => {
                return Err(LdaError::Format {
                    line,
                    reason: format!("bad entry {p:?}"),
                })
            }
        }
    }
    Ok(())
}

fn check_row(row: &[f64], tol: f64) -> Result<(), String> {
    if let Some(x) = row.iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(format!("negative or NaN entry {x}"));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(format!("sums to {s}"));
    }
    Ok(())
}

/// Index of the largest value; the first one wins on ties.
pub fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<(u32, f64)>, LdaError> {
    model.top_words(topic, n)
}

pub fn dominant_topic(model: &TopicModel, doc: usize) -> Result<usize, LdaError> {
    model.dominant_topic(doc)
}

pub fn log_likelihood(model: &TopicModel, corpus: &[BowDocument]) -> Result<f64, LdaError> {
    model.log_likelihood(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<BowDocument> {
        vec![
            BowDocument::new("a", vec![(0, 3), (1, 1)]),
            BowDocument::new("b", vec![(1, 2), (2, 2)]),
            BowDocument::new("c", vec![(0, 1), (3, 4)]),
        ]
    }

    #[test]
    fn conditional_hand_example() {
        let p = gibbs_conditional(&[1, 0], &[1, 0], &[2, 1], 1.0, 1.0, 2);
        assert!((p[0] - 0.75).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn conditional_uniform_when_empty() {
        let p = gibbs_conditional(&[0; 4], &[0; 4], &[0; 4], 0.5, 0.01, 10);
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn config_validation() {
        assert!(LdaConfig::new(0).validate().is_err());
        assert!(LdaConfig { beta: 0.0, ..LdaConfig::new(3) }.validate().is_err());
        assert!(LdaConfig { iterations: 0, ..LdaConfig::new(3) }.validate().is_err());
        assert_eq!(LdaConfig::new(50).alpha, 1.0);
        assert_eq!(LdaConfig::new(50).iterations, 20);
    }

    #[test]
    fn corpus_validation() {
        let cfg = LdaConfig::new(2);
        assert!(matches!(train(&[], 4, cfg), Err(LdaError::InvalidCorpus(_))));
        let empty_doc = vec![BowDocument::new("x", vec![])];
        assert!(matches!(train(&empty_doc, 4, cfg), Err(LdaError::InvalidCorpus(_))));
        assert!(matches!(train(&corpus(), 3, cfg), Err(LdaError::InvalidCorpus(_))));
    }

    #[test]
    fn single_topic_closed_form() {
        let beta = 0.01;
        let cfg = LdaConfig { beta, ..LdaConfig::new(1) };
        let m = train(&corpus(), 4, cfg).unwrap();
        assert!(m.assignments().iter().all(|&z| z == 0));
        let counts = [4.0, 3.0, 2.0, 4.0];
        let n = 13.0;
        for (w, c) in counts.iter().enumerate() {
            assert_eq!(m.phi(0)[w], (c + beta) / (n + 4.0 * beta));
        }
        for d in 0..3 {
            assert_eq!(m.theta(d), &[1.0]);
        }
    }

    #[test]
    fn same_seed_same_assignments() {
        let cfg = LdaConfig { seed: 7, iterations: 5, ..LdaConfig::new(3) };
        let a = train(&corpus(), 4, cfg).unwrap();
        let b = train(&corpus(), 4, cfg).unwrap();
        assert_eq!(a.assignments(), b.assignments());
        assert_eq!(a, b);
    }

    #[test]
    fn dominant_topic_ties_go_low() {
        assert_eq!(argmax_first(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax_first(&[0.5, 0.5]), 0);
        let m = train(&corpus(), 4, LdaConfig::new(2)).unwrap();
        assert!(matches!(m.dominant_topic(3), Err(LdaError::DocOutOfRange { .. })));
        assert!(matches!(m.top_words(2, 1), Err(LdaError::TopicOutOfRange { .. })));
    }

    #[test]
    fn top_words_of_single_topic() {
        let m = train(&corpus(), 4, LdaConfig::new(1)).unwrap();
        let top = m.top_words(0, 1).unwrap();
        assert_eq!(top.len(), 1);
        // terms 0 and 3 both occur 4 times; lower index wins
        assert_eq!(top[0].0, 0);
        let all = m.top_words(0, 10).unwrap();
        assert_eq!(all.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0, 3, 1, 2]);
    }

    #[test]
    fn single_doc_log_likelihood_closed_form() {
        let doc = vec![BowDocument::new("a", vec![(0, 2), (1, 3)])];
        let m = train(&doc, 2, LdaConfig::new(1)).unwrap();
        let expected = 2.0 * m.phi(0)[0].ln() + 3.0 * m.phi(0)[1].ln();
        let ll = m.log_likelihood(&doc).unwrap();
        assert!((ll - expected).abs() < 1e-12);
        assert!(ll < 0.0);
    }

    #[test]
    fn model_file_roundtrip() {
        let cfg = LdaConfig { seed: 3, iterations: 4, alpha: 0.3, beta: 0.05, topics: 3 };
        let m = train(&corpus(), 4, cfg).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = TopicModel::read(buf.as_slice()).unwrap();
        assert_eq!(back.config(), m.config());
        for d in 0..3 {
            assert_eq!(back.theta(d), m.theta(d));
        }
        for t in 0..3 {
            assert_eq!(back.phi(t), m.phi(t));
        }
        assert!(back.assignments().is_empty());
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(buf, again);

        let broken = String::from_utf8(buf).unwrap().replacen("geotopic-lda 1", "geotopic-lda 9", 1);
        assert!(matches!(TopicModel::read(broken.as_bytes()), Err(LdaError::Format { .. })));
    }
}
