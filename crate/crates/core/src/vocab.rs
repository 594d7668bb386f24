//! Pruned unigram dictionary and bag-of-words vectors.
//!
//! Pruning runs in a fixed order: drop terms with fewer than `min_count`
//! total occurrences, then terms whose document frequency is not strictly
//! below `max_df`, then keep the `cap` most frequent survivors. Ties are
//! broken by the term itself so the result never depends on hash order.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("invalid vocabulary parameters: {0}")]
    InvalidParams(String),
    #[error("no term survives min_count={min_count}, max_df={max_df} over {docs} documents")]
    EmptyVocabulary { min_count: u64, max_df: f64, docs: u64 },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VocabParams {
    pub min_count: u64,
    pub max_df: f64,
    pub cap: usize,
}

impl Default for VocabParams {
    fn default() -> Self {
        Self {
            min_count: 10,
            max_df: 0.40,
            cap: 10_000,
        }
    }
}

impl VocabParams {
    pub fn validate(&self) -> Result<(), VocabError> {
        if self.min_count < 1 {
            return Err(VocabError::InvalidParams("min_count must be at least 1".into()));
        }
        if !(self.max_df > 0.0 && self.max_df <= 1.0) {
            return Err(VocabError::InvalidParams(format!("max_df {} not in (0, 1]", self.max_df)));
        }
        if self.cap < 1 {
            return Err(VocabError::InvalidParams("cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-term occurrence and document counts, mergeable across chunks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermCounts {
    docs: u64,
    terms: HashMap<String, (u64, u64)>,
}

impl TermCounts {
    pub fn add_document<S: AsRef<str>>(&mut self, tokens: &[S]) {
        self.docs += 1;
        let mut local: HashMap<&str, u64> = HashMap::new();
        for t in tokens {
            *local.entry(t.as_ref()).or_insert(0) += 1;
        }
        for (term, n) in local {
            let entry = self.terms.entry(term.to_string()).or_insert((0, 0));
            entry.0 += n;
            entry.1 += 1;
        }
    }

    pub fn merge(mut self, other: TermCounts) -> TermCounts {
        self.docs += other.docs;
        for (term, (total, df)) in other.terms {
            let entry = self.terms.entry(term).or_insert((0, 0));
            entry.0 += total;
            entry.1 += df;
        }
        self
    }

    pub fn docs(&self) -> u64 {
        self.docs
    }

    pub fn prune(self, params: &VocabParams) -> Result<Vocabulary, VocabError> {
        params.validate()?;
        let docs = self.docs;
        let mut kept: Vec<(String, u64, u64)> = self
            .terms
            .into_iter()
            .filter(|(_, (total, _))| *total >= params.min_count)
            .filter(|(_, (_, df))| below_max_df(*df, docs, params.max_df))
            .map(|(term, (total, df))| (term, total, df))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(params.cap);
        if kept.is_empty() {
            return Err(VocabError::EmptyVocabulary {
                min_count: params.min_count,
                max_df: params.max_df,
                docs,
            });
        }
        Ok(Vocabulary::from_sorted(kept, docs))
    }
}

fn below_max_df(df: u64, docs: u64, max_df: f64) -> bool {
    (df as f64) / (docs as f64) < max_df
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    total_count: Vec<u64>,
    doc_freq: Vec<u64>,
    corpus_docs: u64,
}

impl Vocabulary {
    fn from_sorted(entries: Vec<(String, u64, u64)>, corpus_docs: u64) -> Self {
        let mut terms = Vec::with_capacity(entries.len());
        let mut total_count = Vec::with_capacity(entries.len());
        let mut doc_freq = Vec::with_capacity(entries.len());
        for (term, total, df) in entries {
            terms.push(term);
            total_count.push(total);
            doc_freq.push(df);
        }
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self {
            terms,
            index,
            total_count,
            doc_freq,
            corpus_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, index: u32) -> Option<&str> {
        self.terms.get(index as usize).map(String::as_str)
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn total_count(&self, index: u32) -> u64 {
        self.total_count[index as usize]
    }

    pub fn doc_freq(&self, index: u32) -> u64 {
        self.doc_freq[index as usize]
    }

    pub fn corpus_docs(&self) -> u64 {
        self.corpus_docs
    }

    /// `#corpus_docs<TAB>n` header, then `index<TAB>term<TAB>total<TAB>df`
    /// per term in index order.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#corpus_docs\t{}", self.corpus_docs)?;
        for (i, term) in self.terms.iter().enumerate() {
            writeln!(out, "{i}\t{term}\t{}\t{}", self.total_count[i], self.doc_freq[i])?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, VocabError> {
        let mut corpus_docs = 0;
        let mut entries = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            let bad = |reason: &str| VocabError::Format {
                line: lineno,
                reason: reason.to_string(),
            };
            if let Some(rest) = line.strip_prefix("#corpus_docs\t") {
                corpus_docs = rest.parse().map_err(|_| bad("bad corpus_docs header"))?;
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(bad("expected index, term, total, df"));
            }
            let idx: usize = fields[0].parse().map_err(|_| bad("bad index"))?;
            if idx != entries.len() {
                return Err(bad("indices must be consecutive from 0"));
            }
            let total = fields[2].parse().map_err(|_| bad("bad total count"))?;
            let df = fields[3].parse().map_err(|_| bad("bad document frequency"))?;
            entries.push((fields[1].to_string(), total, df));
        }
        Ok(Self::from_sorted(entries, corpus_docs))
    }
}

pub fn build_vocabulary<'a, I, S>(docs: I, params: &VocabParams) -> Result<Vocabulary, VocabError>
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    params.validate()?;
    let mut counts = TermCounts::default();
    for tokens in docs {
        counts.add_document(tokens);
    }
    counts.prune(params)
}

/// Sparse term counts of one document over a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowDocument {
    pub post_id: String,
    /// `(term index, count)` with strictly increasing indices.
    pub pairs: Vec<(u32, u32)>,
    pub length: u32,
}

impl BowDocument {
    pub fn new(post_id: impl Into<String>, pairs: Vec<(u32, u32)>) -> Self {
        let length = pairs.iter().map(|(_, c)| c).sum();
        Self {
            post_id: post_id.into(),
            pairs,
            length,
        }
    }

    /// `post_id idx:count idx:count ...`
    pub fn to_line(&self) -> String {
        let mut s = self.post_id.clone();
        for (i, c) in &self.pairs {
            s.push_str(&format!(" {i}:{c}"));
        }
        s
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        let mut parts = line.split(' ');
        let post_id = parts.next().filter(|p| !p.is_empty()).ok_or("missing post id")?;
        let mut pairs = Vec::new();
        for p in parts {
            let (i, c) = p.split_once(':').ok_or_else(|| format!("bad pair {p:?}"))?;
            let i: u32 = i.parse().map_err(|_| format!("bad index in {p:?}"))?;
            let c: u32 = c.parse().map_err(|_| format!("bad count in {p:?}"))?;
            if c == 0 {
                return Err(format!("zero count in {p:?}"));
            }
            if pairs.last().is_some_and(|&(prev, _)| prev >= i) {
                return Err("indices must be strictly increasing".into());
            }
            pairs.push((i, c));
        }
        Ok(Self::new(post_id, pairs))
    }
}

/// Count in-vocabulary tokens; anything outside the vocabulary is dropped.
pub fn vectorize<S: AsRef<str>>(post_id: &str, tokens: &[S], vocab: &Vocabulary) -> BowDocument {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for t in tokens {
        if let Some(i) = vocab.index_of(t.as_ref()) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    BowDocument::new(post_id, counts.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&str]) -> Vec<Vec<String>> {
        raw.iter().map(|d| d.split_whitespace().map(str::to_string).collect()).collect()
    }

    fn build(corpus: &[Vec<String>], params: VocabParams) -> Result<Vocabulary, VocabError> {
        build_vocabulary(corpus.iter().map(Vec::as_slice), &params)
    }

    #[test]
    fn toy_corpus_keeps_only_the_mid_frequency_term() {
        // "todo" is in every doc, "praia" occurs 12 times in 2 docs, "raro" once
        let mut corpus = docs(&["todo raro", "todo", "todo", "todo", "todo"]);
        corpus[1].extend(std::iter::repeat_n("praia".to_string(), 6));
        corpus[2].extend(std::iter::repeat_n("praia".to_string(), 6));
        let v = build(&corpus, VocabParams { min_count: 2, max_df: 0.5, cap: 10_000 }).unwrap();
        assert_eq!(v.terms(), ["praia"]);
        assert_eq!(v.total_count(0), 12);
        assert_eq!(v.doc_freq(0), 2);
        assert_eq!(v.corpus_docs(), 5);
    }

    #[test]
    fn cap_one_keeps_most_frequent() {
        let corpus = docs(&["a b b c", "c c d", "e"]);
        let v = build(&corpus, VocabParams { min_count: 1, max_df: 1.0, cap: 1 }).unwrap();
        assert_eq!(v.terms(), ["c"]);
    }

    #[test]
    fn disabled_filters_keep_everything_sorted() {
        let corpus = docs(&["b a", "a c", "d"]);
        let v = build(&corpus, VocabParams { min_count: 1, max_df: 1.0, cap: usize::MAX }).unwrap();
        assert_eq!(v.terms(), ["a", "b", "c", "d"]);
    }

    #[test]
    fn max_df_is_strict() {
        // "x" appears in exactly 2 of 5 documents: df = 0.40 is not < 0.40
        let corpus = docs(&["x y", "x y", "z", "z", "w"]);
        let r = build(&corpus, VocabParams { min_count: 1, max_df: 0.40, cap: 100 }).unwrap();
        assert_eq!(r.index_of("x"), None);
        assert_eq!(r.terms(), ["w"]);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let corpus = docs(&["a", "b"]);
        assert!(matches!(
            build(&corpus, VocabParams::default()),
            Err(VocabError::EmptyVocabulary { .. })
        ));
        assert!(matches!(
            build(&corpus, VocabParams { min_count: 0, ..Default::default() }),
            Err(VocabError::InvalidParams(_))
        ));
        assert!(matches!(
            build(&corpus, VocabParams { max_df: 0.0, ..Default::default() }),
            Err(VocabError::InvalidParams(_))
        ));
    }

    #[test]
    fn vectorize_counts_multiplicities() {
        // a third document keeps "b" under the strict max_df bound
        let corpus = docs(&["a a a b", "b", "c"]);
        let v = build(&corpus, VocabParams { min_count: 1, max_df: 1.0, cap: 10 }).unwrap();
        assert_eq!(v.index_of("a"), Some(0));
        let bow = vectorize("p", &["a", "b", "a"], &v);
        assert_eq!(bow.pairs, vec![(0, 2), (1, 1)]);
        assert_eq!(bow.length, 3);
        let empty = vectorize("q", &["zzz"], &v);
        assert!(empty.pairs.is_empty());
        assert_eq!(empty.length, 0);
    }

    #[test]
    fn files_roundtrip() {
        let corpus = docs(&["a a b", "b c c c", "d"]);
        let v = build(&corpus, VocabParams { min_count: 1, max_df: 1.0, cap: 10 }).unwrap();
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "#corpus_docs\t3\n0\tc\t3\t1\n1\ta\t2\t1\n2\tb\t2\t2\n3\td\t1\t1\n"
        );
        assert_eq!(Vocabulary::read(buf.as_slice()).unwrap(), v);

        let bow = BowDocument::new("42", vec![(0, 3), (5, 1)]);
        assert_eq!(bow.to_line(), "42 0:3 5:1");
        assert_eq!(BowDocument::from_line("42 0:3 5:1").unwrap(), bow);
        assert_eq!(BowDocument::from_line("7").unwrap().length, 0);
        assert!(BowDocument::from_line("7 5:1 2:1").is_err());
        assert!(Vocabulary::read("0\ta\t1\t1\n2\tb\t1\t1\n".as_bytes()).is_err());
    }
}
