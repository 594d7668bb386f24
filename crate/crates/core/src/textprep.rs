//! Post text normalization and tokenization.
//!
//! [`normalize`] runs these steps in this order:
//!
//! 1. lowercase
//! 2. remove URLs, `@mentions`, whole `#hashtags`, and digits
//! 3. turn plural words into singular ([`singularize`])
//! 4. shorten character runs longer than three to three ([`collapse_repeats`])
//! 5. replace everything that is not a letter, mark or whitespace with a space
//! 6. drop stopwords
//! 7. drop tokens shorter than three characters and tokens made of one repeated character
//!
//! Tokens are the whitespace-separated pieces left after step 5.

use std::collections::HashSet;
use std::io::{self, BufRead};
use std::sync::LazyLock;

use chrono::{DateTime, FixedOffset};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::RawPost;

static ENTITIES: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S*|@\w+|#\w+").expect("entity pattern"));
static DIGITS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+").expect("digit pattern"));
static NON_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[^\p{L}\p{M}\s]+").expect("symbol pattern"));

const MIN_TOKEN_CHARS: usize = 3;
const MAX_RUN: usize = 3;

/// Words left alone by [`singularize`]: singular forms that look plural.
const INVARIANT_WORDS: &[&str] = &[
    "lapis", "lápis", "onibus", "ônibus", "virus", "vírus", "bonus", "bônus", "tenis", "tênis",
    "atlas", "pires", "simples", "mais", "jamais", "demais", "menos", "depois", "pois", "dois",
    "seis", "tres", "três", "mes", "mês", "gas", "gás", "deus", "atras", "atrás", "através",
    "ingles", "inglês", "portugues", "português", "pais", "país", "ontens", "lilas", "lilás",
];

/// Words of fewer characters than this are never singularized.
const MIN_PLURAL_CHARS: usize = 4;

fn is_vowel(c: char) -> bool {
    matches!(
        c,
        'a' | 'e' | 'i' | 'o' | 'u' | 'á' | 'é' | 'í' | 'ó' | 'ú' | 'â' | 'ê' | 'ô' | 'ã' | 'õ' | 'à' | 'ü'
    )
}

/// One application of the first matching plural rule, or `None`.
fn strip_plural(word: &str) -> Option<String> {
    if word.chars().count() < MIN_PLURAL_CHARS || INVARIANT_WORDS.contains(&word) {
        return None;
    }
    const REPLACEMENTS: &[(&str, &str)] = &[
        ("ões", "ão"),
        ("ães", "ão"),
        ("ãos", "ão"),
        ("oes", "ao"),
        ("aes", "ao"),
        ("ns", "m"),
        ("res", "r"),
        ("zes", "z"),
        ("ses", "s"),
        ("ais", "al"),
        ("éis", "el"),
        ("óis", "ol"),
    ];
    for (suffix, repl) in REPLACEMENTS {
        if let Some(stem) = word.strip_suffix(suffix) {
            return Some(format!("{stem}{repl}"));
        }
    }
    let mut rev = word.chars().rev();
    match (rev.next(), rev.next(), rev.next()) {
        (Some('s'), Some('i'), Some(v)) if is_vowel(v) => {
            Some(format!("{}l", &word[..word.len() - 1]))
        }
        (Some('s'), Some(v), _) if is_vowel(v) => Some(word[..word.len() - 1].to_string()),
        _ => None,
    }
}

/// Rule-based Portuguese de-pluralization of a lowercase word.
///
/// Rules (first match wins): -ões/-ães/-ãos → -ão (also unaccented), -ns → -m,
/// -res/-zes/-ses → drop -es, -ais/-éis/-óis → -al/-el/-ol, vowel + -is → -il,
/// vowel + -s → drop -s. Rules are reapplied until the word stops changing,
/// so the result is always a fixed point.
pub fn singularize(word: &str) -> String {
    let mut current = word.to_string();
    while let Some(next) = strip_plural(&current) {
        current = next;
    }
    current
}

/// Shorten every run of a repeated character longer than three to exactly three.
pub fn collapse_repeats(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    let mut prev = None;
    let mut run = 0;
    for c in token.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= MAX_RUN {
            out.push(c);
        }
    }
    out
}

/// Letters and marks: the characters step 5 keeps, minus whitespace.
fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !NON_WORD.is_match(c.encode_utf8(&mut [0; 4]))
}

/// Singularize each maximal letter run inside a whitespace-delimited word, so
/// trailing punctuation does not hide a plural ending.
fn singularize_runs(word: &str) -> String {
    let mut out = String::with_capacity(word.len());
    let mut run = String::new();
    for c in word.chars() {
        if is_word_char(c) {
            run.push(c);
        } else {
            if !run.is_empty() {
                out.push_str(&singularize(&run));
                run.clear();
            }
            out.push(c);
        }
    }
    if !run.is_empty() {
        out.push_str(&singularize(&run));
    }
    out
}

fn single_repeated_char(token: &str) -> bool {
    let mut chars = token.chars();
    match chars.next() {
        Some(first) => chars.all(|c| c == first),
        None => true,
    }
}

/// Stopword list loaded from a one-term-per-line file. Terms are lowercased
/// and their singular form is stored too, because stopword removal runs
/// after singularization.
#[derive(Debug, Clone, Default)]
pub struct StopWords {
    terms: HashSet<String>,
}

impl StopWords {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = HashSet::new();
        for t in terms {
            let t = t.as_ref().trim().to_lowercase();
            if t.is_empty() {
                continue;
            }
            set.insert(singularize(&t));
            set.insert(t);
        }
        Self { terms: set }
    }

    /// Lines starting with `#` are comments; blank lines are ignored.
    pub fn load<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut lines = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            lines.push(line.to_string());
        }
        Ok(Self::new(lines))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

pub fn normalize(text: &str, stopwords: &StopWords) -> Vec<String> {
    let lowered = text.to_lowercase();
    let no_entities = ENTITIES.replace_all(&lowered, " ");
    let cleaned = DIGITS.replace_all(&no_entities, "");

    let mut words = String::with_capacity(cleaned.len());
    for word in cleaned.split_whitespace() {
        words.push_str(&collapse_repeats(&singularize_runs(word)));
        words.push(' ');
    }
    let stripped = NON_WORD.replace_all(&words, " ");

    stripped
        .split_whitespace()
        .filter(|t| !stopwords.contains(t))
        .filter(|t| t.chars().count() >= MIN_TOKEN_CHARS && !single_repeated_char(t))
        .map(str::to_string)
        .collect()
}

/// Whether a token satisfies the output contract of [`normalize`].
pub fn is_valid_token(token: &str) -> bool {
    token.chars().count() >= MIN_TOKEN_CHARS
        && !single_repeated_char(token)
        && token.to_lowercase() == token
        && !NON_WORD.is_match(token)
        && !token.chars().any(char::is_whitespace)
}

/// Normalized token sequence of one post, with the metadata the reports need.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub post_id: String,
    pub user_id: String,
    pub created_at: DateTime<FixedOffset>,
    pub tokens: Vec<String>,
}

impl Document {
    /// `post_id<TAB>user_id<TAB>created_at<TAB>space separated tokens`
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.post_id,
            self.user_id,
            self.created_at.to_rfc3339(),
            self.tokens.join(" ")
        )
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        let mut parts = line.splitn(4, '\t');
        let (Some(post_id), Some(user_id), Some(ts), Some(tokens)) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(format!("expected 4 tab-separated fields in {line:?}"));
        };
        let created_at =
            DateTime::parse_from_rfc3339(ts).map_err(|e| format!("bad timestamp {ts:?}: {e}"))?;
        Ok(Self {
            post_id: post_id.to_string(),
            user_id: user_id.to_string(),
            created_at,
            tokens: tokens.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepReport {
    pub input_count: u64,
    pub emptied_count: u64,
    pub emitted_count: u64,
}

impl PrepReport {
    pub fn merge(self, other: PrepReport) -> PrepReport {
        PrepReport {
            input_count: self.input_count + other.input_count,
            emptied_count: self.emptied_count + other.emptied_count,
            emitted_count: self.emitted_count + other.emitted_count,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.input_count == self.emptied_count + self.emitted_count
    }
}

pub fn prep_post(post: &RawPost, stopwords: &StopWords) -> Option<Document> {
    let tokens = normalize(&post.text, stopwords);
    if tokens.is_empty() {
        return None;
    }
    Some(Document {
        post_id: post.id.clone(),
        user_id: post.user_id.clone(),
        created_at: post.created_at,
        tokens,
    })
}

/// Normalize every post, keeping only those with at least one token.
/// Output order follows input order.
pub fn prep_stream<'a, I>(posts: I, stopwords: &StopWords) -> (Vec<Document>, PrepReport)
where
    I: IntoIterator<Item = &'a RawPost>,
{
    let mut report = PrepReport::default();
    let mut docs = Vec::new();
    for post in posts {
        report.input_count += 1;
        match prep_post(post, stopwords) {
            Some(d) => {
                report.emitted_count += 1;
                docs.push(d);
            }
            None => report.emptied_count += 1,
        }
    }
    (docs, report)
}
