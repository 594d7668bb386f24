//! Pipeline configuration file (TOML).
//!
//! ```toml
//! [ingest]
//! inputs = ["records.jsonl.gz"]
//!
//! [filter]
//! language = "pt"
//!
//! [[cities]]
//! name = "rio"
//! sw_lat = -23.08
//! sw_lon = -43.80
//! ne_lat = -22.74
//! ne_lon = -43.10
//! utc_offset = "-03:00"
//!
//! [textprep]
//! stopwords = "stopwords_pt.txt"
//!
//! [vocab]
//! min_count = 10
//! max_df = 0.4
//! cap = 10000
//!
//! [lda]
//! topics = 50
//! iterations = 20
//! beta = 0.01
//! seed = 42
//!
//! [reporting]
//! group_map = "groups_50.tsv"
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::FixedOffset;
use serde::{Deserialize, Serialize};

use crate::geofilter::GeoBox;
use crate::lda::{default_alpha, LdaConfig};
use crate::vocab::VocabParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub ingest: IngestSection,
    #[serde(default)]
    pub filter: FilterSection,
    pub cities: Vec<CityConfig>,
    pub textprep: TextprepSection,
    #[serde(default)]
    pub vocab: VocabSection,
    #[serde(default)]
    pub lda: LdaSection,
    #[serde(default)]
    pub reporting: ReportingSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub language: String,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self { language: "pt".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityConfig {
    pub name: String,
    #[serde(flatten)]
    pub bbox: GeoBox,
    /// Local UTC offset, `+HH:MM` / `-HH:MM`.
    #[serde(default = "default_offset")]
    pub utc_offset: String,
    /// Denominator for entity percentages; defaults to the filtered post count.
    #[serde(default)]
    pub entity_reference: Option<u64>,
    /// Topic group map for this city's model; defaults to `reporting.group_map`.
    /// Each city trains its own model, so raw topic ids differ between cities.
    #[serde(default)]
    pub group_map: Option<PathBuf>,
}

fn default_offset() -> String {
    "-03:00".into()
}

impl CityConfig {
    pub fn offset(&self) -> Result<FixedOffset, String> {
        parse_offset(&self.utc_offset)
    }
}

pub fn parse_offset(s: &str) -> Result<FixedOffset, String> {
    let bad = || format!("bad UTC offset {s:?}, expected +HH:MM or -HH:MM");
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'+') => (1, &s[1..]),
        Some(b'-') => (-1, &s[1..]),
        _ => return Err(bad()),
    };
    let (h, m) = rest.split_once(':').ok_or_else(bad)?;
    let h: i32 = h.parse().map_err(|_| bad())?;
    let m: i32 = m.parse().map_err(|_| bad())?;
    if !(0..=23).contains(&h) || !(0..=59).contains(&m) {
        return Err(bad());
    }
    FixedOffset::east_opt(sign * (h * 3600 + m * 60)).ok_or_else(bad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextprepSection {
    pub stopwords: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VocabSection {
    pub min_count: u64,
    pub max_df: f64,
    pub cap: usize,
}

impl Default for VocabSection {
    fn default() -> Self {
        let p = VocabParams::default();
        Self {
            min_count: p.min_count,
            max_df: p.max_df,
            cap: p.cap,
        }
    }
}

impl VocabSection {
    pub fn params(&self) -> VocabParams {
        VocabParams {
            min_count: self.min_count,
            max_df: self.max_df,
            cap: self.cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaSection {
    pub topics: usize,
    pub iterations: usize,
    /// Defaults to 50 / topics.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub beta: f64,
    pub seed: u64,
    /// Words exported per topic.
    #[serde(default = "default_top_words")]
    pub top_words: usize,
}

fn default_top_words() -> usize {
    50
}

impl Default for LdaSection {
    fn default() -> Self {
        let c = LdaConfig::new(50);
        Self {
            topics: c.topics,
            iterations: c.iterations,
            alpha: None,
            beta: c.beta,
            seed: c.seed,
            top_words: default_top_words(),
        }
    }
}

impl LdaSection {
    pub fn config(&self) -> LdaConfig {
        LdaConfig {
            topics: self.topics,
            iterations: self.iterations,
            alpha: self.alpha.unwrap_or_else(|| default_alpha(self.topics)),
            beta: self.beta,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportingSection {
    /// Shared topic group map; may be omitted when every city names its own.
    #[serde(default)]
    pub group_map: Option<PathBuf>,
    /// Groups shown in the weekday heatmap; empty means all.
    #[serde(default)]
    pub heatmap_groups: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.ingest.inputs.iter_mut().for_each(fix);
        fix(&mut self.textprep.stopwords);
        if let Some(p) = &mut self.reporting.group_map {
            fix(p);
        }
        for c in &mut self.cities {
            if let Some(p) = &mut c.group_map {
                fix(p);
            }
        }
        fix(&mut self.output.dir);
    }

    /// Ranges, city boxes, offsets, and existence of every referenced input file.
    pub fn validate(&self) -> Result<(), String> {
        if self.cities.is_empty() {
            return Err("at least one [[cities]] entry is required".into());
        }
        for (i, c) in self.cities.iter().enumerate() {
            if c.name.is_empty() || c.name.contains(['/', '\\']) {
                return Err(format!("city name {:?} is not usable as a directory name", c.name));
            }
            if self.cities[..i].iter().any(|o| o.name == c.name) {
                return Err(format!("city {:?} defined twice", c.name));
            }
            c.offset().map_err(|e| format!("city {}: {e}", c.name))?;
            if c.group_map.is_none() && self.reporting.group_map.is_none() {
                return Err(format!("city {}: no group map (set reporting.group_map or cities.group_map)", c.name));
            }
        }
        if self.filter.language.is_empty() {
            return Err("filter.language must not be empty".into());
        }
        self.vocab.params().validate().map_err(|e| e.to_string())?;
        self.lda.config().validate().map_err(|e| e.to_string())?;
        if self.lda.top_words < 1 {
            return Err("lda.top_words must be at least 1".into());
        }
        for p in self
            .ingest
            .inputs
            .iter()
            .chain([&self.textprep.stopwords])
            .chain(&self.reporting.group_map)
            .chain(self.cities.iter().filter_map(|c| c.group_map.as_ref()))
        {
            if !p.is_file() {
                return Err(format!("{}: file not found", p.display()));
            }
        }
        Ok(())
    }

    /// The city's own map, else the shared one. Validation guarantees one exists.
    pub fn group_map_for<'a>(&'a self, city: &'a CityConfig) -> &'a Path {
        city.group_map
            .as_deref()
            .or(self.reporting.group_map.as_deref())
            .expect("validated config names a group map for every city")
    }

    pub fn city(&self, name: &str) -> Result<&CityConfig, String> {
        self.cities.iter().find(|c| c.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.cities.iter().map(|c| c.name.as_str()).collect();
            format!("unknown city {name:?} (configured: {})", known.join(", "))
        })
    }
}
