//! Analytics over filtered posts and trained topics.
//!
//! Percentages follow two rounding styles: group shares are shown with two
//! decimals, entity shares as whole numbers. Weekday columns are Monday
//! first. All time bucketing happens in the city's local offset.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate, Timelike};
use thiserror::Error;

use crate::ingest::RawPost;

pub const WEEKDAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("group map does not cover topic ids {missing:?}")]
    IncompleteMap { missing: Vec<usize> },
    #[error("topic id {0} is mapped more than once")]
    DuplicateTopicId(usize),
    #[error("topic id {id} is not in 0..{topics}")]
    UnknownTopicId { id: usize, topics: usize },
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Mapping from raw model topics to human-assigned group labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicGroupMap {
    group_of_topic: Vec<usize>,
    groups: Vec<String>,
}

impl TopicGroupMap {
    /// Read `<topic_id><TAB><label>` lines; blank and `#` lines are skipped.
    /// Every id in `0..topics` must appear exactly once. Groups are ordered by
    /// first appearance.
    pub fn load<R: BufRead>(reader: R, topics: usize) -> Result<Self, ReportError> {
        let mut assigned: Vec<Option<usize>> = vec![None; topics];
        let mut groups: Vec<String> = Vec::new();
        let mut group_index: HashMap<String, usize> = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, label) = line.split_once('\t').ok_or_else(|| ReportError::Format {
                line: n + 1,
                reason: "expected <topic id><TAB><label>".into(),
            })?;
            let id: usize = id.trim().parse().map_err(|_| ReportError::Format {
                line: n + 1,
                reason: format!("bad topic id {id:?}"),
            })?;
            let label = label.trim();
            if label.is_empty() {
                return Err(ReportError::Format {
                    line: n + 1,
                    reason: "empty label".into(),
                });
            }
            let slot = assigned
                .get_mut(id)
                .ok_or(ReportError::UnknownTopicId { id, topics })?;
            if slot.is_some() {
                return Err(ReportError::DuplicateTopicId(id));
            }
            let g = *group_index.entry(label.to_string()).or_insert_with(|| {
                groups.push(label.to_string());
                groups.len() - 1
            });
            *slot = Some(g);
        }
        let missing: Vec<usize> = assigned
            .iter()
            .enumerate()
            .filter(|(_, g)| g.is_none())
            .map(|(i, _)| i)
            .collect();
        if !missing.is_empty() {
            return Err(ReportError::IncompleteMap { missing });
        }
        Ok(Self {
            group_of_topic: assigned.into_iter().flatten().collect(),
            groups,
        })
    }

    pub fn topics(&self) -> usize {
        self.group_of_topic.len()
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn group_of(&self, topic: usize) -> Result<usize, ReportError> {
        self.group_of_topic.get(topic).copied().ok_or(ReportError::UnknownTopicId {
            id: topic,
            topics: self.topics(),
        })
    }

    pub fn label_of(&self, topic: usize) -> Result<&str, ReportError> {
        Ok(&self.groups[self.group_of(topic)?])
    }
}

/// Round `100 * num / den` to `scale` decimal places, half away from zero,
/// returned as an integer in units of `10^-scale` percent.
fn scaled_percent(num: u64, den: u64, scale: u32) -> i64 {
    if den == 0 {
        return 0;
    }
    let factor = 100u128 * 10u128.pow(scale);
    ((2 * factor * num as u128 + den as u128) / (2 * den as u128)) as i64
}

/// Format a value held in hundredths, e.g. `-176` → `-1.76`.
pub fn format_hundredths(h: i64, explicit_plus: bool) -> String {
    let sign = if h < 0 {
        "-"
    } else if explicit_plus && h > 0 {
        "+"
    } else {
        ""
    };
    format!("{sign}{}.{:02}", h.abs() / 100, h.abs() % 100)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCount {
    pub label: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub rows: Vec<GroupCount>,
    pub total_docs: u64,
}

impl GroupReport {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let rows: Vec<GroupCount> = counts
            .into_iter()
            .map(|(label, count)| GroupCount {
                label: label.into(),
                count,
            })
            .collect();
        let total_docs = rows.iter().map(|r| r.count).sum();
        Self { rows, total_docs }
    }

    pub fn percent(&self, row: usize) -> f64 {
        if self.total_docs == 0 {
            0.0
        } else {
            100.0 * self.rows[row].count as f64 / self.total_docs as f64
        }
    }

    /// Share in hundredths of a percent, rounded half up.
    pub fn percent_hundredths(&self, row: usize) -> i64 {
        scaled_percent(self.rows[row].count, self.total_docs, 2)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "tweets", "percent"])?;
        for (i, r) in self.rows.iter().enumerate() {
            w.write_record([
                r.label.clone(),
                r.count.to_string(),
                format_hundredths(self.percent_hundredths(i), false),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self, ReportError> {
        let mut rd = csv::Reader::from_reader(input);
        let mut counts = Vec::new();
        for (n, rec) in rd.records().enumerate() {
            let rec = rec?;
            let count = rec.get(1).and_then(|c| c.parse::<u64>().ok()).ok_or(ReportError::Format {
                line: n + 2,
                reason: "expected group,tweets,percent".into(),
            })?;
            counts.push((rec[0].to_string(), count));
        }
        Ok(Self::from_counts(counts))
    }
}

/// Count documents per group from their dominant raw topics. Every group
/// in the map gets a row, in map order, even when empty.
pub fn aggregate_groups<I>(topics: I, map: &TopicGroupMap) -> Result<GroupReport, ReportError>
where
    I: IntoIterator<Item = usize>,
{
    let mut counts = vec![0u64; map.groups().len()];
    for t in topics {
        counts[map.group_of(t)?] += 1;
    }
    Ok(GroupReport::from_counts(map.groups().iter().cloned().zip(counts)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub a_count: u64,
    pub a_hundredths: i64,
    pub b_count: u64,
    pub b_hundredths: i64,
    /// `a% − b%` computed from the two-decimal percentages, so the printed
    /// columns always agree with each other.
    pub diff_hundredths: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityComparison {
    pub a_name: String,
    pub b_name: String,
    pub rows: Vec<ComparisonRow>,
}

impl CityComparison {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        let (a, b) = (&self.a_name, &self.b_name);
        w.write_record([
            "group".to_string(),
            format!("{a}_tweets"),
            format!("{a}_percent"),
            format!("{b}_tweets"),
            format!("{b}_percent"),
            "diff_percent".to_string(),
        ])?;
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                r.a_count.to_string(),
                format_hundredths(r.a_hundredths, false),
                r.b_count.to_string(),
                format_hundredths(r.b_hundredths, false),
                format_hundredths(r.diff_hundredths, true),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Side-by-side group shares of two cities. Rows follow `a`'s order, then
/// labels only `b` has; a label missing from a city counts as 0.00%.
pub fn compare_cities(a_name: &str, a: &GroupReport, b_name: &str, b: &GroupReport) -> CityComparison {
    let mut labels: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for r in a.rows.iter().chain(&b.rows) {
        if seen.insert(r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    let lookup = |rep: &GroupReport, label: &str| -> (u64, i64) {
        rep.rows
            .iter()
            .position(|r| r.label == label)
            .map(|i| (rep.rows[i].count, rep.percent_hundredths(i)))
            .unwrap_or((0, 0))
    };
    let rows = labels
        .into_iter()
        .map(|label| {
            let (a_count, a_hundredths) = lookup(a, label);
            let (b_count, b_hundredths) = lookup(b, label);
            ComparisonRow {
                label: label.to_string(),
                a_count,
                a_hundredths,
                b_count,
                b_hundredths,
                diff_hundredths: a_hundredths - b_hundredths,
            }
        })
        .collect();
    CityComparison {
        a_name: a_name.to_string(),
        b_name: b_name.to_string(),
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityKind {
    Hashtags,
    Mentions,
    Urls,
    Media,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [EntityKind::Hashtags, EntityKind::Mentions, EntityKind::Urls, EntityKind::Media];

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Hashtags => "hashtags",
            EntityKind::Mentions => "user_mentions",
            EntityKind::Urls => "urls",
            EntityKind::Media => "media",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityStats {
    pub reference_count: u64,
    /// Posts holding at least one entity of each kind, in [`EntityKind::ALL`] order.
    pub totals: [u64; 4],
}

impl EntityStats {
    pub fn from_totals(totals: [u64; 4], reference_count: u64) -> Self {
        Self {
            reference_count,
            totals,
        }
    }

    /// `round(100 · total / reference)`, halves rounded up.
    pub fn percent(&self, kind: EntityKind) -> u64 {
        let i = EntityKind::ALL.iter().position(|k| *k == kind).expect("kind listed");
        scaled_percent(self.totals[i], self.reference_count, 0) as u64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["entity", "total", "percent", "reference"])?;
        for (i, kind) in EntityKind::ALL.iter().enumerate() {
            w.write_record([
                kind.name().to_string(),
                self.totals[i].to_string(),
                self.percent(*kind).to_string(),
                self.reference_count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Posts carrying each entity kind. `reference_count` of `None` uses the
/// number of posts seen.
pub fn entity_stats<'a, I>(posts: I, reference_count: Option<u64>) -> EntityStats
where
    I: IntoIterator<Item = &'a RawPost>,
{
    let mut totals = [0u64; 4];
    let mut seen = 0;
    for p in posts {
        seen += 1;
        let e = p.entities;
        for (slot, n) in totals.iter_mut().zip([e.hashtags, e.mentions, e.urls, e.media]) {
            if n > 0 {
                *slot += 1;
            }
        }
    }
    EntityStats::from_totals(totals, reference_count.unwrap_or(seen))
}

fn local(t: &DateTime<FixedOffset>, offset: FixedOffset) -> DateTime<FixedOffset> {
    t.with_timezone(&offset)
}

/// Per-weekday list of per-date post totals, ready for box plots.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeekdayDistribution {
    pub days: [BTreeMap<NaiveDate, u64>; 7],
}

impl WeekdayDistribution {
    pub fn total(&self) -> u64 {
        self.days.iter().flat_map(|d| d.values()).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["weekday", "date", "tweets"])?;
        for (i, day) in self.days.iter().enumerate() {
            for (date, n) in day {
                w.write_record([WEEKDAYS[i].to_string(), date.to_string(), n.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn weekday_distribution<'a, I>(timestamps: I, offset: FixedOffset) -> WeekdayDistribution
where
    I: IntoIterator<Item = &'a DateTime<FixedOffset>>,
{
    let mut dist = WeekdayDistribution::default();
    for t in timestamps {
        let lt = local(t, offset);
        let wd = lt.weekday().num_days_from_monday() as usize;
        *dist.days[wd].entry(lt.date_naive()).or_insert(0) += 1;
    }
    dist
}

pub fn hourly_distribution<'a, I>(timestamps: I, offset: FixedOffset) -> [u64; 24]
where
    I: IntoIterator<Item = &'a DateTime<FixedOffset>>,
{
    let mut bins = [0u64; 24];
    for t in timestamps {
        bins[local(t, offset).hour() as usize] += 1;
    }
    bins
}

pub fn write_hourly_csv<W: Write>(bins: &[u64; 24], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hour", "tweets"])?;
    for (h, n) in bins.iter().enumerate() {
        w.write_record([h.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Distinct authors and how many of them posted each number of times.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserActivity {
    pub distinct_users: u64,
    /// posts per user → number of users
    pub histogram: BTreeMap<u64, u64>,
}

impl UserActivity {
    /// Includes log10 columns for plotting on log-log axes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tweets_per_user", "users", "log10_tweets", "log10_users"])?;
        for (posts, users) in &self.histogram {
            w.write_record([
                posts.to_string(),
                users.to_string(),
                format!("{:.6}", (*posts as f64).log10()),
                format!("{:.6}", (*users as f64).log10()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn user_activity_histogram<'a, I>(user_ids: I) -> UserActivity
where
    I: IntoIterator<Item = &'a str>,
{
    let mut per_user: HashMap<&str, u64> = HashMap::new();
    for u in user_ids {
        *per_user.entry(u).or_insert(0) += 1;
    }
    let mut histogram = BTreeMap::new();
    for n in per_user.values() {
        *histogram.entry(*n).or_insert(0) += 1;
    }
    UserActivity {
        distinct_users: per_user.len() as u64,
        histogram,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRow {
    pub label: String,
    pub counts: [u64; 7],
    /// Each weekday's share of the row total; all zero when the row is empty.
    pub shares: [f64; 7],
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapTable {
    pub rows: Vec<HeatmapRow>,
}

impl HeatmapTable {
    /// Shares are written with shortest round-trip precision so the file
    /// reproduces the in-memory values exactly.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["group".to_string()];
        header.extend(WEEKDAYS.iter().map(|d| d.to_string()));
        header.push("tweets".into());
        header.push("empty".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.label.clone()];
            rec.extend(r.shares.iter().map(|s| s.to_string()));
            rec.push(r.counts.iter().sum::<u64>().to_string());
            rec.push(r.empty.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Standalone SVG grid; cell shade is the share relative to the row's
    /// largest share.
    pub fn to_svg(&self) -> String {
        const CELL: usize = 48;
        const LABEL_W: usize = 260;
        const HEAD_H: usize = 28;
        let width = LABEL_W + 7 * CELL + 10;
        let height = HEAD_H + self.rows.len() * CELL + 10;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
        );
        for (i, d) in WEEKDAYS.iter().enumerate() {
            let x = LABEL_W + i * CELL + CELL / 2;
            let _ = writeln!(s, r#"<text x="{x}" y="18" text-anchor="middle">{d}</text>"#);
        }
        for (r, row) in self.rows.iter().enumerate() {
            let y = HEAD_H + r * CELL;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                LABEL_W - 8,
                y + CELL / 2 + 4,
                xml_escape(&row.label)
            );
            let max = row.shares.iter().cloned().fold(0.0, f64::max);
            for (c, share) in row.shares.iter().enumerate() {
                let level = if max > 0.0 { share / max } else { 0.0 };
                let shade = (255.0 - level * 200.0).round() as u8;
                let _ = writeln!(
                    s,
                    r##"<rect x="{}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({shade},{shade},255)" stroke="#ffffff"/>"##,
                    LABEL_W + c * CELL
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{:.2}</text>"#,
                    LABEL_W + c * CELL + CELL / 2,
                    y + CELL / 2 + 4,
                    share
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Weekday activity per selected group, each row normalized by its own
/// total. An empty `selected` means every group in map order.
pub fn topic_weekday_heatmap<'a, I>(
    assignments: I,
    map: &TopicGroupMap,
    selected: &[String],
    offset: FixedOffset,
) -> Result<HeatmapTable, ReportError>
where
    I: IntoIterator<Item = (usize, &'a DateTime<FixedOffset>)>,
{
    let chosen: Vec<usize> = if selected.is_empty() {
        (0..map.groups().len()).collect()
    } else {
        selected
            .iter()
            .map(|label| {
                map.groups()
                    .iter()
                    .position(|g| g == label)
                    .ok_or_else(|| ReportError::UnknownGroup(label.clone()))
            })
            .collect::<Result<_, _>>()?
    };
    let mut counts = vec![[0u64; 7]; map.groups().len()];
    for (topic, t) in assignments {
        let g = map.group_of(topic)?;
        let wd = local(t, offset).weekday().num_days_from_monday() as usize;
        counts[g][wd] += 1;
    }
    let rows = chosen
        .into_iter()
        .map(|g| {
            let c = counts[g];
            let total: u64 = c.iter().sum();
            let shares = if total == 0 {
                [0.0; 7]
            } else {
                c.map(|x| x as f64 / total as f64)
            };
            HeatmapRow {
                label: map.groups()[g].clone(),
                counts: c,
                shares,
                empty: total == 0,
            }
        })
        .collect();
    Ok(HeatmapTable { rows })
}
