//! Quarterly per-editor edit series, top-editor selection, derivative
//! series and pairwise Pearson correlation.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{QualityClass, RevisionRecord, HIDDEN_EDITOR};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimelineError {
    #[error("no revisions to bucket")]
    EmptyInput,
    #[error("revisions belong to more than one article ({0:?} and {1:?})")]
    MixedArticles(String, String),
    #[error("correlation needs at least 2 editors, got {0}")]
    TooFewEditors(usize),
    #[error("derivative correlation needs series of length >= 2, got {0}")]
    TooShort(usize),
}

/// Calendar quarter encoded as `(year - 2000) * 4 + (quarter - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuarterIndex(pub i32);

impl QuarterIndex {
    pub fn from_timestamp(ts: &DateTime<Utc>) -> Self {
        let quarter = (ts.month0() / 3) as i32;
        QuarterIndex((ts.year() - 2000) * 4 + quarter)
    }

    pub fn year(self) -> i32 {
        2000 + self.0.div_euclid(4)
    }

    /// 1 to 4.
    pub fn quarter(self) -> u32 {
        self.0.rem_euclid(4) as u32 + 1
    }

    pub fn offset(self, quarters: usize) -> Self {
        QuarterIndex(self.0 + quarters as i32)
    }
}

impl fmt::Display for QuarterIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Q{}", self.year(), self.quarter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditorSeries {
    pub editor_key: String,
    pub counts: Vec<u32>,
    pub total: u32,
}

impl EditorSeries {
    pub fn new(editor_key: impl Into<String>, counts: Vec<u32>) -> Self {
        let total = counts.iter().sum();
        EditorSeries {
            editor_key: editor_key.into(),
            counts,
            total,
        }
    }

    /// Offset of the first quarter with at least one edit.
    pub fn first_active(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c > 0)
    }
}

/// Per-editor quarterly counts for one article, before top-editor selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarterlyBuckets {
    pub article_key: String,
    pub start_quarter: QuarterIndex,
    pub span: usize,
    pub revision_count: usize,
    pub series: BTreeMap<String, EditorSeries>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleTimeline {
    pub article_key: String,
    pub quality_class: QualityClass,
    pub start_quarter: QuarterIndex,
    pub span: usize,
    pub revision_count: usize,
    pub series: Vec<EditorSeries>,
}

impl ArticleTimeline {
    pub fn editor_keys(&self) -> Vec<&str> {
        self.series.iter().map(|s| s.editor_key.as_str()).collect()
    }

    pub fn quarters(&self) -> impl Iterator<Item = QuarterIndex> + '_ {
        (0..self.span).map(|k| self.start_quarter.offset(k))
    }
}

/// Buckets revisions by editor and UTC calendar quarter. The span runs from
/// the quarter of the earliest revision to that of the latest.
pub fn bucket_by_quarter(revisions: &[RevisionRecord]) -> Result<QuarterlyBuckets, TimelineError> {
    let first = revisions.first().ok_or(TimelineError::EmptyInput)?;
    if let Some(other) = revisions
        .iter()
        .find(|r| r.article_key != first.article_key)
    {
        return Err(TimelineError::MixedArticles(
            first.article_key.clone(),
            other.article_key.clone(),
        ));
    }
    let quarters: Vec<QuarterIndex> = revisions
        .iter()
        .map(|r| QuarterIndex::from_timestamp(&r.timestamp))
        .collect();
    let start = *quarters.iter().min().expect("non-empty");
    let end = *quarters.iter().max().expect("non-empty");
    let span = (end.0 - start.0) as usize + 1;

    let mut counts: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for (rev, q) in revisions.iter().zip(&quarters) {
        counts
            .entry(rev.editor_key.as_str())
            .or_insert_with(|| vec![0; span])[(q.0 - start.0) as usize] += 1;
    }
    Ok(QuarterlyBuckets {
        article_key: first.article_key.clone(),
        start_quarter: start,
        span,
        revision_count: revisions.len(),
        series: counts
            .into_iter()
            .map(|(k, c)| (k.to_string(), EditorSeries::new(k, c)))
            .collect(),
    })
}

/// Keeps the `top_n` editors by total edits. Ties go to the earlier first
/// active quarter, then to the lexicographically smaller key. Suppressed
/// usernames never qualify.
pub fn select_top_editors(
    buckets: &QuarterlyBuckets,
    top_n: usize,
    quality_class: QualityClass,
) -> ArticleTimeline {
    let mut ranked: Vec<&EditorSeries> = buckets
        .series
        .values()
        .filter(|s| s.editor_key != HIDDEN_EDITOR && s.total > 0)
        .collect();
    ranked.sort_by_key(|s| (Reverse(s.total), s.first_active(), s.editor_key.as_str()));
    ranked.truncate(top_n);
    ArticleTimeline {
        article_key: buckets.article_key.clone(),
        quality_class,
        start_quarter: buckets.start_quarter,
        span: buckets.span,
        revision_count: buckets.revision_count,
        series: ranked.into_iter().cloned().collect(),
    }
}

/// First differences: `out[k] = counts[k + 1] - counts[k]`.
pub fn derivative_series(counts: &[u32]) -> Vec<i64> {
    counts
        .windows(2)
        .map(|w| i64::from(w[1]) - i64::from(w[0]))
        .collect()
}

/// Pearson correlation; `None` when either series is constant or the
/// lengths differ or are below 2.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || is_constant(x) || is_constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMode {
    /// Raw quarterly edit counts.
    #[default]
    Counts,
    /// Quarter-to-quarter differences.
    Derivatives,
}

impl FromStr for CorrelationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "counts" => Ok(CorrelationMode::Counts),
            "derivatives" => Ok(CorrelationMode::Derivatives),
            _ => Err(format!(
                "unknown correlation mode {s:?} (counts|derivatives)"
            )),
        }
    }
}

impl fmt::Display for CorrelationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationMode::Counts => "counts",
            CorrelationMode::Derivatives => "derivatives",
        })
    }
}

/// Symmetric matrix of pairwise correlations; `None` marks an undefined entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub editor_keys: Vec<String>,
    pub entries: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i][j]
    }

    pub fn index_of(&self, editor_key: &str) -> Option<usize> {
        self.editor_keys.iter().position(|k| k == editor_key)
    }
}

/// Pairwise correlation of the timeline's editors.
pub fn correlation_matrix(
    timeline: &ArticleTimeline,
    mode: CorrelationMode,
) -> Result<CorrelationMatrix, TimelineError> {
    if timeline.series.len() < 2 {
        return Err(TimelineError::TooFewEditors(timeline.series.len()));
    }
    if mode == CorrelationMode::Derivatives && timeline.span < 2 {
        return Err(TimelineError::TooShort(timeline.span));
    }
    Ok(correlation_matrix_lenient(timeline, mode))
}

/// Like [`correlation_matrix`] but total: a single editor yields a 1x1 matrix
/// and too-short derivative series yield undefined entries.
pub fn correlation_matrix_lenient(
    timeline: &ArticleTimeline,
    mode: CorrelationMode,
) -> CorrelationMatrix {
    let rows: Vec<Vec<f64>> = timeline
        .series
        .iter()
        .map(|s| match mode {
            CorrelationMode::Counts => s.counts.iter().map(|&c| f64::from(c)).collect(),
            CorrelationMode::Derivatives => derivative_series(&s.counts)
                .into_iter()
                .map(|d| d as f64)
                .collect(),
        })
        .collect();
    let n = rows.len();
    let mut entries = vec![vec![None; n]; n];
    for i in 0..n {
        let defined = rows[i].len() >= 2 && !is_constant(&rows[i]);
        entries[i][i] = defined.then_some(1.0);
        for j in i + 1..n {
            let r = pearson(&rows[i], &rows[j]);
            entries[i][j] = r;
            entries[j][i] = r;
        }
    }
    CorrelationMatrix {
        editor_keys: timeline
            .series
            .iter()
            .map(|s| s.editor_key.clone())
            .collect(),
        entries,
    }
}
