//! Revision-history ingestion from the MediaWiki Action API.
//!
//! Histories are fetched oldest-first, following continuation tokens, and
//! cached as one JSON Lines file per article. A cached article never touches
//! the network again.

mod cache;
mod client;
mod eligibility;
mod titles;

use std::fmt;
use std::io;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_path, percent_encode_title, read_cache, write_cache};
pub use client::{
    HttpResponse, MediaWikiClient, RetryPolicy, Transport, TransportError, UreqTransport,
    DEFAULT_API_URL,
};
pub use eligibility::{
    detect_stub, has_stub_template, passes_eligibility, EligibilityCriteria, DEFAULT_MIN_AUTHORS,
    DEFAULT_MIN_EDITS, DEFAULT_STUB_MAX_BYTES,
};
pub use titles::{normalize_title, parse_title_list, read_title_list};

/// Editor key recorded for revisions whose username has been suppressed.
pub const HIDDEN_EDITOR: &str = "<hidden>";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("article not found: {0}")]
    NotFound(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed API response: {0}")]
    Api(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cache I/O error at {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt cache file {path} (line {line}): {message}")]
    CorruptCache {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl IngestError {
    /// Short machine-readable name, used in study reports.
    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::NotFound(_) => "not_found",
            IngestError::Network(_) => "network",
            IngestError::Api(_) => "api",
            IngestError::InvalidArgument(_) => "invalid_argument",
            IngestError::Cache { .. } => "cache",
            IngestError::CorruptCache { .. } => "corrupt_cache",
        }
    }
}

/// One edit event.
///
/// Field order is the on-disk key order of the cache format and must not change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionRecord {
    pub article_key: String,
    pub revision_id: u64,
    #[serde(with = "zulu")]
    pub timestamp: DateTime<Utc>,
    pub editor_key: String,
}

impl RevisionRecord {
    fn sort_key(&self) -> (DateTime<Utc>, u64) {
        (self.timestamp, self.revision_id)
    }
}

/// Sorts by (timestamp, revision_id) and rejects duplicate revision ids.
pub fn sort_revisions(records: &mut [RevisionRecord]) -> Result<(), IngestError> {
    records.sort_by_key(RevisionRecord::sort_key);
    let mut ids: Vec<u64> = records.iter().map(|r| r.revision_id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(IngestError::Api(format!("duplicate revision id {}", w[0])));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QualityClass {
    Featured,
    NonAssessed,
    Other,
}

impl QualityClass {
    /// Display label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            QualityClass::Featured => "Featured",
            QualityClass::NonAssessed => "Non-Assessed",
            QualityClass::Other => "Other",
        }
    }
}

impl fmt::Display for QualityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleMeta {
    pub article_key: String,
    pub quality_class: QualityClass,
    pub revision_count: usize,
    pub distinct_editor_count: usize,
    pub is_stub: bool,
    #[serde(with = "zulu")]
    pub fetched_at: DateTime<Utc>,
}

impl ArticleMeta {
    /// Derives counts from a fetched history. `quality_class` comes from the
    /// title list the article was read from.
    pub fn from_revisions(
        article_key: &str,
        quality_class: QualityClass,
        records: &[RevisionRecord],
        is_stub: bool,
        fetched_at: DateTime<Utc>,
    ) -> Self {
        let mut editors: Vec<&str> = records.iter().map(|r| r.editor_key.as_str()).collect();
        editors.sort_unstable();
        editors.dedup();
        ArticleMeta {
            article_key: article_key.to_string(),
            quality_class,
            revision_count: records.len(),
            distinct_editor_count: editors.len(),
            is_stub,
            fetched_at,
        }
    }
}

/// Fetches an article's complete revision history, serving it from
/// `cache_dir` when a cache entry exists and writing one otherwise.
pub fn fetch_revisions(
    client: &MediaWikiClient,
    article_key: &str,
    cache_dir: &std::path::Path,
) -> Result<Vec<RevisionRecord>, IngestError> {
    let key = normalize_title(article_key);
    if key.is_empty() {
        return Err(IngestError::InvalidArgument("empty article title".into()));
    }
    if let Some(records) = read_cache(cache_dir, &key)? {
        log::debug!("cache hit for {key:?} ({} revisions)", records.len());
        return Ok(records);
    }
    log::info!("fetching revision history of {key:?}");
    let records = client.query_revisions(&key)?;
    write_cache(cache_dir, &key, &records)?;
    Ok(records)
}

/// Fetches several histories with at most `max_in_flight` articles in progress.
/// Results keep the order of `titles`.
pub fn fetch_many(
    client: &MediaWikiClient,
    titles: &[String],
    cache_dir: &std::path::Path,
    max_in_flight: usize,
) -> Vec<Result<Vec<RevisionRecord>, IngestError>> {
    crate::pool::bounded_map(titles, max_in_flight, |t| {
        fetch_revisions(client, t, cache_dir)
    })
}

/// Default number of articles fetched concurrently.
pub const DEFAULT_MAX_IN_FLIGHT: usize = 2;

pub(crate) mod zulu {
    use chrono::{DateTime, NaiveDateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub const FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&t.format(FORMAT))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }

    pub fn parse(s: &str) -> Result<DateTime<Utc>, chrono::ParseError> {
        NaiveDateTime::parse_from_str(s, FORMAT).map(|n| n.and_utc())
    }
}

pub use zulu::parse as parse_timestamp;
