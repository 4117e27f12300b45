use std::collections::{BTreeMap, HashSet};
use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde_json::Value;
use thiserror::Error;

use super::{
    eligibility::detect_stub, parse_timestamp, sort_revisions, ArticleMeta, IngestError,
    QualityClass, RevisionRecord, HIDDEN_EDITOR,
};

pub const DEFAULT_API_URL: &str = "https://en.wikipedia.org/w/api.php";

const USER_AGENT: &str = concat!(
    "wikipersona/",
    env!("CARGO_PKG_VERSION"),
    " (editor persona research tool)"
);

/// Upper bound on list=random round trips for one sampling call.
const MAX_RANDOM_ROUNDS: usize = 50;
const RANDOM_LIMIT_MAX: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// One GET against the API endpoint with the given query parameters.
pub trait Transport: Send + Sync {
    fn get(&self, params: &[(String, String)]) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
    api_url: String,
}

impl UreqTransport {
    pub fn new(api_url: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        UreqTransport {
            agent,
            api_url: api_url.into(),
        }
    }
}

impl Transport for UreqTransport {
    fn get(&self, params: &[(String, String)]) -> Result<HttpResponse, TransportError> {
        let mut resp = self
            .agent
            .get(&self.api_url)
            .header("User-Agent", USER_AGENT)
            .query_pairs(params.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .call()
            .map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Retries on transport failures, HTTP 429 and HTTP 5xx with exponential
/// backoff: `base_delay`, `2 * base_delay`, `4 * base_delay`, ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatestRevision {
    pub size: u64,
    pub content: String,
}

pub struct MediaWikiClient {
    transport: Box<dyn Transport>,
    retry: RetryPolicy,
    page_size: Option<u32>,
}

enum Attempt {
    Done(Value),
    Retry(String),
}

impl MediaWikiClient {
    pub fn new(transport: Box<dyn Transport>) -> Self {
        MediaWikiClient {
            transport,
            retry: RetryPolicy::default(),
            page_size: None,
        }
    }

    pub fn from_url(api_url: &str) -> Self {
        Self::new(Box::new(UreqTransport::new(api_url)))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Revisions per continuation page; `None` asks the server for its maximum.
    pub fn with_page_size(mut self, page_size: Option<u32>) -> Self {
        self.page_size = page_size;
        self
    }

    fn attempt(&self, params: &[(String, String)]) -> Result<Attempt, IngestError> {
        let resp = match self.transport.get(params) {
            Ok(r) => r,
            Err(e) => return Ok(Attempt::Retry(format!("transport: {e}"))),
        };
        if resp.status == 429 || resp.status >= 500 {
            return Ok(Attempt::Retry(format!("HTTP {}", resp.status)));
        }
        if !(200..300).contains(&resp.status) {
            return Err(IngestError::Api(format!("HTTP {}", resp.status)));
        }
        let v: Value = serde_json::from_str(&resp.body)
            .map_err(|e| IngestError::Api(format!("invalid JSON: {e}")))?;
        if let Some(err) = v.get("error") {
            let code = err.get("code").and_then(Value::as_str).unwrap_or("unknown");
            let info = err.get("info").and_then(Value::as_str).unwrap_or("");
            return match code {
                "maxlag" | "ratelimited" => Ok(Attempt::Retry(format!("{code}: {info}"))),
                "missingtitle" => Err(IngestError::NotFound(info.to_string())),
                _ => Err(IngestError::Api(format!("{code}: {info}"))),
            };
        }
        Ok(Attempt::Done(v))
    }

    fn request(&self, params: &[(String, String)]) -> Result<Value, IngestError> {
        let mut attempt = 0;
        loop {
            match self.attempt(params)? {
                Attempt::Done(v) => return Ok(v),
                Attempt::Retry(why) if attempt < self.retry.retries => {
                    let delay = self.retry.delay(attempt);
                    log::warn!("request failed ({why}); retrying in {delay:?}");
                    thread::sleep(delay);
                    attempt += 1;
                }
                Attempt::Retry(why) => {
                    return Err(IngestError::Network(format!(
                        "{why} (after {} retries)",
                        self.retry.retries
                    )))
                }
            }
        }
    }

    /// Complete oldest-first history of `article_key`, all continuation pages
    /// concatenated and sorted by (timestamp, revision_id).
    pub fn query_revisions(&self, article_key: &str) -> Result<Vec<RevisionRecord>, IngestError> {
        let limit = self
            .page_size
            .map_or_else(|| "max".to_string(), |n| n.to_string());
        let base = query_params(&[
            ("prop", "revisions"),
            ("titles", article_key),
            ("rvprop", "ids|timestamp|user"),
            ("rvlimit", &limit),
            ("rvdir", "newer"),
        ]);
        let mut records = Vec::new();
        let mut cont: BTreeMap<String, String> = BTreeMap::new();
        loop {
            let mut params = base.clone();
            params.extend(cont.iter().map(|(k, v)| (k.clone(), v.clone())));
            let v = self.request(&params)?;
            let page = single_page(&v, article_key)?;
            if let Some(revs) = page.get("revisions") {
                let revs = revs
                    .as_array()
                    .ok_or_else(|| IngestError::Api("revisions is not an array".into()))?;
                for rev in revs {
                    records.push(parse_revision(article_key, rev)?);
                }
            }
            match continuation(&v)? {
                Some(next) if next == cont => {
                    return Err(IngestError::Api(
                        "continuation token did not advance".into(),
                    ))
                }
                Some(next) => cont = next,
                None => break,
            }
        }
        if records.is_empty() {
            return Err(IngestError::Api(format!(
                "{article_key:?} has no revisions"
            )));
        }
        sort_revisions(&mut records)?;
        Ok(records)
    }

    /// `n` distinct main-namespace titles from the random-article facility.
    pub fn random_titles(&self, n: usize) -> Result<Vec<String>, IngestError> {
        if n == 0 {
            return Err(IngestError::InvalidArgument(
                "random sample size must be at least 1".into(),
            ));
        }
        let mut seen = HashSet::new();
        let mut titles = Vec::with_capacity(n);
        let mut cont: BTreeMap<String, String> = BTreeMap::new();
        for _ in 0..MAX_RANDOM_ROUNDS {
            let want = (n - titles.len()).min(RANDOM_LIMIT_MAX).to_string();
            let mut params =
                query_params(&[("list", "random"), ("rnnamespace", "0"), ("rnlimit", &want)]);
            params.extend(cont.iter().map(|(k, v)| (k.clone(), v.clone())));
            let v = self.request(&params)?;
            let items = v
                .pointer("/query/random")
                .and_then(Value::as_array)
                .ok_or_else(|| IngestError::Api("missing query.random".into()))?;
            for item in items {
                let title = item
                    .get("title")
                    .and_then(Value::as_str)
                    .ok_or_else(|| IngestError::Api("random entry without title".into()))?;
                if titles.len() < n && seen.insert(title.to_string()) {
                    titles.push(title.to_string());
                }
            }
            if titles.len() == n {
                return Ok(titles);
            }
            cont = continuation(&v)?.unwrap_or_default();
        }
        Err(IngestError::Api(format!(
            "random sampler returned only {} distinct titles after {MAX_RANDOM_ROUNDS} requests",
            titles.len()
        )))
    }

    /// Size and wikitext of the newest revision, used for stub detection.
    pub fn latest_revision(&self, article_key: &str) -> Result<LatestRevision, IngestError> {
        let params = query_params(&[
            ("prop", "revisions"),
            ("titles", article_key),
            ("rvprop", "size|content"),
            ("rvslots", "main"),
            ("rvlimit", "1"),
        ]);
        let v = self.request(&params)?;
        let page = single_page(&v, article_key)?;
        let rev = page
            .pointer("/revisions/0")
            .ok_or_else(|| IngestError::Api(format!("{article_key:?} has no revisions")))?;
        let size = rev
            .get("size")
            .and_then(Value::as_u64)
            .ok_or_else(|| IngestError::Api("revision without size".into()))?;
        let content = rev
            .pointer("/slots/main/content")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        Ok(LatestRevision { size, content })
    }

    /// Builds the metadata needed by the eligibility filter.
    pub fn article_meta(
        &self,
        article_key: &str,
        quality_class: QualityClass,
        records: &[RevisionRecord],
        stub_max_bytes: u64,
        fetched_at: DateTime<Utc>,
    ) -> Result<ArticleMeta, IngestError> {
        let latest = self.latest_revision(article_key)?;
        let is_stub = detect_stub(&latest.content, latest.size, stub_max_bytes);
        Ok(ArticleMeta::from_revisions(
            article_key,
            quality_class,
            records,
            is_stub,
            fetched_at,
        ))
    }
}

fn query_params(extra: &[(&str, &str)]) -> Vec<(String, String)> {
    [
        ("action", "query"),
        ("format", "json"),
        ("formatversion", "2"),
    ]
    .iter()
    .chain(extra)
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

fn single_page<'a>(v: &'a Value, article_key: &str) -> Result<&'a Value, IngestError> {
    let page = v
        .pointer("/query/pages/0")
        .ok_or_else(|| IngestError::Api("missing query.pages".into()))?;
    let flag = |name: &str| page.get(name).and_then(Value::as_bool).unwrap_or(false);
    if flag("missing") || flag("invalid") {
        return Err(IngestError::NotFound(article_key.to_string()));
    }
    Ok(page)
}

fn continuation(v: &Value) -> Result<Option<BTreeMap<String, String>>, IngestError> {
    let Some(cont) = v.get("continue") else {
        return Ok(None);
    };
    let obj = cont
        .as_object()
        .ok_or_else(|| IngestError::Api("continue is not an object".into()))?;
    obj.iter()
        .map(|(k, val)| match val {
            Value::String(s) => Ok((k.clone(), s.clone())),
            Value::Number(n) => Ok((k.clone(), n.to_string())),
            _ => Err(IngestError::Api(format!("bad continuation value for {k}"))),
        })
        .collect::<Result<_, _>>()
        .map(Some)
}

fn parse_revision(article_key: &str, rev: &Value) -> Result<RevisionRecord, IngestError> {
    let revision_id = rev
        .get("revid")
        .and_then(Value::as_u64)
        .filter(|&id| id > 0)
        .ok_or_else(|| IngestError::Api("revision without positive revid".into()))?;
    let ts = rev
        .get("timestamp")
        .and_then(Value::as_str)
        .ok_or_else(|| IngestError::Api(format!("revision {revision_id} without timestamp")))?;
    let timestamp = parse_timestamp(ts)
        .map_err(|e| IngestError::Api(format!("revision {revision_id} timestamp {ts:?}: {e}")))?;
    let hidden = rev
        .get("userhidden")
        .and_then(Value::as_bool)
        .unwrap_or(false);
    let editor_key = match rev.get("user").and_then(Value::as_str) {
        _ if hidden => HIDDEN_EDITOR.to_string(),
        Some(u) if !u.is_empty() => u.to_string(),
        Some(_) => HIDDEN_EDITOR.to_string(),
        None => {
            return Err(IngestError::Api(format!(
                "revision {revision_id} without user"
            )))
        }
    };
    Ok(RevisionRecord {
        article_key: article_key.to_string(),
        revision_id,
        timestamp,
        editor_key,
    })
}
