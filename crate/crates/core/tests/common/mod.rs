//! Shared fixtures for the integration tests.
#![allow(dead_code)]

pub mod dd;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use wikipersona::ingest::{
    write_cache, HttpResponse, MediaWikiClient, RetryPolicy, RevisionRecord, Transport,
    TransportError,
};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Expands per-quarter edit counts into a revision stream. Quarter 0 starts at
/// `start_year` Q1; edits are spread over the first days of their quarter.
pub fn series_revisions(
    article: &str,
    start_year: i32,
    series: &[(&str, &[u32])],
) -> Vec<RevisionRecord> {
    let mut events = Vec::new();
    for (e, (editor, counts)) in series.iter().enumerate() {
        for (q, &c) in counts.iter().enumerate() {
            let year = start_year + (q / 4) as i32;
            let month = 1 + 3 * (q % 4) as u32;
            let base = Utc.with_ymd_and_hms(year, month, 1, 0, 0, 0).unwrap();
            for i in 0..c {
                let ts =
                    base + Duration::hours(i64::from(i) * 7 + 1) + Duration::minutes(e as i64 * 3);
                events.push((ts, editor.to_string()));
            }
        }
    }
    events.sort();
    events
        .into_iter()
        .enumerate()
        .map(|(i, (timestamp, editor_key))| RevisionRecord {
            article_key: article.to_string(),
            revision_id: 10_000 + i as u64,
            timestamp,
            editor_key,
        })
        .collect()
}

pub const BOSTON_AJD: [u32; 12] = [9, 8, 7, 6, 5, 4, 3, 0, 0, 0, 0, 0];
pub const BOSTON_LOODOG: [u32; 12] = [2, 3, 3, 2, 2, 1, 1, 1, 0, 0, 0, 0];
pub const BOSTON_ATLANT: [u32; 12] = [0, 0, 0, 0, 0, 0, 0, 0, 0, 12, 0, 0];

/// Long-lived dominant editor, a steady contributor tracking them, and a
/// one-quarter burst.
pub fn boston_like() -> Vec<RevisionRecord> {
    series_revisions(
        "Boston-like",
        2004,
        &[
            ("Ajd", &BOSTON_AJD),
            ("Loodog", &BOSTON_LOODOG),
            ("Atlant", &BOSTON_ATLANT),
        ],
    )
}

/// Two sustained editors alternating quarter by quarter.
pub fn seesaw() -> Vec<RevisionRecord> {
    series_revisions(
        "Seesaw",
        2006,
        &[
            ("Wax", &[1, 3, 1, 3, 1, 3, 1, 3]),
            ("Wane", &[3, 1, 3, 1, 3, 1, 3, 1]),
        ],
    )
}

pub fn write_fixture_cache(dir: &Path, records: &[RevisionRecord]) {
    write_cache(dir, &records[0].article_key, records).unwrap();
}

fn ok(body: String) -> Result<HttpResponse, TransportError> {
    Ok(HttpResponse { status: 200, body })
}

fn param<'a>(params: &'a [(String, String)], key: &str) -> Option<&'a str> {
    params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}

/// Serves recorded API responses keyed by the `rvcontinue` parameter
/// (`None` for the first request), or by title for missing pages.
pub struct Replay {
    pages: HashMap<Option<String>, String>,
    missing: HashMap<String, String>,
    pub calls: Arc<AtomicUsize>,
}

impl Replay {
    pub fn continuation_fixture() -> Self {
        let dir = fixture_dir().join("api");
        let read = |n: u32| {
            std::fs::read_to_string(dir.join(format!("continuation_page{n}.json"))).unwrap()
        };
        let token = |body: &str| -> String {
            let v: serde_json::Value = serde_json::from_str(body).unwrap();
            v["continue"]["rvcontinue"].as_str().unwrap().to_string()
        };
        let (p1, p2, p3) = (read(1), read(2), read(3));
        let mut pages = HashMap::new();
        pages.insert(Some(token(&p1)), p2.clone());
        pages.insert(Some(token(&p2)), p3);
        pages.insert(None, p1);
        let missing = HashMap::from([(
            "Zzqx no such page".to_string(),
            std::fs::read_to_string(dir.join("missing_page.json")).unwrap(),
        )]);
        Replay {
            pages,
            missing,
            calls: Arc::new(AtomicUsize::new(0)),
        }
    }
}

impl Transport for Replay {
    fn get(&self, params: &[(String, String)]) -> Result<HttpResponse, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let title = param(params, "titles").unwrap_or_default();
        if let Some(body) = self.missing.get(title) {
            return ok(body.clone());
        }
        assert_eq!(title, "Continuation fixture", "unexpected title");
        let key = param(params, "rvcontinue").map(str::to_string);
        match self.pages.get(&key) {
            Some(body) => ok(body.clone()),
            None => Ok(HttpResponse {
                status: 400,
                body: String::new(),
            }),
        }
    }
}

/// Random-article endpoint over a pool of `pool_size` titles. Draws repeat,
/// so the client has to dedupe and keep asking.
pub struct RandomPool {
    pool_size: usize,
    state: std::sync::Mutex<u64>,
    pub calls: Arc<AtomicUsize>,
}

impl RandomPool {
    pub fn new(pool_size: usize) -> Self {
        RandomPool {
            pool_size,
            state: std::sync::Mutex::new(0x9e37_79b9_7f4a_7c15),
            calls: Arc::new(AtomicUsize::new(0)),
        }
    }
}

impl Transport for RandomPool {
    fn get(&self, params: &[(String, String)]) -> Result<HttpResponse, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        assert_eq!(param(params, "list"), Some("random"));
        assert_eq!(param(params, "rnnamespace"), Some("0"));
        let limit: usize = param(params, "rnlimit").unwrap().parse().unwrap();
        let mut s = self.state.lock().unwrap();
        let items: Vec<serde_json::Value> = (0..limit)
            .map(|_| {
                // xorshift64
                *s ^= *s << 13;
                *s ^= *s >> 7;
                *s ^= *s << 17;
                let k = (*s % self.pool_size as u64) as usize;
                serde_json::json!({"id": k, "ns": 0, "title": format!("Random article {k}")})
            })
            .collect();
        let body = serde_json::json!({
            "batchcomplete": true,
            "continue": {"rncontinue": format!("0.{}|0", *s % 1000), "continue": "-||"},
            "query": {"random": items}
        });
        ok(body.to_string())
    }
}

/// Fails every request; counts how often it was asked.
pub struct Offline {
    pub calls: Arc<AtomicUsize>,
}

impl Offline {
    pub fn new() -> Self {
        Offline {
            calls: Arc::new(AtomicUsize::new(0)),
        }
    }
}

impl Transport for Offline {
    fn get(&self, _: &[(String, String)]) -> Result<HttpResponse, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(TransportError("offline".into()))
    }
}

pub fn no_retry() -> RetryPolicy {
    RetryPolicy {
        retries: 0,
        base_delay: std::time::Duration::ZERO,
    }
}

/// Client that fails fast and reports how many requests it saw.
pub fn offline_client() -> (MediaWikiClient, Arc<AtomicUsize>) {
    let t = Offline::new();
    let calls = t.calls.clone();
    (
        MediaWikiClient::new(Box::new(t)).with_retry(no_retry()),
        calls,
    )
}
