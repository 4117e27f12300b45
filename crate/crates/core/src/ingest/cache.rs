use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use super::{IngestError, RevisionRecord};

const TITLE_SET: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.');

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// File-name-safe form of a title. Also used for chart and persona file names.
pub fn percent_encode_title(title: &str) -> String {
    utf8_percent_encode(title, TITLE_SET).to_string()
}

pub fn cache_path(cache_dir: &Path, article_key: &str) -> PathBuf {
    cache_dir.join(format!("{}.jsonl", percent_encode_title(article_key)))
}

/// Reads a cached history. `Ok(None)` means no cache entry exists.
pub fn read_cache(
    cache_dir: &Path,
    article_key: &str,
) -> Result<Option<Vec<RevisionRecord>>, IngestError> {
    let path = cache_path(cache_dir, article_key);
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
        Err(source) => return Err(IngestError::Cache { path, source }),
    };
    let corrupt = |line: usize, message: String| IngestError::CorruptCache {
        path: path.clone(),
        line,
        message,
    };
    let mut records: Vec<RevisionRecord> = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| IngestError::Cache {
            path: path.clone(),
            source,
        })?;
        let rec: RevisionRecord =
            serde_json::from_str(&line).map_err(|e| corrupt(idx + 1, e.to_string()))?;
        if rec.article_key != article_key {
            return Err(corrupt(
                idx + 1,
                format!("record belongs to {:?}", rec.article_key),
            ));
        }
        if let Some(prev) = records.last() {
            if (prev.timestamp, prev.revision_id) >= (rec.timestamp, rec.revision_id) {
                return Err(corrupt(idx + 1, "records out of order".into()));
            }
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(corrupt(0, "empty cache file".into()));
    }
    Ok(Some(records))
}

/// Writes the cache entry atomically (temporary file, then rename).
pub fn write_cache(
    cache_dir: &Path,
    article_key: &str,
    records: &[RevisionRecord],
) -> Result<PathBuf, IngestError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IngestError::Cache { path, source }
    };
    fs::create_dir_all(cache_dir).map_err(io_err(cache_dir))?;
    let path = cache_path(cache_dir, article_key);
    let tmp = path.with_extension(format!(
        "jsonl.tmp.{}.{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    {
        let mut out = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
        for rec in records {
            let line = serde_json::to_string(rec).expect("record serialization is infallible");
            writeln!(out, "{line}").map_err(io_err(&tmp))?;
        }
        out.into_inner()
            .map_err(|e| e.into_error())
            .and_then(|f| f.sync_all())
            .map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, &path).map_err(io_err(&path))?;
    Ok(path)
}
