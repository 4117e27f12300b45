use std::fs;
use std::path::Path;

use super::IngestError;

/// Normalizes a title the way MediaWiki does for the main namespace:
/// underscores become spaces, runs of whitespace collapse, and the first
/// character is upper-cased.
pub fn normalize_title(raw: &str) -> String {
    let spaced = raw.replace('_', " ");
    let collapsed = spaced.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut chars = collapsed.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// One title per line; blank lines and lines starting with `#` are skipped.
pub fn parse_title_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.trim_start_matches('\u{feff}'))
        .filter(|l| !l.trim_start().starts_with('#'))
        .map(normalize_title)
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn read_title_list(path: &Path) -> Result<Vec<String>, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Cache {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_title_list(&text))
}
