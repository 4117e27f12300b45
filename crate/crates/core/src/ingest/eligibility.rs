use serde::{Deserialize, Serialize};

use super::ArticleMeta;

pub const DEFAULT_MIN_EDITS: usize = 50;
pub const DEFAULT_MIN_AUTHORS: usize = 10;
/// Latest revisions shorter than this are treated as stubs.
pub const DEFAULT_STUB_MAX_BYTES: u64 = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityCriteria {
    pub min_edits: usize,
    pub min_authors: usize,
    pub stub_max_bytes: u64,
}

impl Default for EligibilityCriteria {
    fn default() -> Self {
        EligibilityCriteria {
            min_edits: DEFAULT_MIN_EDITS,
            min_authors: DEFAULT_MIN_AUTHORS,
            stub_max_bytes: DEFAULT_STUB_MAX_BYTES,
        }
    }
}

impl EligibilityCriteria {
    pub fn accepts(&self, meta: &ArticleMeta) -> bool {
        passes_eligibility(meta, self.min_edits, self.min_authors)
    }
}

/// Non-stub articles with at least `min_edits` revisions and `min_authors`
/// distinct editors.
pub fn passes_eligibility(meta: &ArticleMeta, min_edits: usize, min_authors: usize) -> bool {
    !meta.is_stub && meta.revision_count >= min_edits && meta.distinct_editor_count >= min_authors
}

/// True when some `{{...}}` template name ends in "stub", case-insensitively.
pub fn has_stub_template(wikitext: &str) -> bool {
    let mut rest = wikitext;
    while let Some(open) = rest.find("{{") {
        rest = &rest[open + 2..];
        let end = rest.find(['|', '}', '{']).unwrap_or(rest.len());
        let name = rest[..end].trim().to_lowercase();
        if name.ends_with("stub") {
            return true;
        }
    }
    false
}

pub fn detect_stub(wikitext: &str, size_bytes: u64, stub_max_bytes: u64) -> bool {
    size_bytes < stub_max_bytes || has_stub_template(wikitext)
}
