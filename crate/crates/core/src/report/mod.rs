//! Per-article analysis, whole-study orchestration and report artifacts.

mod chart;
mod study;

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{self, IngestError, MediaWikiClient, QualityClass, RevisionRecord};
use crate::personas::{classify_article, ClassifierConfig, PersonaAssignment, PersonaError};
use crate::timeline::{
    bucket_by_quarter, correlation_matrix_lenient, select_top_editors, ArticleTimeline,
    CorrelationMatrix, TimelineError,
};

pub use chart::render_oscillation_chart;
pub use study::{
    run_study, ArticleFailure, ArticleSummary, ManifestEcho, StudyError, StudyManifest,
    StudyReport, CHARTS_DIR, CONTINGENCY_FILE, PERSONAS_DIR, STUDY_FILE,
};

#[derive(Debug, Error)]
pub enum ArticleError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Persona(#[from] PersonaError),
}

impl ArticleError {
    pub fn kind(&self) -> &'static str {
        match self {
            ArticleError::Ingest(e) => e.kind(),
            ArticleError::Timeline(_) => "timeline",
            ArticleError::Persona(_) => "persona",
        }
    }
}

/// Everything computed for one article.
#[derive(Debug, Clone, Serialize)]
pub struct ArticleAnalysis {
    pub timeline: ArticleTimeline,
    pub correlation: CorrelationMatrix,
    pub assignments: Vec<PersonaAssignment>,
    pub distinct_editors: usize,
}

/// Editor names ending in "bot", case-insensitively.
pub fn is_bot(editor_key: &str) -> bool {
    editor_key.to_lowercase().ends_with("bot")
}

/// Timeline, correlations and personas for an already-fetched history.
pub fn analyze_revisions(
    revisions: &[RevisionRecord],
    quality_class: QualityClass,
    config: &ClassifierConfig,
    exclude_bots: bool,
) -> Result<ArticleAnalysis, ArticleError> {
    let mut buckets = bucket_by_quarter(revisions)?;
    let distinct_editors = buckets.series.len();
    if exclude_bots {
        buckets.series.retain(|k, _| !is_bot(k));
    }
    let timeline = select_top_editors(&buckets, config.top_n, quality_class);
    let assignments = classify_article(&timeline, config)?;
    let correlation = correlation_matrix_lenient(&timeline, config.correlation_mode);
    Ok(ArticleAnalysis {
        timeline,
        correlation,
        assignments,
        distinct_editors,
    })
}

/// Fetches (or reads from cache) and analyzes one article.
pub fn analyze_article(
    client: &MediaWikiClient,
    title: &str,
    quality_class: QualityClass,
    cache_dir: &Path,
    config: &ClassifierConfig,
    exclude_bots: bool,
) -> Result<ArticleAnalysis, ArticleError> {
    let revisions = ingest::fetch_revisions(client, title, cache_dir)?;
    analyze_revisions(&revisions, quality_class, config, exclude_bots)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per top editor with the persona, the rule that fired and the
/// features behind it.
pub fn write_persona_csv<W: Write>(assignments: &[PersonaAssignment], out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "editor_key",
        "persona",
        "rule_fired",
        "total",
        "active_quarters",
        "span_quarters",
        "peak_share",
        "onset_quarter",
        "dominant_quarters",
        "negative_corr_fraction",
    ])?;
    for a in assignments {
        let f = &a.features;
        w.write_record([
            a.editor_key.clone(),
            a.persona.to_string(),
            a.rule_fired.to_string(),
            f.total.to_string(),
            f.active_quarters.to_string(),
            f.span_quarters.to_string(),
            f.peak_share.to_string(),
            f.onset_quarter.to_string(),
            f.dominant_quarters.to_string(),
            fmt_opt(f.negative_corr_fraction),
        ])?;
    }
    w.flush()
}
