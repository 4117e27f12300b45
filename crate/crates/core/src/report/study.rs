//! Two-class study: analyze every listed article, tally personas per quality
//! class, run the independence test and write the output bundle.
//!
//! Bundle layout under the output directory:
//!
//! ```text
//! contingency.csv
//! study.json
//! charts/<percent-encoded title>.svg
//! personas/<percent-encoded title>.csv
//! ```
//!
//! Artifacts carry no timestamps or paths, so re-running on an unchanged
//! cache reproduces them byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::{analyze_article, render_oscillation_chart, write_persona_csv, ArticleAnalysis};
use crate::ingest::{percent_encode_title, MediaWikiClient, QualityClass, DEFAULT_MAX_IN_FLIGHT};
use crate::personas::{ClassifierConfig, PersonaAssignment};
use crate::pool;
use crate::stats::{
    build_contingency, chi_square_independence, write_table_report, ChiSquareResult,
    ContingencyTable, StatsError,
};

pub const CONTINGENCY_FILE: &str = "contingency.csv";
pub const STUDY_FILE: &str = "study.json";
pub const CHARTS_DIR: &str = "charts";
pub const PERSONAS_DIR: &str = "personas";

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("no {0} article could be analyzed")]
    EmptyClass(QualityClass),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone)]
pub struct StudyManifest {
    pub featured_titles: Vec<String>,
    pub non_assessed_titles: Vec<String>,
    pub config: ClassifierConfig,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    pub exclude_bots: bool,
}

impl StudyManifest {
    pub fn validate(&self) -> Result<(), StudyError> {
        let invalid = |m: String| Err(StudyError::InvalidManifest(m));
        if self.featured_titles.is_empty() {
            return invalid("featured title list is empty".into());
        }
        if self.non_assessed_titles.is_empty() {
            return invalid("non-assessed title list is empty".into());
        }
        let mut seen = BTreeSet::new();
        for t in self.featured_titles.iter().chain(&self.non_assessed_titles) {
            if !seen.insert(t.as_str()) {
                return invalid(format!("title {t:?} is listed more than once"));
            }
        }
        self.config
            .validate()
            .map_err(|e| StudyError::InvalidManifest(e.to_string()))
    }

    fn jobs(&self) -> Vec<(String, QualityClass)> {
        self.featured_titles
            .iter()
            .map(|t| (t.clone(), QualityClass::Featured))
            .chain(
                self.non_assessed_titles
                    .iter()
                    .map(|t| (t.clone(), QualityClass::NonAssessed)),
            )
            .collect()
    }
}

/// The manifest as echoed into study.json (paths omitted).
#[derive(Debug, Clone, Serialize)]
pub struct ManifestEcho {
    pub featured_titles: Vec<String>,
    pub non_assessed_titles: Vec<String>,
    pub config: ClassifierConfig,
    pub exclude_bots: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArticleSummary {
    pub article_key: String,
    pub quality_class: QualityClass,
    pub revision_count: usize,
    pub distinct_editors: usize,
    pub start_quarter: String,
    pub span_quarters: usize,
    pub assignments: Vec<PersonaAssignment>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArticleFailure {
    pub article_key: String,
    pub quality_class: QualityClass,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub manifest: ManifestEcho,
    pub articles: Vec<ArticleSummary>,
    pub errors: Vec<ArticleFailure>,
    /// Full persona × class table, before empty columns are dropped.
    pub contingency: ContingencyTable,
    /// Persona columns with no editors, left out of the test.
    pub dropped_columns: Vec<String>,
    pub tested_table: ContingencyTable,
    pub chi_square: Option<ChiSquareResult>,
    pub chi_square_error: Option<String>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), StudyError> {
    fs::write(path, bytes).map_err(|source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), StudyError> {
    fs::create_dir_all(path).map_err(|source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the study and writes the bundle. Articles that fail are recorded in
/// `errors` and skipped; the run fails only when a class ends up empty.
pub fn run_study(
    manifest: &StudyManifest,
    client: &MediaWikiClient,
) -> Result<StudyReport, StudyError> {
    manifest.validate()?;
    let jobs = manifest.jobs();
    let workers = pool::default_workers(DEFAULT_MAX_IN_FLIGHT);
    let results = pool::bounded_map(&jobs, workers, |(title, class)| {
        analyze_article(
            client,
            title,
            *class,
            &manifest.cache_dir,
            &manifest.config,
            manifest.exclude_bots,
        )
    });

    let mut analyses: Vec<ArticleAnalysis> = Vec::new();
    let mut errors = Vec::new();
    for ((title, class), result) in jobs.iter().zip(results) {
        match result {
            Ok(a) => analyses.push(a),
            Err(e) => {
                log::warn!("skipping {title:?}: {e}");
                errors.push(ArticleFailure {
                    article_key: title.clone(),
                    quality_class: *class,
                    kind: e.kind().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }
    for class in [QualityClass::Featured, QualityClass::NonAssessed] {
        if !analyses.iter().any(|a| a.timeline.quality_class == class) {
            return Err(StudyError::EmptyClass(class));
        }
    }

    let by_article: BTreeMap<String, (QualityClass, Vec<PersonaAssignment>)> = analyses
        .iter()
        .map(|a| {
            (
                a.timeline.article_key.clone(),
                (a.timeline.quality_class, a.assignments.clone()),
            )
        })
        .collect();
    let contingency = build_contingency(&by_article)?;
    let mut tested_table = contingency.clone();
    let dropped_columns = tested_table.drop_empty_columns();
    let (chi_square, chi_square_error) = match chi_square_independence(&tested_table) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let report = StudyReport {
        manifest: ManifestEcho {
            featured_titles: manifest.featured_titles.clone(),
            non_assessed_titles: manifest.non_assessed_titles.clone(),
            config: manifest.config.clone(),
            exclude_bots: manifest.exclude_bots,
        },
        articles: analyses
            .iter()
            .map(|a| ArticleSummary {
                article_key: a.timeline.article_key.clone(),
                quality_class: a.timeline.quality_class,
                revision_count: a.timeline.revision_count,
                distinct_editors: a.distinct_editors,
                start_quarter: a.timeline.start_quarter.to_string(),
                span_quarters: a.timeline.span,
                assignments: a.assignments.clone(),
            })
            .collect(),
        errors,
        contingency,
        dropped_columns,
        tested_table,
        chi_square,
        chi_square_error,
    };
    write_bundle(&manifest.output_dir, &analyses, &report)?;
    Ok(report)
}

fn write_bundle(
    out: &Path,
    analyses: &[ArticleAnalysis],
    report: &StudyReport,
) -> Result<(), StudyError> {
    let charts = out.join(CHARTS_DIR);
    let personas = out.join(PERSONAS_DIR);
    create_dir(&charts)?;
    create_dir(&personas)?;
    for a in analyses {
        let name = percent_encode_title(&a.timeline.article_key);
        let svg = render_oscillation_chart(&a.timeline, &a.assignments);
        write_file(&charts.join(format!("{name}.svg")), svg.as_bytes())?;
        let mut buf = Vec::new();
        write_persona_csv(&a.assignments, &mut buf).expect("writing to memory");
        write_file(&personas.join(format!("{name}.csv")), &buf)?;
    }

    let mut buf = Vec::new();
    write_table_report(&report.tested_table, report.chi_square.as_ref(), &mut buf)
        .expect("writing to memory");
    write_file(&out.join(CONTINGENCY_FILE), &buf)?;

    let mut json = serde_json::to_vec_pretty(report).expect("report serializes");
    json.push(b'\n');
    write_file(&out.join(STUDY_FILE), &json)
}
