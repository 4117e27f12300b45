//! Wikipedia editor persona mining.
//!
//! The pipeline runs `ingest` (revision histories) → `timeline` (quarterly
//! per-editor series, correlations) → `personas` (rule-based classification)
//! → `stats` (contingency table and chi-square test), with `report`
//! orchestrating whole studies and writing CSV, JSON and SVG artifacts.

pub mod ingest;
pub mod personas;
pub mod pool;
pub mod report;
pub mod stats;
pub mod timeline;
