//! Rule-based persona classification of an article's top editors.
//!
//! Every editor goes through an ordered decision procedure and receives
//! exactly one persona:
//!
//! 1. `cowboy_burst`: few active quarters or a single dominating peak.
//! 2. `rebel_negative`: mostly negative correlations with the other top editors.
//! 3. `conqueror_dominant`: strict per-quarter leader for several quarters,
//!    with sustained activity.
//! 4. `follower_default`: everyone else.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeline::{
    correlation_matrix_lenient, ArticleTimeline, CorrelationMatrix, CorrelationMode,
};

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error("correlation matrix editors do not match the timeline editors")]
    MatrixMismatch,
    #[error("timeline has no editors")]
    NoEditors,
    #[error("editor {0:?} has no edits")]
    EmptySeries(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config value for {field}: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Persona {
    Conqueror,
    Follower,
    Rebel,
    Cowboy,
}

impl Persona {
    /// Column order used in contingency tables.
    pub const ALL: [Persona; 4] = [
        Persona::Conqueror,
        Persona::Follower,
        Persona::Rebel,
        Persona::Cowboy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Persona::Conqueror => "Conqueror",
            Persona::Follower => "Follower",
            Persona::Rebel => "Rebel",
            Persona::Cowboy => "Cowboy",
        }
    }
}

impl fmt::Display for Persona {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    CowboyBurst,
    RebelNegative,
    ConquerorDominant,
    FollowerDefault,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::CowboyBurst => "cowboy_burst",
            Rule::RebelNegative => "rebel_negative",
            Rule::ConquerorDominant => "conqueror_dominant",
            Rule::FollowerDefault => "follower_default",
        }
    }

    pub fn persona(self) -> Persona {
        match self {
            Rule::CowboyBurst => Persona::Cowboy,
            Rule::RebelNegative => Persona::Rebel,
            Rule::ConquerorDominant => Persona::Conqueror,
            Rule::FollowerDefault => Persona::Follower,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditorFeatures {
    pub editor_key: String,
    pub total: u32,
    /// Quarters with at least one edit.
    pub active_quarters: usize,
    pub span_quarters: usize,
    /// Largest quarterly count divided by the editor's total.
    pub peak_share: f64,
    /// Offset of the first active quarter from the article's first quarter.
    pub onset_quarter: usize,
    /// Quarters in which this editor alone has the highest count.
    pub dominant_quarters: usize,
    /// Share of defined correlations with other top editors that are negative.
    pub negative_corr_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaAssignment {
    pub editor_key: String,
    pub persona: Persona,
    pub features: EditorFeatures,
    pub rule_fired: Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub top_n: usize,
    pub cowboy_max_active_quarters: usize,
    pub cowboy_peak_share: f64,
    /// The rebel rule needs a negative fraction strictly above this.
    pub rebel_negative_fraction: f64,
    pub conqueror_min_dominant_quarters: usize,
    pub sustained_min_active_fraction: f64,
    pub correlation_mode: CorrelationMode,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            top_n: 10,
            cowboy_max_active_quarters: 2,
            cowboy_peak_share: 0.7,
            rebel_negative_fraction: 0.5,
            conqueror_min_dominant_quarters: 3,
            sustained_min_active_fraction: 0.25,
            correlation_mode: CorrelationMode::Counts,
        }
    }
}

impl ClassifierConfig {
    /// Parses flat `key = value` TOML; missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ClassifierConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// `cowboy_max_active_quarters = 0` together with `cowboy_peak_share > 1`
    /// switches the burst rule off, so those two accept values outside the
    /// usual ranges.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, message: &str| {
            Err(ConfigError::Invalid {
                field,
                message: message.to_string(),
            })
        };
        let fraction = |v: f64| v > 0.0 && v <= 1.0;
        if self.top_n == 0 {
            return invalid("top_n", "must be at least 1");
        }
        if self.cowboy_peak_share.is_nan() || self.cowboy_peak_share <= 0.0 {
            return invalid("cowboy_peak_share", "must be positive");
        }
        if !fraction(self.rebel_negative_fraction) {
            return invalid("rebel_negative_fraction", "must be in (0, 1]");
        }
        if self.conqueror_min_dominant_quarters == 0 {
            return invalid("conqueror_min_dominant_quarters", "must be at least 1");
        }
        if !fraction(self.sustained_min_active_fraction) {
            return invalid("sustained_min_active_fraction", "must be in (0, 1]");
        }
        Ok(())
    }
}

/// Computes per-editor features from a timeline and its correlation matrix.
pub fn extract_features(
    timeline: &ArticleTimeline,
    corr: &CorrelationMatrix,
) -> Result<Vec<EditorFeatures>, PersonaError> {
    let timeline_keys: BTreeSet<&str> = timeline.editor_keys().into_iter().collect();
    let matrix_keys: BTreeSet<&str> = corr.editor_keys.iter().map(String::as_str).collect();
    if timeline_keys != matrix_keys
        || corr.editor_keys.len() != timeline.series.len()
        || corr.entries.len() != corr.editor_keys.len()
    {
        return Err(PersonaError::MatrixMismatch);
    }

    let mut dominant = vec![0usize; timeline.series.len()];
    for q in 0..timeline.span {
        let mut best: Option<(usize, u32)> = None;
        let mut tied = false;
        for (i, s) in timeline.series.iter().enumerate() {
            let c = s.counts.get(q).copied().unwrap_or(0);
            match best {
                Some((_, b)) if c == b => tied = true,
                Some((_, b)) if c < b => {}
                _ => {
                    best = Some((i, c));
                    tied = false;
                }
            }
        }
        if let Some((i, c)) = best {
            if c > 0 && !tied {
                dominant[i] += 1;
            }
        }
    }

    timeline
        .series
        .iter()
        .zip(dominant)
        .map(|(s, dominant_quarters)| {
            if s.total == 0 {
                return Err(PersonaError::EmptySeries(s.editor_key.clone()));
            }
            let row = corr
                .index_of(&s.editor_key)
                .ok_or(PersonaError::MatrixMismatch)?;
            let defined: Vec<f64> = (0..corr.editor_keys.len())
                .filter(|&j| j != row)
                .filter_map(|j| corr.get(row, j))
                .collect();
            let negative_corr_fraction = (!defined.is_empty()).then(|| {
                defined.iter().filter(|r| **r < 0.0).count() as f64 / defined.len() as f64
            });
            let peak = s.counts.iter().copied().max().unwrap_or(0);
            Ok(EditorFeatures {
                editor_key: s.editor_key.clone(),
                total: s.total,
                active_quarters: s.counts.iter().filter(|&&c| c > 0).count(),
                span_quarters: s.counts.len(),
                peak_share: f64::from(peak) / f64::from(s.total),
                onset_quarter: s.first_active().unwrap_or(0),
                dominant_quarters,
                negative_corr_fraction,
            })
        })
        .collect()
}

/// The rule that fires first for these features.
pub fn decide(features: &EditorFeatures, config: &ClassifierConfig) -> Rule {
    if features.active_quarters <= config.cowboy_max_active_quarters
        || features.peak_share >= config.cowboy_peak_share
    {
        return Rule::CowboyBurst;
    }
    if features
        .negative_corr_fraction
        .is_some_and(|f| f > config.rebel_negative_fraction)
    {
        return Rule::RebelNegative;
    }
    let sustained = features.active_quarters as f64
        >= config.sustained_min_active_fraction * features.span_quarters as f64;
    if features.dominant_quarters >= config.conqueror_min_dominant_quarters && sustained {
        return Rule::ConquerorDominant;
    }
    Rule::FollowerDefault
}

pub fn classify(features: EditorFeatures, config: &ClassifierConfig) -> PersonaAssignment {
    let rule = decide(&features, config);
    PersonaAssignment {
        editor_key: features.editor_key.clone(),
        persona: rule.persona(),
        features,
        rule_fired: rule,
    }
}

/// Correlates, extracts features and classifies every top editor of the
/// timeline. A lone editor has no defined correlations, so the rebel rule
/// cannot fire for it.
pub fn classify_article(
    timeline: &ArticleTimeline,
    config: &ClassifierConfig,
) -> Result<Vec<PersonaAssignment>, PersonaError> {
    if timeline.series.is_empty() {
        return Err(PersonaError::NoEditors);
    }
    let corr = correlation_matrix_lenient(timeline, config.correlation_mode);
    Ok(extract_features(timeline, &corr)?
        .into_iter()
        .map(|f| classify(f, config))
        .collect())
}
