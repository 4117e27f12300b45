//! Quality-class × persona contingency tables and Pearson's chi-square test
//! of independence.

mod gamma;
mod table_csv;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::QualityClass;
use crate::personas::{Persona, PersonaAssignment};

pub use gamma::{chi_square_survival, ln_gamma, regularized_gamma_p, regularized_gamma_q};
pub use table_csv::{
    format_p_value, format_statistic, parse_contingency_csv, read_contingency_csv,
    write_table_report,
};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("article {0:?} has quality class Other; filter it out first")]
    UnknownQualityClass(String),
    #[error("degenerate table: {0}")]
    DegenerateTable(String),
    #[error("table shape mismatch: {0}")]
    Shape(String),
    #[error("contingency CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self, StatsError> {
        if counts.len() != row_labels.len() {
            return Err(StatsError::Shape(format!(
                "{} row labels for {} rows",
                row_labels.len(),
                counts.len()
            )));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != col_labels.len()) {
            return Err(StatsError::Shape(format!(
                "row of {} cells for {} columns",
                row.len(),
                col_labels.len()
            )));
        }
        Ok(ContingencyTable {
            row_labels,
            col_labels,
            counts,
        })
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Removes columns whose total is zero, returning their labels.
    pub fn drop_empty_columns(&mut self) -> Vec<String> {
        let totals = self.col_totals();
        let keep: Vec<bool> = totals.iter().map(|&t| t > 0).collect();
        let dropped = self
            .col_labels
            .iter()
            .zip(&keep)
            .filter(|(_, k)| !**k)
            .map(|(l, _)| l.clone())
            .collect();
        let mut it = keep.iter();
        self.col_labels.retain(|_| *it.next().unwrap());
        for row in &mut self.counts {
            let mut it = keep.iter();
            row.retain(|_| *it.next().unwrap());
        }
        dropped
    }

    /// Every cell multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        ContingencyTable {
            counts: self
                .counts
                .iter()
                .map(|r| r.iter().map(|c| c * k).collect())
                .collect(),
            ..self.clone()
        }
    }

    fn check_nondegenerate(&self) -> Result<(), StatsError> {
        if self.rows() < 2 || self.cols() < 2 {
            return Err(StatsError::DegenerateTable(format!(
                "need at least 2x2, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        for (label, total) in self.row_labels.iter().zip(self.row_totals()) {
            if total == 0 {
                return Err(StatsError::DegenerateTable(format!(
                    "row {label:?} is empty"
                )));
            }
        }
        for (label, total) in self.col_labels.iter().zip(self.col_totals()) {
            if total == 0 {
                return Err(StatsError::DegenerateTable(format!(
                    "column {label:?} is empty"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub expected: Vec<Vec<f64>>,
    pub std_residuals: Vec<Vec<f64>>,
    pub percent_rows: Vec<Vec<f64>>,
}

/// Tallies persona assignments per quality class. Rows are Featured then
/// Non-Assessed; columns follow [`Persona::ALL`]. An editor counts once per
/// article.
pub fn build_contingency(
    assignments: &BTreeMap<String, (QualityClass, Vec<PersonaAssignment>)>,
) -> Result<ContingencyTable, StatsError> {
    let classes = [QualityClass::Featured, QualityClass::NonAssessed];
    let mut counts = vec![vec![0u64; Persona::ALL.len()]; classes.len()];
    for (article, (class, list)) in assignments {
        let row = classes
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| StatsError::UnknownQualityClass(article.clone()))?;
        for a in list {
            let col = Persona::ALL
                .iter()
                .position(|p| *p == a.persona)
                .expect("every persona has a column");
            counts[row][col] += 1;
        }
    }
    ContingencyTable::new(
        classes.iter().map(|c| c.label().to_string()).collect(),
        Persona::ALL.iter().map(|p| p.name().to_string()).collect(),
        counts,
    )
}

fn expected_counts(table: &ContingencyTable) -> Vec<Vec<f64>> {
    let rt = table.row_totals();
    let ct = table.col_totals();
    let n = table.grand_total() as f64;
    rt.iter()
        .map(|&r| ct.iter().map(|&c| r as f64 * c as f64 / n).collect())
        .collect()
}

/// Pearson residuals (observed - expected) / sqrt(expected).
pub fn standardized_residuals(table: &ContingencyTable) -> Result<Vec<Vec<f64>>, StatsError> {
    table.check_nondegenerate()?;
    Ok(residuals_from(table, &expected_counts(table)))
}

fn residuals_from(table: &ContingencyTable, expected: &[Vec<f64>]) -> Vec<Vec<f64>> {
    table
        .counts
        .iter()
        .zip(expected)
        .map(|(obs, exp)| {
            obs.iter()
                .zip(exp)
                .map(|(&o, &e)| (o as f64 - e) / e.sqrt())
                .collect()
        })
        .collect()
}

/// Row percentages, unrounded.
pub fn percent_distribution(table: &ContingencyTable) -> Result<Vec<Vec<f64>>, StatsError> {
    table
        .counts
        .iter()
        .zip(&table.row_labels)
        .map(|(row, label)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                return Err(StatsError::DegenerateTable(format!(
                    "row {label:?} is empty"
                )));
            }
            Ok(row
                .iter()
                .map(|&c| 100.0 * c as f64 / total as f64)
                .collect())
        })
        .collect()
}

/// Uncorrected Pearson chi-square test of independence.
pub fn chi_square_independence(table: &ContingencyTable) -> Result<ChiSquareResult, StatsError> {
    table.check_nondegenerate()?;
    let expected = expected_counts(table);
    let statistic = table
        .counts
        .iter()
        .flatten()
        .zip(expected.iter().flatten())
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum::<f64>();
    let df = ((table.rows() - 1) * (table.cols() - 1)) as u32;
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value: chi_square_survival(statistic, df),
        std_residuals: residuals_from(table, &expected),
        percent_rows: percent_distribution(table)?,
        expected,
    })
}
