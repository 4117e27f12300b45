//! Reading contingency tables from CSV and writing the persona-table report:
//! counts with totals, the test summary, percentage rows and residual rows.
//!
//! Output is comma-separated with a decimal point and LF line endings.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use super::{ChiSquareResult, ContingencyTable, StatsError};

const CORNER_LABEL: &str = "Article/Author";
const TOTAL_LABEL: &str = "Total";

pub fn format_statistic(x: f64) -> String {
    fixed(x, 2)
}

pub fn format_p_value(p: f64) -> String {
    fixed(p, 6)
}

/// Fixed-point formatting without a "-0.00".
fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Writes the table in the published layout. Without a test result only the
/// count and total rows (plus percentages where defined) are written.
pub fn write_table_report<W: Write>(
    table: &ContingencyTable,
    result: Option<&ChiSquareResult>,
    out: W,
) -> io::Result<()> {
    let width = table.cols() + 2;
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut row = |cells: Vec<String>| -> io::Result<()> {
        let mut cells = cells;
        if cells.len() < width {
            cells.resize(width, String::new());
        }
        w.write_record(&cells).map_err(io::Error::from)
    };

    let mut header = vec![CORNER_LABEL.to_string()];
    header.extend(table.col_labels.iter().cloned());
    header.push(TOTAL_LABEL.to_string());
    row(header)?;

    for (label, (counts, total)) in table
        .row_labels
        .iter()
        .zip(table.counts.iter().zip(table.row_totals()))
    {
        let mut cells = vec![label.clone()];
        cells.extend(counts.iter().map(u64::to_string));
        cells.push(total.to_string());
        row(cells)?;
    }
    let mut totals = vec![TOTAL_LABEL.to_string()];
    totals.extend(table.col_totals().iter().map(u64::to_string));
    totals.push(table.grand_total().to_string());
    row(totals)?;

    let percents = match result {
        Some(r) => Some(r.percent_rows.clone()),
        None => super::percent_distribution(table).ok(),
    };
    if let Some(r) = result {
        row(vec![
            "Chi-Square".into(),
            format_statistic(r.statistic),
            "df".into(),
            r.df.to_string(),
            "p-value".into(),
            format_p_value(r.p_value),
        ])?;
    }
    if let Some(percents) = percents {
        row(vec!["Percentage distribution:".into()])?;
        for (label, pct) in table.row_labels.iter().zip(&percents) {
            let mut cells = vec![label.clone()];
            cells.extend(pct.iter().map(|p| fixed(*p, 1)));
            cells.push(fixed(pct.iter().sum(), 1));
            row(cells)?;
        }
    }
    if let Some(r) = result {
        row(vec!["Standardized residuals:".into()])?;
        for (label, res) in table.row_labels.iter().zip(&r.std_residuals) {
            let mut cells = vec![label.clone()];
            cells.extend(res.iter().map(|v| fixed(*v, 2)));
            row(cells)?;
        }
    }
    w.flush()
}

/// Parses a contingency table: header row of column labels (first cell is
/// the corner label), then one row per class with integer counts. A trailing
/// "Total" column is checked and dropped; reading stops at a "Total" row,
/// an empty row or the first non-count row, so full report files round-trip.
pub fn parse_contingency_csv<R: Read>(input: R) -> Result<ContingencyTable, StatsError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = reader.records();
    let err = |m: String| StatsError::Csv(m);

    let header = records
        .next()
        .ok_or_else(|| err("empty file".into()))?
        .map_err(|e| err(e.to_string()))?;
    let mut labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    while labels.last().is_some_and(String::is_empty) {
        labels.pop();
    }
    let has_total = labels
        .last()
        .is_some_and(|l| l.eq_ignore_ascii_case(TOTAL_LABEL));
    if has_total {
        labels.pop();
    }
    if labels.is_empty() {
        return Err(err("header names no columns".into()));
    }

    let mut row_labels = Vec::new();
    let mut counts = Vec::new();
    for (line, rec) in records.enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let label = rec.get(0).unwrap_or("");
        if label.is_empty() || label.eq_ignore_ascii_case(TOTAL_LABEL) {
            break;
        }
        let cells: Vec<&str> = rec.iter().skip(1).collect();
        let parsed: Result<Vec<u64>, _> = cells
            .iter()
            .take(labels.len())
            .map(|c| c.parse::<u64>())
            .collect();
        let Ok(row) = parsed else {
            if counts.is_empty() {
                return Err(err(format!(
                    "row {}: counts must be non-negative integers",
                    line + 2
                )));
            }
            break;
        };
        if row.len() != labels.len() {
            return Err(err(format!(
                "row {}: expected {} counts, found {}",
                line + 2,
                labels.len(),
                row.len()
            )));
        }
        if has_total {
            if let Some(total) = cells.get(labels.len()).filter(|c| !c.is_empty()) {
                let declared: u64 = total
                    .parse()
                    .map_err(|_| err(format!("row {}: bad total {total:?}", line + 2)))?;
                if declared != row.iter().sum::<u64>() {
                    return Err(err(format!(
                        "row {}: total {declared} does not match the counts",
                        line + 2
                    )));
                }
            }
        }
        row_labels.push(label.to_string());
        counts.push(row);
    }
    if counts.is_empty() {
        return Err(err("no count rows".into()));
    }
    ContingencyTable::new(row_labels, labels, counts)
}

pub fn read_contingency_csv(path: &Path) -> Result<ContingencyTable, StatsError> {
    let file = File::open(path).map_err(|e| StatsError::Csv(format!("{}: {e}", path.display())))?;
    parse_contingency_csv(file)
}
