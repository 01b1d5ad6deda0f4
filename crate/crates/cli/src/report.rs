//! Report files: `<experiment>.json` with the resolved config and claim-tagged
//! metrics, and `<experiment>.csv` with the experiment's table.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::Config;
use crate::error::CliError;

/// Bumped whenever report fields or CSV columns change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// `|value - expected| <= tolerance`
    Abs,
    /// `|value - expected| <= tolerance |expected|`
    Rel,
    /// `value <= tolerance`
    Max,
    /// `value < tolerance`
    Below,
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    /// Identifier of the property the metric tests.
    pub claim: String,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl Metric {
    /// Informational metric with no pass/fail contract.
    pub fn info(name: &str, claim: &str, value: impl Into<Value>) -> Self {
        Self { name: name.into(), claim: claim.into(), value: value.into(), expected: None, tolerance: None, check: None, pass: None }
    }

    pub fn checked(name: &str, claim: &str, value: f64, expected: Option<f64>, tolerance: f64, check: Check) -> Self {
        let pass = match check {
            Check::Abs => (value - expected.unwrap_or(0.0)).abs() <= tolerance,
            Check::Rel => {
                let e = expected.unwrap_or(0.0);
                (value - e).abs() <= tolerance * e.abs()
            }
            Check::Max => value <= tolerance,
            Check::Below => value < tolerance,
            Check::Equal => Some(value) == expected,
        };
        Self {
            name: name.into(),
            claim: claim.into(),
            value: value.into(),
            expected: expected.map(Value::from),
            tolerance: Some(tolerance),
            check: Some(check),
            pass: Some(pass),
        }
    }

    /// Exact comparison of structured values.
    pub fn matches(name: &str, claim: &str, value: impl Serialize, expected: impl Serialize) -> Self {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        let expected = serde_json::to_value(expected).unwrap_or(Value::Null);
        let pass = value == expected;
        Self { name: name.into(), claim: claim.into(), value, expected: Some(expected), tolerance: None, check: Some(Check::Equal), pass: Some(pass) }
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

/// Fixed-column table written next to the JSON report.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// One row per metric; used when an experiment has no natural table.
    pub fn from_metrics(metrics: &[Metric]) -> Self {
        let mut t = Table::new(&["name", "claim", "value", "expected", "tolerance", "pass"]);
        let text = |v: &Option<Value>| v.as_ref().map(cell).unwrap_or_default();
        for m in metrics {
            t.push(vec![
                m.name.clone(),
                m.claim.clone(),
                cell(&m.value),
                text(&m.expected),
                m.tolerance.map(|x| x.to_string()).unwrap_or_default(),
                m.pass.map(|p| p.to_string()).unwrap_or_default(),
            ]);
        }
        t
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: String,
    pub status: Status,
    pub config: Config,
    pub metrics: Vec<Metric>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub csv: CsvInfo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    ContractViolation,
}

#[derive(Clone, Debug, Serialize)]
pub struct CsvInfo {
    pub file: String,
    pub columns: Vec<String>,
}

/// What an experiment produces before it is written out.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub metrics: Vec<Metric>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub table: Option<Table>,
}

impl Outcome {
    pub fn push(&mut self, m: Metric) {
        self.metrics.push(m);
    }

    pub fn failures(&self) -> Vec<&Metric> {
        self.metrics.iter().filter(|m| m.failed()).collect()
    }
}

/// Writes both files and returns the report with their paths.
pub fn write_outputs(dir: &Path, experiment: &str, config: &Config, outcome: Outcome) -> Result<(Report, PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir)?;
    let table = outcome.table.clone().unwrap_or_else(|| Table::from_metrics(&outcome.metrics));
    let csv_path = dir.join(format!("{experiment}.csv"));
    table.write(&csv_path)?;
    let status = if outcome.failures().is_empty() { Status::Ok } else { Status::ContractViolation };
    let report = Report {
        schema_version: SCHEMA_VERSION,
        experiment: experiment.into(),
        status,
        config: config.clone(),
        metrics: outcome.metrics,
        warnings: outcome.warnings,
        notes: outcome.notes,
        csv: CsvInfo { file: format!("{experiment}.csv"), columns: table.columns.clone() },
    };
    let json_path = dir.join(format!("{experiment}.json"));
    fs::write(&json_path, serde_json::to_string_pretty(&report)? + "\n")?;
    Ok((report, json_path, csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks() {
        assert_eq!(Metric::checked("a", "c", 1.0 + 1e-10, Some(1.0), 1e-9, Check::Abs).pass, Some(true));
        assert_eq!(Metric::checked("a", "c", 1.06, Some(1.0), 0.05, Check::Rel).pass, Some(false));
        assert_eq!(Metric::checked("a", "c", 1e-3, None, 1e-3, Check::Max).pass, Some(true));
        assert_eq!(Metric::checked("a", "c", 1e-3, None, 1e-3, Check::Below).pass, Some(false));
        assert_eq!(Metric::matches("a", "c", [1, 2], vec![1, 2]).pass, Some(true));
        assert_eq!(Metric::info("a", "c", 3.0).pass, None);
    }

    #[test]
    fn metric_table() {
        let t = Table::from_metrics(&[Metric::checked("dim", "dfs-dimension", 6.0, Some(6.0), 0.0, Check::Abs)]);
        assert_eq!(t.rows[0], vec!["dim", "dfs-dimension", "6.0", "6.0", "0", "true"]);
    }
}
