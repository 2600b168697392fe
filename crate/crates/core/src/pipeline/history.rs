//! The measurement-history database feeding the feedback loop.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::config_space::Configuration;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub config: Configuration,
    pub metrics: BTreeMap<String, f64>,
    pub iteration: u32,
}

/// Ordered (configuration, metric values, iteration) records. The metric-name
/// set is identical across records, iteration indices are non-decreasing, and
/// configurations never repeat.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementHistory {
    records: Vec<HistoryRecord>,
    #[serde(skip)]
    seen: HashSet<Configuration>,
}

impl MeasurementHistory {
    pub fn new() -> Self {
        MeasurementHistory::default()
    }

    pub fn push(
        &mut self,
        config: Configuration,
        metrics: BTreeMap<String, f64>,
        iteration: u32,
    ) -> Result<()> {
        if let Some(last) = self.records.last() {
            if iteration < last.iteration {
                return Err(Error::Precondition(format!(
                    "iteration {iteration} precedes {}",
                    last.iteration
                )));
            }
            let names: BTreeSet<&str> = metrics.keys().map(String::as_str).collect();
            let existing: BTreeSet<&str> = last.metrics.keys().map(String::as_str).collect();
            if names != existing {
                return Err(Error::Precondition(
                    "metric-name set differs from earlier records".into(),
                ));
            }
        }
        if !self.seen.insert(config.clone()) {
            return Err(Error::Precondition(format!("duplicate configuration {config}")));
        }
        self.records.push(HistoryRecord {
            config,
            metrics,
            iteration,
        });
        Ok(())
    }

    pub fn records(&self) -> &[HistoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, config: &Configuration) -> bool {
        self.seen.contains(config)
    }

    pub fn metric_names(&self) -> Vec<String> {
        self.records
            .first()
            .map(|r| r.metrics.keys().cloned().collect())
            .unwrap_or_default()
    }

    /// Option names of the recorded configurations.
    pub fn option_names(&self) -> BTreeSet<String> {
        self.records
            .first()
            .map(|r| r.config.assignments().keys().cloned().collect())
            .unwrap_or_default()
    }

    /// Aligned plain-text table of the most recent `cap` records, one row per
    /// configuration: option columns then metric columns.
    pub fn to_prompt_table(&self, cap: usize) -> String {
        if self.records.is_empty() {
            return String::from("(no measurements yet)");
        }
        let start = self.records.len().saturating_sub(cap);
        let rows = &self.records[start..];
        let options: Vec<String> = self.option_names().into_iter().collect();
        let metrics = self.metric_names();
        let mut header: Vec<String> = options.clone();
        header.extend(metrics.iter().cloned());
        let mut table: Vec<Vec<String>> = vec![header];
        for record in rows {
            let mut row: Vec<String> = options
                .iter()
                .map(|o| record.config.get(o).map(|v| v.to_string()).unwrap_or_default())
                .collect();
            row.extend(metrics.iter().map(|m| format!("{:.4}", record.metrics[m])));
            table.push(row);
        }
        align(&table)
    }
}

fn align(table: &[Vec<String>]) -> String {
    let columns = table[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    table
        .iter()
        .map(|row| {
            row.iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}
