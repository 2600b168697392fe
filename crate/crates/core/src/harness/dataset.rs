//! Fully measured datasets: every configuration of a space paired with its
//! metric values, loadable from CSV + space JSON.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config_space::{
    enumerate_space, ConfigSpace, Configuration, OptionValue, DEFAULT_ENUMERATION_LIMIT,
};
use crate::error::{Error, Result};
use crate::sampler::{MeasurementOracle, MetricSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceMode {
    #[default]
    Full,
    Pruned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub system: String,
    pub mode: SpaceMode,
    /// Name of the parent full dataset for pruned views.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

/// A space plus exactly one finite metric row per enumerable configuration.
#[derive(Clone, Debug)]
pub struct MeasuredDataset {
    space: ConfigSpace,
    metrics: Vec<MetricSpec>,
    rows: HashMap<Configuration, BTreeMap<String, f64>>,
    provenance: Provenance,
}

impl MeasuredDataset {
    pub fn new(
        space: ConfigSpace,
        metrics: Vec<MetricSpec>,
        rows: HashMap<Configuration, BTreeMap<String, f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let all = enumerate_space(&space, DEFAULT_ENUMERATION_LIMIT)?;
        if rows.len() != all.len() {
            return Err(Error::IncompleteDataset(format!(
                "{} rows for {} configurations",
                rows.len(),
                all.len()
            )));
        }
        for cfg in &all {
            let row = rows
                .get(cfg)
                .ok_or_else(|| Error::IncompleteDataset(format!("no row for {cfg}")))?;
            for m in &metrics {
                let v = row
                    .get(&m.name)
                    .ok_or_else(|| Error::IncompleteDataset(format!("{cfg} lacks metric {}", m.name)))?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("metric {} at {cfg}", m.name)));
                }
            }
        }
        Ok(MeasuredDataset {
            space,
            metrics,
            rows,
            provenance,
        })
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn metrics(&self) -> &[MetricSpec] {
        &self.metrics
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn metrics_of(&self, cfg: &Configuration) -> Result<&BTreeMap<String, f64>> {
        self.rows
            .get(cfg)
            .ok_or_else(|| Error::Oracle(format!("no measurement recorded for {cfg}")))
    }

    /// Overrides metric directions (CSV carries no direction information).
    pub fn with_directions(mut self, directions: &BTreeMap<String, crate::sampler::Direction>) -> Self {
        for m in &mut self.metrics {
            if let Some(d) = directions.get(&m.name) {
                m.direction = *d;
            }
        }
        self
    }

    /// Restricts the dataset to a pruned space. Each pruned-space row is the
    /// parent row of the configuration completed via the pinned defaults.
    pub fn pruned_view(
        &self,
        keep: &std::collections::BTreeSet<String>,
        defaults: &BTreeMap<String, OptionValue>,
    ) -> Result<MeasuredDataset> {
        let pruned = crate::config_space::prune_space(&self.space, keep, defaults)?;
        let mut rows = HashMap::new();
        for cfg in enumerate_space(&pruned, DEFAULT_ENUMERATION_LIMIT)? {
            let full = pruned.complete(&cfg);
            rows.insert(cfg, self.metrics_of(&full)?.clone());
        }
        MeasuredDataset::new(
            pruned,
            self.metrics.clone(),
            rows,
            Provenance {
                system: self.provenance.system.clone(),
                mode: SpaceMode::Pruned,
                parent: Some(self.provenance.system.clone()),
            },
        )
    }
}

impl MeasurementOracle for MeasuredDataset {
    fn measure(&self, cfg: &Configuration) -> Result<BTreeMap<String, f64>> {
        self.metrics_of(cfg).cloned()
    }
}

const METRIC_PREFIX: &str = "metric:";

/// Loads a dataset from a CSV file (header: option names in space order, then
/// `metric:`-prefixed metric columns; row order free) and a space JSON file.
pub fn load_dataset(csv_path: &Path, space_path: &Path) -> Result<MeasuredDataset> {
    let space: ConfigSpace = serde_json::from_str(&std::fs::read_to_string(space_path)?)?;
    let system = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let file = std::fs::File::open(csv_path)?;
    read_dataset_csv(file, space, system)
}

pub fn read_dataset_csv(
    reader: impl Read,
    space: ConfigSpace,
    system: String,
) -> Result<MeasuredDataset> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = csv_reader.headers()?.clone();
    let option_names: Vec<&str> = space.options().iter().map(|o| o.name.as_str()).collect();
    if header.len() < option_names.len() {
        return Err(Error::HeaderMismatch(format!(
            "{} columns for {} options",
            header.len(),
            option_names.len()
        )));
    }
    for (i, name) in option_names.iter().enumerate() {
        if &header[i] != *name {
            return Err(Error::HeaderMismatch(format!(
                "column {i} is {:?}, expected option {name:?}",
                &header[i]
            )));
        }
    }
    let mut metric_names = Vec::new();
    for i in option_names.len()..header.len() {
        let column = &header[i];
        let name = column.strip_prefix(METRIC_PREFIX).ok_or_else(|| {
            Error::HeaderMismatch(format!("column {column:?} lacks the {METRIC_PREFIX} prefix"))
        })?;
        metric_names.push(name.to_string());
    }
    if metric_names.is_empty() {
        return Err(Error::HeaderMismatch("no metric columns".into()));
    }

    let mut rows: HashMap<Configuration, BTreeMap<String, f64>> = HashMap::new();
    for record in csv_reader.records() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::HeaderMismatch(format!(
                "row has {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        let mut assignments = BTreeMap::new();
        for (i, opt) in space.options().iter().enumerate() {
            let cell = record[i].trim();
            let value = parse_cell(cell, opt).ok_or_else(|| Error::InadmissibleValue {
                option: opt.name.clone(),
                value: cell.to_string(),
            })?;
            assignments.insert(opt.name.clone(), value);
        }
        let cfg = Configuration::new(assignments);
        let mut metrics = BTreeMap::new();
        for (j, name) in metric_names.iter().enumerate() {
            let cell = record[option_names.len() + j].trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::NonFinite(format!("metric {name} value {cell:?}")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("metric {name} at {cfg}")));
            }
            metrics.insert(name.clone(), v);
        }
        if rows.insert(cfg.clone(), metrics).is_some() {
            return Err(Error::DuplicateRow(cfg.to_string()));
        }
    }
    let metrics = metric_names.into_iter().map(MetricSpec::minimize).collect();
    MeasuredDataset::new(
        space,
        metrics,
        rows,
        Provenance {
            system,
            mode: SpaceMode::Full,
            parent: None,
        },
    )
}

fn parse_cell(cell: &str, opt: &crate::config_space::ConfigOption) -> Option<OptionValue> {
    let candidate = if cell.eq_ignore_ascii_case("true") {
        OptionValue::Bool(true)
    } else if cell.eq_ignore_ascii_case("false") {
        OptionValue::Bool(false)
    } else if let Ok(i) = cell.parse::<i64>() {
        OptionValue::Int(i)
    } else if let Ok(r) = cell.parse::<f64>() {
        OptionValue::Real(r)
    } else {
        OptionValue::Symbol(cell.to_string())
    };
    opt.resolve_value(&candidate).cloned()
}

/// Writes the dataset in the CSV interchange format, rows in enumeration
/// order.
pub fn write_dataset_csv(dataset: &MeasuredDataset, mut writer: impl Write) -> Result<()> {
    let mut header: Vec<String> = dataset
        .space
        .options()
        .iter()
        .map(|o| o.name.clone())
        .collect();
    for m in &dataset.metrics {
        header.push(format!("{METRIC_PREFIX}{}", m.name));
    }
    writeln!(writer, "{}", header.join(","))?;
    for cfg in enumerate_space(&dataset.space, DEFAULT_ENUMERATION_LIMIT)? {
        let row = dataset.metrics_of(&cfg)?;
        let mut cells: Vec<String> = dataset
            .space
            .options()
            .iter()
            .map(|o| cfg.get(&o.name).expect("enumerated").to_string())
            .collect();
        for m in &dataset.metrics {
            cells.push(format!("{}", row[&m.name]));
        }
        writeln!(writer, "{}", cells.join(","))?;
    }
    Ok(())
}
