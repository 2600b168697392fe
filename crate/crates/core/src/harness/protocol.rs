//! The evaluation protocol: samplers select k configurations, downstream
//! models train on those k rows and predict every remaining configuration,
//! and per-cell RMSE distributions are compared against a reference sampler.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    sample_comsa, sample_flash, sample_genetic, sample_nsbs, sample_nsga3, sample_random,
    ComsaParams, FlashParams, GeneticParams, Nsga3Params, NsbsParams,
};
use crate::config_space::{prune_space, ConfigSpace, OptionValue, DEFAULT_ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::gateway::MockScript;
use crate::mobo::{sample_ehvi, sample_tsemo, EhviParams, TsemoParams};
use crate::perf_models::{rmse, train_fnn, train_gbt, FnnParams, GbtParams, PerfModel};
use crate::pipeline::{
    run_sampling_loop, LoopConfig, PipelineBackends, PipelineConfig, PromptTemplates,
    SamplingBudget,
};
use crate::sampler::{CandidatePool, Direction, MetricSpec, ObjectiveSpec};

use super::dataset::{load_dataset, MeasuredDataset, SpaceMode};
use super::fixtures::{self, CompletingOracle};
use super::stats::{cliffs_delta, wilcoxon_signed_rank, CLIFFS_LARGE, CLIFFS_MEDIUM};
use super::synth::{synth_landscape, SynthSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gbt,
    Fnn,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Gbt => "gbt",
            ModelKind::Fnn => "fnn",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub gbt: GbtParams,
    pub fnn: FnnParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Random,
    Genetic,
    Flash,
    Comsa,
    Nsbs,
    Nsga3,
    Ehvi,
    Tsemo,
    Llm4perf,
}

impl SamplerKind {
    /// Multi-objective samplers run once per repetition for all metrics;
    /// single-objective samplers re-run per metric.
    pub fn is_multi_objective(&self) -> bool {
        matches!(
            self,
            SamplerKind::Llm4perf | SamplerKind::Ehvi | SamplerKind::Tsemo | SamplerKind::Nsga3
        )
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerKind::Random => "random",
            SamplerKind::Genetic => "genetic",
            SamplerKind::Flash => "flash",
            SamplerKind::Comsa => "comsa",
            SamplerKind::Nsbs => "nsbs",
            SamplerKind::Nsga3 => "nsga3",
            SamplerKind::Ehvi => "ehvi",
            SamplerKind::Tsemo => "tsemo",
            SamplerKind::Llm4perf => "llm4perf",
        })
    }
}

/// One sampler requested in an experiment, with optional hyperparameter
/// overrides (unset fields use the documented defaults).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_generators: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_design: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qmc_draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<usize>,
}

impl SamplerSpec {
    pub fn of_kind(kind: SamplerKind) -> Self {
        SamplerSpec {
            kind,
            name: None,
            batch_size: None,
            n_generators: None,
            init_design: None,
            population: None,
            qmc_draws: None,
            subsample: None,
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneRecipe {
    pub keep: Vec<String>,
    #[serde(default)]
    pub defaults: BTreeMap<String, OptionValue>,
}

/// One dataset reference: exactly one of `fixture`, `synth`, or
/// `csv`+`space` must be set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetEntry {
    pub name: Option<String>,
    pub csv: Option<PathBuf>,
    pub space: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
    pub fixture: Option<String>,
    pub directions: BTreeMap<String, Direction>,
    pub pruned: Option<PruneRecipe>,
}

impl DatasetEntry {
    /// Loads/generates the full dataset plus the default pruning recipe for
    /// fixture/synthetic sources.
    pub fn resolve(&self) -> Result<(MeasuredDataset, Option<PruneRecipe>)> {
        let (dataset, default_recipe) = match (&self.fixture, &self.synth, &self.csv, &self.space) {
            (Some(fixture), None, None, None) => {
                let f = fixtures::all_system_fixtures()
                    .into_iter()
                    .find(|f| f.name == fixture)
                    .ok_or_else(|| Error::Precondition(format!("unknown fixture {fixture}")))?;
                let recipe = PruneRecipe {
                    keep: f.keep.iter().cloned().collect(),
                    defaults: f.defaults.clone(),
                };
                let dataset = if f.name == "lrzip" {
                    fixtures::lrzip_dataset()
                } else {
                    // measurements for the non-lrzip fixtures come from a
                    // seeded landscape over the fixture space, with exactly
                    // the pruned-away options insensitive
                    synth_landscape(&SynthSpec {
                        space: f.space.clone(),
                        sensitive: f.keep.clone(),
                        interactions: vec![],
                        noise: 0.0,
                        seed: 0xf1f7,
                        metric_names: ["m1".into(), "m2".into()],
                        system: f.name.into(),
                    })?
                };
                (dataset, Some(recipe))
            }
            (None, Some(synth), None, None) => {
                let recipe = PruneRecipe {
                    keep: synth.sensitive.iter().cloned().collect(),
                    defaults: BTreeMap::new(),
                };
                (synth_landscape(synth)?, Some(recipe))
            }
            (None, None, Some(csv), Some(space)) => (load_dataset(csv, space)?, None),
            _ => {
                return Err(Error::Precondition(
                    "dataset entry must set exactly one of fixture, synth, or csv+space".into(),
                ))
            }
        };
        let dataset = dataset.with_directions(&self.directions);
        Ok((dataset, self.pruned.clone().or(default_recipe)))
    }

    pub fn display_name(&self, dataset: &MeasuredDataset) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| dataset.provenance().system.clone())
    }
}

fn default_budgets() -> Vec<usize> {
    vec![10, 20, 30, 40, 50, 60, 70]
}

fn default_repetitions() -> usize {
    10
}

fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Gbt, ModelKind::Fnn]
}

fn default_reference() -> String {
    "nsga3".into()
}

fn default_enumeration_limit() -> u128 {
    DEFAULT_ENUMERATION_LIMIT
}

/// The experiment specification file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub datasets: Vec<DatasetEntry>,
    pub samplers: Vec<SamplerSpec>,
    #[serde(default = "default_budgets")]
    pub budgets: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub space_mode: SpaceMode,
    #[serde(default = "default_reference")]
    pub reference: String,
    #[serde(default)]
    pub candidate: Option<String>,
    #[serde(default)]
    pub model_params: ModelParams,
    #[serde(default)]
    pub mock_script: Option<PathBuf>,
    /// Directory with one prompt template per role; embedded defaults
    /// otherwise.
    #[serde(default)]
    pub prompt_dir: Option<PathBuf>,
    #[serde(default = "default_enumeration_limit")]
    pub enumeration_limit: u128,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Precondition("no datasets in experiment spec".into()));
        }
        if self.samplers.is_empty() {
            return Err(Error::Precondition("no samplers in experiment spec".into()));
        }
        if self.budgets.is_empty() || self.budgets[0] == 0 {
            return Err(Error::Precondition("budgets must be positive".into()));
        }
        if !self.budgets.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Precondition("budgets must be strictly ascending".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Precondition("repetitions must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Precondition("no models in experiment spec".into()));
        }
        Ok(())
    }

    /// Number of model trainings the protocol will schedule.
    pub fn planned_trainings(&self, metrics_per_dataset: usize) -> usize {
        self.datasets.len()
            * self.samplers.len()
            * self.budgets.len()
            * self.repetitions
            * self.models.len()
            * metrics_per_dataset
    }

    pub fn candidate_sampler(&self) -> String {
        if let Some(c) = &self.candidate {
            return c.clone();
        }
        self.samplers
            .iter()
            .find(|s| s.kind == SamplerKind::Llm4perf)
            .or_else(|| self.samplers.iter().find(|s| s.display_name() != self.reference))
            .map(|s| s.display_name())
            .unwrap_or_else(|| self.reference.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Degenerate,
    Failed(String),
}

/// One (system, metric, model, budget, sampler) cell of the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub system: String,
    pub metric: String,
    pub model: String,
    pub budget: usize,
    pub sampler: String,
    pub per_repetition: Vec<f64>,
    pub mean: Option<f64>,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub improvement_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cliffs_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markers: Option<String>,
    #[serde(default)]
    pub best: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub reference: String,
    pub candidate: String,
    pub samplers: Vec<String>,
    pub cells: Vec<Cell>,
}

impl EvalReport {
    pub fn cell(
        &self,
        system: &str,
        metric: &str,
        model: &str,
        budget: usize,
        sampler: &str,
    ) -> Option<&Cell> {
        self.cells.iter().find(|c| {
            c.system == system
                && c.metric == metric
                && c.model == model
                && c.budget == budget
                && c.sampler == sampler
        })
    }

    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.status == CellStatus::Ok)
    }
}

/// Runs the full protocol over every dataset × sampler × budget ×
/// repetition. Pruned-space samples are completed via pinned defaults,
/// models train on the k sampled rows, and the test set is every remaining
/// full-space configuration. Failures are recorded per cell; the run
/// continues.
pub fn run_protocol(spec: &ExperimentSpec, mock: Option<&MockScript>) -> Result<EvalReport> {
    spec.validate()?;
    let mut cells = Vec::new();
    for entry in &spec.datasets {
        let (full, recipe) = entry.resolve()?;
        let system = entry.display_name(&full);
        let sampling_space = match spec.space_mode {
            SpaceMode::Full => full.space().clone(),
            SpaceMode::Pruned => {
                let recipe = recipe.ok_or_else(|| {
                    Error::Precondition(format!("dataset {system} has no pruning recipe"))
                })?;
                let keep = recipe.keep.iter().cloned().collect();
                let mut defaults = recipe.defaults.clone();
                for opt in full.space().options() {
                    if !recipe.keep.contains(&opt.name) {
                        defaults
                            .entry(opt.name.clone())
                            .or_insert_with(|| opt.pin_default().expect("space options have values"));
                    }
                }
                prune_space(full.space(), &keep, &defaults)?
            }
        };
        let pool = CandidatePool::new(full.space(), spec.enumeration_limit)?;
        let metric_values: BTreeMap<String, Vec<f64>> = full
            .metrics()
            .iter()
            .map(|m| {
                let values = pool
                    .configs
                    .iter()
                    .map(|c| full.metrics_of(c).map(|row| row[&m.name]))
                    .collect::<Result<Vec<f64>>>()?;
                Ok((m.name.clone(), values))
            })
            .collect::<Result<_>>()?;

        for sampler in &spec.samplers {
            for &budget in &spec.budgets {
                cells.extend(run_cell_group(
                    spec,
                    mock,
                    &full,
                    &system,
                    &sampling_space,
                    &pool,
                    &metric_values,
                    sampler,
                    budget,
                ));
            }
        }
    }
    annotate(spec, &mut cells)?;
    Ok(EvalReport {
        reference: spec.reference.clone(),
        candidate: spec.candidate_sampler(),
        samplers: spec.samplers.iter().map(SamplerSpec::display_name).collect(),
        cells,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_cell_group(
    spec: &ExperimentSpec,
    mock: Option<&MockScript>,
    full: &MeasuredDataset,
    system: &str,
    sampling_space: &ConfigSpace,
    pool: &CandidatePool,
    metric_values: &BTreeMap<String, Vec<f64>>,
    sampler: &SamplerSpec,
    budget: usize,
) -> Vec<Cell> {
    let metrics = full.metrics().to_vec();
    let mut per_cell: BTreeMap<(String, ModelKind), Vec<f64>> = BTreeMap::new();
    let mut degenerate = false;
    let mut failure: Option<String> = None;

    'reps: for rep in 0..spec.repetitions {
        let seed = spec.seed + rep as u64;
        // multi-objective samplers select one set for all metrics
        let shared: Option<Vec<usize>> = if sampler.kind.is_multi_objective() {
            match sample_train_indices(spec, mock, full, sampling_space, pool, sampler, budget, seed, None) {
                Ok(idx) => Some(idx),
                Err(e) => {
                    failure = Some(e.to_string());
                    break 'reps;
                }
            }
        } else {
            None
        };
        for metric in &metrics {
            let train = match &shared {
                Some(idx) => idx.clone(),
                None => match sample_train_indices(
                    spec,
                    mock,
                    full,
                    sampling_space,
                    pool,
                    sampler,
                    budget,
                    seed,
                    Some(metric),
                ) {
                    Ok(idx) => idx,
                    Err(e) => {
                        failure = Some(e.to_string());
                        break 'reps;
                    }
                },
            };
            if train.len() == pool.len() {
                degenerate = true;
                continue;
            }
            let in_train: std::collections::HashSet<usize> = train.iter().copied().collect();
            let test: Vec<usize> = (0..pool.len()).filter(|i| !in_train.contains(i)).collect();
            let x_train: Vec<Vec<f64>> = train.iter().map(|&i| pool.encodings[i].clone()).collect();
            let y_all = &metric_values[&metric.name];
            let y_train: Vec<f64> = train.iter().map(|&i| y_all[i]).collect();
            let x_test: Vec<Vec<f64>> = test.iter().map(|&i| pool.encodings[i].clone()).collect();
            let y_test: Vec<f64> = test.iter().map(|&i| y_all[i]).collect();
            for &model_kind in &spec.models {
                match train_and_score(spec, model_kind, &x_train, &y_train, &x_test, &y_test, seed) {
                    Ok(value) => per_cell
                        .entry((metric.name.clone(), model_kind))
                        .or_default()
                        .push(value),
                    Err(e) => {
                        failure = Some(e.to_string());
                        break 'reps;
                    }
                }
            }
        }
    }

    let mut cells = Vec::new();
    for metric in &metrics {
        for &model_kind in &spec.models {
            let reps = per_cell
                .remove(&(metric.name.clone(), model_kind))
                .unwrap_or_default();
            let status = if let Some(msg) = &failure {
                CellStatus::Failed(msg.clone())
            } else if degenerate && reps.is_empty() {
                CellStatus::Degenerate
            } else {
                CellStatus::Ok
            };
            let mean = if reps.is_empty() || status != CellStatus::Ok {
                None
            } else {
                Some(reps.iter().sum::<f64>() / reps.len() as f64)
            };
            cells.push(Cell {
                system: system.to_string(),
                metric: metric.name.clone(),
                model: model_kind.to_string(),
                budget,
                sampler: sampler.display_name(),
                per_repetition: reps,
                mean,
                status,
                improvement_pct: None,
                p_value: None,
                cliffs_delta: None,
                markers: None,
                best: false,
            });
        }
    }
    cells
}

fn train_and_score(
    spec: &ExperimentSpec,
    model_kind: ModelKind,
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_test: &[Vec<f64>],
    y_test: &[f64],
    seed: u64,
) -> Result<f64> {
    let model = match model_kind {
        ModelKind::Gbt => PerfModel::Gbt(train_gbt(x_train, y_train, &spec.model_params.gbt)?),
        ModelKind::Fnn => {
            let params = FnnParams {
                seed,
                ..spec.model_params.fnn.clone()
            };
            PerfModel::Fnn(train_fnn(x_train, y_train, &params)?)
        }
    };
    rmse(&model.predict(x_test)?, y_test)
}

/// Result of [`dispatch_sampler`]: the plain contract outcome, or the full
/// pipeline provenance for the LLM sampler.
pub enum DispatchedOutcome {
    Plain(crate::sampler::SamplerOutcome),
    Pipeline(crate::pipeline::PipelineOutcome),
}

impl DispatchedOutcome {
    pub fn outcome(&self) -> &crate::sampler::SamplerOutcome {
        match self {
            DispatchedOutcome::Plain(o) => o,
            DispatchedOutcome::Pipeline(p) => &p.outcome,
        }
    }
}

/// Runs one sampler invocation against the given sampling space and oracle.
/// `metric` selects the objective for single-objective samplers; the LLM
/// sampler needs `mock` (and records a transcript when `sink` is given).
#[allow(clippy::too_many_arguments)]
pub fn dispatch_sampler(
    sampler: &SamplerSpec,
    sampling_space: &ConfigSpace,
    budget: usize,
    seed: u64,
    oracle: &dyn crate::sampler::MeasurementOracle,
    objectives: &ObjectiveSpec,
    metric: Option<&MetricSpec>,
    mock: Option<&MockScript>,
    templates: Option<&PromptTemplates>,
    enumeration_limit: u128,
    sink: Option<&crate::gateway::TranscriptSink>,
) -> Result<DispatchedOutcome> {
    let limit = enumeration_limit;
    let outcome = match sampler.kind {
        SamplerKind::Random => sample_random(sampling_space, budget, seed)?,
        SamplerKind::Nsbs => sample_nsbs(
            sampling_space,
            budget,
            seed,
            &NsbsParams {
                enumeration_limit: limit,
            },
        )?,
        SamplerKind::Genetic => {
            let mut params = GeneticParams {
                enumeration_limit: limit,
                ..Default::default()
            };
            if let Some(p) = sampler.population {
                params.population = p;
            }
            sample_genetic(sampling_space, budget, seed, oracle, required_metric(metric)?, &params)?
        }
        SamplerKind::Flash => {
            let mut params = FlashParams {
                enumeration_limit: limit,
                ..Default::default()
            };
            if let Some(i) = sampler.init_design {
                params.init_design = i;
            }
            sample_flash(sampling_space, budget, seed, oracle, required_metric(metric)?, &params)?
        }
        SamplerKind::Comsa => {
            let mut params = ComsaParams {
                enumeration_limit: limit,
                ..Default::default()
            };
            if let Some(i) = sampler.init_design {
                params.init_design = i;
            }
            sample_comsa(sampling_space, budget, seed, oracle, required_metric(metric)?, &params)?
        }
        SamplerKind::Nsga3 => {
            let mut params = Nsga3Params {
                enumeration_limit: limit,
                ..Default::default()
            };
            if let Some(p) = sampler.population {
                params.population = p;
            }
            sample_nsga3(sampling_space, budget, seed, oracle, objectives, &params)?
        }
        SamplerKind::Ehvi => {
            let mut params = EhviParams {
                enumeration_limit: limit,
                ..Default::default()
            };
            if let Some(i) = sampler.init_design {
                params.init_design = i;
            }
            if let Some(q) = sampler.qmc_draws {
                params.qmc_draws = q;
            }
            sample_ehvi(sampling_space, budget, seed, oracle, objectives, &params)?
        }
        SamplerKind::Tsemo => {
            let mut params = TsemoParams {
                enumeration_limit: limit,
                ..Default::default()
            };
            if let Some(i) = sampler.init_design {
                params.init_design = i;
            }
            if let Some(s) = sampler.subsample {
                params.subsample = s;
            }
            sample_tsemo(sampling_space, budget, seed, oracle, objectives, &params)?
        }
        SamplerKind::Llm4perf => {
            let mock = mock.ok_or_else(|| {
                Error::Precondition("llm4perf sampler needs a mock script (or live endpoint)".into())
            })?;
            let batch = sampler
                .batch_size
                .unwrap_or(SamplingBudget::DEFAULT_BATCH_SIZE)
                .min(budget);
            let n_generators = sampler.n_generators.unwrap_or(SamplingBudget::DEFAULT_GENERATORS);
            let budget = SamplingBudget::new(budget, batch, n_generators)?;
            let backends = PipelineBackends::shared(mock, n_generators);
            let docs = sampling_space.options().to_vec();
            let config = LoopConfig {
                pipeline: PipelineConfig {
                    enumeration_limit: limit,
                    templates: templates.cloned().unwrap_or_default(),
                    ..Default::default()
                },
                seed,
                metrics: objectives.metrics().to_vec(),
            };
            let pipeline = run_sampling_loop(
                sampling_space,
                &docs,
                &budget,
                oracle,
                &backends,
                &config,
                sink,
            )?;
            return Ok(DispatchedOutcome::Pipeline(pipeline));
        }
    };
    Ok(DispatchedOutcome::Plain(outcome))
}

/// Runs one sampler invocation and maps the sampled configurations
/// (completed to full-space form) to dataset row indices.
#[allow(clippy::too_many_arguments)]
fn sample_train_indices(
    spec: &ExperimentSpec,
    mock: Option<&MockScript>,
    full: &MeasuredDataset,
    sampling_space: &ConfigSpace,
    pool: &CandidatePool,
    sampler: &SamplerSpec,
    budget: usize,
    seed: u64,
    metric: Option<&MetricSpec>,
) -> Result<Vec<usize>> {
    let oracle = CompletingOracle {
        dataset: full,
        sampling_space,
    };
    let objectives = ObjectiveSpec::new(full.metrics().to_vec())?;
    let oracle_ref: &dyn crate::sampler::MeasurementOracle = match sampler.kind {
        // the pipeline completes configurations itself before measuring
        SamplerKind::Llm4perf => full,
        _ => &oracle,
    };
    let templates = spec
        .prompt_dir
        .as_deref()
        .map(PromptTemplates::from_dir)
        .transpose()?;
    let dispatched = dispatch_sampler(
        sampler,
        sampling_space,
        budget,
        seed,
        oracle_ref,
        &objectives,
        metric,
        mock,
        templates.as_ref(),
        spec.enumeration_limit,
        None,
    )?;
    dispatched
        .outcome()
        .sampled
        .iter()
        .map(|cfg| {
            let completed = sampling_space.complete(cfg);
            pool.index_of(&completed).ok_or_else(|| {
                Error::Oracle(format!("sampled configuration {completed} missing from dataset"))
            })
        })
        .collect()
}

fn required_metric(metric: Option<&MetricSpec>) -> Result<&MetricSpec> {
    metric.ok_or_else(|| Error::Precondition("single-objective sampler needs a metric".into()))
}

/// Second pass: improvement/p/δ/markers against the reference sampler and
/// best-cell flags per (system, metric, model, budget) row.
fn annotate(spec: &ExperimentSpec, cells: &mut [Cell]) -> Result<()> {
    let reference = spec.reference.clone();
    let groups: Vec<(String, String, String, usize)> = {
        let mut seen = std::collections::BTreeSet::new();
        cells
            .iter()
            .filter_map(|c| {
                let key = (c.system.clone(), c.metric.clone(), c.model.clone(), c.budget);
                seen.insert(key.clone()).then_some(key)
            })
            .collect()
    };
    for (system, metric, model, budget) in groups {
        let in_group = |c: &Cell| {
            c.system == system && c.metric == metric && c.model == model && c.budget == budget
        };
        let reference_cell = cells
            .iter()
            .find(|c| in_group(c) && c.sampler == reference)
            .cloned();
        let best_mean = cells
            .iter()
            .filter(|c| in_group(c) && c.status == CellStatus::Ok)
            .filter_map(|c| c.mean)
            .fold(f64::INFINITY, f64::min);
        for cell in cells.iter_mut().filter(|c| in_group(c)) {
            if let Some(mean) = cell.mean {
                if cell.status == CellStatus::Ok && mean == best_mean {
                    cell.best = true;
                }
            }
            let Some(reference_cell) = &reference_cell else {
                continue;
            };
            if cell.sampler == reference || cell.status != CellStatus::Ok {
                continue;
            }
            let (Some(ref_mean), Some(mean)) = (reference_cell.mean, cell.mean) else {
                continue;
            };
            if ref_mean != 0.0 {
                cell.improvement_pct = Some((ref_mean - mean) / ref_mean * 100.0);
            }
            if cell.per_repetition.len() < 2
                || cell.per_repetition.len() != reference_cell.per_repetition.len()
            {
                cell.markers = Some("n/a".into());
                continue;
            }
            let p = wilcoxon_signed_rank(&cell.per_repetition, &reference_cell.per_repetition)?;
            let delta = cliffs_delta(&reference_cell.per_repetition, &cell.per_repetition)?;
            cell.p_value = Some(p);
            cell.cliffs_delta = Some(delta);
            cell.markers = Some(markers_for(p, delta));
        }
    }
    Ok(())
}

/// `*` when p < 0.05; `M`/`L` for medium/large |δ|.
pub fn markers_for(p: f64, delta: f64) -> String {
    let mut out = String::new();
    if p < 0.05 {
        out.push('*');
    }
    if delta.abs() >= CLIFFS_LARGE {
        out.push('L');
    } else if delta.abs() >= CLIFFS_MEDIUM {
        out.push('M');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::{ConfigOption, OptionKind};
    use std::collections::BTreeSet;

    fn tiny_synth(seed: u64) -> SynthSpec {
        let space = ConfigSpace::new(
            vec![
                ConfigOption::new("a", OptionKind::NumericDiscrete, (0..4).map(OptionValue::Int).collect())
                    .unwrap(),
                ConfigOption::new("b", OptionKind::NumericDiscrete, (0..4).map(OptionValue::Int).collect())
                    .unwrap(),
                ConfigOption::new("c", OptionKind::NumericDiscrete, (0..4).map(OptionValue::Int).collect())
                    .unwrap(),
            ],
            vec![],
        )
        .unwrap();
        SynthSpec {
            space,
            sensitive: BTreeSet::from(["a".to_string(), "b".to_string()]),
            interactions: vec![],
            noise: 0.05,
            seed,
            metric_names: ["m1".into(), "m2".into()],
            system: "tiny".into(),
        }
    }

    fn quick_spec() -> ExperimentSpec {
        ExperimentSpec {
            datasets: vec![DatasetEntry {
                synth: Some(tiny_synth(3)),
                ..Default::default()
            }],
            samplers: vec![
                SamplerSpec::of_kind(SamplerKind::Random),
                SamplerSpec::of_kind(SamplerKind::Nsbs),
            ],
            budgets: vec![8, 12],
            repetitions: 3,
            seed: 0,
            models: vec![ModelKind::Gbt],
            space_mode: SpaceMode::Full,
            reference: "nsbs".into(),
            candidate: None,
            model_params: ModelParams {
                gbt: GbtParams {
                    rounds: 20,
                    ..Default::default()
                },
                fnn: FnnParams::default(),
            },
            mock_script: None,
            prompt_dir: None,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }

    #[test]
    fn protocol_produces_complete_cells() {
        let spec = quick_spec();
        let report = run_protocol(&spec, None).unwrap();
        // 1 dataset × 2 metrics × 1 model × 2 budgets × 2 samplers
        assert_eq!(report.cells.len(), 8);
        assert!(report.all_ok());
        for cell in &report.cells {
            assert_eq!(cell.per_repetition.len(), 3);
            assert!(cell.mean.unwrap() >= 0.0);
        }
        // reference cells never annotate themselves
        assert!(report
            .cells
            .iter()
            .filter(|c| c.sampler == "nsbs")
            .all(|c| c.improvement_pct.is_none()));
        // non-reference cells carry markers
        assert!(report
            .cells
            .iter()
            .filter(|c| c.sampler == "random")
            .all(|c| c.markers.is_some()));
        // exactly one best per row group
        for budget in [8, 12] {
            for metric in ["m1", "m2"] {
                let best: Vec<_> = report
                    .cells
                    .iter()
                    .filter(|c| c.budget == budget && c.metric == metric && c.best)
                    .collect();
                assert_eq!(best.len(), 1, "budget {budget} metric {metric}");
            }
        }
    }

    #[test]
    fn protocol_is_seed_deterministic() {
        let spec = quick_spec();
        let a = run_protocol(&spec, None).unwrap();
        let b = run_protocol(&spec, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_budget_marks_cells() {
        let mut spec = quick_spec();
        spec.budgets = vec![64]; // whole space
        spec.samplers = vec![SamplerSpec::of_kind(SamplerKind::Random)];
        spec.reference = "random".into();
        let report = run_protocol(&spec, None).unwrap();
        assert!(report
            .cells
            .iter()
            .all(|c| c.status == CellStatus::Degenerate && c.mean.is_none()));
    }

    #[test]
    fn single_repetition_marks_na() {
        let mut spec = quick_spec();
        spec.repetitions = 1;
        let report = run_protocol(&spec, None).unwrap();
        assert!(report
            .cells
            .iter()
            .filter(|c| c.sampler == "random")
            .all(|c| c.markers.as_deref() == Some("n/a") && c.p_value.is_none()));
    }

    #[test]
    fn oversized_budget_fails_cell_but_run_continues() {
        let mut spec = quick_spec();
        spec.budgets = vec![65]; // cardinality is 64
        let report = run_protocol(&spec, None).unwrap();
        assert!(report
            .cells
            .iter()
            .all(|c| matches!(c.status, CellStatus::Failed(_))));
    }

    #[test]
    fn pruned_mode_samples_in_pruned_space() {
        let mut spec = quick_spec();
        spec.space_mode = SpaceMode::Pruned;
        spec.budgets = vec![8];
        let report = run_protocol(&spec, None).unwrap();
        assert!(report.all_ok());
        // pruned space has 16 configurations; budget 8 leaves a test set
        for cell in &report.cells {
            assert_eq!(cell.per_repetition.len(), 3);
        }
    }

    #[test]
    fn spec_validation_catches_misuse() {
        let mut spec = quick_spec();
        spec.samplers.clear();
        assert!(spec.validate().is_err());
        let mut spec = quick_spec();
        spec.budgets = vec![10, 10];
        assert!(spec.validate().is_err());
        let mut spec = quick_spec();
        spec.repetitions = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn planned_trainings_multiplies_dimensions() {
        let spec = ExperimentSpec {
            datasets: vec![DatasetEntry::default()],
            samplers: (0..9).map(|_| SamplerSpec::of_kind(SamplerKind::Random)).collect(),
            budgets: default_budgets(),
            repetitions: 10,
            seed: 0,
            models: default_models(),
            space_mode: SpaceMode::Full,
            reference: default_reference(),
            candidate: None,
            model_params: ModelParams::default(),
            mock_script: None,
            prompt_dir: None,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        };
        assert_eq!(spec.planned_trainings(2), 7 * 10 * 2 * 2 * 9);
    }

    #[test]
    fn markers_rules() {
        assert_eq!(markers_for(0.03, 0.50), "*L");
        assert_eq!(markers_for(0.03, -0.40), "*M");
        assert_eq!(markers_for(0.2, 0.50), "L");
        assert_eq!(markers_for(0.2, 0.1), "");
    }
}
