//! The five-stage LLM sampling pipeline: option filtering, trend analysis,
//! strategy design, parallel candidate generation, frequency voting, and the
//! budgeted loop that drives them until the sampling budget is spent.

mod history;
mod prompts;

pub use history::{HistoryRecord, MeasurementHistory};
pub use prompts::PromptTemplates;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config_space::{
    canonicalize_configuration, prune_space, validate_configuration, ConfigOption, ConfigSpace,
    Configuration, OptionValue, Verdict, DEFAULT_ENUMERATION_LIMIT,
};
use crate::error::{Error, Result};
use crate::gateway::{
    extract_structured, ChatBackend, ChatRequest, FieldKind, RecordingBackend, RoleTag, Schema,
    TranscriptSink,
};
use crate::sampler::{
    random_unmeasured, CandidatePool, MeasurementOracle, MetricSpec, SamplerOutcome,
};
use prompts::{render_space, substitute};

/// Sampling budget: total measurements, candidates per iteration
/// (N_candidates), and parallel generators (N_generators).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingBudget {
    pub total: usize,
    pub batch_size: usize,
    pub n_generators: usize,
}

impl SamplingBudget {
    pub const DEFAULT_BATCH_SIZE: usize = 7;
    pub const DEFAULT_GENERATORS: usize = 5;

    pub fn new(total: usize, batch_size: usize, n_generators: usize) -> Result<Self> {
        if total == 0 || batch_size == 0 || n_generators == 0 {
            return Err(Error::Precondition("budget fields must be positive".into()));
        }
        if batch_size > total {
            return Err(Error::Precondition(format!(
                "batch_size {batch_size} exceeds total {total}"
            )));
        }
        Ok(SamplingBudget {
            total,
            batch_size,
            n_generators,
        })
    }

    /// Default batch of 7 and 5 generators, capped by the total.
    pub fn with_defaults(total: usize) -> Result<Self> {
        Self::new(
            total,
            Self::DEFAULT_BATCH_SIZE.min(total.max(1)),
            Self::DEFAULT_GENERATORS,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitivityLevel {
    Low,
    High,
    Interacting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    /// Option name or `option=value` combination.
    pub subject: String,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub option: String,
    pub sensitivity: SensitivityLevel,
    pub note: String,
}

/// Analyzer output: free-text narrative plus the structured parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDoc {
    pub narrative: String,
    pub anomalies: Vec<Anomaly>,
    pub hypotheses: Vec<Hypothesis>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusRegion {
    pub option: String,
    pub values: Vec<OptionValue>,
}

/// Designer output: a natural-language plan with soft constraints for the
/// generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyDoc {
    pub narrative: String,
    pub focus_regions: Vec<FocusRegion>,
    pub deprioritized: Vec<(String, OptionValue)>,
    pub iteration: u32,
}

/// Backends per pipeline role. Generators may differ per slot; by default
/// every role shares one backend.
pub struct PipelineBackends<'a> {
    pub filter: &'a dyn ChatBackend,
    pub analyzer: &'a dyn ChatBackend,
    pub designer: &'a dyn ChatBackend,
    pub generators: Vec<&'a dyn ChatBackend>,
}

impl<'a> PipelineBackends<'a> {
    pub fn shared(backend: &'a dyn ChatBackend, n_generators: usize) -> Self {
        PipelineBackends {
            filter: backend,
            analyzer: backend,
            designer: backend,
            generators: vec![backend; n_generators.max(1)],
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub templates: PromptTemplates,
    pub model_id: String,
    /// Filter/analyzer/designer temperature.
    pub reasoning_temperature: f64,
    /// Generator temperature (higher for diversity).
    pub generator_temperature: f64,
    /// History rows serialized into analyzer prompts (most recent kept).
    pub history_rows: usize,
    pub enumeration_limit: u128,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            templates: PromptTemplates::default(),
            model_id: "mock".into(),
            reasoning_temperature: 0.2,
            generator_temperature: 0.8,
            history_rows: 60,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// Per-option outcome of the filtering stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterRationale {
    pub option: String,
    pub kept: bool,
    pub note: String,
}

/// Queries the LLM once with all option descriptions and prunes the space to
/// the returned keep-list. Unknown names are ignored with a warning; an
/// empty effective keep-list keeps every option (fail-open). Dropped options
/// pin to their documented default, else their first value.
pub fn filter_options(
    space: &ConfigSpace,
    docs: &[ConfigOption],
    backend: &dyn ChatBackend,
    config: &PipelineConfig,
) -> Result<(ConfigSpace, Vec<FilterRationale>)> {
    for opt in space.options() {
        if !docs.iter().any(|d| d.name == opt.name) {
            return Err(Error::Precondition(format!(
                "option {} missing from documentation",
                opt.name
            )));
        }
    }
    let prompt = substitute(
        &config.templates.filter,
        &[("space", &render_space(space, Some(docs)))],
    );
    let request = ChatRequest::system_user(
        RoleTag::Filter,
        &config.model_id,
        0,
        "You decide which configuration options matter for performance.",
        prompt,
        config.reasoning_temperature,
    )?;
    let response = backend.complete_chat(&request)?;
    let value = extract_structured(
        &response.text,
        &Schema::new().require("keep", FieldKind::StringArray),
    )?;
    let mut keep: BTreeSet<String> = BTreeSet::new();
    for name in value["keep"].as_array().expect("schema-checked") {
        let name = name.as_str().expect("schema-checked");
        if space.option(name).is_some() {
            keep.insert(name.to_string());
        } else {
            log::warn!("filter keep-list names unknown option {name}; ignored");
        }
    }
    if keep.is_empty() {
        log::warn!("filter produced no usable keep-list; keeping all options (fail-open)");
        keep = space.options().iter().map(|o| o.name.clone()).collect();
    }
    let llm_notes: HashMap<String, String> = value
        .get("rationale")
        .and_then(|r| r.as_object())
        .map(|m| {
            m.iter()
                .filter_map(|(k, v)| v.as_str().map(|s| (k.clone(), s.to_string())))
                .collect()
        })
        .unwrap_or_default();

    let mut defaults = BTreeMap::new();
    for opt in space.options() {
        if keep.contains(&opt.name) {
            continue;
        }
        let documented = docs
            .iter()
            .find(|d| d.name == opt.name)
            .and_then(|d| d.default.clone())
            .and_then(|d| opt.resolve_value(&d).cloned());
        let pinned = documented
            .or_else(|| opt.pin_default())
            .expect("space options have values");
        defaults.insert(opt.name.clone(), pinned);
    }
    let pruned = prune_space(space, &keep, &defaults)?;
    let rationale = space
        .options()
        .iter()
        .map(|opt| {
            let kept = keep.contains(&opt.name);
            let note = llm_notes.get(&opt.name).cloned().unwrap_or_else(|| {
                if kept {
                    "named performance-sensitive".into()
                } else {
                    format!("dropped; pinned to {}", defaults[&opt.name])
                }
            });
            FilterRationale {
                option: opt.name.clone(),
                kept,
                note,
            }
        })
        .collect();
    Ok((pruned, rationale))
}

/// Serializes the measurement history into the analyzer prompt and parses
/// the structured anomalies/hypotheses out of the reply. Entries naming
/// options outside the active space are dropped with a warning.
pub fn analyze_trends(
    history: &MeasurementHistory,
    metrics: &[MetricSpec],
    space: &ConfigSpace,
    backend: &dyn ChatBackend,
    config: &PipelineConfig,
    iteration: u32,
) -> Result<AnalysisDoc> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let metric_line = metrics
        .iter()
        .map(|m| format!("{} ({:?})", m.name, m.direction).to_lowercase())
        .collect::<Vec<_>>()
        .join(", ");
    let history_text = format!(
        "Metrics: {metric_line}\n{}",
        history.to_prompt_table(config.history_rows)
    );
    let prompt = substitute(
        &config.templates.analyzer,
        &[
            ("space", &render_space(space, None)),
            ("history", &history_text),
        ],
    );
    let request = ChatRequest::system_user(
        RoleTag::Analyzer,
        &config.model_id,
        iteration,
        "You analyze performance measurements for trends and anomalies.",
        prompt,
        config.reasoning_temperature,
    )?;
    let response = backend.complete_chat(&request)?;
    let value = extract_structured(
        &response.text,
        &Schema::new()
            .require("anomalies", FieldKind::Array)
            .require("hypotheses", FieldKind::Array),
    )?;

    let known = |name: &str| space.option(name).is_some();
    let mut anomalies = Vec::new();
    for entry in value["anomalies"].as_array().expect("schema-checked") {
        let subject = entry
            .get("subject")
            .or_else(|| entry.get("option"))
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        let named_option = subject.split('=').next().unwrap_or("").trim();
        if !known(named_option) {
            log::warn!("analyzer anomaly names unknown option {named_option:?}; dropped");
            continue;
        }
        let note = entry
            .get("note")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        anomalies.push(Anomaly { subject, note });
    }
    let mut hypotheses = Vec::new();
    for entry in value["hypotheses"].as_array().expect("schema-checked") {
        let option = entry
            .get("option")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        if !known(&option) {
            log::warn!("analyzer hypothesis names unknown option {option:?}; dropped");
            continue;
        }
        let sensitivity = match entry.get("sensitivity").and_then(|v| v.as_str()) {
            Some("low") => SensitivityLevel::Low,
            Some("high") => SensitivityLevel::High,
            Some("interacting") => SensitivityLevel::Interacting,
            other => {
                log::warn!("analyzer hypothesis for {option} has invalid sensitivity {other:?}; dropped");
                continue;
            }
        };
        let note = entry
            .get("note")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        hypotheses.push(Hypothesis {
            option,
            sensitivity,
            note,
        });
    }
    Ok(AnalysisDoc {
        narrative: response.text,
        anomalies,
        hypotheses,
    })
}

fn render_analysis(doc: &AnalysisDoc) -> String {
    let mut out = doc.narrative.clone();
    if !doc.anomalies.is_empty() {
        out.push_str("\n\nAnomalies:\n");
        for a in &doc.anomalies {
            out.push_str(&format!("- {}: {}\n", a.subject, a.note));
        }
    }
    if !doc.hypotheses.is_empty() {
        out.push_str("\nHypotheses:\n");
        for h in &doc.hypotheses {
            out.push_str(&format!("- {} ({:?}): {}\n", h.option, h.sensitivity, h.note));
        }
    }
    out
}

const FIRST_ITERATION_BRIEF: &str = "No measurements are available yet. Propose a coverage-first \
exploration strategy: span every categorical choice and include extreme values of the numeric \
options.";

/// Asks the designer for a sampling plan. At iteration 1 (no analysis) the
/// prompt requests coverage-first exploration; later iterations refine the
/// supplied analysis. Structured parts naming unknown options or
/// inadmissible values are dropped with warnings.
pub fn design_strategy(
    analysis: Option<&AnalysisDoc>,
    space: &ConfigSpace,
    budget_remaining: usize,
    iteration: u32,
    backend: &dyn ChatBackend,
    config: &PipelineConfig,
) -> Result<StrategyDoc> {
    if budget_remaining == 0 {
        return Err(Error::Precondition("no budget remaining".into()));
    }
    if iteration == 0 {
        return Err(Error::Precondition("iterations are 1-based".into()));
    }
    let analysis_text = match analysis {
        Some(doc) => render_analysis(doc),
        None => FIRST_ITERATION_BRIEF.to_string(),
    };
    let prompt = substitute(
        &config.templates.designer,
        &[
            ("space", &render_space(space, None)),
            ("analysis", &analysis_text),
            ("n", &budget_remaining.to_string()),
        ],
    );
    let request = ChatRequest::system_user(
        RoleTag::Designer,
        &config.model_id,
        iteration,
        "You design configuration-sampling strategies.",
        prompt,
        config.reasoning_temperature,
    )?;
    let response = backend.complete_chat(&request)?;
    let value = extract_structured(
        &response.text,
        &Schema::new()
            .require("focus_regions", FieldKind::Array)
            .require("deprioritized", FieldKind::Array),
    )?;

    let mut focus_regions: Vec<FocusRegion> = Vec::new();
    for entry in value["focus_regions"].as_array().expect("schema-checked") {
        let Some(name) = entry.get("option").and_then(|v| v.as_str()) else {
            continue;
        };
        let Some(option) = space.option(name) else {
            log::warn!("strategy focus region names unknown option {name}; dropped");
            continue;
        };
        let mut values = Vec::new();
        if let Some(raw) = entry.get("values").and_then(|v| v.as_array()) {
            for rv in raw {
                match serde_json::from_value::<OptionValue>(rv.clone())
                    .ok()
                    .and_then(|v| option.resolve_value(&v).cloned())
                {
                    Some(v) => values.push(v),
                    None => log::warn!("focus value {rv} inadmissible for {name}; dropped"),
                }
            }
        }
        if values.is_empty() {
            log::warn!("focus region for {name} has no admissible values; dropped");
            continue;
        }
        focus_regions.push(FocusRegion {
            option: name.to_string(),
            values,
        });
    }
    let mut deprioritized: Vec<(String, OptionValue)> = Vec::new();
    for entry in value["deprioritized"].as_array().expect("schema-checked") {
        let Some(name) = entry.get("option").and_then(|v| v.as_str()) else {
            continue;
        };
        let Some(option) = space.option(name) else {
            log::warn!("strategy deprioritizes unknown option {name}; dropped");
            continue;
        };
        if focus_regions.iter().any(|f| f.option == name) {
            log::warn!("option {name} appears in both strategy lists; keeping the focus entry");
            continue;
        }
        let pinned = entry
            .get("value")
            .and_then(|v| serde_json::from_value::<OptionValue>(v.clone()).ok())
            .and_then(|v| option.resolve_value(&v).cloned());
        match pinned {
            Some(v) => deprioritized.push((name.to_string(), v)),
            None => log::warn!("deprioritized value for {name} inadmissible; dropped"),
        }
    }
    Ok(StrategyDoc {
        narrative: response.text,
        focus_regions,
        deprioritized,
        iteration,
    })
}

fn render_strategy(doc: &StrategyDoc) -> String {
    let mut out = doc.narrative.clone();
    if !doc.focus_regions.is_empty() {
        out.push_str("\n\nFocus regions:\n");
        for f in &doc.focus_regions {
            let values = f.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
            out.push_str(&format!("- {}: [{}]\n", f.option, values));
        }
    }
    if !doc.deprioritized.is_empty() {
        out.push_str("\nDeprioritized (pinned):\n");
        for (name, value) in &doc.deprioritized {
            out.push_str(&format!("- {name} = {value}\n"));
        }
    }
    out
}

/// Broadcasts the strategy to all generators concurrently and asks each for
/// `n` configurations. Invalid or constraint-violating candidates are
/// discarded per generator; a failed generator yields an empty list. Errors
/// with [`Error::GenerationExhausted`] only when every list is empty.
pub fn generate_candidates(
    strategy: &StrategyDoc,
    space: &ConfigSpace,
    n: usize,
    backends: &[&dyn ChatBackend],
    config: &PipelineConfig,
) -> Result<Vec<Vec<Configuration>>> {
    generate_candidates_logged(strategy, space, n, backends, config, None)
}

/// [`generate_candidates`] with transcript logging. Calls run concurrently;
/// records are appended after the join in generator-index order so
/// transcripts are deterministic.
pub(crate) fn generate_candidates_logged(
    strategy: &StrategyDoc,
    space: &ConfigSpace,
    n: usize,
    backends: &[&dyn ChatBackend],
    config: &PipelineConfig,
    sink: Option<&TranscriptSink>,
) -> Result<Vec<Vec<Configuration>>> {
    if n == 0 {
        return Err(Error::Precondition("candidate count must be positive".into()));
    }
    if backends.is_empty() {
        return Err(Error::Precondition("at least one generator backend".into()));
    }
    let base_prompt = substitute(
        &config.templates.generator,
        &[
            ("space", &render_space(space, None)),
            ("strategy", &render_strategy(strategy)),
            ("n", &n.to_string()),
        ],
    );
    let total = backends.len();
    type GeneratorResult = (Option<(ChatRequest, crate::gateway::ChatResponse)>, Vec<Configuration>);
    let results: Vec<GeneratorResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = backends
            .iter()
            .enumerate()
            .map(|(index, backend)| {
                let prompt = format!("{base_prompt}\n[generator {} of {total}]", index + 1);
                scope.spawn(move || one_generator(*backend, space, strategy.iteration, prompt, config))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("generator thread")).collect()
    });
    if let Some(sink) = sink {
        for (exchange, _) in &results {
            if let Some((request, response)) = exchange {
                crate::gateway::transcript_log(request, response, sink)?;
            }
        }
    }
    let lists: Vec<Vec<Configuration>> = results.into_iter().map(|(_, list)| list).collect();
    if lists.iter().all(Vec::is_empty) {
        return Err(Error::GenerationExhausted);
    }
    Ok(lists)
}

fn one_generator(
    backend: &dyn ChatBackend,
    space: &ConfigSpace,
    iteration: u32,
    prompt: String,
    config: &PipelineConfig,
) -> (Option<(ChatRequest, crate::gateway::ChatResponse)>, Vec<Configuration>) {
    let request = match ChatRequest::system_user(
        RoleTag::Generator,
        &config.model_id,
        iteration,
        "You emit concrete configurations as JSON.",
        prompt,
        config.generator_temperature,
    ) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("generator request invalid: {e}");
            return (None, Vec::new());
        }
    };
    let response = match backend.complete_chat(&request) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("generator call failed: {e}");
            return (None, Vec::new());
        }
    };
    let value = match extract_structured(
        &response.text,
        &Schema::new().require("configurations", FieldKind::Array),
    ) {
        Ok(v) => v,
        Err(e) => {
            log::warn!("generator output unparseable: {e}");
            return (Some((request, response)), Vec::new());
        }
    };
    let mut list = Vec::new();
    let mut seen = HashSet::new();
    for raw in value["configurations"].as_array().expect("schema-checked") {
        let Ok(assignments) = serde_json::from_value::<BTreeMap<String, OptionValue>>(raw.clone())
        else {
            log::warn!("candidate is not an option→value object; dropped");
            continue;
        };
        let candidate = Configuration::new(assignments);
        let canonical = match canonicalize_configuration(space, &candidate) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("candidate rejected: {e}");
                continue;
            }
        };
        match validate_configuration(space, &canonical) {
            Verdict::Valid => {
                if seen.insert(canonical.clone()) {
                    list.push(canonical);
                }
            }
            Verdict::Invalid(v) => log::warn!("candidate rejected: {v}"),
        }
    }
    (Some((request, response)), list)
}

/// Deduplicates candidates across generator lists, drops already-measured
/// configurations, and ranks by occurrence count (number of generator lists
/// containing the candidate). Ties break by earliest generator index, then
/// earliest position within that generator's list. Returns at most `k`.
pub fn vote_candidates(
    lists: &[Vec<Configuration>],
    already_measured: &HashSet<Configuration>,
    k: usize,
) -> Vec<Configuration> {
    vote_tally(lists, already_measured, k)
        .into_iter()
        .map(|(cfg, _)| cfg)
        .collect()
}

/// [`vote_candidates`] with the occurrence counts attached.
pub fn vote_tally(
    lists: &[Vec<Configuration>],
    already_measured: &HashSet<Configuration>,
    k: usize,
) -> Vec<(Configuration, usize)> {
    struct Tally {
        count: usize,
        generator: usize,
        position: usize,
    }
    let mut tallies: Vec<(Configuration, Tally)> = Vec::new();
    let mut index: HashMap<Configuration, usize> = HashMap::new();
    for (generator, list) in lists.iter().enumerate() {
        let mut seen_here = HashSet::new();
        for (position, cfg) in list.iter().enumerate() {
            if !seen_here.insert(cfg) {
                continue; // within-generator duplicates count once
            }
            match index.get(cfg) {
                Some(&at) => tallies[at].1.count += 1,
                None => {
                    index.insert(cfg.clone(), tallies.len());
                    tallies.push((
                        cfg.clone(),
                        Tally {
                            count: 1,
                            generator,
                            position,
                        },
                    ));
                }
            }
        }
    }
    tallies.retain(|(cfg, _)| !already_measured.contains(cfg));
    tallies.sort_by(|(_, a), (_, b)| {
        b.count
            .cmp(&a.count)
            .then(a.generator.cmp(&b.generator))
            .then(a.position.cmp(&b.position))
    });
    tallies
        .into_iter()
        .take(k)
        .map(|(cfg, t)| (cfg, t.count))
        .collect()
}

/// One loop iteration's provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisDoc>,
    pub strategy: StrategyDoc,
    /// Selected batch in full-space form, measurement order.
    pub batch: Vec<Configuration>,
}

/// Full pipeline result: the sampler outcome plus everything needed to audit
/// and replay the run.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub outcome: SamplerOutcome,
    pub pruned_space: ConfigSpace,
    pub filter_rationale: Vec<FilterRationale>,
    pub iterations: Vec<IterationRecord>,
    pub history: MeasurementHistory,
}

/// On-disk outcome format shared by all samplers; the pipeline fields stay
/// empty for baselines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFile {
    pub sampler: String,
    pub seed: u64,
    pub configurations: Vec<Configuration>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<Vec<IterationRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}

impl OutcomeFile {
    pub fn from_outcome(outcome: &SamplerOutcome) -> Self {
        OutcomeFile {
            sampler: outcome.meta.sampler.clone(),
            seed: outcome.meta.seed,
            configurations: outcome.sampled.clone(),
            notes: outcome.meta.notes.clone(),
            iterations: None,
            transcript: None,
        }
    }

    pub fn from_pipeline(outcome: &PipelineOutcome, transcript: Option<String>) -> Self {
        OutcomeFile {
            sampler: outcome.outcome.meta.sampler.clone(),
            seed: outcome.outcome.meta.seed,
            configurations: outcome.outcome.sampled.clone(),
            notes: outcome.outcome.meta.notes.clone(),
            iterations: Some(outcome.iterations.clone()),
            transcript,
        }
    }
}

/// Loop-level configuration.
#[derive(Clone, Debug)]
pub struct LoopConfig {
    pub pipeline: PipelineConfig,
    pub seed: u64,
    pub metrics: Vec<MetricSpec>,
}

/// Runs the full pipeline: one filtering pass, then iterations of
/// (analyze → design → generate → vote → measure) until exactly
/// `budget.total` distinct configurations have been measured. Voting
/// shortfalls are topped up with seeded uniform-random unmeasured
/// configurations. Sampled configurations are completed to full-space form
/// via the pinned defaults.
pub fn run_sampling_loop(
    space: &ConfigSpace,
    docs: &[ConfigOption],
    budget: &SamplingBudget,
    oracle: &dyn MeasurementOracle,
    backends: &PipelineBackends,
    config: &LoopConfig,
    sink: Option<&TranscriptSink>,
) -> Result<PipelineOutcome> {
    // sequential roles record through a wrapper; the concurrent generators
    // log after each join (in index order) so transcripts are deterministic
    let recorders: Option<(RecordingBackend, RecordingBackend, RecordingBackend)> = sink.map(|s| {
        (
            RecordingBackend::new(backends.filter, s),
            RecordingBackend::new(backends.analyzer, s),
            RecordingBackend::new(backends.designer, s),
        )
    });
    let (filter_b, analyzer_b, designer_b): (&dyn ChatBackend, &dyn ChatBackend, &dyn ChatBackend) =
        match &recorders {
            Some((f, a, d)) => (f, a, d),
            None => (backends.filter, backends.analyzer, backends.designer),
        };
    let generator_bs =
        &backends.generators[..budget.n_generators.min(backends.generators.len()).max(1)];

    let (pruned, filter_rationale) = filter_options(space, docs, filter_b, &config.pipeline)?;
    let cardinality = pruned.cardinality();
    if budget.total as u128 > cardinality {
        return Err(Error::BudgetTooLarge {
            budget: budget.total,
            cardinality,
        });
    }
    let pool = CandidatePool::new(&pruned, config.pipeline.enumeration_limit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = MeasurementHistory::new();
    let mut measured: HashSet<Configuration> = HashSet::new();
    let mut sampled_full: Vec<Configuration> = Vec::with_capacity(budget.total);
    let mut iterations = Vec::new();

    let mut iteration: u32 = 0;
    while measured.len() < budget.total {
        iteration += 1;
        let remaining = budget.total - measured.len();
        let batch_goal = budget.batch_size.min(remaining);

        let analysis = if history.is_empty() {
            None
        } else {
            Some(analyze_trends(
                &history,
                &config.metrics,
                &pruned,
                analyzer_b,
                &config.pipeline,
                iteration,
            )?)
        };
        let strategy = design_strategy(
            analysis.as_ref(),
            &pruned,
            remaining,
            iteration,
            designer_b,
            &config.pipeline,
        )?;
        let lists = match generate_candidates_logged(
            &strategy,
            &pruned,
            budget.batch_size,
            generator_bs,
            &config.pipeline,
            sink,
        ) {
            Ok(lists) => lists,
            Err(Error::GenerationExhausted) => {
                log::warn!("iteration {iteration}: all generators failed; topping up randomly");
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        let mut selected = vote_candidates(&lists, &measured, batch_goal);
        if selected.len() < batch_goal {
            let chosen: HashSet<Configuration> = selected.iter().cloned().collect();
            let taken = |i: usize| {
                measured.contains(&pool.configs[i]) || chosen.contains(&pool.configs[i])
            };
            for idx in random_unmeasured(&pool, &taken, batch_goal - selected.len(), &mut rng) {
                selected.push(pool.configs[idx].clone());
            }
        }

        let mut batch_full = Vec::with_capacity(selected.len());
        for cfg in selected {
            let full = pruned.complete(&cfg);
            let metrics = oracle.measure(&full)?;
            history.push(cfg.clone(), metrics, iteration)?;
            measured.insert(cfg);
            sampled_full.push(full.clone());
            batch_full.push(full);
        }
        iterations.push(IterationRecord {
            iteration,
            analysis,
            strategy,
            batch: batch_full,
        });
    }

    Ok(PipelineOutcome {
        outcome: SamplerOutcome::new("llm4perf", config.seed, sampled_full),
        pruned_space: pruned,
        filter_rationale,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::{enumerate_space, OptionKind};
    use crate::gateway::{IterationPattern, MockScript};

    fn sym(s: &str) -> OptionValue {
        OptionValue::Symbol(s.into())
    }

    fn int(i: i64) -> OptionValue {
        OptionValue::Int(i)
    }

    fn two_option_space() -> ConfigSpace {
        ConfigSpace::new(
            vec![
                ConfigOption::new("algorithm", OptionKind::Categorical, vec![sym("a"), sym("b")]).unwrap(),
                ConfigOption::new("level", OptionKind::NumericDiscrete, vec![int(1), int(2), int(3)])
                    .unwrap(),
            ],
            vec![],
        )
        .unwrap()
    }

    fn docs_for(space: &ConfigSpace) -> Vec<ConfigOption> {
        space.options().to_vec()
    }

    #[test]
    fn filter_drops_complement_of_keep_list() {
        let space = two_option_space();
        let mut script = MockScript::default();
        script.push(
            RoleTag::Filter,
            IterationPattern::At(0),
            None,
            r#"{"keep": ["algorithm"], "rationale": {"algorithm": "drives codec choice"}}"#,
        );
        let (pruned, rationale) =
            filter_options(&space, &docs_for(&space), &script, &PipelineConfig::default()).unwrap();
        assert_eq!(pruned.options().len(), 1);
        assert_eq!(pruned.options()[0].name, "algorithm");
        assert_eq!(pruned.dropped().get("level"), Some(&int(1)));
        assert!(rationale.iter().any(|r| r.option == "algorithm" && r.kept));
        assert!(rationale.iter().any(|r| r.option == "level" && !r.kept));
    }

    #[test]
    fn filter_keep_all_is_identity() {
        let space = two_option_space();
        let mut script = MockScript::default();
        script.push(
            RoleTag::Filter,
            IterationPattern::At(0),
            None,
            r#"{"keep": ["algorithm", "level"]}"#,
        );
        let (pruned, _) =
            filter_options(&space, &docs_for(&space), &script, &PipelineConfig::default()).unwrap();
        assert_eq!(
            enumerate_space(&pruned, 100).unwrap(),
            enumerate_space(&space, 100).unwrap()
        );
    }

    #[test]
    fn filter_fails_open_on_unknown_names() {
        let space = two_option_space();
        let mut script = MockScript::default();
        script.push(RoleTag::Filter, IterationPattern::At(0), None, r#"{"keep": ["ghost"]}"#);
        let (pruned, _) =
            filter_options(&space, &docs_for(&space), &script, &PipelineConfig::default()).unwrap();
        assert_eq!(pruned.options().len(), 2);
    }

    #[test]
    fn filter_uses_documented_default() {
        let space = two_option_space();
        let mut docs = docs_for(&space);
        docs[1] = docs[1].clone().with_default(int(3)).unwrap();
        let mut script = MockScript::default();
        script.push(RoleTag::Filter, IterationPattern::At(0), None, r#"{"keep": ["algorithm"]}"#);
        let (pruned, _) = filter_options(&space, &docs, &script, &PipelineConfig::default()).unwrap();
        assert_eq!(pruned.dropped().get("level"), Some(&int(3)));
    }

    fn seeded_history(space: &ConfigSpace) -> MeasurementHistory {
        let mut history = MeasurementHistory::new();
        for (i, cfg) in enumerate_space(space, 100).unwrap().into_iter().take(4).enumerate() {
            history
                .push(cfg, [("time".to_string(), 20.0 + i as f64)].into(), 1)
                .unwrap();
        }
        history
    }

    #[test]
    fn analyzer_parses_and_validates() {
        let space = two_option_space();
        let history = seeded_history(&space);
        let mut script = MockScript::default();
        script.push(
            RoleTag::Analyzer,
            IterationPattern::At(2),
            None,
            r#"The slow runs share one codec.
{"anomalies": [{"subject": "algorithm=a", "note": "consistently slow"},
               {"subject": "ghost=1", "note": "bogus"}],
 "hypotheses": [{"option": "level", "sensitivity": "low", "note": "flat effect"},
                {"option": "ghost", "sensitivity": "high", "note": "bogus"}]}"#,
        );
        let doc = analyze_trends(
            &history,
            &[MetricSpec::minimize("time")],
            &space,
            &script,
            &PipelineConfig::default(),
            2,
        )
        .unwrap();
        assert_eq!(doc.anomalies.len(), 1);
        assert_eq!(doc.anomalies[0].subject, "algorithm=a");
        assert_eq!(doc.hypotheses.len(), 1);
        assert_eq!(doc.hypotheses[0].sensitivity, SensitivityLevel::Low);
        assert!(doc.narrative.contains("slow runs"));
    }

    #[test]
    fn analyzer_requires_history() {
        let space = two_option_space();
        let script = MockScript::default();
        let err = analyze_trends(
            &MeasurementHistory::new(),
            &[MetricSpec::minimize("time")],
            &space,
            &script,
            &PipelineConfig::default(),
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyHistory));
    }

    #[test]
    fn analyzer_propagates_no_json() {
        let space = two_option_space();
        let history = seeded_history(&space);
        let mut script = MockScript::default();
        script.push(RoleTag::Analyzer, IterationPattern::At(2), None, "prose only");
        let err = analyze_trends(
            &history,
            &[MetricSpec::minimize("time")],
            &space,
            &script,
            &PipelineConfig::default(),
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoJsonFound));
    }

    #[test]
    fn designer_parses_focus_and_pins() {
        let space = two_option_space();
        let mut script = MockScript::default();
        script.push(
            RoleTag::Designer,
            IterationPattern::At(2),
            None,
            r#"Refine toward codec a.
{"focus_regions": [{"option": "algorithm", "values": ["a"]},
                   {"option": "ghost", "values": [1]}],
 "deprioritized": [{"option": "level", "value": 2},
                   {"option": "algorithm", "value": "b"}]}"#,
        );
        let analysis = AnalysisDoc {
            narrative: "slow codec".into(),
            anomalies: vec![],
            hypotheses: vec![],
        };
        let doc = design_strategy(Some(&analysis), &space, 10, 2, &script, &PipelineConfig::default())
            .unwrap();
        assert_eq!(doc.focus_regions.len(), 1);
        assert_eq!(doc.focus_regions[0].values, vec![sym("a")]);
        // "algorithm" already in focus: its deprioritized entry is dropped
        assert_eq!(doc.deprioritized, vec![("level".to_string(), int(2))]);
        assert_eq!(doc.iteration, 2);
    }

    fn candidate_json(pairs: &[(&str, serde_json::Value)]) -> String {
        let obj: serde_json::Map<String, serde_json::Value> = pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        serde_json::Value::Object(obj).to_string()
    }

    #[test]
    fn generators_validate_and_dedupe() {
        let space = two_option_space();
        let strategy = StrategyDoc {
            narrative: "explore".into(),
            focus_regions: vec![],
            deprioritized: vec![],
            iteration: 1,
        };
        let good_a = candidate_json(&[("algorithm", "a".into()), ("level", 1.into())]);
        let good_b = candidate_json(&[("algorithm", "b".into()), ("level", 2.into())]);
        let bad = candidate_json(&[("algorithm", "zzz".into()), ("level", 1.into())]);
        let mut script = MockScript::default();
        script.push(
            RoleTag::Generator,
            IterationPattern::At(1),
            Some("[generator 1 of 2]"),
            format!(r#"{{"configurations": [{good_a}, {good_b}, {good_a}]}}"#),
        );
        script.push(
            RoleTag::Generator,
            IterationPattern::At(1),
            Some("[generator 2 of 2]"),
            format!(r#"{{"configurations": [{bad}, {good_b}]}}"#),
        );
        let backends: Vec<&dyn ChatBackend> = vec![&script, &script];
        let lists =
            generate_candidates(&strategy, &space, 3, &backends, &PipelineConfig::default()).unwrap();
        assert_eq!(lists[0].len(), 2); // duplicate collapsed
        assert_eq!(lists[1].len(), 1); // inadmissible value dropped
    }

    #[test]
    fn generators_all_failing_exhausts() {
        let space = two_option_space();
        let strategy = StrategyDoc {
            narrative: "x".into(),
            focus_regions: vec![],
            deprioritized: vec![],
            iteration: 1,
        };
        let script = MockScript::default(); // no entries: every call fails
        let backends: Vec<&dyn ChatBackend> = vec![&script, &script];
        let err = generate_candidates(&strategy, &space, 2, &backends, &PipelineConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::GenerationExhausted));
    }

    fn cfg_al(a: &str, l: i64) -> Configuration {
        Configuration::from_pairs([("algorithm", sym(a)), ("level", int(l))])
    }

    #[test]
    fn voting_ranks_by_frequency() {
        let a = cfg_al("a", 1);
        let b = cfg_al("a", 2);
        let c = cfg_al("b", 1);
        let lists = vec![
            vec![a.clone(), b.clone()],
            vec![a.clone(), c.clone()],
            vec![a.clone(), b.clone()],
        ];
        let out = vote_candidates(&lists, &HashSet::new(), 2);
        assert_eq!(out, vec![a.clone(), b.clone()]);
    }

    #[test]
    fn voting_tie_breaks_by_generator_then_position() {
        let b = cfg_al("a", 2);
        let c = cfg_al("b", 1);
        // counts tied at 1: b first seen in G1 position 2, c in G2 position 2
        let filler1 = cfg_al("a", 1);
        let filler2 = cfg_al("a", 3);
        let lists = vec![
            vec![filler1.clone(), filler2.clone(), b.clone()],
            vec![filler1.clone(), filler2.clone(), c.clone()],
        ];
        let out = vote_candidates(&lists, &HashSet::new(), 4);
        let pos_b = out.iter().position(|x| *x == b).unwrap();
        let pos_c = out.iter().position(|x| *x == c).unwrap();
        assert!(pos_b < pos_c);
    }

    #[test]
    fn voting_excludes_measured() {
        let a = cfg_al("a", 1);
        let b = cfg_al("a", 2);
        let c = cfg_al("b", 1);
        let lists = vec![
            vec![a.clone(), b.clone()],
            vec![a.clone(), c.clone()],
            vec![a.clone(), b.clone()],
        ];
        let measured: HashSet<Configuration> = [a].into();
        let out = vote_candidates(&lists, &measured, 2);
        assert_eq!(out, vec![b, c]);
    }

    #[test]
    fn budget_invariants() {
        assert!(SamplingBudget::new(10, 11, 3).is_err());
        assert!(SamplingBudget::new(0, 1, 1).is_err());
        let b = SamplingBudget::with_defaults(20).unwrap();
        assert_eq!(b.batch_size, 7);
        assert_eq!(b.n_generators, 5);
        let small = SamplingBudget::with_defaults(3).unwrap();
        assert_eq!(small.batch_size, 3);
    }
}
