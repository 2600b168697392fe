//! Command implementations.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use llm4perf::config_space::{parse_documentation, prune_space, ConfigOption, ConfigSpace, OptionKind, OptionValue};
use llm4perf::gateway::{LiveEndpoint, MockScript, TranscriptSink};
use llm4perf::harness::{
    build_report, dispatch_sampler, raw_jsonl, run_protocol, synth_landscape, write_dataset_csv,
    DatasetEntry, DispatchedOutcome, EvalReport, ExperimentSpec, ReportFormat, SamplerKind,
    SamplerSpec, SpaceMode, SynthSpec,
};
use llm4perf::pipeline::{filter_options, OutcomeFile, PipelineConfig};
use llm4perf::sampler::{MetricSpec, ObjectiveSpec};

use crate::{CommonArgs, Failure, SweepArgs, SweepAxis, SynthArgs};

type CmdResult = Result<(), Failure>;

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_spec<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("invalid spec {}: {e}", path.display())))
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> CmdResult {
    let path = dir.join(name);
    std::fs::write(&path, bytes)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Content-addressed output directory: `<out>/<command>-<hash8>` where the
/// hash covers the command name, spec bytes, effective seed, and mock bytes.
fn content_dir(
    out: &Path,
    command: &str,
    spec_bytes: &[u8],
    seed: u64,
    mock_bytes: Option<&[u8]>,
) -> Result<PathBuf, Failure> {
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    hasher.update(spec_bytes);
    hasher.update(seed.to_le_bytes());
    if let Some(m) = mock_bytes {
        hasher.update(m);
    }
    let digest = hasher.finalize();
    let prefix: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
    let dir = out.join(format!("{command}-{prefix}"));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn load_mock(path: &Path) -> Result<MockScript, Failure> {
    MockScript::from_json(&read_text(path)?)
        .map_err(|e| Failure::usage(format!("invalid mock script {}: {e}", path.display())))
}

// ------------------------------------------------------------------- prune

#[derive(Deserialize)]
struct PruneSpec {
    docs: PathBuf,
    space: PathBuf,
    #[serde(default)]
    backend: Option<BackendSpec>,
    #[serde(default)]
    model: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BackendSpec {
    Mock { mock: PathBuf },
    Live { live: LiveSpec },
}

#[derive(Deserialize)]
struct LiveSpec {
    base_url: String,
    model: String,
    #[serde(default)]
    max_retries: Option<u32>,
}

pub(crate) fn prune(args: &CommonArgs) -> CmdResult {
    let spec_bytes = read_file(&args.spec)?;
    let spec: PruneSpec = parse_spec(&args.spec)?;
    let docs = parse_documentation(&read_text(&spec.docs)?)?;
    let space: ConfigSpace = serde_json::from_str(&read_text(&spec.space)?)
        .map_err(|e| Failure::usage(format!("invalid space {}: {e}", spec.space.display())))?;
    let seed = args.seed.unwrap_or(0);
    println!("effective seed: {seed}");

    let mut config = PipelineConfig::default();
    let mock;
    let live;
    let backend: &dyn llm4perf::gateway::ChatBackend = if let Some(path) = &args.mock {
        mock = load_mock(path)?;
        &mock
    } else {
        match spec.backend {
            Some(BackendSpec::Mock { mock: path }) => {
                mock = load_mock(&path)?;
                &mock
            }
            Some(BackendSpec::Live { live: live_spec }) => {
                config.model_id = live_spec.model.clone();
                let mut endpoint = LiveEndpoint::new(&live_spec.base_url);
                if let Some(r) = live_spec.max_retries {
                    endpoint = endpoint.with_max_retries(r);
                }
                live = endpoint;
                &live
            }
            None => {
                return Err(Failure::usage(
                    "prune spec needs a backend (mock or live) or pass --mock",
                ))
            }
        }
    };
    if let Some(model) = spec.model {
        config.model_id = model;
    }

    // everything is computed before anything is written, so a gateway
    // failure leaves no partial outputs behind
    let (pruned, rationale) = filter_options(&space, &docs, backend, &config)?;
    let mock_bytes = args.mock.as_ref().map(|p| read_file(p)).transpose()?;
    let dir = content_dir(&args.out, "prune", &spec_bytes, seed, mock_bytes.as_deref())?;
    write_out(&dir, "pruned_space.json", serde_json::to_string_pretty(&pruned).unwrap().as_bytes())?;
    write_out(&dir, "rationale.json", serde_json::to_string_pretty(&rationale).unwrap().as_bytes())?;
    Ok(())
}

// ------------------------------------------------------------------ sample

#[derive(Deserialize)]
struct SampleSpec {
    sampler: SamplerSpec,
    dataset: DatasetEntry,
    budget: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    space_mode: SpaceMode,
    /// Objective for single-objective samplers; defaults to the first metric.
    #[serde(default)]
    metric: Option<String>,
    #[serde(default)]
    mock_script: Option<PathBuf>,
    #[serde(default)]
    prompt_dir: Option<PathBuf>,
}

fn sampling_space_for(
    full: &llm4perf::harness::MeasuredDataset,
    recipe: Option<&llm4perf::harness::PruneRecipe>,
    mode: SpaceMode,
) -> Result<ConfigSpace, Failure> {
    match mode {
        SpaceMode::Full => Ok(full.space().clone()),
        SpaceMode::Pruned => {
            let recipe = recipe.ok_or_else(|| Failure::usage("pruned mode needs a pruning recipe".to_string()))?;
            let keep: BTreeSet<String> = recipe.keep.iter().cloned().collect();
            let mut defaults = recipe.defaults.clone();
            for opt in full.space().options() {
                if !keep.contains(&opt.name) {
                    defaults
                        .entry(opt.name.clone())
                        .or_insert_with(|| opt.pin_default().expect("options have values"));
                }
            }
            Ok(prune_space(full.space(), &keep, &defaults)?)
        }
    }
}

pub(crate) fn sample(args: &CommonArgs) -> CmdResult {
    let spec_bytes = read_file(&args.spec)?;
    let spec: SampleSpec = parse_spec(&args.spec)?;
    let seed = args.seed.unwrap_or(spec.seed);
    println!("effective seed: {seed}");

    let (full, recipe) = spec.dataset.resolve()?;
    let sampling_space = sampling_space_for(&full, recipe.as_ref(), spec.space_mode)?;
    let objectives = ObjectiveSpec::new(full.metrics().to_vec())?;
    let metric: Option<&MetricSpec> = match &spec.metric {
        Some(name) => Some(
            full.metrics()
                .iter()
                .find(|m| &m.name == name)
                .ok_or_else(|| Failure::usage(format!("metric {name} not in dataset")))?,
        ),
        None => full.metrics().first(),
    };
    let mock_path = args.mock.clone().or(spec.mock_script.clone());
    let mock = mock_path.as_deref().map(load_mock).transpose()?;
    let mock_bytes = mock_path.as_deref().map(read_file).transpose()?;

    let dir = content_dir(&args.out, "sample", &spec_bytes, seed, mock_bytes.as_deref())?;
    let is_pipeline = spec.sampler.kind == SamplerKind::Llm4perf;
    let transcript_name = "transcript.jsonl";
    let sink = if is_pipeline {
        Some(
            TranscriptSink::to_file(&dir.join(transcript_name))
                .map_err(|e| Failure::runtime(e.to_string()))?,
        )
    } else {
        None
    };
    let oracle = llm4perf::harness::fixtures::CompletingOracle {
        dataset: &full,
        sampling_space: &sampling_space,
    };
    let oracle_ref: &dyn llm4perf::sampler::MeasurementOracle = if is_pipeline { &full } else { &oracle };
    let templates = spec
        .prompt_dir
        .as_deref()
        .map(llm4perf::pipeline::PromptTemplates::from_dir)
        .transpose()?;
    let dispatched = dispatch_sampler(
        &spec.sampler,
        &sampling_space,
        spec.budget,
        seed,
        oracle_ref,
        &objectives,
        metric,
        mock.as_ref(),
        templates.as_ref(),
        llm4perf::config_space::DEFAULT_ENUMERATION_LIMIT,
        sink.as_ref(),
    )?;
    drop(sink);
    let file = match &dispatched {
        DispatchedOutcome::Plain(outcome) => OutcomeFile::from_outcome(outcome),
        DispatchedOutcome::Pipeline(pipeline) => {
            OutcomeFile::from_pipeline(pipeline, Some(transcript_name.to_string()))
        }
    };
    write_out(&dir, "outcome.json", serde_json::to_string_pretty(&file).unwrap().as_bytes())?;
    if let DispatchedOutcome::Pipeline(pipeline) = &dispatched {
        write_out(
            &dir,
            "pruned_space.json",
            serde_json::to_string_pretty(&pipeline.pruned_space).unwrap().as_bytes(),
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------- evaluate

fn load_experiment(args: &CommonArgs) -> Result<(Vec<u8>, ExperimentSpec, Option<MockScript>, Option<Vec<u8>>), Failure> {
    let spec_bytes = read_file(&args.spec)?;
    let mut spec: ExperimentSpec = parse_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let mock_path = args.mock.clone().or(spec.mock_script.clone());
    let mock = mock_path.as_deref().map(load_mock).transpose()?;
    let mock_bytes = mock_path.as_deref().map(read_file).transpose()?;
    Ok((spec_bytes, spec, mock, mock_bytes))
}

fn write_report_files(dir: &Path, report: &EvalReport) -> CmdResult {
    write_out(dir, "report.csv", build_report(report, ReportFormat::Csv)?.as_bytes())?;
    write_out(dir, "report.txt", build_report(report, ReportFormat::TextTable)?.as_bytes())?;
    write_out(dir, "raw.jsonl", raw_jsonl(report).as_bytes())?;
    write_out(dir, "report.json", serde_json::to_string_pretty(report).unwrap().as_bytes())?;
    Ok(())
}

pub(crate) fn evaluate(args: &CommonArgs) -> CmdResult {
    let (spec_bytes, spec, mock, mock_bytes) = load_experiment(args)?;
    spec.validate()?;
    println!("effective seed: {}", spec.seed);
    let report = run_protocol(&spec, mock.as_ref())?;
    let dir = content_dir(&args.out, "evaluate", &spec_bytes, spec.seed, mock_bytes.as_deref())?;
    write_report_files(&dir, &report)?;
    let failed = report
        .cells
        .iter()
        .filter(|c| matches!(c.status, llm4perf::harness::CellStatus::Failed(_)))
        .count();
    println!(
        "{} cells ({} failed, {} degenerate)",
        report.cells.len(),
        failed,
        report
            .cells
            .iter()
            .filter(|c| c.status == llm4perf::harness::CellStatus::Degenerate)
            .count()
    );
    if failed == report.cells.len() && failed > 0 {
        return Err(Failure::runtime("every cell failed".to_string()));
    }
    Ok(())
}

pub(crate) fn report(args: &CommonArgs) -> CmdResult {
    let spec_bytes = read_file(&args.spec)?;
    let report: EvalReport = parse_spec(&args.spec)?;
    let seed = args.seed.unwrap_or(0);
    println!("effective seed: {seed}");
    let dir = content_dir(&args.out, "report", &spec_bytes, seed, None)?;
    write_report_files(&dir, &report)
}

// ------------------------------------------------------------------- sweep

pub(crate) fn sweep(args: &SweepArgs) -> CmdResult {
    if args.from == 0 || args.to < args.from {
        return Err(Failure::usage("sweep range must be positive and ascending".to_string()));
    }
    let (spec_bytes, base, mock, mock_bytes) = load_experiment(&args.common)?;
    base.validate()?;
    if !base.samplers.iter().any(|s| s.kind == SamplerKind::Llm4perf) {
        return Err(Failure::usage(
            "sweep axes drive the llm4perf sampler; add it to the spec".to_string(),
        ));
    }
    println!("effective seed: {}", base.seed);

    let mut grid = String::from("value,budget,mean_rmse\n");
    let mut distributions = String::new();
    for value in args.from..=args.to {
        let mut spec = base.clone();
        for sampler in spec.samplers.iter_mut().filter(|s| s.kind == SamplerKind::Llm4perf) {
            match args.axis {
                SweepAxis::NCandidates => sampler.batch_size = Some(value),
                SweepAxis::NGenerators => sampler.n_generators = Some(value),
            }
        }
        let report = run_protocol(&spec, mock.as_ref())?;
        let candidate = report.candidate.clone();
        for &budget in &spec.budgets {
            let means: Vec<f64> = report
                .cells
                .iter()
                .filter(|c| c.sampler == candidate && c.budget == budget)
                .filter_map(|c| c.mean)
                .collect();
            let mean = if means.is_empty() {
                f64::NAN
            } else {
                means.iter().sum::<f64>() / means.len() as f64
            };
            grid.push_str(&format!("{value},{budget},{mean:.6}\n"));
        }
        for cell in report.cells.iter().filter(|c| c.sampler == candidate) {
            distributions.push_str(
                &serde_json::json!({
                    "value": value,
                    "system": cell.system,
                    "metric": cell.metric,
                    "model": cell.model,
                    "budget": cell.budget,
                    "per_repetition": cell.per_repetition,
                })
                .to_string(),
            );
            distributions.push('\n');
        }
    }
    let axis_name = match args.axis {
        SweepAxis::NCandidates => "n_candidates",
        SweepAxis::NGenerators => "n_generators",
    };
    let dir = content_dir(
        &args.common.out,
        &format!("sweep-{axis_name}-{}-{}", args.from, args.to),
        &spec_bytes,
        base.seed,
        mock_bytes.as_deref(),
    )?;
    write_out(&dir, "grid.csv", grid.as_bytes())?;
    write_out(&dir, "distributions.jsonl", distributions.as_bytes())?;
    Ok(())
}

// ------------------------------------------------------------------- synth

pub(crate) fn synth(args: &SynthArgs) -> CmdResult {
    let spec = match &args.spec {
        Some(path) => {
            let mut spec: SynthSpec = parse_spec(path)?;
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            spec
        }
        None => {
            if args.sensitive > args.options {
                return Err(Failure::usage("more sensitive options than options".to_string()));
            }
            if args.values < 1 || args.options < 1 {
                return Err(Failure::usage("options and values must be positive".to_string()));
            }
            let options: Vec<ConfigOption> = (0..args.options)
                .map(|i| {
                    ConfigOption::new(
                        format!("o{i}"),
                        OptionKind::NumericDiscrete,
                        (0..args.values as i64).map(OptionValue::Int).collect(),
                    )
                })
                .collect::<llm4perf::Result<_>>()?;
            let space = ConfigSpace::new(options, vec![])?;
            let sensitive: BTreeSet<String> = (0..args.sensitive).map(|i| format!("o{i}")).collect();
            let interactions: Vec<(String, String)> = (0..args.interactions)
                .filter(|_| args.sensitive >= 2)
                .map(|i| {
                    let a = i % args.sensitive;
                    let b = (i + 1) % args.sensitive;
                    (format!("o{a}"), format!("o{b}"))
                })
                .collect();
            SynthSpec {
                space,
                sensitive,
                interactions,
                noise: args.noise,
                seed: args.seed.unwrap_or(0),
                metric_names: ["m1".into(), "m2".into()],
                system: "synthetic".into(),
            }
        }
    };
    println!("effective seed: {}", spec.seed);
    let dataset = synth_landscape(&spec)?;
    let spec_bytes = serde_json::to_vec(&spec).unwrap();
    let dir = content_dir(&args.out, "synth", &spec_bytes, spec.seed, None)?;
    write_out(&dir, "space.json", serde_json::to_string_pretty(dataset.space()).unwrap().as_bytes())?;
    let mut csv = Vec::new();
    write_dataset_csv(&dataset, &mut csv)?;
    write_out(&dir, "data.csv", &csv)?;
    write_out(&dir, "synth_spec.json", serde_json::to_string_pretty(&spec).unwrap().as_bytes())?;
    Ok(())
}
