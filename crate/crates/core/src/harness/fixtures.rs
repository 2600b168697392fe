//! Benchmark fixtures: synthetic configuration spaces matching the subject
//! systems' published space sizes (full/pruned), a deterministic lrzip-like
//! dataset, and mock scripts driving the LLM pipeline offline.
//!
//! The real option lists behind the published space sizes are not public;
//! these spaces are synthetic stand-ins with the right cardinalities.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::config_space::{
    enumerate_space, ConfigOption, ConfigSpace, Configuration, OptionKind, OptionValue,
    DEFAULT_ENUMERATION_LIMIT,
};
use crate::error::Result;
use crate::gateway::{IterationPattern, MockScript, RoleTag};
use crate::sampler::MetricSpec;

use super::dataset::{MeasuredDataset, Provenance, SpaceMode};

fn sym(s: &str) -> OptionValue {
    OptionValue::Symbol(s.into())
}

fn int(i: i64) -> OptionValue {
    OptionValue::Int(i)
}

fn ints(values: &[i64]) -> Vec<OptionValue> {
    values.iter().copied().map(OptionValue::Int).collect()
}

/// A benchmark system fixture: the full space plus the pruning recipe that
/// produces its pruned counterpart.
#[derive(Clone, Debug)]
pub struct SystemFixture {
    pub name: &'static str,
    pub space: ConfigSpace,
    pub keep: BTreeSet<String>,
    pub defaults: BTreeMap<String, OptionValue>,
}

impl SystemFixture {
    pub fn pruned_space(&self) -> Result<ConfigSpace> {
        crate::config_space::prune_space(&self.space, &self.keep, &self.defaults)
    }
}

/// lrzip-like compressor: 1,200 configurations full, 200 pruned (6× ratio).
pub fn lrzip_fixture() -> SystemFixture {
    let space = ConfigSpace::new(
        vec![
            ConfigOption::new(
                "algorithm",
                OptionKind::Categorical,
                vec![sym("-g"), sym("-l"), sym("-z"), sym("-b"), sym("-n")],
            )
            .unwrap()
            .with_description("Compression backend; codecs range from very fast/low ratio to very slow/high ratio."),
            ConfigOption::new("-w", OptionKind::NumericDiscrete, ints(&[1, 21, 41, 61, 81]))
                .unwrap()
                .with_description("Compression window size in hundreds of megabytes."),
            ConfigOption::new("-p", OptionKind::NumericDiscrete, ints(&[1, 2, 3, 4]))
                .unwrap()
                .with_description("Worker processes used for compression."),
            ConfigOption::new("-L", OptionKind::NumericDiscrete, ints(&[8, 9]))
                .unwrap()
                .with_description("Compression level passed to the backend."),
            ConfigOption::new("-N", OptionKind::NumericDiscrete, ints(&[-20, -12, -4, 4, 12, 19]))
                .unwrap()
                .with_description("Scheduling niceness of the process; does not change compression speed or output."),
        ],
        vec![],
    )
    .unwrap();
    SystemFixture {
        name: "lrzip",
        space,
        keep: ["algorithm", "-w", "-p", "-L"].iter().map(|s| s.to_string()).collect(),
        defaults: [("-N".to_string(), int(-4))].into(),
    }
}

/// JavaGC-like collector: 6,240 full, 1,560 pruned (4× ratio).
pub fn javagc_fixture() -> SystemFixture {
    let space = ConfigSpace::new(
        vec![
            ConfigOption::new(
                "heapMB",
                OptionKind::NumericDiscrete,
                ints(&[256, 512, 768, 1024, 1280, 1536, 1792, 2048, 2304, 2560, 2816, 3072, 3328]),
            )
            .unwrap(),
            ConfigOption::new("gcThreads", OptionKind::NumericDiscrete, ints(&[1, 2, 4, 8, 16])).unwrap(),
            ConfigOption::new(
                "policy",
                OptionKind::Categorical,
                vec![sym("serial"), sym("parallel"), sym("cms"), sym("g1")],
            )
            .unwrap(),
            ConfigOption::new("tenuring", OptionKind::NumericDiscrete, ints(&[1, 7, 15])).unwrap(),
            ConfigOption::new(
                "compressedOops",
                OptionKind::Boolean,
                vec![OptionValue::Bool(false), OptionValue::Bool(true)],
            )
            .unwrap(),
            ConfigOption::new("verboseLevel", OptionKind::NumericDiscrete, ints(&[0, 1, 2, 3]))
                .unwrap()
                .with_description("Diagnostic logging verbosity."),
        ],
        vec![],
    )
    .unwrap();
    SystemFixture {
        name: "javagc",
        space,
        keep: ["heapMB", "gcThreads", "policy", "tenuring", "compressedOops"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        defaults: [("verboseLevel".to_string(), int(0))].into(),
    }
}

/// SQLite-like engine: 9,216 full, 1,536 pruned (6× ratio).
pub fn sqlite_fixture() -> SystemFixture {
    let space = ConfigSpace::new(
        vec![
            ConfigOption::new(
                "cacheKB",
                OptionKind::NumericDiscrete,
                ints(&[64, 128, 256, 512, 1024, 2048, 4096, 8192]),
            )
            .unwrap(),
            ConfigOption::new("pageSize", OptionKind::NumericDiscrete, ints(&[1024, 2048, 4096, 8192]))
                .unwrap(),
            ConfigOption::new(
                "synchronous",
                OptionKind::Categorical,
                vec![sym("off"), sym("normal"), sym("full")],
            )
            .unwrap(),
            ConfigOption::new(
                "journalMode",
                OptionKind::Categorical,
                vec![sym("delete"), sym("truncate"), sym("wal"), sym("memory")],
            )
            .unwrap(),
            ConfigOption::new("mmapMB", OptionKind::NumericDiscrete, ints(&[0, 64, 256, 1024])).unwrap(),
            ConfigOption::new("progressSteps", OptionKind::NumericDiscrete, ints(&[0, 1, 2, 4, 8, 16]))
                .unwrap()
                .with_description("Progress-callback frequency for UI updates."),
        ],
        vec![],
    )
    .unwrap();
    SystemFixture {
        name: "sqlite",
        space,
        keep: ["cacheKB", "pageSize", "synchronous", "journalMode", "mmapMB"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        defaults: [("progressSteps".to_string(), int(0))].into(),
    }
}

/// x264-like encoder: 13,824 full, 3,456 pruned (4× ratio).
pub fn x264_fixture() -> SystemFixture {
    let space = ConfigSpace::new(
        vec![
            ConfigOption::new(
                "crf",
                OptionKind::NumericDiscrete,
                ints(&[18, 20, 22, 24, 26, 28, 30, 32]),
            )
            .unwrap(),
            ConfigOption::new("bframes", OptionKind::NumericDiscrete, ints(&[0, 1, 2, 3, 4, 5, 6, 7]))
                .unwrap(),
            ConfigOption::new("refFrames", OptionKind::NumericDiscrete, ints(&[1, 2, 4, 8, 12, 16]))
                .unwrap(),
            ConfigOption::new(
                "subme",
                OptionKind::NumericDiscrete,
                ints(&[1, 2, 3, 4, 5, 6, 7, 8, 9]),
            )
            .unwrap(),
            ConfigOption::new("logLevel", OptionKind::NumericDiscrete, ints(&[0, 1, 2, 3]))
                .unwrap()
                .with_description("Console logging level."),
        ],
        vec![],
    )
    .unwrap();
    SystemFixture {
        name: "x264",
        space,
        keep: ["crf", "bframes", "refFrames", "subme"].iter().map(|s| s.to_string()).collect(),
        defaults: [("logLevel".to_string(), int(0))].into(),
    }
}

pub fn all_system_fixtures() -> Vec<SystemFixture> {
    vec![lrzip_fixture(), javagc_fixture(), sqlite_fixture(), x264_fixture()]
}

/// Documentation JSON for the lrzip-like fixture, in the ingestion format.
pub fn lrzip_docs_json() -> String {
    let entries: Vec<serde_json::Value> = lrzip_fixture()
        .space
        .options()
        .iter()
        .map(|o| {
            serde_json::json!({
                "name": o.name,
                "description": o.description,
            })
        })
        .collect();
    serde_json::to_string_pretty(&entries).unwrap()
}

/// Deterministic lrzip-like measurements: `-g` is far slower than the rest,
/// memory runs against time, and `-N` contributes nothing.
pub fn lrzip_dataset() -> MeasuredDataset {
    let fixture = lrzip_fixture();
    let mut rows = HashMap::new();
    for cfg in enumerate_space(&fixture.space, DEFAULT_ENUMERATION_LIMIT).unwrap() {
        let alg = match cfg.get("algorithm").unwrap() {
            OptionValue::Symbol(s) => s.as_str(),
            _ => unreachable!(),
        };
        let w = cfg.get("-w").unwrap().as_f64().unwrap();
        let p = cfg.get("-p").unwrap().as_f64().unwrap();
        let level = cfg.get("-L").unwrap().as_f64().unwrap();
        let (alg_time, alg_mem) = match alg {
            "-g" => (20.0, 60.0),
            "-z" => (6.0, 30.0),
            "-b" => (1.5, 110.0),
            "-l" => (0.5, 160.0),
            _ => (0.0, 220.0), // -n
        };
        let time = 18.0 + alg_time + 2.0 * (81.0 - w) / 81.0 + 0.8 * (4.0 - p) + 0.25 * (level - 8.0);
        let memory = 300.0 + alg_mem + 3.0 * w / 81.0 * 40.0 + 12.0 * p + 6.0 * (level - 8.0);
        rows.insert(
            cfg,
            BTreeMap::from([("time".to_string(), time), ("memory".to_string(), memory)]),
        );
    }
    MeasuredDataset::new(
        fixture.space,
        vec![MetricSpec::minimize("time"), MetricSpec::minimize("memory")],
        rows,
        Provenance {
            system: "lrzip".into(),
            mode: SpaceMode::Full,
            parent: None,
        },
    )
    .unwrap()
}

fn cfg_json(pairs: &[(&str, serde_json::Value)]) -> serde_json::Value {
    serde_json::Value::Object(
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect(),
    )
}

fn generator_response(configs: &[serde_json::Value]) -> String {
    serde_json::json!({ "configurations": configs }).to_string()
}

/// Scripted mock driving the lrzip running example: the filter drops `-N`,
/// iteration 1 explores all algorithms at extreme parameter values,
/// iteration 2 reacts to the `-g` time anomaly and pins `-L` to 8, and
/// iteration 3 balances the remaining gaps. Sized for a budget of 20 with a
/// batch of 7 (three iterations).
pub fn lrzip_mock_script() -> MockScript {
    let mut script = MockScript::default();
    script.push(
        RoleTag::Filter,
        IterationPattern::At(0),
        None,
        r#"The codec choice, window, worker count, and level all shape speed and memory.
The niceness knob only affects scheduling priority, not the work done.
{"keep": ["algorithm", "-w", "-p", "-L"],
 "rationale": {"algorithm": "codecs trade speed against ratio",
               "-w": "window size changes memory pressure and speed",
               "-p": "parallel workers change wall-clock time",
               "-L": "level changes effort per block",
               "-N": "scheduling priority only; no effect on the measured work"}}"#,
    );
    script.push(
        RoleTag::Designer,
        IterationPattern::At(1),
        None,
        r#"With no data yet, spread the batch to cover all 5 algorithms at extreme
parameter values: both window extremes and both ends of the worker range.
{"focus_regions": [{"option": "algorithm", "values": ["-g", "-l", "-z", "-b", "-n"]},
                   {"option": "-w", "values": [1, 81]},
                   {"option": "-p", "values": [1, 4]}],
 "deprioritized": []}"#,
    );
    script.push(
        RoleTag::Generator,
        IterationPattern::At(1),
        None,
        generator_response(&[
            cfg_json(&[("algorithm", "-b".into()), ("-L", 9.into()), ("-w", 81.into()), ("-p", 4.into())]),
            cfg_json(&[("algorithm", "-g".into()), ("-L", 9.into()), ("-w", 1.into()), ("-p", 1.into())]),
            cfg_json(&[("algorithm", "-l".into()), ("-L", 8.into()), ("-w", 81.into()), ("-p", 1.into())]),
            cfg_json(&[("algorithm", "-z".into()), ("-L", 9.into()), ("-w", 1.into()), ("-p", 4.into())]),
            cfg_json(&[("algorithm", "-n".into()), ("-L", 8.into()), ("-w", 1.into()), ("-p", 4.into())]),
            cfg_json(&[("algorithm", "-g".into()), ("-L", 8.into()), ("-w", 81.into()), ("-p", 4.into())]),
            cfg_json(&[("algorithm", "-l".into()), ("-L", 9.into()), ("-w", 1.into()), ("-p", 1.into())]),
        ]),
    );
    script.push(
        RoleTag::Analyzer,
        IterationPattern::At(2),
        None,
        r#"The -g runs stand out: roughly 40 s against about 20 s for everything else.
Level changes barely move either metric, while window size and worker count
shift both and appear to interact.
{"anomalies": [{"subject": "algorithm=-g", "note": "time near 40 s, double the rest"}],
 "hypotheses": [{"option": "-L", "sensitivity": "low", "note": "both levels land within noise"},
                {"option": "-w", "sensitivity": "interacting", "note": "window effect depends on workers"},
                {"option": "-p", "sensitivity": "interacting", "note": "worker effect depends on window"}]}"#,
    );
    script.push(
        RoleTag::Designer,
        IterationPattern::At(2),
        None,
        r#"Focus on the untested -z region, probe intermediate window and worker values,
and de-prioritize -L by fixing it to 8.
{"focus_regions": [{"option": "algorithm", "values": ["-z", "-g"]},
                   {"option": "-w", "values": [21, 41, 61]},
                   {"option": "-p", "values": [2, 3]}],
 "deprioritized": [{"option": "-L", "value": 8}]}"#,
    );
    script.push(
        RoleTag::Generator,
        IterationPattern::At(2),
        None,
        generator_response(&[
            cfg_json(&[("algorithm", "-z".into()), ("-L", 8.into()), ("-w", 41.into()), ("-p", 3.into())]),
            cfg_json(&[("algorithm", "-z".into()), ("-L", 8.into()), ("-w", 21.into()), ("-p", 2.into())]),
            cfg_json(&[("algorithm", "-g".into()), ("-L", 8.into()), ("-w", 41.into()), ("-p", 2.into())]),
            cfg_json(&[("algorithm", "-z".into()), ("-L", 8.into()), ("-w", 61.into()), ("-p", 3.into())]),
            cfg_json(&[("algorithm", "-g".into()), ("-L", 8.into()), ("-w", 61.into()), ("-p", 2.into())]),
            cfg_json(&[("algorithm", "-z".into()), ("-L", 8.into()), ("-w", 81.into()), ("-p", 2.into())]),
            cfg_json(&[("algorithm", "-g".into()), ("-L", 8.into()), ("-w", 21.into()), ("-p", 3.into())]),
        ]),
    );
    script.push(
        RoleTag::Analyzer,
        IterationPattern::At(3),
        None,
        r#"The -z probes confirm a mild window/worker interaction; -g stays slow across
the middle of the range. Memory keeps moving opposite to time.
{"anomalies": [{"subject": "algorithm=-g", "note": "still the slowest family"}],
 "hypotheses": [{"option": "-w", "sensitivity": "high", "note": "dominates memory"},
                {"option": "-p", "sensitivity": "high", "note": "dominates time"}]}"#,
    );
    script.push(
        RoleTag::Designer,
        IterationPattern::At(3),
        None,
        r#"Fill the remaining budget on the fast codecs at mid-range windows, keeping -L at 8.
{"focus_regions": [{"option": "algorithm", "values": ["-b", "-l", "-n"]},
                   {"option": "-w", "values": [21, 41, 61]}],
 "deprioritized": [{"option": "-L", "value": 8}]}"#,
    );
    script.push(
        RoleTag::Generator,
        IterationPattern::At(3),
        None,
        generator_response(&[
            cfg_json(&[("algorithm", "-b".into()), ("-L", 8.into()), ("-w", 41.into()), ("-p", 2.into())]),
            cfg_json(&[("algorithm", "-l".into()), ("-L", 8.into()), ("-w", 21.into()), ("-p", 3.into())]),
            cfg_json(&[("algorithm", "-n".into()), ("-L", 8.into()), ("-w", 61.into()), ("-p", 2.into())]),
            cfg_json(&[("algorithm", "-b".into()), ("-L", 8.into()), ("-w", 21.into()), ("-p", 4.into())]),
            cfg_json(&[("algorithm", "-l".into()), ("-L", 8.into()), ("-w", 61.into()), ("-p", 4.into())]),
            cfg_json(&[("algorithm", "-n".into()), ("-L", 8.into()), ("-w", 21.into()), ("-p", 1.into())]),
            cfg_json(&[("algorithm", "-b".into()), ("-L", 8.into()), ("-w", 61.into()), ("-p", 1.into())]),
        ]),
    );
    script
}

/// Wildcard mock usable with any space and budget: keeps every option,
/// emits trivial analyses/strategies, and proposes a spread of candidates
/// drawn from the space (the loop's random top-up covers the rest).
pub fn generic_mock_script(space: &ConfigSpace, batch: usize) -> Result<MockScript> {
    let mut script = MockScript::default();
    let names: Vec<String> = space.options().iter().map(|o| o.name.clone()).collect();
    script.push(
        RoleTag::Filter,
        IterationPattern::ANY,
        None,
        serde_json::json!({ "keep": names }).to_string(),
    );
    script.push(
        RoleTag::Analyzer,
        IterationPattern::ANY,
        None,
        r#"No stable pattern yet. {"anomalies": [], "hypotheses": []}"#,
    );
    script.push(
        RoleTag::Designer,
        IterationPattern::ANY,
        None,
        r#"Keep exploring evenly. {"focus_regions": [], "deprioritized": []}"#,
    );
    let all = enumerate_space(space, DEFAULT_ENUMERATION_LIMIT)?;
    let want = (3 * batch).min(all.len());
    let step = (all.len() / want.max(1)).max(1);
    let candidates: Vec<serde_json::Value> = all
        .iter()
        .step_by(step)
        .take(want)
        .map(|cfg| serde_json::to_value(cfg).expect("configuration serializes"))
        .collect();
    script.push(
        RoleTag::Generator,
        IterationPattern::ANY,
        None,
        generator_response(&candidates),
    );
    Ok(script)
}

/// Oracle view of a pruned sampling space over a full dataset: completes
/// pruned-space configurations before looking them up.
pub struct CompletingOracle<'a> {
    pub dataset: &'a MeasuredDataset,
    pub sampling_space: &'a ConfigSpace,
}

impl crate::sampler::MeasurementOracle for CompletingOracle<'_> {
    fn measure(&self, cfg: &Configuration) -> Result<BTreeMap<String, f64>> {
        self.dataset.metrics_of(&self.sampling_space.complete(cfg)).cloned()
    }
}
