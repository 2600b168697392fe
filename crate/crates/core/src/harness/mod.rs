//! Benchmark harness: dataset ingestion, synthetic landscapes, the
//! evaluation protocol, non-parametric statistics, fixtures, and report
//! rendering.

mod dataset;
pub mod fixtures;
mod protocol;
mod report;
mod stats;
mod synth;

pub use dataset::{
    load_dataset, read_dataset_csv, write_dataset_csv, MeasuredDataset, Provenance, SpaceMode,
};
pub use protocol::{
    dispatch_sampler, markers_for, run_protocol, Cell, CellStatus, DatasetEntry,
    DispatchedOutcome, EvalReport, ExperimentSpec, ModelKind, ModelParams, PruneRecipe,
    SamplerKind, SamplerSpec,
};
pub use report::{build_report, format_cell, raw_jsonl, ReportFormat};
pub use stats::{cliffs_delta, wilcoxon_signed_rank, CLIFFS_LARGE, CLIFFS_MEDIUM};
pub use synth::{synth_landscape, SynthSpec};
