//! Feedback-driven LLM configuration sampling for multi-objective performance
//! modeling, plus the machinery needed to benchmark it at desk scale.
//!
//! The crate is organized around the sampling workflow:
//!
//! * [`config_space`] — configuration options, finite spaces, documentation
//!   ingestion, numeric encoding, and pruning.
//! * [`gateway`] — chat-completion backends (an OpenAI-compatible live client
//!   and a deterministic scripted mock), structured-output extraction, and
//!   replayable transcripts.
//! * [`pipeline`] — the five-stage LLM sampler: option filtering, trend
//!   analysis, strategy design, parallel candidate generation, frequency
//!   voting, and the budgeted loop tying them together.
//! * [`baselines`] — random, genetic, Flash-style, CoMSA-style, NSBS-style,
//!   and NSGA-III samplers behind one contract.
//! * [`mobo`] — Gaussian-process regression, Pareto sorting, hypervolume,
//!   EHVI, and the EHVI/TSEMO samplers.
//! * [`perf_models`] — gradient-boosted trees and an L1-regularized
//!   feedforward network used as downstream performance models.
//! * [`harness`] — dataset ingestion, synthetic landscapes, the evaluation
//!   protocol, non-parametric statistics, and report rendering.

pub mod baselines;
pub mod config_space;
pub mod error;
pub mod gateway;
pub mod harness;
pub mod mobo;
pub mod perf_models;
pub mod pipeline;
pub mod sampler;

pub use error::{Error, Result};
