//! Shared sampler contract: objective specs, the measurement oracle, the
//! outcome type every sampler produces, and budget bookkeeping.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::config_space::{encode_configuration, enumerate_space, ConfigSpace, Configuration};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    pub direction: Direction,
}

impl MetricSpec {
    pub fn minimize(name: impl Into<String>) -> Self {
        MetricSpec {
            name: name.into(),
            direction: Direction::Minimize,
        }
    }

    pub fn maximize(name: impl Into<String>) -> Self {
        MetricSpec {
            name: name.into(),
            direction: Direction::Maximize,
        }
    }
}

/// Ordered metric names with optimization directions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    metrics: Vec<MetricSpec>,
}

impl ObjectiveSpec {
    pub fn new(metrics: Vec<MetricSpec>) -> Result<Self> {
        if metrics.is_empty() {
            return Err(Error::EmptyInput("objective spec".into()));
        }
        let mut names = std::collections::HashSet::new();
        for m in &metrics {
            if !names.insert(m.name.as_str()) {
                return Err(Error::Precondition(format!("duplicate metric {}", m.name)));
            }
        }
        Ok(ObjectiveSpec { metrics })
    }

    pub fn metrics(&self) -> &[MetricSpec] {
        &self.metrics
    }

    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }

    /// Extracts the metric values in spec order, mapped to minimization
    /// (maximized metrics are negated).
    pub fn minimized(&self, values: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
        self.metrics
            .iter()
            .map(|m| {
                let v = values
                    .get(&m.name)
                    .copied()
                    .ok_or_else(|| Error::Oracle(format!("metric {} missing from measurement", m.name)))?;
                Ok(match m.direction {
                    Direction::Minimize => v,
                    Direction::Maximize => -v,
                })
            })
            .collect()
    }
}

/// Source of measured metric values for a configuration.
pub trait MeasurementOracle: Sync {
    fn measure(&self, cfg: &Configuration) -> Result<BTreeMap<String, f64>>;
}

impl<F> MeasurementOracle for F
where
    F: Fn(&Configuration) -> Result<BTreeMap<String, f64>> + Sync,
{
    fn measure(&self, cfg: &Configuration) -> Result<BTreeMap<String, f64>> {
        self(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerMeta {
    pub sampler: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Exactly the requested number of distinct, valid configurations plus
/// provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerOutcome {
    pub sampled: Vec<Configuration>,
    pub meta: SamplerMeta,
}

impl SamplerOutcome {
    pub fn new(sampler: impl Into<String>, seed: u64, sampled: Vec<Configuration>) -> Self {
        SamplerOutcome {
            sampled,
            meta: SamplerMeta {
                sampler: sampler.into(),
                seed,
                notes: Vec::new(),
            },
        }
    }
}

/// Materialized space: every configuration with its encoding, indexed by
/// enumeration order. Tie-breaking "lowest enumeration index" rules resolve
/// against this ordering.
pub struct CandidatePool<'a> {
    pub space: &'a ConfigSpace,
    pub configs: Vec<Configuration>,
    pub encodings: Vec<Vec<f64>>,
    index: HashMap<Configuration, usize>,
}

impl<'a> CandidatePool<'a> {
    pub fn new(space: &'a ConfigSpace, limit: u128) -> Result<Self> {
        let configs = enumerate_space(space, limit)?;
        let encodings = configs
            .iter()
            .map(|c| encode_configuration(space, c))
            .collect::<Result<Vec<_>>>()?;
        let index = configs
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        Ok(CandidatePool {
            space,
            configs,
            encodings,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn index_of(&self, cfg: &Configuration) -> Option<usize> {
        self.index.get(cfg).copied()
    }
}

/// Budget bookkeeping shared by the oracle-driven samplers: the oracle is
/// invoked exactly once per distinct configuration, and the outcome is the
/// sequence of distinct evaluations in the order they were spent, truncated
/// at exactly `k`.
pub struct BudgetedEvaluator<'a> {
    pool: &'a CandidatePool<'a>,
    oracle: &'a dyn MeasurementOracle,
    objectives: &'a ObjectiveSpec,
    budget: usize,
    cache: HashMap<usize, Vec<f64>>,
    order: Vec<usize>,
}

impl<'a> BudgetedEvaluator<'a> {
    pub fn new(
        pool: &'a CandidatePool<'a>,
        oracle: &'a dyn MeasurementOracle,
        objectives: &'a ObjectiveSpec,
        budget: usize,
    ) -> Self {
        BudgetedEvaluator {
            pool,
            oracle,
            objectives,
            budget,
            cache: HashMap::new(),
            order: Vec::new(),
        }
    }

    pub fn exhausted(&self) -> bool {
        self.order.len() >= self.budget
    }

    pub fn spent(&self) -> usize {
        self.order.len()
    }

    pub fn is_measured(&self, index: usize) -> bool {
        self.cache.contains_key(&index)
    }

    /// Objective vector (mapped to minimization) for a pool index. Re-uses
    /// the cache for previously measured configurations; returns `None` once
    /// the budget is exhausted and the configuration is unmeasured.
    pub fn evaluate(&mut self, index: usize) -> Result<Option<Vec<f64>>> {
        if let Some(v) = self.cache.get(&index) {
            return Ok(Some(v.clone()));
        }
        if self.exhausted() {
            return Ok(None);
        }
        let values = self.oracle.measure(&self.pool.configs[index])?;
        let mapped = self.objectives.minimized(&values)?;
        self.cache.insert(index, mapped.clone());
        self.order.push(index);
        Ok(Some(mapped))
    }

    pub fn measured_indices(&self) -> &[usize] {
        &self.order
    }

    pub fn cached(&self, index: usize) -> Option<&[f64]> {
        self.cache.get(&index).map(Vec::as_slice)
    }

    /// The outcome configurations in evaluation order.
    pub fn into_outcome(self, sampler: &str, seed: u64) -> SamplerOutcome {
        let sampled = self
            .order
            .iter()
            .map(|&i| self.pool.configs[i].clone())
            .collect();
        SamplerOutcome::new(sampler, seed, sampled)
    }
}

/// Derives an independent seed for a sub-stream (per pick, per candidate)
/// so evaluation order cannot change results. SplitMix64 finalizer.
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded uniform draw of `count` distinct unmeasured pool indices.
pub fn random_unmeasured(
    pool: &CandidatePool,
    taken: &dyn Fn(usize) -> bool,
    count: usize,
    rng: &mut impl rand::Rng,
) -> Vec<usize> {
    let available: Vec<usize> = (0..pool.len()).filter(|&i| !taken(i)).collect();
    let mut picked = Vec::with_capacity(count.min(available.len()));
    let mut available = available;
    for _ in 0..count.min(available.len()) {
        let at = rng.random_range(0..available.len());
        picked.push(available.swap_remove(at));
    }
    picked
}
