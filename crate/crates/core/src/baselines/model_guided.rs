//! Surrogate-guided single-objective samplers: pick the predicted best
//! (Flash-style) or the most uncertain under a bootstrap ensemble
//! (CoMSA-style).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config_space::{ConfigSpace, DEFAULT_ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::perf_models::{RegressionTree, TreeParams};
use crate::sampler::{
    derive_seed, random_unmeasured, BudgetedEvaluator, CandidatePool, MeasurementOracle,
    MetricSpec, ObjectiveSpec, SamplerOutcome,
};

#[derive(Clone, Debug)]
pub struct FlashParams {
    pub init_design: usize,
    pub tree: TreeParams,
    pub enumeration_limit: u128,
}

impl Default for FlashParams {
    fn default() -> Self {
        FlashParams {
            init_design: 5,
            tree: TreeParams::default(),
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ComsaParams {
    pub init_design: usize,
    pub ensemble: usize,
    pub tree: TreeParams,
    pub enumeration_limit: u128,
}

impl Default for ComsaParams {
    fn default() -> Self {
        ComsaParams {
            init_design: 5,
            ensemble: 10,
            tree: TreeParams::default(),
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

enum Acquisition<'a> {
    PredictedBest(&'a TreeParams),
    EnsembleDisagreement { ensemble: usize, tree: &'a TreeParams },
}

/// Flash-style sampler: seed with a small random design, then repeatedly fit
/// a regression tree and measure the predicted-best unmeasured configuration
/// (ties to the lowest enumeration index).
pub fn sample_flash(
    space: &ConfigSpace,
    k: usize,
    seed: u64,
    oracle: &dyn MeasurementOracle,
    objective: &MetricSpec,
    params: &FlashParams,
) -> Result<SamplerOutcome> {
    model_guided(
        space,
        k,
        seed,
        oracle,
        objective,
        params.init_design,
        params.enumeration_limit,
        Acquisition::PredictedBest(&params.tree),
        "flash",
    )
}

/// CoMSA-style sampler: the acquisition is the standard deviation of a
/// bootstrap tree ensemble's predictions; the most uncertain unmeasured
/// configuration is measured next.
pub fn sample_comsa(
    space: &ConfigSpace,
    k: usize,
    seed: u64,
    oracle: &dyn MeasurementOracle,
    objective: &MetricSpec,
    params: &ComsaParams,
) -> Result<SamplerOutcome> {
    model_guided(
        space,
        k,
        seed,
        oracle,
        objective,
        params.init_design,
        params.enumeration_limit,
        Acquisition::EnsembleDisagreement {
            ensemble: params.ensemble,
            tree: &params.tree,
        },
        "comsa",
    )
}

#[allow(clippy::too_many_arguments)]
fn model_guided(
    space: &ConfigSpace,
    k: usize,
    seed: u64,
    oracle: &dyn MeasurementOracle,
    objective: &MetricSpec,
    init_design: usize,
    enumeration_limit: u128,
    acquisition: Acquisition,
    name: &str,
) -> Result<SamplerOutcome> {
    let pool = CandidatePool::new(space, enumeration_limit)?;
    if k > pool.len() {
        return Err(Error::BudgetTooLarge {
            budget: k,
            cardinality: pool.len() as u128,
        });
    }
    if k == 0 {
        return Err(Error::Precondition("budget must be positive".into()));
    }
    let objectives = ObjectiveSpec::new(vec![objective.clone()])?;
    let mut evaluator = BudgetedEvaluator::new(&pool, oracle, &objectives, k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in random_unmeasured(&pool, &|_| false, init_design.min(k), &mut rng) {
        evaluator.evaluate(idx)?;
    }

    let mut pick = 0u64;
    while !evaluator.exhausted() {
        pick += 1;
        let measured = evaluator.measured_indices().to_vec();
        let x_train: Vec<Vec<f64>> = measured.iter().map(|&i| pool.encodings[i].clone()).collect();
        let y_train: Vec<f64> = measured
            .iter()
            .map(|&i| evaluator.cached(i).expect("measured")[0])
            .collect();
        let chosen = match &acquisition {
            Acquisition::PredictedBest(tree_params) => {
                let tree = RegressionTree::fit(&x_train, &y_train, tree_params)?;
                argbest(&pool, &evaluator, |enc| tree.predict_one(enc), false)?
            }
            Acquisition::EnsembleDisagreement { ensemble, tree } => {
                let unmeasured: Vec<usize> =
                    (0..pool.len()).filter(|&i| !evaluator.is_measured(i)).collect();
                let queries: Vec<Vec<f64>> =
                    unmeasured.iter().map(|&i| pool.encodings[i].clone()).collect();
                let stds = ensemble_uncertainty(
                    &x_train,
                    &y_train,
                    &queries,
                    *ensemble,
                    tree,
                    derive_seed(seed, pick),
                )?;
                let mut best: Option<(usize, f64)> = None;
                for (pos, &idx) in unmeasured.iter().enumerate() {
                    if best.map_or(true, |(_, s)| stds[pos] > s) {
                        best = Some((idx, stds[pos]));
                    }
                }
                best.map(|(i, _)| i)
                    .ok_or_else(|| Error::Precondition("no unmeasured candidate left".into()))?
            }
        };
        evaluator.evaluate(chosen)?;
    }
    Ok(evaluator.into_outcome(name, seed))
}

/// Lowest-index argmin (or argmax when `maximize`) of `score` over unmeasured
/// pool entries.
fn argbest(
    pool: &CandidatePool,
    evaluator: &BudgetedEvaluator,
    score: impl Fn(&[f64]) -> Result<f64>,
    maximize: bool,
) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for idx in 0..pool.len() {
        if evaluator.is_measured(idx) {
            continue;
        }
        let s = score(&pool.encodings[idx])?;
        let better = match best {
            None => true,
            Some((_, b)) => {
                if maximize {
                    s > b
                } else {
                    s < b
                }
            }
        };
        if better {
            best = Some((idx, s));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::Precondition("no unmeasured candidate left".into()))
}

/// Standard deviation of bootstrap tree predictions at each query point.
/// Bootstrap resamples are drawn with replacement from a seeded stream.
pub fn ensemble_uncertainty(
    x_train: &[Vec<f64>],
    y_train: &[f64],
    queries: &[Vec<f64>],
    ensemble: usize,
    tree_params: &TreeParams,
    seed: u64,
) -> Result<Vec<f64>> {
    if ensemble == 0 {
        return Err(Error::Precondition("ensemble size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x_train.len();
    let mut predictions = vec![Vec::with_capacity(ensemble); queries.len()];
    for _ in 0..ensemble {
        let mut xb = Vec::with_capacity(n);
        let mut yb = Vec::with_capacity(n);
        for _ in 0..n {
            let at = rng.random_range(0..n);
            xb.push(x_train[at].clone());
            yb.push(y_train[at]);
        }
        let tree = RegressionTree::fit(&xb, &yb, tree_params)?;
        for (q, preds) in queries.iter().zip(predictions.iter_mut()) {
            preds.push(tree.predict_one(q)?);
        }
    }
    Ok(predictions
        .iter()
        .map(|preds| {
            let mean = preds.iter().sum::<f64>() / preds.len() as f64;
            (preds.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / preds.len() as f64).sqrt()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::{ConfigOption, Configuration, OptionKind, OptionValue};
    use crate::sampler::Direction;
    use std::collections::BTreeMap;

    fn line_space(n: i64) -> ConfigSpace {
        ConfigSpace::new(
            vec![ConfigOption::new(
                "x",
                OptionKind::NumericDiscrete,
                (0..n).map(OptionValue::Int).collect(),
            )
            .unwrap()],
            vec![],
        )
        .unwrap()
    }

    fn identity_oracle(cfg: &Configuration) -> Result<BTreeMap<String, f64>> {
        Ok([("y".to_string(), cfg.get("x").unwrap().as_f64().unwrap())].into())
    }

    fn metric() -> MetricSpec {
        MetricSpec {
            name: "y".into(),
            direction: Direction::Minimize,
        }
    }

    #[test]
    fn flash_contract_and_determinism() {
        let space = line_space(30);
        let params = FlashParams::default();
        let a = sample_flash(&space, 12, 5, &identity_oracle, &metric(), &params).unwrap();
        let b = sample_flash(&space, 12, 5, &identity_oracle, &metric(), &params).unwrap();
        assert_eq!(a.sampled, b.sampled);
        assert_eq!(a.sampled.len(), 12);
        let distinct: std::collections::HashSet<_> = a.sampled.iter().collect();
        assert_eq!(distinct.len(), 12);
    }

    #[test]
    fn flash_after_high_init_tends_low() {
        // y = x on {0..10}, minimizing: with the whole-leaf surrogate built on
        // {8, 9} every unmeasured prediction ties, so the rule picks index 0
        let space = line_space(11);
        let pool = CandidatePool::new(&space, 1000).unwrap();
        let objectives = ObjectiveSpec::new(vec![metric()]).unwrap();
        let oracle = identity_oracle;
        let mut evaluator = BudgetedEvaluator::new(&pool, &oracle, &objectives, 3);
        evaluator.evaluate(8).unwrap();
        evaluator.evaluate(9).unwrap();
        let x_train: Vec<Vec<f64>> = evaluator
            .measured_indices()
            .iter()
            .map(|&i| pool.encodings[i].clone())
            .collect();
        let y_train = vec![8.0, 9.0];
        let tree = RegressionTree::fit(&x_train, &y_train, &TreeParams::default()).unwrap();
        let chosen = argbest(&pool, &evaluator, |enc| tree.predict_one(enc), false).unwrap();
        assert_eq!(chosen, 0);
    }

    #[test]
    fn flash_with_splittable_surrogate_goes_left() {
        // init {0, 1, 9, 10}: the tree splits low/high, unmeasured low-region
        // candidates share the best prediction, tie rule picks the lowest
        let space = line_space(11);
        let pool = CandidatePool::new(&space, 1000).unwrap();
        let objectives = ObjectiveSpec::new(vec![metric()]).unwrap();
        let oracle = identity_oracle;
        let mut evaluator = BudgetedEvaluator::new(&pool, &oracle, &objectives, 5);
        for idx in [0, 1, 9, 10] {
            evaluator.evaluate(idx).unwrap();
        }
        let x_train: Vec<Vec<f64>> = evaluator
            .measured_indices()
            .iter()
            .map(|&i| pool.encodings[i].clone())
            .collect();
        let y_train = vec![0.0, 1.0, 9.0, 10.0];
        let tree = RegressionTree::fit(&x_train, &y_train, &TreeParams::default()).unwrap();
        let chosen = argbest(&pool, &evaluator, |enc| tree.predict_one(enc), false).unwrap();
        assert_eq!(chosen, 2);
    }

    #[test]
    fn comsa_constant_targets_pick_lowest_index() {
        let space = line_space(20);
        let oracle = |_: &Configuration| -> Result<BTreeMap<String, f64>> {
            Ok([("y".to_string(), 1.0)].into())
        };
        let params = ComsaParams {
            init_design: 4,
            ..Default::default()
        };
        let outcome = sample_comsa(&space, 6, 2, &oracle, &metric(), &params).unwrap();
        // after the random init, every uncertainty is 0: picks walk the
        // lowest unmeasured indices in order
        let init: std::collections::HashSet<i64> = outcome.sampled[..4]
            .iter()
            .map(|c| c.get("x").unwrap().as_f64().unwrap() as i64)
            .collect();
        let guided: Vec<i64> = outcome.sampled[4..]
            .iter()
            .map(|c| c.get("x").unwrap().as_f64().unwrap() as i64)
            .collect();
        let mut expected = Vec::new();
        for x in 0..20 {
            if !init.contains(&x) {
                expected.push(x);
            }
            if expected.len() == 2 {
                break;
            }
        }
        assert_eq!(guided, expected);
    }

    #[test]
    fn disagreement_concentrates_where_targets_conflict() {
        // region A (x=0): targets 0 and 10 at identical encodings; region B
        // (x=1): constant. Ensemble spread must be larger in A.
        let x_train = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]];
        let y_train = vec![0.0, 10.0, 5.0, 5.0];
        let queries = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let stds = ensemble_uncertainty(
            &x_train,
            &y_train,
            &queries,
            10,
            &TreeParams { max_depth: 2, min_leaf: 1 },
            11,
        )
        .unwrap();
        assert!(stds.iter().all(|s| *s >= 0.0));
        assert!(stds[0] > stds[1], "stds: {stds:?}");
    }
}
