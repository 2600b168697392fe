//! The non-GP baseline samplers behind the common sampler contract:
//! uniform random, distance-based (NSBS-style), prediction-guided
//! (Flash-style), uncertainty-guided (CoMSA-style), and the two
//! evolutionary samplers (single-objective GA, NSGA-III).

mod evolutionary;
mod model_guided;

pub use evolutionary::{das_dennis, sample_genetic, sample_nsga3, GeneticParams, Nsga3Params};
pub use model_guided::{
    ensemble_uncertainty, sample_comsa, sample_flash, ComsaParams, FlashParams,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config_space::{
    enumerate_space, ConfigSpace, Configuration, DEFAULT_ENUMERATION_LIMIT,
};
use crate::error::{Error, Result};
use crate::sampler::{CandidatePool, SamplerOutcome};

/// Uniform sampling without replacement, reproducible from the seed.
pub fn sample_random(space: &ConfigSpace, k: usize, seed: u64) -> Result<SamplerOutcome> {
    let cardinality = space.cardinality();
    if k as u128 > cardinality {
        return Err(Error::BudgetTooLarge {
            budget: k,
            cardinality,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled = if cardinality <= DEFAULT_ENUMERATION_LIMIT {
        let mut pool = enumerate_space(space, DEFAULT_ENUMERATION_LIMIT)?;
        let mut picked = Vec::with_capacity(k);
        for _ in 0..k {
            let at = rng.random_range(0..pool.len());
            picked.push(pool.swap_remove(at));
        }
        picked
    } else {
        // space too large to materialize: rejection-sample distinct configs
        let mut seen = std::collections::HashSet::new();
        let mut picked = Vec::with_capacity(k);
        while picked.len() < k {
            let cfg = Configuration::from_pairs(space.options().iter().map(|o| {
                let v = o.values[rng.random_range(0..o.values.len())].clone();
                (o.name.clone(), v)
            }));
            if space.constraints().iter().any(|c| c.violated_by(&cfg)) {
                continue;
            }
            if seen.insert(cfg.clone()) {
                picked.push(cfg);
            }
        }
        picked
    };
    Ok(SamplerOutcome::new("random", seed, sampled))
}

#[derive(Clone, Debug)]
pub struct NsbsParams {
    pub enumeration_limit: u128,
}

impl Default for NsbsParams {
    fn default() -> Self {
        NsbsParams {
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// Greedy max–min diversity sampling: the first pick is uniform random, each
/// later pick maximizes the minimum Manhattan distance (over encoded
/// vectors) to everything already selected; ties go to the lowest
/// enumeration index.
pub fn sample_nsbs(space: &ConfigSpace, k: usize, seed: u64, params: &NsbsParams) -> Result<SamplerOutcome> {
    let pool = CandidatePool::new(space, params.enumeration_limit)?;
    if k > pool.len() {
        return Err(Error::BudgetTooLarge {
            budget: k,
            cardinality: pool.len() as u128,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..pool.len());
    let mut selected = vec![first];
    let mut min_dist: Vec<f64> = (0..pool.len())
        .map(|i| manhattan(&pool.encodings[i], &pool.encodings[first]))
        .collect();
    while selected.len() < k {
        let mut best = None;
        for i in 0..pool.len() {
            if min_dist[i] == 0.0 && selected.contains(&i) {
                continue;
            }
            if selected.contains(&i) {
                continue;
            }
            if best.map_or(true, |(_, d)| min_dist[i] > d) {
                best = Some((i, min_dist[i]));
            }
        }
        let (next, _) = best.expect("k <= pool size");
        selected.push(next);
        for i in 0..pool.len() {
            let d = manhattan(&pool.encodings[i], &pool.encodings[next]);
            if d < min_dist[i] {
                min_dist[i] = d;
            }
        }
    }
    let sampled = selected.iter().map(|&i| pool.configs[i].clone()).collect();
    Ok(SamplerOutcome::new("nsbs", seed, sampled))
}

pub(crate) fn manhattan(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::{ConfigOption, OptionKind, OptionValue};

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

    #[test]
    fn random_exhausts_whole_space() {
        let space = line_space(12);
        let outcome = sample_random(&space, 12, 0).unwrap();
        let distinct: std::collections::HashSet<_> = outcome.sampled.iter().collect();
        assert_eq!(distinct.len(), 12);
    }

    #[test]
    fn random_rejects_oversized_budget() {
        let space = line_space(12);
        assert!(matches!(
            sample_random(&space, 13, 0),
            Err(Error::BudgetTooLarge { budget: 13, cardinality: 12 })
        ));
    }

    #[test]
    fn random_deterministic() {
        let space = line_space(50);
        assert_eq!(sample_random(&space, 10, 7).unwrap(), sample_random(&space, 10, 7).unwrap());
    }

    #[test]
    fn nsbs_picks_farthest_then_midpoint() {
        // 1-D {0..10}: after {0}, the farthest point is 10, then 5
        let space = line_space(11);
        let params = NsbsParams::default();
        // find a seed whose first uniform pick is index 0
        let mut seed = 0;
        loop {
            let outcome = sample_nsbs(&space, 1, seed, &params).unwrap();
            if outcome.sampled[0].get("x") == Some(&OptionValue::Int(0)) {
                break;
            }
            seed += 1;
        }
        let outcome = sample_nsbs(&space, 3, seed, &params).unwrap();
        let xs: Vec<i64> = outcome
            .sampled
            .iter()
            .map(|c| match c.get("x").unwrap() {
                OptionValue::Int(i) => *i,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(xs, vec![0, 10, 5]);
    }

    #[test]
    fn nsbs_min_distance_sequence_non_increasing() {
        use crate::config_space::encode_configuration;
        let space = line_space(25);
        let outcome = sample_nsbs(&space, 25, 3, &NsbsParams::default()).unwrap();
        let enc: Vec<Vec<f64>> = outcome
            .sampled
            .iter()
            .map(|c| encode_configuration(&space, c).unwrap())
            .collect();
        let mut prev = f64::INFINITY;
        for i in 1..enc.len() {
            let d = (0..i)
                .map(|j| manhattan(&enc[i], &enc[j]))
                .fold(f64::INFINITY, f64::min);
            assert!(d <= prev + 1e-12, "greedy max-min violated at step {i}");
            prev = d;
        }
    }
}
