//! Thompson-sampling multi-objective sampler: one joint posterior draw per
//! objective over the finite candidate set, then a uniform pick from the
//! sampled Pareto front.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ehvi::{sample_gp_guided, GpGuided};
use super::gp::{cholesky_with_jitter, GpHyper, GpModel};
use super::pareto::non_dominated_sort;
use crate::config_space::{ConfigSpace, DEFAULT_ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::sampler::{
    derive_seed, BudgetedEvaluator, CandidatePool, Direction, MeasurementOracle, ObjectiveSpec,
    SamplerOutcome,
};

#[derive(Clone, Debug)]
pub struct TsemoParams {
    pub init_design: usize,
    /// Candidate-set size above which the joint draw runs on a subsample.
    pub joint_draw_limit: usize,
    /// Size of the seeded uniform subsample used beyond the limit.
    pub subsample: usize,
    pub gp: GpHyper,
    pub enumeration_limit: u128,
}

impl Default for TsemoParams {
    fn default() -> Self {
        TsemoParams {
            init_design: 5,
            joint_draw_limit: 5000,
            subsample: 2000,
            gp: GpHyper::Auto,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// TSEMO-style sampler over a finite space.
pub fn sample_tsemo(
    space: &ConfigSpace,
    k: usize,
    seed: u64,
    oracle: &dyn MeasurementOracle,
    objectives: &ObjectiveSpec,
    params: &TsemoParams,
) -> Result<SamplerOutcome> {
    sample_gp_guided(space, k, seed, oracle, objectives, GpGuided::Tsemo(params))
}

pub(super) fn pick_by_posterior_draw(
    pool: &CandidatePool,
    evaluator: &BudgetedEvaluator,
    models: &[GpModel],
    params: &TsemoParams,
    seed: u64,
    pick: u64,
) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, pick ^ 0x7e5e_0000));
    let mut candidates: Vec<usize> = (0..pool.len())
        .filter(|&i| !evaluator.is_measured(i))
        .collect();
    if candidates.is_empty() {
        return Err(Error::Precondition("no unmeasured candidate left".into()));
    }
    if candidates.len() > params.joint_draw_limit {
        let picked = rand::seq::index::sample(&mut rng, candidates.len(), params.subsample.min(candidates.len()));
        let mut subsampled: Vec<usize> = picked.iter().map(|i| candidates[i]).collect();
        subsampled.sort_unstable();
        candidates = subsampled;
    }
    let queries: Vec<Vec<f64>> = candidates.iter().map(|&i| pool.encodings[i].clone()).collect();

    // one joint Gaussian draw per objective over the candidate set
    let c = candidates.len();
    let mut sampled = vec![vec![0.0; models.len()]; c];
    for (j, model) in models.iter().enumerate() {
        let (means, cov) = model.joint_posterior(&queries)?;
        let chol = cholesky_with_jitter(&cov)?;
        let z = DVector::from_iterator(c, (0..c).map(|_| standard_normal(&mut rng)));
        let draw = chol.l() * z;
        for i in 0..c {
            sampled[i][j] = means[i] + draw[i];
        }
    }
    let directions = vec![Direction::Minimize; models.len()];
    let fronts = non_dominated_sort(&sampled, &directions)?;
    let first = &fronts[0];
    let choice = first[rng.random_range(0..first.len())];
    Ok(candidates[choice])
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rand_distr::StandardNormal.sample(rng)
}

use rand_distr::Distribution;
