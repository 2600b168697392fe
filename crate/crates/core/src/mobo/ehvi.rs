//! Expected hypervolume improvement by quasi-Monte Carlo, and the
//! EHVI-guided sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::gp::{gp_fit, GpHyper, GpModel};
use super::pareto::{hypervolume, union_volume, ParetoFront};
use crate::config_space::{ConfigSpace, DEFAULT_ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::sampler::{
    derive_seed, BudgetedEvaluator, CandidatePool, MeasurementOracle, ObjectiveSpec,
    SamplerOutcome,
};

/// Number of low-discrepancy draws used by [`ehvi`].
pub const EHVI_QMC_DRAWS: usize = 2048;

const HALTON_BASES: [u64; 4] = [2, 3, 5, 7];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut fraction = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * fraction;
        index /= base;
        fraction /= base as f64;
    }
    result
}

/// Fixed table of standard-normal low-discrepancy draws: a Cranley–Patterson
/// rotation of the Halton sequence pushed through the normal quantile.
/// Deterministic given the seed.
pub struct QmcNormals {
    z: Vec<Vec<f64>>,
}

impl QmcNormals {
    pub fn generate(draws: usize, dim: usize, seed: u64) -> QmcNormals {
        assert!(dim <= HALTON_BASES.len(), "at most 4 objectives supported");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let z = (1..=draws as u64)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        let u = (radical_inverse(i, HALTON_BASES[j]) + shift[j]).fract();
                        normal.inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12))
                    })
                    .collect()
            })
            .collect();
        QmcNormals { z }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// 2-D front as a staircase for O(front) improvement queries.
struct Staircase2d {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ref0: f64,
    ref1: f64,
}

impl Staircase2d {
    fn new(front: &ParetoFront) -> Staircase2d {
        let mut pts = front.points().to_vec();
        pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        Staircase2d {
            xs: pts.iter().map(|p| p[0]).collect(),
            ys: pts.iter().map(|p| p[1]).collect(),
            ref0: front.reference()[0],
            ref1: front.reference()[1],
        }
    }

    /// Hypervolume gained by adding the point (a, b) to the front.
    fn improvement(&self, a: f64, b: f64) -> f64 {
        if a >= self.ref0 || b >= self.ref1 {
            return 0.0;
        }
        let start = self.xs.partition_point(|&x| x <= a);
        let mut envelope = if start == 0 { self.ref1 } else { self.ys[start - 1] };
        if envelope <= b {
            return 0.0; // dominated by an existing point
        }
        let mut x = a;
        let mut gained = 0.0;
        for i in start..self.xs.len() {
            gained += (self.xs[i] - x) * (envelope - b);
            x = self.xs[i];
            envelope = self.ys[i];
            if envelope <= b {
                return gained;
            }
        }
        gained + (self.ref0 - x) * (envelope - b)
    }
}

/// Monte Carlo estimate of E[HV(front ∪ {Y}) − HV(front)] with independent
/// Gaussian marginals at the candidate, using the supplied draw table.
pub fn ehvi_from_posterior(
    means: &[f64],
    variances: &[f64],
    front: &ParetoFront,
    draws: &QmcNormals,
) -> Result<f64> {
    let dim = front.dim();
    if means.len() != dim || variances.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: means.len(),
        });
    }
    if variances.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::NonFinite("posterior variance".into()));
    }
    let sds: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let staircase = (dim == 2).then(|| Staircase2d::new(front));
    let base = if dim == 2 { 0.0 } else { hypervolume(front)? };
    let mut total = 0.0;
    let mut y = vec![0.0; dim];
    for z in &draws.z {
        for j in 0..dim {
            y[j] = means[j] + sds[j] * z[j];
        }
        let gained = match &staircase {
            Some(s) => s.improvement(y[0], y[1]),
            None => {
                if y.iter().zip(front.reference()).all(|(v, r)| v < r) {
                    let mut pts = front.points().to_vec();
                    pts.push(y.clone());
                    union_volume(&pts, front.reference()) - base
                } else {
                    0.0
                }
            }
        };
        total += gained;
    }
    Ok(total / draws.len() as f64)
}

/// Expected hypervolume improvement of measuring `x`, with one independent
/// GP posterior per objective and M = 2048 fixed low-discrepancy draws.
pub fn ehvi(models: &[GpModel], x: &[f64], front: &ParetoFront, seed: u64) -> Result<f64> {
    if models.len() != front.dim() {
        return Err(Error::DimensionMismatch {
            expected: front.dim(),
            got: models.len(),
        });
    }
    let mut means = Vec::with_capacity(models.len());
    let mut variances = Vec::with_capacity(models.len());
    for model in models {
        let (m, v) = model.predict(x)?;
        means.push(m);
        variances.push(v);
    }
    let draws = QmcNormals::generate(EHVI_QMC_DRAWS, front.dim(), seed);
    ehvi_from_posterior(&means, &variances, front, &draws)
}

/// Reference point strictly worse than the worst observed value in every
/// objective: `worst + 0.1·|worst|`, nudged when the worst is zero.
pub fn reference_point(worsts: &[f64]) -> Vec<f64> {
    worsts
        .iter()
        .map(|&w| if w.abs() > 1e-12 { w + 0.1 * w.abs() } else { 1e-9 })
        .collect()
}

#[derive(Clone, Debug)]
pub struct EhviParams {
    pub init_design: usize,
    pub qmc_draws: usize,
    pub gp: GpHyper,
    pub enumeration_limit: u128,
}

impl Default for EhviParams {
    fn default() -> Self {
        EhviParams {
            init_design: 5,
            qmc_draws: EHVI_QMC_DRAWS,
            gp: GpHyper::Auto,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// EHVI sampler: random initial design, then greedy argmax-EHVI picks with
/// per-objective GPs refit on every measurement.
pub fn sample_ehvi(
    space: &ConfigSpace,
    k: usize,
    seed: u64,
    oracle: &dyn MeasurementOracle,
    objectives: &ObjectiveSpec,
    params: &EhviParams,
) -> Result<SamplerOutcome> {
    sample_gp_guided(space, k, seed, oracle, objectives, GpGuided::Ehvi(params))
}

pub(super) enum GpGuided<'a> {
    Ehvi(&'a EhviParams),
    Tsemo(&'a super::tsemo::TsemoParams),
}

/// Shared scaffold for the two GP-based samplers: checks, pool setup, random
/// initial design, then per-pick acquisition until the budget is spent.
pub(super) fn sample_gp_guided(
    space: &ConfigSpace,
    k: usize,
    seed: u64,
    oracle: &dyn MeasurementOracle,
    objectives: &ObjectiveSpec,
    strategy: GpGuided,
) -> Result<SamplerOutcome> {
    let m = objectives.len();
    if !(2..=4).contains(&m) {
        return Err(Error::Precondition(format!(
            "GP-guided samplers support 2 to 4 objectives, got {m}"
        )));
    }
    let (name, init_design, enumeration_limit, gp) = match &strategy {
        GpGuided::Ehvi(p) => ("ehvi", p.init_design, p.enumeration_limit, p.gp),
        GpGuided::Tsemo(p) => ("tsemo", p.init_design, p.enumeration_limit, p.gp),
    };
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
    let mut evaluator = BudgetedEvaluator::new(&pool, oracle, objectives, k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = crate::sampler::random_unmeasured(
        &pool,
        &|_| false,
        init_design.min(k),
        &mut rng,
    );
    for idx in init {
        evaluator.evaluate(idx)?;
    }

    let mut pick = 0u64;
    while !evaluator.exhausted() {
        pick += 1;
        let measured: Vec<usize> = evaluator.measured_indices().to_vec();
        let x_train: Vec<Vec<f64>> = measured.iter().map(|&i| pool.encodings[i].clone()).collect();
        let observed: Vec<Vec<f64>> = measured
            .iter()
            .map(|&i| evaluator.cached(i).expect("measured").to_vec())
            .collect();
        let models: Vec<GpModel> = (0..m)
            .map(|j| {
                let y: Vec<f64> = observed.iter().map(|v| v[j]).collect();
                gp_fit(&x_train, &y, gp)
            })
            .collect::<Result<_>>()?;

        let chosen = match &strategy {
            GpGuided::Ehvi(p) => pick_by_ehvi(&pool, &evaluator, &models, &observed, p, seed, pick)?,
            GpGuided::Tsemo(p) => {
                super::tsemo::pick_by_posterior_draw(&pool, &evaluator, &models, p, seed, pick)?
            }
        };
        evaluator.evaluate(chosen)?;
    }
    Ok(evaluator.into_outcome(name, seed))
}

fn pick_by_ehvi(
    pool: &CandidatePool,
    evaluator: &BudgetedEvaluator,
    models: &[GpModel],
    observed: &[Vec<f64>],
    params: &EhviParams,
    seed: u64,
    pick: u64,
) -> Result<usize> {
    let m = models.len();
    let worsts: Vec<f64> = (0..m)
        .map(|j| observed.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let front = ParetoFront::from_observations(observed, reference_point(&worsts))?;
    let draws = QmcNormals::generate(params.qmc_draws, m, derive_seed(seed, pick));
    let mut best: Option<(usize, f64)> = None;
    for idx in 0..pool.len() {
        if evaluator.is_measured(idx) {
            continue;
        }
        let mut means = Vec::with_capacity(m);
        let mut variances = Vec::with_capacity(m);
        for model in models {
            let (mean, var) = model.predict(&pool.encodings[idx])?;
            means.push(mean);
            variances.push(var);
        }
        let score = ehvi_from_posterior(&means, &variances, &front, &draws)?;
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((idx, score));
        }
    }
    best.map(|(idx, _)| idx)
        .ok_or_else(|| Error::Precondition("no unmeasured candidate left".into()))
}
