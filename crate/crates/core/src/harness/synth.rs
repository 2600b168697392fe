//! Seeded synthetic performance landscapes: a desk-scale stand-in for real
//! measurement campaigns, with controlled sensitivity structure and a
//! built-in trade-off between the two metrics.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config_space::{
    enumerate_space, ConfigSpace, OptionKind, OptionValue, DEFAULT_ENUMERATION_LIMIT,
};
use crate::error::{Error, Result};
use crate::sampler::MetricSpec;

use super::dataset::{MeasuredDataset, Provenance, SpaceMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub space: ConfigSpace,
    /// Options that contribute to the metrics; everything else contributes
    /// exactly zero.
    pub sensitive: BTreeSet<String>,
    /// Pairwise interaction terms between sensitive options.
    #[serde(default)]
    pub interactions: Vec<(String, String)>,
    /// Gaussian measurement-noise standard deviation, fixed per row.
    #[serde(default)]
    pub noise: f64,
    pub seed: u64,
    #[serde(default = "default_metric_names")]
    pub metric_names: [String; 2],
    #[serde(default = "default_system_name")]
    pub system: String,
}

fn default_metric_names() -> [String; 2] {
    ["time".into(), "memory".into()]
}

fn default_system_name() -> String {
    "synthetic".into()
}

/// Generates the landscape: `y_m(cfg) = Σ w_{m,o}·f_o(value) +
/// Σ w'_{m,(o,o')}·f_o·f_{o'} + ε`, with seeded weights chosen so the two
/// metrics trade off (shared terms with opposite signs).
pub fn synth_landscape(spec: &SynthSpec) -> Result<MeasuredDataset> {
    for name in &spec.sensitive {
        if spec.space.option(name).is_none() {
            return Err(Error::UnknownOption(name.clone()));
        }
    }
    for (a, b) in &spec.interactions {
        if !spec.sensitive.contains(a) || !spec.sensitive.contains(b) {
            return Err(Error::Precondition(format!(
                "interaction ({a}, {b}) references a non-sensitive option"
            )));
        }
    }
    if !spec.noise.is_finite() || spec.noise < 0.0 {
        return Err(Error::NonFinite("noise standard deviation".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // per-option value scores in value-list order
    let mut scores: HashMap<&str, Vec<f64>> = HashMap::new();
    for opt in spec.space.options() {
        if !spec.sensitive.contains(&opt.name) {
            continue;
        }
        let table = match opt.kind {
            OptionKind::NumericDiscrete | OptionKind::Boolean => {
                let lo = opt.values.first().and_then(OptionValue::as_f64).unwrap();
                let hi = opt.values.last().and_then(OptionValue::as_f64).unwrap();
                opt.values
                    .iter()
                    .map(|v| {
                        let x = v.as_f64().unwrap();
                        if hi > lo {
                            (x - lo) / (hi - lo)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            OptionKind::Categorical => (0..opt.values.len())
                .map(|_| rng.random_range(0.0..1.0))
                .collect(),
        };
        scores.insert(opt.name.as_str(), table);
    }
    // opposite-sign weights give the two metrics a built-in trade-off
    let mut weights: HashMap<&str, [f64; 2]> = HashMap::new();
    for name in &spec.sensitive {
        let w1 = rng.random_range(0.5..2.0);
        let ratio = rng.random_range(0.5..1.5);
        weights.insert(name.as_str(), [w1, -w1 * ratio]);
    }
    let mut pair_weights: Vec<[f64; 2]> = Vec::new();
    for _ in &spec.interactions {
        let w1 = rng.random_range(0.25..1.0);
        let ratio = rng.random_range(0.5..1.5);
        pair_weights.push([w1, -w1 * ratio]);
    }

    let noise = if spec.noise > 0.0 {
        Some(Normal::new(0.0, spec.noise).map_err(|e| Error::NonFinite(e.to_string()))?)
    } else {
        None
    };
    let value_score = |scores: &HashMap<&str, Vec<f64>>, cfg: &crate::config_space::Configuration, name: &str| -> f64 {
        let opt = spec.space.option(name).expect("validated");
        let value = cfg.get(name).expect("enumerated");
        let at = opt.values.iter().position(|v| v == value).expect("admissible");
        scores[name][at]
    };

    const BASES: [f64; 2] = [10.0, 10.0];
    let mut rows = HashMap::new();
    for cfg in enumerate_space(&spec.space, DEFAULT_ENUMERATION_LIMIT)? {
        let mut y = BASES;
        for name in &spec.sensitive {
            let f = value_score(&scores, &cfg, name);
            let w = weights[name.as_str()];
            y[0] += w[0] * f;
            y[1] += w[1] * f;
        }
        for ((a, b), w) in spec.interactions.iter().zip(&pair_weights) {
            let f = value_score(&scores, &cfg, a) * value_score(&scores, &cfg, b);
            y[0] += w[0] * f;
            y[1] += w[1] * f;
        }
        if let Some(n) = &noise {
            y[0] += n.sample(&mut rng);
            y[1] += n.sample(&mut rng);
        }
        rows.insert(
            cfg,
            BTreeMap::from([
                (spec.metric_names[0].clone(), y[0]),
                (spec.metric_names[1].clone(), y[1]),
            ]),
        );
    }
    MeasuredDataset::new(
        spec.space.clone(),
        vec![
            MetricSpec::minimize(spec.metric_names[0].clone()),
            MetricSpec::minimize(spec.metric_names[1].clone()),
        ],
        rows,
        Provenance {
            system: spec.system.clone(),
            mode: SpaceMode::Full,
            parent: None,
        },
    )
}
