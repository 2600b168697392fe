//! Squared-error gradient boosting over depth-bounded regression trees.

use serde::{Deserialize, Serialize};

use super::rmse;
use super::tree::{RegressionTree, TreeParams};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub rounds: usize,
    pub depth: usize,
    pub shrinkage: f64,
    pub min_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            rounds: 100,
            depth: 4,
            shrinkage: 0.1,
            min_leaf: 2,
        }
    }
}

/// Boosted model: prediction = base + shrinkage · Σ tree outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    base: f64,
    shrinkage: f64,
    trees: Vec<RegressionTree>,
    dim: usize,
}

impl GbtModel {
    pub fn predict_one(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        let mut out = self.base;
        for tree in &self.trees {
            out += self.shrinkage * tree.predict_one(row)?;
        }
        Ok(out)
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rounds(&self) -> usize {
        self.trees.len()
    }
}

/// Trains a booster. Each round fits one tree to the current residuals.
pub fn train_gbt(x: &[Vec<f64>], y: &[f64], params: &GbtParams) -> Result<GbtModel> {
    train_gbt_with_trace(x, y, params).map(|(m, _)| m)
}

/// Like [`train_gbt`] but also returns the training RMSE after each round
/// (index 0 is the base-score-only model).
pub fn train_gbt_with_trace(
    x: &[Vec<f64>],
    y: &[f64],
    params: &GbtParams,
) -> Result<(GbtModel, Vec<f64>)> {
    if x.is_empty() {
        return Err(Error::EmptyInput("gbt training set".into()));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gbt target".into()));
    }
    let tree_params = TreeParams {
        max_depth: params.depth,
        min_leaf: params.min_leaf,
    };
    let base = y.iter().sum::<f64>() / y.len() as f64;
    let mut prediction = vec![base; y.len()];
    let mut residuals: Vec<f64> = y.iter().zip(&prediction).map(|(t, p)| t - p).collect();
    let mut trace = vec![rmse_of(&prediction, y)];
    let mut trees = Vec::with_capacity(params.rounds);
    for _ in 0..params.rounds {
        let tree = RegressionTree::fit(x, &residuals, &tree_params)?;
        for (i, row) in x.iter().enumerate() {
            prediction[i] += params.shrinkage * tree.predict_one(row)?;
            residuals[i] = y[i] - prediction[i];
        }
        trace.push(rmse_of(&prediction, y));
        trees.push(tree);
    }
    Ok((
        GbtModel {
            base,
            shrinkage: params.shrinkage,
            trees,
            dim: x[0].len(),
        },
        trace,
    ))
}

fn rmse_of(pred: &[f64], truth: &[f64]) -> f64 {
    rmse(pred, truth).expect("equal non-empty lengths")
}
