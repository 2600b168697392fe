//! Axis-aligned CART regression tree with squared-error splits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 4,
            min_leaf: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    root: TreeNode,
    dim: usize,
}

impl RegressionTree {
    /// Greedy depth-bounded fit. Split thresholds are midpoints between
    /// consecutive distinct feature values; ties resolve to the lowest
    /// feature index, then the lowest threshold.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyInput("tree training set".into()));
        }
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        let dim = x[0].len();
        for row in x {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("tree feature".into()));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tree target".into()));
        }
        let indices: Vec<usize> = (0..x.len()).collect();
        let root = build(x, y, &indices, params, 0);
        Ok(RegressionTree { root, dim })
    }

    pub fn predict_one(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value } => return Ok(*value),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn mean(y: &[f64], indices: &[usize]) -> f64 {
    indices.iter().map(|&i| y[i]).sum::<f64>() / indices.len() as f64
}

fn build(x: &[Vec<f64>], y: &[f64], indices: &[usize], params: &TreeParams, depth: usize) -> TreeNode {
    let leaf = TreeNode::Leaf {
        value: mean(y, indices),
    };
    if depth >= params.max_depth || indices.len() < 2 * params.min_leaf {
        return leaf;
    }
    let Some((feature, threshold)) = best_split(x, y, indices, params.min_leaf) else {
        return leaf;
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        indices.iter().partition(|&&i| x[i][feature] <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(build(x, y, &left_idx, params, depth + 1)),
        right: Box::new(build(x, y, &right_idx, params, depth + 1)),
    }
}

/// Best (feature, threshold) by summed squared error, via sorted prefix sums.
fn best_split(x: &[Vec<f64>], y: &[f64], indices: &[usize], min_leaf: usize) -> Option<(usize, f64)> {
    let dim = x[indices[0]].len();
    let n = indices.len();
    let mut best: Option<(f64, usize, f64)> = None;
    for feature in 0..dim {
        let mut order: Vec<usize> = indices.to_vec();
        order.sort_by(|&a, &b| {
            x[a][feature]
                .partial_cmp(&x[b][feature])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut prefix_sum = 0.0;
        let mut prefix_sq = 0.0;
        let total_sum: f64 = order.iter().map(|&i| y[i]).sum();
        let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();
        for split_at in 1..n {
            let prev = order[split_at - 1];
            prefix_sum += y[prev];
            prefix_sq += y[prev] * y[prev];
            let left_val = x[prev][feature];
            let right_val = x[order[split_at]][feature];
            if left_val == right_val {
                continue; // cannot separate equal feature values
            }
            if split_at < min_leaf || n - split_at < min_leaf {
                continue;
            }
            let nl = split_at as f64;
            let nr = (n - split_at) as f64;
            let right_sum = total_sum - prefix_sum;
            let sse = (prefix_sq - prefix_sum * prefix_sum / nl)
                + ((total_sq - prefix_sq) - right_sum * right_sum / nr);
            let threshold = 0.5 * (left_val + right_val);
            let better = match best {
                None => true,
                Some((best_sse, _, _)) => sse < best_sse - 1e-12,
            };
            if better {
                best = Some((sse, feature, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_clear_step() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 10.0 }).collect();
        let tree = RegressionTree::fit(&x, &y, &TreeParams::default()).unwrap();
        assert_eq!(tree.predict_one(&[2.0]).unwrap(), 0.0);
        assert_eq!(tree.predict_one(&[7.0]).unwrap(), 10.0);
    }

    #[test]
    fn min_leaf_prevents_tiny_splits() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![0.0, 10.0];
        let tree = RegressionTree::fit(&x, &y, &TreeParams { max_depth: 4, min_leaf: 2 }).unwrap();
        // cannot split two points with min_leaf 2: single mean leaf
        assert_eq!(tree.predict_one(&[0.0]).unwrap(), 5.0);
        assert_eq!(tree.predict_one(&[1.0]).unwrap(), 5.0);
    }

    #[test]
    fn constant_targets_single_leaf() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y = vec![3.0; 6];
        let tree = RegressionTree::fit(&x, &y, &TreeParams::default()).unwrap();
        assert_eq!(tree.predict_one(&[100.0]).unwrap(), 3.0);
    }

    #[test]
    fn rejects_non_finite() {
        let err = RegressionTree::fit(&[vec![f64::NAN]], &[1.0], &TreeParams::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }
}
