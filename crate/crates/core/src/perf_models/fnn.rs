//! Feedforward regression network with rectifier hidden layers and an L1
//! weight penalty, trained by full-batch proximal gradient descent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FnnParams {
    pub hidden: Vec<usize>,
    /// Candidate L1 coefficients; the best on a validation split is kept.
    pub lambda_grid: Vec<f64>,
    /// Fixed L1 coefficient; skips the grid search when set.
    pub lambda: Option<f64>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for FnnParams {
    fn default() -> Self {
        FnnParams {
            hidden: vec![64, 64],
            lambda_grid: vec![1e-3, 1e-2, 1e-1],
            lambda: None,
            learning_rate: 1e-2,
            epochs: 2000,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Layer {
    /// Row-major `out × in` weight matrix.
    w: Vec<f64>,
    b: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Layer {
    fn init(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Layer {
        let bound = 1.0 / (cols as f64).sqrt();
        Layer {
            w: (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect(),
            b: vec![0.0; rows],
            rows,
            cols,
        }
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.rows {
            let mut acc = self.b[r];
            let row = &self.w[r * self.cols..(r + 1) * self.cols];
            for (wi, xi) in row.iter().zip(input) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

/// Trained network. Inputs are standardized with the training statistics
/// stored on the model; hidden activations are rectified, the output is
/// linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnnModel {
    layers: Vec<Layer>,
    lambda: f64,
    x_mean: Vec<f64>,
    x_std: Vec<f64>,
    y_mean: f64,
    y_std: f64,
}

impl FnnModel {
    #[allow(clippy::too_many_arguments)]
    fn new(
        dim: usize,
        hidden: &[usize],
        lambda: f64,
        seed: u64,
        x_mean: Vec<f64>,
        x_std: Vec<f64>,
        y_mean: f64,
        y_std: f64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| Layer::init(w[1], w[0], &mut rng))
            .collect();
        FnnModel {
            layers,
            lambda,
            x_mean,
            x_std,
            y_mean,
            y_std,
        }
    }

    pub fn dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn standardize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.x_mean.iter().zip(&self.x_std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    /// Forward pass over a standardized input; returns pre-activations per
    /// layer (needed by backprop) and the scalar output.
    fn forward_std(&self, input: &[f64]) -> (Vec<Vec<f64>>, f64) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut activation = input.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward(&activation, &mut z);
            pre.push(z.clone());
            if li + 1 < self.layers.len() {
                activation = z.into_iter().map(|v| v.max(0.0)).collect();
            } else {
                activation = z;
            }
        }
        let out = pre.last().unwrap()[0];
        (pre, out)
    }

    pub fn predict_one(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: row.len(),
            });
        }
        let out = self.forward_std(&self.standardize(row)).1;
        Ok(self.y_mean + self.y_std * out)
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    /// Training objective: mean squared error on standardized targets plus
    /// λ·Σ|w| (weights only).
    pub fn loss(&self, x: &[Vec<f64>], y: &[f64]) -> Result<f64> {
        let mut mse = 0.0;
        for (row, target) in x.iter().zip(y) {
            let out = self.forward_std(&self.standardize(row)).1;
            let err = out - (target - self.y_mean) / self.y_std;
            mse += err * err / y.len() as f64;
        }
        Ok(mse + self.lambda * self.l1_norm())
    }

    fn l1_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter())
            .map(|w| w.abs())
            .sum()
    }

    /// Analytic gradient of the full objective with respect to the flattened
    /// parameter vector, using sign(0) = 0 for the penalty subgradient.
    /// Returns (loss, gradient).
    pub fn loss_grad(&self, x: &[Vec<f64>], y: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (grads, mse) = self.mse_grad(x, y)?;
        let mut flat = Vec::new();
        for (layer, (gw, gb)) in self.layers.iter().zip(&grads) {
            for (w, g) in layer.w.iter().zip(gw) {
                flat.push(g + self.lambda * w.signum() * if *w == 0.0 { 0.0 } else { 1.0 });
            }
            flat.extend_from_slice(gb);
        }
        Ok((mse + self.lambda * self.l1_norm(), flat))
    }

    /// Gradients of the MSE term alone, layer by layer. Returns
    /// ((dW, db) per layer, mse).
    #[allow(clippy::type_complexity)]
    fn mse_grad(&self, x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<(Vec<f64>, Vec<f64>)>, f64)> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        let n = x.len() as f64;
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
            .collect();
        let mut mse = 0.0;
        for (row, &target) in x.iter().zip(y) {
            let std_row = self.standardize(row);
            let (pre, out) = self.forward_std(&std_row);
            let err = out - (target - self.y_mean) / self.y_std;
            mse += err * err / n;
            // activations feeding each layer
            let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            inputs.push(std_row.clone());
            for z in pre.iter().take(self.layers.len() - 1) {
                inputs.push(z.iter().map(|v| v.max(0.0)).collect());
            }
            // backprop
            let mut delta = vec![2.0 * err / n];
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &inputs[li];
                let (gw, gb) = &mut grads[li];
                for r in 0..layer.rows {
                    gb[r] += delta[r];
                    for c in 0..layer.cols {
                        gw[r * layer.cols + c] += delta[r] * input[c];
                    }
                }
                if li == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.cols];
                for c in 0..layer.cols {
                    let mut acc = 0.0;
                    for r in 0..layer.rows {
                        acc += delta[r] * layer.w[r * layer.cols + c];
                    }
                    // rectifier mask on the previous layer's pre-activation
                    prev[c] = if pre[li - 1][c] > 0.0 { acc } else { 0.0 };
                }
                delta = prev;
            }
        }
        Ok((grads, mse))
    }

    /// Flattened parameters in (weights, biases) per-layer order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(&layer.w);
            out.extend_from_slice(&layer.b);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        let expected: usize = self.layers.iter().map(|l| l.w.len() + l.b.len()).sum();
        if params.len() != expected {
            return Err(Error::LengthMismatch(params.len(), expected));
        }
        let mut cursor = 0;
        for layer in &mut self.layers {
            let nw = layer.w.len();
            let nb = layer.b.len();
            layer.w.copy_from_slice(&params[cursor..cursor + nw]);
            cursor += nw;
            layer.b.copy_from_slice(&params[cursor..cursor + nb]);
            cursor += nb;
        }
        Ok(())
    }
}

/// Trains the network. When `params.lambda` is unset, the L1 coefficient is
/// chosen from `lambda_grid` on a seeded validation split, then the model is
/// refit on all rows with the winner.
pub fn train_fnn(x: &[Vec<f64>], y: &[f64], params: &FnnParams) -> Result<FnnModel> {
    if x.len() < 2 {
        return Err(Error::Precondition("fnn training needs at least 2 rows".into()));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let dim = x[0].len();
    for row in x {
        if row.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fnn feature".into()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fnn target".into()));
    }
    let (x_mean, x_std) = standardization_stats(x, dim);
    let (y_mean, y_std) = target_stats(y);

    let lambda = match params.lambda {
        Some(l) => l,
        None => select_lambda(x, y, params, &x_mean, &x_std)?,
    };
    let mut model = FnnModel::new(
        dim,
        &params.hidden,
        lambda,
        params.seed,
        x_mean,
        x_std,
        y_mean,
        y_std,
    );
    fit(&mut model, x, y, params.learning_rate, params.epochs)?;
    Ok(model)
}

fn select_lambda(
    x: &[Vec<f64>],
    y: &[f64],
    params: &FnnParams,
    x_mean: &[f64],
    x_std: &[f64],
) -> Result<f64> {
    if params.lambda_grid.is_empty() {
        return Ok(0.0);
    }
    if params.lambda_grid.len() == 1 || x.len() < 5 {
        return Ok(params.lambda_grid[0]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_0beef);
    let mut order: Vec<usize> = (0..x.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let n_val = ((x.len() as f64 * params.validation_fraction).round() as usize).clamp(1, x.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let xt: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
    let yt: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
    let xv: Vec<Vec<f64>> = val_idx.iter().map(|&i| x[i].clone()).collect();
    let yv: Vec<f64> = val_idx.iter().map(|&i| y[i]).collect();

    let mut best = (f64::INFINITY, params.lambda_grid[0]);
    let (yt_mean, yt_std) = target_stats(&yt);
    for &lambda in &params.lambda_grid {
        let mut model = FnnModel::new(
            x[0].len(),
            &params.hidden,
            lambda,
            params.seed,
            x_mean.to_vec(),
            x_std.to_vec(),
            yt_mean,
            yt_std,
        );
        fit(&mut model, &xt, &yt, params.learning_rate, params.epochs)?;
        let pred = model.predict(&xv)?;
        let val_mse = pred.iter().zip(&yv).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / yv.len() as f64;
        if val_mse < best.0 {
            best = (val_mse, lambda);
        }
    }
    Ok(best.1)
}

/// Proximal gradient descent: an MSE gradient step followed by
/// soft-thresholding of the weights at lr·λ. Biases carry no penalty.
fn fit(model: &mut FnnModel, x: &[Vec<f64>], y: &[f64], lr: f64, epochs: usize) -> Result<()> {
    for _ in 0..epochs {
        let (grads, _) = model.mse_grad(x, y)?;
        for (layer, (gw, gb)) in model.layers.iter_mut().zip(&grads) {
            let threshold = lr * model.lambda;
            for (w, g) in layer.w.iter_mut().zip(gw) {
                let stepped = *w - lr * g;
                *w = stepped.signum() * (stepped.abs() - threshold).max(0.0);
            }
            for (b, g) in layer.b.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
    }
    Ok(())
}

fn target_stats(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std < 1e-12 { 1.0 } else { std })
}

fn standardization_stats(x: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; dim];
    for row in x {
        for (s, (v, m)) in std.iter_mut().zip(row.iter().zip(&mean)) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in &mut std {
        *s = s.sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    (mean, std)
}
