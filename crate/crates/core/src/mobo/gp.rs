//! Gaussian-process regression with a squared-exponential kernel, targets
//! standardized internally, hyperparameters by grid-search marginal
//! likelihood.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpParams {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            length_scale: 1.0,
            signal_variance: 1.0,
            noise_variance: 1e-6,
        }
    }
}

/// Kernel hyperparameters: fixed, or selected by maximizing the log marginal
/// likelihood over a fixed 5×3×3 grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GpHyper {
    Fixed(GpParams),
    Auto,
}

const GRID_LENGTH_SCALES: [f64; 5] = [0.1, 0.3, 1.0, 3.0, 10.0];
const GRID_SIGNAL_VARIANCES: [f64; 3] = [0.25, 1.0, 4.0];
const GRID_NOISE_VARIANCES: [f64; 3] = [1e-6, 1e-4, 1e-2];

/// Fitted GP posterior with a cached Cholesky factorization.
pub struct GpModel {
    x: Vec<Vec<f64>>,
    l: DMatrix<f64>,
    alpha: DVector<f64>,
    params: GpParams,
    y_mean: f64,
    y_std: f64,
    dim: usize,
    log_marginal: f64,
}

fn kernel(a: &[f64], b: &[f64], params: &GpParams) -> f64 {
    let mut sq = 0.0;
    for (x, y) in a.iter().zip(b) {
        sq += (x - y) * (x - y);
    }
    params.signal_variance * (-sq / (2.0 * params.length_scale * params.length_scale)).exp()
}

/// Cholesky with an absolute jitter ladder from 1e-10 to 1e-4.
pub(crate) fn cholesky_with_jitter(matrix: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = matrix.clone().cholesky() {
        return Ok(c);
    }
    let mut jitter = 1e-10;
    while jitter <= 1e-4 {
        let mut jittered = matrix.clone();
        for i in 0..matrix.nrows() {
            jittered[(i, i)] += jitter;
        }
        if let Some(c) = jittered.cholesky() {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::Factorization)
}

/// Fits a GP to the given inputs/targets.
pub fn gp_fit(x: &[Vec<f64>], y: &[f64], hyper: GpHyper) -> Result<GpModel> {
    if x.is_empty() || x.len() != y.len() {
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
            return Err(Error::NonFinite("gp input".into()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gp target".into()));
    }
    match hyper {
        GpHyper::Fixed(params) => fit_with(x, y, params),
        GpHyper::Auto => {
            let mut best: Option<GpModel> = None;
            for &length_scale in &GRID_LENGTH_SCALES {
                for &signal_variance in &GRID_SIGNAL_VARIANCES {
                    for &noise_variance in &GRID_NOISE_VARIANCES {
                        let params = GpParams {
                            length_scale,
                            signal_variance,
                            noise_variance,
                        };
                        let Ok(model) = fit_with(x, y, params) else {
                            continue;
                        };
                        if best
                            .as_ref()
                            .map_or(true, |b| model.log_marginal > b.log_marginal)
                        {
                            best = Some(model);
                        }
                    }
                }
            }
            best.ok_or(Error::Factorization)
        }
    }
}

fn fit_with(x: &[Vec<f64>], y: &[f64], params: GpParams) -> Result<GpModel> {
    let n = x.len();
    let dim = x[0].len();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n as f64;
    let y_std = if var.sqrt() < 1e-12 { 1.0 } else { var.sqrt() };
    let y_standardized = DVector::from_iterator(n, y.iter().map(|v| (v - y_mean) / y_std));

    let mut k = DMatrix::from_fn(n, n, |i, j| kernel(&x[i], &x[j], &params));
    for i in 0..n {
        k[(i, i)] += params.noise_variance;
    }
    let chol = cholesky_with_jitter(&k)?;
    let alpha = chol.solve(&y_standardized);
    let l = chol.l();
    let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    let log_marginal = -0.5 * y_standardized.dot(&alpha)
        - log_det
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    Ok(GpModel {
        x: x.to_vec(),
        l,
        alpha,
        params,
        y_mean,
        y_std,
        dim,
        log_marginal,
    })
}

impl GpModel {
    pub fn params(&self) -> &GpParams {
        &self.params
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_std(&self) -> f64 {
        self.y_std
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn kstar(&self, query: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| kernel(xi, query, &self.params)),
        )
    }

    /// Posterior mean and (latent) variance at a query point, de-standardized.
    pub fn predict(&self, query: &[f64]) -> Result<(f64, f64)> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        let kstar = self.kstar(query);
        let mean_std = kstar.dot(&self.alpha);
        let v = self
            .l
            .solve_lower_triangular(&kstar)
            .ok_or(Error::Factorization)?;
        let var_std = (self.params.signal_variance - v.dot(&v)).max(0.0);
        Ok((
            self.y_mean + self.y_std * mean_std,
            self.y_std * self.y_std * var_std,
        ))
    }

    /// Gradient of the posterior mean with respect to the query point.
    pub fn mean_grad(&self, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        let ell2 = self.params.length_scale * self.params.length_scale;
        let mut grad = vec![0.0; self.dim];
        for (xi, alpha_i) in self.x.iter().zip(self.alpha.iter()) {
            let k = kernel(xi, query, &self.params);
            for d in 0..self.dim {
                grad[d] += self.y_std * alpha_i * k * (xi[d] - query[d]) / ell2;
            }
        }
        Ok(grad)
    }

    /// Joint posterior over a finite candidate set: de-standardized mean
    /// vector and covariance matrix.
    pub fn joint_posterior(&self, queries: &[Vec<f64>]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let c = queries.len();
        for q in queries {
            if q.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: q.len(),
                });
            }
        }
        let n = self.x.len();
        let kxc = DMatrix::from_fn(n, c, |i, j| kernel(&self.x[i], &queries[j], &self.params));
        let v = self
            .l
            .solve_lower_triangular(&kxc)
            .ok_or(Error::Factorization)?;
        let mut cov = DMatrix::from_fn(c, c, |i, j| kernel(&queries[i], &queries[j], &self.params));
        cov -= v.transpose() * &v;
        cov *= self.y_std * self.y_std;
        let means: Vec<f64> = (0..c)
            .map(|j| self.y_mean + self.y_std * kxc.column(j).dot(&self.alpha))
            .collect();
        Ok((means, cov))
    }
}

/// Free-function form of [`GpModel::predict`].
pub fn gp_predict(model: &GpModel, x: &[f64]) -> Result<(f64, f64)> {
    model.predict(x)
}
