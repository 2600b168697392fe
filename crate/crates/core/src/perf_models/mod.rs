//! Downstream performance models: a gradient-boosted tree regressor and an
//! L1-regularized feedforward network, plus RMSE and JSON persistence.

mod fnn;
mod gbt;
mod tree;

pub use fnn::{train_fnn, FnnModel, FnnParams};
pub use gbt::{train_gbt, train_gbt_with_trace, GbtModel, GbtParams};
pub use tree::{RegressionTree, TreeNode, TreeParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Either downstream model, behind one prediction surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerfModel {
    Gbt(GbtModel),
    Fnn(FnnModel),
}

impl PerfModel {
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            PerfModel::Gbt(m) => m.predict(rows),
            PerfModel::Fnn(m) => m.predict(rows),
        }
    }

    pub fn save_json(&self, writer: impl std::io::Write) -> Result<()> {
        Ok(serde_json::to_writer(writer, self)?)
    }

    pub fn load_json(reader: impl std::io::Read) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Root mean square error between predictions and ground truth.
pub fn rmse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch(predictions.len(), truth.len()));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput("rmse".into()));
    }
    if predictions.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("rmse input".into()));
    }
    let mse = predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / predictions.len() as f64;
    Ok(mse.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_zero_iff_equal() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(rmse(&[1.0, 2.0], &[1.0, 2.1]).unwrap() > 0.0);
    }

    #[test]
    fn rmse_hand_value() {
        let v = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((v - 12.5f64.sqrt()).abs() < 1e-12);
        assert!((v - 3.5355).abs() < 1e-4);
    }

    #[test]
    fn rmse_homogeneous() {
        let a = [1.0, 2.0, -3.0];
        let b = [0.5, 2.5, 1.0];
        let c = 3.7;
        let scaled_a: Vec<f64> = a.iter().map(|v| c * v).collect();
        let scaled_b: Vec<f64> = b.iter().map(|v| c * v).collect();
        let lhs = rmse(&scaled_a, &scaled_b).unwrap();
        let rhs = c.abs() * rmse(&a, &b).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn rmse_errors() {
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
        assert!(matches!(rmse(&[], &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn model_json_round_trip() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 0.5 + r[1]).collect();
        let gbt = PerfModel::Gbt(train_gbt(&x, &y, &GbtParams { rounds: 10, ..Default::default() }).unwrap());
        let fnn = PerfModel::Fnn(
            train_fnn(&x, &y, &FnnParams { hidden: vec![4], lambda: Some(1e-3), epochs: 20, ..Default::default() })
                .unwrap(),
        );
        for model in [gbt, fnn] {
            let mut buf = Vec::new();
            model.save_json(&mut buf).unwrap();
            let back = PerfModel::load_json(buf.as_slice()).unwrap();
            let probe: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 + 0.25, 1.0]).collect();
            let a = model.predict(&probe).unwrap();
            let b = back.predict(&probe).unwrap();
            for (pa, pb) in a.iter().zip(&b) {
                assert!((pa - pb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn predict_pointwise() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let model = PerfModel::Gbt(train_gbt(&x, &y, &GbtParams::default()).unwrap());
        let forward = model.predict(&x).unwrap();
        let mut reversed_x = x.clone();
        reversed_x.reverse();
        let mut backward = model.predict(&reversed_x).unwrap();
        backward.reverse();
        assert_eq!(forward, backward);
        assert!(model.predict(&[]).unwrap().is_empty());
    }
}
