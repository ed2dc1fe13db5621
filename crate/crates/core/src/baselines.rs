//! Exact-label online baselines: PRank and the multiclass perceptron.

use crate::error::{check_dims, Error, Result};
use crate::model::{dot, predict_from_score, IntervalInstance};

fn exact_label(inst: &IntervalInstance) -> Result<usize> {
    inst.exact_label
        .ok_or_else(|| Error::input("baselines train on exact labels; instance has none"))
}

fn check_label(y: usize, k: usize) -> Result<()> {
    if y < 1 || y > k {
        return Err(Error::input(format!("label {y} outside 1..={k}")));
    }
    Ok(())
}

/// Perceptron ranking with one weight vector and `K - 1` thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct PRankModel {
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl PRankModel {
    pub fn zeros(dim: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::input("PRank needs K >= 2 classes"));
        }
        Ok(Self {
            weights: vec![0.0; dim],
            thresholds: vec![0.0; num_classes - 1],
        })
    }

    pub fn num_classes(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dims(self.weights.len(), x.len())?;
        Ok(dot(&self.weights, x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(predict_from_score(&self.thresholds, self.score(x)?))
    }

    /// Applies the threshold-wise correction and returns the label predicted
    /// beforehand.
    ///
    /// Threshold `i` wants `w·x - θ_i` to have the sign of `y > i`. Every
    /// threshold whose product with that sign is `<= 0` contributes its sign
    /// to a combined step on `w` and moves itself by the opposite amount.
    pub fn update(&mut self, x: &[f64], y: usize) -> Result<usize> {
        check_label(y, self.num_classes())?;
        let score = self.score(x)?;
        let predicted = predict_from_score(&self.thresholds, score);
        let mut step = 0.0;
        for (j, theta) in self.thresholds.iter_mut().enumerate() {
            let target = if y > j + 1 { 1.0 } else { -1.0 };
            if target * (score - *theta) <= 0.0 {
                step += target;
                *theta -= target;
            }
        }
        if step != 0.0 {
            for (w, xi) in self.weights.iter_mut().zip(x) {
                *w += step * xi;
            }
        }
        Ok(predicted)
    }
}

/// Multiclass perceptron: one weight vector per class, argmax prediction with
/// ties going to the lowest class.
#[derive(Debug, Clone, PartialEq)]
pub struct McpModel {
    pub weights: Vec<Vec<f64>>,
}

impl McpModel {
    pub fn zeros(dim: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::input("the multiclass perceptron needs K >= 2 classes"));
        }
        Ok(Self {
            weights: vec![vec![0.0; dim]; num_classes],
        })
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        check_dims(self.weights[0].len(), x.len())?;
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, w) in self.weights.iter().enumerate() {
            let s = dot(w, x);
            if s > best_score {
                best = k;
                best_score = s;
            }
        }
        Ok(best + 1)
    }

    pub fn update(&mut self, x: &[f64], y: usize) -> Result<usize> {
        check_label(y, self.num_classes())?;
        let predicted = self.predict(x)?;
        if predicted != y {
            for (w, xi) in self.weights[y - 1].iter_mut().zip(x) {
                *w += xi;
            }
            for (w, xi) in self.weights[predicted - 1].iter_mut().zip(x) {
                *w -= xi;
            }
        }
        Ok(predicted)
    }
}

/// PRank step on the exact label carried by `inst`.
pub fn prank_update(model: &mut PRankModel, inst: &IntervalInstance) -> Result<usize> {
    model.update(&inst.features, exact_label(inst)?)
}

/// Multiclass perceptron step on the exact label carried by `inst`.
pub fn mcp_update(model: &mut McpModel, inst: &IntervalInstance) -> Result<usize> {
    model.update(&inst.features, exact_label(inst)?)
}
