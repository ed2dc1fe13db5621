//! The linear ranking hypothesis: a weight vector plus `K - 1` ordered
//! thresholds, and the interval-labelled instances it is trained on.
//!
//! Class indices are 1-based throughout (`1..=K`), matching the label
//! convention of the data files. Threshold `i` (also 1-based) separates class
//! `i` from class `i + 1`; it is stored at `thresholds[i - 1]`. The implicit
//! last threshold `θ_K = +∞` lives only in [`RankingModel::predict`].

use serde::Deserialize;

use crate::error::{check_dims, Error, Result};

/// Slack allowed when checking that thresholds are non-decreasing.
pub const ORDER_TOLERANCE: f64 = 1e-12;

/// Elementwise tolerance used by [`RankingModel::approx_eq`].
pub const MODEL_EQ_TOLERANCE: f64 = 1e-9;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingModel {
    weights: Vec<f64>,
    thresholds: Vec<f64>,
}

impl RankingModel {
    pub fn new(weights: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::input("a ranking model needs K >= 2 classes"));
        }
        if weights.iter().chain(&thresholds).any(|v| !v.is_finite()) {
            return Err(Error::input("model parameters must be finite"));
        }
        if let Some(i) = first_inversion(&thresholds, ORDER_TOLERANCE) {
            return Err(Error::input(format!(
                "thresholds must be non-decreasing: θ{} = {} > θ{} = {}",
                i + 1,
                thresholds[i],
                i + 2,
                thresholds[i + 1]
            )));
        }
        Ok(Self {
            weights,
            thresholds,
        })
    }

    /// The all-zero model `w = 0, θ = 0`.
    pub fn zeros(dim: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::input("a ranking model needs K >= 2 classes"));
        }
        Ok(Self {
            weights: vec![0.0; dim],
            thresholds: vec![0.0; num_classes - 1],
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn num_classes(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Threshold `θ_i` by its 1-based index.
    pub fn threshold(&self, i: usize) -> f64 {
        self.thresholds[i - 1]
    }

    /// Mutable access for the update rules; callers keep the order invariant.
    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.thresholds)
    }

    /// `w · x`.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        check_dims(self.dim(), features.len())?;
        Ok(dot(&self.weights, features))
    }

    /// Smallest class `i` with `w · x - θ_i < 0`, or `K` when none exists.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(predict_from_score(&self.thresholds, self.score(features)?))
    }

    pub fn approx_eq(&self, other: &RankingModel, tol: f64) -> bool {
        self.weights.len() == other.weights.len()
            && self.thresholds.len() == other.thresholds.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .chain(self.thresholds.iter().zip(&other.thresholds))
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// `{"K": .., "weights": [..], "thresholds": [..]}` with every float
    /// written at 17 significant digits.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"K\": {}, \"weights\": {}, \"thresholds\": {}}}",
            self.num_classes(),
            json_floats(&self.weights),
            json_floats(&self.thresholds)
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Snapshot {
            #[serde(rename = "K")]
            k: usize,
            weights: Vec<f64>,
            thresholds: Vec<f64>,
        }
        let snap: Snapshot = serde_json::from_str(text)?;
        if snap.k != snap.thresholds.len() + 1 {
            return Err(Error::input(format!(
                "snapshot declares K = {} but carries {} thresholds",
                snap.k,
                snap.thresholds.len()
            )));
        }
        Self::new(snap.weights, snap.thresholds)
    }
}

/// Class predicted for a raw score under sorted `thresholds`.
pub fn predict_from_score(thresholds: &[f64], score: f64) -> usize {
    thresholds
        .iter()
        .position(|&t| score - t < 0.0)
        .map_or(thresholds.len() + 1, |i| i + 1)
}

/// Index of the first adjacent pair with `t[i] > t[i + 1] + tol`.
pub fn first_inversion(thresholds: &[f64], tol: f64) -> Option<usize> {
    thresholds.windows(2).position(|w| w[0] > w[1] + tol)
}

fn json_floats(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
    format!("[{}]", items.join(", "))
}

/// A feature vector with an interval label `[y_l, y_r]` and, when known, the
/// exact label it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalInstance {
    pub features: Vec<f64>,
    pub y_l: usize,
    pub y_r: usize,
    pub exact_label: Option<usize>,
}

impl IntervalInstance {
    pub fn new(features: Vec<f64>, y_l: usize, y_r: usize, exact_label: Option<usize>) -> Result<Self> {
        let inst = Self {
            features,
            y_l,
            y_r,
            exact_label,
        };
        if inst.y_l < 1 || inst.y_l > inst.y_r {
            return Err(Error::input(format!(
                "interval label [{}, {}] must satisfy 1 <= y_l <= y_r",
                inst.y_l, inst.y_r
            )));
        }
        if let Some(y) = exact_label {
            if y < y_l || y > y_r {
                return Err(Error::input(format!(
                    "exact label {y} lies outside its interval [{y_l}, {y_r}]"
                )));
            }
        }
        Ok(inst)
    }

    /// Exactly-labelled instance: `y_l = y_r = y`.
    pub fn exact(features: Vec<f64>, y: usize) -> Result<Self> {
        Self::new(features, y, y, Some(y))
    }

    /// Checks the labels against a model with `num_classes` classes.
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.y_r > num_classes {
            return Err(Error::input(format!(
                "interval [{}, {}] exceeds K = {num_classes}",
                self.y_l, self.y_r
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.y_r - self.y_l
    }
}
