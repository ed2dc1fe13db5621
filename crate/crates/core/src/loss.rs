//! Interval-insensitive losses.
//!
//! For an interval label `[y_l, y_r]` only thresholds outside the band are
//! constrained: `1..y_l` from the left (the score must clear them by a margin
//! of one) and `y_r..K` from the right (the score must stay a margin below).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Per-threshold hinge terms of the convex surrogate for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdLosses {
    pub score: f64,
    pub y_l: usize,
    pub y_r: usize,
    pub num_classes: usize,
    /// `l_i = [1 - f + θ_i]_+` for `i < y_l`.
    pub left: BTreeMap<usize, f64>,
    /// `l_i = [1 + f - θ_i]_+` for `i >= y_r`.
    pub right: BTreeMap<usize, f64>,
    /// Signed hinge argument for every constrained index (unclamped `l_i`).
    pub margins: BTreeMap<usize, f64>,
}

impl ThresholdLosses {
    pub fn total(&self) -> f64 {
        total_surrogate(self)
    }

    pub fn total_squared(&self) -> f64 {
        self.left.values().chain(self.right.values()).map(|l| l * l).sum()
    }

    pub fn margin(&self, i: usize) -> f64 {
        self.margins[&i]
    }

    /// Constrained indices on the left, nearest the band first.
    pub fn left_indices(&self) -> impl Iterator<Item = usize> {
        (1..self.y_l).rev()
    }

    /// Constrained indices on the right, nearest the band first.
    pub fn right_indices(&self) -> impl Iterator<Item = usize> {
        self.y_r..self.num_classes
    }

    pub fn num_constraints(&self) -> usize {
        self.left.len() + self.right.len()
    }
}

fn check_labels(thresholds: &[f64], y_l: usize, y_r: usize) -> Result<usize> {
    let k = thresholds.len() + 1;
    if y_l < 1 || y_l > y_r || y_r > k {
        return Err(Error::input(format!(
            "labels [{y_l}, {y_r}] must satisfy 1 <= y_l <= y_r <= K = {k}"
        )));
    }
    Ok(k)
}

/// Number of thresholds on the wrong side of the score.
pub fn interval_mae_loss(score: f64, thresholds: &[f64], y_l: usize, y_r: usize) -> Result<usize> {
    let k = check_labels(thresholds, y_l, y_r)?;
    let left = (1..y_l).filter(|&i| score < thresholds[i - 1]).count();
    let right = (y_r..k).filter(|&i| score >= thresholds[i - 1]).count();
    Ok(left + right)
}

pub fn surrogate_losses(score: f64, thresholds: &[f64], y_l: usize, y_r: usize) -> Result<ThresholdLosses> {
    let k = check_labels(thresholds, y_l, y_r)?;
    let mut left = BTreeMap::new();
    let mut right = BTreeMap::new();
    let mut margins = BTreeMap::new();
    for i in 1..y_l {
        let m = 1.0 - score + thresholds[i - 1];
        margins.insert(i, m);
        left.insert(i, m.max(0.0));
    }
    for i in y_r..k {
        let m = 1.0 + score - thresholds[i - 1];
        margins.insert(i, m);
        right.insert(i, m.max(0.0));
    }
    Ok(ThresholdLosses {
        score,
        y_l,
        y_r,
        num_classes: k,
        left,
        right,
        margins,
    })
}

pub fn total_surrogate(losses: &ThresholdLosses) -> f64 {
    losses.left.values().chain(losses.right.values()).sum()
}
