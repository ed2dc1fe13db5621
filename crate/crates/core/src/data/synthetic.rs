//! Generated datasets with known structure.

use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::error::{Error, Result};
use crate::model::{dot, predict_from_score, IntervalInstance, RankingModel};
use crate::rng;

fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn check_shape(dim: usize, num_classes: usize, len: usize) -> Result<()> {
    if dim == 0 || num_classes < 2 || len == 0 {
        return Err(Error::input("synthetic data needs dim >= 1, K >= 2 and at least one row"));
    }
    Ok(())
}

/// Gaussian points labelled by a ranking model that clears every threshold
/// by at least `margin`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableConfig {
    pub dim: usize,
    pub num_classes: usize,
    pub len: usize,
    pub margin: f64,
    pub seed: u64,
}

impl Default for SeparableConfig {
    fn default() -> Self {
        Self {
            dim: 5,
            num_classes: 5,
            len: 1000,
            margin: 1.0,
            seed: 0,
        }
    }
}

/// Draws `x ~ N(0, I)` and keeps it only when `|u·x - b_i| >= margin` for
/// every threshold. With thresholds spaced `4·margin` apart each class band
/// leaves room of width `2·margin`. The generating `(u, b)` is returned as the
/// dataset's ideal reference.
pub fn separable(cfg: &SeparableConfig) -> Result<Dataset> {
    check_shape(cfg.dim, cfg.num_classes, cfg.len)?;
    if !(cfg.margin.is_finite() && cfg.margin > 0.0) {
        return Err(Error::input("margin must be positive"));
    }
    let mut rng = rng::stream(cfg.seed, rng::GENERATOR_STREAM);
    let k = cfg.num_classes;
    let spacing = 4.0 * cfg.margin;
    let thresholds: Vec<f64> = (1..k).map(|i| spacing * (i as f64 - k as f64 / 2.0)).collect();
    let mut u = gaussian(&mut rng, cfg.dim);
    let scale = spacing * k as f64 / 4.0 / dot(&u, &u).sqrt();
    u.iter_mut().for_each(|v| *v *= scale);

    let mut features = Vec::with_capacity(cfg.len);
    let mut labels = Vec::with_capacity(cfg.len);
    let mut attempts = 0usize;
    while features.len() < cfg.len {
        attempts += 1;
        if attempts > 1000 * cfg.len {
            return Err(Error::Internal("rejection sampling accepted too few points".into()));
        }
        let x = gaussian(&mut rng, cfg.dim);
        let z = dot(&u, &x);
        if thresholds.iter().all(|b| (z - b).abs() >= cfg.margin) {
            labels.push(predict_from_score(&thresholds, z));
            features.push(x);
        }
    }
    let mut ds = Dataset::from_parts("synthetic-separable", features, labels, k)?;
    ds.ideal_reference = Some(RankingModel::new(u, thresholds)?);
    Ok(ds)
}

/// Gaussian points labelled by binning a noisy linear score at its
/// empirical quantiles, giving roughly balanced classes that no ranking
/// model separates.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyConfig {
    pub dim: usize,
    pub num_classes: usize,
    pub len: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for NoisyConfig {
    fn default() -> Self {
        Self {
            dim: 5,
            num_classes: 5,
            len: 2000,
            noise: 0.5,
            seed: 0,
        }
    }
}

pub fn noisy(cfg: &NoisyConfig) -> Result<Dataset> {
    check_shape(cfg.dim, cfg.num_classes, cfg.len)?;
    let mut rng = rng::stream(cfg.seed, rng::GENERATOR_STREAM);
    let mut u = gaussian(&mut rng, cfg.dim);
    let norm = dot(&u, &u).sqrt();
    u.iter_mut().for_each(|v| *v /= norm);
    let features: Vec<Vec<f64>> = (0..cfg.len).map(|_| gaussian(&mut rng, cfg.dim)).collect();
    let scores: Vec<f64> = features
        .iter()
        .map(|x| dot(&u, x) + cfg.noise * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let k = cfg.num_classes;
    let edges: Vec<f64> = (1..k).map(|i| sorted[i * cfg.len / k]).collect();
    let labels = scores
        .iter()
        .map(|&z| 1 + edges.iter().filter(|&&e| e < z).count())
        .collect();
    Dataset::from_parts("synthetic-noisy", features, labels, k)
}

/// Every instance with an interval `y_r - y_l = width` containing its label,
/// placed uniformly among the positions that fit in `[1, K]`.
pub fn fixed_width_stream(dataset: &Dataset, width: usize, rng: &mut impl Rng) -> Result<Vec<IntervalInstance>> {
    let k = dataset.num_classes;
    if width >= k {
        return Err(Error::input(format!("width {width} needs more than {k} classes")));
    }
    Ok(dataset
        .features
        .iter()
        .zip(&dataset.labels)
        .map(|(x, &y)| {
            let lo = y.saturating_sub(width).max(1);
            let hi = y.min(k - width);
            let y_l = lo + rng::index(rng, hi - lo + 1);
            IntervalInstance {
                features: x.clone(),
                y_l,
                y_r: y_l + width,
                exact_label: Some(y),
            }
        })
        .collect())
}
