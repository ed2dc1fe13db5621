//! Mistake-bound evaluation against a comparator predictor `v = (u, b)`.
//!
//! All three bounds depend on the stream through `R² = max ‖x‖²`, the
//! narrowest interval `c = min (y_r - y_l)` and `T`, and on the comparator
//! through `‖v‖² = ‖u‖² + ‖b‖²` and its own surrogate losses `l*`. With
//! `k = K - c - 1`:
//!
//! | variant | measured   | D                   | bound                                  |
//! |---------|------------|---------------------|----------------------------------------|
//! | PA      | `Σ l²`     | `1 + R² k`          | `D² (‖v‖ + 4k √Σ l*²)²`, ideal `D ‖v‖²` |
//! | PA-I    | `Σ l`      | `1 + 2 R² k²`       | `Σ l* + √(DT) ‖v‖` at `C = ‖v‖/√(DT)`   |
//! | PA-II   | `Σ l²`     | `1 + 1/(2C) + R² k` | `D (‖v‖² + 2C Σ l*²)`                  |
//!
//! For PA-I run at any other `C` the report uses the unoptimized form
//! `Σ l* + ‖v‖²/(2C) + C T D / 2`, which reduces to the table entry at the
//! optimal `C`.

use serde::Serialize;

use super::{labelled_pool, presentation_order, run_on_pool, Algorithm, RunConfig, RunMetrics};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::surrogate_losses;
use crate::model::{norm_sq, IntervalInstance, RankingModel};
use crate::rng;
use crate::update::{update, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundCase {
    General,
    /// The comparator has zero loss on every trial.
    Ideal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub variant: String,
    pub case: BoundCase,
    pub seed: u64,
    pub trials: usize,
    pub r_sq: f64,
    pub min_width: usize,
    pub d: f64,
    pub v_norm_sq: f64,
    /// `Σ l*` for PA-I, `Σ l*²` otherwise.
    pub reference_loss: f64,
    pub bound: f64,
    pub measured: f64,
    pub satisfied: bool,
    pub run_c: Option<f64>,
    /// The PA-I aggressiveness that minimizes the bound.
    pub optimal_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamGeometry {
    pub r_sq: f64,
    pub min_width: usize,
    pub num_classes: usize,
    pub trials: usize,
}

impl StreamGeometry {
    /// `K - c - 1`.
    fn span(&self) -> f64 {
        (self.num_classes - 1 - self.min_width) as f64
    }
}

pub fn stream_geometry(stream: &[IntervalInstance], num_classes: usize) -> Result<StreamGeometry> {
    if stream.is_empty() {
        return Err(Error::input("bounds need a non-empty stream"));
    }
    for inst in stream {
        inst.validate(num_classes)?;
    }
    Ok(StreamGeometry {
        r_sq: stream.iter().map(|i| norm_sq(&i.features)).fold(0.0, f64::max),
        min_width: stream.iter().map(IntervalInstance::width).min().unwrap_or(0),
        num_classes,
        trials: stream.len(),
    })
}

fn reference_losses(stream: &[IntervalInstance], reference: &RankingModel) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for inst in stream {
        let s = reference.score(&inst.features)?;
        let l = surrogate_losses(s, reference.thresholds(), inst.y_l, inst.y_r)?;
        sum += l.total();
        sum_sq += l.total_squared();
    }
    Ok((sum, sum_sq))
}

fn v_norm_sq(reference: &RankingModel) -> f64 {
    norm_sq(reference.weights()) + norm_sq(reference.thresholds())
}

fn prepare(
    stream: &[IntervalInstance],
    metrics: &RunMetrics,
    reference: &RankingModel,
) -> Result<(StreamGeometry, f64, f64, f64)> {
    if metrics.trials() != stream.len() {
        return Err(Error::input(format!(
            "metrics cover {} trials but the stream has {}",
            metrics.trials(),
            stream.len()
        )));
    }
    let geom = stream_geometry(stream, reference.num_classes())?;
    let (l1, l2) = reference_losses(stream, reference)?;
    Ok((geom, v_norm_sq(reference), l1, l2))
}

fn case_of(loss: f64) -> BoundCase {
    if loss == 0.0 {
        BoundCase::Ideal
    } else {
        BoundCase::General
    }
}

fn report(
    variant: Variant,
    metrics: &RunMetrics,
    geom: &StreamGeometry,
    parts: (BoundCase, f64, f64, f64, f64),
) -> BoundReport {
    let (case, d, v2, reference_loss, bound) = parts;
    let measured = match variant {
        Variant::Pa1 { .. } => metrics.cumulative_loss,
        _ => metrics.cumulative_squared_loss,
    };
    BoundReport {
        variant: variant.name().to_string(),
        case,
        seed: metrics.seed,
        trials: geom.trials,
        r_sq: geom.r_sq,
        min_width: geom.min_width,
        d,
        v_norm_sq: v2,
        reference_loss,
        bound,
        measured,
        satisfied: measured <= bound,
        run_c: variant.aggressiveness(),
        optimal_c: None,
    }
}

/// PA against `reference` on the presented `stream`.
pub fn bound_pa_general(
    stream: &[IntervalInstance],
    metrics: &RunMetrics,
    reference: &RankingModel,
) -> Result<BoundReport> {
    let (geom, v2, _, l2) = prepare(stream, metrics, reference)?;
    let k = geom.span();
    let d = 1.0 + geom.r_sq * k;
    let case = case_of(l2);
    let bound = match case {
        BoundCase::Ideal => v2 * d,
        BoundCase::General => d * d * (v2.sqrt() + 4.0 * k * l2.sqrt()).powi(2),
    };
    Ok(report(Variant::Pa, metrics, &geom, (case, d, v2, l2, bound)))
}

/// `‖v‖ / √(T (1 + 2R²(K - c - 1)²))`.
pub fn optimal_pa1_c(reference: &RankingModel, geom: &StreamGeometry) -> Result<f64> {
    let k = geom.span();
    let d = 1.0 + 2.0 * geom.r_sq * k * k;
    let c = v_norm_sq(reference).sqrt() / (geom.trials as f64 * d).sqrt();
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::input("the comparator must have non-zero norm to set C"));
    }
    Ok(c)
}

/// PA-I run with aggressiveness `run_c`.
pub fn bound_pa1(
    stream: &[IntervalInstance],
    metrics: &RunMetrics,
    reference: &RankingModel,
    run_c: f64,
) -> Result<BoundReport> {
    let (geom, v2, l1, _) = prepare(stream, metrics, reference)?;
    let k = geom.span();
    let d = 1.0 + 2.0 * geom.r_sq * k * k;
    let t = geom.trials as f64;
    let bound = l1 + v2 / (2.0 * run_c) + run_c * t * d / 2.0;
    let mut rep = report(Variant::Pa1 { c: run_c }, metrics, &geom, (case_of(l1), d, v2, l1, bound));
    rep.optimal_c = optimal_pa1_c(reference, &geom).ok();
    Ok(rep)
}

/// PA-II run with aggressiveness `c`.
pub fn bound_pa2(
    stream: &[IntervalInstance],
    metrics: &RunMetrics,
    reference: &RankingModel,
    c: f64,
) -> Result<BoundReport> {
    let (geom, v2, _, l2) = prepare(stream, metrics, reference)?;
    let d = 1.0 + 1.0 / (2.0 * c) + geom.r_sq * geom.span();
    let bound = d * (v2 + 2.0 * c * l2);
    Ok(report(Variant::Pa2 { c }, metrics, &geom, (case_of(l2), d, v2, l2, bound)))
}

/// PA-I over `epochs` shuffled passes of `pool`, from the zero model.
pub fn fit_reference(
    pool: &[IntervalInstance],
    num_classes: usize,
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<RankingModel> {
    let dim = pool
        .first()
        .ok_or_else(|| Error::input("cannot fit a reference on an empty pool"))?
        .features
        .len();
    let mut model = RankingModel::zeros(dim, num_classes)?;
    let mut rng = rng::stream(seed, rng::SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let solver = Default::default();
    for _ in 0..epochs {
        rng::shuffle(&mut rng, &mut order);
        for &i in &order {
            update(&mut model, &pool[i], Variant::Pa1 { c }, &solver)?;
        }
    }
    Ok(model)
}

/// Runs PA, PA-I and PA-II on one seed's stream and checks each bound.
///
/// The comparator is the dataset's ideal reference when it has one,
/// otherwise PA-I (`C = 1`, 5 epochs) fitted offline on the same labelled
/// pool. PA-I runs at `pa1_c`, or at the bound-optimal `C` when `None`;
/// PA-II runs at `config.c`.
pub fn bound_check(config: &RunConfig, dataset: &Dataset, pa1_c: Option<f64>) -> Result<Vec<BoundReport>> {
    config.validate()?;
    let pool = labelled_pool(dataset, config.interval_fraction, config.seed)?;
    let reference = match &dataset.ideal_reference {
        Some(r) => r.clone(),
        None => fit_reference(&pool, dataset.num_classes, 1.0, 5, config.seed)?,
    };
    let order = presentation_order(config.sampling, pool.len(), config.trials, config.seed)?;
    let stream: Vec<IntervalInstance> = order.iter().map(|&i| pool[i].clone()).collect();
    let geom = stream_geometry(&stream, dataset.num_classes)?;

    let run = |algorithm, c| {
        let cfg = RunConfig {
            algorithm,
            c,
            ..config.clone()
        };
        run_on_pool(&cfg, &pool, dataset.num_classes)
    };
    let pa1_c = match pa1_c {
        Some(c) => c,
        None => optimal_pa1_c(&reference, &geom)?,
    };
    Ok(vec![
        bound_pa_general(&stream, &run(Algorithm::Pa, config.c)?, &reference)?,
        bound_pa1(&stream, &run(Algorithm::Pa1, pa1_c)?, &reference, pa1_c)?,
        bound_pa2(&stream, &run(Algorithm::Pa2, config.c)?, &reference, config.c)?,
    ])
}
