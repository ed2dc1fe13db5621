//! Online experiment driver: trial loops, MAE curves, averaging over seeds.
//!
//! A run derives everything from its seed. Interval labels are drawn from
//! [`rng::INTERVAL_STREAM`], trial order from [`rng::SAMPLING_STREAM`], so
//! every algorithm sees the same instances in the same order for a given seed.

mod bounds;
pub mod fuzz;
mod output;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{McpModel, PRankModel};
use crate::data::{label_stream, Dataset, IntervalPolicy};
use crate::error::{Error, Result};
use crate::loss::surrogate_losses;
use crate::model::{IntervalInstance, RankingModel};
use crate::rng;
use crate::sca::FixedPointConfig;
use crate::update::{update, Variant};

pub use bounds::{
    bound_check, bound_pa1, bound_pa2, bound_pa_general, fit_reference, optimal_pa1_c, stream_geometry, BoundCase,
    BoundReport, StreamGeometry,
};
pub use output::{curve_csv, write_curve_csv, DatasetSummary, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pa,
    Pa1,
    Pa2,
    PRank,
    Mcp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Pa, Algorithm::Pa1, Algorithm::Pa2, Algorithm::PRank, Algorithm::Mcp];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Pa => "pa",
            Algorithm::Pa1 => "pa1",
            Algorithm::Pa2 => "pa2",
            Algorithm::PRank => "prank",
            Algorithm::Mcp => "mcp",
        }
    }

    pub fn uses_c(&self) -> bool {
        matches!(self, Algorithm::Pa1 | Algorithm::Pa2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricMode {
    /// `|ŷ - y|` against the exact label.
    ExactMae,
    /// Distance from `ŷ` to the nearest end of `[y_l, y_r]`.
    IntervalMae,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Independent uniform draw at every trial.
    WithReplacement,
    /// Shuffled passes over the pool, reshuffled at each pass.
    Epochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    /// Aggressiveness for PA-I and PA-II.
    pub c: f64,
    pub trials: usize,
    pub runs: usize,
    /// Run `i` (0-based) uses seed `seed + i`.
    pub seed: u64,
    pub interval_fraction: f64,
    pub dataset: String,
    pub metric: MetricMode,
    pub sampling: Sampling,
    pub solver: FixedPointConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Pa1,
            c: 1.0,
            trials: 7000,
            runs: 100,
            seed: 1,
            interval_fraction: 0.0,
            dataset: "abalone".into(),
            metric: MetricMode::ExactMae,
            sampling: Sampling::WithReplacement,
            solver: FixedPointConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.runs == 0 {
            return Err(Error::Config("trials and runs must both be at least 1".into()));
        }
        if self.algorithm.uses_c() && !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("C must be positive and finite, got {}", self.c)));
        }
        if !(0.0..=1.0).contains(&self.interval_fraction) {
            return Err(Error::Config(format!(
                "interval fraction {} is outside [0, 1]",
                self.interval_fraction
            )));
        }
        Ok(())
    }

    pub fn variant(&self) -> Option<Variant> {
        match self.algorithm {
            Algorithm::Pa => Some(Variant::Pa),
            Algorithm::Pa1 => Some(Variant::Pa1 { c: self.c }),
            Algorithm::Pa2 => Some(Variant::Pa2 { c: self.c }),
            Algorithm::PRank | Algorithm::Mcp => None,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }
}

/// The model a run ends with.
#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Ranking(RankingModel),
    PRank(PRankModel),
    Mcp(McpModel),
}

impl Learner {
    pub fn new(algorithm: Algorithm, dim: usize, num_classes: usize) -> Result<Self> {
        Ok(match algorithm {
            Algorithm::Pa | Algorithm::Pa1 | Algorithm::Pa2 => Learner::Ranking(RankingModel::zeros(dim, num_classes)?),
            Algorithm::PRank => Learner::PRank(PRankModel::zeros(dim, num_classes)?),
            Algorithm::Mcp => Learner::Mcp(McpModel::zeros(dim, num_classes)?),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            Learner::Ranking(m) => m.predict(x),
            Learner::PRank(m) => m.predict(x),
            Learner::Mcp(m) => m.predict(x),
        }
    }

    pub fn ranking_model(&self) -> Option<&RankingModel> {
        match self {
            Learner::Ranking(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    /// Per-trial MAE of the prediction made before the update.
    pub instantaneous: Vec<f64>,
    /// Running mean of `instantaneous`.
    pub average_mae: Vec<f64>,
    /// `Σ_t Σ_i l_i` before each update (zero for the multiclass perceptron).
    pub cumulative_loss: f64,
    /// `Σ_t Σ_i l_i²` before each update (zero for the multiclass perceptron).
    pub cumulative_squared_loss: f64,
    pub final_model: Learner,
    /// Pool index presented at each trial.
    pub presented: Vec<usize>,
    pub passive_trials: usize,
    /// PA-I trials solved by the exact fallback instead of the sweep.
    pub fallbacks: usize,
}

impl RunMetrics {
    pub fn trials(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn final_average(&self) -> f64 {
        self.average_mae.last().copied().unwrap_or(0.0)
    }
}

/// Distance from `pred` to the interval `[y_l, y_r]`.
pub fn interval_mae(pred: usize, y_l: usize, y_r: usize) -> usize {
    y_l.saturating_sub(pred).max(pred.saturating_sub(y_r))
}

/// `(1/t) Σ_{s≤t} values[s]` for every prefix.
pub fn running_average(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(t, v)| {
            sum += v;
            sum / (t + 1) as f64
        })
        .collect()
}

/// Pool indices for `trials` trials under the given sampling mode.
pub fn presentation_order(sampling: Sampling, pool_len: usize, trials: usize, seed: u64) -> Result<Vec<usize>> {
    if pool_len == 0 {
        return Err(Error::input("cannot sample from an empty dataset"));
    }
    let mut rng = rng::stream(seed, rng::SAMPLING_STREAM);
    Ok(match sampling {
        Sampling::WithReplacement => (0..trials).map(|_| rng::index(&mut rng, pool_len)).collect(),
        Sampling::Epochs => {
            let mut order = Vec::with_capacity(trials);
            let mut epoch: Vec<usize> = (0..pool_len).collect();
            while order.len() < trials {
                rng::shuffle(&mut rng, &mut epoch);
                order.extend(epoch.iter().take(trials - order.len()));
            }
            order
        }
    })
}

/// The interval-labelled pool a run with `seed` trains on.
pub fn labelled_pool(dataset: &Dataset, fraction: f64, seed: u64) -> Result<Vec<IntervalInstance>> {
    let policy = IntervalPolicy::new(fraction)?;
    label_stream(dataset, &policy, &mut rng::stream(seed, rng::INTERVAL_STREAM))
}

/// One run of `config` with its own `config.seed`.
pub fn run_online(config: &RunConfig, dataset: &Dataset) -> Result<RunMetrics> {
    config.validate()?;
    let pool = labelled_pool(dataset, config.interval_fraction, config.seed)?;
    run_on_pool(config, &pool, dataset.num_classes)
}

/// One run over a prepared pool, presenting instances in the order drawn
/// from `config.seed`.
pub fn run_on_pool(config: &RunConfig, pool: &[IntervalInstance], num_classes: usize) -> Result<RunMetrics> {
    config.validate()?;
    let dim = pool.first().map_or(0, |i| i.features.len());
    let presented = presentation_order(config.sampling, pool.len(), config.trials, config.seed)?;
    let mut learner = Learner::new(config.algorithm, dim, num_classes)?;
    let variant = config.variant();

    let mut instantaneous = Vec::with_capacity(config.trials);
    let mut cumulative_loss = 0.0;
    let mut cumulative_squared_loss = 0.0;
    let mut passive_trials = 0;
    let mut fallbacks = 0;
    for &idx in &presented {
        let inst = &pool[idx];
        inst.validate(num_classes)?;
        let pred = learner.predict(&inst.features)?;
        let mae = match config.metric {
            MetricMode::ExactMae => {
                let y = inst
                    .exact_label
                    .ok_or_else(|| Error::input("exact-label MAE needs instances with exact labels"))?;
                pred.abs_diff(y)
            }
            MetricMode::IntervalMae => interval_mae(pred, inst.y_l, inst.y_r),
        };
        instantaneous.push(mae as f64);

        match &mut learner {
            Learner::Ranking(model) => {
                let variant = variant.expect("ranking learners always have a variant");
                let report = update(model, inst, variant, &config.solver)?;
                cumulative_loss += report.pre_loss.total();
                cumulative_squared_loss += report.pre_loss.total_squared();
                passive_trials += usize::from(report.passive);
                fallbacks += usize::from(report.fell_back());
            }
            Learner::PRank(model) => {
                let y = inst
                    .exact_label
                    .ok_or_else(|| Error::input("PRank trains on exact labels; instance has none"))?;
                let score = model.score(&inst.features)?;
                let losses = surrogate_losses(score, &model.thresholds, inst.y_l, inst.y_r)?;
                cumulative_loss += losses.total();
                cumulative_squared_loss += losses.total_squared();
                let before = model.clone();
                model.update(&inst.features, y)?;
                passive_trials += usize::from(*model == before);
            }
            Learner::Mcp(model) => {
                let y = inst
                    .exact_label
                    .ok_or_else(|| Error::input("the multiclass perceptron trains on exact labels"))?;
                let predicted = model.update(&inst.features, y)?;
                passive_trials += usize::from(predicted == y);
            }
        }
    }

    Ok(RunMetrics {
        seed: config.seed,
        average_mae: running_average(&instantaneous),
        instantaneous,
        cumulative_loss,
        cumulative_squared_loss,
        final_model: learner,
        presented,
        passive_trials,
        fallbacks,
    })
}

/// Mean and standard error over runs of per-trial average-MAE curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub config: RunConfig,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub runs: Vec<RunMetrics>,
}

impl Experiment {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_stderr(&self) -> f64 {
        self.stderr.last().copied().unwrap_or(0.0)
    }
}

/// Pointwise mean and standard error (`sample std / sqrt(R)`, zero when
/// `R = 1`) of equally long curves.
pub fn average_curves(curves: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = curves.first().ok_or_else(|| Error::input("no curves to average"))?;
    let len = first.len();
    if curves.iter().any(|c| c.len() != len) {
        return Err(Error::input("curves differ in length"));
    }
    let r = curves.len() as f64;
    let mut mean = vec![0.0; len];
    let mut stderr = vec![0.0; len];
    for t in 0..len {
        let m = curves.iter().map(|c| c[t]).sum::<f64>() / r;
        mean[t] = m;
        if curves.len() > 1 {
            let var = curves.iter().map(|c| (c[t] - m).powi(2)).sum::<f64>() / (r - 1.0);
            stderr[t] = (var / r).sqrt();
        }
    }
    Ok((mean, stderr))
}

/// Runs `config.runs` independent seeds in parallel and averages their
/// curves. Results are collected in seed order, so the output does not
/// depend on thread scheduling.
pub fn average_runs(config: &RunConfig, dataset: &Dataset) -> Result<Experiment> {
    config.validate()?;
    let runs: Vec<RunMetrics> = config
        .seeds()
        .into_par_iter()
        .map(|seed| {
            let cfg = RunConfig {
                seed,
                ..config.clone()
            };
            run_online(&cfg, dataset)
        })
        .collect::<Result<_>>()?;
    let curves: Vec<Vec<f64>> = runs.iter().map(|r| r.average_mae.clone()).collect();
    let (mean, stderr) = average_curves(&curves)?;
    Ok(Experiment {
        config: config.clone(),
        mean,
        stderr,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        // Three separable points on a line.
        Dataset::from_parts("toy", vec![vec![-3.0], vec![0.0], vec![3.0]], vec![1, 2, 3], 3).unwrap()
    }

    fn config(algorithm: Algorithm, trials: usize) -> RunConfig {
        RunConfig {
            algorithm,
            trials,
            runs: 1,
            dataset: "toy".into(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn interval_mae_examples() {
        assert_eq!(interval_mae(3, 2, 4), 0);
        assert_eq!(interval_mae(1, 3, 4), 2);
        assert_eq!(interval_mae(5, 3, 4), 1);
        for p in 1..=5 {
            assert_eq!(interval_mae(p, 3, 3), p.abs_diff(3));
        }
    }

    #[test]
    fn average_curve_examples() {
        let (m, s) = average_curves(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!((m, s), (vec![1.0, 2.0], vec![0.0, 0.0]));
        let (m, _) = average_curves(&[vec![0.0; 3], vec![2.0; 3]]).unwrap();
        assert_eq!(m, vec![1.0; 3]);
        assert!(average_curves(&[vec![0.0], vec![0.0, 1.0]]).is_err());
        assert!(average_curves(&[]).is_err());
    }

    #[test]
    fn single_trial_on_a_satisfied_instance() {
        // K = 2 with the interval [1, 2] constrains nothing.
        let ds = Dataset::from_parts("one", vec![vec![1.0]], vec![1], 2).unwrap();
        let pool = vec![IntervalInstance::new(vec![1.0], 1, 2, Some(1)).unwrap()];
        let m = run_on_pool(&config(Algorithm::Pa, 1), &pool, ds.num_classes).unwrap();
        assert_eq!(m.average_mae.len(), 1);
        assert_eq!(m.passive_trials, 1);
        assert_eq!(m.final_model, Learner::Ranking(RankingModel::zeros(1, 2).unwrap()));
    }

    #[test]
    fn runs_are_deterministic() {
        let ds = toy();
        for alg in Algorithm::ALL {
            let a = run_online(&config(alg, 50), &ds).unwrap();
            let b = run_online(&config(alg, 50), &ds).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn pa_learns_the_separable_toy() {
        let m = run_online(&config(Algorithm::Pa, 100), &toy()).unwrap();
        let last_mistake = m.instantaneous.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        assert!(last_mistake < 50, "still wrong at trial {last_mistake}");
        assert!(m.instantaneous[60..].iter().all(|&v| v == 0.0));
        assert_eq!(running_average(&m.instantaneous), m.average_mae);
    }

    #[test]
    fn epochs_cover_the_pool() {
        let order = presentation_order(Sampling::Epochs, 4, 10, 3).unwrap();
        let mut first: Vec<usize> = order[..4].to_vec();
        first.sort_unstable();
        assert_eq!(first, vec![0, 1, 2, 3]);
        assert_eq!(order.len(), 10);
        assert!(presentation_order(Sampling::WithReplacement, 0, 1, 0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = config(Algorithm::Pa1, 0);
        assert!(c.validate().is_err());
        c.trials = 1;
        c.c = 0.0;
        assert!(c.validate().is_err());
        c.algorithm = Algorithm::Pa;
        assert!(c.validate().is_ok());
        c.interval_fraction = 2.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn averaging_matches_individual_runs() {
        let ds = toy();
        let cfg = RunConfig {
            runs: 4,
            trials: 30,
            ..config(Algorithm::PRank, 30)
        };
        let exp = average_runs(&cfg, &ds).unwrap();
        assert_eq!(exp.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        let single = run_online(&RunConfig { seed: 3, ..cfg.clone() }, &ds).unwrap();
        assert_eq!(exp.runs[2], single);
        assert_eq!(exp.mean.len(), 30);
    }

    #[test]
    fn interval_metric_never_exceeds_exact() {
        let ds = crate::data::synthetic::noisy(&crate::data::synthetic::NoisyConfig {
            len: 300,
            ..Default::default()
        })
        .unwrap();
        let mut cfg = RunConfig {
            interval_fraction: 0.75,
            ..config(Algorithm::Pa1, 500)
        };
        let exact = run_online(&cfg, &ds).unwrap();
        cfg.metric = MetricMode::IntervalMae;
        let interval = run_online(&cfg, &ds).unwrap();
        for (i, e) in interval.instantaneous.iter().zip(&exact.instantaneous) {
            assert!(i <= e);
        }
    }
}
