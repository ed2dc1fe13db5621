//! Random single-trial problems and closed-form versus oracle comparison.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::model::{IntervalInstance, RankingModel};
use crate::oracle::{oracle_pa, oracle_pa1, oracle_pa2, primal_objective, Slack};
use crate::rng;
use crate::sca::FixedPointConfig;
use crate::update::{update, UpdateReport, Variant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialShape {
    pub max_dim: usize,
    pub max_classes: usize,
}

impl Default for TrialShape {
    fn default() -> Self {
        Self {
            max_dim: 6,
            max_classes: 8,
        }
    }
}

/// A random model and interval instance within `shape`.
///
/// Feature scales vary over two orders of magnitude and one trial in five
/// ties several thresholds, so both the contracting and non-contracting
/// regimes of the PA-I sweep are exercised.
pub fn random_trial(rng: &mut impl Rng, shape: &TrialShape) -> (RankingModel, IntervalInstance) {
    let d = 1 + rng::index(rng, shape.max_dim);
    let k = 2 + rng::index(rng, shape.max_classes - 1);
    let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut thresholds: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(-3.0..3.0)).collect();
    thresholds.sort_by(f64::total_cmp);
    if rng.gen_bool(0.2) && k > 2 {
        let i = rng::index(rng, k - 2);
        thresholds[i + 1] = thresholds[i];
    }
    let scale = [0.1, 0.5, 1.0, 2.0][rng::index(rng, 4)];
    let features: Vec<f64> = (0..d).map(|_| scale * rng.gen_range(-1.5..1.5)).collect();
    let y_l = 1 + rng::index(rng, k);
    let y_r = y_l + rng::index(rng, (k - y_l + 1).min(3));
    let model = RankingModel::new(weights, thresholds).expect("sorted finite thresholds");
    let inst = IntervalInstance::new(features, y_l, y_r, None).expect("ordered labels");
    (model, inst)
}

/// Random aggressiveness, log-uniform on `[0.01, 10]`.
pub fn random_c(rng: &mut impl Rng) -> f64 {
    10f64.powf(rng.gen_range(-2.0..1.0))
}

/// Differences between one closed-form update and the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub objective_gap: f64,
    pub parameter_gap: f64,
    pub kkt_residual: f64,
    pub passive: bool,
}

pub fn compare_with_oracle(model: &RankingModel, inst: &IntervalInstance, variant: Variant) -> Result<(Agreement, UpdateReport)> {
    let mut updated = model.clone();
    let report = update(&mut updated, inst, variant, &FixedPointConfig::default())?;
    let (oracle, slack) = match variant {
        Variant::Pa => (oracle_pa(model, inst)?, Slack::None),
        Variant::Pa1 { c } => (oracle_pa1(model, inst, c)?, Slack::Linear(c)),
        Variant::Pa2 { c } => (oracle_pa2(model, inst, c)?, Slack::Squared(c)),
    };
    let objective = primal_objective(model, &updated, inst, slack)?;
    let parameter_gap = updated
        .weights()
        .iter()
        .zip(&oracle.weights)
        .chain(updated.thresholds().iter().zip(&oracle.thresholds))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((
        Agreement {
            objective_gap: (objective - oracle.objective).abs(),
            parameter_gap,
            kkt_residual: oracle.kkt_residual,
            passive: report.passive,
        },
        report,
    ))
}

/// Worst-case agreement of one variant over many random trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub variant: String,
    pub trials: usize,
    pub non_passive: usize,
    pub max_objective_gap: f64,
    pub max_parameter_gap: f64,
    pub max_kkt_residual: f64,
}

impl OracleCheck {
    pub fn passes(&self, objective_tol: f64, parameter_tol: f64) -> bool {
        self.max_objective_gap <= objective_tol && self.max_parameter_gap <= parameter_tol
    }
}

/// Compares every variant against the oracle on `trials` random problems
/// each. `c = None` draws a fresh aggressiveness per trial.
pub fn oracle_check(trials: usize, seed: u64, shape: &TrialShape, c: Option<f64>) -> Result<Vec<OracleCheck>> {
    let kinds: [fn(f64) -> Variant; 3] = [|_| Variant::Pa, |c| Variant::Pa1 { c }, |c| Variant::Pa2 { c }];
    let mut out = Vec::new();
    for (n, make) in kinds.iter().enumerate() {
        let mut rng = rng::stream(seed, 10 + n as u64);
        let mut check = OracleCheck {
            variant: make(1.0).name().to_string(),
            trials,
            non_passive: 0,
            max_objective_gap: 0.0,
            max_parameter_gap: 0.0,
            max_kkt_residual: 0.0,
        };
        for _ in 0..trials {
            let (model, inst) = random_trial(&mut rng, shape);
            let variant = make(c.unwrap_or_else(|| random_c(&mut rng)));
            let (agreement, _) = compare_with_oracle(&model, &inst, variant)?;
            check.non_passive += usize::from(!agreement.passive);
            check.max_objective_gap = check.max_objective_gap.max(agreement.objective_gap);
            check.max_parameter_gap = check.max_parameter_gap.max(agreement.parameter_gap);
            check.max_kkt_residual = check.max_kkt_residual.max(agreement.kkt_residual);
        }
        out.push(check);
    }
    Ok(out)
}
