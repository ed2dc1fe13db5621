//! Passive-aggressive updates of a [`RankingModel`] on one interval-labelled
//! instance.
//!
//! Each update is passive when the surrogate loss is already zero and
//! otherwise applies the closed-form solution found by [`crate::sca`]:
//!
//! ```text
//! w   <- w + a·x
//! θ_i <- θ_i - λ_i     i in S_l
//! θ_i <- θ_i + μ_i     i in S_r
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{surrogate_losses, ThresholdLosses};
use crate::model::{norm_sq, IntervalInstance, RankingModel};
use crate::sca::{sca_pa, sca_pa1, sca_pa2, FixedPointConfig, SupportSolution};

/// Which passive-aggressive objective to solve, with its aggressiveness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum Variant {
    /// Hard margin: the updated model must reach zero loss.
    Pa,
    /// Linear slack penalty; multipliers are capped at `c`.
    Pa1 { c: f64 },
    /// Squared slack penalty with weight `c`.
    Pa2 { c: f64 },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Pa => "PA",
            Variant::Pa1 { .. } => "PA-I",
            Variant::Pa2 { .. } => "PA-II",
        }
    }

    pub fn aggressiveness(&self) -> Option<f64> {
        match *self {
            Variant::Pa => None,
            Variant::Pa1 { c } | Variant::Pa2 { c } => Some(c),
        }
    }
}

/// What an update did.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateReport {
    pub variant: Variant,
    /// `None` for a passive trial.
    pub solution: Option<SupportSolution>,
    pub pre_loss: ThresholdLosses,
    pub post_loss: ThresholdLosses,
    pub passive: bool,
}

impl UpdateReport {
    pub fn fell_back(&self) -> bool {
        self.solution.as_ref().is_some_and(|s| s.fell_back)
    }
}

/// Applies `variant` to `model` in place.
pub fn update(
    model: &mut RankingModel,
    instance: &IntervalInstance,
    variant: Variant,
    solver: &FixedPointConfig,
) -> Result<UpdateReport> {
    instance.validate(model.num_classes())?;
    let score = model.score(&instance.features)?;
    let pre_loss = surrogate_losses(score, model.thresholds(), instance.y_l, instance.y_r)?;
    if pre_loss.total() == 0.0 {
        return Ok(UpdateReport {
            variant,
            solution: None,
            post_loss: pre_loss.clone(),
            pre_loss,
            passive: true,
        });
    }

    let r = norm_sq(&instance.features);
    if !r.is_finite() {
        return Err(Error::input("feature vector has a non-finite norm"));
    }
    let solution = match variant {
        Variant::Pa => sca_pa(&pre_loss, r)?,
        Variant::Pa1 { c } => sca_pa1(&pre_loss, r, c, solver)?,
        Variant::Pa2 { c } => sca_pa2(&pre_loss, r, c)?,
    };

    {
        let (w, theta) = model.parts_mut();
        for (wj, xj) in w.iter_mut().zip(&instance.features) {
            *wj += solution.a * xj;
        }
        for (&i, &lam) in &solution.lambda {
            theta[i - 1] -= lam;
        }
        for (&i, &mu) in &solution.mu {
            theta[i - 1] += mu;
        }
    }

    let post_score = model.score(&instance.features)?;
    let post_loss = surrogate_losses(post_score, model.thresholds(), instance.y_l, instance.y_r)?;
    Ok(UpdateReport {
        variant,
        solution: Some(solution),
        pre_loss,
        post_loss,
        passive: false,
    })
}

pub fn update_pa(model: &mut RankingModel, instance: &IntervalInstance) -> Result<UpdateReport> {
    update(model, instance, Variant::Pa, &FixedPointConfig::default())
}

pub fn update_pa1(
    model: &mut RankingModel,
    instance: &IntervalInstance,
    c: f64,
    solver: &FixedPointConfig,
) -> Result<UpdateReport> {
    update(model, instance, Variant::Pa1 { c }, solver)
}

pub fn update_pa2(model: &mut RankingModel, instance: &IntervalInstance, c: f64) -> Result<UpdateReport> {
    update(model, instance, Variant::Pa2 { c }, &FixedPointConfig::default())
}
