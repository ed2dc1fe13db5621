use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::model::IntervalInstance;
use crate::rng;

/// `(below, above)` offsets of the published interval menu:
/// `[y-1, y]`, `[y, y+1]`, `[y-1, y]`, `[y-2, y]`, `[y, y+2]`, `[y-2, y+2]`.
/// The repeated `[y-1, y]` is intentional and doubles its weight.
pub const PAPER_OFFSETS: [(usize, usize); 6] = [(1, 0), (0, 1), (1, 0), (2, 0), (0, 2), (2, 2)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPolicy {
    /// Share of instances that receive an interval label.
    pub fraction: f64,
    pub offsets: Vec<(usize, usize)>,
}

impl IntervalPolicy {
    pub fn new(fraction: f64) -> Result<Self> {
        let p = Self {
            fraction,
            offsets: PAPER_OFFSETS.to_vec(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::input(format!("interval fraction {} is outside [0, 1]", self.fraction)));
        }
        if self.offsets.is_empty() {
            return Err(Error::input("interval policy needs at least one offset pair"));
        }
        Ok(())
    }
}

impl Default for IntervalPolicy {
    fn default() -> Self {
        Self {
            fraction: 0.0,
            offsets: PAPER_OFFSETS.to_vec(),
        }
    }
}

/// Draws one menu entry uniformly and clips it to `[1, K]`.
pub fn make_interval(y: usize, k: usize, policy: &IntervalPolicy, rng: &mut impl Rng) -> (usize, usize) {
    let (below, above) = policy.offsets[rng::index(rng, policy.offsets.len())];
    (y.saturating_sub(below).max(1), (y + above).min(k))
}

/// Labels `round(m·N)` instances, chosen without replacement, with intervals
/// from the policy's menu; the rest keep their exact label.
pub fn label_stream(dataset: &Dataset, policy: &IntervalPolicy, rng: &mut impl Rng) -> Result<Vec<IntervalInstance>> {
    policy.validate()?;
    let n = dataset.len();
    let count = (policy.fraction * n as f64).round() as usize;
    let mut chosen = rng::sample_without_replacement(rng, n, count);
    chosen.sort_unstable();
    let mut out = dataset.exact_instances();
    for i in chosen {
        let y = dataset.labels[i];
        let (y_l, y_r) = make_interval(y, dataset.num_classes, policy, rng);
        out[i].y_l = y_l;
        out[i].y_r = y_r;
    }
    Ok(out)
}
