//! Brute-force reference solvers for the per-trial quadratic programs.
//!
//! These exist to certify [`crate::update`]. They share nothing with the
//! closed-form solvers beyond the problem statement: the PA and PA-II oracles
//! enumerate every subset of active constraints, contiguous or not, and solve
//! each equality system by Gaussian elimination; the PA-I oracle runs
//! projected coordinate ascent on the box-constrained dual.
//!
//! The primal problems over `Δw, Δθ` are
//!
//! ```text
//! PA     min ½‖Δw‖² + ½‖Δθ‖²                s.t. h_k ≤ 0
//! PA-I   min ½‖Δw‖² + ½‖Δθ‖² + C Σ ξ_k      s.t. h_k ≤ ξ_k, ξ_k ≥ 0
//! PA-II  min ½‖Δw‖² + ½‖Δθ‖² + C Σ ξ_k²     s.t. h_k ≤ ξ_k
//! ```
//!
//! where `h_k` is the post-update hinge argument of constrained threshold `k`.

use std::collections::BTreeMap;

use crate::error::{check_dims, Error, Result};
use crate::model::{dot, norm_sq, IntervalInstance, RankingModel};

/// Largest class count the exhaustive enumeration accepts.
pub const MAX_ORACLE_CLASSES: usize = 12;

const FEASIBILITY_TOL: f64 = 1e-10;
const NONNEG_TOL: f64 = 1e-12;
const PA1_GAP_TOL: f64 = 1e-10;
const PA1_STEP_TOL: f64 = 1e-13;
const PA1_MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub objective: f64,
    /// Multiplier of every constrained threshold (zero when inactive).
    pub multipliers: BTreeMap<usize, f64>,
    pub kkt_residual: f64,
}

impl OracleSolution {
    /// Thresholds whose multiplier exceeds `1e-12`.
    pub fn support(&self) -> Vec<usize> {
        self.multipliers
            .iter()
            .filter(|(_, &v)| v > NONNEG_TOL)
            .map(|(&k, _)| k)
            .collect()
    }
}

/// Which slack penalty the primal carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slack {
    None,
    Linear(f64),
    Squared(f64),
}

/// One constrained threshold, with `h_k = 1 - σ_k·(score' - θ'_k)`.
struct Constraint {
    index: usize,
    /// +1 for left constraints (i < y_l), -1 for right ones.
    sign: f64,
    /// Hinge argument before the update.
    margin: f64,
}

struct Problem<'a> {
    weights: &'a [f64],
    thresholds: &'a [f64],
    x: &'a [f64],
    r: f64,
    constraints: Vec<Constraint>,
}

impl<'a> Problem<'a> {
    fn new(model: &'a RankingModel, inst: &'a IntervalInstance) -> Result<Self> {
        let k = model.num_classes();
        if k > MAX_ORACLE_CLASSES {
            return Err(Error::Capability(format!(
                "exhaustive oracle supports K <= {MAX_ORACLE_CLASSES}, got K = {k}"
            )));
        }
        inst.validate(k)?;
        check_dims(model.dim(), inst.features.len())?;
        let score = dot(model.weights(), &inst.features);
        let t = model.thresholds();
        let mut constraints = Vec::new();
        for i in 1..inst.y_l {
            constraints.push(Constraint {
                index: i,
                sign: 1.0,
                margin: 1.0 - score + t[i - 1],
            });
        }
        for i in inst.y_r..k {
            constraints.push(Constraint {
                index: i,
                sign: -1.0,
                margin: 1.0 + score - t[i - 1],
            });
        }
        Ok(Self {
            weights: model.weights(),
            thresholds: t,
            x: &inst.features,
            r: norm_sq(&inst.features),
            constraints,
        })
    }

    /// Primal point generated by multipliers `nu` (one per constraint).
    fn primal(&self, nu: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let a: f64 = self.constraints.iter().zip(nu).map(|(c, v)| c.sign * v).sum();
        let w: Vec<f64> = self.weights.iter().zip(self.x).map(|(w, x)| w + a * x).collect();
        let mut t = self.thresholds.to_vec();
        for (c, v) in self.constraints.iter().zip(nu) {
            t[c.index - 1] -= c.sign * v;
        }
        (w, t, a)
    }

    /// Post-update hinge arguments at `(w, t)`.
    fn post_margins(&self, w: &[f64], t: &[f64]) -> Vec<f64> {
        let s = dot(w, self.x);
        self.constraints
            .iter()
            .map(|c| 1.0 - c.sign * s + c.sign * t[c.index - 1])
            .collect()
    }

    fn multipliers(&self, nu: &[f64]) -> BTreeMap<usize, f64> {
        self.constraints.iter().zip(nu).map(|(c, &v)| (c.index, v)).collect()
    }
}

/// `½‖w' - w‖² + ½‖θ' - θ‖²` plus the slack penalty evaluated at the smallest
/// feasible slacks `ξ_k = [h_k]_+`.
pub fn primal_objective(before: &RankingModel, after: &RankingModel, inst: &IntervalInstance, slack: Slack) -> Result<f64> {
    check_dims(before.dim(), after.dim())?;
    if before.num_classes() != after.num_classes() {
        return Err(Error::input("models have different class counts"));
    }
    inst.validate(before.num_classes())?;
    check_dims(before.dim(), inst.features.len())?;
    let s = dot(after.weights(), &inst.features);
    let t = after.thresholds();
    let hinges = (1..inst.y_l)
        .map(|i| (1.0 - s + t[i - 1]).max(0.0))
        .chain((inst.y_r..after.num_classes()).map(|i| (1.0 + s - t[i - 1]).max(0.0)));
    Ok(objective_from_parts(
        before.weights(),
        before.thresholds(),
        after.weights(),
        after.thresholds(),
        hinges,
        slack,
    ))
}

fn objective_from_parts(
    w0: &[f64],
    t0: &[f64],
    w: &[f64],
    t: &[f64],
    hinges: impl Iterator<Item = f64>,
    slack: Slack,
) -> f64 {
    let dw: f64 = w.iter().zip(w0).map(|(a, b)| (a - b) * (a - b)).sum();
    let dt: f64 = t.iter().zip(t0).map(|(a, b)| (a - b) * (a - b)).sum();
    let penalty = match slack {
        Slack::None => 0.0,
        Slack::Linear(c) => c * hinges.sum::<f64>(),
        Slack::Squared(c) => c * hinges.map(|h| h * h).sum::<f64>(),
    };
    0.5 * dw + 0.5 * dt + penalty
}

/// Solves `m·z = b` in place by Gaussian elimination with partial pivoting.
fn solve_dense(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = m.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
                b[col + 1 + offset] -= f * b[col];
            }
        }
    }
    let mut z = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| m[row][k] * z[k]).sum();
        z[row] = (b[row] - tail) / m[row][row];
    }
    Some(z)
}

/// Enumerates all active sets for the PA (`diag = 1`) and PA-II
/// (`diag = 1 + 1/(2C)`) problems.
fn enumerate(problem: &Problem, slack: Slack) -> Result<OracleSolution> {
    let n = problem.constraints.len();
    let diag = match slack {
        Slack::Squared(c) => 1.0 + 1.0 / (2.0 * c),
        _ => 1.0,
    };
    let squared_weight = match slack {
        Slack::Squared(c) => Some(c),
        _ => None,
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << n) {
        let active: Vec<usize> = (0..n).filter(|&k| mask & (1 << k) != 0).collect();
        let m = active
            .iter()
            .map(|&p| {
                active
                    .iter()
                    .map(|&q| {
                        let cp = &problem.constraints[p];
                        let cq = &problem.constraints[q];
                        problem.r * cp.sign * cq.sign + if p == q { diag } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let rhs = active.iter().map(|&p| problem.constraints[p].margin).collect();
        let Some(z) = solve_dense(m, rhs) else {
            continue;
        };
        if z.iter().any(|&v| v < -NONNEG_TOL) {
            continue;
        }
        let mut nu = vec![0.0; n];
        for (&p, &v) in active.iter().zip(&z) {
            nu[p] = v.max(0.0);
        }
        let (w, t, _) = problem.primal(&nu);
        let h = problem.post_margins(&w, &t);
        let feasible = (0..n).all(|k| mask & (1 << k) != 0 || h[k] <= FEASIBILITY_TOL);
        if !feasible {
            continue;
        }
        let hinges = h.iter().map(|v| v.max(0.0));
        let obj = objective_from_parts(problem.weights, problem.thresholds, &w, &t, hinges, slack);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, nu));
        }
    }

    let (objective, nu) = best.ok_or_else(|| Error::Internal("no feasible active set found".into()))?;
    let (w, t, _) = problem.primal(&nu);
    let h = problem.post_margins(&w, &t);
    let mut residual: f64 = 0.0;
    for (&v, &hk) in nu.iter().zip(&h) {
        let violation = match squared_weight {
            None => hk.max((v * hk).abs()),
            Some(c) if v > 0.0 => (hk - v / (2.0 * c)).abs(),
            Some(_) => hk.max(0.0),
        };
        residual = residual.max(violation).max(-v);
    }
    Ok(OracleSolution {
        weights: w,
        thresholds: t,
        objective,
        multipliers: problem.multipliers(&nu),
        kkt_residual: residual,
    })
}

/// Exact hard-margin update by exhaustive active-set enumeration.
pub fn oracle_pa(model: &RankingModel, inst: &IntervalInstance) -> Result<OracleSolution> {
    enumerate(&Problem::new(model, inst)?, Slack::None)
}

/// Exact squared-slack update by exhaustive active-set enumeration.
pub fn oracle_pa2(model: &RankingModel, inst: &IntervalInstance, c: f64) -> Result<OracleSolution> {
    check_c(c)?;
    enumerate(&Problem::new(model, inst)?, Slack::Squared(c))
}

fn check_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::input(format!("aggressiveness C must be positive and finite, got {c}")));
    }
    Ok(())
}

/// Linear-slack update by projected coordinate ascent on the dual
///
/// ```text
/// max_{0 ≤ ν ≤ C}  Σ ν_k g_k - ½ r (Σ σ_k ν_k)² - ½ Σ ν_k²
/// ```
///
/// stopping once the duality gap is at most `1e-10` and a full pass moves
/// no coordinate by more than `1e-13`.
pub fn oracle_pa1(model: &RankingModel, inst: &IntervalInstance, c: f64) -> Result<OracleSolution> {
    check_c(c)?;
    let problem = Problem::new(model, inst)?;
    let n = problem.constraints.len();
    let r = problem.r;
    let mut nu = vec![0.0; n];
    let mut a = 0.0;
    let mut steps = 0;
    let mut gap = 0.0;

    let gap_at = |nu: &[f64]| -> f64 {
        let (w, t, a) = problem.primal(nu);
        let h = problem.post_margins(&w, &t);
        let primal = objective_from_parts(
            problem.weights,
            problem.thresholds,
            &w,
            &t,
            h.iter().map(|v| v.max(0.0)),
            Slack::Linear(c),
        );
        let lin: f64 = problem.constraints.iter().zip(nu).map(|(k, v)| v * k.margin).sum();
        let dual = lin - 0.5 * r * a * a - 0.5 * nu.iter().map(|v| v * v).sum::<f64>();
        primal - dual
    };

    if n > 0 {
        loop {
            let mut max_step: f64 = 0.0;
            for (k, con) in problem.constraints.iter().enumerate() {
                let rest = a - con.sign * nu[k];
                let next = ((con.margin - r * con.sign * rest) / (1.0 + r)).clamp(0.0, c);
                max_step = max_step.max((next - nu[k]).abs());
                nu[k] = next;
                a = rest + con.sign * next;
            }
            steps += n;
            gap = gap_at(&nu);
            if gap <= PA1_GAP_TOL && max_step <= PA1_STEP_TOL {
                break;
            }
            if steps >= PA1_MAX_STEPS {
                return Err(Error::Solver {
                    iterations: steps,
                    residual: gap,
                });
            }
        }
    }

    let (w, t, _) = problem.primal(&nu);
    let h = problem.post_margins(&w, &t);
    let objective = objective_from_parts(
        problem.weights,
        problem.thresholds,
        &w,
        &t,
        h.iter().map(|v| v.max(0.0)),
        Slack::Linear(c),
    );
    let mut residual = gap.max(0.0);
    for (&v, &hk) in nu.iter().zip(&h) {
        let violation = if v <= NONNEG_TOL {
            hk.max(0.0)
        } else if v >= c - NONNEG_TOL {
            (-hk).max(0.0)
        } else {
            hk.abs()
        };
        residual = residual.max(violation);
    }
    Ok(OracleSolution {
        weights: w,
        thresholds: t,
        objective,
        multipliers: problem.multipliers(&nu),
        kkt_residual: residual,
    })
}
