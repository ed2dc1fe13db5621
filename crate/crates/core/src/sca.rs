//! Support-class solvers: find which thresholds move at a trial and by how much.
//!
//! Every variant solves the same per-trial problem. Given the current score
//! `f`, the squared norm `r = ‖x‖²` and the signed hinge arguments `g_i` of
//! the constrained thresholds, the optimal multipliers satisfy
//!
//! ```text
//! λ_i = φ(g_i - a·r)   for i < y_l
//! μ_i = φ(g_i + a·r)   for i >= y_r
//! a   = Σλ - Σμ
//! ```
//!
//! with `φ(z) = [z]_+` for PA, `clamp(z, 0, C)` for PA-I and
//! `[z]_+ / (1 + 1/(2C))` for PA-II. Because `g_i` is monotone in `i` on
//! each side, the positive multipliers always form a block adjacent to the
//! label band, so PA and PA-II can grow the support sets greedily. PA-I uses a
//! fixed-point iteration over the clamped system.
//!
//! `g_i` equals the stored hinge loss `l_i` whenever `l_i > 0`. The signed
//! value matters when a currently satisfied threshold is dragged into the
//! support by updates from the opposite side.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::loss::ThresholdLosses;

/// Multipliers at or below this value are treated as zero.
pub const MEMBERSHIP_EPS: f64 = 1e-12;

/// Support sets with their Lagrange multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSolution {
    /// `S_l` with `λ_i > 0`.
    pub lambda: BTreeMap<usize, f64>,
    /// `S_r` with `μ_i > 0`.
    pub mu: BTreeMap<usize, f64>,
    /// Aggregate step along `x`: `Σλ - Σμ`.
    pub a: f64,
    /// Fixed-point sweeps used (PA-I only; zero for the greedy solvers).
    pub sweeps: usize,
    /// Whether PA-I fell back to the exact scalar solve.
    pub fell_back: bool,
}

impl SupportSolution {
    pub fn left_support(&self) -> Vec<usize> {
        self.lambda.keys().copied().collect()
    }

    pub fn right_support(&self) -> Vec<usize> {
        self.mu.keys().copied().collect()
    }

    pub fn support_size(&self) -> usize {
        self.lambda.len() + self.mu.len()
    }

    pub fn multiplier_sum(&self) -> f64 {
        self.lambda.values().sum::<f64>() - self.mu.values().sum::<f64>()
    }
}

/// Convergence controls for the PA-I fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FixedPointConfig {
    /// Converged once the largest multiplier change drops below this.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Give up early when the change has not improved for this many sweeps.
    pub stall_sweeps: usize,
    /// Solve the scalar equation exactly when the iteration does not converge.
    pub fallback: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_sweeps: 10_000,
            stall_sweeps: 50,
            fallback: true,
        }
    }
}

fn check_inputs(losses: &ThresholdLosses, x_norm_sq: f64) -> Result<()> {
    if !(x_norm_sq.is_finite() && x_norm_sq >= 0.0) {
        return Err(Error::input(format!("‖x‖² must be finite and non-negative, got {x_norm_sq}")));
    }
    if losses.num_constraints() == 0 {
        return Err(Error::contract(
            "no constrained thresholds (y_l = 1 and y_r = K); the trial is passive",
        ));
    }
    if losses.total() <= 0.0 {
        return Err(Error::contract("all losses are zero; passive trials must be skipped"));
    }
    Ok(())
}

fn check_aggressiveness(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::input(format!("aggressiveness C must be positive and finite, got {c}")));
    }
    Ok(())
}

/// Signed margins of the left candidates, nearest the band first.
fn left_margins(losses: &ThresholdLosses) -> Vec<(usize, f64)> {
    losses.left_indices().map(|i| (i, losses.margin(i))).collect()
}

fn right_margins(losses: &ThresholdLosses) -> Vec<(usize, f64)> {
    losses.right_indices().map(|i| (i, losses.margin(i))).collect()
}

/// Greedy support growth shared by PA (`kappa = 1`) and PA-II
/// (`kappa = 1 + 1/(2C)`).
///
/// Each round tries the next left candidate, then the next right candidate,
/// each with the multiplier it would receive if added. The search ends after
/// a round that adds nothing.
fn greedy_support(losses: &ThresholdLosses, r: f64, kappa: f64) -> SupportSolution {
    let left = left_margins(losses);
    let right = right_margins(losses);
    let (mut p, mut q) = (0, 0);
    // Σ_{S_l} g - Σ_{S_r} g and |S_l| + |S_r|.
    let mut signed_sum = 0.0;
    let mut size = 0usize;

    loop {
        let mut grew = false;
        if let Some(&(_, g)) = left.get(p) {
            let a = (signed_sum + g) / (kappa + (size + 1) as f64 * r);
            if (g - a * r) / kappa > MEMBERSHIP_EPS {
                signed_sum += g;
                size += 1;
                p += 1;
                grew = true;
            }
        }
        if let Some(&(_, g)) = right.get(q) {
            let a = (signed_sum - g) / (kappa + (size + 1) as f64 * r);
            if (g + a * r) / kappa > MEMBERSHIP_EPS {
                signed_sum -= g;
                size += 1;
                q += 1;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    let a = signed_sum / (kappa + size as f64 * r);
    let lambda = left[..p].iter().map(|&(i, g)| (i, (g - a * r) / kappa)).collect();
    let mu = right[..q].iter().map(|&(i, g)| (i, (g + a * r) / kappa)).collect();
    SupportSolution {
        lambda,
        mu,
        a,
        sweeps: 0,
        fell_back: false,
    }
}

/// Support sets and multipliers for the hard-margin PA update.
pub fn sca_pa(losses: &ThresholdLosses, x_norm_sq: f64) -> Result<SupportSolution> {
    check_inputs(losses, x_norm_sq)?;
    Ok(greedy_support(losses, x_norm_sq, 1.0))
}

/// Support sets and multipliers for PA-II (squared slack penalty `C`).
pub fn sca_pa2(losses: &ThresholdLosses, x_norm_sq: f64, c: f64) -> Result<SupportSolution> {
    check_inputs(losses, x_norm_sq)?;
    check_aggressiveness(c)?;
    Ok(greedy_support(losses, x_norm_sq, 1.0 + 1.0 / (2.0 * c)))
}

/// Support sets and multipliers for PA-I (multipliers boxed in `[0, C]`).
///
/// Runs the simultaneous fixed-point sweep from all-zero multipliers: every
/// multiplier is recomputed from the current `a`, then `a` is refreshed. The
/// iteration contracts only when `‖x‖²` times the number of unclamped
/// multipliers is below one; otherwise it is cut short and, if
/// `config.fallback` is set, the scalar equation for `a` is solved exactly.
pub fn sca_pa1(
    losses: &ThresholdLosses,
    x_norm_sq: f64,
    c: f64,
    config: &FixedPointConfig,
) -> Result<SupportSolution> {
    check_inputs(losses, x_norm_sq)?;
    check_aggressiveness(c)?;
    let r = x_norm_sq;
    let left = left_margins(losses);
    let right = right_margins(losses);
    let mut lambda = vec![0.0; left.len()];
    let mut mu = vec![0.0; right.len()];
    let mut a = 0.0;

    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut converged = false;
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        for (m, &(_, g)) in lambda.iter_mut().zip(&left) {
            *m = (g - a * r).clamp(0.0, c);
        }
        for (m, &(_, g)) in mu.iter_mut().zip(&right) {
            *m = (g + a * r).clamp(0.0, c);
        }
        a = lambda.iter().sum::<f64>() - mu.iter().sum::<f64>();

        // Distance to the next sweep's multipliers, i.e. the fixed-point residual.
        residual = left
            .iter()
            .zip(&lambda)
            .map(|(&(_, g), &m)| ((g - a * r).clamp(0.0, c) - m).abs())
            .chain(right.iter().zip(&mu).map(|(&(_, g), &m)| ((g + a * r).clamp(0.0, c) - m).abs()))
            .fold(0.0, f64::max);
        if residual < config.tolerance {
            converged = true;
            break;
        }
        if residual < best {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.stall_sweeps {
                break;
            }
        }
    }

    let mut fell_back = false;
    if !converged {
        if !config.fallback {
            return Err(Error::Solver {
                iterations: sweeps,
                residual,
            });
        }
        let left_g: Vec<f64> = left.iter().map(|&(_, g)| g).collect();
        let right_g: Vec<f64> = right.iter().map(|&(_, g)| g).collect();
        a = solve_clamped_step(&left_g, &right_g, r, c);
        for (m, &g) in lambda.iter_mut().zip(&left_g) {
            *m = (g - a * r).clamp(0.0, c);
        }
        for (m, &g) in mu.iter_mut().zip(&right_g) {
            *m = (g + a * r).clamp(0.0, c);
        }
        fell_back = true;
    }

    let lambda: BTreeMap<usize, f64> = left
        .iter()
        .zip(&lambda)
        .filter(|(_, &m)| m > MEMBERSHIP_EPS)
        .map(|(&(i, _), &m)| (i, m))
        .collect();
    let mu: BTreeMap<usize, f64> = right
        .iter()
        .zip(&mu)
        .filter(|(_, &m)| m > MEMBERSHIP_EPS)
        .map(|(&(i, _), &m)| (i, m))
        .collect();
    let a = lambda.values().sum::<f64>() - mu.values().sum::<f64>();
    Ok(SupportSolution {
        lambda,
        mu,
        a,
        sweeps,
        fell_back,
    })
}

/// Root of `F(a) = a - Σ clamp(g_l - a r, 0, cap) + Σ clamp(g_r + a r, 0, cap)`.
///
/// `F` is continuous, piecewise linear and has slope at least one, so the
/// root is unique and is found exactly by locating the bracketing pair of
/// breakpoints. `cap = f64::INFINITY` gives the unboxed (PA) equation.
pub fn solve_clamped_step(left: &[f64], right: &[f64], r: f64, cap: f64) -> f64 {
    let f = |a: f64| {
        a - left.iter().map(|&g| (g - a * r).clamp(0.0, cap)).sum::<f64>()
            + right.iter().map(|&g| (g + a * r).clamp(0.0, cap)).sum::<f64>()
    };
    if r == 0.0 || (left.is_empty() && right.is_empty()) {
        return -f(0.0);
    }

    let mut knots: Vec<f64> = Vec::with_capacity(2 * (left.len() + right.len()));
    for &g in left {
        knots.push(g / r);
        if cap.is_finite() {
            knots.push((g - cap) / r);
        }
    }
    for &g in right {
        knots.push(-g / r);
        if cap.is_finite() {
            knots.push((cap - g) / r);
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let values: Vec<f64> = knots.iter().map(|&k| f(k)).collect();
    // F is affine beyond the outermost knots, so one unit step measures the slope.
    match values.iter().position(|&v| v >= 0.0) {
        None => {
            let (k, v) = (knots[knots.len() - 1], values[values.len() - 1]);
            k - v / (f(k + 1.0) - v)
        }
        Some(0) => knots[0] - values[0] / (values[0] - f(knots[0] - 1.0)),
        Some(i) => {
            let (k0, k1) = (knots[i - 1], knots[i]);
            let (v0, v1) = (values[i - 1], values[i]);
            k0 - v0 * (k1 - k0) / (v1 - v0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::surrogate_losses;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn losses(score: f64, ts: &[f64], y_l: usize, y_r: usize) -> ThresholdLosses {
        surrogate_losses(score, ts, y_l, y_r).unwrap()
    }

    fn assert_multipliers(sol: &SupportSolution, lambda: &[(usize, f64)], mu: &[(usize, f64)]) {
        assert_eq!(sol.left_support(), lambda.iter().map(|p| p.0).collect::<Vec<_>>());
        assert_eq!(sol.right_support(), mu.iter().map(|p| p.0).collect::<Vec<_>>());
        for &(i, v) in lambda {
            assert_abs_diff_eq!(sol.lambda[&i], v, epsilon = 1e-12);
        }
        for &(i, v) in mu {
            assert_abs_diff_eq!(sol.mu[&i], v, epsilon = 1e-12);
        }
    }

    #[test]
    fn pa_one_sided_block() {
        let sol = sca_pa(&losses(0.0, &[0.0, 0.0, 0.0], 4, 4), 1.0).unwrap();
        assert_multipliers(&sol, &[(1, 0.25), (2, 0.25), (3, 0.25)], &[]);
        assert_abs_diff_eq!(sol.a, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn pa_rejects_far_threshold() {
        let sol = sca_pa(&losses(0.0, &[-10.0, 0.0, 0.0], 4, 4), 1.0).unwrap();
        assert_multipliers(&sol, &[(2, 1.0 / 3.0), (3, 1.0 / 3.0)], &[]);
        assert_abs_diff_eq!(sol.a, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn pa_symmetric_two_sided() {
        let sol = sca_pa(&losses(0.0, &[0.0, 0.0], 2, 2), 1.0).unwrap();
        assert_multipliers(&sol, &[(1, 1.0)], &[(2, 1.0)]);
        assert_abs_diff_eq!(sol.a, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pa_pulls_in_satisfied_threshold() {
        // l_1 = 0 but the right-side push drags threshold 1 into the support.
        let sol = sca_pa(&losses(1.5, &[0.0, 0.0], 2, 2), 1.0).unwrap();
        assert_multipliers(&sol, &[(1, 0.5)], &[(2, 1.5)]);
        assert_abs_diff_eq!(sol.a, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn pa_excludes_satisfied_side() {
        let sol = sca_pa(&losses(4.0, &[0.0, 0.0], 2, 2), 1.0).unwrap();
        assert_multipliers(&sol, &[], &[(2, 2.5)]);
    }

    #[test]
    fn contract_errors() {
        let zero = losses(0.0, &[-2.0, -1.0, 1.0, 2.0], 2, 4);
        assert!(matches!(sca_pa(&zero, 1.0), Err(Error::Contract(_))));
        let unconstrained = losses(0.0, &[0.0], 1, 2);
        assert!(matches!(sca_pa(&unconstrained, 1.0), Err(Error::Contract(_))));
        let cfg = FixedPointConfig::default();
        assert!(matches!(sca_pa1(&zero, 1.0, 1.0, &cfg), Err(Error::Contract(_))));
        assert!(matches!(sca_pa2(&zero, 1.0, 1.0), Err(Error::Contract(_))));
        let some = losses(0.0, &[0.0], 1, 1);
        assert!(sca_pa(&some, -1.0).is_err());
        assert!(sca_pa1(&some, 1.0, 0.0, &cfg).is_err());
        assert!(sca_pa2(&some, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn pa1_examples() {
        let cfg = FixedPointConfig::default();
        let sym = losses(0.0, &[0.0, 0.0], 2, 2);
        let sol = sca_pa1(&sym, 1.0, 0.5, &cfg).unwrap();
        assert_multipliers(&sol, &[(1, 0.5)], &[(2, 0.5)]);
        assert_eq!(sol.a, 0.0);
        assert_eq!(sol.sweeps, 1);
        assert!(!sol.fell_back);

        let sol = sca_pa1(&sym, 1.0, 10.0, &cfg).unwrap();
        assert_multipliers(&sol, &[(1, 1.0)], &[(2, 1.0)]);

        let single = losses(0.0, &[0.0], 1, 1);
        let sol = sca_pa1(&single, 1.0, 0.25, &cfg).unwrap();
        assert_multipliers(&sol, &[], &[(1, 0.25)]);
        assert_abs_diff_eq!(sol.a, -0.25, epsilon = 1e-15);
    }

    #[test]
    fn pa1_without_fallback_reports_solver_error() {
        // Unclamped single constraint with r = 1: the Jacobi map a ↦ -(1 + a)
        // oscillates forever.
        let single = losses(0.0, &[0.0], 1, 1);
        let cfg = FixedPointConfig {
            fallback: false,
            ..FixedPointConfig::default()
        };
        assert!(matches!(sca_pa1(&single, 1.0, 10.0, &cfg), Err(Error::Solver { .. })));
        let sol = sca_pa1(&single, 1.0, 10.0, &FixedPointConfig::default()).unwrap();
        assert!(sol.fell_back);
        assert_multipliers(&sol, &[], &[(1, 0.5)]);
    }

    #[test]
    fn pa2_examples() {
        let sol = sca_pa2(&losses(0.0, &[0.0, 0.0], 2, 2), 1.0, 0.5).unwrap();
        assert_multipliers(&sol, &[(1, 0.5)], &[(2, 0.5)]);
        assert_abs_diff_eq!(sol.a, 0.0, epsilon = 1e-15);

        let sol = sca_pa2(&losses(0.0, &[0.0], 1, 1), 1.0, 0.5).unwrap();
        assert_multipliers(&sol, &[], &[(1, 1.0 / 3.0)]);
        assert_abs_diff_eq!(sol.a, -1.0 / 3.0, epsilon = 1e-15);

        let block = losses(0.0, &[0.0, 0.0, 0.0], 4, 4);
        let pa = sca_pa(&block, 1.0).unwrap();
        let pa2 = sca_pa2(&block, 1.0, 1e9).unwrap();
        assert_eq!(pa.left_support(), pa2.left_support());
        assert_abs_diff_eq!(pa.a, pa2.a, epsilon = 1e-6);
        for (i, v) in &pa.lambda {
            assert_abs_diff_eq!(*v, pa2.lambda[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn scalar_root_examples() {
        // Single right constraint, g = 1, r = 1: a = -(1 + a) → -1/2.
        assert_abs_diff_eq!(solve_clamped_step(&[], &[1.0], 1.0, f64::INFINITY), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(solve_clamped_step(&[], &[1.0], 1.0, 0.25), -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(solve_clamped_step(&[1.0, 1.0], &[], 0.0, 0.3), 0.6, epsilon = 1e-15);
        assert_eq!(solve_clamped_step(&[-1.0], &[-2.0], 2.0, 1.0), 0.0);
    }

    fn scenario() -> impl Strategy<Value = (Vec<f64>, f64, usize, usize, f64)> {
        (2usize..9)
            .prop_flat_map(|k| {
                (
                    proptest::collection::vec(-4.0f64..4.0, k - 1),
                    -5.0f64..5.0,
                    1..=k,
                    0usize..=8,
                    0.05f64..6.0,
                )
            })
            .prop_map(|(mut ts, s, yl, w, r)| {
                ts.sort_by(f64::total_cmp);
                let k = ts.len() + 1;
                let yr = (yl + w).min(k);
                (ts, s, yl, yr, r)
            })
            .prop_filter("needs positive loss", |(ts, s, yl, yr, _)| {
                surrogate_losses(*s, ts, *yl, *yr).unwrap().total() > 1e-6
            })
    }

    fn is_suffix_block(idx: &[usize], end: usize) -> bool {
        idx.is_empty() || (idx.last() == Some(&end) && idx.windows(2).all(|w| w[1] == w[0] + 1))
    }

    fn is_prefix_block(idx: &[usize], start: usize) -> bool {
        idx.is_empty() || (idx[0] == start && idx.windows(2).all(|w| w[1] == w[0] + 1))
    }

    proptest! {
        #[test]
        fn greedy_matches_scalar_root((ts, s, yl, yr, r) in scenario()) {
            let l = losses(s, &ts, yl, yr);
            let sol = sca_pa(&l, r).unwrap();
            let left: Vec<f64> = l.left_indices().map(|i| l.margin(i)).collect();
            let right: Vec<f64> = l.right_indices().map(|i| l.margin(i)).collect();
            let a = solve_clamped_step(&left, &right, r, f64::INFINITY);
            prop_assert!((sol.a - a).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn supports_are_contiguous_and_positive((ts, s, yl, yr, r) in scenario(), c in 0.01f64..5.0) {
            let l = losses(s, &ts, yl, yr);
            for sol in [
                sca_pa(&l, r).unwrap(),
                sca_pa1(&l, r, c, &FixedPointConfig::default()).unwrap(),
                sca_pa2(&l, r, c).unwrap(),
            ] {
                prop_assert!(is_suffix_block(&sol.left_support(), yl - 1));
                prop_assert!(is_prefix_block(&sol.right_support(), yr));
                prop_assert!(sol.lambda.values().chain(sol.mu.values()).all(|&m| m > MEMBERSHIP_EPS));
                prop_assert!((sol.a - sol.multiplier_sum()).abs() <= 1e-12 * (1.0 + sol.a.abs()));
            }
        }

        #[test]
        fn excluded_neighbour_has_nonpositive_multiplier((ts, s, yl, yr, r) in scenario()) {
            let l = losses(s, &ts, yl, yr);
            let sol = sca_pa(&l, r).unwrap();
            let n = sol.support_size() as f64;
            let g_sum: f64 = sol.lambda.keys().map(|&i| l.margin(i)).sum::<f64>()
                - sol.mu.keys().map(|&i| l.margin(i)).sum::<f64>();
            if let Some(&first) = sol.lambda.keys().next() {
                if first > 1 {
                    let g = l.margin(first - 1);
                    let a = (g_sum + g) / (1.0 + (n + 1.0) * r);
                    prop_assert!(g - a * r <= MEMBERSHIP_EPS);
                }
            }
            if let Some(&last) = sol.mu.keys().last() {
                if last + 1 < l.num_classes {
                    let g = l.margin(last + 1);
                    let a = (g_sum - g) / (1.0 + (n + 1.0) * r);
                    prop_assert!(g + a * r <= MEMBERSHIP_EPS);
                }
            }
        }

        #[test]
        fn pa1_is_a_fixed_point((ts, s, yl, yr, r) in scenario(), c in 0.01f64..5.0) {
            let l = losses(s, &ts, yl, yr);
            let sol = sca_pa1(&l, r, c, &FixedPointConfig::default()).unwrap();
            for i in l.left_indices() {
                let want = (l.margin(i) - sol.a * r).clamp(0.0, c);
                let got = sol.lambda.get(&i).copied().unwrap_or(0.0);
                prop_assert!((want - got).abs() <= 1e-9);
                prop_assert!(got <= c);
            }
            for i in l.right_indices() {
                let want = (l.margin(i) + sol.a * r).clamp(0.0, c);
                let got = sol.mu.get(&i).copied().unwrap_or(0.0);
                prop_assert!((want - got).abs() <= 1e-9);
                prop_assert!(got <= c);
            }
        }
    }
}
