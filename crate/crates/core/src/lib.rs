//! Exact passive-aggressive online ranking with interval labels.
//!
//! A [`RankingModel`] scores an instance with `w·x` and cuts the real line
//! with `K - 1` ordered thresholds. Each trial observes an interval label
//! `[y_l, y_r]`; the PA, PA-I and PA-II updates move `w` and only the
//! thresholds outside the band, solving the per-trial quadratic program
//! exactly (see [`sca`]). Thresholds stay ordered after every update.
//!
//! ```
//! use interval_rank::{update_pa, IntervalInstance, RankingModel};
//!
//! let mut model = RankingModel::zeros(1, 3).unwrap();
//! let inst = IntervalInstance::exact(vec![1.0], 2).unwrap();
//! let report = update_pa(&mut model, &inst).unwrap();
//! assert_eq!(model.thresholds(), &[-1.0, 1.0]);
//! assert!(report.post_loss.total() < 1e-12);
//! ```

pub mod baselines;
pub mod data;
pub mod error;
pub mod harness;
pub mod loss;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sca;
pub mod update;

pub use baselines::{mcp_update, prank_update, McpModel, PRankModel};
pub use data::{Dataset, DatasetSpec, IntervalPolicy};
pub use error::{Error, Result};
pub use harness::{average_runs, run_online, Algorithm, BoundReport, MetricMode, RunConfig, RunMetrics};
pub use loss::{interval_mae_loss, surrogate_losses, total_surrogate, ThresholdLosses};
pub use model::{IntervalInstance, RankingModel};
pub use oracle::{oracle_pa, oracle_pa1, oracle_pa2, OracleSolution};
pub use sca::{sca_pa, sca_pa1, sca_pa2, FixedPointConfig, SupportSolution};
pub use update::{update, update_pa, update_pa1, update_pa2, UpdateReport, Variant};
