use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{BoundReport, Experiment, RunConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// `trial,mean_avg_mae,stderr_avg_mae` with one row per trial (1-based).
pub fn curve_csv(experiment: &Experiment) -> String {
    let mut out = String::from("trial,mean_avg_mae,stderr_avg_mae\n");
    for (t, (m, s)) in experiment.mean.iter().zip(&experiment.stderr).enumerate() {
        let _ = writeln!(out, "{},{m},{s}", t + 1);
    }
    out
}

pub fn write_curve_csv(path: &Path, experiment: &Experiment) -> Result<()> {
    write_file(path, curve_csv(experiment).as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub name: String,
    pub sha256: String,
    pub rows: usize,
    pub features: usize,
    pub num_classes: usize,
    pub class_counts: Vec<usize>,
    pub clamped_targets: usize,
}

impl DatasetSummary {
    pub fn of(dataset: &Dataset) -> Self {
        Self {
            name: dataset.name.clone(),
            sha256: dataset.digest.clone(),
            rows: dataset.len(),
            features: dataset.dim(),
            num_classes: dataset.num_classes,
            class_counts: dataset.class_counts(),
            clamped_targets: dataset.clamped,
        }
    }
}

/// Everything needed to reproduce a result file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub seeds: Vec<u64>,
    pub warnings: Vec<String>,
    pub bounds: Vec<BoundReport>,
    pub final_mean_avg_mae: Option<f64>,
    pub final_stderr_avg_mae: Option<f64>,
    pub fixed_point_fallbacks: usize,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, dataset: &Dataset) -> Self {
        let mut warnings = Vec::new();
        if dataset.clamped > 0 {
            warnings.push(format!(
                "{} targets fell outside the declared range and were clamped",
                dataset.clamped
            ));
        }
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            dataset: DatasetSummary::of(dataset),
            seeds: config.seeds(),
            warnings,
            bounds: Vec::new(),
            final_mean_avg_mae: None,
            final_stderr_avg_mae: None,
            fixed_point_fallbacks: 0,
        }
    }

    pub fn with_experiment(mut self, experiment: &Experiment) -> Self {
        self.final_mean_avg_mae = Some(experiment.final_mean());
        self.final_stderr_avg_mae = Some(experiment.final_stderr());
        self.fixed_point_fallbacks = experiment.runs.iter().map(|r| r.fallbacks).sum();
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        write_file(path, text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let exp = Experiment {
            config: RunConfig::default(),
            mean: vec![1.0, 0.5],
            stderr: vec![0.0, 0.25],
            runs: vec![],
        };
        assert_eq!(curve_csv(&exp), "trial,mean_avg_mae,stderr_avg_mae\n1,1,0\n2,0.5,0.25\n");
    }

    #[test]
    fn manifest_serializes() {
        let ds = Dataset::from_parts("toy", vec![vec![0.0]], vec![1], 2).unwrap();
        let m = Manifest::new("train", &RunConfig::default(), &ds);
        let json = m.to_json().unwrap();
        assert!(json.contains("\"sha256\""));
        assert!(json.contains("\"algorithm\": \"pa1\""));
        assert_eq!(m.seeds.len(), 100);
    }
}
