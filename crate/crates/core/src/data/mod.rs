//! Dataset ingestion, normalization, target binning and interval labelling.

mod builtin;
mod intervals;
mod load;
pub mod synthetic;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{IntervalInstance, RankingModel};

pub use builtin::{builtin_names, builtin_spec};
pub use intervals::{label_stream, make_interval, IntervalPolicy, PAPER_OFFSETS};
pub use load::{load_csv, load_rows, RawData};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Comma-separated text with a header row.
    #[default]
    Csv,
    /// `label qid:<q> <index>:<value> ...` lines.
    Letor,
}

/// Where a dataset lives and how its target becomes an ordinal class.
///
/// Classes are `1 + #{edges e : e < value}`, so every edge is the inclusive
/// upper bound of its class. Values outside `[min, max]` are clamped into the
/// first or last class and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Feature columns in order; empty means every column except the
    /// target and `exclude`.
    #[serde(default)]
    pub features: Vec<String>,
    #[serde(default)]
    pub exclude: Vec<String>,
    /// Columns one-hot encoded over their sorted distinct values.
    #[serde(default)]
    pub categorical: Vec<String>,
    /// Target column (CSV only).
    #[serde(default)]
    pub target: String,
    pub edges: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Keep this many rows, chosen with `subsample_seed` (file order kept).
    #[serde(default)]
    pub subsample: Option<usize>,
    #[serde(default)]
    pub subsample_seed: u64,
    #[serde(skip)]
    pub embedded: Option<&'static str>,
}

impl DatasetSpec {
    pub fn num_classes(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.edges.is_empty() {
            return Err(Error::Config(format!("{}: at least one bin edge is required", self.name)));
        }
        if self.edges.iter().any(|e| !e.is_finite()) || !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::Config(format!("{}: bin edges and range must be finite", self.name)));
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("{}: bin edges must be strictly increasing", self.name)));
        }
        if !(self.min <= self.edges[0] && self.edges[self.edges.len() - 1] < self.max) {
            return Err(Error::Config(format!(
                "{}: edges must lie within [min, max] = [{}, {}]",
                self.name, self.min, self.max
            )));
        }
        if self.format == Format::Csv && self.target.is_empty() {
            return Err(Error::Config(format!("{}: csv datasets need a target column", self.name)));
        }
        Ok(())
    }

    /// Parses a TOML dataset description. A relative `path` is resolved
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut spec: DatasetSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let (Some(base), Some(path)) = (base_dir, spec.path.as_ref()) {
            if path.is_relative() {
                spec.path = Some(base.join(path));
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path.parent())
    }

    pub fn is_out_of_range(&self, value: f64) -> bool {
        value < self.min || value > self.max
    }
}

/// Class of `value` under the spec's right-inclusive edges, clamping values
/// outside the declared range.
pub fn bin_target(value: f64, spec: &DatasetSpec) -> usize {
    let v = value.clamp(spec.min, spec.max);
    1 + spec.edges.iter().filter(|&&e| e < v).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub std: f64,
}

/// Standardizes every coordinate to zero mean and unit population variance;
/// constant coordinates become zero.
pub fn normalize(rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<FeatureStats>)> {
    let first = rows.first().ok_or_else(|| Error::input("cannot normalize an empty dataset"))?;
    let d = first.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::input("rows have differing feature counts"));
    }
    let n = rows.len() as f64;
    let stats: Vec<FeatureStats> = (0..d)
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            FeatureStats { mean, std: var.sqrt() }
        })
        .collect();
    let out = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(&stats)
                .map(|(v, s)| if s.std > 0.0 { (v - s.mean) / s.std } else { 0.0 })
                .collect()
        })
        .collect();
    Ok((out, stats))
}

/// A prepared dataset: normalized features with exact ordinal labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub stats: Vec<FeatureStats>,
    /// Targets clamped into the first or last class.
    pub clamped: usize,
    /// Hex SHA-256 of the source bytes (or of the generator parameters).
    pub digest: String,
    /// A predictor known to satisfy every constraint with margin one.
    pub ideal_reference: Option<RankingModel>,
}

impl Dataset {
    /// Loads, normalizes and bins a dataset described by `spec`.
    pub fn load(spec: &DatasetSpec) -> Result<Self> {
        spec.validate()?;
        let raw = load_rows(spec)?;
        if raw.rows.is_empty() {
            return Err(Error::input(format!("dataset {} has no rows", spec.name)));
        }
        let features: Vec<Vec<f64>> = raw.rows.iter().map(|(x, _)| x.clone()).collect();
        let (features, stats) = normalize(&features)?;
        let clamped = raw.rows.iter().filter(|(_, t)| spec.is_out_of_range(*t)).count();
        if clamped > 0 {
            log::warn!("{}: {clamped} targets outside [{}, {}] were clamped", spec.name, spec.min, spec.max);
        }
        let labels = raw.rows.iter().map(|(_, t)| bin_target(*t, spec)).collect();
        Ok(Self {
            name: spec.name.clone(),
            feature_names: raw.feature_names,
            features,
            labels,
            num_classes: spec.num_classes(),
            stats,
            clamped,
            digest: raw.digest,
            ideal_reference: None,
        })
    }

    /// Wraps already-prepared features and labels without normalizing.
    pub fn from_parts(name: &str, features: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::input("features and labels differ in length"));
        }
        if num_classes < 2 {
            return Err(Error::input("datasets need K >= 2 classes"));
        }
        if let Some(&y) = labels.iter().find(|&&y| y < 1 || y > num_classes) {
            return Err(Error::input(format!("label {y} outside 1..={num_classes}")));
        }
        let d = features.first().map_or(0, Vec::len);
        if features.iter().any(|x| x.len() != d) {
            return Err(Error::input("rows have differing feature counts"));
        }
        let mut hasher = Sha256::new();
        for (x, y) in features.iter().zip(&labels) {
            for v in x {
                hasher.update(v.to_le_bytes());
            }
            hasher.update((*y as u64).to_le_bytes());
        }
        Ok(Self {
            name: name.to_string(),
            feature_names: (1..=d).map(|j| format!("x{j}")).collect(),
            features,
            labels,
            num_classes,
            stats: vec![FeatureStats { mean: 0.0, std: 1.0 }; d],
            clamped: 0,
            digest: hex::encode(hasher.finalize()),
            ideal_reference: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Every instance with its exact label as a degenerate interval.
    pub fn exact_instances(&self) -> Vec<IntervalInstance> {
        self.features
            .iter()
            .zip(&self.labels)
            .map(|(x, &y)| IntervalInstance {
                features: x.clone(),
                y_l: y,
                y_r: y,
                exact_label: Some(y),
            })
            .collect()
    }

    /// Number of rows per class, indexed from class 1.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y - 1] += 1;
        }
        counts
    }
}

/// Names accepted by [`open_dataset`] besides the file-backed builtins.
pub const SYNTHETIC_SEPARABLE: &str = "synthetic-separable";
pub const SYNTHETIC_NOISY: &str = "synthetic-noisy";

/// Resolves a dataset by builtin name, synthetic generator name, or path to
/// a TOML spec. `data` overrides the spec's file path.
pub fn open_dataset(name: &str, data: Option<&Path>) -> Result<Dataset> {
    match name {
        SYNTHETIC_SEPARABLE => return synthetic::separable(&synthetic::SeparableConfig::default()),
        SYNTHETIC_NOISY => return synthetic::noisy(&synthetic::NoisyConfig::default()),
        _ => {}
    }
    let mut spec = match builtin_spec(name) {
        Some(spec) => spec,
        None if name.ends_with(".toml") => DatasetSpec::from_toml_file(Path::new(name))?,
        None => {
            return Err(Error::Config(format!(
                "unknown dataset '{name}'; expected one of {:?}, a synthetic generator or a .toml spec",
                builtin_names()
            )))
        }
    };
    if let Some(path) = data {
        spec.path = Some(path.to_path_buf());
        spec.embedded = None;
    }
    if spec.path.is_none() && spec.embedded.is_none() {
        return Err(Error::Config(format!("dataset '{name}' is not bundled; pass its file with --data")));
    }
    Dataset::load(&spec)
}
