use super::{DatasetSpec, Format};

const ABALONE_CSV: &str = include_str!("../../data/abalone.csv");

pub fn builtin_names() -> [&'static str; 4] {
    ["abalone", "california", "parkinson", "mslr"]
}

fn spec(name: &str, target: &str, edges: &[f64], min: f64, max: f64) -> DatasetSpec {
    DatasetSpec {
        name: name.to_string(),
        path: None,
        format: Format::Csv,
        features: vec![],
        exclude: vec![],
        categorical: vec![],
        target: target.to_string(),
        edges: edges.to_vec(),
        min,
        max,
        subsample: None,
        subsample_seed: 0,
        embedded: None,
    }
}

/// Specs for the four benchmark datasets with their published class bins.
///
/// * `abalone`: rings 1-7, 8-9, 10-12, 13-29; bundled with the crate.
/// * `california`: median house value split at 100k steps into 5 classes;
///   expects the `housing.csv` layout (`total_bedrooms` is dropped because
///   it has blanks).
/// * `parkinson`: total UPDRS 7-17, 18-27, 28-37, 38-54.992.
/// * `mslr`: LETOR relevance 0-4 mapped to classes 1-5, subsampled to
///   20,000 query-document pairs.
pub fn builtin_spec(name: &str) -> Option<DatasetSpec> {
    let s = match name {
        "abalone" => DatasetSpec {
            categorical: vec!["sex".into()],
            embedded: Some(ABALONE_CSV),
            ..spec("abalone", "rings", &[7.0, 9.0, 12.0], 1.0, 29.0)
        },
        "california" => DatasetSpec {
            exclude: vec!["total_bedrooms".into()],
            categorical: vec!["ocean_proximity".into()],
            ..spec(
                "california",
                "median_house_value",
                &[100000.0, 200000.0, 300000.0, 400000.0],
                1.0,
                500001.0,
            )
        },
        "parkinson" => DatasetSpec {
            exclude: vec!["subject#".into(), "motor_UPDRS".into()],
            ..spec("parkinson", "total_UPDRS", &[17.0, 27.0, 37.0], 7.0, 54.992)
        },
        "mslr" => DatasetSpec {
            format: Format::Letor,
            subsample: Some(20_000),
            ..spec("mslr", "", &[0.0, 1.0, 2.0, 3.0], 0.0, 4.0)
        },
        _ => return None,
    };
    Some(s)
}
