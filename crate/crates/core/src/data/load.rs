use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use super::{DatasetSpec, Format};
use crate::error::{Error, Result};
use crate::rng;

/// Rows as read from the source, before normalization and binning.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    pub feature_names: Vec<String>,
    /// `(features, target)` in file order.
    pub rows: Vec<(Vec<f64>, f64)>,
    pub digest: String,
}

fn source_name(spec: &DatasetSpec) -> String {
    match (&spec.path, spec.embedded) {
        (Some(p), _) => p.display().to_string(),
        (None, Some(_)) => format!("<bundled {}>", spec.name),
        (None, None) => spec.name.clone(),
    }
}

fn source_bytes(spec: &DatasetSpec) -> Result<Vec<u8>> {
    match (&spec.path, spec.embedded) {
        (Some(path), _) => std::fs::read(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        }),
        (None, Some(text)) => Ok(text.as_bytes().to_vec()),
        (None, None) => Err(Error::Config(format!("dataset {} has no source file", spec.name))),
    }
}

/// Reads a dataset in whichever format its spec declares, applying the
/// optional subsample.
pub fn load_rows(spec: &DatasetSpec) -> Result<RawData> {
    let bytes = source_bytes(spec)?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let name = source_name(spec);
    let (feature_names, mut rows) = match spec.format {
        Format::Csv => parse_csv(spec, &bytes, &name)?,
        Format::Letor => parse_letor(&bytes, &name)?,
    };
    if let Some(n) = spec.subsample {
        if n < rows.len() {
            let mut keep = rng::sample_without_replacement(&mut rng::stream(spec.subsample_seed, 0), rows.len(), n);
            keep.sort_unstable();
            let mut all: Vec<Option<(Vec<f64>, f64)>> = rows.into_iter().map(Some).collect();
            rows = keep.iter().filter_map(|&i| all[i].take()).collect();
        }
    }
    Ok(RawData {
        feature_names,
        rows,
        digest,
    })
}

/// Reads a CSV dataset. Rows come back in file order.
pub fn load_csv(spec: &DatasetSpec) -> Result<Vec<(Vec<f64>, f64)>> {
    let bytes = source_bytes(spec)?;
    Ok(parse_csv(spec, &bytes, &source_name(spec))?.1)
}

fn parse_error(name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: name.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_number(text: &str, name: &str, line: usize, column: &str) -> Result<f64> {
    let value: f64 = text
        .parse()
        .map_err(|_| parse_error(name, line, format!("column '{column}': '{text}' is not a number")))?;
    if !value.is_finite() {
        return Err(parse_error(name, line, format!("column '{column}': non-finite value '{text}'")));
    }
    Ok(value)
}

enum Column {
    Numeric(usize),
    Categorical(usize),
}

type Parsed = (Vec<String>, Vec<(Vec<f64>, f64)>);

fn parse_csv(spec: &DatasetSpec, bytes: &[u8], name: &str) -> Result<Parsed> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let position = |col: &str| {
        header
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| Error::Config(format!("{name}: no column named '{col}'")))
    };
    let target = position(&spec.target)?;
    for col in spec.exclude.iter().chain(&spec.categorical) {
        position(col)?;
    }
    let selected: Vec<String> = if spec.features.is_empty() {
        header
            .iter()
            .filter(|h| **h != spec.target && !spec.exclude.contains(h))
            .cloned()
            .collect()
    } else {
        spec.features.clone()
    };
    let columns: Vec<Column> = selected
        .iter()
        .map(|c| {
            let i = position(c)?;
            Ok(if spec.categorical.contains(c) {
                Column::Categorical(i)
            } else {
                Column::Numeric(i)
            })
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(name, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        records.push((line, record));
    }

    // Sorted category values for each categorical column.
    let mut levels: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for col in &columns {
        if let Column::Categorical(i) = *col {
            let values: BTreeSet<String> = records.iter().map(|(_, r)| r[i].to_string()).collect();
            levels.insert(i, values.into_iter().collect());
        }
    }

    let mut feature_names = Vec::new();
    for (col, label) in columns.iter().zip(&selected) {
        match *col {
            Column::Numeric(_) => feature_names.push(label.clone()),
            Column::Categorical(i) => {
                feature_names.extend(levels[&i].iter().map(|v| format!("{label}={v}")));
            }
        }
    }

    let mut rows = Vec::with_capacity(records.len());
    for (line, record) in &records {
        let mut x = Vec::with_capacity(feature_names.len());
        for (col, label) in columns.iter().zip(&selected) {
            match *col {
                Column::Numeric(i) => x.push(parse_number(&record[i], name, *line, label)?),
                Column::Categorical(i) => {
                    x.extend(levels[&i].iter().map(|v| if *v == record[i] { 1.0 } else { 0.0 }));
                }
            }
        }
        let y = parse_number(&record[target], name, *line, &spec.target)?;
        rows.push((x, y));
    }
    Ok((feature_names, rows))
}

fn parse_letor(bytes: &[u8], name: &str) -> Result<Parsed> {
    let text = std::str::from_utf8(bytes).map_err(|_| parse_error(name, 0, "file is not valid UTF-8"))?;
    let mut sparse: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut dim = 0;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let label = tokens.next().unwrap_or_default();
        let y = parse_number(label, name, line, "relevance")?;
        let mut entries = Vec::new();
        for tok in tokens {
            let (key, value) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(name, line, format!("malformed token '{tok}'")))?;
            if key == "qid" {
                continue;
            }
            let index: usize = key
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| parse_error(name, line, format!("bad feature index '{key}'")))?;
            entries.push((index, parse_number(value, name, line, key)?));
            dim = dim.max(index);
        }
        sparse.push((entries, y));
    }
    let rows = sparse
        .into_iter()
        .map(|(entries, y)| {
            let mut x = vec![0.0; dim];
            for (i, v) in entries {
                x[i - 1] = v;
            }
            (x, y)
        })
        .collect();
    Ok(((1..=dim).map(|i| format!("f{i}")).collect(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn spec_for(path: &std::path::Path) -> DatasetSpec {
        DatasetSpec {
            name: "toy".into(),
            path: Some(path.to_path_buf()),
            format: Format::Csv,
            features: vec![],
            exclude: vec![],
            categorical: vec![],
            target: "y".into(),
            edges: vec![1.0],
            min: 0.0,
            max: 2.0,
            subsample: None,
            subsample_seed: 0,
            embedded: None,
        }
    }

    fn file_with(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn rows_come_back_in_order() {
        let f = file_with("a,b,y\n1,2,0\n3,4,1\n5,6,2\n");
        let rows = load_csv(&spec_for(f.path())).unwrap();
        assert_eq!(
            rows,
            vec![(vec![1.0, 2.0], 0.0), (vec![3.0, 4.0], 1.0), (vec![5.0, 6.0], 2.0)]
        );
    }

    #[test]
    fn header_only_is_empty() {
        let f = file_with("a,b,y\n");
        assert!(load_csv(&spec_for(f.path())).unwrap().is_empty());
    }

    #[test]
    fn nan_feature_names_the_line() {
        let f = file_with("a,b,y\n1,2,0\n1,NaN,0\n");
        let err = load_csv(&spec_for(f.path())).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_row_and_bad_target() {
        let f = file_with("a,b,y\n1,2\n");
        assert!(matches!(load_csv(&spec_for(f.path())), Err(Error::Parse { line: 2, .. })));
        let f = file_with("a,b,y\n1,2,high\n");
        assert!(matches!(load_csv(&spec_for(f.path())), Err(Error::Parse { line: 2, .. })));
        let mut missing = spec_for(f.path());
        missing.path = Some("/definitely/not/here.csv".into());
        assert!(matches!(load_csv(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn categorical_columns_are_one_hot() {
        let f = file_with("c,a,y\nm,1,0\nf,2,1\nm,3,2\n");
        let mut spec = spec_for(f.path());
        spec.categorical = vec!["c".into()];
        let raw = load_rows(&spec).unwrap();
        assert_eq!(raw.feature_names, vec!["c=f", "c=m", "a"]);
        assert_eq!(raw.rows[0].0, vec![0.0, 1.0, 1.0]);
        assert_eq!(raw.rows[1].0, vec![1.0, 0.0, 2.0]);
    }

    #[test]
    fn explicit_features_and_excludes() {
        let f = file_with("a,b,c,y\n1,2,3,0\n");
        let mut spec = spec_for(f.path());
        spec.features = vec!["c".into(), "a".into()];
        assert_eq!(load_csv(&spec).unwrap()[0].0, vec![3.0, 1.0]);
        spec.features.clear();
        spec.exclude = vec!["b".into()];
        assert_eq!(load_csv(&spec).unwrap()[0].0, vec![1.0, 3.0]);
        spec.exclude = vec!["zzz".into()];
        assert!(matches!(load_csv(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn letor_lines() {
        let f = file_with("2 qid:1 1:0.5 3:1.5 # doc\n0 qid:1 2:-1\n\n");
        let mut spec = spec_for(f.path());
        spec.format = Format::Letor;
        let raw = load_rows(&spec).unwrap();
        assert_eq!(raw.feature_names, vec!["f1", "f2", "f3"]);
        assert_eq!(raw.rows, vec![(vec![0.5, 0.0, 1.5], 2.0), (vec![0.0, -1.0, 0.0], 0.0)]);
        let f = file_with("1 qid:1 oops\n");
        spec.path = Some(f.path().to_path_buf());
        assert!(matches!(load_rows(&spec), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn subsample_keeps_file_order() {
        let text: String = std::iter::once("a,y\n".to_string())
            .chain((0..100).map(|i| format!("{i},0\n")))
            .collect();
        let f = file_with(&text);
        let mut spec = spec_for(f.path());
        spec.subsample = Some(10);
        let raw = load_rows(&spec).unwrap();
        assert_eq!(raw.rows.len(), 10);
        assert!(raw.rows.windows(2).all(|w| w[0].0[0] < w[1].0[0]));
        assert_eq!(raw, load_rows(&spec).unwrap());
    }
}
