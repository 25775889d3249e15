use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, SampleRecord, SyntheticOracleConfig};

/// Sidecar describing how a data file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub format: String,
    pub count: usize,
    pub dim: usize,
    pub source: String,
    pub oracle: Option<SyntheticOracleConfig>,
}

impl DatasetMetadata {
    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        let mut f = File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

fn header(dim: usize) -> Vec<String> {
    (1..=dim)
        .map(|i| format!("x{i}"))
        .chain(["f1", "f2", "f3"].map(String::from))
        .collect()
}

/// Writes records with header `x1..x{dim},f1,f2,f3`. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv(path: &Path, records: &[SampleRecord]) -> Result<(), DatasetError> {
    let dim = records.first().map_or(crate::LAYOUT_DIM, |r| r.x.len());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(dim))?;
    for r in records {
        if r.x.len() != dim {
            return Err(DatasetError::InvalidArgument(
                "records have differing dimensions".into(),
            ));
        }
        let row = r.x.iter().chain([&r.f1, &r.f2, &r.f3]).map(|v| v.to_string());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a 36-dimensional layout data set.
pub fn load_csv(path: &Path) -> Result<Vec<SampleRecord>, DatasetError> {
    load_csv_dim(path, crate::LAYOUT_DIM)
}

/// Loads a data set with `dim` design columns. Extra columns are ignored.
pub fn load_csv_dim(path: &Path, dim: usize) -> Result<Vec<SampleRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(DatasetError::Empty);
    }
    let wanted = header(dim);
    let columns: Vec<usize> = wanted
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| DatasetError::MissingColumn(name.clone()))
        })
        .collect::<Result<_, _>>()?;

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 1;
        let mut values = Vec::with_capacity(columns.len());
        for (&c, name) in columns.iter().zip(&wanted) {
            let cell = row.get(c).unwrap_or("").trim();
            let v: f64 = cell
                .parse()
                .map_err(|e: std::num::ParseFloatError| DatasetError::Parse {
                    row: line,
                    column: name.clone(),
                    message: format!("{cell:?}: {e}"),
                })?;
            values.push(v);
        }
        let f3 = values.pop().unwrap_or_default();
        let f2 = values.pop().unwrap_or_default();
        let f1 = values.pop().unwrap_or_default();
        out.push(SampleRecord { x: values, f1, f2, f3 });
    }
    if out.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_dataset;
    use proptest::prelude::*;

    fn one_row(dim: usize) -> String {
        let mut s = header(dim).join(",");
        s.push('\n');
        let vals: Vec<String> = (0..dim + 3).map(|i| format!("{}", i as f64 * 0.01)).collect();
        s.push_str(&vals.join(","));
        s.push('\n');
        s
    }

    #[test]
    fn loads_single_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, one_row(36)).unwrap();
        let rs = load_csv(&p).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].x.len(), 36);
        assert_eq!(rs[0].x[1], 0.01);
        assert_eq!(rs[0].f3, 0.38);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let text = one_row(36).replace(",f3", ",g3");
        std::fs::write(&p, text).unwrap();
        match load_csv(&p) {
            Err(DatasetError::MissingColumn(c)) => assert_eq!(c, "f3"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_cell_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let mut text = one_row(36);
        text.push_str(&one_row(36).lines().nth(1).unwrap().replacen("0.02", "abc", 1));
        text.push('\n');
        std::fs::write(&p, text).unwrap();
        match load_csv(&p) {
            Err(DatasetError::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "x3");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "").unwrap();
        assert!(load_csv(&p).is_err());
        std::fs::write(&p, header(36).join(",") + "\n").unwrap();
        assert!(matches!(load_csv(&p), Err(DatasetError::Empty)));
    }

    #[test]
    fn round_trip_generated_data() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let rs = gen_dataset(50, &SyntheticOracleConfig::default()).unwrap();
        write_csv(&p, &rs).unwrap();
        assert_eq!(load_csv(&p).unwrap(), rs);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_is_lossless(
            xs in proptest::collection::vec(proptest::collection::vec(-1e12f64..1e12, 4), 1..6),
            fs in proptest::collection::vec(proptest::array::uniform3(any::<f64>().prop_filter("finite", |v| v.is_finite())), 6),
        ) {
            let rs: Vec<SampleRecord> = xs
                .into_iter()
                .zip(fs)
                .map(|(x, f)| SampleRecord { x, f1: f[0], f2: f[1], f3: f[2] })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("d.csv");
            write_csv(&p, &rs).unwrap();
            let back = load_csv_dim(&p, 4).unwrap();
            prop_assert_eq!(back, rs);
        }
    }
}
