use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{BinarizedDataset, FeatureValue, RawDataset};
use crate::error::DataError;

/// Which CSV column holds the class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl From<&str> for LabelColumn {
    /// Plain integers select by position; anything else by header name.
    fn from(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(DataError::EmptyFile(path.to_path_buf()));
    }
    Ok(bytes)
}

/// Reads a headed CSV, inferring each feature column as numeric when every
/// value parses as a number and categorical otherwise. Missing values are
/// rejected.
pub fn load_csv(path: impl AsRef<Path>, label: impl Into<LabelColumn>) -> Result<RawDataset, DataError> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    parse_csv(&bytes, path, label.into())
}

fn parse_csv(bytes: &[u8], path: &Path, label: LabelColumn) -> Result<RawDataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(DataError::EmptyFile(path.to_path_buf()));
    }
    let label_idx = match &label {
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingLabelColumn(name.clone()))?,
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => return Err(DataError::MissingLabelColumn(i.to_string())),
        LabelColumn::Last => header.len() - 1,
    };
    if header.len() < 2 {
        return Err(DataError::NoFeatures);
    }

    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.byte_records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != header.len() {
            return Err(DataError::InconsistentArity {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let raw_label = std::str::from_utf8(&record[label_idx])
            .map_err(|_| DataError::UnparsableLabel { row })?
            .trim();
        if raw_label.is_empty() {
            return Err(DataError::MissingLabel { row });
        }
        labels.push(raw_label.to_string());
        let mut values = Vec::with_capacity(header.len() - 1);
        for (c, field) in record.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let text = String::from_utf8_lossy(field).trim().to_string();
            if text.is_empty() || text == "?" || text.eq_ignore_ascii_case("na") {
                return Err(DataError::MissingValue {
                    row,
                    column: header[c].clone(),
                });
            }
            values.push(text);
        }
        cells.push(values);
    }
    if cells.is_empty() {
        return Err(DataError::EmptyFile(path.to_path_buf()));
    }

    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let numeric: Vec<bool> = (0..feature_names.len())
        .map(|a| cells.iter().all(|row| row[a].parse::<f64>().is_ok_and(f64::is_finite)))
        .collect();
    let rows = cells
        .into_iter()
        .map(|row| {
            row.into_iter()
                .zip(&numeric)
                .map(|(text, &is_num)| {
                    if is_num {
                        FeatureValue::Numeric(text.parse().unwrap())
                    } else {
                        FeatureValue::Categorical(text)
                    }
                })
                .collect()
        })
        .collect();
    RawDataset::new(feature_names, rows, labels)
}

/// Writes 0/1 feature columns followed by a `label` column holding class names.
pub fn write_binarized_csv(data: &BinarizedDataset, out: impl Write) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    writer.write_record(&header)?;
    for (row, &k) in data.rows().iter().zip(data.labels()) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(data.class_names()[k].clone());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a CSV whose feature columns are all 0/1. Class order follows
/// [`RawDataset::class_names`], unless `classes` pins it.
pub fn read_binarized_csv(
    path: impl AsRef<Path>,
    label: impl Into<LabelColumn>,
    classes: Option<&[String]>,
) -> Result<BinarizedDataset, DataError> {
    let path = path.as_ref();
    let raw = load_csv(path, label)?;
    let class_names = match classes {
        Some(c) => c.to_vec(),
        None => raw.class_names(),
    };
    let mut x = Vec::with_capacity(raw.len());
    for (r, row) in raw.rows.iter().enumerate() {
        let bits = row
            .iter()
            .map(|v| match v {
                FeatureValue::Numeric(b) if *b == 0.0 || *b == 1.0 => Ok(*b as u8),
                _ => Err(DataError::Malformed(format!("row {} is not binary", r + 1))),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        x.push(bits);
    }
    let y = raw
        .labels
        .iter()
        .map(|l| {
            class_names
                .iter()
                .position(|c| c == l)
                .ok_or_else(|| DataError::Malformed(format!("unknown label {l:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = raw.feature_names.len();
    BinarizedDataset::from_parts(x, y, raw.feature_names, class_names, vec![false; n], classes.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(text: impl AsRef<[u8]>) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_ref()).unwrap();
        f
    }

    #[test]
    fn reads_numeric_columns() {
        let f = write_tmp("a,b,y\n1,2.5,0\n3,4,1\n5,6,0\n7,8,1\n");
        let raw = load_csv(f.path(), "y").unwrap();
        assert_eq!(raw.len(), 4);
        assert_eq!(raw.n_features(), 2);
        assert_eq!(raw.rows[0][1], FeatureValue::Numeric(2.5));
        assert_eq!(raw.class_names(), vec!["0", "1"]);
    }

    #[test]
    fn infers_categorical_and_quoting() {
        let f = write_tmp("color,size,y\n\"red, dark\",1,a\nblue,2,b\n");
        let raw = load_csv(f.path(), LabelColumn::Last).unwrap();
        assert_eq!(raw.rows[0][0], FeatureValue::Categorical("red, dark".into()));
        assert_eq!(raw.rows[1][1], FeatureValue::Numeric(2.0));
    }

    #[test]
    fn missing_label_is_reported_with_row() {
        let f = write_tmp("a,y\n1,0\n2,\n");
        let err = load_csv(f.path(), "y").unwrap_err();
        assert_eq!(err.to_string(), "label missing at row 2");
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "y"),
            Err(DataError::Io { .. })
        ));
        let empty = write_tmp("");
        assert!(matches!(load_csv(empty.path(), "y"), Err(DataError::EmptyFile(_))));
        let ragged = write_tmp("a,b,y\n1,2,0\n1,0\n");
        assert!(matches!(
            load_csv(ragged.path(), "y"),
            Err(DataError::InconsistentArity { row: 2, .. })
        ));
        let bad_label = write_tmp(b"a,y\n1,\xff\n");
        assert!(matches!(
            load_csv(bad_label.path(), "y"),
            Err(DataError::UnparsableLabel { row: 1 })
        ));
        let missing = write_tmp("a,y\n?,1\n");
        assert!(matches!(load_csv(missing.path(), "y"), Err(DataError::MissingValue { .. })));
        let no_col = write_tmp("a,b\n1,2\n");
        assert!(matches!(
            load_csv(no_col.path(), "y"),
            Err(DataError::MissingLabelColumn(_))
        ));
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let f = write_tmp("a,y\n1,10\n2,9\n3,2\n");
        let raw = load_csv(f.path(), "y").unwrap();
        assert_eq!(raw.class_names(), vec!["2", "9", "10"]);
    }
}
