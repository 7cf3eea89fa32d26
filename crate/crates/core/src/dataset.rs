//! Instance files: a CSV header of feature names followed by 0/1 rows.
//! When a row has one column more than the model has features, the last
//! column is read as the class.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: expected {expected} or {} columns, found {found}", expected + 1)]
    Width { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {column}: {value:?} is not 0 or 1")]
    NotBinary { row: usize, column: usize, value: String },
    #[error("row {row} out of range ({rows} rows)")]
    NoSuchRow { row: usize, rows: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub point: Vec<bool>,
    pub class: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Row>,
}

fn bit(row: usize, column: usize, s: &str) -> Result<bool, DatasetError> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(DatasetError::NotBinary {
            row,
            column,
            value: other.to_string(),
        }),
    }
}

impl Dataset {
    /// Parses CSV text for a model with `num_features` features.
    pub fn parse(text: &str, num_features: usize) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let feature_names = reader
            .headers()?
            .iter()
            .take(num_features)
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let found = record.len();
            if found != num_features && found != num_features + 1 {
                return Err(DatasetError::Width {
                    row,
                    expected: num_features,
                    found,
                });
            }
            let point = record
                .iter()
                .take(num_features)
                .enumerate()
                .map(|(c, s)| bit(row, c, s))
                .collect::<Result<_, _>>()?;
            let class = match record.get(num_features) {
                Some(s) => Some(bit(row, num_features, s)?),
                None => None,
            };
            rows.push(Row { point, class });
        }
        Ok(Dataset { feature_names, rows })
    }

    pub fn load(path: &Path, num_features: usize) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(csv::Error::from)?;
        Self::parse(&text, num_features)
    }

    pub fn row(&self, index: usize) -> Result<&Row, DatasetError> {
        self.rows.get(index).ok_or(DatasetError::NoSuchRow {
            row: index,
            rows: self.rows.len(),
        })
    }
}
