//! CSV ingestion and output, plus the on-disk model file.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use spcalda::{LabeledDataset, ReducedLdaModel};

use crate::error::CliError;

pub const MODEL_FILE_VERSION: u32 = 1;

/// A labelled CSV table: numeric features plus one label column.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvDataset {
    pub feature_names: Vec<String>,
    pub label_column: String,
    /// Original label text for class `k` at index `k - 1`, in first-appearance order.
    pub class_labels: Vec<String>,
    pub dataset: LabeledDataset,
}

impl CsvDataset {
    /// Fitting needs at least two classes with two rows each.
    pub fn require_fit_ready(&self) -> Result<(), CliError> {
        if self.class_labels.len() < 2 {
            return Err(CliError::Data("at least two classes are required for fitting".into()));
        }
        for (label, count) in self.class_labels.iter().zip(self.dataset.class_counts()) {
            if count < 2 {
                return Err(CliError::Data(format!("class {label:?} has {count} row(s); at least 2 are required")));
            }
        }
        Ok(())
    }
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<RawTable, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(1, 0, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // data row i sits on line i + 2 (after the header)
        let record = record.map_err(|e| CliError::parse(i + 2, 0, e.to_string()))?;
        if record.len() != header.len() {
            return Err(CliError::parse(
                i + 2,
                0,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, rows })
}

fn parse_cell(text: &str, line: usize, column: usize, name: &str) -> Result<f64, CliError> {
    if text.is_empty() {
        return Err(CliError::parse(line, column, format!("missing value in column {name:?}")));
    }
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::parse(line, column, format!("non-numeric value {text:?} in column {name:?}"))),
    }
}

fn numeric_matrix(table: &RawTable, columns: &[usize]) -> Result<DMatrix<f64>, CliError> {
    let mut data = DMatrix::zeros(table.rows.len(), columns.len());
    for (i, row) in table.rows.iter().enumerate() {
        for (j, &c) in columns.iter().enumerate() {
            data[(i, j)] = parse_cell(&row[c], i + 2, c + 1, &table.header[c])?;
        }
    }
    Ok(data)
}

/// Reads a CSV file with a header row; every column except `label_column`
/// is a numeric feature. Labels map to `1..=K` in order of first appearance.
///
/// Parse errors report 1-based line and column numbers.
pub fn load_csv(path: &Path, label_column: &str) -> Result<CsvDataset, CliError> {
    let table = read_table(path)?;
    let label_idx = table
        .header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| CliError::Config(format!("--label: column {label_column:?} not found in {}", path.display())))?;
    if table.rows.is_empty() {
        return Err(CliError::Data(format!("{} has no data rows", path.display())));
    }
    let feature_cols: Vec<usize> = (0..table.header.len()).filter(|&c| c != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(CliError::Data("no feature columns".into()));
    }
    let data = numeric_matrix(&table, &feature_cols)?;
    let mut class_labels: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let text = &row[label_idx];
        if text.is_empty() {
            return Err(CliError::parse(i + 2, label_idx + 1, "missing label"));
        }
        let k = match class_labels.iter().position(|l| l == text) {
            Some(k) => k,
            None => {
                class_labels.push(text.clone());
                class_labels.len() - 1
            }
        };
        labels.push(k + 1);
    }
    let dataset = LabeledDataset::with_classes(data, labels, class_labels.len())?;
    Ok(CsvDataset {
        feature_names: feature_cols.iter().map(|&c| table.header[c].clone()).collect(),
        label_column: label_column.to_string(),
        class_labels,
        dataset,
    })
}

/// Reads the named feature columns, in the given order; other columns are ignored.
pub fn load_features(path: &Path, feature_names: &[String]) -> Result<DMatrix<f64>, CliError> {
    let table = read_table(path)?;
    let columns = feature_names
        .iter()
        .map(|name| {
            table
                .header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::Data(format!("feature column {name:?} missing from {}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    numeric_matrix(&table, &columns)
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `x1..xp,label` rows.
pub fn write_dataset_csv(path: &Path, ds: &LabeledDataset) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut header: Vec<String> = (1..=ds.p()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(io_err)?;
    for (row, label) in ds.data().row_iter().zip(ds.labels()) {
        let mut fields: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        fields.push(label.to_string());
        w.write_record(&fields).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Fitted model plus the column and label metadata needed to score new files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub label_column: String,
    pub class_labels: Vec<String>,
    pub model: ReducedLdaModel,
}

impl ModelFile {
    pub fn new(data: &CsvDataset, model: ReducedLdaModel) -> Self {
        Self {
            format_version: MODEL_FILE_VERSION,
            feature_names: data.feature_names.clone(),
            label_column: data.label_column.clone(),
            class_labels: data.class_labels.clone(),
            model,
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Data(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let file: Self = serde_json::from_str(text).map_err(|e| CliError::Data(format!("invalid model file: {e}")))?;
        if file.format_version != MODEL_FILE_VERSION {
            return Err(CliError::Data(format!(
                "model file version {} is not supported (expected {MODEL_FILE_VERSION})",
                file.format_version
            )));
        }
        // re-validate the inner model version
        ReducedLdaModel::from_json(&serde_json::to_string(&file.model).map_err(|e| CliError::Data(e.to_string()))?)?;
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn loads_small_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "d.csv", "a,class,b\n0,x,0\n2,x,0\n0,y,2\n2,y,2\n");
        let d = load_csv(&path, "class").unwrap();
        assert_eq!((d.dataset.n(), d.dataset.p()), (4, 2));
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.dataset.labels(), &[1, 1, 2, 2]);
    }

    #[test]
    fn first_appearance_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "d.csv", "f,label\n1,b\n2,a\n3,b\n");
        let d = load_csv(&path, "label").unwrap();
        assert_eq!(d.dataset.labels(), &[1, 2, 1]);
        assert_eq!(d.class_labels, vec!["b", "a"]);
    }

    #[test]
    fn missing_value_names_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "d.csv", "f,g,label\n1,2,a\n3,,b\n");
        match load_csv(&path, "label") {
            Err(CliError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_and_unknown_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "d.csv", "f,label\nabc,a\n");
        assert!(matches!(load_csv(&path, "label"), Err(CliError::Parse { .. })));
        assert!(matches!(load_csv(&path, "class"), Err(CliError::Config(_))));
    }

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
