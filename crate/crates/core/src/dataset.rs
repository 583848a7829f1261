use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Observation matrix (rows are observations) with class labels `1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    data: DMatrix<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    class_index: Vec<Vec<usize>>,
}

impl LabeledDataset {
    /// Builds a dataset. Labels must lie in `1..=K` with every class present,
    /// where `K` is the largest label.
    pub fn new(data: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        let num_classes = labels.iter().copied().max().unwrap_or(0);
        Self::with_classes(data, labels, num_classes)
    }

    /// Builds a dataset with an explicit class count `K`.
    pub fn with_classes(data: DMatrix<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return invalid("dataset must have at least one row and one column");
        }
        if labels.len() != data.nrows() {
            return invalid(format!(
                "{} labels for {} observations",
                labels.len(),
                data.nrows()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("dataset contains non-finite values");
        }
        let mut class_index = vec![Vec::new(); num_classes];
        for (i, &label) in labels.iter().enumerate() {
            if label == 0 || label > num_classes {
                return invalid(format!("label {label} at row {i} outside 1..={num_classes}"));
            }
            class_index[label - 1].push(i);
        }
        if let Some(k) = class_index.iter().position(Vec::is_empty) {
            return invalid(format!("class {} has no members", k + 1));
        }
        Ok(Self {
            data,
            labels,
            num_classes,
            class_index,
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Zero-based class of row `i`.
    pub fn class_of(&self, i: usize) -> usize {
        self.labels[i] - 1
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Row indices of each class, indexed by zero-based class.
    pub fn class_index(&self) -> &[Vec<usize>] {
        &self.class_index
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.class_index.iter().map(Vec::len).collect()
    }

    /// Rows selected by `rows`, keeping the class count of the parent.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let data = self.data.select_rows(rows);
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Self::with_classes(data, labels, self.num_classes)
    }

    /// Same labels, new feature matrix.
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        Self::with_classes(data, self.labels.clone(), self.num_classes)
    }

    pub fn into_parts(self) -> (DMatrix<f64>, Vec<usize>) {
        (self.data, self.labels)
    }
}
