//! Standard LDA applied to already-projected data.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{matrix_serde, sym_eigen_desc, symmetrize};

/// Relative eigenvalue floor below which the within covariance counts as singular.
pub const SINGULAR_RATIO: f64 = 1e-10;
/// Ridge size relative to `trace(S)/q`.
pub const RIDGE_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorsMode {
    Equal,
    #[default]
    Empirical,
}

impl std::str::FromStr for PriorsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "equal" => Ok(PriorsMode::Equal),
            "empirical" => Ok(PriorsMode::Empirical),
            other => invalid(format!("unknown priors mode '{other}'")),
        }
    }
}

/// Metric used to compare a point with the class centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WithinMetric {
    /// Lower Cholesky factor `L` of the (ridged) within covariance.
    Cholesky {
        #[serde(with = "matrix_serde")]
        factor: DMatrix<f64>,
    },
    /// Per-coordinate standard deviations (diagonal covariance).
    Diagonal { std_dev: Vec<f64> },
    /// Plain Euclidean distance.
    Euclidean,
}

impl WithinMetric {
    /// Applies `L⁻¹` to every row of `z`.
    pub fn whiten_rows(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            WithinMetric::Cholesky { factor } => {
                let sol = factor
                    .solve_lower_triangular(&z.transpose())
                    .expect("Cholesky factor has a positive diagonal");
                sol.transpose()
            }
            WithinMetric::Diagonal { std_dev } => {
                let mut w = z.clone();
                for (mut col, s) in w.column_iter_mut().zip(std_dev) {
                    col /= *s;
                }
                w
            }
            WithinMetric::Euclidean => z.clone(),
        }
    }

    /// The factor `L` as a dense matrix of size `q`.
    pub fn factor(&self, q: usize) -> DMatrix<f64> {
        match self {
            WithinMetric::Cholesky { factor } => factor.clone(),
            WithinMetric::Diagonal { std_dev } => DMatrix::from_diagonal(&std_dev.clone().into()),
            WithinMetric::Euclidean => DMatrix::identity(q, q),
        }
    }
}

/// Labels and per-class scores for a batch of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Class labels in `1..=K`.
    pub labels: Vec<usize>,
    /// `m×K` discriminant scores.
    pub scores: DMatrix<f64>,
}

/// Gaussian LDA in a reduced space: centroids, a within metric and log priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedLda {
    #[serde(with = "matrix_serde")]
    pub reduced_centroids: DMatrix<f64>,
    pub within: WithinMetric,
    pub log_priors: Vec<f64>,
    pub ridge_used: f64,
}

pub fn log_priors(counts: &[usize], mode: PriorsMode) -> Vec<f64> {
    let k = counts.len() as f64;
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .map(|&c| match mode {
            PriorsMode::Equal => -(k.ln()),
            PriorsMode::Empirical => (c as f64 / n as f64).ln(),
        })
        .collect()
}

/// Per-class row means of `z` (labels in `1..=k`) and the class counts.
pub fn class_means(z: &DMatrix<f64>, labels: &[usize], k: usize) -> Result<(DMatrix<f64>, Vec<usize>)> {
    if labels.len() != z.nrows() {
        return invalid(format!("{} labels for {} rows", labels.len(), z.nrows()));
    }
    let mut means = DMatrix::zeros(k, z.ncols());
    let mut counts = vec![0usize; k];
    for (i, &y) in labels.iter().enumerate() {
        if y == 0 || y > k {
            return invalid(format!("label {y} outside 1..={k}"));
        }
        counts[y - 1] += 1;
        let mut row = means.row_mut(y - 1);
        row += z.row(i);
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return invalid(format!("class {} absent from the labels", c + 1));
    }
    for (mut row, &c) in means.row_iter_mut().zip(&counts) {
        row /= c as f64;
    }
    Ok((means, counts))
}

/// Pooled within-class covariance `n⁻¹ Σ (z_i − m_{y_i})(z_i − m_{y_i})ᵀ`.
pub fn pooled_within(z: &DMatrix<f64>, labels: &[usize], means: &DMatrix<f64>) -> DMatrix<f64> {
    let mut dev = z.clone();
    for (i, &y) in labels.iter().enumerate() {
        let mut row = dev.row_mut(i);
        row -= means.row(y - 1);
    }
    symmetrize(dev.tr_mul(&dev) / z.nrows() as f64)
}

/// Ridge `δ` added to `s` by the singular-covariance rule (0 when not needed).
pub fn ridge_for(s: &DMatrix<f64>, fallback_scale: f64) -> f64 {
    let q = s.nrows();
    let (values, _) = sym_eigen_desc(s);
    let lambda_max = values.first().copied().unwrap_or(0.0);
    let lambda_min = values.last().copied().unwrap_or(0.0);
    if lambda_max > 0.0 && lambda_min > SINGULAR_RATIO * lambda_max {
        return 0.0;
    }
    let trace = s.trace();
    let scale = if trace > 0.0 {
        trace
    } else if fallback_scale > 0.0 {
        fallback_scale
    } else {
        q as f64
    };
    RIDGE_SCALE * scale / q as f64
}

/// Fits LDA to projected data `z` (n×q) with labels in `1..=k`.
///
/// The within covariance `S` gets `δI` with `δ = 1e-8·trace(S)/q` whenever
/// `λ_min(S) ≤ 1e-10·λ_max(S)`. If `S` vanishes entirely the trace of the total
/// scatter of `z` stands in for `trace(S)`.
pub fn fit_reduced_lda(z: &DMatrix<f64>, labels: &[usize], k: usize, priors: PriorsMode) -> Result<ReducedLda> {
    if z.ncols() == 0 {
        return invalid("reduced dimension must be at least 1");
    }
    if k < 2 {
        return invalid("at least two classes are required");
    }
    let (means, counts) = class_means(z, labels, k)?;
    let s = pooled_within(z, labels, &means);
    let total_trace = z.iter().map(|v| v * v).sum::<f64>() / z.nrows() as f64;
    let ridge = ridge_for(&s, total_trace);
    let mut ridged = s;
    for i in 0..ridged.nrows() {
        ridged[(i, i)] += ridge;
    }
    let chol = Cholesky::new(ridged).ok_or(Error::SingularWithinEstimate)?;
    Ok(ReducedLda {
        reduced_centroids: means,
        within: WithinMetric::Cholesky { factor: chol.l() },
        log_priors: log_priors(&counts, priors),
        ridge_used: ridge,
    })
}

impl ReducedLda {
    pub fn num_classes(&self) -> usize {
        self.log_priors.len()
    }

    pub fn dim(&self) -> usize {
        self.reduced_centroids.ncols()
    }

    /// Scores `−½‖L⁻¹(z − m_k)‖² + log π_k` for rows of `z`.
    pub fn scores(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let wz = self.within.whiten_rows(z);
        let wc = self.within.whiten_rows(&self.reduced_centroids);
        let k = self.num_classes();
        DMatrix::from_fn(z.nrows(), k, |i, c| {
            let d2: f64 = wz
                .row(i)
                .iter()
                .zip(wc.row(c).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            -0.5 * d2 + self.log_priors[c]
        })
    }

    pub fn predict(&self, z: &DMatrix<f64>) -> Prediction {
        let scores = self.scores(z);
        Prediction {
            labels: argmax_rows(&scores),
            scores,
        }
    }
}

/// Row-wise argmax as a label in `1..=K`; ties go to the smallest index.
pub fn argmax_rows(scores: &DMatrix<f64>) -> Vec<usize> {
    scores
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best + 1
        })
        .collect()
}
