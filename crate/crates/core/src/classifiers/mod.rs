//! SPCALDA and the reduced-rank LDA family it generalises.
//!
//! Every fitted classifier is a [`ReducedLdaModel`]: a centering vector, an
//! optional projection basis (absent for full-space methods), and a Gaussian LDA
//! in the projected coordinates.

mod fisher;
mod oracle;
mod reduced;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{invalid, Error, Result};
use crate::linalg::{Gamma, ProjectionBasis, ScatterModel, DENSE_GUARD};

pub use fisher::{fisher_directions, fisher_directions_from, FisherDirections, WithinEstimate};
pub use oracle::{bayes_oracle_predict, OracleSpec, WithinStructure};
pub use reduced::{
    argmax_rows, class_means, fit_reduced_lda, log_priors, pooled_within, ridge_for, Prediction, PriorsMode,
    ReducedLda, WithinMetric, RIDGE_SCALE, SINGULAR_RATIO,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Relative floor for diagonal within-class variances.
pub const DIAGONAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Spcalda,
    Pcalda,
    Srrlda,
    Ir,
    Lda,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spcalda => "SPCALDA",
            Method::Pcalda => "PCALDA",
            Method::Srrlda => "SRRLDA",
            Method::Ir => "IR",
            Method::Lda => "LDA",
            Method::Oracle => "ORACLE",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SPCALDA" => Ok(Method::Spcalda),
            "PCALDA" => Ok(Method::Pcalda),
            "SRRLDA" => Ok(Method::Srrlda),
            "IR" | "DLDA" => Ok(Method::Ir),
            "LDA" => Ok(Method::Lda),
            "ORACLE" => Ok(Method::Oracle),
            other => invalid(format!("unknown method '{other}'")),
        }
    }
}

/// A fitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedLdaModel {
    pub format_version: u32,
    #[serde(rename = "method_tag")]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Gamma>,
    pub centering: Vec<f64>,
    /// `None` means the identity (full-space classifier).
    pub basis: Option<ProjectionBasis>,
    #[serde(flatten)]
    pub lda: ReducedLda,
    /// Set when no discriminating direction exists; predictions fall back to priors.
    #[serde(default)]
    pub degenerate: bool,
    /// Human-readable notes about rank truncation, ridges and fallbacks.
    #[serde(default)]
    pub notes: Vec<String>,
}

impl ReducedLdaModel {
    pub fn p(&self) -> usize {
        self.centering.len()
    }

    pub fn num_classes(&self) -> usize {
        self.lda.num_classes()
    }

    /// Centers and projects raw rows into the model's reduced space.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: x.ncols(),
            });
        }
        let mut centered = x.clone();
        for (mut col, m) in centered.column_iter_mut().zip(&self.centering) {
            col.add_scalar_mut(-m);
        }
        Ok(match &self.basis {
            Some(b) => b.project(&centered),
            None => centered,
        })
    }

    /// Labels in `1..=K` and the `m×K` score matrix.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Prediction> {
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("prediction input contains non-finite values");
        }
        let z = self.transform(x)?;
        if self.degenerate || self.lda.dim() == 0 {
            let priors = DVector::from_vec(self.lda.log_priors.clone());
            let scores = DMatrix::from_fn(x.nrows(), self.num_classes(), |_, c| priors[c]);
            return Ok(Prediction {
                labels: argmax_rows(&scores),
                scores,
            });
        }
        Ok(self.lda.predict(&z))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return invalid(format!("unsupported model format version {}", model.format_version));
        }
        Ok(model)
    }
}

fn reduced_model(
    method: Method,
    gamma: Option<Gamma>,
    scatter: &ScatterModel,
    basis: ProjectionBasis,
    priors: PriorsMode,
) -> Result<ReducedLdaModel> {
    let mut notes = Vec::new();
    if basis.rank_deficient() {
        notes.push(format!(
            "rank deficiency: requested q = {}, numerical rank allows {}",
            basis.requested_q,
            basis.q()
        ));
    }
    let ds = scatter.centered();
    let z = basis.project(ds.data());
    let lda = fit_reduced_lda(&z, ds.labels(), ds.num_classes(), priors)?;
    if lda.ridge_used > 0.0 {
        notes.push(format!("ridge {:e} added to the reduced within covariance", lda.ridge_used));
    }
    Ok(ReducedLdaModel {
        format_version: MODEL_FORMAT_VERSION,
        method,
        gamma,
        centering: scatter.overall_mean().as_slice().to_vec(),
        basis: Some(basis),
        lda,
        degenerate: false,
        notes,
    })
}

/// Projects onto the top `q` principal directions of `T_γ`, then applies LDA.
pub fn fit_spcalda(ds: &LabeledDataset, gamma: Gamma, q: usize, priors: PriorsMode) -> Result<ReducedLdaModel> {
    let scatter = ScatterModel::new(ds)?;
    let basis = scatter.top_principal_directions(gamma, q)?;
    if basis.q() == 0 {
        return invalid("T_gamma has numerical rank zero");
    }
    reduced_model(Method::Spcalda, Some(gamma), &scatter, basis, priors)
}

/// SPCALDA with `γ = 1`: LDA after ordinary PCA.
pub fn fit_pcalda(ds: &LabeledDataset, q: usize, priors: PriorsMode) -> Result<ReducedLdaModel> {
    let mut model = fit_spcalda(ds, Gamma::Finite(1.0), q, priors)?;
    model.method = Method::Pcalda;
    Ok(model)
}

/// Metric used by SRRLDA inside the centroid span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrrldaMetric {
    /// LDA on the projected data: pooled within covariance of the projections.
    #[default]
    Pooled,
    /// Nearest centroid by plain Euclidean distance in the span.
    Euclidean,
}

/// Simple reduced-rank LDA: project onto the span of the class centroids,
/// then LDA there with the pooled projected covariance.
///
/// This is exactly the `γ → ∞` limit of SPCALDA at `q = K − 1`.
pub fn fit_srrlda(ds: &LabeledDataset, priors: PriorsMode) -> Result<ReducedLdaModel> {
    fit_srrlda_with(ds, priors, SrrldaMetric::Pooled)
}

pub fn fit_srrlda_with(ds: &LabeledDataset, priors: PriorsMode, metric: SrrldaMetric) -> Result<ReducedLdaModel> {
    let k = ds.num_classes();
    if k < 2 {
        return invalid("SRRLDA needs at least two classes");
    }
    let scatter = ScatterModel::new(ds)?;
    let basis = scatter.top_principal_directions(Gamma::Infinite, (k - 1).min(ds.p()))?;
    let centered = scatter.centered();
    let degenerate = basis.q() == 0;
    if !degenerate && metric == SrrldaMetric::Pooled {
        return reduced_model(Method::Srrlda, Some(Gamma::Infinite), &scatter, basis, priors);
    }
    let reduced_centroids = basis.project(scatter.centroids());
    let mut notes = Vec::new();
    if degenerate {
        notes.push("all class centroids coincide; predicting the largest-prior class".to_string());
    }
    Ok(ReducedLdaModel {
        format_version: MODEL_FORMAT_VERSION,
        method: Method::Srrlda,
        gamma: Some(Gamma::Infinite),
        centering: scatter.overall_mean().as_slice().to_vec(),
        basis: Some(basis),
        lda: ReducedLda {
            reduced_centroids,
            within: WithinMetric::Euclidean,
            log_priors: log_priors(&centered.class_counts(), priors),
            ridge_used: 0.0,
        },
        degenerate,
        notes,
    })
}

/// Diagonal LDA (independence rule): full space, `diag(W)` as the metric.
///
/// Non-positive variances are floored at `1e-12 · max_j W_jj`.
pub fn fit_diagonal_lda(ds: &LabeledDataset, priors: PriorsMode) -> Result<ReducedLdaModel> {
    let scatter = ScatterModel::new(ds)?;
    let centered = scatter.centered();
    let dev = scatter.deviations();
    let n = ds.n() as f64;
    let mut variances: Vec<f64> = dev.column_iter().map(|c| c.norm_squared() / n).collect();
    let floored = floor_variances(&mut variances);
    let mut notes = Vec::new();
    if floored > 0 {
        notes.push(format!("{floored} feature(s) with zero within-class variance were ridged"));
    }
    Ok(ReducedLdaModel {
        format_version: MODEL_FORMAT_VERSION,
        method: Method::Ir,
        gamma: None,
        centering: scatter.overall_mean().as_slice().to_vec(),
        basis: None,
        lda: ReducedLda {
            reduced_centroids: scatter.centroids().clone(),
            within: WithinMetric::Diagonal {
                std_dev: variances.iter().map(|v| v.sqrt()).collect(),
            },
            log_priors: log_priors(&centered.class_counts(), priors),
            ridge_used: 0.0,
        },
        degenerate: false,
        notes,
    })
}

/// Floors non-positive entries at `1e-12 · max`; returns how many were changed.
pub(crate) fn floor_variances(variances: &mut [f64]) -> usize {
    let max = variances.iter().copied().fold(0.0, f64::max);
    let floor = if max > 0.0 { DIAGONAL_FLOOR * max } else { 1.0 };
    let mut changed = 0;
    for v in variances.iter_mut() {
        if *v < floor {
            *v = floor;
            changed += 1;
        }
    }
    changed
}

/// Standard LDA in the full feature space with the pooled `W` as metric.
pub fn fit_lda(ds: &LabeledDataset, priors: PriorsMode) -> Result<ReducedLdaModel> {
    if ds.p() > DENSE_GUARD {
        return Err(Error::DimensionGuard {
            p: ds.p(),
            limit: DENSE_GUARD,
        });
    }
    let scatter = ScatterModel::new(ds)?;
    let centered = scatter.centered();
    let lda = fit_reduced_lda(centered.data(), centered.labels(), ds.num_classes(), priors)?;
    let mut notes = Vec::new();
    if lda.ridge_used > 0.0 {
        notes.push(format!("ridge {:e} added to W", lda.ridge_used));
    }
    Ok(ReducedLdaModel {
        format_version: MODEL_FORMAT_VERSION,
        method: Method::Lda,
        gamma: None,
        centering: scatter.overall_mean().as_slice().to_vec(),
        basis: None,
        lda,
        degenerate: false,
        notes,
    })
}

/// LDA after projecting onto an arbitrary column-orthonormal basis.
pub fn fit_projected_lda(ds: &LabeledDataset, directions: DMatrix<f64>, priors: PriorsMode) -> Result<ReducedLdaModel> {
    if directions.nrows() != ds.p() {
        return Err(Error::DimensionMismatch {
            expected: ds.p(),
            found: directions.nrows(),
        });
    }
    let q = directions.ncols();
    let scatter = ScatterModel::new(ds)?;
    let basis = ProjectionBasis {
        directions,
        eigenvalues: vec![0.0; q],
        gamma: Gamma::Finite(1.0),
        requested_q: q,
    };
    let mut model = reduced_model(Method::Lda, None, &scatter, basis, priors)?;
    model.notes.push("custom projection basis".to_string());
    Ok(model)
}

pub fn predict(model: &ReducedLdaModel, x: &DMatrix<f64>) -> Result<Prediction> {
    model.predict(x)
}

/// Fraction of mismatches between predicted and true labels.
pub fn error_rate(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let wrong = predicted.iter().zip(truth).filter(|(a, b)| a != b).count();
    wrong as f64 / truth.len() as f64
}

pub(crate) fn cholesky_or_singular(m: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(m).ok_or(Error::SingularWithinEstimate)
}
