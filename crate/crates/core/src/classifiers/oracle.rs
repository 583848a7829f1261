use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cholesky_or_singular;
use crate::error::{invalid, Result};
use crate::linalg::matrix_serde;

/// Structure of the true within-class covariance `Σ_w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WithinStructure {
    Identity,
    /// Unit diagonal, constant off-diagonal `rho`.
    CompoundSymmetry { rho: f64 },
    /// `base·I + Σ (values_i − base) ξ_i ξ_iᵀ` with orthonormal `ξ_i` (columns).
    Spiked {
        base: f64,
        values: Vec<f64>,
        #[serde(with = "matrix_serde")]
        directions: DMatrix<f64>,
    },
    Dense {
        #[serde(with = "matrix_serde")]
        matrix: DMatrix<f64>,
    },
}

/// True class centroids (K×p) and within covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    #[serde(with = "matrix_serde")]
    pub centroids: DMatrix<f64>,
    pub within: WithinStructure,
}

impl OracleSpec {
    pub fn new(centroids: DMatrix<f64>, within: WithinStructure) -> Result<Self> {
        if centroids.nrows() < 2 {
            return invalid("the oracle needs at least two classes");
        }
        let p = centroids.ncols();
        match &within {
            WithinStructure::Identity => {}
            WithinStructure::CompoundSymmetry { rho } => {
                if !(0.0..1.0).contains(rho) {
                    return invalid(format!("compound symmetry needs 0 <= rho < 1, got {rho}"));
                }
            }
            WithinStructure::Spiked {
                base,
                values,
                directions,
            } => {
                if !(*base > 0.0) || values.iter().any(|v| !(*v > 0.0)) {
                    return invalid("spiked covariance needs positive eigenvalues");
                }
                if directions.shape() != (p, values.len()) {
                    return invalid("spike directions must be p×s");
                }
            }
            WithinStructure::Dense { matrix } => {
                if matrix.shape() != (p, p) {
                    return invalid("dense covariance must be p×p");
                }
                cholesky_or_singular(matrix.clone())?;
            }
        }
        Ok(Self { centroids, within })
    }

    pub fn p(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.centroids.nrows()
    }

    /// Dense `Σ_w`.
    pub fn within_matrix(&self) -> DMatrix<f64> {
        let p = self.p();
        match &self.within {
            WithinStructure::Identity => DMatrix::identity(p, p),
            WithinStructure::CompoundSymmetry { rho } => {
                DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { *rho })
            }
            WithinStructure::Spiked {
                base,
                values,
                directions,
            } => {
                let mut m = DMatrix::identity(p, p) * *base;
                for (i, v) in values.iter().enumerate() {
                    let xi = directions.column(i);
                    m += (xi * xi.transpose()) * (v - base);
                }
                m
            }
            WithinStructure::Dense { matrix } => matrix.clone(),
        }
    }
}

/// `argmin_k (x−μ_k)ᵀ Σ_w⁻¹ (x−μ_k)`, ties to the smallest class; labels in `1..=K`.
pub fn bayes_oracle_predict(spec: &OracleSpec, x: &DMatrix<f64>) -> Result<Vec<usize>> {
    if x.ncols() != spec.p() {
        return Err(crate::Error::DimensionMismatch {
            expected: spec.p(),
            found: x.ncols(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("oracle input contains non-finite values");
    }
    let p = spec.p() as f64;
    let dense_factor = match &spec.within {
        WithinStructure::Dense { matrix } => Some(cholesky_or_singular(matrix.clone())?),
        _ => None,
    };
    let distance = |v: DVector<f64>| -> f64 {
        match &spec.within {
            WithinStructure::Identity => v.norm_squared(),
            WithinStructure::CompoundSymmetry { rho } => {
                // Sherman–Morrison for (1−ρ)I + ρ11ᵀ
                let s = v.sum();
                (v.norm_squared() - rho / (1.0 - rho + p * rho) * s * s) / (1.0 - rho)
            }
            WithinStructure::Spiked {
                base,
                values,
                directions,
            } => {
                let proj = directions.tr_mul(&v);
                let correction: f64 = values
                    .iter()
                    .zip(proj.iter())
                    .map(|(l, c)| (l - base) / (base * l) * c * c)
                    .sum();
                v.norm_squared() / base - correction
            }
            WithinStructure::Dense { .. } => {
                let chol = dense_factor.as_ref().expect("factor computed above");
                let w = chol.l().solve_lower_triangular(&v).expect("positive diagonal");
                w.norm_squared()
            }
        }
    };
    let labels = x
        .row_iter()
        .map(|row| {
            let mut best = (0, f64::INFINITY);
            for (k, mu) in spec.centroids.row_iter().enumerate() {
                let d = distance((row - mu).transpose());
                if d < best.1 {
                    best = (k, d);
                }
            }
            best.0 + 1
        })
        .collect();
    Ok(labels)
}
