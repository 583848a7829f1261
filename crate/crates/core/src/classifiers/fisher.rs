use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{cholesky_or_singular, floor_variances};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::{fix_signs, rank_tolerance, sym_eigen_desc, symmetrize, ScatterModel};

/// Smallest admissible `λ_min/λ_max` of a within-class estimate.
const CONDITION_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum WithinEstimate {
    /// Pooled within-class covariance `W`.
    Pooled,
    /// `diag(W)`, with zero variances floored as in diagonal LDA.
    Diagonal,
    Custom(DMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WithinEstimateTag {
    PooledW,
    DiagonalDw,
    Custom,
}

/// Fisher discriminant directions `v_1..v_r` with `v_jᵀŴv_ℓ = δ_jℓ`, `r = rank(B)`.
#[derive(Debug, Clone)]
pub struct FisherDirections {
    /// `p×r`, ordered by decreasing generalized eigenvalue.
    pub directions: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub within_estimate: WithinEstimateTag,
    /// The within-class estimate `Ŵ` the directions are normalised against.
    pub within: DMatrix<f64>,
}

/// Solves `Bv = λŴv` for the dataset's scatter matrices.
pub fn fisher_directions(ds: &LabeledDataset, estimate: &WithinEstimate) -> Result<FisherDirections> {
    let scatter = ScatterModel::new(ds)?.scatter_matrices(1.0)?;
    let (within, tag) = match estimate {
        WithinEstimate::Pooled => (scatter.within, WithinEstimateTag::PooledW),
        WithinEstimate::Diagonal => {
            let mut d: Vec<f64> = scatter.within.diagonal().iter().copied().collect();
            if d.iter().all(|&v| v <= 0.0) {
                return Err(Error::SingularWithinEstimate);
            }
            floor_variances(&mut d);
            (DMatrix::from_diagonal(&d.into()), WithinEstimateTag::DiagonalDw)
        }
        WithinEstimate::Custom(m) => (m.clone(), WithinEstimateTag::Custom),
    };
    fisher_directions_from(&within, &scatter.between, tag)
}

/// Generalized symmetric eigenproblem `Bv = λŴv` via the Cholesky factor of `Ŵ`.
pub fn fisher_directions_from(
    within: &DMatrix<f64>,
    between: &DMatrix<f64>,
    tag: WithinEstimateTag,
) -> Result<FisherDirections> {
    let p = within.nrows();
    if within.shape() != (p, p) || between.shape() != (p, p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: between.nrows(),
        });
    }
    let (w_values, _) = sym_eigen_desc(within);
    let w_max = w_values.first().copied().unwrap_or(0.0);
    let w_min = w_values.last().copied().unwrap_or(0.0);
    if !(w_max > 0.0) || w_min <= CONDITION_FLOOR * w_max {
        return Err(Error::SingularWithinEstimate);
    }
    let l = cholesky_or_singular(symmetrize(within.clone()))?.l();

    let (b_values, _) = sym_eigen_desc(between);
    let b_tol = rank_tolerance(p, b_values.first().copied().unwrap_or(0.0));
    let rank = b_values.iter().filter(|&&v| v > b_tol && v > 0.0).count();

    // C = L⁻¹ B L⁻ᵀ
    let lb = l.solve_lower_triangular(between).expect("positive diagonal");
    let c = l.solve_lower_triangular(&lb.transpose()).expect("positive diagonal");
    let (values, vectors) = sym_eigen_desc(&symmetrize(c));
    let top = vectors.columns(0, rank).into_owned();
    let mut directions = l.transpose().solve_upper_triangular(&top).expect("positive diagonal");
    fix_signs(&mut directions);
    Ok(FisherDirections {
        directions,
        eigenvalues: values[..rank].to_vec(),
        within_estimate: tag,
        within: within.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d0_diagonal_direction_is_e2() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
        let ds = LabeledDataset::new(x, vec![1, 1, 2, 2]).unwrap();
        let f = fisher_directions(&ds, &WithinEstimate::Diagonal).unwrap();
        assert_eq!(f.directions.ncols(), 1);
        let v = f.directions.column(0);
        assert!(v[0].abs() < 1e-12 * v[1].abs());
        assert!(matches!(
            fisher_directions(&ds, &WithinEstimate::Pooled),
            Err(Error::SingularWithinEstimate)
        ));
    }

    #[test]
    fn identity_within_gives_eigenvectors_of_between() {
        let b = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0]);
        let f = fisher_directions_from(&DMatrix::identity(3, 3), &b, WithinEstimateTag::Custom).unwrap();
        assert_eq!(f.eigenvalues.len(), 2);
        assert!((f.eigenvalues[0] - 5.0).abs() < 1e-12);
        assert!((f.directions[(2, 0)] - 1.0).abs() < 1e-12);
        assert!((f.directions[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn directions_are_within_orthonormal() {
        let w = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 3.0]);
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 1.0, -1.0, 2.0]);
        let b = &m * m.transpose();
        let f = fisher_directions_from(&w, &b, WithinEstimateTag::Custom).unwrap();
        let g = f.directions.tr_mul(&(&w * &f.directions));
        assert!((g - DMatrix::identity(2, 2)).abs().max() < 1e-10);
    }
}
