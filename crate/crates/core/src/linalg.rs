//! Dense kernels: centering, class statistics, scatter matrices and the
//! small-side eigendecomposition of `T_γ`.
//!
//! `T_γ = W + γB` factors as `n⁻¹ A_γᵀ A_γ`, where the first `n` rows of `A_γ` are
//! the within-class deviations `X_i − μ̂_{Y_i}` and the last `K` rows are
//! `(γ n_k)^{1/2} μ̂_k`. Eigenvectors of the `(n+K)×(n+K)` Gram matrix `A_γ A_γᵀ`
//! map to eigenvectors of `T_γ` through `A_γᵀ`, so the top principal directions
//! cost `O((n+K)² p)` instead of `O(p³)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::LabeledDataset;
use crate::error::{invalid, Error, Result};

/// Largest `p` for which `p×p` matrices are materialized.
pub const DENSE_GUARD: usize = 2000;

/// Weight of the between-class scatter in `T_γ`.
///
/// `Infinite` is the limit in which only the between-class scatter matters; the
/// principal directions are then an orthonormal basis of the centroid span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Finite(f64),
    Infinite,
}

impl Gamma {
    pub fn finite(self) -> Option<f64> {
        match self {
            Gamma::Finite(g) => Some(g),
            Gamma::Infinite => None,
        }
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            Gamma::Finite(g) if !(g.is_finite() && g > 0.0) => {
                invalid(format!("gamma must be positive and finite, got {g}"))
            }
            other => Ok(other),
        }
    }

    /// Total order used for tie-breaking: finite values ascending, `Infinite` last.
    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (Gamma::Finite(a), Gamma::Finite(b)) => a.total_cmp(b),
            (Gamma::Finite(_), Gamma::Infinite) => Ordering::Less,
            (Gamma::Infinite, Gamma::Finite(_)) => Ordering::Greater,
            (Gamma::Infinite, Gamma::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Finite(g) => write!(f, "{g}"),
            Gamma::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Gamma::Infinite);
        }
        let g: f64 = s
            .parse()
            .map_err(|_| Error::InvalidInput(format!("cannot parse gamma '{s}'")))?;
        if g.is_infinite() && g > 0.0 {
            return Ok(Gamma::Infinite);
        }
        Gamma::Finite(g).validate()
    }
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Gamma::Finite(g) => serializer.serialize_f64(*g),
            Gamma::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(g) => Gamma::Finite(g).validate().map_err(serde::de::Error::custom),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Column-centers `raw`, returning the centered matrix and the column means.
pub fn center_columns(raw: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if raw.nrows() == 0 || raw.ncols() == 0 {
        return invalid("cannot center an empty matrix");
    }
    let n = raw.nrows() as f64;
    let mean = DVector::from_iterator(raw.ncols(), raw.column_iter().map(|c| c.sum() / n));
    let mut centered = raw.clone();
    for (mut col, m) in centered.column_iter_mut().zip(mean.iter()) {
        col.add_scalar_mut(-m);
    }
    Ok((centered, mean))
}

/// Per-class means (K×p) and class counts of `ds` as given (no re-centering).
pub fn class_statistics(ds: &LabeledDataset) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let x = ds.data();
    let mut centroids = DMatrix::zeros(ds.num_classes(), ds.p());
    for (k, rows) in ds.class_index().iter().enumerate() {
        if rows.is_empty() {
            return invalid(format!("class {} has no members", k + 1));
        }
        let mut acc = centroids.row_mut(k);
        for &i in rows {
            acc += x.row(i);
        }
        acc /= rows.len() as f64;
    }
    Ok((centroids, ds.class_counts()))
}

/// `W`, `B` and `T_γ = W + γB`.
#[derive(Debug, Clone)]
pub struct ScatterMatrices {
    pub within: DMatrix<f64>,
    pub between: DMatrix<f64>,
    pub total: DMatrix<f64>,
}

/// Centered summary of a labeled dataset: overall mean, centered rows, class
/// centroids of the centered rows and class counts.
#[derive(Debug, Clone)]
pub struct ScatterModel {
    overall_mean: DVector<f64>,
    centered: LabeledDataset,
    centroids: DMatrix<f64>,
    counts: Vec<usize>,
}

impl ScatterModel {
    pub fn new(ds: &LabeledDataset) -> Result<Self> {
        let (centered, overall_mean) = center_columns(ds.data())?;
        let centered = ds.with_data(centered)?;
        let (centroids, counts) = class_statistics(&centered)?;
        Ok(Self {
            overall_mean,
            centered,
            centroids,
            counts,
        })
    }

    pub fn overall_mean(&self) -> &DVector<f64> {
        &self.overall_mean
    }

    pub fn centered(&self) -> &LabeledDataset {
        &self.centered
    }

    /// Class centroids of the centered data, one row per class.
    pub fn centroids(&self) -> &DMatrix<f64> {
        &self.centroids
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.centered.n()
    }

    pub fn p(&self) -> usize {
        self.centered.p()
    }

    /// Rows `X_i − μ̂_{Y_i}`.
    pub fn deviations(&self) -> DMatrix<f64> {
        let mut dev = self.centered.data().clone();
        for i in 0..dev.nrows() {
            let k = self.centered.class_of(i);
            let mut row = dev.row_mut(i);
            row -= self.centroids.row(k);
        }
        dev
    }

    /// Rows `n_k^{1/2} μ̂_k`, so that `n⁻¹ MᵀM = B`.
    fn weighted_centroids(&self, weight: f64) -> DMatrix<f64> {
        let mut m = self.centroids.clone();
        for (k, mut row) in m.row_iter_mut().enumerate() {
            row *= (weight * self.counts[k] as f64).sqrt();
        }
        m
    }

    /// The `(n+K)×p` factor with `n⁻¹ A_γᵀ A_γ = T_γ`.
    pub fn a_gamma(&self, gamma: f64) -> Result<DMatrix<f64>> {
        Gamma::Finite(gamma).validate()?;
        let (n, p, k) = (self.n(), self.p(), self.counts.len());
        let mut a = DMatrix::zeros(n + k, p);
        a.rows_mut(0, n).copy_from(&self.deviations());
        a.rows_mut(n, k).copy_from(&self.weighted_centroids(gamma));
        Ok(a)
    }

    /// Explicit `W`, `B`, `T_γ`. Only for `p ≤ DENSE_GUARD`.
    pub fn scatter_matrices(&self, gamma: f64) -> Result<ScatterMatrices> {
        Gamma::Finite(gamma).validate()?;
        let p = self.p();
        if p > DENSE_GUARD {
            return Err(Error::DimensionGuard {
                p,
                limit: DENSE_GUARD,
            });
        }
        let n = self.n() as f64;
        let dev = self.deviations();
        let within = symmetrize(dev.tr_mul(&dev) / n);
        let m = self.weighted_centroids(1.0);
        let between = symmetrize(m.tr_mul(&m) / n);
        let total = &within + &between * gamma;
        Ok(ScatterMatrices {
            within,
            between,
            total,
        })
    }

    /// Leading `q` eigenvectors of `T_γ` through the Gram-matrix path.
    ///
    /// For `Gamma::Infinite` the basis spans the centroids, ordered by the
    /// eigenvalues of `B` (which are the reported eigenvalues).
    pub fn top_principal_directions(&self, gamma: Gamma, q: usize) -> Result<ProjectionBasis> {
        let gamma = gamma.validate()?;
        let max_q = self.p().min(self.n() + self.counts.len());
        if q == 0 || q > max_q {
            return invalid(format!("q = {q} must lie in 1..={max_q}"));
        }
        let factor = match gamma {
            Gamma::Finite(g) => self.a_gamma(g)?,
            Gamma::Infinite => self.weighted_centroids(1.0),
        };
        let (eigenvalues, directions) = gram_directions(&factor, 1.0 / self.n() as f64, q);
        Ok(ProjectionBasis {
            directions,
            eigenvalues,
            gamma,
            requested_q: q,
        })
    }
}

/// Top principal directions of `T_γ` for the (re-centered) dataset.
pub fn top_principal_directions(ds: &LabeledDataset, gamma: Gamma, q: usize) -> Result<ProjectionBasis> {
    ScatterModel::new(ds)?.top_principal_directions(gamma, q)
}

/// `W`, `B`, `T_γ` of the (re-centered) dataset.
pub fn scatter_matrices(ds: &LabeledDataset, gamma: f64) -> Result<ScatterMatrices> {
    ScatterModel::new(ds)?.scatter_matrices(gamma)
}

/// `A_γ` of the (re-centered) dataset.
pub fn build_a_gamma(ds: &LabeledDataset, gamma: f64) -> Result<DMatrix<f64>> {
    ScatterModel::new(ds)?.a_gamma(gamma)
}

/// Column-orthonormal `p×q` basis of leading eigenvectors of `T_γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBasis {
    #[serde(with = "crate::linalg::matrix_serde")]
    pub directions: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub gamma: Gamma,
    pub requested_q: usize,
}

impl ProjectionBasis {
    pub fn q(&self) -> usize {
        self.directions.ncols()
    }

    /// `true` when fewer directions than requested survived the rank cut.
    pub fn rank_deficient(&self) -> bool {
        self.q() < self.requested_q
    }

    /// First `q` directions (or all, if fewer).
    pub fn truncated(&self, q: usize) -> ProjectionBasis {
        let q_eff = q.min(self.q());
        ProjectionBasis {
            directions: self.directions.columns(0, q_eff).into_owned(),
            eigenvalues: self.eigenvalues[..q_eff].to_vec(),
            gamma: self.gamma,
            requested_q: q,
        }
    }

    /// Projects rows of `x` (already centered) onto the basis.
    pub fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * &self.directions
    }
}

/// Eigenvalues below this are treated as zero.
pub fn rank_tolerance(dim: usize, lambda_max: f64) -> f64 {
    dim as f64 * f64::EPSILON * lambda_max.max(0.0)
}

/// Symmetric eigendecomposition with eigenvalues in descending order.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m.clone()));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Leading eigenpairs of `scale · AᵀA` computed from the small Gram matrix `AAᵀ`.
///
/// Returns at most `q` pairs; pairs below the rank tolerance are dropped.
pub fn gram_directions(a: &DMatrix<f64>, scale: f64, q: usize) -> (Vec<f64>, DMatrix<f64>) {
    let (rows, p) = a.shape();
    let gram = a * a.transpose();
    let (values, vectors) = sym_eigen_desc(&gram);
    let lambda_max = values.first().copied().unwrap_or(0.0);
    let tol = rank_tolerance(rows.max(p), lambda_max);
    let rank = values.iter().take_while(|&&v| v > tol && v > 0.0).count();
    let keep = q.min(rank);

    let mut directions = a.tr_mul(&vectors.columns(0, keep));
    for mut col in directions.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    fix_signs(&mut directions);
    let eigenvalues = values[..keep].iter().map(|v| v * scale).collect();
    (eigenvalues, directions)
}

/// Flips each column so its entry of largest magnitude is positive.
pub fn fix_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0_f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Orthonormal basis of the column span of `m`, via SVD with a relative rank cut.
pub fn orthonormal_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * smax && svd.singular_values[i] > 0.0)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Principal angles (radians, ascending) between the column spans of two
/// column-orthonormal matrices.
///
/// Cosines come from the singular values of `aᵀb`, sines from those of
/// `(I − aaᵀ)b`; small angles use the sine so they stay accurate near zero.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Vec::new();
    }
    let (a, b) = if b.ncols() <= a.ncols() { (a, b) } else { (b, a) };
    let prod = a.tr_mul(b);
    let mut cosines: Vec<f64> = prod.singular_values().iter().map(|s| s.clamp(0.0, 1.0)).collect();
    cosines.sort_by(|x, y| y.total_cmp(x));
    let residual = b - a * &prod;
    let mut sines: Vec<f64> = residual.singular_values().iter().map(|s| s.clamp(0.0, 1.0)).collect();
    sines.sort_by(f64::total_cmp);
    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if c * c < 0.5 { c.acos() } else { s.asin() })
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Largest principal angle; `π/2` when the dimensions differ.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    principal_angles(a, b).last().copied().unwrap_or(0.0)
}

/// Row-major `{rows, cols, data}` encoding for matrices in JSON documents.
pub mod matrix_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct RowMajor {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let data = m.transpose().as_slice().to_vec();
        RowMajor {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let r = RowMajor::deserialize(d)?;
        if r.data.len() != r.rows * r.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix data has {} entries, expected {}x{}",
                r.data.len(),
                r.rows,
                r.cols
            )));
        }
        Ok(DMatrix::from_row_slice(r.rows, r.cols, &r.data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d0() -> LabeledDataset {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
        LabeledDataset::new(x, vec![1, 1, 2, 2]).unwrap()
    }

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        let diff = (a - b).abs().max();
        assert!(diff <= tol, "max diff {diff}\n{a}\n{b}");
    }

    #[test]
    fn centering_hand_example() {
        let (c, mean) = center_columns(d0().data()).unwrap();
        let expected = DMatrix::from_row_slice(4, 2, &[-1.0, -1.0, 1.0, -1.0, -1.0, 1.0, 1.0, 1.0]);
        assert_close(&c, &expected, 0.0);
        assert_eq!(mean.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn centering_identity_and_single_row() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, -1.0, 3.0]);
        let (c, mean) = center_columns(&x).unwrap();
        assert_eq!(c, x);
        assert_eq!(mean.as_slice(), &[0.0, 0.0]);

        let r = DMatrix::from_row_slice(1, 3, &[4.0, 5.0, 6.0]);
        let (c, mean) = center_columns(&r).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
        assert_eq!(mean.as_slice(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn centering_rejects_empty() {
        assert!(center_columns(&DMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn class_statistics_hand_example() {
        let sm = ScatterModel::new(&d0()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.0, 1.0]);
        assert_close(sm.centroids(), &expected, 0.0);
        assert_eq!(sm.counts(), &[2, 2]);
    }

    #[test]
    fn class_statistics_one_point_per_class() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 2.0, 0.0, -2.0]);
        let ds = LabeledDataset::new(x.clone(), vec![1, 2, 3]).unwrap();
        let (c, counts) = class_statistics(&ds).unwrap();
        assert_eq!(c, x);
        assert_eq!(counts, vec![1, 1, 1]);
    }

    #[test]
    fn identical_rows_have_zero_centroids() {
        let x = DMatrix::from_element(4, 3, 2.5);
        let sm = ScatterModel::new(&LabeledDataset::new(x, vec![1, 2, 1, 2]).unwrap()).unwrap();
        assert!(sm.centroids().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scatter_hand_example() {
        let s = scatter_matrices(&d0(), 1.0).unwrap();
        assert_close(&s.within, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), 1e-15);
        assert_close(&s.between, &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]), 1e-15);
        assert_close(&s.total, &DMatrix::identity(2, 2), 1e-15);
        let s4 = scatter_matrices(&d0(), 4.0).unwrap();
        assert_close(&s4.total, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]), 1e-15);
    }

    #[test]
    fn scatter_single_class_has_no_between() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 5.0, -1.0, 1.0]);
        let ds = LabeledDataset::new(x, vec![1, 1, 1]).unwrap();
        for g in [0.5, 3.0] {
            let s = scatter_matrices(&ds, g).unwrap();
            assert!(s.between.abs().max() < 1e-15);
            assert_close(&s.total, &s.within, 1e-15);
        }
        let a = build_a_gamma(&ds, 2.0).unwrap();
        assert!(a.row(3).iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn scatter_errors() {
        assert!(matches!(scatter_matrices(&d0(), 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(scatter_matrices(&d0(), -1.0), Err(Error::InvalidInput(_))));
        let x = DMatrix::zeros(3, DENSE_GUARD + 1);
        let ds = LabeledDataset::new(x, vec![1, 2, 2]).unwrap();
        assert!(matches!(scatter_matrices(&ds, 1.0), Err(Error::DimensionGuard { .. })));
    }

    #[test]
    fn a_gamma_hand_example() {
        let r2 = 2f64.sqrt();
        let a = build_a_gamma(&d0(), 1.0).unwrap();
        let expected = DMatrix::from_row_slice(
            6,
            2,
            &[-1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, -r2, 0.0, r2],
        );
        assert_close(&a, &expected, 1e-15);
        assert_close(&(a.tr_mul(&a) / 4.0), &DMatrix::identity(2, 2), 1e-15);

        let a4 = build_a_gamma(&d0(), 4.0).unwrap();
        assert!((a4[(4, 1)] + 2.0 * r2).abs() < 1e-15);
        assert!((a4[(5, 1)] - 2.0 * r2).abs() < 1e-15);
        assert_close(
            &(a4.tr_mul(&a4) / 4.0),
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]),
            1e-14,
        );
        assert!(build_a_gamma(&d0(), f64::NAN).is_err());
        assert!(build_a_gamma(&d0(), f64::INFINITY).is_err());
    }

    #[test]
    fn top_direction_hand_examples() {
        let b = top_principal_directions(&d0(), Gamma::Finite(4.0), 1).unwrap();
        assert!((b.eigenvalues[0] - 4.0).abs() < 1e-12);
        assert!((b.directions[(0, 0)]).abs() < 1e-12);
        assert!((b.directions[(1, 0)] - 1.0).abs() < 1e-12);

        let b1 = top_principal_directions(&d0(), Gamma::Finite(1.0), 2).unwrap();
        assert!((b1.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((b1.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert_close(&b1.directions.tr_mul(&b1.directions), &DMatrix::identity(2, 2), 1e-12);
    }

    #[test]
    fn infinite_gamma_spans_centroids() {
        let b = top_principal_directions(&d0(), Gamma::Infinite, 2).unwrap();
        assert!(b.rank_deficient());
        assert_eq!(b.q(), 1);
        assert!((b.directions[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((b.eigenvalues[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_out_of_range_is_rejected() {
        assert!(top_principal_directions(&d0(), Gamma::Finite(1.0), 0).is_err());
        assert!(top_principal_directions(&d0(), Gamma::Finite(1.0), 3).is_err());
    }

    #[test]
    fn gamma_parse_and_serde() {
        assert_eq!("inf".parse::<Gamma>().unwrap(), Gamma::Infinite);
        assert_eq!("0.25".parse::<Gamma>().unwrap(), Gamma::Finite(0.25));
        assert!("-1".parse::<Gamma>().is_err());
        assert!("abc".parse::<Gamma>().is_err());
        let json = serde_json::to_string(&vec![Gamma::Finite(2.0), Gamma::Infinite]).unwrap();
        assert_eq!(json, r#"[2.0,"inf"]"#);
        let back: Vec<Gamma> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Gamma::Finite(2.0), Gamma::Infinite]);
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let mut m = DMatrix::from_row_slice(3, 2, &[0.1, 0.5, -0.9, -0.2, 0.3, -0.1]);
        fix_signs(&mut m);
        assert!(m[(1, 0)] > 0.0);
        assert!(m[(0, 1)] > 0.0);
    }

    #[test]
    fn principal_angles_of_known_planes() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let t = 0.3f64;
        let b = DMatrix::from_row_slice(3, 1, &[t.cos(), t.sin(), 0.0]);
        let angles = principal_angles(&a, &b);
        assert!((angles[0] - t).abs() < 1e-12);
    }
}
