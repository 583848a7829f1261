//! Numerical verifiers for the subspace identities behind reduced-rank LDA.
//!
//! Each verifier builds the relevant matrices densely and reports a violation
//! that is exactly zero in exact arithmetic when the identity holds. Subspace
//! violations are normalised by `‖β‖₂`, so they are invariant under a global
//! rescaling of the data.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::classifiers::{
    argmax_rows, fisher_directions, log_priors, PriorsMode, ReducedLda, WithinEstimate, WithinMetric,
};
use crate::dataset::LabeledDataset;
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    max_principal_angle, orthonormal_basis, principal_angles, rank_tolerance, sym_eigen_desc, symmetrize, Gamma,
    ScatterModel, DENSE_GUARD,
};
use crate::rng::{rng_from_seed, Rng};

/// Tolerance for algebraic identities at `p ≤ 200`.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Tolerance for subspace angles.
pub const ANGLE_TOL: f64 = 1e-6;
/// Negative controls must exceed this.
pub const POWER_THRESHOLD: f64 = 1e-3;
/// Minimum eigen-gap at the split index.
pub const MIN_SPLIT_GAP: f64 = 1e-10;
/// Relative subspace residual allowed when testing `β ∈ span(H)`.
pub const CONTAINMENT_TOL: f64 = 1e-8;

/// Prototype layout for a Gaussian-mixture class model.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureLayout {
    /// `R×p`; row `t` is a prototype mean.
    pub prototypes: DMatrix<f64>,
    /// Zero-based class owning each prototype.
    pub owner: Vec<usize>,
    /// Within-class mixing weights `π_kt` (sum to 1 per class).
    pub weights: Vec<f64>,
}

/// Population model with a spiked within-class covariance
/// `Σ_w = λ_p I + Σ_i (λ_i − λ_p) ξ_i ξ_iᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedModel {
    pub base: f64,
    pub spikes: Vec<f64>,
    /// `p×s`, orthonormal columns.
    pub spike_directions: DMatrix<f64>,
    /// `K×p`, with `Σ π_k μ_k = 0`.
    pub centroids: DMatrix<f64>,
    pub priors: Vec<f64>,
    pub mixture: Option<MixtureLayout>,
    /// Optional symmetric term added to `Σ_w`; used to build counterexamples.
    pub perturbation: Option<DMatrix<f64>>,
}

impl SpikedModel {
    pub fn new(
        base: f64,
        spikes: Vec<f64>,
        spike_directions: DMatrix<f64>,
        centroids: DMatrix<f64>,
        priors: Vec<f64>,
    ) -> Result<Self> {
        let p = centroids.ncols();
        if !(base > 0.0) || spikes.iter().any(|&l| !(l > base)) {
            return invalid("spike values must exceed the positive base value");
        }
        if spike_directions.shape() != (p, spikes.len()) {
            return invalid("spike directions must be p×s");
        }
        let gram = spike_directions.tr_mul(&spike_directions);
        if (gram - DMatrix::identity(spikes.len(), spikes.len())).abs().max() > 1e-10 {
            return invalid("spike directions must be orthonormal");
        }
        if priors.len() != centroids.nrows() || priors.iter().any(|&w| !(w > 0.0)) {
            return invalid("one positive prior per class is required");
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return invalid("priors must sum to 1");
        }
        let weighted = centroids.tr_mul(&DVector::from_vec(priors.clone()));
        if weighted.amax() > 1e-10 {
            return invalid("weighted centroid sum must be zero");
        }
        Ok(Self {
            base,
            spikes,
            spike_directions,
            centroids,
            priors,
            mixture: None,
            perturbation: None,
        })
    }

    pub fn p(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn s(&self) -> usize {
        self.spikes.len()
    }

    pub fn num_classes(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn within_matrix(&self) -> DMatrix<f64> {
        let p = self.p();
        let mut m = DMatrix::identity(p, p) * self.base;
        for (i, &l) in self.spikes.iter().enumerate() {
            let xi = self.spike_directions.column(i);
            m += (xi * xi.transpose()) * (l - self.base);
        }
        if let Some(extra) = &self.perturbation {
            m += extra;
        }
        m
    }

    /// The same model with data scaled by `c`: `Σ_w → c²Σ_w`, `μ → cμ`.
    pub fn rescaled(&self, c: f64) -> Self {
        let c2 = c * c;
        Self {
            base: self.base * c2,
            spikes: self.spikes.iter().map(|l| l * c2).collect(),
            spike_directions: self.spike_directions.clone(),
            centroids: &self.centroids * c,
            priors: self.priors.clone(),
            mixture: self.mixture.as_ref().map(|m| MixtureLayout {
                prototypes: &m.prototypes * c,
                owner: m.owner.clone(),
                weights: m.weights.clone(),
            }),
            perturbation: self.perturbation.as_ref().map(|m| m * c2),
        }
    }
}

/// How the between-class part enters `Σ_γ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weighting {
    /// `Σ_w + γ Σ π_k μ_k μ_kᵀ`.
    Gamma(f64),
    /// `Σ_w + Σ ρ_k μ_k μ_kᵀ` with all `ρ_k > 0`.
    Rho(Vec<f64>),
}

/// Max over pairs of `‖U₂ᵀ Σ_w⁻¹ d‖∞ / ‖Σ_w⁻¹ d‖₂`, where `U₂` holds the
/// eigenvectors of `Σ_w + Σ_j w_j m_j m_jᵀ` beyond index `split`.
fn trailing_violation(
    within: &DMatrix<f64>,
    weighted: &[(f64, DVector<f64>)],
    diffs: &[DVector<f64>],
    split: usize,
) -> Result<f64> {
    let p = within.nrows();
    if split >= p {
        return Err(Error::PreconditionViolated(format!("split {split} leaves no trailing eigenvectors (p = {p})")));
    }
    let mut sigma = within.clone();
    for (w, m) in weighted {
        sigma += (m * m.transpose()) * *w;
    }
    let (values, vectors) = sym_eigen_desc(&sigma);
    if split > 0 {
        let gap = values[split - 1] - values[split];
        if gap < MIN_SPLIT_GAP {
            return Err(Error::GapTooSmall { gap });
        }
    }
    let trailing = vectors.columns(split, p - split);
    let chol = nalgebra::Cholesky::new(symmetrize(within.clone())).ok_or(Error::SingularWithinEstimate)?;
    let mut worst: f64 = 0.0;
    for d in diffs {
        let beta = chol.solve(d);
        let norm = beta.norm();
        if norm == 0.0 {
            continue;
        }
        worst = worst.max(trailing.tr_mul(&beta).amax() / norm);
    }
    Ok(worst)
}

fn pairwise_diffs(rows: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    for k in 0..rows.nrows() {
        for l in k + 1..rows.nrows() {
            out.push((rows.row(k) - rows.row(l)).transpose());
        }
    }
    out
}

/// Checks that `Σ_w⁻¹(μ_k − μ_ℓ)` is orthogonal to the trailing `p − s − K + 1`
/// eigenvectors of `Σ_γ` (or `Σ_ρ`).
///
/// The literal statement assumes `s > 1`; smaller `s` is accepted.
pub fn verify_theorem1(model: &SpikedModel, weighting: &Weighting) -> Result<f64> {
    let (p, s, k) = (model.p(), model.s(), model.num_classes());
    if p < s + k {
        return Err(Error::PreconditionViolated(format!("need p > s + K - 1, got p = {p}, s = {s}, K = {k}")));
    }
    let weights: Vec<f64> = match weighting {
        Weighting::Gamma(g) => {
            if !(*g > 0.0) {
                return invalid("gamma must be positive");
            }
            model.priors.iter().map(|pi| g * pi).collect()
        }
        Weighting::Rho(rho) => {
            if rho.len() != k || rho.iter().any(|&r| !(r > 0.0)) {
                return invalid("rho needs K positive entries");
            }
            rho.clone()
        }
    };
    let weighted: Vec<(f64, DVector<f64>)> = weights
        .into_iter()
        .zip(model.centroids.row_iter())
        .map(|(w, mu)| (w, mu.transpose()))
        .collect();
    trailing_violation(&model.within_matrix(), &weighted, &pairwise_diffs(&model.centroids), s + k - 1)
}

/// Mixture version: prototypes act as classes and the split moves to `s + R − 1`.
pub fn verify_theorem2(model: &SpikedModel, gamma: f64) -> Result<f64> {
    let r = model
        .mixture
        .as_ref()
        .map(|m| m.prototypes.nrows())
        .ok_or_else(|| Error::PreconditionViolated("model has no mixture layout".into()))?;
    verify_theorem2_with_split(model, gamma, model.s() + r - 1)
}

/// [`verify_theorem2`] with an explicit split index.
pub fn verify_theorem2_with_split(model: &SpikedModel, gamma: f64, split: usize) -> Result<f64> {
    let mix = model
        .mixture
        .as_ref()
        .ok_or_else(|| Error::PreconditionViolated("model has no mixture layout".into()))?;
    let (p, s, r) = (model.p(), model.s(), mix.prototypes.nrows());
    if p < s + r {
        return Err(Error::PreconditionViolated(format!("need p > s + R - 1, got p = {p}, s = {s}, R = {r}")));
    }
    if !(gamma > 0.0) {
        return invalid("gamma must be positive");
    }
    let weighted: Vec<(f64, DVector<f64>)> = mix
        .prototypes
        .row_iter()
        .enumerate()
        .map(|(t, mu)| (gamma * model.priors[mix.owner[t]] * mix.weights[t], mu.transpose()))
        .collect();
    trailing_violation(&model.within_matrix(), &weighted, &pairwise_diffs(&mix.prototypes), split)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Check {
    /// Max relative eigenvalue discrepancy between the dense and Gram-matrix paths.
    pub eig_gap: f64,
    /// Largest principal angle between the two top-`rank` subspaces.
    pub subspace_angle: f64,
    pub rank: usize,
}

/// Compares the dense `p×p` eigendecomposition of `T_γ` with the small-side path.
pub fn verify_lemma1(ds: &LabeledDataset, gamma: f64) -> Result<Lemma1Check> {
    if ds.p() > DENSE_GUARD {
        return invalid(format!("p = {} exceeds the dense guard {DENSE_GUARD}", ds.p()));
    }
    let scatter = ScatterModel::new(ds)?;
    let total = scatter.scatter_matrices(gamma)?.total;
    let (dense_values, dense_vectors) = sym_eigen_desc(&total);
    let dim = (ds.n() + ds.num_classes()).max(ds.p());
    let lambda_max = dense_values[0];
    let tol = rank_tolerance(dim, lambda_max);
    let dense_rank = dense_values.iter().take_while(|&&v| v > tol).count();

    let q_max = ds.p().min(ds.n() + ds.num_classes());
    let small = scatter.top_principal_directions(Gamma::Finite(gamma), q_max)?;
    let rank = dense_rank.min(small.q());

    let mut eig_gap: f64 = 0.0;
    for (s, d) in small.eigenvalues.iter().zip(&dense_values).take(rank) {
        eig_gap = eig_gap.max((s - d).abs() / d.abs());
    }
    for d in &dense_values[rank..dense_rank] {
        eig_gap = eig_gap.max(d / lambda_max);
    }
    for i in rank..small.q() {
        eig_gap = eig_gap.max(small.eigenvalues[i] / lambda_max);
    }
    let a = dense_vectors.columns(0, rank).into_owned();
    let b = small.directions.columns(0, rank).into_owned();
    Ok(Lemma1Check {
        eig_gap,
        subspace_angle: max_principal_angle(&a, &b),
        rank,
    })
}

/// Checks `(HᵀΣ_wH)⁻¹Hᵀ(μ_k − μ_ℓ) = Hᵀβ_{kℓ}` for a column-orthonormal `h`
/// (p×q) whose span contains every `β_{kℓ} = Σ_w⁻¹(μ_k − μ_ℓ)`.
///
/// Returns the max over pairs of the ∞-norm deviation relative to `‖Hᵀβ‖∞`.
pub fn verify_lemma2(within: &DMatrix<f64>, centroids: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<f64> {
    let p = within.nrows();
    if centroids.ncols() != p || h.nrows() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: h.nrows(),
        });
    }
    let chol = nalgebra::Cholesky::new(symmetrize(within.clone())).ok_or(Error::SingularWithinEstimate)?;
    let reduced = symmetrize(h.tr_mul(&(within * h)));
    let reduced_chol = nalgebra::Cholesky::new(reduced).ok_or(Error::SingularWithinEstimate)?;
    let mut worst: f64 = 0.0;
    for d in pairwise_diffs(centroids) {
        let beta = chol.solve(&d);
        let coords = h.tr_mul(&beta);
        let residual = (&beta - h * &coords).norm();
        if residual > CONTAINMENT_TOL * beta.norm() {
            return Err(Error::PreconditionViolated(format!(
                "span(H) does not contain beta (relative residual {:e})",
                residual / beta.norm()
            )));
        }
        let lhs = reduced_chol.solve(&h.tr_mul(&d));
        let scale = coords.amax().max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - coords).amax() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Proposition1Check {
    /// Principal angles between `span{v_k}` and `Ŵ⁻¹Ĉ`.
    pub angles: Vec<f64>,
    pub rank_between: usize,
    pub dim_inverse_span: usize,
}

impl Proposition1Check {
    pub fn max_angle(&self) -> f64 {
        if self.rank_between != self.dim_inverse_span {
            return std::f64::consts::FRAC_PI_2;
        }
        self.angles.iter().copied().fold(0.0, f64::max)
    }
}

fn centroid_difference_basis(scatter: &ScatterModel) -> DMatrix<f64> {
    let c = scatter.centroids();
    let k = c.nrows();
    DMatrix::from_fn(c.ncols(), k.saturating_sub(1), |j, i| c[(i, j)] - c[(k - 1, j)])
}

/// Compares Fisher directions with `Ŵ⁻¹Ĉ`, `Ĉ = span{μ̂_k − μ̂_ℓ}`.
pub fn verify_proposition1(ds: &LabeledDataset, estimate: &WithinEstimate) -> Result<Proposition1Check> {
    let fisher = fisher_directions(ds, estimate)?;
    let scatter = ScatterModel::new(ds)?;
    let diffs = centroid_difference_basis(&scatter);
    let chol = nalgebra::Cholesky::new(symmetrize(fisher.within.clone())).ok_or(Error::SingularWithinEstimate)?;
    let inv_span = orthonormal_basis(&chol.solve(&diffs), 1e-10);
    let v = orthonormal_basis(&fisher.directions, 1e-10);
    Ok(Proposition1Check {
        angles: principal_angles(&v, &inv_span),
        rank_between: fisher.directions.ncols(),
        dim_inverse_span: inv_span.ncols(),
    })
}

/// Labels from full-space LDA under `Ŵ` and from LDA on the projection onto
/// `span{v_k}` with the carried metric `HᵀŴH`. Equal priors in both.
pub fn projected_prediction_agreement(
    train: &LabeledDataset,
    test: &DMatrix<f64>,
    estimate: &WithinEstimate,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let fisher = fisher_directions(train, estimate)?;
    let scatter = ScatterModel::new(train)?;
    let priors = log_priors(&train.class_counts(), PriorsMode::Equal);
    let mut centered = test.clone();
    for (mut col, m) in centered.column_iter_mut().zip(scatter.overall_mean().iter()) {
        col.add_scalar_mut(-m);
    }

    let full_factor = nalgebra::Cholesky::new(symmetrize(fisher.within.clone()))
        .ok_or(Error::SingularWithinEstimate)?
        .l();
    let full = ReducedLda {
        reduced_centroids: scatter.centroids().clone(),
        within: WithinMetric::Cholesky { factor: full_factor },
        log_priors: priors.clone(),
        ridge_used: 0.0,
    };

    let h = orthonormal_basis(&fisher.directions, 1e-10);
    let reduced_cov = symmetrize(h.tr_mul(&(&fisher.within * &h)));
    let reduced_factor = nalgebra::Cholesky::new(reduced_cov)
        .ok_or(Error::SingularWithinEstimate)?
        .l();
    let projected = ReducedLda {
        reduced_centroids: scatter.centroids() * &h,
        within: WithinMetric::Cholesky {
            factor: reduced_factor,
        },
        log_priors: priors,
        ridge_used: 0.0,
    };
    Ok((
        argmax_rows(&full.scores(&centered)),
        argmax_rows(&projected.scores(&(&centered * &h))),
    ))
}

// ----------------------------------------------------------------------------
// Random instances

pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `p×s` matrix with orthonormal columns drawn uniformly.
pub fn random_orthonormal(rng: &mut Rng, p: usize, s: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, p, s);
    g.qr().q().columns(0, s).into_owned()
}

/// Removes the prior-weighted mean from the rows of `m`.
fn center_rows(m: &mut DMatrix<f64>, weights: &[f64]) {
    let total: f64 = weights.iter().sum();
    let mean = m.tr_mul(&DVector::from_vec(weights.to_vec())) / total;
    for mut row in m.row_iter_mut() {
        row -= mean.transpose();
    }
}

/// Spiked model with random orthonormal spike directions, Gaussian centroids
/// centered under random priors.
pub fn random_spiked_model(rng: &mut Rng, p: usize, spikes: &[f64], base: f64, k: usize) -> Result<SpikedModel> {
    let xi = random_orthonormal(rng, p, spikes.len());
    let mut centroids = gaussian_matrix(rng, k, p);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let priors: Vec<f64> = raw.iter().map(|w| w / total).collect();
    center_rows(&mut centroids, &priors);
    let mut model = SpikedModel::new(base, spikes.to_vec(), xi, centroids, priors)?;
    // exact re-centering after the normalisation round-off
    let p_sum: f64 = model.priors.iter().sum();
    model.priors.iter_mut().for_each(|w| *w /= p_sum);
    Ok(model)
}

/// Spiked mixture model with `components[k]` prototypes in class `k`.
pub fn random_mixture_model(rng: &mut Rng, p: usize, spikes: &[f64], base: f64, components: &[usize]) -> Result<SpikedModel> {
    let k = components.len();
    let r: usize = components.iter().sum();
    let xi = random_orthonormal(rng, p, spikes.len());
    let owner: Vec<usize> = components
        .iter()
        .enumerate()
        .flat_map(|(c, &m)| std::iter::repeat_n(c, m))
        .collect();
    let mut weights = vec![0.0; r];
    for c in 0..k {
        let idx: Vec<usize> = (0..r).filter(|&t| owner[t] == c).collect();
        let raw: Vec<f64> = idx.iter().map(|_| rng.random_range(0.5..1.5)).collect();
        let sum: f64 = raw.iter().sum();
        for (t, w) in idx.iter().zip(raw) {
            weights[*t] = w / sum;
        }
    }
    let priors = vec![1.0 / k as f64; k];
    let mut prototypes = gaussian_matrix(rng, r, p);
    let overall: Vec<f64> = (0..r).map(|t| priors[owner[t]] * weights[t]).collect();
    center_rows(&mut prototypes, &overall);
    let mut centroids = DMatrix::zeros(k, p);
    for t in 0..r {
        let mut row = centroids.row_mut(owner[t]);
        row += prototypes.row(t) * weights[t];
    }
    let mut model = SpikedModel::new(base, spikes.to_vec(), xi, centroids, priors)?;
    model.mixture = Some(MixtureLayout {
        prototypes,
        owner,
        weights,
    });
    Ok(model)
}

/// Adds `magnitude · e eᵀ` to `Σ_w` for a random unit vector `e`, which leaves
/// the spiked form with `s` spikes.
pub fn perturb_off_spiked(model: &SpikedModel, rng: &mut Rng, magnitude: f64) -> SpikedModel {
    let e = random_orthonormal(rng, model.p(), 1);
    let mut out = model.clone();
    out.perturbation = Some((&e * e.transpose()) * magnitude);
    out
}

/// Gaussian classes with random centroids; `n` rows split as evenly as possible.
pub fn random_dataset(rng: &mut Rng, n: usize, p: usize, k: usize, separation: f64) -> Result<LabeledDataset> {
    let centroids = gaussian_matrix(rng, k, p) * separation;
    let labels: Vec<usize> = (0..n).map(|i| i % k + 1).collect();
    let mut x = gaussian_matrix(rng, n, p);
    // a shared scale per feature gives W a non-trivial diagonal
    let scales: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..2.0)).collect();
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = x[(i, j)] * scales[j] + centroids[(labels[i] - 1, j)];
        }
    }
    LabeledDataset::with_classes(x, labels, k)
}

// ----------------------------------------------------------------------------
// Built-in battery

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    /// `true` when the measured value must exceed the threshold (negative control).
    pub expect_above: bool,
    pub passed: bool,
}

impl CheckResult {
    fn below(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            threshold,
            expect_above: false,
            passed: measured.is_finite() && measured < threshold,
        }
    }

    fn above(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            threshold,
            expect_above: true,
            passed: measured > threshold,
        }
    }

    fn failed(name: &str, threshold: f64, expect_above: bool) -> Self {
        Self {
            name: name.to_string(),
            measured: f64::NAN,
            threshold,
            expect_above,
            passed: false,
        }
    }
}

fn check_below(name: &str, r: Result<f64>, threshold: f64) -> CheckResult {
    r.map(|v| CheckResult::below(name, v, threshold))
        .unwrap_or_else(|_| CheckResult::failed(name, threshold, false))
}

fn check_above(name: &str, r: Result<f64>, threshold: f64) -> CheckResult {
    r.map(|v| CheckResult::above(name, v, threshold))
        .unwrap_or_else(|_| CheckResult::failed(name, threshold, true))
}

/// The D0 toy dataset: four points in the plane, two classes.
pub fn toy_dataset() -> LabeledDataset {
    let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
    LabeledDataset::new(x, vec![1, 1, 2, 2]).expect("valid toy dataset")
}

/// Runs every verifier on fixed seeded instances.
pub fn run_battery(seed: u64) -> Vec<CheckResult> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();

    let model = random_spiked_model(&mut rng, 20, &[9.0, 7.0, 5.0], 1.0, 4);
    match model {
        Ok(model) => {
            out.push(check_below("theorem1 gamma=2", verify_theorem1(&model, &Weighting::Gamma(2.0)), IDENTITY_TOL));
            out.push(check_below(
                "theorem1 rho family",
                verify_theorem1(&model, &Weighting::Rho(vec![0.3, 1.7, 4.0, 0.9])),
                IDENTITY_TOL,
            ));
            let perturbed = perturb_off_spiked(&model, &mut rng, 0.5);
            out.push(check_above(
                "theorem1 negative control (off-spiked)",
                verify_theorem1(&perturbed, &Weighting::Gamma(2.0)),
                POWER_THRESHOLD,
            ));
        }
        Err(_) => out.push(CheckResult::failed("theorem1 instance", IDENTITY_TOL, false)),
    }
    match random_spiked_model(&mut rng, 20, &[], 1.0, 4) {
        Ok(scalar) => out.push(check_below(
            "theorem1 scalar within (s=0)",
            verify_theorem1(&scalar, &Weighting::Gamma(3.0)),
            IDENTITY_TOL,
        )),
        Err(_) => out.push(CheckResult::failed("theorem1 scalar within (s=0)", IDENTITY_TOL, false)),
    }

    match random_mixture_model(&mut rng, 15, &[6.0, 4.0], 1.0, &[2, 1]) {
        Ok(mix) => {
            out.push(check_below("theorem2 mixture R=(2,1)", verify_theorem2(&mix, 2.0), IDENTITY_TOL));
            out.push(check_above(
                "theorem2 negative control (split s+K-1)",
                verify_theorem2_with_split(&mix, 2.0, mix.s() + mix.num_classes() - 1),
                POWER_THRESHOLD,
            ));
        }
        Err(_) => out.push(CheckResult::failed("theorem2 instance", IDENTITY_TOL, false)),
    }

    match random_dataset(&mut rng, 30, 100, 3, 1.0) {
        Ok(ds) => match verify_lemma1(&ds, 0.5) {
            Ok(c) => {
                out.push(CheckResult::below("lemma1 eigenvalues n=30 p=100", c.eig_gap, IDENTITY_TOL));
                out.push(CheckResult::below("lemma1 subspace n=30 p=100", c.subspace_angle, ANGLE_TOL));
            }
            Err(_) => out.push(CheckResult::failed("lemma1 n=30 p=100", IDENTITY_TOL, false)),
        },
        Err(_) => out.push(CheckResult::failed("lemma1 instance", IDENTITY_TOL, false)),
    }
    out.push(check_below(
        "lemma1 toy dataset gamma=4",
        verify_lemma1(&toy_dataset(), 4.0).map(|c| c.eig_gap.max(c.subspace_angle)),
        IDENTITY_TOL,
    ));

    if let Ok(model) = random_spiked_model(&mut rng, 20, &[8.0, 3.0], 1.0, 3) {
        let within = model.within_matrix();
        let betas = beta_matrix(&within, &model.centroids);
        let minimal = orthonormal_basis(&betas, 1e-10);
        out.push(check_below(
            "lemma2 minimal subspace",
            verify_lemma2(&within, &model.centroids, &minimal),
            IDENTITY_TOL,
        ));
        let extra = gaussian_matrix(&mut rng, 20, 3);
        let mut both = DMatrix::zeros(20, betas.ncols() + 3);
        both.columns_mut(0, betas.ncols()).copy_from(&betas);
        both.columns_mut(betas.ncols(), 3).copy_from(&extra);
        out.push(check_below(
            "lemma2 enlarged subspace",
            verify_lemma2(&within, &model.centroids, &orthonormal_basis(&both, 1e-10)),
            IDENTITY_TOL,
        ));
        let random = random_orthonormal(&mut rng, 20, 3);
        let rejected = matches!(
            verify_lemma2(&within, &model.centroids, &random),
            Err(Error::PreconditionViolated(_))
        );
        out.push(CheckResult {
            name: "lemma2 precondition detected".into(),
            measured: if rejected { 0.0 } else { 1.0 },
            threshold: 0.5,
            expect_above: false,
            passed: rejected,
        });
    } else {
        out.push(CheckResult::failed("lemma2 instance", IDENTITY_TOL, false));
    }

    match random_dataset(&mut rng, 80, 6, 4, 1.0) {
        Ok(ds) => {
            out.push(check_below(
                "proposition1 pooled W",
                verify_proposition1(&ds, &WithinEstimate::Pooled).map(|c| c.max_angle()),
                ANGLE_TOL,
            ));
            out.push(check_below(
                "corollary2 diagonal W",
                verify_proposition1(&ds, &WithinEstimate::Diagonal).map(|c| c.max_angle()),
                ANGLE_TOL,
            ));
            let test = gaussian_matrix(&mut rng, 200, 6);
            let mismatches = projected_prediction_agreement(&ds, &test, &WithinEstimate::Pooled)
                .map(|(a, b)| a.iter().zip(&b).filter(|(x, y)| x != y).count() as f64);
            out.push(check_below("proposition1 prediction mismatches", mismatches, 0.5));
        }
        Err(_) => out.push(CheckResult::failed("proposition1 instance", ANGLE_TOL, false)),
    }
    out
}

/// Columns `Σ_w⁻¹(μ_k − μ_K)`, `k < K`; they span every `β_{kℓ}`.
pub fn beta_matrix(within: &DMatrix<f64>, centroids: &DMatrix<f64>) -> DMatrix<f64> {
    let k = centroids.nrows();
    let diffs = DMatrix::from_fn(centroids.ncols(), k - 1, |j, i| centroids[(i, j)] - centroids[(k - 1, j)]);
    nalgebra::Cholesky::new(symmetrize(within.clone()))
        .expect("positive definite within covariance")
        .solve(&diffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem1_holds_and_has_power() {
        let mut rng = rng_from_seed(1);
        let model = random_spiked_model(&mut rng, 20, &[9.0, 7.0, 5.0], 1.0, 4).unwrap();
        assert!(verify_theorem1(&model, &Weighting::Gamma(2.0)).unwrap() < IDENTITY_TOL);
        let bad = perturb_off_spiked(&model, &mut rng, 0.5);
        assert!(verify_theorem1(&bad, &Weighting::Gamma(2.0)).unwrap() > POWER_THRESHOLD);
    }

    #[test]
    fn theorem1_violation_is_scale_invariant() {
        let mut rng = rng_from_seed(2);
        let model = random_spiked_model(&mut rng, 20, &[9.0, 7.0, 5.0], 1.0, 4).unwrap();
        let bad = perturb_off_spiked(&model, &mut rng, 0.5);
        let a = verify_theorem1(&bad, &Weighting::Gamma(2.0)).unwrap();
        let b = verify_theorem1(&bad.rescaled(3.0), &Weighting::Gamma(2.0)).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn theorem1_precondition() {
        let mut rng = rng_from_seed(3);
        let model = random_spiked_model(&mut rng, 5, &[4.0, 3.0, 2.0], 1.0, 3).unwrap();
        assert!(matches!(
            verify_theorem1(&model, &Weighting::Gamma(1.0)),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn theorem2_unit_components_match_theorem1() {
        let mut rng = rng_from_seed(4);
        let model = random_mixture_model(&mut rng, 15, &[6.0, 4.0], 1.0, &[1, 1, 1]).unwrap();
        let t2 = verify_theorem2(&model, 2.0).unwrap();
        let t1 = verify_theorem1(&model, &Weighting::Gamma(2.0)).unwrap();
        assert!(t1 < IDENTITY_TOL && t2 < IDENTITY_TOL);
    }

    #[test]
    fn spiked_model_validation() {
        let xi = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let mu = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        assert!(SpikedModel::new(1.0, vec![3.0], xi.clone(), mu.clone(), vec![0.5, 0.5]).is_ok());
        assert!(SpikedModel::new(1.0, vec![0.5], xi.clone(), mu.clone(), vec![0.5, 0.5]).is_err());
        assert!(SpikedModel::new(1.0, vec![3.0], xi, mu, vec![0.7, 0.3]).is_err());
    }

    #[test]
    fn battery_passes() {
        for check in run_battery(2024) {
            assert!(check.passed, "{check:?}");
        }
    }
}
