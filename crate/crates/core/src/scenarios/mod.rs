//! Seeded generators for the six four-class simulation scenarios.
//!
//! | id | means                     | `Σ_w`                  | extra noise                    |
//! |----|---------------------------|------------------------|--------------------------------|
//! | 1  | 0.3 on block k            | `I`                    | –                              |
//! | 2  | `N(0, 0.3²)` on block k   | `I`                    | –                              |
//! | 3  | 0.21 on block k           | compound symmetry 0.5  | –                              |
//! | 4  | `N(0, 0.21²)` on block k  | compound symmetry 0.5  | –                              |
//! | 5  | as 3                      | as 3                   | `0.2·t₃` per entry             |
//! | 6  | as 3                      | as 3                   | `N(0, diag(d_k²))`, `d_k ~ U(0,1)` |
//!
//! Block `k` is the k-th quarter of the `p` coordinates.

mod bench;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::classifiers::{OracleSpec, WithinStructure};
use crate::dataset::LabeledDataset;
use crate::error::{invalid, Result};
use crate::rng::{rng_from_seed, Rng};

pub use bench::{run_benchmark, BenchConfig, BenchmarkReport, MethodSummary, ReplicateRecord};

pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contamination {
    None,
    /// Adds `scale · Z` with `Z` entries i.i.d. Student-t with 3 degrees of freedom.
    T3Scaled { scale: f64 },
    /// Adds `N(0, diag(d_k²))` per class with `d_k` entries i.i.d. `U(0, 1)`.
    PerClassUniformDiag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u8,
    pub p: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Full-size defaults: `p = 500`, 25 training and 25 test points per class.
    pub fn new(id: u8, seed: u64) -> Self {
        Self {
            id,
            p: 500,
            train_per_class: 25,
            test_per_class: 25,
            seed,
        }
    }

    pub fn with_p(mut self, p: usize) -> Self {
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.id) {
            return invalid(format!("scenario id {} outside 1..=6", self.id));
        }
        if self.p == 0 || !self.p.is_multiple_of(NUM_CLASSES) {
            return invalid(format!("p = {} must be a positive multiple of 4", self.p));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return invalid("per-class train and test counts must be at least 1");
        }
        Ok(())
    }

    pub fn mean_scale(&self) -> f64 {
        if self.id <= 2 {
            0.3
        } else {
            0.21
        }
    }

    pub fn rho(&self) -> f64 {
        if self.id <= 2 {
            0.0
        } else {
            0.5
        }
    }

    pub fn random_means(&self) -> bool {
        matches!(self.id, 2 | 4)
    }

    pub fn contamination(&self) -> Contamination {
        match self.id {
            5 => Contamination::T3Scaled { scale: 0.2 },
            6 => Contamination::PerClassUniformDiag,
            _ => Contamination::None,
        }
    }

    pub fn within_structure(&self) -> WithinStructure {
        if self.rho() == 0.0 {
            WithinStructure::Identity
        } else {
            WithinStructure::CompoundSymmetry { rho: self.rho() }
        }
    }
}

/// Class means (4×p): class k is nonzero only on the k-th block of `p/4` coordinates.
pub fn scenario_means(spec: &ScenarioSpec, rng: &mut Rng) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let block = spec.p / NUM_CLASSES;
    let scale = spec.mean_scale();
    let mut means = DMatrix::zeros(NUM_CLASSES, spec.p);
    for k in 0..NUM_CLASSES {
        for j in k * block..(k + 1) * block {
            means[(k, j)] = if spec.random_means() {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            } else {
                scale
            };
        }
    }
    Ok(means)
}

/// `n×p` rows with covariance `(1−ρ)I + ρ11ᵀ`: `√(1−ρ)·z + √ρ·u·1`.
pub fn sample_compound_symmetry(n: usize, p: usize, rho: f64, rng: &mut Rng) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return invalid(format!("rho must lie in [0, 1), got {rho}"));
    }
    let (a, b) = ((1.0 - rho).sqrt(), rho.sqrt());
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let u: f64 = StandardNormal.sample(rng);
        for j in 0..p {
            let z: f64 = StandardNormal.sample(rng);
            x[(i, j)] = a * z + b * u;
        }
    }
    Ok(x)
}

/// One replicate: balanced train/test splits plus the true parameters when the
/// Gaussian equal-covariance model holds (ids 1–4).
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub oracle: Option<OracleSpec>,
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let means = scenario_means(spec, &mut rng)?;
    let p = spec.p;
    let scales: Option<Vec<Vec<f64>>> = match spec.contamination() {
        Contamination::PerClassUniformDiag => Some(
            (0..NUM_CLASSES)
                .map(|_| (0..p).map(|_| rng.random::<f64>()).collect())
                .collect(),
        ),
        _ => None,
    };
    let t3 = StudentT::new(3.0).expect("valid degrees of freedom");

    let (ntr, nte) = (spec.train_per_class, spec.test_per_class);
    let mut train = DMatrix::zeros(NUM_CLASSES * ntr, p);
    let mut test = DMatrix::zeros(NUM_CLASSES * nte, p);
    for k in 0..NUM_CLASSES {
        let mut x = sample_compound_symmetry(ntr + nte, p, spec.rho(), &mut rng)?;
        for mut row in x.row_iter_mut() {
            row += means.row(k);
        }
        match spec.contamination() {
            Contamination::None => {}
            Contamination::T3Scaled { scale } => {
                for v in x.iter_mut() {
                    *v += scale * t3.sample(&mut rng);
                }
            }
            Contamination::PerClassUniformDiag => {
                let d = &scales.as_ref().expect("drawn above")[k];
                for i in 0..x.nrows() {
                    for (j, dj) in d.iter().enumerate() {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        x[(i, j)] += dj * z;
                    }
                }
            }
        }
        train.rows_mut(k * ntr, ntr).copy_from(&x.rows(0, ntr));
        test.rows_mut(k * nte, nte).copy_from(&x.rows(ntr, nte));
    }
    let labels = |m: usize| (0..NUM_CLASSES).flat_map(|k| std::iter::repeat_n(k + 1, m)).collect::<Vec<_>>();
    let oracle = match spec.contamination() {
        Contamination::None => Some(OracleSpec::new(means, spec.within_structure())?),
        _ => None,
    };
    Ok(Scenario {
        spec: *spec,
        train: LabeledDataset::with_classes(train, labels(ntr), NUM_CLASSES)?,
        test: LabeledDataset::with_classes(test, labels(nte), NUM_CLASSES)?,
        oracle,
    })
}
