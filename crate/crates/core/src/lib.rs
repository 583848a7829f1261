#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Reduced-rank linear discriminant analysis driven by a supervised PCA of the
//! weighted total scatter `T_γ = W + γB`.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: centering, class statistics, scatter matrices and the small-side
//!   (Gram matrix) eigendecomposition that yields the top principal directions of
//!   `T_γ` in `O(n²p)` time.
//! - [`classifiers`]: SPCALDA together with the baselines it generalises (PCALDA,
//!   simple reduced-rank LDA, diagonal LDA, full-space LDA), Fisher discriminant
//!   directions and the Bayes rule for known parameters.
//! - [`selection`]: stratified k-fold cross validation over `(γ, q)` grids.
//! - [`scenarios`]: seeded generators for the six simulation scenarios and the
//!   Monte-Carlo benchmark runner.
//! - [`theory`]: numerical verifiers for the subspace identities behind the method.

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod scenarios;
pub mod selection;
pub mod theory;

pub use classifiers::{Method, PriorsMode, ReducedLdaModel};
pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use linalg::{Gamma, ProjectionBasis, ScatterModel};
