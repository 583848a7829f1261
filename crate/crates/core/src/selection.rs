//! Stratified k-fold cross validation over `(γ, q)` grids.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    error_rate, fit_pcalda, fit_reduced_lda, fit_spcalda, log_priors, Method, PriorsMode, ReducedLdaModel,
};
use crate::dataset::LabeledDataset;
use crate::error::{invalid, Error, Result};
use crate::linalg::{Gamma, ScatterModel};
use crate::rng::rng_from_seed;

pub const CV_REPORT_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_Q_CAP: usize = 40;

pub fn default_gamma_grid() -> Vec<Gamma> {
    let mut grid: Vec<Gamma> = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
        .into_iter()
        .map(Gamma::Finite)
        .collect();
    grid.push(Gamma::Infinite);
    grid
}

/// `1..=min(n+K−1, p, 40)`.
pub fn default_q_grid(n: usize, k: usize, p: usize) -> Vec<usize> {
    let cap = (n + k - 1).min(p).clamp(1, DEFAULT_Q_CAP);
    (1..=cap).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub gammas: Vec<Gamma>,
    pub qs: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
}

impl CvGrid {
    /// Default grids for `ds`.
    pub fn default_for(ds: &LabeledDataset, seed: u64) -> Self {
        Self {
            gammas: default_gamma_grid(),
            qs: default_q_grid(ds.n(), ds.num_classes(), ds.p()),
            folds: DEFAULT_FOLDS,
            seed,
        }
    }

    pub fn validate(&self, ds: &LabeledDataset) -> Result<()> {
        if self.gammas.is_empty() || self.qs.is_empty() {
            return invalid("grids must be nonempty");
        }
        for g in &self.gammas {
            g.validate()?;
        }
        let q_max = ds.p().min(ds.n() + ds.num_classes());
        if let Some(q) = self.qs.iter().find(|&&q| q == 0 || q > q_max) {
            return invalid(format!("q = {q} outside 1..={q_max}"));
        }
        let min_class = ds.class_counts().into_iter().min().unwrap_or(0);
        if self.folds < 2 || self.folds > min_class {
            return invalid(format!(
                "folds = {} must lie in 2..={} (smallest class size)",
                self.folds, min_class
            ));
        }
        Ok(())
    }
}

/// Fold index in `0..k` for every observation.
///
/// Within each class the indices are shuffled and dealt round-robin, starting
/// where the previous class stopped so that total fold sizes stay balanced too.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return invalid("at least two folds are required");
    }
    let num_classes = labels.iter().copied().max().unwrap_or(0);
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        if y == 0 {
            return invalid("labels must be in 1..=K");
        }
        by_class[y - 1].push(i);
    }
    if let Some(small) = by_class.iter().filter(|c| !c.is_empty()).map(Vec::len).min() {
        if k > small {
            return invalid(format!("k = {k} exceeds the smallest class size {small}"));
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut folds = vec![0; labels.len()];
    let mut offset = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            folds[i] = (offset + j) % k;
        }
        offset = (offset + members.len()) % k;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub gamma: Gamma,
    pub q: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub format_version: u32,
    pub method: Method,
    pub priors: PriorsMode,
    pub grid: CvGrid,
    /// Mean fold error, indexed `[gamma][q]` in grid order.
    pub error_table: Vec<Vec<f64>>,
    /// Per-fold error, indexed `[gamma][q][fold]`.
    pub fold_errors: Vec<Vec<Vec<f64>>>,
    pub fold_assignments: Vec<usize>,
    pub selected: GridPoint,
    /// All cells attaining the minimum, in tie-break order (selected first).
    pub tie_trace: Vec<GridPoint>,
}

impl CvReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// Error table as aligned text: one row per `γ`, one column per `q`.
    pub fn table(&self) -> String {
        let mut out = format!("{:>8}", "gamma\\q");
        for q in &self.grid.qs {
            out.push_str(&format!(" {q:>7}"));
        }
        out.push('\n');
        for (g, row) in self.grid.gammas.iter().zip(&self.error_table) {
            out.push_str(&format!("{:>8}", g.to_string()));
            for e in row {
                out.push_str(&format!(" {:>7.4}", e));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "selected: gamma = {}, q = {}, cv error = {:.4}\n",
            self.selected.gamma, self.selected.q, self.selected.error
        ));
        out
    }
}

/// Mean of per-fold errors, summed in fold order.
pub fn mean_fold_error(fold_errors: &[f64]) -> f64 {
    fold_errors.iter().sum::<f64>() / fold_errors.len() as f64
}

fn train_test(ds: &LabeledDataset, folds: &[usize], f: usize) -> Result<(LabeledDataset, LabeledDataset)> {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.n()).partition(|&i| folds[i] == f);
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

fn prior_only_error(train: &LabeledDataset, test: &LabeledDataset, priors: PriorsMode) -> f64 {
    let lp = log_priors(&train.class_counts(), priors);
    let best = (0..lp.len()).fold(0, |b, c| if lp[c] > lp[b] { c } else { b }) + 1;
    error_rate(&vec![best; test.n()], test.labels())
}

/// Errors of every `q` in `qs` for one fold and one `γ`.
///
/// The basis is computed once at the largest `q` and truncated, which matches
/// fitting each `q` separately.
fn fold_gamma_errors(
    train: &LabeledDataset,
    test: &LabeledDataset,
    gamma: Gamma,
    qs: &[usize],
    priors: PriorsMode,
) -> Result<Vec<f64>> {
    let scatter = ScatterModel::new(train)?;
    let q_cap = qs
        .iter()
        .copied()
        .max()
        .unwrap_or(1)
        .min(train.p())
        .min(train.n() + train.num_classes());
    let basis = scatter.top_principal_directions(gamma, q_cap)?;
    let centered_train = scatter.centered();
    let mut test_centered = test.data().clone();
    for (mut col, m) in test_centered.column_iter_mut().zip(scatter.overall_mean().iter()) {
        col.add_scalar_mut(-m);
    }
    let z_train = basis.project(centered_train.data());
    let z_test = basis.project(&test_centered);
    qs.iter()
        .map(|&q| {
            let q_eff = q.min(basis.q());
            if q_eff == 0 {
                return Ok(prior_only_error(train, test, priors));
            }
            let zt: DMatrix<f64> = z_train.columns(0, q_eff).into_owned();
            let lda = fit_reduced_lda(&zt, train.labels(), train.num_classes(), priors)?;
            let pred = lda.predict(&z_test.columns(0, q_eff).into_owned());
            Ok(error_rate(&pred.labels, test.labels()))
        })
        .collect()
}

/// Runs k-fold CV over the grid and refits the selected `(γ*, q*)` on all of `ds`.
///
/// Ties at the minimum error go to the smaller `q`, then the smaller `γ`
/// (`Infinite` last). For PCALDA the `γ` grid is replaced by `{1}`.
pub fn cv_select(
    ds: &LabeledDataset,
    grid: &CvGrid,
    method: Method,
    priors: PriorsMode,
) -> Result<(CvReport, ReducedLdaModel)> {
    let mut grid = grid.clone();
    match method {
        Method::Spcalda => {}
        Method::Pcalda => grid.gammas = vec![Gamma::Finite(1.0)],
        other => return invalid(format!("cross validation is defined for SPCALDA and PCALDA, not {other}")),
    }
    grid.validate(ds)?;
    let assignments = stratified_kfold(ds.labels(), grid.folds, grid.seed)?;
    let splits: Vec<(LabeledDataset, LabeledDataset)> = (0..grid.folds)
        .map(|f| train_test(ds, &assignments, f))
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..grid.gammas.len())
        .flat_map(|g| (0..grid.folds).map(move |f| (g, f)))
        .collect();
    let results: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(g, f)| {
            let (train, test) = &splits[f];
            fold_gamma_errors(train, test, grid.gammas[g], &grid.qs, priors)
        })
        .collect::<Result<_>>()?;

    let nq = grid.qs.len();
    let mut fold_errors = vec![vec![vec![0.0; grid.folds]; nq]; grid.gammas.len()];
    for (&(g, f), errs) in tasks.iter().zip(&results) {
        for (qi, e) in errs.iter().enumerate() {
            fold_errors[g][qi][f] = *e;
        }
    }
    let error_table: Vec<Vec<f64>> = fold_errors
        .iter()
        .map(|row| row.iter().map(|fe| mean_fold_error(fe)).collect())
        .collect();

    let mut cells: Vec<GridPoint> = grid
        .gammas
        .iter()
        .enumerate()
        .flat_map(|(gi, &gamma)| {
            let error_table = &error_table;
            grid.qs.iter().enumerate().map(move |(qi, &q)| GridPoint {
                gamma,
                q,
                error: error_table[gi][qi],
            })
        })
        .collect();
    cells.sort_by(|a, b| {
        a.error
            .total_cmp(&b.error)
            .then(a.q.cmp(&b.q))
            .then(a.gamma.total_cmp(&b.gamma))
    });
    let best = cells[0].error;
    let mut tie_trace: Vec<GridPoint> = cells.into_iter().take_while(|c| c.error == best).collect();
    tie_trace.dedup_by(|a, b| a.q == b.q && a.gamma.total_cmp(&b.gamma).is_eq());
    let selected = tie_trace[0].clone();

    let model = match method {
        Method::Pcalda => fit_pcalda(ds, selected.q, priors)?,
        _ => fit_spcalda(ds, selected.gamma, selected.q, priors)?,
    };
    let report = CvReport {
        format_version: CV_REPORT_FORMAT_VERSION,
        method,
        priors,
        grid,
        error_table,
        fold_errors,
        fold_assignments: assignments,
        selected,
        tie_trace,
    };
    Ok((report, model))
}

/// Per-fold errors of one `(γ, q)` cell through the public fit/predict path.
pub fn evaluate_cell(
    ds: &LabeledDataset,
    method: Method,
    gamma: Gamma,
    q: usize,
    assignments: &[usize],
    folds: usize,
    priors: PriorsMode,
) -> Result<Vec<f64>> {
    (0..folds)
        .map(|f| {
            let (train, test) = train_test(ds, assignments, f)?;
            let q_eff = q.min(train.p()).min(train.n() + train.num_classes());
            let model = match method {
                Method::Pcalda => fit_pcalda(&train, q_eff, priors)?,
                _ => fit_spcalda(&train, gamma, q_eff, priors)?,
            };
            let pred = model.predict(test.data())?;
            Ok(error_rate(&pred.labels, test.labels()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kfold_divisible_case() {
        let y = [1, 1, 1, 1, 2, 2, 2, 2];
        let folds = stratified_kfold(&y, 2, 3).unwrap();
        for f in 0..2 {
            for c in 1..=2 {
                let count = (0..8).filter(|&i| folds[i] == f && y[i] == c).count();
                assert_eq!(count, 2);
            }
        }
        assert_eq!(folds, stratified_kfold(&y, 2, 3).unwrap());
    }

    #[test]
    fn kfold_smallest_class_once_per_fold() {
        let y = [1, 1, 1, 2, 2, 2, 2, 2, 2, 2];
        let folds = stratified_kfold(&y, 3, 9).unwrap();
        for f in 0..3 {
            assert_eq!((0..3).filter(|&i| folds[i] == f).count(), 1);
        }
        assert!(stratified_kfold(&y, 4, 9).is_err());
        assert!(stratified_kfold(&y, 1, 9).is_err());
    }

    #[test]
    fn default_grids() {
        let g = default_gamma_grid();
        assert_eq!(g.len(), 10);
        assert_eq!(g[9], Gamma::Infinite);
        assert_eq!(default_q_grid(100, 4, 500).len(), 40);
        assert_eq!(default_q_grid(10, 2, 500), (1..=11).collect::<Vec<_>>());
        assert_eq!(default_q_grid(100, 4, 5), (1..=5).collect::<Vec<_>>());
    }
}
