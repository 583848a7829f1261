//! Monte-Carlo benchmark: repeated scenario draws, CV tuning on the training
//! split and test error per method.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_scenario, Scenario, ScenarioSpec};
use crate::classifiers::{
    bayes_oracle_predict, error_rate, fit_diagonal_lda, fit_lda, fit_srrlda, Method, PriorsMode,
};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, GENERATOR_NAME};
use crate::selection::{cv_select, CvGrid, DEFAULT_FOLDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenarios: Vec<u8>,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub master_seed: u64,
    pub p: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub folds: usize,
    pub priors: PriorsMode,
}

impl BenchConfig {
    /// Full-size configuration: p = 500, 100 replicates.
    pub fn full(master_seed: u64) -> Self {
        Self {
            scenarios: (1..=6).collect(),
            methods: vec![Method::Spcalda, Method::Pcalda, Method::Srrlda, Method::Ir, Method::Oracle],
            replicates: 100,
            master_seed,
            p: 500,
            train_per_class: 25,
            test_per_class: 25,
            folds: DEFAULT_FOLDS,
            priors: PriorsMode::Empirical,
        }
    }

    /// Desk-scale configuration: p = 100, 10 replicates.
    pub fn desk(master_seed: u64) -> Self {
        Self {
            replicates: 10,
            p: 100,
            ..Self::full(master_seed)
        }
    }

    /// Seed of replicate `r` of scenario `id`.
    pub fn replicate_seed(&self, id: u8, r: usize) -> u64 {
        derive_seed(self.master_seed, ((id as u64) << 32) | r as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub scenario: u8,
    pub method: Method,
    pub replicate: usize,
    /// Test misclassification rate in `[0, 1]`; NaN when unavailable.
    pub error: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub scenario: u8,
    pub method: Method,
    /// Mean test error in percent over the valid replicates (NaN if none).
    pub mean_pct: f64,
    /// Sample standard deviation in percent; 0 with `single_replicate` set when only one value exists.
    pub sd_pct: f64,
    pub valid: usize,
    pub failures: usize,
    pub single_replicate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub records: Vec<ReplicateRecord>,
    pub summaries: Vec<MethodSummary>,
}

fn method_error(method: Method, scenario: &Scenario, cv_seed: u64, cfg: &BenchConfig) -> Result<f64> {
    let (train, test) = (&scenario.train, &scenario.test);
    let labels = match method {
        Method::Spcalda | Method::Pcalda => {
            let mut grid = CvGrid::default_for(train, cv_seed);
            grid.folds = cfg.folds;
            let (_, model) = cv_select(train, &grid, method, cfg.priors)?;
            model.predict(test.data())?.labels
        }
        Method::Srrlda => fit_srrlda(train, cfg.priors)?.predict(test.data())?.labels,
        Method::Ir => fit_diagonal_lda(train, cfg.priors)?.predict(test.data())?.labels,
        Method::Lda => fit_lda(train, cfg.priors)?.predict(test.data())?.labels,
        Method::Oracle => match &scenario.oracle {
            Some(spec) => bayes_oracle_predict(spec, test.data())?,
            None => return Ok(f64::NAN),
        },
    };
    Ok(error_rate(&labels, test.labels()))
}

fn run_replicate(cfg: &BenchConfig, id: u8, r: usize) -> Vec<ReplicateRecord> {
    let seed = cfg.replicate_seed(id, r);
    let spec = ScenarioSpec {
        id,
        p: cfg.p,
        train_per_class: cfg.train_per_class,
        test_per_class: cfg.test_per_class,
        seed,
    };
    let scenario = generate_scenario(&spec);
    let cv_seed = derive_seed(seed, 1);
    cfg.methods
        .iter()
        .map(|&method| {
            let outcome = scenario
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|s| method_error(method, s, cv_seed, cfg));
            let (error, note) = match outcome {
                Ok(e) if e.is_nan() => (e, Some("NA: no oracle for this scenario".to_string())),
                Ok(e) => (e, None),
                Err(err) => (f64::NAN, Some(format!("failed: {err}"))),
            };
            ReplicateRecord {
                scenario: id,
                method,
                replicate: r,
                error,
                seed,
                note,
            }
        })
        .collect()
}

fn summarize(cfg: &BenchConfig, records: &[ReplicateRecord]) -> Vec<MethodSummary> {
    let mut out = Vec::new();
    for &id in &cfg.scenarios {
        for &method in &cfg.methods {
            let errs: Vec<f64> = records
                .iter()
                .filter(|r| r.scenario == id && r.method == method)
                .map(|r| r.error)
                .collect();
            let valid: Vec<f64> = errs.iter().copied().filter(|e| !e.is_nan()).map(|e| 100.0 * e).collect();
            let failures = records
                .iter()
                .filter(|r| {
                    r.scenario == id && r.method == method && r.note.as_deref().is_some_and(|n| n.starts_with("failed"))
                })
                .count();
            let m = valid.len();
            let mean = if m == 0 {
                f64::NAN
            } else {
                valid.iter().sum::<f64>() / m as f64
            };
            let sd = if m < 2 {
                if m == 0 {
                    f64::NAN
                } else {
                    0.0
                }
            } else {
                (valid.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64).sqrt()
            };
            out.push(MethodSummary {
                scenario: id,
                method,
                mean_pct: mean,
                sd_pct: sd,
                valid: m,
                failures,
                single_replicate: m == 1,
            });
        }
    }
    out
}

/// Runs every (scenario, replicate) pair in parallel; the report does not depend
/// on the number of worker threads.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchmarkReport> {
    if cfg.replicates == 0 {
        return invalid("replicates must be at least 1");
    }
    if cfg.scenarios.is_empty() || cfg.methods.is_empty() {
        return invalid("at least one scenario and one method are required");
    }
    for &id in &cfg.scenarios {
        ScenarioSpec {
            id,
            p: cfg.p,
            train_per_class: cfg.train_per_class,
            test_per_class: cfg.test_per_class,
            seed: 0,
        }
        .validate()?;
    }
    let tasks: Vec<(u8, usize)> = cfg
        .scenarios
        .iter()
        .flat_map(|&id| (0..cfg.replicates).map(move |r| (id, r)))
        .collect();
    let records: Vec<ReplicateRecord> = tasks
        .par_iter()
        .map(|&(id, r)| run_replicate(cfg, id, r))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let summaries = summarize(cfg, &records);
    Ok(BenchmarkReport {
        config: cfg.clone(),
        records,
        summaries,
    })
}

fn fmt_cell(s: &MethodSummary) -> String {
    if s.mean_pct.is_nan() {
        "NA".to_string()
    } else {
        format!("{:.2}({:.2})", s.mean_pct, s.sd_pct)
    }
}

impl BenchmarkReport {
    pub fn summary(&self, scenario: u8, method: Method) -> Option<&MethodSummary> {
        self.summaries
            .iter()
            .find(|s| s.scenario == scenario && s.method == method)
    }

    /// Aligned text table: mean (and standard deviation) of test error in percent.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "# mean (standard deviation) of test error rates (%)");
        let _ = writeln!(
            out,
            "# p = {}, {} train / {} test per class, {} replicates, {}-fold CV, priors = {:?}",
            c.p, c.train_per_class, c.test_per_class, c.replicates, c.folds, c.priors
        );
        let _ = writeln!(out, "# master seed = {}, generator = {}", c.master_seed, GENERATOR_NAME);
        let _ = writeln!(
            out,
            "# replicate seed = derive_seed(master, scenario << 32 | replicate); random means (scenarios 2, 4) redrawn per replicate"
        );
        let _ = write!(out, "{:<11}", "");
        for m in &c.methods {
            let _ = write!(out, " {:>14}", m.name());
        }
        out.push('\n');
        for &id in &c.scenarios {
            let _ = write!(out, "{:<11}", format!("Scenario {id}"));
            for &m in &c.methods {
                let cell = self.summary(id, m).map(fmt_cell).unwrap_or_else(|| "NA".into());
                let _ = write!(out, " {:>14}", cell);
            }
            out.push('\n');
        }
        let singles = self.summaries.iter().any(|s| s.single_replicate);
        if singles {
            let _ = writeln!(out, "# note: single replicate, standard deviations reported as 0");
        }
        let failures: usize = self.summaries.iter().map(|s| s.failures).sum();
        if failures > 0 {
            let _ = writeln!(out, "# note: {failures} method fit(s) failed and were recorded as NaN");
        }
        out
    }

    /// CSV with columns `scenario,method,replicate,error,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,method,replicate,error,seed\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{},{}", r.scenario, r.method, r.replicate, r.error, r.seed);
        }
        out
    }
}
