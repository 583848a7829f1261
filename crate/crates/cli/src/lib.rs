//! Command-line front end: CSV ingestion, model files, cross validation,
//! scenario simulation, the Monte-Carlo benchmark and the verifier battery.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

pub mod error;
pub mod io;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use spcalda::classifiers::{fit_diagonal_lda, fit_lda, fit_pcalda, fit_spcalda, fit_srrlda};
use spcalda::scenarios::{generate_scenario, run_benchmark, BenchConfig, ScenarioSpec};
use spcalda::selection::{cv_select, default_q_grid, CvGrid, DEFAULT_FOLDS};
use spcalda::theory::run_battery;
use spcalda::{Gamma, Method, PriorsMode};

pub use error::{CliError, EXIT_DATA, EXIT_OK, EXIT_USAGE};
pub use io::{load_csv, load_features, CsvDataset, ModelFile};

#[derive(Debug, Parser)]
#[command(name = "spcalda", version, about = "Supervised-PCA reduced-rank LDA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a classifier on a labelled CSV file and write a model file.
    Fit(FitArgs),
    /// Score a CSV file with a saved model.
    Predict(PredictArgs),
    /// Select (gamma, q) by stratified k-fold cross validation.
    Cv(CvArgs),
    /// Write the train and test splits of one simulation scenario.
    Simulate(SimulateArgs),
    /// Run the Monte-Carlo benchmark over the simulation scenarios.
    Bench(BenchArgs),
    /// Run the built-in numerical verifier battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Labelled CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    pub label: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// spcalda, pcalda, srrlda, ir or lda.
    #[arg(long, default_value = "spcalda")]
    pub method: String,
    /// Label weight; a positive number or "inf" (spcalda only).
    #[arg(long)]
    pub gamma: Option<String>,
    /// Number of projection directions (spcalda and pcalda).
    #[arg(long)]
    pub q: Option<usize>,
    /// empirical or equal.
    #[arg(long, default_value = "empirical")]
    pub priors: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV file containing the model's feature columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// spcalda or pcalda.
    #[arg(long, default_value = "spcalda")]
    pub method: String,
    /// Comma-separated gamma grid, e.g. "0.5,1,4,inf".
    #[arg(long)]
    pub gammas: Option<String>,
    /// q grid as a list "1,2,5" or a range "1-10".
    #[arg(long)]
    pub qs: Option<String>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "empirical")]
    pub priors: String,
    /// CV report (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model refitted at the selected pair.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario id in 1..=6.
    #[arg(long)]
    pub scenario: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub p: usize,
    #[arg(long, default_value_t = 25)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 25)]
    pub test_per_class: usize,
    /// Directory receiving train.csv and test.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenario ids: a range "1-6" or a list "1,3,5".
    #[arg(long, default_value = "1-6")]
    pub scenarios: String,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 25)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 25)]
    pub test_per_class: usize,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    /// Comma-separated methods.
    #[arg(long, default_value = "spcalda,pcalda,srrlda,ir,oracle")]
    pub methods: String,
    #[arg(long, default_value = "empirical")]
    pub priors: String,
    /// Full-size run: p = 500 and 100 replicates unless overridden.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Text report path (also printed to standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-replicate CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{flag}: {msg}"))
}

fn parse_priors(s: &str) -> Result<PriorsMode, CliError> {
    s.parse().map_err(|e| usage("--priors", e))
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    s.parse().map_err(|e| usage("--method", e))
}

fn parse_gamma(s: &str, flag: &str) -> Result<Gamma, CliError> {
    let g: Gamma = s.trim().parse().map_err(|e| usage(flag, e))?;
    g.validate().map_err(|e| usage(flag, e))?;
    Ok(g)
}

/// Parses "a-b" as an inclusive range or "a,b,c" as a list.
pub fn parse_index_list(s: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    let bad = |_| usage(flag, format!("cannot parse {s:?}"));
    let s = s.trim();
    let values: Vec<usize> = if let Some((a, b)) = s.split_once('-') {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
        if a > b {
            return Err(usage(flag, format!("empty range {s:?}")));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(bad)).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(usage(flag, "empty list"));
    }
    Ok(values)
}

fn with_workers<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(usage("--workers", "must be at least 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::Io(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_fit(args: &FitArgs) -> Result<String, CliError> {
    let method = parse_method(&args.method)?;
    let priors = parse_priors(&args.priors)?;
    let gamma = args.gamma.as_deref().map(|g| parse_gamma(g, "--gamma")).transpose()?;
    let data = load_csv(&args.input.input, &args.input.label)?;
    data.require_fit_ready()?;
    let ds = &data.dataset;
    let model = match method {
        Method::Spcalda => {
            let gamma = gamma.ok_or_else(|| usage("--gamma", "required for spcalda (use cv to select it)"))?;
            let q = args.q.ok_or_else(|| usage("--q", "required for spcalda"))?;
            fit_spcalda(ds, gamma, q, priors)?
        }
        Method::Pcalda => {
            if gamma.is_some() {
                return Err(usage("--gamma", "pcalda fixes gamma = 1"));
            }
            let q = args.q.ok_or_else(|| usage("--q", "required for pcalda"))?;
            fit_pcalda(ds, q, priors)?
        }
        Method::Srrlda | Method::Ir | Method::Lda => {
            if gamma.is_some() {
                return Err(usage("--gamma", format!("not used by {method}")));
            }
            if args.q.is_some() {
                return Err(usage("--q", format!("not used by {method}")));
            }
            match method {
                Method::Srrlda => fit_srrlda(ds, priors)?,
                Method::Ir => fit_diagonal_lda(ds, priors)?,
                _ => fit_lda(ds, priors)?,
            }
        }
        Method::Oracle => return Err(usage("--method", "the oracle needs the true parameters and cannot be fitted")),
    };
    let file = ModelFile::new(&data, model);
    io::write_text(&args.out, &file.to_json()?)?;
    Ok(format!(
        "fitted {} on n = {}, p = {}, K = {}; model written to {}\n",
        method,
        ds.n(),
        ds.p(),
        ds.num_classes(),
        args.out.display()
    ))
}

fn cmd_predict(args: &PredictArgs) -> Result<String, CliError> {
    let file = ModelFile::from_json(&io::read_text(&args.model)?)?;
    let x = load_features(&args.input, &file.feature_names)?;
    let prediction = file.model.predict(&x)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row".to_string(), "predicted".to_string()];
    header.extend(file.class_labels.iter().map(|l| format!("score_{l}")));
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (i, &label) in prediction.labels.iter().enumerate() {
        let mut row = vec![i.to_string(), file.class_labels[label - 1].clone()];
        row.extend(prediction.scores.row(i).iter().map(|&s| io::format_f64(s)));
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))?;
    match &args.out {
        Some(path) => {
            io::write_text(path, &text)?;
            Ok(format!("{} predictions written to {}\n", prediction.labels.len(), path.display()))
        }
        None => Ok(text),
    }
}

fn cmd_cv(args: &CvArgs) -> Result<String, CliError> {
    let method = parse_method(&args.method)?;
    if !matches!(method, Method::Spcalda | Method::Pcalda) {
        return Err(usage("--method", "cross validation supports spcalda and pcalda"));
    }
    let priors = parse_priors(&args.priors)?;
    let gammas = match &args.gammas {
        Some(list) => {
            if method == Method::Pcalda {
                return Err(usage("--gammas", "pcalda fixes gamma = 1"));
            }
            list.split(',').map(|g| parse_gamma(g, "--gammas")).collect::<Result<Vec<_>, _>>()?
        }
        None => spcalda::selection::default_gamma_grid(),
    };
    let data = load_csv(&args.input.input, &args.input.label)?;
    data.require_fit_ready()?;
    let ds = &data.dataset;
    let qs = match &args.qs {
        Some(list) => parse_index_list(list, "--qs")?,
        None => default_q_grid(ds.n(), ds.num_classes(), ds.p()),
    };
    let grid = CvGrid {
        gammas,
        qs,
        folds: args.folds,
        seed: args.seed,
    };
    grid.validate(ds).map_err(|e| usage("--folds/--qs/--gammas", e))?;
    let (report, model) = with_workers(args.workers, || cv_select(ds, &grid, method, priors))??;
    if let Some(path) = &args.out {
        io::write_text(path, &report.to_json()?)?;
    }
    if let Some(path) = &args.model_out {
        io::write_text(path, &ModelFile::new(&data, model).to_json()?)?;
    }
    Ok(report.table())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let spec = ScenarioSpec {
        id: args.scenario,
        p: args.p,
        train_per_class: args.train_per_class,
        test_per_class: args.test_per_class,
        seed: args.seed,
    };
    spec.validate().map_err(|e| usage("--scenario/--p", e))?;
    let scenario = generate_scenario(&spec)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Io(e.to_string()))?;
    io::write_dataset_csv(&args.out_dir.join("train.csv"), &scenario.train)?;
    io::write_dataset_csv(&args.out_dir.join("test.csv"), &scenario.test)?;
    Ok(format!(
        "scenario {} (p = {}, seed = {}) written to {}\n",
        spec.id,
        spec.p,
        spec.seed,
        args.out_dir.display()
    ))
}

/// Builds the benchmark configuration from the flags.
pub fn bench_config(args: &BenchArgs) -> Result<BenchConfig, CliError> {
    let base = if args.full {
        BenchConfig::full(args.seed)
    } else {
        BenchConfig::desk(args.seed)
    };
    let scenarios = parse_index_list(&args.scenarios, "--scenarios")?;
    if let Some(bad) = scenarios.iter().find(|&&s| !(1..=6).contains(&s)) {
        return Err(usage("--scenarios", format!("scenario {bad} outside 1-6")));
    }
    let methods = args
        .methods
        .split(',')
        .map(|m| parse_method(m.trim()).map_err(|_| usage("--methods", format!("unknown method {m:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = BenchConfig {
        scenarios: scenarios.into_iter().map(|s| s as u8).collect(),
        methods,
        replicates: args.replicates.unwrap_or(base.replicates),
        master_seed: args.seed,
        p: args.p.unwrap_or(base.p),
        train_per_class: args.train_per_class,
        test_per_class: args.test_per_class,
        folds: args.folds,
        priors: parse_priors(&args.priors)?,
    };
    if cfg.replicates == 0 {
        return Err(usage("--replicates", "must be at least 1"));
    }
    if cfg.p == 0 || !cfg.p.is_multiple_of(4) {
        return Err(usage("--p", "must be a positive multiple of 4"));
    }
    if cfg.folds < 2 || cfg.folds > cfg.train_per_class {
        return Err(usage("--folds", "must lie in 2..=train-per-class"));
    }
    Ok(cfg)
}

fn cmd_bench(args: &BenchArgs) -> Result<String, CliError> {
    let cfg = bench_config(args)?;
    let report = with_workers(args.workers, || run_benchmark(&cfg))??;
    let text = report.to_text();
    if let Some(path) = &args.out {
        io::write_text(path, &text)?;
    }
    if let Some(path) = &args.csv {
        io::write_text(path, &report.to_csv())?;
    }
    Ok(text)
}

fn cmd_verify(args: &VerifyArgs) -> Result<String, CliError> {
    let results = run_battery(args.seed);
    let mut text = String::new();
    for r in &results {
        let relation = if r.expect_above { ">" } else { "<" };
        text.push_str(&format!(
            "{} {:<42} {:>12.3e} {relation} {:.0e}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.measured,
            r.threshold
        ));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Data(format!("{failed} verifier check(s) failed\n{text}")));
    }
    text.push_str(&format!("all {} checks passed\n", results.len()));
    Ok(text)
}

/// Runs a parsed command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let text = match &cli.command {
        Command::Fit(a) => cmd_fit(a)?,
        Command::Predict(a) => cmd_predict(a)?,
        Command::Cv(a) => cmd_cv(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Bench(a) => cmd_bench(a)?,
        Command::Verify(a) => cmd_verify(a)?,
    };
    emit(out, &text)
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
