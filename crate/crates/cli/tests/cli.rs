use std::path::Path;
use std::process::{Command, Output};

use spcalda::scenarios::{generate_scenario, ScenarioSpec};
use spcalda_cli::io::write_dataset_csv;
use spcalda_cli::{load_csv, ModelFile, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn spcalda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spcalda")).args(args).output().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn write_toy(dir: &Path) -> String {
    let p = path(dir, "d0.csv");
    std::fs::write(&p, "x1,x2,class\n0,0,a\n2,0,a\n0,2,b\n2,2,b\n").unwrap();
    p
}

#[test]
fn fit_then_predict_recovers_training_labels() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path());
    let model = path(dir.path(), "m.json");
    let out = spcalda(&["fit", "--method", "spcalda", "--gamma", "4", "--q", "1", "--input", &data, "--label", "class", "--out", &model]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let out = spcalda(&["predict", "--model", &model, "--input", &data]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row,predicted,score_a,score_b");
    let predicted: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(predicted, vec!["a", "a", "b", "b"]);

    let file = ModelFile::from_json(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(file.class_labels, vec!["a", "b"]);
    assert_eq!(file.feature_names, vec!["x1", "x2"]);
}

#[test]
fn every_fixed_method_fits_the_toy_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path());
    let model = path(dir.path(), "m.json");
    for method in ["srrlda", "ir", "lda"] {
        let out = spcalda(&["fit", "--method", method, "--input", &data, "--label", "class", "--out", &model]);
        assert_eq!(out.status.code(), Some(EXIT_OK), "{method}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = spcalda(&["fit", "--method", "pcalda", "--q", "2", "--input", &data, "--label", "class", "--out", &model]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
}

#[test]
fn usage_and_data_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path());
    let model = path(dir.path(), "m.json");
    assert_eq!(spcalda(&["fit", "--bogus"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(spcalda(&["frobnicate"]).status.code(), Some(EXIT_USAGE));
    // spcalda without --q names the flag
    let out = spcalda(&["fit", "--gamma", "1", "--input", &data, "--label", "class", "--out", &model]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--q"));
    let out = spcalda(&["fit", "--method", "ir", "--gamma", "2", "--input", &data, "--label", "class", "--out", &model]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let out = spcalda(&["fit", "--gamma", "-1", "--q", "1", "--input", &data, "--label", "class", "--out", &model]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    // unknown label column is a configuration error
    let out = spcalda(&["fit", "--gamma", "1", "--q", "1", "--input", &data, "--label", "nope", "--out", &model]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));

    let broken = path(dir.path(), "broken.csv");
    std::fs::write(&broken, "x1,x2,class\n0,0,a\n2,,a\n0,2,b\n2,2,b\n").unwrap();
    let out = spcalda(&["fit", "--gamma", "1", "--q", "1", "--input", &broken, "--label", "class", "--out", &model]);
    assert_eq!(out.status.code(), Some(EXIT_DATA));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3, column 2"));
    let missing = path(dir.path(), "missing.csv");
    let out = spcalda(&["predict", "--model", &model, "--input", &missing]);
    assert_eq!(out.status.code(), Some(EXIT_DATA));

    let single = path(dir.path(), "single.csv");
    std::fs::write(&single, "x,label\n1,a\n2,b\n3,b\n").unwrap();
    let out = spcalda(&["fit", "--method", "ir", "--input", &single, "--out", &model]);
    assert_eq!(out.status.code(), Some(EXIT_DATA));
}

#[test]
fn simulated_scenarios_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    for id in [2u8, 5, 6] {
        let s = generate_scenario(&ScenarioSpec::new(id, 31).with_p(40)).unwrap();
        let file = dir.path().join(format!("s{id}.csv"));
        write_dataset_csv(&file, &s.train).unwrap();
        let back = load_csv(&file, "label").unwrap();
        assert_eq!(back.dataset.labels(), s.train.labels());
        let diff = (back.dataset.data() - s.train.data()).amax();
        assert!(diff <= 1e-15 * s.train.data().amax(), "scenario {id}: {diff}");
        assert_eq!(back.dataset.data(), s.train.data());
    }
}

#[test]
fn simulate_cv_and_model_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = path(dir.path(), "sim");
    let out = spcalda(&["simulate", "--scenario", "3", "--seed", "5", "--p", "60", "--out-dir", &out_dir]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let train = path(Path::new(&out_dir), "train.csv");
    let test = path(Path::new(&out_dir), "test.csv");
    let report = path(dir.path(), "cv.json");
    let model = path(dir.path(), "model.json");
    let args = ["cv", "--input", &train, "--seed", "3", "--qs", "1-8", "--out", &report, "--model-out", &model];
    let first = spcalda(&args);
    assert_eq!(first.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(String::from_utf8_lossy(&first.stdout).contains("selected: gamma ="));
    let report_a = std::fs::read_to_string(&report).unwrap();
    let second = spcalda(&[&args[..], &["--workers", "2"]].concat());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(report_a, std::fs::read_to_string(&report).unwrap());

    let out = spcalda(&["predict", "--model", &model, "--input", &test]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 101);

    let out = spcalda(&["cv", "--input", &train, "--method", "pcalda", "--gammas", "1,2"]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let out = spcalda(&["cv", "--input", &train, "--folds", "26"]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}

#[test]
fn verify_reports_all_checks_passing() {
    let out = spcalda(&["verify"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("all 15 checks passed"), "{text}");
    assert!(!text.contains("FAIL"));
}
