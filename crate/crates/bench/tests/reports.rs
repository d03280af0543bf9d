use std::fs;
use std::path::{Path, PathBuf};

use wrw_bench::report::{strip_wall_time, Summary, SUMMARY_SCHEMA};
use wrw_bench::scenario::InitMode;
use wrw_bench::{emit_report, run_monte_carlo, Algorithm, MonteCarloOptions, MonteCarloResult, ScenarioConfig};

fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)).unwrap()
}

fn small_mismatch() -> ScenarioConfig {
    let mut cfg = scenario("mismatch.toml");
    cfg.runs = 6;
    cfg.steps = 60;
    cfg
}

fn run(cfg: &ScenarioConfig, workers: Option<usize>, oracle: bool) -> MonteCarloResult {
    run_monte_carlo(cfg, &MonteCarloOptions { workers, oracle }).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn summary_validates_against_the_schema() {
    let schema: serde_json::Value = serde_json::from_str(SUMMARY_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut fixed = small_mismatch();
    fixed.name = "fixed-init".into();
    fixed.filter.init = InitMode::Fixed;
    fixed.filter.x0 = Some(vec![90.0, 90.0, 40.0, 40.0]);
    for (cfg, oracle) in [
        (small_mismatch(), false),
        (scenario("linear_oracle.toml"), true),
        (fixed, false),
    ] {
        let out = dir.path().join(&cfg.name);
        emit_report(&run(&cfg, None, oracle), &out).unwrap();
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        let errors: Vec<String> = validator.iter_errors(&summary).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", cfg.name);
        assert_eq!(summary.get("oracle").is_some(), oracle);
    }
}

#[test]
fn schema_rejects_a_damaged_summary() {
    let schema: serde_json::Value = serde_json::from_str(SUMMARY_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let summary = Summary::from_result(&run(&small_mismatch(), None, false));
    let mut value = serde_json::to_value(&summary).unwrap();
    assert!(validator.is_valid(&value));
    value["results"]["cks"]["smoothed"]["avg_position_rmse"] = serde_json::json!(-1.0);
    assert!(!validator.is_valid(&value));
    value.as_object_mut().unwrap().remove("measurement_digest");
    assert!(!validator.is_valid(&value));
}

#[test]
fn csv_files_have_one_row_per_epoch_and_reproduce_the_averages() {
    let cfg = small_mismatch();
    let res = run(&cfg, None, false);
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&res, dir.path()).unwrap();
    assert_eq!(written.len(), 1 + 2 * cfg.algorithms.len());

    for (algo, result) in &res.results {
        let (header, rows) = read_csv(&dir.path().join(format!("rmse_{algo}.csv")));
        assert_eq!(header, ["epoch", "pos_rmse", "speed_rmse"]);
        assert_eq!(rows.len(), cfg.steps);
        let n = rows.len() as f64;
        let pos = rows.iter().map(|r| r[1]).sum::<f64>() / n;
        let speed = rows.iter().map(|r| r[2]).sum::<f64>() / n;
        assert!((pos - result.smoothed.avg_position_rmse).abs() <= 1e-12);
        assert!((speed - result.smoothed.avg_speed_rmse).abs() <= 1e-12);
        assert_eq!(rows.first().unwrap()[0], 1.0);

        let (header, rows) = read_csv(&dir.path().join(format!("trajectory_run0_{algo}.csv")));
        assert_eq!(header.len(), 9);
        assert_eq!(header[1], "truth_x1");
        assert_eq!(header[8], "est_x4");
        assert_eq!(rows.len(), cfg.steps);
    }
}

#[test]
fn summary_bytes_do_not_depend_on_worker_count() {
    let cfg = small_mismatch();
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for (i, workers) in [Some(1), Some(4), None].into_iter().enumerate() {
        let out = dir.path().join(i.to_string());
        emit_report(&run(&cfg, workers, false), &out).unwrap();
        summaries.push(strip_wall_time(&fs::read_to_string(out.join("summary.json")).unwrap()));
        for algo in &cfg.algorithms {
            let name = format!("rmse_{algo}.csv");
            assert_eq!(
                fs::read(out.join(&name)).unwrap(),
                fs::read(dir.path().join("0").join(&name)).unwrap()
            );
        }
    }
    assert!(summaries.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn algorithms_see_the_same_measurements_whatever_the_selection() {
    let mut cfg = small_mismatch();
    let all = run(&cfg, None, false);
    cfg.algorithms = vec![Algorithm::Wrwacrts];
    let one = run(&cfg, None, false);
    assert_eq!(all.measurement_digest, one.measurement_digest);
    assert_eq!(
        all.results[&Algorithm::Wrwacrts].smoothed.per_epoch_position_rmse,
        one.results[&Algorithm::Wrwacrts].smoothed.per_epoch_position_rmse
    );
    cfg.base_seed += 1;
    assert_ne!(run(&cfg, None, false).measurement_digest, one.measurement_digest);
}
