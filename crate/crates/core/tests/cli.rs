//! Command-line behaviour: exit codes, precedence, outputs and manifests.

mod common;

use std::fs;
use std::path::Path;

use common::cli;

fn synth_into(dir: &Path, days: &str) -> String {
    let data = dir.join("u.csv").display().to_string();
    let (code, _, err) = cli(&["synth", "--stocks", "16", "--pairs", "3", "--days", days, "--seed", "3", "--out", &data]);
    assert_eq!(code, 0, "{err}");
    data
}

fn manifest_lines(path: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn help_and_usage_errors() {
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("Exit codes"));
    assert_eq!(cli(&["frobnicate"]).0, 2);
    assert_eq!(cli(&["backtest", "--pairs", "many"]).0, 2);
    assert_eq!(cli(&[]).0, 2);
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.cfg");
    fs::write(&bad_cfg, "colour = blue\n").unwrap();
    assert_eq!(cli(&["backtest", "--config", bad_cfg.to_str().unwrap()]).0, 3);
    assert_eq!(cli(&["backtest", "--threshold=-1", "--data", "x.csv"]).0, 3);

    let missing = dir.path().join("missing.csv");
    assert_eq!(cli(&["backtest", "--data", missing.to_str().unwrap()]).0, 4);
    let garbage = dir.path().join("garbage.csv");
    fs::write(&garbage, "date,ticker,close,volume\n2020-01-01,A,-3,10\n").unwrap();
    assert_eq!(cli(&["backtest", "--data", garbage.to_str().unwrap()]).0, 4);

    let short = synth_into(dir.path(), "200");
    let out = dir.path().join("o").display().to_string();
    let (code, _, err) = cli(&["backtest", "--data", &short, "--out", &out]);
    assert_eq!(code, 5, "{err}");

    let returns = dir.path().join("r.csv");
    fs::write(&returns, "date,return\n2020-01-02,0.1\n2020-01-01,0.2\n").unwrap();
    assert_eq!(cli(&["report", "--returns", returns.to_str().unwrap(), "--out", &out]).0, 7);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path(), "600");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("# base run\ndata = {data}\nthreshold = 1.5\npairs = 4\nlag = 0\n")).unwrap();
    let out = dir.path().join("bt");
    let (code, _, err) = cli(&["backtest", "--config", cfg.to_str().unwrap(), "--pairs", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let run = &manifest_lines(&out.join("backtest.manifest.jsonl"))[0];
    assert_eq!(run["config"]["pairs"], "6");
    assert_eq!(run["config"]["threshold"], "1.5");
    assert_eq!(run["config"]["lag"], "0");
    assert_eq!(run["config"]["multiplier"], "1");
    assert_eq!(run["config"]["data"], "u.csv");
}

#[test]
fn show_config_prints_default_subperiods() {
    let (code, out, _) = cli(&["report", "--show-config"]);
    assert_eq!(code, 0);
    for needle in ["1990-01-01,", "2000-03-01,", "2002-10-01,", "2007-08-01,", "2009-06-01,", "2020-02-20,", "method = distance"] {
        assert!(out.contains(needle), "missing {needle} in\n{out}");
    }
    for cost in [",35,", ",30,", ",26,"] {
        assert!(out.contains(cost));
    }
}

#[test]
fn backtest_writes_files_listed_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path(), "700");
    let out = dir.path().join("bt");
    let (code, stdout, err) = cli(&["backtest", "--data", &data, "--out", out.to_str().unwrap(), "--method", "coint", "--pairs", "5"]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("coint-base"));
    let lines = manifest_lines(&out.join("backtest.manifest.jsonl"));
    let files: Vec<&serde_json::Value> = lines.iter().filter(|l| l["kind"] == "file").collect();
    let names: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    for name in ["returns.csv", "ledger.csv", "pairs.csv", "report.csv"] {
        assert!(names.contains(&name), "{names:?}");
    }
    for f in files {
        let bytes = fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(f["sha256"].as_str().unwrap(), pairtrade::cli::sha256_hex(&bytes));
    }
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.starts_with("scenario,subperiod,mean_monthly,annualized_sharpe,excess_monthly,n_trades,n_months\n"));
    assert!(report.lines().last().unwrap().starts_with("coint-base,Total,"));
}

#[test]
fn report_recomputes_backtest_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path(), "700");
    let bt = dir.path().join("bt");
    assert_eq!(cli(&["backtest", "--data", &data, "--out", bt.to_str().unwrap()]).0, 0);
    let rep = dir.path().join("rep");
    let (code, _, err) = cli(&[
        "report",
        "--data",
        &data,
        "--returns",
        bt.join("returns.csv").to_str().unwrap(),
        "--ledger",
        bt.join("ledger.csv").to_str().unwrap(),
        "--scenario",
        "distance-base",
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(fs::read_to_string(rep.join("summary.csv")).unwrap(), fs::read_to_string(bt.join("report.csv")).unwrap());
}

#[test]
fn sensitivity_and_grid_run_on_small_grids() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path(), "800");
    let out = dir.path().join("s");
    let common = ["--data", &data, "--grid-pairs", "2,4", "--grid-thresholds", "1,2", "--grid-multipliers", "0.5,1"];
    let mut args = vec!["sensitivity", "--out", out.to_str().unwrap(), "--cost-levels", "0,50", "--lags", "0,1", "--top-k", "2"];
    args.extend(common);
    let (code, _, err) = cli(&args);
    assert_eq!(code, 0, "{err}");
    let table = fs::read_to_string(out.join("sensitivity.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "cost_bps,lag0_n_pairs,lag0_threshold,lag0_multiplier,lag0_confidence,lag1_n_pairs,lag1_threshold,lag1_multiplier,lag1_confidence"
    );
    assert_eq!(lines.count(), 2);

    let out = dir.path().join("g");
    let mut args = vec!["grid", "--out", out.to_str().unwrap()];
    args.extend(common);
    let (code, stdout, err) = cli(&args);
    assert_eq!(code, 0, "{err}");
    assert_eq!(fs::read_to_string(out.join("grid.csv")).unwrap().lines().count(), 1 + 8);
    for scenario in ["distance-base", "distance-best", "distance-finetuned"] {
        assert!(stdout.contains(scenario));
    }
}

#[test]
fn synth_writes_panel_pairs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path(), "50");
    let pairs = fs::read_to_string(dir.path().join("u.pairs.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 4);
    let lines = manifest_lines(&dir.path().join("u.manifest.jsonl"));
    assert_eq!(lines[0]["command"], "synth");
    assert_eq!(lines[0]["config"]["seed"], "3");
    let panel = pairtrade::marketdata::load_price_panel(&data).unwrap();
    assert_eq!(panel.n_tickers(), 17);
    assert_eq!(panel.n_dates(), 50);
}
