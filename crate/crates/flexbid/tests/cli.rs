use std::path::Path;
use std::process::{Command, Output};

use flexbid::manifest::RunManifest;

fn flexbid(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexbid"))
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(workdir: &Path, args: &[&str]) -> String {
    let out = flexbid(workdir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails_with(workdir: &Path, args: &[&str], code: i32) -> String {
    let out = flexbid(workdir, args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stderr).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// Hours 3-6 at 25 EUR/MWh, everything else at 33.
fn two_level_prices(dir: &Path) {
    let mut text = String::from("hour,price_eur_mwh\n");
    for h in 0..12 {
        text.push_str(&format!("{h},{}\n", if (3..=6).contains(&h) { 25 } else { 33 }));
    }
    write(dir, "prices.csv", &text);
}

#[test]
fn single_order_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    write(w, "fos.csv", "id,t_es,t_ls,profile\n1,1,4,3.7;3.7;3.7;3.7\n");
    two_level_prices(w);
    ok(w, &["aggregate", "--fos", "fos.csv", "--variant", "sa", "--lot", "3.7"]);
    ok(w, &["settle", "--fos", "fos.csv", "--afos", "afos_sa.csv", "--prices", "prices.csv", "--lot", "3.7"]);
    let report: serde_json::Value = serde_json::from_str(&read(w, "afos_sa.report.json")).unwrap();
    assert!((report["flexorder_cost"].as_f64().unwrap() - 0.37).abs() < 1e-12);
    assert!((report["plugin_cost"].as_f64().unwrap() - 0.4292).abs() < 1e-12);
    assert_eq!(report["settlements"][0]["activation_start"], 3);
    let plot = read(w, "afos_sa.plot.csv");
    assert_eq!(plot.lines().next().unwrap(), "hour,price_eur_mwh,plugin_mw,optimal_mw,flexorder_mw");
}

#[test]
fn zero_prices_give_zero_costs() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    write(w, "fos.csv", "id,t_es,t_ls,profile\n1,1,4,3.7;3.7\n2,0,2,1.0\n");
    let zeros: String = (0..10).map(|h| format!("{h},0\n")).collect();
    write(w, "prices.csv", &format!("hour,price_eur_mwh\n{zeros}"));
    ok(w, &["aggregate", "--fos", "fos.csv", "--variant", "sa", "--lot", "3.7"]);
    ok(w, &["settle", "--fos", "fos.csv", "--afos", "afos_sa.csv", "--prices", "prices.csv", "--lot", "3.7"]);
    let report: serde_json::Value = serde_json::from_str(&read(w, "afos_sa.report.json")).unwrap();
    for key in ["plugin_cost", "flexorder_cost", "optimal_cost", "cost_reduction_pct"] {
        assert_eq!(report[key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn size_ladder_writes_one_file_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    ok(w, &["generate", "--sizes", "50:200:50", "--seed", "3"]);
    for n in [50, 100, 150, 200] {
        let text = read(w, &format!("fleet_{n}.csv"));
        assert_eq!(text.lines().count(), n + 1);
        assert!(w.join(format!("fleet_{n}.meta.json")).exists());
    }
    let manifest: RunManifest = serde_json::from_str(&read(w, "fleet_all.manifest.json")).unwrap();
    assert_eq!(manifest.outputs.len(), 8);
    assert!(manifest.stale_outputs(w).is_empty());
}

#[test]
fn json_fleet_round_trips_through_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    ok(w, &["generate", "--n", "300", "--seed", "9", "--out", "fleet.json"]);
    ok(w, &["aggregate", "--fos", "fleet.json", "--variant", "lp"]);
    let stats: serde_json::Value = serde_json::from_str(&read(w, "afos_lp.stats.json")).unwrap();
    assert_eq!(stats["offers"], 300);
}

#[test]
fn commands_are_reproducible() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut manifests = Vec::new();
    for d in &dirs {
        let w = d.path();
        ok(w, &["prices", "--day", "35", "--night", "22"]);
        ok(w, &["generate", "--n", "400", "--seed", "5"]);
        ok(w, &["aggregate", "--fos", "fleet.csv", "--variant", "dp"]);
        ok(w, &["settle", "--fos", "fleet.csv", "--afos", "afos_dp.csv", "--prices", "prices.csv"]);
        ok(w, &["dropout", "--fos", "fleet.csv", "--afos", "afos_dp.csv", "--prices", "prices.csv", "--seed", "1"]);
        let mut per_dir = Vec::new();
        for m in ["fleet.manifest.json", "afos_dp.manifest.json", "afos_dp.report.manifest.json", "dropout.manifest.json"] {
            let mut manifest: RunManifest = serde_json::from_str(&read(w, m)).unwrap();
            manifest.wall_ms = 0;
            per_dir.push(manifest);
        }
        manifests.push(per_dir);
    }
    assert_eq!(manifests[0], manifests[1]);
    for name in ["fleet.csv", "afos_dp.csv", "afos_dp.report.json", "afos_dp.plot.csv", "dropout.csv"] {
        assert_eq!(read(dirs[0].path(), name), read(dirs[1].path(), name), "{name}");
    }
}

#[test]
fn compare_exports_every_series() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    ok(w, &["prices", "--day", "35", "--night", "22"]);
    ok(w, &["generate", "--n", "300", "--seed", "2"]);
    ok(w, &["compare", "--fos", "fleet.csv", "--prices", "prices.csv"]);
    let plot = read(w, "compare.plot.csv");
    assert_eq!(
        plot.lines().next().unwrap(),
        "hour,price_eur_mwh,plugin_mw,optimal_mw,sa_mw,sag_mw,lp_mw,dp_mw,dtf_mw"
    );
    assert_eq!(plot.lines().count(), 49);
    let summary: Vec<serde_json::Value> = serde_json::from_str(&read(w, "compare.json")).unwrap();
    assert_eq!(summary.len(), 5);
}

#[test]
fn yearly_sweep_needs_a_full_year() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    ok(w, &["generate", "--n", "100", "--seed", "4"]);
    ok(w, &["prices", "--day", "35", "--night", "22", "--horizon", "8760", "--out", "year.csv"]);
    ok(w, &["sweep-year", "--fos", "fleet.csv", "--prices", "year.csv", "--variant", "lp"]);
    let csv = read(w, "sweep_lp.csv");
    assert_eq!(csv.lines().count(), 365);
    // Identical days give identical periods.
    let values: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(values.iter().all(|v| *v == values[0]));

    ok(w, &["prices", "--day", "35", "--night", "22", "--horizon", "48", "--out", "short.csv"]);
    let err = fails_with(w, &["sweep-year", "--fos", "fleet.csv", "--prices", "short.csv", "--variant", "lp"], 2);
    assert!(err.starts_with("ERROR 2:"), "{err}");
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    // Missing seed is a usage error.
    fails_with(w, &["generate", "--n", "10"], 2);
    write(w, "bad.toml", "[fleet]\ncapacity_mn = 3\n");
    let err = fails_with(w, &["generate", "--n", "10", "--seed", "1", "--config", "bad.toml"], 2);
    assert!(err.contains("capacity_mn"), "{err}");
    write(w, "bad2.toml", "[fleet]\ncharge_power = { fixed = 50.0 }\n");
    let err = fails_with(w, &["generate", "--n", "10", "--seed", "1", "--config", "bad2.toml"], 2);
    assert!(err.contains("charge_power"), "{err}");

    ok(w, &["generate", "--n", "20", "--seed", "1"]);
    fails_with(w, &["aggregate", "--fos", "fleet.csv", "--variant", "best"], 2);
    ok(w, &["aggregate", "--fos", "fleet.csv", "--variant", "lp"]);
    write(w, "short.csv", "hour,price_eur_mwh\n0,10\n1,10\n");
    let err = fails_with(w, &["settle", "--fos", "fleet.csv", "--afos", "afos_lp.csv", "--prices", "short.csv"], 2);
    assert!(err.starts_with("ERROR 2:"), "{err}");
    ok(w, &["prices", "--day", "35", "--night", "22"]);
    fails_with(
        w,
        &["dropout", "--fos", "fleet.csv", "--afos", "afos_lp.csv", "--prices", "prices.csv", "--seed", "1", "--q-grid", "0,1.5"],
        2,
    );
}

#[test]
fn oracle_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    write(
        w,
        "small.csv",
        "id,t_es,t_ls,profile\n1,1,5,1;1\n2,2,3,1;1\n3,4,5,1\n",
    );
    ok(w, &["oracle", "--fos", "small.csv", "--lot", "2", "--tolerance", "0"]);
    let res: serde_json::Value = serde_json::from_str(&read(w, "oracle.json")).unwrap();
    assert_eq!(res["best_energy"].as_f64(), Some(4.0));
    let err = fails_with(w, &["oracle", "--fos", "small.csv", "--lot", "2", "--tolerance", "0", "--budget", "3"], 3);
    assert!(err.starts_with("ERROR 3:"), "{err}");
}

#[test]
fn infeasible_fleet_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    write(
        w,
        "tight.toml",
        "[fleet]\nmax_retries = 3\narrival = { mean = 20.0, sd = 0.0, lo = 19.0, hi = 21.0 }\ndeparture = { mean = 20.0, sd = 0.0, lo = 19.0, hi = 21.0 }\n",
    );
    fails_with(w, &["generate", "--n", "5", "--seed", "1", "--config", "tight.toml"], 3);
}
