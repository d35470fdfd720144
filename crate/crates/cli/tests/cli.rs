use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bundleduel"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("BUNDLEDUEL_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

#[test]
fn analyze_binary_item() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["analyze", &config("binary100.dist")], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(dir.path().join("analysis.json"));
    assert_eq!(doc["schema"], 1);
    let item = &doc["items"][0];
    assert_eq!(item["myerson_price"], 100.0);
    assert!((item["revenue"].as_f64().unwrap() - 10.0).abs() < 1e-12);
    assert!((item["truncated_mean"].as_f64().unwrap() - 10.0).abs() < 1e-12);
}

#[test]
fn analyze_pair_and_equal_revenue() {
    let dir = tempfile::tempdir().unwrap();
    let f = config("binary100.dist");
    let out = run(&["analyze", &f, &f], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(dir.path().join("analysis.json"))["benchmark"]["k"], 1.0);

    let f = config("equal_revenue.dist");
    let out = run(&["analyze", &f, &f], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = json(dir.path().join("analysis.json"));
    assert_eq!(doc["benchmark"]["hypothesis_ok"], false);
    let reasons = doc["benchmark"]["hypotheses"]["reasons"].as_array().unwrap();
    assert!(reasons.iter().any(|r| r == "lambda=0"), "{reasons:?}");
}

#[test]
fn parse_errors_exit_3_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dist");
    fs::write(&bad, "# grid_step=1 max_value=4\n1\t0.5\n2 x\n").unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[solver]\nseedz = [1]\n").unwrap();
    let out = run(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn single_pair_has_one_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--config", &config("single_pair.toml")], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(dir.path().join("summary.json"));
    assert_eq!(s["schema"], 1);
    assert_eq!(s["equilibria"], 1);
    assert_eq!(s["dominance_unique"], true);
    assert_eq!(s["welfare_bound_holds"], true);
    assert!(s["min_revenue"].as_f64().unwrap() >= 1.0);
    let cert = json(dir.path().join("certificates/equilibrium-001.json"));
    assert_eq!(cert["schema"], 1);
    assert_eq!(cert["epsilon"], 0.0);
    assert!(!dir.path().join("certificates/equilibrium-002.json").exists());
}

#[test]
fn point_masses_admit_the_coordination_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--config", &config("point_mass.toml")], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let s = json(dir.path().join("summary.json"));
    assert_eq!(s["min_revenue"], 0.0);
    let n = s["equilibria"].as_u64().unwrap();
    let found = (1..=n).any(|j| {
        let c = json(dir.path().join(format!("certificates/equilibrium-{j:03}.json")));
        c["principal_revenue"] == 0.0
            && c["profile"].as_array().unwrap().iter().all(|s| s["prices"] == serde_json::json!([0.5]) && s["probs"] == serde_json::json!([1.0]))
    });
    assert!(found, "no certificate at (0.5, 0.5, 0.5)");
}

#[test]
fn pair_bundles_compose_block_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--config", &config("pair_bundles.toml")], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(dir.path().join("summary.json"));
    assert_eq!(s["blocks"].as_array().unwrap().len(), 2);
    assert!(s["min_revenue"].as_f64().unwrap() >= 2.0);
    assert!(dir.path().join("blocks/block-1-equilibrium-001.json").exists());
    assert!(dir.path().join("blocks/block-2-equilibrium-001.json").exists());
    let composed = json(dir.path().join("certificates/equilibrium-001.json"));
    assert_eq!(composed["epsilon"], 0.0);
}

#[test]
fn sweep_writes_csv_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(
        &cfg,
        "[instance]\nkind = \"counterexample\"\nk = 3\nn = 2\nstep = 1.0\n\n[sweep]\nprices = [5.0, 30.0, 200.0, 2187.0, 3000.0]\n",
    )
    .unwrap();
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("price,min_rev,max_rev,n_equilibria,bound_36_flag"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(r[4], "true");
        let price: f64 = r[0].parse().unwrap();
        if price >= 2187.0 {
            assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
        }
    }
    let plot = json(dir.path().join("plot.json"));
    assert_eq!(plot["points"].as_array().unwrap().len(), 5);
}

#[test]
fn proptest_suites_pass_and_reject_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["eq3", "thm3", "berry_esseen"] {
        let out = run(&["proptest", suite, "--trials", "30", "--seed", "11"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&out.stdout));
        let rep = json(dir.path().join(format!("proptest-{suite}.json")));
        assert_eq!(rep["passed"], true);
        assert_eq!(rep["seed"], 11);
    }
    let out = run(&["proptest", "nope"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(&["solve", "--config", &config("point_mass.toml"), "--seed", "7"], d.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let s1 = fs::read(a.path().join("summary.json")).unwrap();
    let s2 = fs::read(b.path().join("summary.json")).unwrap();
    assert_eq!(s1, s2);
    let c1 = fs::read(a.path().join("certificates/equilibrium-010.json")).unwrap();
    let c2 = fs::read(b.path().join("certificates/equilibrium-010.json")).unwrap();
    assert_eq!(c1, c2);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_bundleduel"))
        .args(["analyze", &config("binary100.dist")])
        .env("BUNDLEDUEL_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("analysis.json").exists());
}
