use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Run {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Run {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        Self { _tmp: tmp, root }
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.root.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn rbdo(&self, args: &[&str], config: &Path, out: &str) -> Output {
        Command::new(env!("CARGO_BIN_EXE_rbdo"))
            .args(args)
            .arg("--config")
            .arg(config)
            .arg("--out")
            .arg(self.root.join(out))
            .output()
            .unwrap()
    }

    fn read(&self, path: &str) -> String {
        std::fs::read_to_string(self.root.join(path)).unwrap()
    }

    fn json(&self, path: &str) -> Value {
        serde_json::from_str(&self.read(path)).unwrap()
    }

    /// Data rows of a table as numbers, header and manifest line skipped.
    fn table(&self, path: &str) -> (Vec<String>, Vec<Vec<f64>>) {
        let text = self.read(path);
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# manifest "));
        let header = lines.next().unwrap().split('\t').map(String::from).collect();
        let rows = lines
            .map(|l| l.split('\t').map(|v| v.parse().unwrap_or(f64::NAN)).collect())
            .collect();
        (header, rows)
    }
}

const LINEAR: &str = "seed = 1\n[problem]\nkind = \"benchmark\"\nname = \"linear\"\nbeta = 3.0\n";
const CLOSED_FORM: &str = "seed = 1\n[problem]\nkind = \"benchmark\"\nname = \"rbdo-closed-form\"\n";

#[test]
fn missing_field_exits_with_config_error() {
    let run = Run::new();
    let c = run.config("c.toml", "[problem]\nkind = \"benchmark\"\nname = \"linear\"\n");
    let out = run.rbdo(&["reliability"], &c, "o");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    let c = run.config("d.toml", &format!("{LINEAR}colour = 1\n"));
    assert_eq!(run.rbdo(&["reliability"], &c, "o").status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    // A negative radius makes the hull limit states undefined everywhere.
    let run = Run::new();
    let c = run.config(
        "c.toml",
        "seed = 1\n[problem]\nkind = \"hull\"\n[[variables]]\nname = \"R\"\nfamily = \"deterministic\"\nmean = -1.0\n",
    );
    let out = run.rbdo(&["reliability"], &c, "o");
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(run.json("o/manifest.json")["status"], "failed");
}

#[test]
fn linear_reliability_matches_gaussian_tail() {
    let run = Run::new();
    let c = run.config("c.toml", LINEAR);
    assert!(run.rbdo(&["reliability"], &c, "a").status.success());
    let r = run.json("a/result.json");
    let pf = r["pf"].as_f64().unwrap();
    let cov = r["cov"].as_f64().unwrap();
    let exact = 1.3499e-3;
    assert!((pf - exact).abs() <= 3.0 * cov * exact, "{pf}");
    assert_eq!(r["manifest"], run.json("a/manifest.json")["manifest"]);

    // Same configuration again, with another thread count: same bytes.
    let out = Command::new(env!("CARGO_BIN_EXE_rbdo"))
        .args(["reliability", "--threads", "3", "--config"])
        .arg(&c)
        .arg("--out")
        .arg(run.root.join("b"))
        .output()
        .unwrap();
    assert!(out.status.success());
    for f in ["result.json", "levels.tsv", "samples_summary.tsv", "manifest.json"] {
        assert_eq!(run.read(&format!("a/{f}")), run.read(&format!("b/{f}")), "{f}");
    }
}

#[test]
fn resume_skips_or_rejects() {
    let run = Run::new();
    let c = run.config("c.toml", LINEAR);
    assert!(run.rbdo(&["reliability"], &c, "a").status.success());
    let before = run.read("a/result.json");
    std::fs::write(run.root.join("a/result.json"), "sentinel").unwrap();
    assert!(run.rbdo(&["reliability", "--resume"], &c, "a").status.success());
    assert_eq!(run.read("a/result.json"), "sentinel");

    let out = run.rbdo(&["reliability", "--resume", "--seed", "2"], &c, "a");
    assert_eq!(out.status.code(), Some(2));
    assert!(run.rbdo(&["reliability"], &c, "a").status.success());
    assert_eq!(run.read("a/result.json"), before);
}

#[test]
fn infinite_tolerance_means_no_enrichment() {
    let run = Run::new();
    let c = run.config(
        "c.toml",
        "seed = 1\n[problem]\nkind = \"benchmark\"\nname = \"series-2d\"\n[refine]\nepsilon = inf\ninitial_doe = 10\ngrid_points = 11\n",
    );
    assert!(run.rbdo(&["refine"], &c, "o").status.success());
    let (_, rows) = run.table("o/rounds.tsv");
    assert_eq!(rows.len(), 1);
    let r = run.json("o/refine.json");
    assert_eq!(r["calls_used"], serde_json::json!([0, 0]));
    assert_eq!(r["converged"], true);
}

#[test]
fn refinement_outputs_interpolate_their_designs() {
    let run = Run::new();
    let c = run.config(
        "c.toml",
        "seed = 2\n[problem]\nkind = \"benchmark\"\nname = \"series-2d\"\n[refine]\ninitial_doe = 10\nclusters = 10\nbudget = 150\ngrid_points = 41\n",
    );
    let out = run.rbdo(&["refine"], &c, "o");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = run.json("o/refine.json");
    let total: u64 = r["total_calls"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
    assert!(total <= 300);
    assert_eq!(run.json("o/manifest.json")["converged"], r["converged"]);

    for l in ["g1", "g2"] {
        let (header, rows) = run.table(&format!("o/doe_{l}.tsv"));
        let (yi, pi) = (header.iter().position(|h| h == "output").unwrap(), header.iter().position(|h| h == "prediction").unwrap());
        for row in &rows {
            assert!((row[yi] - row[pi]).abs() <= 1e-8 * row[yi].abs().max(1.0), "{row:?}");
        }
        let s = run.json(&format!("o/surrogate_{l}.json"));
        assert_eq!(s["model"]["outputs"].as_array().unwrap().len(), rows.len());
    }
    let (header, rows) = run.table("o/grid.tsv");
    assert_eq!(header, ["x1", "x2", "mean", "lower", "upper"]);
    assert_eq!(rows.len(), 41 * 41);
    assert!(rows.iter().all(|r| r[3] <= r[2] && r[2] <= r[4]));
}

#[test]
fn ddo_lands_on_the_limit_state() {
    let run = Run::new();
    let c = run.config("c.toml", CLOSED_FORM);
    assert!(run.rbdo(&["ddo"], &c, "o").status.success());
    let r = run.json("o/ddo.json");
    let d: Vec<f64> = r["design"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((d[0] + d[1] - 4.0).abs() < 1e-3, "{d:?}");
    assert!(r["limit_state_values"][0].as_f64().unwrap().abs() < 1e-3);
    let (_, rows) = run.table("o/ddo_trajectory.tsv");
    assert!(!rows.is_empty());
}

#[test]
fn reliability_sweep_costs_increase() {
    let run = Run::new();
    let c = run.config("c.toml", &format!("{CLOSED_FORM}[rbdo]\nsweep = [3.0, 4.5, 6.0]\n"));
    let out = run.rbdo(&["rbdo"], &c, "o");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = run.table("o/sweep.tsv");
    assert_eq!(rows.len(), 3);
    assert!(rows[0][1] < rows[1][1] && rows[1][1] < rows[2][1], "{rows:?}");
    for r in &rows {
        assert!((r[2] - r[0]).abs() <= 0.1 * r[0], "{r:?}");
    }
    for dir in ["beta-3.0", "beta-4.5", "beta-6.0"] {
        for f in ["history.json", "verification.json", "design_trajectory.tsv", "beta_trajectory.tsv", "cost_trajectory.tsv", "calls_trajectory.tsv"] {
            assert!(run.root.join("o").join(dir).join(f).exists(), "{dir}/{f}");
        }
    }
    let v = run.json("o/beta-3.0/verification.json");
    let beta = v["reliability"][0]["beta"].as_f64().unwrap();
    assert!((2.9..=3.1).contains(&beta), "{beta}");
}

#[test]
fn verify_reports_hull_constraints() {
    let run = Run::new();
    let c = run.config("c.toml", "seed = 4\n[problem]\nkind = \"hull\"\n[rbdo]\nverify_samples = 1000\n");
    let out = run.rbdo(&["verify"], &c, "o");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = run.json("o/verification.json");
    assert_eq!(v["deterministic"].as_array().unwrap().len(), 2);
    assert!((v["cost"].as_f64().unwrap() - 0.1886).abs() < 5e-3);
}
