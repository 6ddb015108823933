use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const QUICK: &str = "[schedule]\nsteps = 6\nsample_budget = 256\nprobe_budget = 16\n";

fn write_config(dir: &TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subreg"))
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn constant<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["constants"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn slopes_and_moduli_report() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        "hs.toml",
        &format!("problem = \"half-square\"\nq = 0.5\nchecks = [\"slopes\", \"moduli\"]\n{QUICK}"),
    );
    let out = run(&config, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["provenance"]["problem"], "half-square");
    assert_eq!(report["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    for name in ["uniform_strict_q_slope", "subdiff_strict_q_slope_plain", "sr_q"] {
        let v: f64 = constant(&report, name)["value"].as_f64().unwrap();
        assert!((v - 1.0).abs() < 0.05, "{name} = {v}");
    }
    assert!(report.get("invariant_results").is_none());
}

#[test]
fn infinite_values_are_strings() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        "c.toml",
        &format!("problem = \"constant\"\nq = 1.0\nchecks = [\"slopes\"]\n{QUICK}"),
    );
    let out = run(&config, &[]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(constant(&report, "strict_q_slope")["value"], "inf");
}

#[test]
fn verify_runs_invariants_only() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        "id.toml",
        &format!("problem = \"identity\"\nq = 1.0\nchecks = [\"slopes\"]\n{QUICK}"),
    );
    let out = run(&config, &["--verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&out);
    assert!(report.get("constants").is_none());
    let results = report["invariant_results"].as_array().unwrap();
    assert!(!results.is_empty());
    assert!(results.iter().all(|r| r["pass"] == true));
}

#[test]
fn out_path_seed_override_and_table() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        "sq.toml",
        &format!("problem = \"square\"\nq = 1.0\nchecks = [\"moduli\"]\n{QUICK}"),
    );
    let target = dir.path().join("report.json");
    let out = run(&config, &["--out", target.to_str().unwrap(), "--seed-override", "17"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(report["provenance"]["seed"], 17);

    let table = run(&config, &["--format", "table"]);
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.starts_with("problem square"), "{text}");
    assert!(text.contains("sr_q"));
}

#[test]
fn inline_graph_problem() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "q = 1.0\nchecks = [\"moduli\"]\n[problem]\nname = \"double\"\ndim_x = 1\ndim_y = 1\nanchor_x = [0.0]\nanchor_y = [0.0]\n\
         [[problem.pieces]]\ndomain = [[-1e9, 1e9]]\nlower = [[0.0, 2.0]]\n{QUICK}"
    );
    let out = run(&write_config(&dir, "inline.toml", &body), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["provenance"]["problem"], "double");
    let sr = constant(&report, "sr_q")["value"].as_f64().unwrap();
    assert!((sr - 2.0).abs() < 0.05, "{sr}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("order.toml", "problem = \"identity\"\nq = 1.5\n"),
        ("field.toml", "problem = \"identity\"\nq = 1.0\ncolour = 3\n"),
        ("name.toml", "problem = \"no-such-problem\"\nq = 1.0\n"),
        ("gamma.toml", "problem = \"identity\"\nq = 1.0\ngamma = -1.0\n"),
        (
            "radii.toml",
            "problem = \"identity\"\nq = 1.0\n[schedule]\nneighborhood_radii = [1e-3, 1e-2]\n",
        ),
    ];
    for (name, body) in cases {
        let out = run(&write_config(&dir, name, body), &[]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{name}");
    }
    let missing = run(&dir.path().join("absent.toml"), &[]);
    assert_eq!(missing.status.code(), Some(2));
}
