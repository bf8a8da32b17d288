//! End-to-end tests of the command-line interface: exit codes, output
//! shapes, and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn conelab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conelab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    name.to_string()
}

fn json_report(dir: &Path, file: &str) -> serde_json::Value {
    let text = fs::read_to_string(dir.join(file)).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn classify_matches_the_closed_form_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cases = [
        (
            r#"{"lawson": [3, 3]}"#,
            0.25,
            "StrictlyStable",
            "product_of_spheres",
        ),
        (
            r#"{"lawson": [1, 1]}"#,
            -1.75,
            "NotStableByCriterion",
            "product_of_spheres",
        ),
        (
            r#"{"link": {"type": "round_sphere", "dim": 3, "ambient": 4}}"#,
            1.0,
            "StrictlyStable",
            "round_sphere",
        ),
    ];
    for (i, (config, d0, verdict, link_type)) in cases.iter().enumerate() {
        let cfg = write_config(dir, &format!("c{i}.json"), config);
        let out = conelab(&["classify", "--config", &cfg, "--out", "run"], dir);
        assert!(out.status.success(), "case {i}: {out:?}");
        let report = json_report(dir, "run/classify.json");
        assert_eq!(report["version"].as_str().unwrap(), "0.1.0");
        assert_eq!(report["command"], "classify");
        assert_eq!(report["seed"], 0);
        assert!(report["config"]["epsilons"].is_array(), "defaults recorded");
        assert_eq!(report["report"]["d0"].as_f64().unwrap(), *d0, "case {i}");
        assert_eq!(report["report"]["verdict"], *verdict, "case {i}");
        // The envelope records the resolved link even for the shorthand.
        assert_eq!(report["config"]["link"]["type"], *link_type, "case {i}");
    }
    // A graph link has no hypersurface stability index.
    let cfg = write_config(dir, "graph.json", r#"{"link": {"type": "hopf_graph_link"}}"#);
    let out = conelab(&["classify", "--config", &cfg], dir);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn sweep_outputs_are_byte_identical_and_ordered() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = conelab(&["sweep", "--out", "run"], dir);
    assert!(out.status.success(), "{out:?}");
    let first = fs::read(dir.join("run/sweep.csv")).unwrap();
    fs::remove_file(dir.join("run/sweep.csv")).unwrap();
    let out = conelab(&["sweep", "--out", "run"], dir);
    assert!(out.status.success());
    let second = fs::read(dir.join("run/sweep.csv")).unwrap();
    assert_eq!(first, second, "repeated runs must be byte-identical");

    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "n,k,l,mu1,d0,verdict");
    let mut seen = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 6);
        let n: usize = cols[0].parse().unwrap();
        let strict = cols[5] == "StrictlyStable";
        assert_eq!(strict, n >= 7, "row {line}");
        seen += 1;
    }
    assert_eq!(seen, 20, "partitions of 2..=10");

    // Empty dimension range: header only.
    let cfg = write_config(dir, "empty.json", r#"{"n_range": [5, 4]}"#);
    let out = conelab(&["sweep", "--config", &cfg, "--out", "run2"], dir);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.join("run2/sweep.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows, vec!["n,k,l,mu1,d0,verdict"]);
}

#[test]
fn calibration_exit_codes_separate_failure_kinds() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // Correct pairing passes.
    let cfg = write_config(
        dir,
        "good.json",
        r#"{"link": {"type": "hopf_graph_link"}, "form": "coassociative", "samples": 200}"#,
    );
    let out = conelab(&["calibration", "--config", &cfg, "--out", "run"], dir);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report = json_report(dir, "run/calibration.json");
    assert!(report["report"]["max_restriction_residual"].as_f64().unwrap() <= 1e-8);
    assert!(report["report"]["max_value_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(report["report"]["cone"], "hopf_graph");

    // A form from the wrong ambient space cannot be evaluated at all.
    let cfg = write_config(
        dir,
        "mismatch.json",
        r#"{"link": {"type": "hopf_graph_link"}, "form": {"kahler_power": {"n": 2, "k": 2}}, "samples": 200}"#,
    );
    let out = conelab(&["calibration", "--config", &cfg, "--out", "run"], dir);
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // A quarter-turn phase offset evaluates but fails the tolerance gate,
    // and the failing report is still written.
    fs::remove_file(dir.join("run/calibration.json")).unwrap();
    let cfg = write_config(
        dir,
        "phase.json",
        r#"{"link": {"type": "harvey_lawson_t2_link"}, "form": {"special_lagrangian": {"n": 3, "theta": 1.5707963267948966}}, "samples": 200}"#,
    );
    let out = conelab(&["calibration", "--config", &cfg, "--out", "run"], dir);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let report = json_report(dir, "run/calibration.json");
    assert!(report["report"]["max_value_residual"].as_f64().unwrap() > 0.9);
}

#[test]
fn variation_decay_emits_table_and_ratios() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = write_config(dir, "decay.json", r#"{"cutoffs": [4, 8, 16], "grid": 2}"#);
    let out = conelab(&["variation-decay", "--config", &cfg, "--out", "run"], dir);
    assert!(out.status.success(), "{out:?}");
    let text = fs::read_to_string(dir.join("run/variation_decay.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "N,Q,bound,weighted_norm,rayleigh");
    let rayleigh: Vec<f64> = lines
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rayleigh.len(), 3);
    assert!(rayleigh[1] < rayleigh[0] && rayleigh[2] < rayleigh[1]);

    let report = json_report(dir, "run/variation_decay.json");
    let ratios = report["report"]["decay_ratios"].as_array().unwrap();
    assert_eq!(ratios.len(), 2);
    for r in ratios {
        let r = r.as_f64().unwrap();
        assert!((0.2..=0.3).contains(&r), "quadratic decay, got {r}");
    }
    // Each row's second variation respects its cutoff bound.
    for row in report["report"]["rows"].as_array().unwrap() {
        assert!(row["Q"].as_f64().unwrap() <= row["bound"].as_f64().unwrap() * 1.0001);
    }
}

#[test]
fn forms_verdicts_follow_the_cone_dimension() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let base = r#"{"fourier_link": {"fourier_torus": {"dim": 3, "cutoff": 2}}, "cone_dimension": "#;
    for (n, verdict, modes) in [(6, "none_exists", 0), (4, "witness_found", 3)] {
        let cfg = write_config(dir, &format!("f{n}.json"), &format!("{base}{n}}}"));
        let out = conelab(&["forms", "--config", &cfg, "--out", "run"], dir);
        assert!(out.status.success(), "{out:?}");
        let report = json_report(dir, "run/forms.json");
        let obstruction = &report["report"]["obstruction"];
        assert_eq!(obstruction["verdict"], verdict);
        assert_eq!(
            obstruction["witness_modes"].as_array().unwrap().len(),
            modes
        );
        let ledger = &report["report"]["ledger"];
        assert_eq!(ledger["adjointness_consistent"], "adjoint");
        assert_eq!(ledger["delta_sign_table"].as_array().unwrap().len(), 3);
        let witness = &ledger["witness"];
        assert_eq!(witness["uniform_chain"].as_f64().unwrap(), -1.0);
        assert_eq!(witness["adjoint_chain"].as_f64().unwrap(), 1.0);
        assert_eq!(witness["direct_laplacian"].as_f64().unwrap(), 1.0);
    }
    let cfg = write_config(dir, "f3.json", &format!("{base}3}}"));
    let out = conelab(&["forms", "--config", &cfg], dir);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // No link configured.
    let out = conelab(&["classify"], dir);
    assert_eq!(out.status.code(), Some(1));
    // Missing config file.
    let out = conelab(&["classify", "--config", "absent.json"], dir);
    assert_eq!(out.status.code(), Some(1));
    // Malformed JSON.
    let cfg = write_config(dir, "broken.json", "{not json");
    let out = conelab(&["classify", "--config", &cfg], dir);
    assert_eq!(out.status.code(), Some(1));
    // Unknown field (typo protection).
    let cfg = write_config(dir, "typo.json", r#"{"lawsn": [3, 3]}"#);
    let out = conelab(&["classify", "--config", &cfg], dir);
    assert_eq!(out.status.code(), Some(1));
    // Setting both the link and the shorthand is ambiguous.
    let cfg = write_config(
        dir,
        "both.json",
        r#"{"link": {"type": "hopf_graph_link"}, "lawson": [3, 3]}"#,
    );
    let out = conelab(&["classify", "--config", &cfg], dir);
    assert_eq!(out.status.code(), Some(1));
    // Unknown subcommand.
    let out = conelab(&["frobnicate"], dir);
    assert_eq!(out.status.code(), Some(1));
    // Help is informational, not an error.
    let out = conelab(&["--help"], dir);
    assert_eq!(out.status.code(), Some(0));
}
