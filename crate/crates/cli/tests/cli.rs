use std::fs;
use std::path::Path;

use gbc::fixtures::CATALOG;
use gbc::{catalog_json, run_cli, ExperimentConfig};
use serde_json::Value;
use tempfile::TempDir;

fn gbc(args: &[&str]) -> i32 {
    run_cli(std::iter::once("gbc").chain(args.iter().copied()))
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

/// Small configs, one per experiment kind.
const SMALL: &[(&str, &str)] = &[
    ("measure", r#"{"kind": "measure", "seed": 1, "params": {"shift": {"matrix": [[1, 1], [1, 0]], "cylinders": [{"lo": 0, "hi": 1, "word": [0, 1]}, {"lo": 2, "hi": 2, "word": [1]}]}}}"#),
    ("sp-check", r#"{"kind": "sp-check", "seed": 3, "params": {"shift": {"matrix": [[1, 1], [1, 0]]}, "sequence": {"generator": "nested", "c": 2.0, "count": 120, "d": 2}}}"#),
    ("counterexample", r#"{"kind": "counterexample", "seed": 4, "params": {"thm": "2.2", "count": 20, "num_samples": 8}}"#),
    ("simulate", r#"{"kind": "simulate", "seed": 5, "params": {"shift": {"matrix": [[1, 1], [1, 0]]}, "sequence": {"generator": "nested", "c": 30.0, "count": 3000, "d": 3}, "num_samples": 12}}"#),
    ("toral", r#"{"kind": "toral", "seed": 6, "params": {"rectangles": {"map": [[2, 1], [1, 1]], "center": [0.3, 0.7], "c": 10.0, "cap": 0.001, "aspect": 1.0}, "n": 30000, "num_samples": 12}}"#),
    ("baker", r#"{"kind": "baker", "seed": 7, "params": {"balls": {"count": 3000, "r_min": 0.1, "r_max": 0.2}, "num_samples": 12}}"#),
];

#[test]
fn results_do_not_depend_on_worker_count() {
    let dir = TempDir::new().unwrap();
    for (kind, text) in SMALL {
        let cfg = write_config(dir.path(), &format!("{kind}.json"), text);
        let mut csvs = Vec::new();
        for workers in ["1", "3"] {
            let out = dir.path().join(format!("{kind}-{workers}"));
            let code = gbc(&[kind, "--config", &cfg, "--workers", workers, "--out", out.to_str().unwrap()]);
            assert_eq!(code, 0, "{kind}");
            csvs.push(fs::read(out.join("results.csv")).unwrap());
        }
        assert!(!csvs[0].is_empty());
        assert_eq!(csvs[0], csvs[1], "{kind}");
    }
}

#[test]
fn every_row_carries_kind_and_hash() {
    let dir = TempDir::new().unwrap();
    let (kind, text) = SMALL[5];
    let cfg = write_config(dir.path(), "c.json", text);
    let out = dir.path().join("out");
    assert_eq!(gbc(&[kind, "--config", &cfg, "--workers", "1", "--out", out.to_str().unwrap()]), 0);
    let hash = ExperimentConfig::parse(text).unwrap().hash();
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("kind,config_hash,target,"));
    let mut targets = std::collections::BTreeSet::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!((cols[0], cols[1]), (kind, hash.as_str()));
        targets.insert(cols[2].to_owned());
    }
    assert_eq!(targets.into_iter().collect::<Vec<_>>(), ["ball", "square"]);
    let meta: Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config_hash"], hash.as_str());
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(summary(&out)["config_hash"], hash.as_str());
}

#[test]
fn malformed_input_exits_2_without_artifacts() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("truncated", "sp-check", r#"{"kind": "sp-check", "seed": 1, "params": {"#),
        ("no seed", "sp-check", r#"{"kind": "sp-check", "params": {}}"#),
        ("unknown field", "measure", r#"{"kind": "measure", "seed": 1, "params": {"shift": {"matrix": [[1]]}, "colour": 1}}"#),
        ("wrong kind", "toral", SMALL[0].1),
        ("bad matrix", "measure", r#"{"kind": "measure", "seed": 1, "params": {"shift": {"matrix": [[0, 1], [0, 0]]}}}"#),
        ("missing file", "measure", r#"{"kind": "measure", "seed": 1, "params": {"shift": "nowhere.json"}}"#),
    ];
    for (i, (what, kind, text)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.json"), text);
        let out = dir.path().join(format!("out{i}"));
        fs::create_dir(&out).unwrap();
        assert_eq!(gbc(&[kind, "--config", &cfg, "--out", out.to_str().unwrap()]), 2, "{what}");
        assert_eq!(fs::read_dir(&out).unwrap().count(), 0, "{what} left files behind");
    }
    let out = dir.path().join("w0");
    let cfg = write_config(dir.path(), "ok.json", SMALL[0].1);
    assert_eq!(gbc(&["measure", "--config", &cfg, "--workers", "0", "--out", out.to_str().unwrap()]), 2);
    assert!(!out.join("results.csv").exists());
    assert_eq!(gbc(&["measure", "--bogus-flag"]), 2);
}

#[test]
fn inputs_may_be_files_next_to_the_config() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "golden.json", r#"{"matrix": [[1, 1], [1, 0]]}"#);
    let inline = write_config(dir.path(), "inline.json", r#"{"kind": "measure", "seed": 2, "params": {"shift": {"matrix": [[1, 1], [1, 0]]}, "word_len": 5}}"#);
    let by_path = write_config(dir.path(), "path.json", r#"{"kind": "measure", "seed": 2, "params": {"shift": "golden.json", "word_len": 5}}"#);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(gbc(&["measure", "--config", &inline, "--out", a.to_str().unwrap()]), 0);
    assert_eq!(gbc(&["measure", "--config", &by_path, "--out", b.to_str().unwrap()]), 0);
    // The hash covers the resolved document, so both runs agree byte for byte.
    assert_eq!(fs::read(a.join("results.csv")).unwrap(), fs::read(b.join("results.csv")).unwrap());
}

#[test]
fn nested_fixture_is_bounded() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sp");
    assert_eq!(gbc(&["sp-check", "--fixture", "golden-mean-parry", "--out", out.to_str().unwrap()]), 0);
    assert_eq!(summary(&out)["result"]["verdict"], "bounded");
}

#[test]
fn repeated_cylinder_counterexample_is_growing() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ce");
    assert_eq!(gbc(&["counterexample", "--thm", "2.2", "--out", out.to_str().unwrap()]), 0);
    let s = summary(&out);
    assert_eq!(s["result"]["verdict"], "growing");
    // Ratios from M = 1 keep increasing once N passes the first few blocks.
    let mut rdr = csv::Reader::from_path(out.join("results.csv")).unwrap();
    let ratios: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[2] == "1")
        .map(|r| r[6].parse().unwrap())
        .collect();
    assert!(ratios.len() >= 5);
    let tail = &ratios[ratios.len() / 2..];
    assert!(tail.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
}

#[test]
fn catalog_round_trips() {
    let names: Vec<&str> = CATALOG.iter().map(|f| f.name).collect();
    assert_eq!(names, ["bernoulli2", "golden-mean-parry", "cat-map", "baker", "thm22", "thm23", "prop16"]);
    let catalog = catalog_json().unwrap();
    assert_eq!(catalog, catalog_json().unwrap());
    let text = serde_json::to_string(&catalog).unwrap();
    let back: Value = serde_json::from_str(&text).unwrap();
    for (entry, fixture) in back.as_array().unwrap().iter().zip(CATALOG) {
        let cfg = ExperimentConfig::parse(&entry["config"].to_string()).unwrap();
        assert_eq!(cfg, ExperimentConfig::parse(fixture.text).unwrap());
        assert_eq!(cfg.hash(), ExperimentConfig::parse(fixture.text).unwrap().hash());
    }
    let thm23 = gbc::fixtures::load("thm23").unwrap();
    assert_eq!(thm23.params["eps"], 0.5);
    assert_eq!(gbc(&["fixtures", "--show", "prop16"]), 0);
    assert_eq!(gbc(&["fixtures", "--show", "nope"]), 2);
}
