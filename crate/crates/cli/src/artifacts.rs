//! results.csv, summary.json and meta.json.
//!
//! Every CSV row is prefixed with the experiment kind and config hash. Files
//! are staged in a temporary directory under the output directory and moved
//! into place only once all three are complete.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiments::Outcome;

pub const RESULTS: &str = "results.csv";
pub const SUMMARY: &str = "summary.json";
pub const META: &str = "meta.json";

/// Re-emits the outcome's tables as one CSV with provenance columns.
pub fn results_csv(outcome: &Outcome, kind: &str, hash: &str) -> Result<Vec<u8>> {
    let labelled = outcome.tables.iter().any(|t| t.label.is_some());
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header_written = false;
    for table in &outcome.tables {
        let mut r = csv::Reader::from_reader(table.csv.as_slice());
        let headers = r.headers().map_err(|e| CliError::validation("csv.read", e))?.clone();
        if !header_written {
            let mut h = vec!["kind", "config_hash"];
            if labelled {
                h.push("target");
            }
            h.extend(headers.iter());
            out.write_record(&h).map_err(|e| CliError::validation("csv.write", e))?;
            header_written = true;
        }
        for rec in r.records() {
            let rec = rec.map_err(|e| CliError::validation("csv.read", e))?;
            let mut row = vec![kind, hash];
            if labelled {
                row.push(table.label.unwrap_or(""));
            }
            row.extend(rec.iter());
            out.write_record(&row).map_err(|e| CliError::validation("csv.write", e))?;
        }
    }
    out.into_inner().map_err(|e| CliError::validation("csv.write", e.error()))
}

pub fn summary_json(cfg: &ExperimentConfig, hash: &str, result: Value) -> Value {
    json!({
        "kind": cfg.kind.name(),
        "config_hash": hash,
        "seed": cfg.seed,
        "config": cfg,
        "result": result,
    })
}

pub fn meta_json(hash: &str, workers: usize, wall: Duration) -> Value {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "workers": workers,
        "wall_time_s": wall.as_secs_f64(),
        "timestamp_unix": now.as_secs(),
    })
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("json values serialise");
    b.push(b'\n');
    b
}

/// Writes all three artifacts or none.
pub fn write_all(out: &Path, results: &[u8], summary: &Value, meta: &Value) -> Result<()> {
    fs::create_dir_all(out)?;
    let stage = tempfile::Builder::new().prefix(".gbc-").tempdir_in(out)?;
    let files = [(RESULTS, results.to_vec()), (SUMMARY, pretty(summary)), (META, pretty(meta))];
    for (name, bytes) in &files {
        let mut f = fs::File::create(stage.path().join(name))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    for (name, _) in &files {
        fs::rename(stage.path().join(name), out.join(name))?;
    }
    Ok(())
}
