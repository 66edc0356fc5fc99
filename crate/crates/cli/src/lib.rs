//! `gbc`: batch runner for Borel–Cantelli experiments.
//!
//! Each subcommand runs one experiment kind from a JSON config (or a bundled
//! fixture) and writes `results.csv`, `summary.json` and `meta.json` to the
//! output directory. Exit codes: 0 success, 1 I/O failure, 2 invalid input,
//! 3 numeric failure.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fixtures;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

pub use config::{ExperimentConfig, Kind};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "gbc", version, about = "Borel–Cantelli experiments on Markov shifts and toral maps")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cylinder measures of a shift document.
    Measure(RunArgs),
    /// Correlation-sum verdict for a target sequence.
    SpCheck(RunArgs),
    /// Derived counterexample sequences.
    Counterexample(CounterexampleArgs),
    /// Monte Carlo hit counts for a symbolic target sequence.
    Simulate(RunArgs),
    /// Monte Carlo hit counts for rectangles under a toral automorphism.
    Toral(RunArgs),
    /// Baker-map hits in balls and inscribed dyadic squares.
    Baker(RunArgs),
    /// List the bundled fixtures, or print one.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, conflicts_with = "fixture")]
    pub config: Option<PathBuf>,
    /// Name of a bundled fixture.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// 2.2, 2.3 or 1.6; without a config, selects the matching fixture.
    #[arg(long)]
    pub thm: Option<String>,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long)]
    pub show: Option<String>,
}

/// Paths of the written artifacts.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub meta: PathBuf,
    pub config_hash: String,
}

/// Loads a config file and inlines the documents it refers to.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation("config.read", format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    cfg.resolve_sources(path.parent().unwrap_or(Path::new(".")))?;
    Ok(cfg)
}

/// Runs one experiment and writes its artifacts; nothing is written on error.
pub fn execute(cfg: &ExperimentConfig, workers: usize, out: &Path) -> Result<Artifacts> {
    if workers == 0 {
        return Err(CliError::validation("cli.workers", "--workers must be at least 1"));
    }
    let start = Instant::now();
    let hash = cfg.hash();
    log::info!("running {} (config {hash}, seed {}, {workers} workers)", cfg.kind.name(), cfg.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::validation("cli.workers", e))?;
    let outcome = pool.install(|| experiments::run(cfg))?;
    let results = artifacts::results_csv(&outcome, cfg.kind.name(), &hash)?;
    let summary = artifacts::summary_json(cfg, &hash, outcome.summary);
    let meta = artifacts::meta_json(&hash, workers, start.elapsed());
    artifacts::write_all(out, &results, &summary, &meta)?;
    log::debug!("artifacts written to {}", out.display());
    Ok(Artifacts {
        results: out.join(artifacts::RESULTS),
        summary: out.join(artifacts::SUMMARY),
        meta: out.join(artifacts::META),
        config_hash: hash,
    })
}

fn resolve(kind: Kind, args: &RunArgs, thm: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.fixture, thm) {
        (Some(path), _, _) => load_config(path)?,
        (None, Some(name), _) => fixtures::load(name)?,
        (None, None, Some(t)) => fixtures::load(match t {
            "2.2" => "thm22",
            "2.3" => "thm23",
            "1.6" => "prop16",
            other => {
                return Err(CliError::validation(
                    "cli.thm",
                    format!("unknown construction {other:?}; expected 2.2, 2.3 or 1.6"),
                ))
            }
        })?,
        (None, None, None) => return Err(CliError::validation("cli.config", "need --config or --fixture")),
    };
    if cfg.kind != kind {
        return Err(CliError::validation(
            "config.kind",
            format!("config is for {:?}, not {:?}", cfg.kind.name(), kind.name()),
        ));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let (Some(t), Value::Object(p)) = (thm, &mut cfg.params) {
        p.insert("thm".into(), Value::String(t.to_owned()));
    }
    Ok(cfg)
}

/// The fixture catalog as JSON: name, description and full config.
pub fn catalog_json() -> Result<Value> {
    let entries = fixtures::CATALOG
        .iter()
        .map(|f| {
            let cfg = ExperimentConfig::parse(f.text)?;
            Ok(json!({"name": f.name, "description": f.description, "config": cfg}))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Value::Array(entries))
}

/// Prints to stdout, ignoring a closed pipe.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn dispatch(cli: Cli) -> Result<()> {
    let (kind, args, thm) = match &cli.command {
        Command::Measure(a) => (Kind::Measure, a, None),
        Command::SpCheck(a) => (Kind::SpCheck, a, None),
        Command::Counterexample(c) => (Kind::Counterexample, &c.run, c.thm.as_deref()),
        Command::Simulate(a) => (Kind::Simulate, a, None),
        Command::Toral(a) => (Kind::Toral, a, None),
        Command::Baker(a) => (Kind::Baker, a, None),
        Command::Fixtures(f) => {
            let text = match &f.show {
                Some(name) => fixtures::find(name)?.text.to_owned(),
                None => serde_json::to_string_pretty(&catalog_json()?).expect("json values serialise"),
            };
            say(text.trim_end());
            return Ok(());
        }
    };
    let cfg = resolve(kind, args, thm)?;
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let a = execute(&cfg, workers, &cli.out)?;
    say(&format!("{} {} -> {}", cfg.kind.name(), a.config_hash, cli.out.display()));
    Ok(())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("GBC_LOG", "error")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gbc: {e}");
            e.exit_code()
        }
    }
}
