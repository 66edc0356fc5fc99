//! One runner per experiment kind. Runners compute everything in memory;
//! nothing touches the output directory until a run has fully succeeded.

use std::cell::RefCell;

use bclab::bc::{
    default_grid, prop16_sequence, shrinking_target_sequence, sp_verdict, thm22_counterexample,
    thm23_counterexample, Placement, MAX_WINDOW,
};
use bclab::io::{parse_potential, parse_rectangles, parse_shift, ShiftSpec, TorusTargets};
use bclab::orbit::{hit_experiment, sample_seeds, sbc_experiment};
use bclab::shift::{enumerate_words, Symbol, MAX_ENUM_LEN};
use bclab::toral::{
    baker_hit_experiment, torus_hit_experiment, Ball, DriftingSquares, FixedRectangle, TorusPoint, TorusTarget,
};
use bclab::{Cylinder, CylinderSequence, HitStatistics, MarkovGibbs, SymbolicOrbit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Horizon, Kind};
use crate::error::{CliError, Context, Result};

/// A CSV table as produced by the library, optionally labelled.
pub struct Table {
    pub label: Option<&'static str>,
    pub csv: Vec<u8>,
}

pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: Value,
}

impl Outcome {
    fn single(csv: Vec<u8>, summary: Value) -> Self {
        Self {
            tables: vec![Table { label: None, csv }],
            summary,
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.kind {
        Kind::Measure => measure(cfg),
        Kind::SpCheck => sp_check(cfg),
        Kind::Counterexample => counterexample(cfg),
        Kind::Simulate => simulate(cfg),
        Kind::Toral => toral(cfg),
        Kind::Baker => baker(cfg),
    }
}

fn csv_of<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::validation("csv.write", e))?;
    }
    w.into_inner().map_err(|e| CliError::validation("csv.write", e.error()))
}

fn write_with<F>(f: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::validation("csv.write", e))?;
    Ok(buf)
}

fn word_string(word: &[Symbol]) -> String {
    word.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

fn golden_doc() -> Value {
    json!({"matrix": [[1, 1], [1, 0]]})
}

/// The shift and its Gibbs measure; Parry when no potential is given.
fn model(shift: &Value, potential: Option<&Value>) -> Result<(ShiftSpec, MarkovGibbs)> {
    let spec = parse_shift(&shift.to_string()).at("shift-space.parse_shift")?;
    let g = match potential {
        Some(p) => {
            let phi = parse_potential(&p.to_string(), &spec.matrix).at("gibbs.parse_potential")?;
            MarkovGibbs::build(&spec.matrix, &phi).at("gibbs.build")?
        }
        None => MarkovGibbs::parry(&spec.matrix).at("gibbs.parry")?,
    };
    Ok((spec, g))
}

/// Generated target sequences.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
enum Generator {
    /// 0-centred `d`-nested targets read off a reference orbit, `μ(C_n) <= c/n`.
    Nested { c: f64, count: u64, d: u64 },
}

fn sequence(spec: &ShiftSpec, g: &MarkovGibbs, gen: Option<&Generator>, seed: u64) -> Result<CylinderSequence> {
    match gen {
        None => spec.sequence().at("bc-lab.sequence"),
        Some(Generator::Nested { c, count, d }) => {
            if !(c.is_finite() && *c > 0.0) {
                return Err(CliError::validation("bc-lab.shrinking_target_sequence", "c must be positive"));
            }
            let seeds = sample_seeds(seed, 2);
            let reference = RefCell::new(SymbolicOrbit::sample(g, seeds[0]));
            let mut rng = ChaCha8Rng::seed_from_u64(seeds[1]);
            shrinking_target_sequence(g, |i| reference.borrow_mut().symbol(i), *c, *count, *d, &mut rng)
                .at("bc-lab.shrinking_target_sequence")
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureParams {
    shift: Value,
    potential: Option<Value>,
    /// Word length for the enumeration table when the shift has no cylinders.
    word_len: Option<usize>,
    n_max: Option<u64>,
}

#[derive(Serialize)]
struct SequenceRow {
    n: u64,
    lo: i64,
    hi: i64,
    word: String,
    mu: f64,
    #[serde(rename = "E_N")]
    expected: f64,
}

#[derive(Serialize)]
struct WordRow {
    len: usize,
    word: String,
    mu: f64,
}

fn measure(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p: MeasureParams = cfg.params()?;
    let (spec, g) = model(&p.shift, p.potential.as_ref())?;
    let csv = if spec.cylinders.is_empty() {
        let len = p.word_len.unwrap_or(4);
        if len == 0 || len > MAX_ENUM_LEN {
            return Err(CliError::validation("shift-space.enumerate_words", format!("word_len {len} outside 1..={MAX_ENUM_LEN}")));
        }
        let mut rows = Vec::new();
        for l in 1..=len {
            for w in enumerate_words(&spec.matrix, l).at("shift-space.enumerate_words")? {
                rows.push(WordRow {
                    len: l,
                    mu: g.word_measure(&w),
                    word: word_string(&w),
                });
            }
        }
        csv_of(rows)?
    } else {
        let seq = spec.sequence().at("bc-lab.sequence")?;
        let n_max = p.n_max.unwrap_or(seq.len()).min(seq.len());
        let mut e = 0.0;
        let mut rows = Vec::with_capacity(n_max as usize);
        for n in 1..=n_max {
            let c = seq.cylinder(n).at("bc-lab.cylinder")?;
            let mu = g.cylinder_measure(&c);
            e += mu;
            rows.push(SequenceRow {
                n,
                lo: c.interval().lo(),
                hi: c.interval().hi(),
                word: word_string(c.word()),
                mu,
                expected: e,
            });
        }
        csv_of(rows)?
    };
    let mut summary = serde_json::to_value(g.export()).expect("export serialises");
    summary["lambda"] = json!(g.lambda());
    summary["memory"] = json!(g.memory());
    summary["states"] = json!(g.num_states());
    Ok(Outcome::single(csv, summary))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpCheckParams {
    shift: Value,
    potential: Option<Value>,
    sequence: Option<Generator>,
    grid: Option<Vec<u64>>,
    n_top: Option<u64>,
}

fn sp_grid(grid: Option<Vec<u64>>, n_top: Option<u64>, len: u64) -> Vec<u64> {
    grid.unwrap_or_else(|| default_grid(n_top.unwrap_or(len.min(MAX_WINDOW))))
}

fn sp_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p: SpCheckParams = cfg.params()?;
    let (spec, g) = model(&p.shift, p.potential.as_ref())?;
    let seq = sequence(&spec, &g, p.sequence.as_ref(), cfg.seed)?;
    let report = sp_verdict(&g, &seq, &sp_grid(p.grid, p.n_top, seq.len())).at("bc-lab.sp_verdict")?;
    let csv = write_with(|b| report.write_csv(b))?;
    let mut summary = report.summary_json();
    summary["alignment"] = json!(seq.alignment());
    Ok(Outcome::single(csv, summary))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CounterexampleParams {
    thm: String,
    shift: Option<Value>,
    potential: Option<Value>,
    word: Option<Vec<Symbol>>,
    count: Option<usize>,
    lengths: Option<Vec<u64>>,
    placement: Option<String>,
    eps: Option<f64>,
    grid: Option<Vec<u64>>,
    /// Orbits used to check that hit counts stop growing.
    num_samples: Option<usize>,
}

#[derive(Serialize)]
struct BlockRow {
    k: usize,
    word_len: usize,
    base_mu: f64,
    l_k: u64,
    s_k: u64,
    base_sum: f64,
    derived_sum: f64,
}

fn block_table(word_lens: &[usize], base: &[f64], lengths: &[u64]) -> Result<Vec<u8>> {
    let (mut s, mut bs, mut ds) = (0u64, 0.0, 0.0);
    let rows = word_lens.iter().zip(base).zip(lengths).enumerate().map(|(i, ((&w, &m), &l))| {
        s += l;
        bs += m;
        ds += l as f64 * m;
        BlockRow {
            k: i + 1,
            word_len: w,
            base_mu: m,
            l_k: l,
            s_k: s,
            base_sum: bs,
            derived_sum: ds,
        }
    });
    csv_of(rows.collect::<Vec<_>>())
}

/// Share of orbits with no new hit in `(N/2, N]`.
fn stabilization(g: &MarkovGibbs, seq: &CylinderSequence, samples: Option<usize>, seed: u64) -> Result<Value> {
    let Some(samples) = samples else { return Ok(Value::Null) };
    let n = seq.len();
    if n < 2 {
        return Err(CliError::validation("orbit-sim.hit_experiment", "sequence too short to split in halves"));
    }
    let stats = hit_experiment(g, seq, &[n / 2, n], samples, seed).at("orbit-sim.hit_experiment")?;
    let mut totals: Vec<u64> = stats.hits.iter().map(|h| h[1]).collect();
    totals.sort_unstable();
    Ok(json!({
        "samples": samples,
        "checkpoints": [n / 2, n],
        "stabilized_fraction": stats.stabilized_fraction(),
        "median_hits": totals.get(totals.len() / 2),
    }))
}

fn counterexample(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p: CounterexampleParams = cfg.params()?;
    let shift = p.shift.clone().unwrap_or_else(golden_doc);
    let (spec, g) = model(&shift, p.potential.as_ref())?;
    let a = &spec.matrix;
    let word = p.word.clone().unwrap_or_else(|| vec![0]);
    match p.thm.as_str() {
        "2.2" => {
            let placement = match p.placement.as_deref() {
                None | Some("aligned") => Placement::Aligned,
                Some("centered") => Placement::Centered,
                Some(other) => {
                    return Err(CliError::validation("config.params", format!("unknown placement {other:?}")));
                }
            };
            let lengths = p.lengths.clone().unwrap_or_else(|| (1..=p.count.unwrap_or(60) as u64).collect());
            let fixture = thm22_counterexample(a, &word, &lengths, placement).at("bc-lab.thm22_counterexample")?;
            let seq = &fixture.sequence;
            let report = sp_verdict(&g, seq, &sp_grid(p.grid, None, seq.len())).at("bc-lab.sp_verdict")?;
            let csv = write_with(|b| report.write_csv(b))?;
            let mut summary = report.summary_json();
            summary["thm"] = json!("2.2");
            summary["N"] = json!(seq.len());
            summary["bounded_warning"] = json!(fixture.bounded_warning);
            summary["stabilization"] = stabilization(&g, seq, p.num_samples, cfg.seed)?;
            Ok(Outcome::single(csv, summary))
        }
        "2.3" => {
            let eps = p.eps.unwrap_or(0.5);
            let count = p.count.unwrap_or(1000);
            let t = thm23_counterexample(&g, eps, count).at("bc-lab.thm23_counterexample")?;
            let csv = block_table(&t.word_lengths, &t.base_measures, &t.lengths)?;
            let (base_dec, derived_dec) = t.sums_up_to(count / 10);
            let summary = json!({
                "thm": "2.3",
                "eps": eps,
                "K": count,
                "N": t.sequence.len(),
                "base_sum": t.base_sum(),
                "total_measure": t.total_measure(),
                "tail_bound": t.tail_bound,
                "base_top_decade": t.base_sum() - base_dec,
                "derived_top_decade_growth": (t.total_measure() - derived_dec) / derived_dec,
                "stabilization": stabilization(&g, &t.sequence, p.num_samples, cfg.seed)?,
            });
            Ok(Outcome::single(csv, summary))
        }
        "1.6" => {
            let count = p.count.unwrap_or(28);
            let base = (1..=count)
                .map(|k| Cylinder::new(a, 0, word.repeat(k)))
                .collect::<std::result::Result<Vec<_>, _>>()
                .at("shift-space.cylinder")?;
            let pr = prop16_sequence(&g, base).at("bc-lab.prop16_sequence")?;
            let word_lens: Vec<usize> = (1..=count).map(|k| k * word.len()).collect();
            let csv = block_table(&word_lens, &pr.base_measures, &pr.lengths)?;
            let summary = json!({
                "thm": "1.6",
                "K": count,
                "N": pr.sequence.len(),
                "base_sum": pr.base_measures.iter().sum::<f64>(),
                "stabilization": stabilization(&g, &pr.sequence, p.num_samples, cfg.seed)?,
            });
            Ok(Outcome::single(csv, summary))
        }
        other => Err(CliError::validation(
            "config.params",
            format!("unknown construction {other:?}; expected 2.2, 2.3 or 1.6"),
        )),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateParams {
    shift: Value,
    potential: Option<Value>,
    sequence: Option<Generator>,
    checkpoints: Option<Vec<u64>>,
    n: Option<u64>,
    num_samples: Option<usize>,
    /// Require `E_N >= 20` (strong Borel–Cantelli mode); default true.
    sbc: Option<bool>,
}

fn hit_summary(stats: &HitStatistics) -> Value {
    let mut s = stats.summary_json();
    s["checkpoints"] = json!(stats.checkpoints);
    s["E_N"] = json!(stats.expected);
    s
}

fn simulate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p: SimulateParams = cfg.params()?;
    let (spec, g) = model(&p.shift, p.potential.as_ref())?;
    let seq = sequence(&spec, &g, p.sequence.as_ref(), cfg.seed)?;
    let horizon = Horizon {
        checkpoints: p.checkpoints,
        n: p.n,
    };
    let checkpoints = horizon.resolve(Some(seq.len()))?;
    let samples = p.num_samples.unwrap_or(100);
    let stats = if p.sbc.unwrap_or(true) {
        sbc_experiment(&g, &seq, &checkpoints, samples, cfg.seed).at("orbit-sim.sbc_experiment")?
    } else {
        hit_experiment(&g, &seq, &checkpoints, samples, cfg.seed).at("orbit-sim.hit_experiment")?
    };
    let csv = write_with(|b| stats.write_csv(b))?;
    Ok(Outcome::single(csv, hit_summary(&stats)))
}

/// `R_n = rects[n - 1]`.
struct RectangleList(Vec<FixedRectangle>);

impl TorusTarget for RectangleList {
    fn measure(&self, n: u64) -> f64 {
        self.0[n as usize - 1].measure(n)
    }

    fn max_extent(&self) -> f64 {
        self.0.iter().map(|r| r.max_extent()).fold(0.0, f64::max)
    }

    fn contains(&self, n: u64, xn: TorusPoint, x0: TorusPoint) -> bool {
        self.0[n as usize - 1].contains(n, xn, x0)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToralParams {
    rectangles: Value,
    eps0: Option<f64>,
    eps1: Option<f64>,
    checkpoints: Option<Vec<u64>>,
    n: Option<u64>,
    num_samples: Option<usize>,
    /// Use `R_n = T^n R'_n` for the generated squares `R'_n`.
    drifting: Option<bool>,
}

fn toral(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p: ToralParams = cfg.params()?;
    let (eps0, eps1) = (p.eps0.unwrap_or(0.01), p.eps1.unwrap_or(0.04));
    let spec = parse_rectangles(&p.rectangles.to_string(), eps0, eps1).at("toral.parse_rectangles")?;
    let t = &spec.map;
    let horizon = Horizon {
        checkpoints: p.checkpoints,
        n: p.n,
    };
    let samples = p.num_samples.unwrap_or(100);
    let drifting = p.drifting.unwrap_or(false);
    let stats = match spec.targets {
        TorusTargets::List(rects) => {
            if drifting {
                return Err(CliError::validation("config.params", "drifting needs a square generator"));
            }
            let checkpoints = horizon.resolve(Some(rects.len() as u64))?;
            if checkpoints.last().is_some_and(|&n| n > rects.len() as u64) {
                return Err(CliError::validation("toral.torus_hit_experiment", "checkpoints run past the rectangle list"));
            }
            let list = RectangleList(rects.into_iter().map(|r| FixedRectangle::new(t, r)).collect());
            torus_hit_experiment(t, &list, &checkpoints, samples, cfg.seed)
        }
        TorusTargets::Shrinking(sq) => {
            let checkpoints = horizon.resolve(None)?;
            if drifting {
                torus_hit_experiment(t, &DriftingSquares(sq), &checkpoints, samples, cfg.seed)
            } else {
                torus_hit_experiment(t, &sq, &checkpoints, samples, cfg.seed)
            }
        }
    }
    .at("toral.torus_hit_experiment")?;
    let csv = write_with(|b| stats.write_csv(b))?;
    let mut summary = hit_summary(&stats);
    summary["lambda_u"] = json!(t.lambda_u());
    summary["drifting"] = json!(drifting);
    Ok(Outcome::single(csv, summary))
}

#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum BallsDoc {
    List(Vec<Ball>),
    Generator { count: usize, r_min: f64, r_max: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BakerParams {
    balls: Value,
    checkpoints: Option<Vec<u64>>,
    n: Option<u64>,
    num_samples: Option<usize>,
}

fn random_balls(count: usize, r_min: f64, r_max: f64, seed: u64) -> Result<Vec<Ball>> {
    if !(r_min > 0.0 && r_min <= r_max && r_max <= 0.25) {
        return Err(CliError::validation("baker.balls", "need 0 < r_min <= r_max <= 0.25"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let r = if r_min == r_max { r_min } else { rng.gen_range(r_min..r_max) };
            // Centres strictly inside (r, 1 - r).
            let mut coord = || r + (1.0 - 2.0 * r) * (0.5 + 0.5 * rng.gen_range(-0.999..0.999));
            Ball {
                center: [coord(), coord()],
                r,
            }
        })
        .collect())
}

fn baker(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p: BakerParams = cfg.params()?;
    let doc: BallsDoc = serde_json::from_value(p.balls).map_err(|e| CliError::validation("baker.balls", e))?;
    let balls = match doc {
        BallsDoc::List(b) => b,
        BallsDoc::Generator { count, r_min, r_max } => random_balls(count, r_min, r_max, sample_seeds(cfg.seed, 1)[0])?,
    };
    let horizon = Horizon {
        checkpoints: p.checkpoints,
        n: p.n,
    };
    let checkpoints = horizon.resolve(Some(balls.len() as u64))?;
    let stats = baker_hit_experiment(&balls, &checkpoints, p.num_samples.unwrap_or(100), cfg.seed)
        .at("toral.baker_hit_experiment")?;
    let squares = write_with(|b| stats.squares.write_csv(b))?;
    let balls_csv = write_with(|b| stats.balls.write_csv(b))?;
    let n_max = *checkpoints.last().expect("nonempty");
    let ratio: f64 = stats.squares.expected.last().expect("nonempty") / stats.balls.expected.last().expect("nonempty");
    let summary = json!({
        "squares": hit_summary(&stats.squares),
        "balls": hit_summary(&stats.balls),
        "N": n_max,
        "mass_ratio": ratio,
    });
    Ok(Outcome {
        tables: vec![
            Table {
                label: Some("square"),
                csv: squares,
            },
            Table {
                label: Some("ball"),
                csv: balls_csv,
            },
        ],
        summary,
    })
}
