//! Stationary two-sided orbits of a Markov Gibbs measure and hit statistics
//! `S_N(x) = #{n <= N : σ^n x ∈ C_n}`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bc::CylinderSequence;
use crate::gibbs::MarkovGibbs;
use crate::shift::Symbol;
use crate::stats::{fit_line, quantile};

/// `E_{N_max}` required by [`sbc_experiment`].
pub const MIN_MASS: f64 = 20.0;

/// `|S_N - E_N|` is floored here before taking logarithms so exact hits of
/// the mean do not dominate the exponent fit.
pub const ERROR_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error("expected hit count E_N = {0:.3} at the last checkpoint is below {MIN_MASS}")]
    MassTooSmall(f64),
    #[error("checkpoints must be nonempty, positive and increasing")]
    BadCheckpoints,
    #[error("last checkpoint {n} exceeds the sequence length {len}")]
    SequenceTooShort { n: u64, len: u64 },
    #[error("need at least one sample")]
    NoSamples,
}

/// Inverse-CDF draw from a sparse distribution `(index, probability)`.
fn draw(row: &[(u32, f64)], u: f64) -> usize {
    let mut acc = 0.0;
    for &(v, p) in row {
        acc += p;
        if u < acc {
            return v as usize;
        }
    }
    row.last().expect("nonempty row").0 as usize
}

/// A `μ`-distributed point of the two-sided shift, materialised lazily.
///
/// Index `i >= 0` is drawn from stream 0 of a ChaCha8 generator keyed by the
/// seed, index `i < 0` from stream 1, one draw per index in order of
/// distance from the origin. Extension order therefore never changes the
/// point.
#[derive(Debug, Clone)]
pub struct SymbolicOrbit<'g> {
    g: &'g MarkovGibbs,
    seed: u64,
    right: Vec<Symbol>,
    left: Vec<Symbol>,
    right_state: usize,
    left_state: usize,
    right_rng: ChaCha8Rng,
    left_rng: ChaCha8Rng,
}

impl<'g> SymbolicOrbit<'g> {
    pub fn sample(g: &'g MarkovGibbs, seed: u64) -> Self {
        let mut right_rng = ChaCha8Rng::seed_from_u64(seed);
        right_rng.set_stream(0);
        let mut left_rng = ChaCha8Rng::seed_from_u64(seed);
        left_rng.set_stream(1);
        let p: Vec<(u32, f64)> = g.stationary().iter().enumerate().map(|(i, &x)| (i as u32, x)).collect();
        let start = draw(&p, right_rng.gen());
        Self {
            g,
            seed,
            right: vec![g.blocks()[start][0]],
            left: Vec::new(),
            right_state: start,
            left_state: start,
            right_rng,
            left_rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Materialised index range.
    pub fn window(&self) -> (i64, i64) {
        (-(self.left.len() as i64), self.right.len() as i64 - 1)
    }

    fn extend_right(&mut self, hi: i64) {
        while (self.right.len() as i64) <= hi {
            let row = self.g.transition_row(self.right_state);
            self.right_state = draw(row, self.right_rng.gen());
            self.right.push(self.g.blocks()[self.right_state][0]);
        }
    }

    fn extend_left(&mut self, lo: i64) {
        while -(self.left.len() as i64) > lo {
            let row = self.g.reversed_row(self.left_state);
            self.left_state = draw(row, self.left_rng.gen());
            self.left.push(self.g.blocks()[self.left_state][0]);
        }
    }

    /// Makes `[lo, hi]` available.
    pub fn ensure(&mut self, lo: i64, hi: i64) {
        self.extend_right(hi);
        self.extend_left(lo);
    }

    pub fn symbol(&mut self, i: i64) -> Symbol {
        self.ensure(i, i);
        self.get(i)
    }

    fn get(&self, i: i64) -> Symbol {
        if i >= 0 {
            self.right[i as usize]
        } else {
            self.left[(-i - 1) as usize]
        }
    }

    /// Whether `σ^n x ∈ C_n`.
    pub fn hits(&mut self, seq: &CylinderSequence, n: u64) -> bool {
        let (iv, word) = seq.parts(n).expect("index within the sequence");
        let lo = iv.lo() + n as i64;
        self.ensure(lo, iv.hi() + n as i64);
        word.iter().enumerate().all(|(j, &s)| self.get(lo + j as i64) == s)
    }
}

/// `S_N` at each checkpoint for `n = 1..=max(checkpoints)`.
pub fn hit_count(x: &mut SymbolicOrbit<'_>, seq: &CylinderSequence, checkpoints: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut s = 0u64;
    let mut n = 0u64;
    for &cp in checkpoints {
        while n < cp {
            n += 1;
            if x.hits(seq, n) {
                s += 1;
            }
        }
        out.push(s);
    }
    out
}

/// Per-sample hit counts at shared checkpoints together with `E_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitStatistics {
    pub checkpoints: Vec<u64>,
    pub expected: Vec<f64>,
    pub seeds: Vec<u64>,
    /// `hits[i][j]`: `S_{N_j}` for sample `i`.
    pub hits: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioQuantiles {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "E_N")]
    pub expected: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
}

#[derive(Serialize)]
struct CsvRow {
    seed: u64,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "E_N")]
    expected: f64,
    #[serde(rename = "S_N")]
    hits: u64,
    ratio: f64,
}

/// Per-sample seeds: consecutive outputs of a ChaCha8 generator keyed by `seed`.
pub fn sample_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen()).collect()
}

pub fn check_checkpoints(checkpoints: &[u64]) -> Result<u64, OrbitError> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OrbitError::BadCheckpoints);
    }
    Ok(*checkpoints.last().expect("nonempty"))
}

impl HitStatistics {
    /// Runs `sample(seed)` for every derived seed in parallel; the result is
    /// independent of the number of worker threads.
    pub fn collect<F>(checkpoints: Vec<u64>, expected: Vec<f64>, seed: u64, num_samples: usize, sample: F) -> Self
    where
        F: Fn(u64) -> Vec<u64> + Sync,
    {
        let seeds = sample_seeds(seed, num_samples);
        let hits = seeds.par_iter().map(|&s| sample(s)).collect();
        Self {
            checkpoints,
            expected,
            seeds,
            hits,
        }
    }

    pub fn num_samples(&self) -> usize {
        self.seeds.len()
    }

    /// `S_{N_j} / E_{N_j}` over samples.
    pub fn ratios_at(&self, j: usize) -> Vec<f64> {
        self.hits.iter().map(|h| h[j] as f64 / self.expected[j]).collect()
    }

    pub fn median_ratio(&self, j: usize) -> f64 {
        crate::stats::median(&self.ratios_at(j))
    }

    pub fn quantiles(&self) -> Vec<RatioQuantiles> {
        (0..self.checkpoints.len())
            .map(|j| {
                let r = self.ratios_at(j);
                RatioQuantiles {
                    n: self.checkpoints[j],
                    expected: self.expected[j],
                    q05: quantile(&r, 0.05),
                    q25: quantile(&r, 0.25),
                    median: quantile(&r, 0.5),
                    q75: quantile(&r, 0.75),
                    q95: quantile(&r, 0.95),
                }
            })
            .collect()
    }

    /// Checkpoints in the top decade of `E`: `E_{N_j} >= E_{N_max}/10`.
    fn top_decade(&self) -> impl Iterator<Item = usize> + '_ {
        let top = *self.expected.last().unwrap_or(&0.0);
        (0..self.checkpoints.len()).filter(move |&j| self.expected[j] > 0.0 && self.expected[j] >= top / 10.0)
    }

    /// Least-squares slope of `ln max(|S_N - E_N|, 0.5)` against `ln E_N`
    /// over the top decade of `E`.
    pub fn error_exponent(&self, sample: usize) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .top_decade()
            .map(|j| {
                let err = (self.hits[sample][j] as f64 - self.expected[j]).abs().max(ERROR_FLOOR);
                (self.expected[j].ln(), err.ln())
            })
            .collect();
        fit_line(&pts).map(|f| f.slope)
    }

    /// Same fit applied to the running maximum of `|S_N - E_N|` over all
    /// checkpoints so far.
    pub fn envelope_exponent(&self, sample: usize) -> Option<f64> {
        let mut running = ERROR_FLOOR;
        let env: Vec<f64> = (0..self.checkpoints.len())
            .map(|j| {
                running = running.max((self.hits[sample][j] as f64 - self.expected[j]).abs());
                running
            })
            .collect();
        let pts: Vec<(f64, f64)> = self.top_decade().map(|j| (self.expected[j].ln(), env[j].ln())).collect();
        fit_line(&pts).map(|f| f.slope)
    }

    /// Fraction of samples whose exponent is at most `bound`; samples without
    /// a fit count as failures.
    pub fn exponent_pass_fraction(&self, bound: f64) -> f64 {
        let ok = (0..self.num_samples())
            .filter(|&i| self.error_exponent(i).is_some_and(|e| e <= bound))
            .count();
        ok as f64 / self.num_samples().max(1) as f64
    }

    /// Index of the last checkpoint at or below `N_max / 2`.
    fn half_index(&self) -> Option<usize> {
        let half = self.checkpoints.last()? / 2;
        self.checkpoints.iter().rposition(|&n| n <= half)
    }

    /// Fraction of samples with no new hit between `N_max/2` and `N_max`.
    pub fn stabilized_fraction(&self) -> f64 {
        let Some(h) = self.half_index() else { return 0.0 };
        let last = self.checkpoints.len() - 1;
        let ok = self.hits.iter().filter(|s| s[h] == s[last]).count();
        ok as f64 / self.num_samples().max(1) as f64
    }

    /// Fraction of samples that gain at least one hit over the top decade of `E`.
    pub fn growing_fraction(&self) -> f64 {
        let idx: Vec<usize> = self.top_decade().collect();
        let ok = self
            .hits
            .iter()
            .filter(|s| s[*idx.first().unwrap_or(&0)] < s[self.checkpoints.len() - 1])
            .count();
        ok as f64 / self.num_samples().max(1) as f64
    }

    /// CSV with columns `seed,N,E_N,S_N,ratio`, one row per sample and checkpoint.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (seed, hits) in self.seeds.iter().zip(&self.hits) {
            for (j, &n) in self.checkpoints.iter().enumerate() {
                w.serialize(CsvRow {
                    seed: *seed,
                    n,
                    expected: self.expected[j],
                    hits: hits[j],
                    ratio: hits[j] as f64 / self.expected[j],
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let exps: Vec<f64> = (0..self.num_samples()).filter_map(|i| self.error_exponent(i)).collect();
        let envs: Vec<f64> = (0..self.num_samples()).filter_map(|i| self.envelope_exponent(i)).collect();
        let med = |v: &[f64]| if v.is_empty() { None } else { Some(crate::stats::median(v)) };
        serde_json::json!({
            "samples": self.num_samples(),
            "quantiles": self.quantiles(),
            "median_error_exponent": med(&exps),
            "median_envelope_exponent": med(&envs),
            "exponent_pass_fraction_0_75": self.exponent_pass_fraction(0.75),
            "stabilized_fraction": self.stabilized_fraction(),
            "error_floor": ERROR_FLOOR,
        })
    }
}

/// Hit counts of `num_samples` independent orbits, without a mass requirement.
pub fn hit_experiment(
    g: &MarkovGibbs,
    seq: &CylinderSequence,
    checkpoints: &[u64],
    num_samples: usize,
    seed: u64,
) -> Result<HitStatistics, OrbitError> {
    let n_max = check_checkpoints(checkpoints)?;
    if n_max > seq.len() {
        return Err(OrbitError::SequenceTooShort { n: n_max, len: seq.len() });
    }
    if num_samples == 0 {
        return Err(OrbitError::NoSamples);
    }
    let expected = seq.expected_hits_at(g, checkpoints);
    Ok(HitStatistics::collect(checkpoints.to_vec(), expected, seed, num_samples, |s| {
        let mut x = SymbolicOrbit::sample(g, s);
        hit_count(&mut x, seq, checkpoints)
    }))
}

/// [`hit_experiment`] for sequences expected to be strongly Borel–Cantelli;
/// requires `E_{N_max} >= 20`.
pub fn sbc_experiment(
    g: &MarkovGibbs,
    seq: &CylinderSequence,
    checkpoints: &[u64],
    num_samples: usize,
    seed: u64,
) -> Result<HitStatistics, OrbitError> {
    let n_max = check_checkpoints(checkpoints)?;
    let mass = seq.expected_hits_at(g, &[n_max])[0];
    if mass < MIN_MASS {
        return Err(OrbitError::MassTooSmall(mass));
    }
    hit_experiment(g, seq, checkpoints, num_samples, seed)
}
