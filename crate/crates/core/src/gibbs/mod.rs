//! Gibbs measures of locally constant potentials on a subshift of finite type.
//!
//! A potential of memory `m` depends on `ω_0 … ω_{m-1}`. Its Gibbs measure is
//! the stationary Markov measure of the chain on admissible blocks of length
//! `b = max(m - 1, 1)` obtained by stochasticizing the weighted matrix
//! `L_uv = [u -> v admissible] · exp φ(u ∨ v)` with its Perron eigenvectors.

mod facts;
mod measure;
mod perron;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shift::{enumerate_words, Symbol, TransitionMatrix};

pub use facts::{fit_decay_envelope, DecayEnvelope, EnvelopeConstants, MixingError, MixingFit};
pub use measure::CorrelationTerm;

/// Largest supported potential memory.
pub const MAX_MEMORY: usize = 12;
/// Largest supported number of recoded states.
pub const MAX_STATES: usize = 4096;

/// Tolerance for stochasticity and stationarity residuals.
pub const STRUCTURAL_TOL: f64 = 1e-12;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GibbsError {
    #[error("block {block:?} has length {len}, expected the memory {memory}")]
    BlockLength { block: Vec<Symbol>, len: usize, memory: usize },
    #[error("block {0:?} is not admissible")]
    InadmissibleBlock(Vec<Symbol>),
    #[error("block {0:?} is given more than once")]
    DuplicateBlock(Vec<Symbol>),
    #[error("{missing} admissible blocks have no potential value")]
    MissingBlocks { missing: u128 },
    #[error("potential value for block {0:?} is not finite")]
    NonFinite(Vec<Symbol>),
    #[error("memory must be at least 1")]
    ZeroMemory,
    #[error("recoding blows up: memory {memory} gives {states} states (limits {MAX_MEMORY} and {MAX_STATES})")]
    BlowUp { memory: usize, states: u128 },
    #[error("recoded chain has period {0}; no spectral gap")]
    Periodic(u64),
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("{what} residual {residual:e} exceeds {STRUCTURAL_TOL:e}")]
    Residual { what: &'static str, residual: f64 },
}

/// Locally constant potential: a real value for every admissible `m`-block.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    memory: usize,
    values: BTreeMap<Vec<Symbol>, f64>,
}

/// Number of admissible words of length `len >= 1` (sum of entries of
/// `A^{len-1}`), saturating.
fn count_words(a: &TransitionMatrix, len: usize) -> u128 {
    let m = a.size();
    let mut ends = vec![1u128; m];
    for _ in 1..len {
        let mut next = vec![0u128; m];
        for (i, &c) in ends.iter().enumerate() {
            for j in a.successors(i as Symbol) {
                next[j as usize] = next[j as usize].saturating_add(c);
            }
        }
        ends = next;
    }
    ends.iter().fold(0u128, |acc, &c| acc.saturating_add(c))
}

impl Potential {
    /// Validates that `values` covers every admissible `memory`-block exactly
    /// once with finite values.
    pub fn new(
        a: &TransitionMatrix,
        memory: usize,
        values: impl IntoIterator<Item = (Vec<Symbol>, f64)>,
    ) -> Result<Self, GibbsError> {
        if memory == 0 {
            return Err(GibbsError::ZeroMemory);
        }
        if memory > MAX_MEMORY {
            return Err(GibbsError::BlowUp {
                memory,
                states: count_words(a, memory.saturating_sub(1).max(1)),
            });
        }
        let mut map = BTreeMap::new();
        for (block, v) in values {
            if block.len() != memory {
                return Err(GibbsError::BlockLength {
                    len: block.len(),
                    block,
                    memory,
                });
            }
            if !a.is_admissible(&block) {
                return Err(GibbsError::InadmissibleBlock(block));
            }
            if !v.is_finite() {
                return Err(GibbsError::NonFinite(block));
            }
            if map.insert(block.clone(), v).is_some() {
                return Err(GibbsError::DuplicateBlock(block));
            }
        }
        let needed = count_words(a, memory);
        if (map.len() as u128) < needed {
            return Err(GibbsError::MissingBlocks {
                missing: needed - map.len() as u128,
            });
        }
        Ok(Self {
            memory,
            values: map,
        })
    }

    /// Memory-1 potential equal to `c` everywhere.
    pub fn constant(a: &TransitionMatrix, c: f64) -> Self {
        Self {
            memory: 1,
            values: (0..a.size() as Symbol).map(|s| (vec![s], c)).collect(),
        }
    }

    /// Memory-1 potential `φ(ω) = values[ω_0]`.
    pub fn per_symbol(a: &TransitionMatrix, values: &[f64]) -> Result<Self, GibbsError> {
        Self::new(
            a,
            1,
            values.iter().enumerate().map(|(s, &v)| (vec![s as Symbol], v)),
        )
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn value(&self, block: &[Symbol]) -> Option<f64> {
        self.values.get(block).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[Symbol], f64)> {
        self.values.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// `φ + c`.
    pub fn plus_constant(&self, c: f64) -> Self {
        Self {
            memory: self.memory,
            values: self.values.iter().map(|(k, &v)| (k.clone(), v + c)).collect(),
        }
    }
}

/// Stationary Markov realisation of a Gibbs measure.
///
/// Immutable after [`MarkovGibbs::build`]; all queries take `&self`.
#[derive(Debug, Clone)]
pub struct MarkovGibbs {
    base: TransitionMatrix,
    memory: usize,
    block_len: usize,
    blocks: Vec<Vec<Symbol>>,
    index: HashMap<Vec<Symbol>, u32>,
    /// `next[u * M + s]`: state reached from `u` by appending symbol `s`.
    next: Vec<u32>,
    /// `next_prob[u * M + s] = P[u][next[u * M + s]]`.
    next_prob: Vec<f64>,
    rows: Vec<Vec<(u32, f64)>>,
    reversed: Vec<Vec<(u32, f64)>>,
    p: Vec<f64>,
    lambda: f64,
    pressure: f64,
    theta3: f64,
    powers: Option<measure::DensePowers>,
}

/// JSON export of the eigendata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureExport {
    pub pressure: f64,
    pub theta3: f64,
    #[serde(rename = "P")]
    pub transition: Vec<Vec<f64>>,
    pub p: Vec<f64>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl MarkovGibbs {
    /// Builds the Gibbs measure of `phi` on the shift defined by `a`.
    pub fn build(a: &TransitionMatrix, phi: &Potential) -> Result<Self, GibbsError> {
        let m = phi.memory;
        let b = m.saturating_sub(1).max(1);
        let states = count_words(a, b);
        if m > MAX_MEMORY || states > MAX_STATES as u128 {
            return Err(GibbsError::BlowUp { memory: m, states });
        }
        let alpha = a.size();
        let blocks = enumerate_words(a, b).expect("block length within enumeration bound");
        let index: HashMap<Vec<Symbol>, u32> = blocks
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let s_count = blocks.len();

        // Weighted edges u -> v labelled by the appended symbol.
        let phi_max = phi.values.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut next = vec![NONE; s_count * alpha];
        let mut weighted: Vec<Vec<(u32, f64)>> = vec![Vec::new(); s_count];
        let mut key = Vec::with_capacity(m);
        for (u, block) in blocks.iter().enumerate() {
            let last = *block.last().expect("blocks are nonempty");
            for s in a.successors(last) {
                let mut target = block[1..].to_vec();
                target.push(s);
                let v = index[&target];
                next[u * alpha + s as usize] = v;
                key.clear();
                match m {
                    1 => key.push(block[0]),
                    2 => key.extend_from_slice(&[block[0], s]),
                    _ => {
                        key.extend_from_slice(block);
                        key.push(s);
                    }
                }
                let value = phi.values[&key];
                weighted[u].push((v, (value - phi_max).exp()));
            }
        }

        let period = Self::period(&weighted);
        if period != 1 {
            return Err(GibbsError::Periodic(period));
        }

        let (lambda_scaled, r) = perron::right_vector(&weighted)?;
        let l = perron::left_vector(&weighted)?;
        let lambda = lambda_scaled * phi_max.exp();
        let pressure = lambda_scaled.ln() + phi_max;

        let mut rows: Vec<Vec<(u32, f64)>> = weighted
            .iter()
            .enumerate()
            .map(|(u, row)| {
                row.iter()
                    .map(|&(v, w)| (v, w * r[v as usize] / (lambda_scaled * r[u])))
                    .collect()
            })
            .collect();
        for row in &mut rows {
            let total: f64 = row.iter().map(|e| e.1).sum();
            for e in row.iter_mut() {
                e.1 /= total;
            }
        }

        let mut p: Vec<f64> = l.iter().zip(&r).map(|(x, y)| x * y).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        perron::refine_stationary(&rows, &mut p);

        let mut next_prob = vec![0.0; s_count * alpha];
        for (u, row) in rows.iter().enumerate() {
            for &(v, prob) in row {
                let s = *blocks[v as usize].last().expect("nonempty");
                next_prob[u * alpha + s as usize] = prob;
            }
        }

        let mut reversed: Vec<Vec<(u32, f64)>> = vec![Vec::new(); s_count];
        for (u, row) in rows.iter().enumerate() {
            for &(v, prob) in row {
                reversed[v as usize].push((u as u32, p[u] * prob / p[v as usize]));
            }
        }
        for row in &mut reversed {
            row.sort_by_key(|e| e.0);
            let total: f64 = row.iter().map(|e| e.1).sum();
            for e in row.iter_mut() {
                e.1 /= total;
            }
        }

        let mut g = Self {
            base: a.clone(),
            memory: m,
            block_len: b,
            blocks,
            index,
            next,
            next_prob,
            rows,
            reversed,
            p,
            lambda,
            pressure,
            theta3: 0.0,
            powers: None,
        };
        g.check_residuals()?;
        g.theta3 = perron::second_modulus(&g.rows, &g.p)?;
        if s_count <= measure::DENSE_LIMIT {
            g.powers = Some(measure::DensePowers::new(&g.dense_transition()));
        }
        log::debug!(
            "built Gibbs measure: {} states, pressure {:.12}, theta3 {:.6}",
            s_count,
            g.pressure,
            g.theta3
        );
        Ok(g)
    }

    /// Parry measure (measure of maximal entropy).
    pub fn parry(a: &TransitionMatrix) -> Result<Self, GibbsError> {
        Self::build(a, &Potential::constant(a, 0.0))
    }

    /// Period of the strongly connected weighted graph (gcd of cycle lengths).
    fn period(edges: &[Vec<(u32, f64)>]) -> u64 {
        let n = edges.len();
        let mut level = vec![u64::MAX; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        level[0] = 0;
        let mut g = 0u64;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &edges[u] {
                let v = v as usize;
                if level[v] == u64::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                } else {
                    g = gcd(g, (level[u] + 1).abs_diff(level[v]));
                }
            }
        }
        debug_assert!(level.iter().all(|&l| l != u64::MAX), "recoded graph is irreducible");
        g
    }

    fn check_residuals(&self) -> Result<(), GibbsError> {
        let stoch = self
            .rows
            .iter()
            .map(|row| (row.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        if stoch > STRUCTURAL_TOL {
            return Err(GibbsError::Residual {
                what: "row stochasticity",
                residual: stoch,
            });
        }
        let stat = perron::stationarity_residual(&self.rows, &self.p);
        if stat > STRUCTURAL_TOL || self.p.iter().any(|&x| x <= 0.0) {
            return Err(GibbsError::Residual {
                what: "stationarity",
                residual: stat,
            });
        }
        Ok(())
    }

    pub fn base(&self) -> &TransitionMatrix {
        &self.base
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Length `b` of the recoded blocks.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn num_states(&self) -> usize {
        self.blocks.len()
    }

    /// Recoded alphabet in lexicographic order.
    pub fn blocks(&self) -> &[Vec<Symbol>] {
        &self.blocks
    }

    pub fn state_of(&self, block: &[Symbol]) -> Option<usize> {
        self.index.get(block).map(|&i| i as usize)
    }

    /// State reached from `u` by reading symbol `s`, with its probability.
    #[inline]
    pub fn step(&self, u: usize, s: Symbol) -> Option<(usize, f64)> {
        let k = u * self.base.size() + s as usize;
        match self.next.get(k) {
            Some(&v) if v != NONE => Some((v as usize, self.next_prob[k])),
            _ => None,
        }
    }

    /// Stationary vector `p`.
    pub fn stationary(&self) -> &[f64] {
        &self.p
    }

    /// Distribution of the single symbol `ω_0`.
    pub fn symbol_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.base.size()];
        for (u, block) in self.blocks.iter().enumerate() {
            out[block[0] as usize] += self.p[u];
        }
        out
    }

    /// Nonzero entries `(v, P_uv)` of row `u`, sorted by `v`.
    pub fn transition_row(&self, u: usize) -> &[(u32, f64)] {
        &self.rows[u]
    }

    /// Row `u` of the time-reversed chain `Q_uv = p_v P_vu / p_u`.
    pub fn reversed_row(&self, u: usize) -> &[(u32, f64)] {
        &self.reversed[u]
    }

    pub fn transition(&self, u: usize, v: usize) -> f64 {
        self.rows[u]
            .iter()
            .find(|e| e.0 as usize == v)
            .map_or(0.0, |e| e.1)
    }

    pub fn dense_transition(&self) -> Vec<Vec<f64>> {
        let n = self.num_states();
        let mut out = vec![vec![0.0; n]; n];
        for (u, row) in self.rows.iter().enumerate() {
            for &(v, prob) in row {
                out[u][v as usize] = prob;
            }
        }
        out
    }

    /// Perron eigenvalue of the weighted matrix.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    /// Largest modulus among the non-Perron eigenvalues of `P`.
    pub fn theta3(&self) -> f64 {
        self.theta3
    }

    pub fn export(&self) -> MeasureExport {
        MeasureExport {
            pressure: self.pressure,
            theta3: self.theta3,
            transition: self.dense_transition(),
            p: self.p.clone(),
        }
    }
}
