//! Derived sequences and the generators built on them.

use rand::Rng;
use serde::Serialize;

use super::{BcError, CylinderSequence, Derivation};
use crate::gibbs::MarkovGibbs;
use crate::shift::{Cylinder, Interval, Symbol, TransitionMatrix};

/// Longest greedy word tried before giving up on reaching a measure threshold.
const GREEDY_WORD_CAP: usize = 10_000;

/// Longest interval tried by the shrinking-target generator.
const SHRINK_LEN_CAP: usize = 4096;

/// A base block carrying this share of the total in the second half of the
/// list is taken as evidence of a divergent series.
const DIVERGENCE_SHARE: f64 = 0.1;

/// Unfolds `C_n = σ^{n - s_k} C̃_k` for `s_{k-1} < n <= s_k`.
pub fn derive_sequence(base: Vec<Cylinder>, lengths: Vec<u64>) -> Result<CylinderSequence, BcError> {
    if base.len() != lengths.len() {
        return Err(BcError::LengthMismatch {
            base: base.len(),
            lengths: lengths.len(),
        });
    }
    if base.is_empty() {
        return Err(BcError::EmptySequence);
    }
    let mut partial = Vec::with_capacity(lengths.len() + 1);
    partial.push(0u64);
    let mut s = 0u64;
    for (k, &l) in lengths.iter().enumerate() {
        if l == 0 {
            return Err(BcError::ZeroLength(k + 1));
        }
        s = s.checked_add(l).ok_or(BcError::LengthOverflow)?;
        partial.push(s);
    }
    Ok(CylinderSequence::derived(Derivation {
        base,
        lengths,
        partial,
    }))
}

/// Where a base word is pinned before deriving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Base on `[0, L-1]`; block `k` then covers left endpoints `0..l_k`.
    Aligned,
    /// Each block's base is moved left by `⌊(l_k - 1)/2⌋` around a base centred at 0.
    Centered,
}

#[derive(Debug, Clone)]
pub struct Thm22 {
    pub sequence: CylinderSequence,
    /// `l_K == l_1`: the lengths never grow, the sequence is nested and the
    /// correlation sums may well stay bounded.
    pub bounded_warning: bool,
}

/// Derived sequence from a single base word repeated with lengths `l_1 <= l_2 <= …`.
pub fn thm22_counterexample(
    a: &TransitionMatrix,
    word: &[Symbol],
    lengths: &[u64],
    placement: Placement,
) -> Result<Thm22, BcError> {
    if lengths.is_empty() {
        return Err(BcError::EmptySequence);
    }
    if let Some(k) = lengths.windows(2).position(|w| w[1] < w[0]) {
        return Err(BcError::NotMonotone { k: k + 2 });
    }
    let len = word.len() as i64;
    let base = match placement {
        Placement::Aligned => Cylinder::new(a, 0, word.to_vec())?,
        Placement::Centered => Cylinder::new(a, -(len / 2), word.to_vec())?,
    };
    let bases = lengths
        .iter()
        .map(|&l| match placement {
            Placement::Aligned => base.clone(),
            Placement::Centered => base.shifted(((l.max(1) - 1) / 2) as i64),
        })
        .collect();
    let sequence = derive_sequence(bases, lengths.to_vec())?;
    Ok(Thm22 {
        sequence,
        bounded_warning: lengths.first() == lengths.last(),
    })
}

/// Greedy infinite word: start at the most likely symbol and always append
/// the symbol maximising the measure of the extended word (ties to the
/// smallest symbol). Returns prefix measures `μ(w_0..w_{L-1})`, `L = 1..`,
/// until one falls to `floor`.
fn greedy_prefixes(g: &MarkovGibbs, floor: f64) -> Result<(Vec<Symbol>, Vec<f64>), BcError> {
    let argmax = |it: &mut dyn Iterator<Item = (Symbol, f64)>| {
        it.fold(None, |best: Option<(Symbol, f64)>, (s, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((s, v)),
        })
    };
    let a = g.base();
    let marg = g.symbol_marginal();
    let (first, m0) = argmax(&mut marg.iter().enumerate().map(|(s, &v)| (s as Symbol, v))).expect("nonempty alphabet");
    let mut word = vec![first];
    let mut measures = vec![m0];
    let b = g.block_len();
    let mut state = None;
    while *measures.last().expect("nonempty") > floor {
        if word.len() >= GREEDY_WORD_CAP {
            return Err(BcError::NoDecay(word.len()));
        }
        let last = *word.last().expect("nonempty");
        let cur = *measures.last().expect("nonempty");
        let (s, m) = match state {
            None => {
                let mut cand = a.successors(last).map(|s| {
                    let mut w = word.clone();
                    w.push(s);
                    (s, g.word_measure(&w))
                });
                argmax(&mut cand).expect("no dead ends")
            }
            Some(u) => {
                let mut cand = a
                    .successors(last)
                    .filter_map(|s| g.step(u, s).map(|(_, p)| (s, cur * p)));
                argmax(&mut cand).expect("no dead ends")
            }
        };
        word.push(s);
        measures.push(m);
        if word.len() >= b {
            state = g.state_of(&word[word.len() - b..]);
        }
    }
    Ok((word, measures))
}

#[derive(Debug, Clone)]
pub struct Thm23 {
    pub sequence: CylinderSequence,
    /// The greedy word; `C̃_k` reads its prefix of length `L_k` on `[0, L_k - 1]`.
    pub word: Vec<Symbol>,
    /// `L_k` for `k = 2..=K`.
    pub word_lengths: Vec<usize>,
    /// `μ(C̃_k)` for `k = 2..=K`.
    pub base_measures: Vec<f64>,
    /// `l_k` for `k = 2..=K`.
    pub lengths: Vec<u64>,
    /// Envelope `Σ_{k > K} 1/(k ln² k) <= 1/ln K` on the remaining base mass.
    pub tail_bound: f64,
}

impl Thm23 {
    pub fn base_sum(&self) -> f64 {
        self.base_measures.iter().sum()
    }

    /// `Σ_n μ(C_n) = Σ_k l_k μ(C̃_k)`.
    pub fn total_measure(&self) -> f64 {
        self.lengths
            .iter()
            .zip(&self.base_measures)
            .map(|(&l, &m)| l as f64 * m)
            .sum()
    }

    /// Partial sums over `k <= k_max` of the base masses and of the derived masses.
    pub fn sums_up_to(&self, k_max: usize) -> (f64, f64) {
        let take = k_max.saturating_sub(1).min(self.base_measures.len());
        let base = self.base_measures[..take].iter().sum();
        let derived = self.lengths[..take]
            .iter()
            .zip(&self.base_measures)
            .map(|(&l, &m)| l as f64 * m)
            .sum();
        (base, derived)
    }
}

/// Base cylinders `C̃_k`, `k = 2..=K`, with `μ(C̃_k) <= 1/(k ln² k)` and
/// lengths `l_k = max(1, ⌊eps |Λ̃_k|⌋)`.
pub fn thm23_counterexample(g: &MarkovGibbs, eps: f64, count: usize) -> Result<Thm23, BcError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BcError::EpsOutOfRange(eps));
    }
    if count < 2 {
        return Err(BcError::CountTooSmall(count));
    }
    let target = |k: usize| {
        let l = (k as f64).ln();
        1.0 / (k as f64 * l * l)
    };
    let (word, prefixes) = greedy_prefixes(g, target(count))?;
    let a = g.base();
    let mut base = Vec::with_capacity(count - 1);
    let mut word_lengths = Vec::with_capacity(count - 1);
    let mut base_measures = Vec::with_capacity(count - 1);
    let mut lengths = Vec::with_capacity(count - 1);
    for k in 2..=count {
        let t = target(k);
        let len = prefixes.partition_point(|&m| m > t) + 1;
        base.push(Cylinder::new(a, 0, word[..len].to_vec())?);
        word_lengths.push(len);
        base_measures.push(prefixes[len - 1]);
        lengths.push(((eps * len as f64).floor() as u64).max(1));
    }
    let sequence = derive_sequence(base, lengths.clone())?;
    Ok(Thm23 {
        sequence,
        word_lengths,
        base_measures,
        lengths,
        tail_bound: 1.0 / (count as f64).ln(),
        word,
    })
}

#[derive(Debug, Clone)]
pub struct Prop16 {
    pub sequence: CylinderSequence,
    pub base_measures: Vec<f64>,
    pub lengths: Vec<u64>,
}

/// Derived sequence with `l_k = ⌊1/μ(C̃_k)⌋ + 1`, so every block carries
/// mass above one while the base masses are summable.
pub fn prop16_sequence(g: &MarkovGibbs, base: Vec<Cylinder>) -> Result<Prop16, BcError> {
    if base.len() < 2 {
        return Err(BcError::CountTooSmall(base.len()));
    }
    let base_measures: Vec<f64> = base.iter().map(|c| g.cylinder_measure(c)).collect();
    let total: f64 = base_measures.iter().sum();
    let tail: f64 = base_measures[base.len() / 2..].iter().sum();
    let tail_share = tail / total;
    if tail_share.is_nan() || tail_share > DIVERGENCE_SHARE {
        return Err(BcError::DivergentBase { tail_share });
    }
    let lengths = base_measures
        .iter()
        .map(|&m| {
            let inv = (1.0 / m).floor();
            if inv >= u64::MAX as f64 {
                Err(BcError::LengthOverflow)
            } else {
                Ok(inv as u64 + 1)
            }
        })
        .collect::<Result<Vec<u64>, _>>()?;
    let sequence = derive_sequence(base, lengths.clone())?;
    Ok(Prop16 {
        sequence,
        base_measures,
        lengths,
    })
}

/// Targets `C_n` reading `reference` on an interval with doubled centre drawn
/// uniformly from `[-d, d]`, of the least length with `μ(C_n) <= c/n`.
///
/// Every centre lies within `d/2` of 0, so the sequence is `d`-nested.
pub fn shrinking_target_sequence<R: Rng + ?Sized>(
    g: &MarkovGibbs,
    reference: impl Fn(i64) -> Symbol,
    c: f64,
    count: u64,
    d: u64,
    rng: &mut R,
) -> Result<CylinderSequence, BcError> {
    if count == 0 {
        return Err(BcError::EmptySequence);
    }
    let a = g.base();
    let d = d as i64;
    let floor = c / count as f64;
    // For each doubled centre, the nested family of intervals of matching
    // parity and the measure of the reference word on each.
    let mut families: Vec<Vec<(Interval, f64)>> = Vec::with_capacity((2 * d + 1) as usize);
    for c2 in -d..=d {
        let mut fam = Vec::new();
        let mut len = if c2.rem_euclid(2) == 0 { 1 } else { 2 };
        loop {
            if len > SHRINK_LEN_CAP {
                return Err(BcError::NoDecay(len));
            }
            let lo = (c2 - (len as i64 - 1)) / 2;
            let iv = Interval::starting_at(lo, len);
            let word: Vec<Symbol> = (iv.lo()..=iv.hi()).map(&reference).collect();
            a.check_word(&word)?;
            let m = g.word_measure(&word);
            fam.push((iv, m));
            if m <= floor {
                break;
            }
            len += 2;
        }
        families.push(fam);
    }
    let mut out = Vec::with_capacity(count as usize);
    for n in 1..=count {
        let fam = &families[rng.gen_range(0..=2 * d) as usize];
        let t = c / n as f64;
        let idx = fam.partition_point(|e| e.1 > t).min(fam.len() - 1);
        let iv = fam[idx].0;
        let word = (iv.lo()..=iv.hi()).map(&reference).collect();
        out.push(Cylinder::on(a, iv, word)?);
    }
    CylinderSequence::explicit(out)
}
