//! Target sequences of cylinders, expected hit counts and the correlation-sum
//! criterion.
//!
//! Sequences are indexed from 1. A derived sequence is stored compactly as
//! its base cylinders `C̃_k` and lengths `l_k`: for `s_{k-1} < n <= s_k` the
//! target is `C_n = σ^{n - s_k} C̃_k`, the base word on `Λ̃_k + s_k - n`.

mod construct;
mod sp;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::gibbs::MarkovGibbs;
use crate::shift::{Cylinder, Interval, ShiftError, Sides, Symbol};

pub use construct::{
    derive_sequence, prop16_sequence, shrinking_target_sequence, thm22_counterexample,
    thm23_counterexample, Placement, Prop16, Thm22, Thm23,
};
pub use sp::{default_grid, sp_ratio, sp_verdict, SpReport, SpRow, Verdict, MAX_WINDOW};

/// Largest `D` reported as a `D`-nested tag.
pub const NESTED_TAG_MAX: u64 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BcError {
    #[error("{base} base cylinders but {lengths} lengths")]
    LengthMismatch { base: usize, lengths: usize },
    #[error("length l_{0} must be positive")]
    ZeroLength(usize),
    #[error("sequence is empty")]
    EmptySequence,
    #[error("index {n} outside 1..={len}")]
    IndexOutOfRange { n: u64, len: u64 },
    #[error("window [{m}, {n}] has zero total measure")]
    ZeroMassWindow { m: u64, n: u64 },
    #[error("window of {0} indices exceeds the cap of {MAX_WINDOW}")]
    WindowTooLarge(u64),
    #[error("invalid window [{m}, {n}]")]
    BadWindow { m: u64, n: u64 },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("lengths must be nondecreasing: l_{k} < l_{prev}", prev = .k - 1)]
    NotMonotone { k: usize },
    #[error("eps = {0} outside (0, 1)")]
    EpsOutOfRange(f64),
    #[error("count K = {0} too small")]
    CountTooSmall(usize),
    #[error("base measures do not look summable: last half carries {tail_share:.3} of the total")]
    DivergentBase { tail_share: f64 },
    #[error("cumulative length overflows 64 bits")]
    LengthOverflow,
    #[error("word measure stops decreasing after {0} symbols")]
    NoDecay(usize),
    #[error(transparent)]
    Shift(#[from] ShiftError),
}

/// How the intervals of a sequence sit relative to the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    /// All pairs of intervals are `D`-nested.
    DNested(u64),
    /// Centres within `[-l/2, l/2]` for the derivation lengths `l`.
    Centered,
    /// Left endpoints within `[0, l]` for the derivation lengths `l`.
    Aligned,
    Free,
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alignment::DNested(d) => write!(f, "D_nested({d})"),
            Alignment::Centered => f.write_str("l_centered"),
            Alignment::Aligned => f.write_str("l_aligned"),
            Alignment::Free => f.write_str("free"),
        }
    }
}

impl Serialize for Alignment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Alignment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "l_centered" => Ok(Alignment::Centered),
            "l_aligned" => Ok(Alignment::Aligned),
            "free" => Ok(Alignment::Free),
            _ => s
                .strip_prefix("D_nested(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|v| v.parse().ok())
                .map(Alignment::DNested)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown alignment tag {s:?}"))),
        }
    }
}

/// Base cylinders, lengths and partial sums `s_0 = 0 < s_1 < …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    base: Vec<Cylinder>,
    lengths: Vec<u64>,
    partial: Vec<u64>,
}

impl Derivation {
    pub fn base(&self) -> &[Cylinder] {
        &self.base
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    /// `s_0, s_1, …, s_K`.
    pub fn partial_sums(&self) -> &[u64] {
        &self.partial
    }

    /// Block index `k` (1-based) with `s_{k-1} < n <= s_k`.
    pub fn block_of(&self, n: u64) -> usize {
        self.partial.partition_point(|&s| s < n)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Explicit(Vec<Cylinder>),
    Derived(Derivation),
}

/// A target sequence `C_1, C_2, …, C_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSequence {
    storage: Storage,
    alignment: Alignment,
}

/// Running extremes of interval features used for the alignment tag.
#[derive(Default)]
struct Spread {
    lo: Option<(i64, i64)>,
    hi: Option<(i64, i64)>,
    c2: Option<(i64, i64)>,
}

impl Spread {
    fn widen(slot: &mut Option<(i64, i64)>, a: i64, b: i64) {
        *slot = Some(match *slot {
            None => (a, b),
            Some((x, y)) => (x.min(a), y.max(b)),
        });
    }

    /// Adds every interval `iv + t`, `t` in `0..count`.
    fn add_run(&mut self, iv: Interval, count: u64) {
        let t = count as i64 - 1;
        Self::widen(&mut self.lo, iv.lo(), iv.lo() + t);
        Self::widen(&mut self.hi, iv.hi(), iv.hi() + t);
        Self::widen(&mut self.c2, iv.center2(), iv.center2() + 2 * t);
    }

    /// A `D` such that all pairs are `D`-nested: two intervals whose left
    /// (or right) endpoints differ by at most `D`, or whose centres differ by
    /// at most `D`, are `D`-nested.
    fn nested_bound(&self) -> u64 {
        let width = |s: Option<(i64, i64)>| s.map_or(0, |(a, b)| (b - a) as u64);
        width(self.lo).min(width(self.hi)).min(width(self.c2) / 2)
    }
}

impl CylinderSequence {
    pub fn explicit(cylinders: Vec<Cylinder>) -> Result<Self, BcError> {
        if cylinders.is_empty() {
            return Err(BcError::EmptySequence);
        }
        let mut spread = Spread::default();
        for c in &cylinders {
            spread.add_run(c.interval(), 1);
        }
        let d = spread.nested_bound();
        let alignment = if d <= NESTED_TAG_MAX {
            Alignment::DNested(d)
        } else {
            Alignment::Free
        };
        Ok(Self {
            storage: Storage::Explicit(cylinders),
            alignment,
        })
    }

    fn derived(derivation: Derivation) -> Self {
        let mut spread = Spread::default();
        let mut aligned = true;
        let mut centered = true;
        for (c, &l) in derivation.base.iter().zip(&derivation.lengths) {
            // Block k covers the base interval translated by 0..l_k.
            let iv = c.interval();
            spread.add_run(iv, l);
            let l = l as i64;
            aligned &= iv.lo() >= 0 && iv.lo() + l - 1 <= l;
            centered &= iv.center2() >= -l && iv.center2() + 2 * (l - 1) <= l;
        }
        let d = spread.nested_bound();
        let alignment = if d <= NESTED_TAG_MAX {
            Alignment::DNested(d)
        } else if centered {
            Alignment::Centered
        } else if aligned {
            Alignment::Aligned
        } else {
            Alignment::Free
        };
        Self {
            storage: Storage::Derived(derivation),
            alignment,
        }
    }

    pub fn len(&self) -> u64 {
        match &self.storage {
            Storage::Explicit(v) => v.len() as u64,
            Storage::Derived(d) => *d.partial.last().expect("s_0 present"),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn alignment(&self) -> Alignment {
        self.alignment
    }

    pub fn derivation(&self) -> Option<&Derivation> {
        match &self.storage {
            Storage::Derived(d) => Some(d),
            Storage::Explicit(_) => None,
        }
    }

    fn check_index(&self, n: u64) -> Result<(), BcError> {
        if n == 0 || n > self.len() {
            return Err(BcError::IndexOutOfRange { n, len: self.len() });
        }
        Ok(())
    }

    /// Interval and word of `C_n` without cloning the word.
    pub fn parts(&self, n: u64) -> Result<(Interval, &[Symbol]), BcError> {
        self.check_index(n)?;
        Ok(match &self.storage {
            Storage::Explicit(v) => {
                let c = &v[(n - 1) as usize];
                (c.interval(), c.word())
            }
            Storage::Derived(d) => {
                let k = d.block_of(n);
                let c = &d.base[k - 1];
                let offset = d.partial[k] as i64 - n as i64;
                (c.interval().translate(offset), c.word())
            }
        })
    }

    /// `C_n` (1-based).
    pub fn cylinder(&self, n: u64) -> Result<Cylinder, BcError> {
        match &self.storage {
            Storage::Explicit(v) => {
                self.check_index(n)?;
                Ok(v[(n - 1) as usize].clone())
            }
            Storage::Derived(d) => {
                self.check_index(n)?;
                let k = d.block_of(n);
                Ok(d.base[k - 1].shifted(n as i64 - d.partial[k] as i64))
            }
        }
    }

    /// Rejects sequences with negative positions on a one-sided shift.
    pub fn check_sides(&self, sides: Sides) -> Result<(), BcError> {
        match &self.storage {
            Storage::Explicit(v) => v.iter().try_for_each(|c| sides.check(&c.interval()))?,
            Storage::Derived(d) => d.base.iter().try_for_each(|c| sides.check(&c.interval()))?,
        }
        Ok(())
    }

    /// `μ(C_n)` for `n = 1..=n_max`.
    pub fn measures(&self, g: &MarkovGibbs, n_max: u64) -> Vec<f64> {
        let n_max = n_max.min(self.len());
        match &self.storage {
            Storage::Explicit(v) => v[..n_max as usize].iter().map(|c| g.cylinder_measure(c)).collect(),
            Storage::Derived(d) => {
                let mut out = Vec::with_capacity(n_max as usize);
                for (k, c) in d.base.iter().enumerate() {
                    if d.partial[k] >= n_max {
                        break;
                    }
                    let mu = g.cylinder_measure(c);
                    let count = d.partial[k + 1].min(n_max) - d.partial[k];
                    out.extend(std::iter::repeat(mu).take(count as usize));
                }
                out
            }
        }
    }

    /// `E_N` at each of the given nondecreasing checkpoints.
    pub fn expected_hits_at(&self, g: &MarkovGibbs, checkpoints: &[u64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut total = 0.0;
        let mut done = 0u64;
        match &self.storage {
            Storage::Explicit(v) => {
                for &cp in checkpoints {
                    let cp = cp.min(self.len());
                    while done < cp {
                        total += g.cylinder_measure(&v[done as usize]);
                        done += 1;
                    }
                    out.push(total);
                }
            }
            Storage::Derived(d) => {
                let mu: Vec<f64> = d.base.iter().map(|c| g.cylinder_measure(c)).collect();
                let mut k = 0usize;
                for &cp in checkpoints {
                    let cp = cp.min(self.len());
                    while done < cp {
                        let block_end = d.partial[k + 1];
                        let upto = block_end.min(cp);
                        total += (upto - done) as f64 * mu[k];
                        done = upto;
                        if done == block_end {
                            k += 1;
                        }
                    }
                    out.push(total);
                }
            }
        }
        out
    }
}

/// `E_N = Σ_{n <= N} μ(C_n)`; indices past the end of the sequence add nothing.
pub fn expected_hits(g: &MarkovGibbs, seq: &CylinderSequence, n: u64) -> f64 {
    seq.expected_hits_at(g, &[n])[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::TransitionMatrix;

    fn gm() -> (TransitionMatrix, MarkovGibbs) {
        let a = TransitionMatrix::golden_mean();
        let g = MarkovGibbs::parry(&a).unwrap();
        (a, g)
    }

    #[test]
    fn expected_hits_of_constant_sequence() {
        let (a, g) = gm();
        let c = Cylinder::new(&a, 0, vec![0, 1]).unwrap();
        let q = g.cylinder_measure(&c);
        let seq = CylinderSequence::explicit(vec![c; 10]).unwrap();
        assert!((expected_hits(&g, &seq, 7) - 7.0 * q).abs() < 1e-14);
        assert_eq!(expected_hits(&g, &seq, 0), 0.0);
        assert_eq!(seq.alignment(), Alignment::DNested(0));
    }

    #[test]
    fn derived_unfolding() {
        let (a, _) = gm();
        let base = Cylinder::new(&a, 0, vec![0]).unwrap();
        let seq = derive_sequence(vec![base.clone(), base.clone()], vec![2, 2]).unwrap();
        assert_eq!(seq.len(), 4);
        assert_eq!(seq.cylinder(1).unwrap(), base.shifted(-1));
        assert_eq!(seq.cylinder(2).unwrap(), base);
        assert_eq!(seq.cylinder(3).unwrap(), base.shifted(-1));
        assert_eq!(seq.cylinder(4).unwrap(), base);
        assert_eq!(seq.cylinder(1).unwrap().interval(), Interval::new(1, 1).unwrap());
        assert!(seq.cylinder(5).is_err());
        let single = derive_sequence(vec![base.clone()], vec![1]).unwrap();
        assert_eq!(single.cylinder(1).unwrap(), base);
    }

    #[test]
    fn alignment_tags() {
        let (a, _) = gm();
        let base = Cylinder::new(&a, 0, vec![0]).unwrap();
        let lengths: Vec<u64> = (1..=20).collect();
        let seq = derive_sequence(vec![base; 20], lengths).unwrap();
        assert_eq!(seq.alignment(), Alignment::Aligned);
        assert_eq!(Alignment::DNested(3).to_string(), "D_nested(3)");
        let json = serde_json::to_string(&Alignment::Centered).unwrap();
        assert_eq!(serde_json::from_str::<Alignment>(&json).unwrap(), Alignment::Centered);
        let json = serde_json::to_string(&Alignment::DNested(2)).unwrap();
        assert_eq!(serde_json::from_str::<Alignment>(&json).unwrap(), Alignment::DNested(2));
    }

    #[test]
    fn block_lookup() {
        let (a, _) = gm();
        let base = Cylinder::new(&a, 0, vec![0]).unwrap();
        let seq = derive_sequence(vec![base; 3], vec![1, 2, 3]).unwrap();
        let d = seq.derivation().unwrap();
        let blocks: Vec<usize> = (1..=6).map(|n| d.block_of(n)).collect();
        assert_eq!(blocks, vec![1, 2, 2, 3, 3, 3]);
    }
}
