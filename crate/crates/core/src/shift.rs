//! Alphabets, transition matrices, intervals and cylinders of a topological
//! Markov chain.
//!
//! Symbols are `0..M`. A point of the two-sided shift is a bi-infinite
//! sequence `ω` with `A[ω_i][ω_{i+1}] = 1` for every `i`; a [`Cylinder`] pins
//! the symbols of `ω` on a finite [`Interval`] `[n⁻, n⁺]`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A symbol of the alphabet `0..M`.
pub type Symbol = u8;

/// Largest supported alphabet (rows are stored as 64-bit masks).
pub const MAX_ALPHABET: usize = 64;

/// Longest word [`enumerate_words`] will produce.
pub const MAX_ENUM_LEN: usize = 30;

/// Bound on interval endpoints accepted from external input.
pub const ENDPOINT_BOUND: i64 = i32::MAX as i64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShiftError {
    #[error("transition matrix must be square")]
    NotSquare,
    #[error("alphabet size {0} outside 2..=64")]
    AlphabetSize(usize),
    #[error("matrix entry ({row}, {col}) = {value} is not 0 or 1")]
    NotBinary { row: usize, col: usize, value: i64 },
    #[error("{kind} {index} of the transition matrix is all zeros")]
    ZeroRowOrColumn { kind: &'static str, index: usize },
    #[error("no power A^K with K <= {cap} is strictly positive")]
    NotTransitive { cap: usize },
    #[error("word length {0} outside 1..={MAX_ENUM_LEN}")]
    LengthTooLarge(usize),
    #[error("invalid interval [{lo}, {hi}]")]
    BadInterval { lo: i64, hi: i64 },
    #[error("word has {word} symbols but the interval has {interval} positions")]
    LengthMismatch { word: usize, interval: u64 },
    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange { symbol: i64, size: usize },
    #[error("word is not admissible: transition {from} -> {to} at offset {offset}")]
    Inadmissible { offset: usize, from: Symbol, to: Symbol },
    #[error("one-sided shift needs n- >= 0, got {0}")]
    NegativeIndex(i64),
}

/// 0/1 transition matrix of a transitive subshift of finite type.
#[derive(Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    size: usize,
    rows: Vec<u64>,
    transitivity_k: usize,
}

fn bool_mul(x: &[u64], a: &[u64]) -> Vec<u64> {
    x.iter()
        .map(|&row| {
            let mut out = 0u64;
            let mut bits = row;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                out |= a[j];
                bits &= bits - 1;
            }
            out
        })
        .collect()
}

impl TransitionMatrix {
    /// Validates a 0/1 matrix and finds the smallest `K` with `A^K > 0`.
    pub fn new(entries: &[Vec<u8>]) -> Result<Self, ShiftError> {
        let wide: Vec<Vec<i64>> = entries
            .iter()
            .map(|r| r.iter().map(|&v| i64::from(v)).collect())
            .collect();
        Self::from_integers(&wide)
    }

    /// Same as [`TransitionMatrix::new`] for untrusted integer input.
    pub fn from_integers(entries: &[Vec<i64>]) -> Result<Self, ShiftError> {
        let size = entries.len();
        if entries.iter().any(|r| r.len() != size) {
            return Err(ShiftError::NotSquare);
        }
        if !(2..=MAX_ALPHABET).contains(&size) {
            return Err(ShiftError::AlphabetSize(size));
        }
        let mut rows = vec![0u64; size];
        for (i, row) in entries.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => rows[i] |= 1 << j,
                    _ => {
                        return Err(ShiftError::NotBinary {
                            row: i,
                            col: j,
                            value: v,
                        })
                    }
                }
            }
        }
        if let Some(i) = rows.iter().position(|&r| r == 0) {
            return Err(ShiftError::ZeroRowOrColumn {
                kind: "row",
                index: i,
            });
        }
        let cols = rows.iter().fold(0u64, |acc, &r| acc | r);
        let full = full_mask(size);
        if cols != full {
            let j = (!cols & full).trailing_zeros() as usize;
            return Err(ShiftError::ZeroRowOrColumn {
                kind: "column",
                index: j,
            });
        }

        let cap = size * size;
        let mut power = rows.clone();
        for k in 1..=cap {
            if power.iter().all(|&r| r == full) {
                return Ok(Self {
                    size,
                    rows,
                    transitivity_k: k,
                });
            }
            power = bool_mul(&power, &rows);
        }
        Err(ShiftError::NotTransitive { cap })
    }

    /// Full shift on `size` symbols.
    pub fn full(size: usize) -> Result<Self, ShiftError> {
        Self::new(&vec![vec![1u8; size]; size])
    }

    /// The golden-mean shift `[[1,1],[1,0]]` (the word `11` is forbidden).
    pub fn golden_mean() -> Self {
        Self::new(&[vec![1, 1], vec![1, 0]]).expect("golden mean matrix is primitive")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Smallest `K >= 1` with every entry of `A^K` positive.
    pub fn transitivity_k(&self) -> usize {
        self.transitivity_k
    }

    #[inline]
    pub fn allows(&self, from: Symbol, to: Symbol) -> bool {
        (self.rows[from as usize] >> to) & 1 == 1
    }

    pub fn successors(&self, from: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        let row = self.rows[from as usize];
        (0..self.size as Symbol).filter(move |&j| (row >> j) & 1 == 1)
    }

    pub fn entries(&self) -> Vec<Vec<u8>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| ((self.rows[i] >> j) & 1) as u8).collect())
            .collect()
    }

    /// Checks a word for symbol range and consecutive admissibility.
    pub fn check_word(&self, word: &[Symbol]) -> Result<(), ShiftError> {
        if let Some(&s) = word.iter().find(|&&s| s as usize >= self.size) {
            return Err(ShiftError::SymbolOutOfRange {
                symbol: i64::from(s),
                size: self.size,
            });
        }
        for (offset, pair) in word.windows(2).enumerate() {
            if !self.allows(pair[0], pair[1]) {
                return Err(ShiftError::Inadmissible {
                    offset,
                    from: pair[0],
                    to: pair[1],
                });
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        self.check_word(word).is_ok()
    }
}

fn full_mask(size: usize) -> u64 {
    if size == 64 {
        u64::MAX
    } else {
        (1u64 << size) - 1
    }
}

impl fmt::Debug for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionMatrix")
            .field("entries", &self.entries())
            .field("transitivity_k", &self.transitivity_k)
            .finish()
    }
}

/// Validates `entries` as the transition matrix of a transitive chain.
pub fn check_transitive(entries: &[Vec<u8>]) -> Result<TransitionMatrix, ShiftError> {
    TransitionMatrix::new(entries)
}

/// All admissible words of length `len`, in lexicographic order.
pub fn enumerate_words(a: &TransitionMatrix, len: usize) -> Result<Vec<Vec<Symbol>>, ShiftError> {
    if !(1..=MAX_ENUM_LEN).contains(&len) {
        return Err(ShiftError::LengthTooLarge(len));
    }
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(len);
    fn extend(a: &TransitionMatrix, len: usize, word: &mut Vec<Symbol>, out: &mut Vec<Vec<Symbol>>) {
        if word.len() == len {
            out.push(word.clone());
            return;
        }
        let next: Vec<Symbol> = match word.last() {
            None => (0..a.size() as Symbol).collect(),
            Some(&s) => a.successors(s).collect(),
        };
        for s in next {
            word.push(s);
            extend(a, len, word, out);
            word.pop();
        }
    }
    extend(a, len, &mut word, &mut out);
    Ok(out)
}

/// Finite integer interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Interval {
    lo: i64,
    hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Result<Self, ShiftError> {
        if lo > hi || lo.abs() > ENDPOINT_BOUND || hi.abs() > ENDPOINT_BOUND {
            return Err(ShiftError::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Interval of `len >= 1` positions starting at `lo`.
    pub fn starting_at(lo: i64, len: usize) -> Self {
        assert!(len >= 1, "empty interval");
        Self {
            lo,
            hi: lo + len as i64 - 1,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> u64 {
        (self.hi - self.lo + 1) as u64
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Twice the center, `n⁻ + n⁺`, kept integral.
    pub fn center2(&self) -> i64 {
        self.lo + self.hi
    }

    pub fn center(&self) -> f64 {
        self.center2() as f64 / 2.0
    }

    pub fn contains_index(&self, i: i64) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// The interval moved by `+offset`.
    pub fn translate(&self, offset: i64) -> Self {
        Self {
            lo: self.lo + offset,
            hi: self.hi + offset,
        }
    }

    pub fn hull(&self, other: &Interval) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Asymmetric distance: the least `D` such that `l2` lies in the
/// `D`-neighbourhood of `l1`.
pub fn delta(l1: &Interval, l2: &Interval) -> u64 {
    (l2.hi - l1.hi).max(l1.lo - l2.lo).max(0) as u64
}

/// Whether one of the intervals lies in the `d`-neighbourhood of the other.
pub fn is_d_nested(l1: &Interval, l2: &Interval, d: u64) -> bool {
    delta(l1, l2).min(delta(l2, l1)) <= d
}

/// Two-sided shift or the one-sided restriction to indices `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sides {
    #[default]
    TwoSided,
    OneSided,
}

impl Sides {
    pub fn check(&self, interval: &Interval) -> Result<(), ShiftError> {
        match self {
            Sides::OneSided if interval.lo < 0 => Err(ShiftError::NegativeIndex(interval.lo)),
            _ => Ok(()),
        }
    }
}

/// The set of points whose symbols on `interval` spell `word`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Cylinder {
    interval: Interval,
    word: Vec<Symbol>,
}

impl Cylinder {
    /// Cylinder with `word` starting at position `lo`.
    pub fn new(a: &TransitionMatrix, lo: i64, word: Vec<Symbol>) -> Result<Self, ShiftError> {
        if word.is_empty() {
            return Err(ShiftError::LengthMismatch {
                word: 0,
                interval: 1,
            });
        }
        let interval = Interval::new(lo, lo + word.len() as i64 - 1)?;
        Self::on(a, interval, word)
    }

    pub fn on(a: &TransitionMatrix, interval: Interval, word: Vec<Symbol>) -> Result<Self, ShiftError> {
        if word.len() as u64 != interval.len() {
            return Err(ShiftError::LengthMismatch {
                word: word.len(),
                interval: interval.len(),
            });
        }
        a.check_word(&word)?;
        Ok(Self { interval, word })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn word(&self) -> &[Symbol] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn symbol_at(&self, i: i64) -> Option<Symbol> {
        if self.interval.contains_index(i) {
            Some(self.word[(i - self.interval.lo) as usize])
        } else {
            None
        }
    }

    /// `σ^t C`: the same word on `Λ - t`.
    pub fn shifted(&self, t: i64) -> Cylinder {
        Cylinder {
            interval: self.interval.translate(-t),
            word: self.word.clone(),
        }
    }

    /// Whether the point `x` (as a symbol lookup) lies in the cylinder.
    pub fn contains_point(&self, x: impl Fn(i64) -> Symbol) -> bool {
        self.word
            .iter()
            .enumerate()
            .all(|(j, &s)| x(self.interval.lo + j as i64) == s)
    }
}

/// `σ^t C`.
pub fn shift_cylinder(c: &Cylinder, t: i64) -> Cylinder {
    c.shifted(t)
}

/// How two cylinders intersect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Overlap {
    /// Separated by `gap = n₂⁻ - n₁⁺ >= 2` (left one first).
    Disjoint { gap: u64 },
    /// Overlapping or adjacent, consistent: the intersection is a cylinder.
    Merged(Cylinder),
    /// Empty intersection.
    Inconsistent,
}

pub fn overlap_consistent(a: &TransitionMatrix, c1: &Cylinder, c2: &Cylinder) -> Overlap {
    let (left, right) = if c1.interval.lo <= c2.interval.lo {
        (c1, c2)
    } else {
        (c2, c1)
    };
    let gap = right.interval.lo - left.interval.hi;
    if gap >= 2 {
        return Overlap::Disjoint { gap: gap as u64 };
    }
    let hull = left.interval.hull(&right.interval);
    let mut word = Vec::with_capacity(hull.len() as usize);
    for i in hull.lo..=hull.hi {
        let s = match (left.symbol_at(i), right.symbol_at(i)) {
            (Some(x), Some(y)) if x != y => return Overlap::Inconsistent,
            (Some(x), _) | (None, Some(x)) => x,
            (None, None) => unreachable!("hull of touching intervals has no holes"),
        };
        word.push(s);
    }
    if !a.is_admissible(&word) {
        return Overlap::Inconsistent;
    }
    Overlap::Merged(Cylinder {
        interval: hull,
        word,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: i64, hi: i64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn transitivity_exponents() {
        assert_eq!(TransitionMatrix::full(2).unwrap().transitivity_k(), 1);
        assert_eq!(TransitionMatrix::golden_mean().transitivity_k(), 2);
        assert_eq!(
            TransitionMatrix::new(&[vec![0, 1], vec![1, 0]]),
            Err(ShiftError::NotTransitive { cap: 4 })
        );
    }

    #[test]
    fn wielandt_extremal_matrix() {
        // Cycle 0->1->...->M-1->0 plus the chord M-1 -> 1: K = (M-1)^2 + 1.
        let m = 5;
        let mut rows = vec![vec![0u8; m]; m];
        for i in 0..m {
            rows[i][(i + 1) % m] = 1;
        }
        rows[m - 1][1] = 1;
        assert_eq!(TransitionMatrix::new(&rows).unwrap().transitivity_k(), (m - 1) * (m - 1) + 1);
    }

    #[test]
    fn rejects_malformed_matrices() {
        assert_eq!(TransitionMatrix::new(&[vec![1, 1]]), Err(ShiftError::NotSquare));
        assert_eq!(TransitionMatrix::new(&[vec![1]]), Err(ShiftError::AlphabetSize(1)));
        assert!(matches!(
            TransitionMatrix::new(&[vec![1, 1], vec![0, 0]]),
            Err(ShiftError::ZeroRowOrColumn { kind: "row", index: 1 })
        ));
        assert!(matches!(
            TransitionMatrix::new(&[vec![1, 0], vec![1, 0]]),
            Err(ShiftError::ZeroRowOrColumn { kind: "column", index: 1 })
        ));
        assert!(matches!(
            TransitionMatrix::from_integers(&[vec![1, 2], vec![1, 1]]),
            Err(ShiftError::NotBinary { value: 2, .. })
        ));
    }

    #[test]
    fn word_enumeration() {
        let gm = TransitionMatrix::golden_mean();
        assert_eq!(enumerate_words(&gm, 2).unwrap(), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(enumerate_words(&gm, 5).unwrap().len(), 13);
        assert_eq!(enumerate_words(&TransitionMatrix::full(2).unwrap(), 3).unwrap().len(), 8);
        assert_eq!(enumerate_words(&gm, 0), Err(ShiftError::LengthTooLarge(0)));
        assert_eq!(enumerate_words(&gm, 31), Err(ShiftError::LengthTooLarge(31)));
    }

    #[test]
    fn asymmetric_distance() {
        assert_eq!(delta(&iv(0, 5), &iv(1, 3)), 0);
        assert_eq!(delta(&iv(0, 5), &iv(-2, 7)), 2);
        assert_eq!(delta(&iv(0, 3), &iv(10, 12)), 9);
    }

    #[test]
    fn d_nesting() {
        assert!(is_d_nested(&iv(0, 5), &iv(1, 3), 0));
        // [0,5] lies inside [-2,7], so the pair is nested for every D.
        assert!(is_d_nested(&iv(0, 5), &iv(-2, 7), 0));
        assert!(!is_d_nested(&iv(0, 5), &iv(-3, 2), 1));
        assert!(is_d_nested(&iv(0, 5), &iv(-3, 2), 3));
        assert!(!is_d_nested(&iv(0, 3), &iv(10, 12), 5));
    }

    #[test]
    fn shifting_cylinders() {
        let gm = TransitionMatrix::golden_mean();
        let c = Cylinder::new(&gm, 0, vec![0, 1, 0]).unwrap();
        assert_eq!(c.shifted(0), c);
        let s = c.shifted(3);
        assert_eq!(s.interval(), iv(-3, -1));
        assert_eq!(s.word(), c.word());
        // ω' ∈ σ³C iff ω'_j = ω_{j+3}: take ω with 0,1,0 at 0..=2.
        let omega = |i: i64| if i == 1 { 1 } else { 0 };
        assert!(c.contains_point(omega));
        assert!(s.contains_point(|j| omega(j + 3)));
        assert_eq!(c.shifted(2).shifted(-5), c.shifted(-3));
    }

    #[test]
    fn overlap_cases() {
        let gm = TransitionMatrix::golden_mean();
        let c1 = Cylinder::new(&gm, 0, vec![0, 1]).unwrap();
        let c2 = Cylinder::new(&gm, 1, vec![1, 0]).unwrap();
        assert_eq!(
            overlap_consistent(&gm, &c1, &c2),
            Overlap::Merged(Cylinder::new(&gm, 0, vec![0, 1, 0]).unwrap())
        );
        let c3 = Cylinder::new(&gm, 1, vec![0, 0]).unwrap();
        assert_eq!(overlap_consistent(&gm, &c1, &c3), Overlap::Inconsistent);
        let far = Cylinder::new(&gm, 5, vec![0, 0]).unwrap();
        assert_eq!(overlap_consistent(&gm, &c1, &far), Overlap::Disjoint { gap: 4 });
        assert_eq!(overlap_consistent(&gm, &far, &c1), Overlap::Disjoint { gap: 4 });
        // Adjacent: the junction 1 -> 1 is forbidden.
        let adj = Cylinder::new(&gm, 2, vec![1]).unwrap();
        assert_eq!(overlap_consistent(&gm, &c1, &adj), Overlap::Inconsistent);
        let adj_ok = Cylinder::new(&gm, 2, vec![0]).unwrap();
        assert_eq!(
            overlap_consistent(&gm, &c1, &adj_ok),
            Overlap::Merged(Cylinder::new(&gm, 0, vec![0, 1, 0]).unwrap())
        );
    }

    #[test]
    fn cylinder_validation() {
        let gm = TransitionMatrix::golden_mean();
        assert!(matches!(
            Cylinder::new(&gm, 0, vec![1, 1]),
            Err(ShiftError::Inadmissible { offset: 0, from: 1, to: 1 })
        ));
        assert!(matches!(
            Cylinder::new(&gm, 0, vec![2]),
            Err(ShiftError::SymbolOutOfRange { .. })
        ));
        assert!(Cylinder::on(&gm, iv(0, 2), vec![0]).is_err());
        assert!(Interval::new(3, 2).is_err());
        assert!(Interval::new(0, ENDPOINT_BOUND + 1).is_err());
        assert_eq!(Sides::OneSided.check(&iv(-1, 0)), Err(ShiftError::NegativeIndex(-1)));
        assert!(Sides::TwoSided.check(&iv(-1, 0)).is_ok());
    }

    fn arb_interval() -> impl Strategy<Value = Interval> {
        (-50i64..50, 0i64..20).prop_map(|(lo, len)| Interval::new(lo, lo + len).unwrap())
    }

    fn arb_cylinder() -> impl Strategy<Value = Cylinder> {
        (-20i64..20, proptest::collection::vec(0u8..2, 1..8)).prop_map(|(lo, mut w)| {
            // Repair into a golden-mean word: no two consecutive 1s.
            for i in 1..w.len() {
                if w[i - 1] == 1 {
                    w[i] = 0;
                }
            }
            Cylinder::new(&TransitionMatrix::golden_mean(), lo, w).unwrap()
        })
    }

    proptest! {
        #[test]
        fn delta_zero_iff_contained(l1 in arb_interval(), l2 in arb_interval()) {
            prop_assert_eq!(delta(&l1, &l2) == 0, l1.contains(&l2));
        }

        #[test]
        fn nesting_is_symmetric(l1 in arb_interval(), l2 in arb_interval(), d in 0u64..10) {
            prop_assert_eq!(is_d_nested(&l1, &l2, d), is_d_nested(&l2, &l1, d));
            // Agrees with the neighbourhood definition.
            let grown = |l: &Interval| Interval::new(l.lo() - d as i64, l.hi() + d as i64).unwrap();
            prop_assert_eq!(
                is_d_nested(&l1, &l2, d),
                grown(&l2).contains(&l1) || grown(&l1).contains(&l2)
            );
        }

        #[test]
        fn shift_preserves_word(c in arb_cylinder(), t in -100i64..100) {
            let s = c.shifted(t);
            prop_assert_eq!(s.interval().len(), c.interval().len());
            prop_assert!(TransitionMatrix::golden_mean().is_admissible(s.word()));
        }

        #[test]
        fn self_overlap_is_identity(c in arb_cylinder()) {
            let gm = TransitionMatrix::golden_mean();
            prop_assert_eq!(overlap_consistent(&gm, &c, &c), Overlap::Merged(c.clone()));
        }
    }
}
