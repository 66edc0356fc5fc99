//! Cylinder, joint and correlation evaluation.

use serde::{Deserialize, Serialize};

use super::MarkovGibbs;
use crate::shift::{Cylinder, Interval, Symbol};

/// Chains with at most this many states keep a table of dense powers `P^{2^j}`.
pub(super) const DENSE_LIMIT: usize = 64;

/// Snap tolerance for sparse bridging: the row is treated as stationary once
/// every entry is this close (relative to its mass) to `mass · p`.
const SNAP_TOL: f64 = 1e-15;

/// Squaring stops once consecutive levels differ by at most this.
const SATURATION_TOL: f64 = 4e-16;

/// `P^{2^j}` for `j = 0, 1, …` until the sequence settles at `1p`.
#[derive(Debug, Clone)]
pub(super) struct DensePowers {
    n: usize,
    levels: Vec<Vec<f64>>,
}

impl DensePowers {
    pub(super) fn new(p: &[Vec<f64>]) -> Self {
        let n = p.len();
        let mut levels = vec![p.iter().flatten().copied().collect::<Vec<f64>>()];
        while levels.len() < 64 {
            let last = levels.last().expect("nonempty");
            let mut sq = vec![0.0; n * n];
            for i in 0..n {
                for k in 0..n {
                    let a = last[i * n + k];
                    if a == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        sq[i * n + j] += a * last[k * n + j];
                    }
                }
            }
            // Renormalise rows so rounding cannot compound over 2^j steps.
            for row in sq.chunks_mut(n) {
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= total);
            }
            let change = sq.iter().zip(last).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            levels.push(sq);
            if change <= SATURATION_TOL {
                break;
            }
        }
        Self { n, levels }
    }

    fn level(&self, j: usize) -> &[f64] {
        &self.levels[j.min(self.levels.len() - 1)]
    }

    /// `v · P^steps`.
    fn apply(&self, v: &mut Vec<f64>, steps: u64) {
        let n = self.n;
        let mut tmp = vec![0.0; n];
        let mut bits = steps;
        let mut j = 0;
        while bits != 0 {
            if bits & 1 == 1 {
                let m = self.level(j);
                tmp.iter_mut().for_each(|x| *x = 0.0);
                for (i, &vi) in v.iter().enumerate() {
                    if vi == 0.0 {
                        continue;
                    }
                    let row = &m[i * n..(i + 1) * n];
                    for (t, &r) in tmp.iter_mut().zip(row) {
                        *t += vi * r;
                    }
                }
                std::mem::swap(v, &mut tmp);
            }
            bits >>= 1;
            j += 1;
        }
    }
}

/// One correlation value `R_mn`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTerm {
    pub m: i64,
    pub n: i64,
    pub value: f64,
}

/// Boundary data of a cylinder seen from the block chain.
enum Side {
    /// Mass concentrated on one state.
    Point { state: usize, weight: f64 },
    /// Weights per state (used for words shorter than a block).
    Spread(Vec<f64>),
}

impl MarkovGibbs {
    /// Measure of the cylinder; translation invariant.
    pub fn cylinder_measure(&self, c: &Cylinder) -> f64 {
        self.word_measure(c.word())
    }

    /// Measure of the set of points reading `word` at positions `0..len`.
    pub fn word_measure(&self, word: &[Symbol]) -> f64 {
        let b = self.block_len;
        if word.is_empty() {
            return 1.0;
        }
        if word.len() < b {
            return self
                .blocks
                .iter()
                .zip(&self.p)
                .filter(|(blk, _)| blk.starts_with(word))
                .map(|(_, &pu)| pu)
                .sum();
        }
        match self.walk(word) {
            Some((start, _, weight)) => self.p[start] * weight,
            None => 0.0,
        }
    }

    /// Follows `word` (length >= b) through the block chain: start state,
    /// end state and the product of transition probabilities.
    fn walk(&self, word: &[Symbol]) -> Option<(usize, usize, f64)> {
        let b = self.block_len;
        let start = self.state_of(&word[..b])?;
        let mut u = start;
        let mut w = 1.0;
        for &s in &word[b..] {
            let (v, prob) = self.step(u, s)?;
            u = v;
            w *= prob;
        }
        Some((start, u, w))
    }

    /// Left boundary: distribution over the state ending at the last symbol.
    fn left_side(&self, word: &[Symbol]) -> Option<Side> {
        if word.len() >= self.block_len {
            let (start, end, w) = self.walk(word)?;
            return Some(Side::Point {
                state: end,
                weight: self.p[start] * w,
            });
        }
        Some(Side::Spread(
            self.blocks
                .iter()
                .zip(&self.p)
                .map(|(blk, &pu)| if blk.ends_with(word) { pu } else { 0.0 })
                .collect(),
        ))
    }

    /// Right boundary: conditional weight given the state at the first symbol.
    fn right_side(&self, word: &[Symbol]) -> Option<Side> {
        if word.len() >= self.block_len {
            let (start, _, w) = self.walk(word)?;
            return Some(Side::Point { state: start, weight: w });
        }
        Some(Side::Spread(
            self.blocks
                .iter()
                .map(|blk| if blk.starts_with(word) { 1.0 } else { 0.0 })
                .collect(),
        ))
    }

    /// `left · P^steps · right`.
    fn bridge(&self, left: Side, steps: u64, right: Side) -> f64 {
        let n = self.num_states();
        if let (Some(powers), Side::Point { state, weight }, Side::Point { state: s2, weight: w2 }) =
            (&self.powers, &left, &right)
        {
            let mut v = vec![0.0; n];
            v[*state] = 1.0;
            powers.apply(&mut v, steps);
            return weight * v[*s2] * w2;
        }
        let mut v = match left {
            Side::Point { state, weight } => {
                let mut v = vec![0.0; n];
                v[state] = weight;
                v
            }
            Side::Spread(v) => v,
        };
        match &self.powers {
            Some(powers) => powers.apply(&mut v, steps),
            None => self.sparse_apply(&mut v, steps),
        }
        match right {
            Side::Point { state, weight } => v[state] * weight,
            Side::Spread(c) => v.iter().zip(&c).map(|(a, b)| a * b).sum(),
        }
    }

    fn sparse_apply(&self, v: &mut Vec<f64>, steps: u64) {
        let mut tmp = vec![0.0; v.len()];
        for _ in 0..steps {
            tmp.iter_mut().for_each(|x| *x = 0.0);
            for (u, row) in self.rows.iter().enumerate() {
                let vu = v[u];
                if vu == 0.0 {
                    continue;
                }
                for &(w, prob) in row {
                    tmp[w as usize] += vu * prob;
                }
            }
            std::mem::swap(v, &mut tmp);
            let mass: f64 = v.iter().sum();
            let close = v
                .iter()
                .zip(&self.p)
                .all(|(&x, &pu)| (x - mass * pu).abs() <= SNAP_TOL * mass);
            if close {
                v.iter_mut().zip(&self.p).for_each(|(x, &pu)| *x = mass * pu);
                return;
            }
        }
    }

    /// Measure of the intersection of two cylinders given as (interval, word).
    pub fn joint_parts(&self, i1: Interval, w1: &[Symbol], i2: Interval, w2: &[Symbol]) -> f64 {
        let ((li, lw), (ri, rw)) = if i1.lo() <= i2.lo() {
            ((i1, w1), (i2, w2))
        } else {
            ((i2, w2), (i1, w1))
        };
        let gap = ri.lo() - li.hi();
        if gap >= 2 {
            let (Some(left), Some(right)) = (self.left_side(lw), self.right_side(rw)) else {
                return 0.0;
            };
            let steps = gap as u64 + self.block_len as u64 - 1;
            return self.bridge(left, steps, right);
        }
        // Overlapping or adjacent: measure of the merged word.
        let hull = li.hull(&ri);
        let mut word = Vec::with_capacity(hull.len() as usize);
        for i in hull.lo()..=hull.hi() {
            let a = li.contains_index(i).then(|| lw[(i - li.lo()) as usize]);
            let b = ri.contains_index(i).then(|| rw[(i - ri.lo()) as usize]);
            match (a, b) {
                (Some(x), Some(y)) if x != y => return 0.0,
                (Some(x), _) | (None, Some(x)) => word.push(x),
                (None, None) => unreachable!("hull of touching intervals has no holes"),
            }
        }
        self.word_measure(&word)
    }

    /// `μ(C1 ∩ C2)`.
    pub fn joint_measure(&self, c1: &Cylinder, c2: &Cylinder) -> f64 {
        self.joint_parts(c1.interval(), c1.word(), c2.interval(), c2.word())
    }

    /// `R_mn = μ(C_m ∩ σ^{m-n} C_n) - μ(C_m) μ(C_n)`.
    pub fn correlation(&self, cm: &Cylinder, cn: &Cylinder, m: i64, n: i64) -> CorrelationTerm {
        let moved = cn.interval().translate(n - m);
        let joint = self.joint_parts(cm.interval(), cm.word(), moved, cn.word());
        CorrelationTerm {
            m,
            n,
            value: joint - self.cylinder_measure(cm) * self.cylinder_measure(cn),
        }
    }
}
