//! Exponential envelopes for cylinder measures and decay of correlations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::MarkovGibbs;
use crate::shift::Cylinder;
use crate::stats::fit_line;

/// Normalised correlations at or below this are treated as exact zeros.
const ZERO_CORRELATION: f64 = 1e-12;

/// Bounds `c1 θ1^len <= value <= c2 θ2^len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConstants {
    pub c1: f64,
    pub theta1: f64,
    pub c2: f64,
    pub theta2: f64,
}

impl EnvelopeConstants {
    pub fn contains(&self, len: u64, value: f64, rel_tol: f64) -> bool {
        let lo = self.c1 * self.theta1.powf(len as f64);
        let hi = self.c2 * self.theta2.powf(len as f64);
        value >= lo * (1.0 - rel_tol) && value <= hi * (1.0 + rel_tol)
    }
}

/// Fitted `c θ^gap` decay of normalised correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingFit {
    pub theta3_emp: f64,
    pub c3: f64,
    /// `(gap, |μ(C1∩C2) - μ(C1)μ(C2)| / (μ(C1)μ(C2)))` per sample.
    pub points: Vec<(u64, f64)>,
}

impl MixingFit {
    /// Samples exceeding `c3 θ^gap (1 + slack)`.
    pub fn envelope_violations(&self, slack: f64) -> usize {
        self.points
            .iter()
            .filter(|&&(gap, y)| y > self.c3 * self.theta3_emp.powf(gap as f64) * (1.0 + slack))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixingError {
    #[error("need at least 10 pairs over at least 2 gaps, got {pairs} pairs over {gaps} gaps")]
    InsufficientSamples { pairs: usize, gaps: usize },
    #[error("all correlations vanish: the measure is exactly independent at these gaps")]
    AllZeroCorrelations,
    #[error("pair {0} is not separated (needs n2- > n1+ for the right cylinder)")]
    OverlappingPair(usize),
}

/// Upper envelope `c θ^d` fitted to `(d, value)` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    pub c: f64,
    pub theta: f64,
}

/// Fits `θ` by least squares on the logarithm of the per-distance maxima,
/// then takes the smallest `c` for which every point lies under `c θ^d`.
pub fn fit_decay_envelope(points: &[(u64, f64)]) -> Option<DecayEnvelope> {
    let mut maxima: BTreeMap<u64, f64> = BTreeMap::new();
    for &(d, y) in points {
        if y > ZERO_CORRELATION {
            let e = maxima.entry(d).or_insert(0.0);
            *e = e.max(y);
        }
    }
    let logs: Vec<(f64, f64)> = maxima.iter().map(|(&d, &y)| (d as f64, y.ln())).collect();
    let fit = fit_line(&logs)?;
    let theta = fit.slope.exp();
    let c = points
        .iter()
        .map(|&(d, y)| y / theta.powf(d as f64))
        .fold(0.0, f64::max);
    Some(DecayEnvelope { c, theta })
}

impl MarkovGibbs {
    fn extreme_entries(rows: impl Iterator<Item = f64>) -> (f64, f64) {
        rows.filter(|&x| x > 0.0)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }

    /// Constants with `c1 θ1^{|Λ|} <= μ(C) <= c2 θ2^{|Λ|}` for every cylinder,
    /// with `θ1`, `θ2` the smallest and largest positive entries of `P`.
    pub fn fact1_constants(&self) -> EnvelopeConstants {
        let (theta1, theta2) =
            Self::extreme_entries(self.rows.iter().flat_map(|r| r.iter().map(|e| e.1)));
        let b = self.block_len as i32;
        let (pmin, pmax) = Self::extreme_entries(self.p.iter().copied());
        let mut c1 = pmin * theta1.powi(-b);
        let mut c2 = pmax * theta2.powi(-b);
        // Words shorter than a block are sums of stationary weights.
        for len in 1..self.block_len {
            let mut marg: BTreeMap<&[u8], f64> = BTreeMap::new();
            for (blk, &pu) in self.blocks.iter().zip(&self.p) {
                *marg.entry(&blk[..len]).or_insert(0.0) += pu;
            }
            for &m in marg.values() {
                c1 = c1.min(m * theta1.powi(-(len as i32)));
                c2 = c2.max(m * theta2.powi(-(len as i32)));
            }
        }
        EnvelopeConstants {
            c1,
            theta1,
            c2,
            theta2,
        }
    }

    /// Constants bounding `μ(C1)/μ(C)` for `C1 ⊂ C` by `θ^{|Λ1| - |Λ|}`.
    ///
    /// Right extensions multiply by entries of `P`, left extensions by
    /// entries of the reversed chain, so `θ1`, `θ2` range over both. Valid
    /// when `|Λ|` is at least the block length.
    pub fn fact2_constants(&self) -> EnvelopeConstants {
        let (theta1, theta2) = Self::extreme_entries(
            self.rows
                .iter()
                .chain(self.reversed.iter())
                .flat_map(|r| r.iter().map(|e| e.1)),
        );
        EnvelopeConstants {
            c1: 1.0,
            theta1,
            c2: 1.0,
            theta2,
        }
    }

    /// Fits the exponential decay of `|μ(C1∩C2) - μ(C1)μ(C2)| / (μ(C1)μ(C2))`
    /// in the gap `n2⁻ - n1⁺`.
    pub fn mixing_rate_check(&self, pairs: &[(Cylinder, Cylinder)]) -> Result<MixingFit, MixingError> {
        let mut points = Vec::with_capacity(pairs.len());
        for (i, (c1, c2)) in pairs.iter().enumerate() {
            let (l, r) = if c1.interval().lo() <= c2.interval().lo() {
                (c1, c2)
            } else {
                (c2, c1)
            };
            let gap = r.interval().lo() - l.interval().hi();
            if gap < 1 {
                return Err(MixingError::OverlappingPair(i));
            }
            let (m1, m2) = (self.cylinder_measure(c1), self.cylinder_measure(c2));
            let y = (self.joint_measure(c1, c2) - m1 * m2).abs() / (m1 * m2);
            points.push((gap as u64, y));
        }
        let gaps = points.iter().map(|p| p.0).collect::<std::collections::BTreeSet<_>>().len();
        if points.len() < 10 || gaps < 2 {
            return Err(MixingError::InsufficientSamples {
                pairs: points.len(),
                gaps,
            });
        }
        if points.iter().all(|p| p.1 <= ZERO_CORRELATION) {
            return Err(MixingError::AllZeroCorrelations);
        }
        let mut maxima: BTreeMap<u64, f64> = BTreeMap::new();
        for &(d, y) in &points {
            if y > ZERO_CORRELATION {
                let e = maxima.entry(d).or_insert(0.0);
                *e = e.max(y);
            }
        }
        let logs: Vec<(f64, f64)> = maxima.iter().map(|(&d, &y)| (d as f64, y.ln())).collect();
        let fit = fit_line(&logs).ok_or(MixingError::InsufficientSamples {
            pairs: points.len(),
            gaps: logs.len(),
        })?;
        Ok(MixingFit {
            theta3_emp: fit.slope.exp(),
            c3: fit.intercept.exp(),
            points,
        })
    }
}
