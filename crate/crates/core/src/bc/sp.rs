//! Exact correlation sums `Σ_{m,n=M}^N R_mn` against `Σ_{n=M}^N μ(C_n)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BcError, CylinderSequence};
use crate::gibbs::MarkovGibbs;
use crate::stats::fit_line;

/// Largest window `N - M + 1` evaluated exactly.
pub const MAX_WINDOW: u64 = 5000;

/// Allowed growth of the ratio over the top octave for a "bounded" verdict.
const PLATEAU_SLACK: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Growing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpRow {
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "sumR")]
    pub sum_r: f64,
    #[serde(rename = "sumMu")]
    pub sum_mu: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpReport {
    pub rows: Vec<SpRow>,
    pub sup_ratio: f64,
    /// `sup` over rows with `N <= N_top` relative to rows with `N <= N_top/2`, minus one.
    pub sup_growth: f64,
    /// Slope of the ratio against `ln N` on the largest-`M` row.
    pub trend_slope: f64,
    pub verdict: Verdict,
}

#[derive(Serialize)]
struct Summary<'a> {
    sup_ratio: f64,
    verdict: Verdict,
    sup_growth: f64,
    trend_slope: f64,
    rows: &'a [SpRow],
}

impl SpReport {
    /// Rows with `M = m`, in increasing `N`.
    pub fn row(&self, m: u64) -> Vec<SpRow> {
        self.rows.iter().filter(|r| r.m == m).copied().collect()
    }

    pub fn ratio_at(&self, m: u64, n: u64) -> Option<f64> {
        self.rows.iter().find(|r| r.m == m && r.n == n).map(|r| r.ratio)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(Summary {
            sup_ratio: self.sup_ratio,
            verdict: self.verdict,
            sup_growth: self.sup_growth,
            trend_slope: self.trend_slope,
            rows: &self.rows,
        })
        .expect("summary serialises")
    }
}

/// Quarter-octave grid `ceil(N_top · 2^{-j/4})` down to 1.
pub fn default_grid(n_top: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (0..)
        .map(|j| (n_top as f64 * 2f64.powf(-(j as f64) / 4.0)).ceil() as u64)
        .take_while(|&v| v > 1)
        .collect();
    out.push(1);
    out.sort_unstable();
    out.dedup();
    out
}

/// Per column `n`: `R_nn` and `Σ_{m=M}^{n-1} R_mn` for every ladder value `M <= n`.
struct Columns {
    ladder: Vec<u64>,
    first: u64,
    diag: Vec<f64>,
    off: Vec<Vec<f64>>,
    mu: Vec<f64>,
}

fn columns(g: &MarkovGibbs, seq: &CylinderSequence, ladder: &[u64], n_top: u64) -> Result<Columns, BcError> {
    let first = ladder[0];
    let window = n_top - first + 1;
    if window > MAX_WINDOW {
        return Err(BcError::WindowTooLarge(window));
    }
    let mu_all = seq.measures(g, n_top);
    let parts: Vec<_> = (1..=n_top).map(|n| seq.parts(n)).collect::<Result<_, _>>()?;
    let per_column: Vec<(f64, Vec<f64>)> = (first..=n_top)
        .into_par_iter()
        .map(|n| {
            let (in_, wn) = parts[(n - 1) as usize];
            let mu_n = mu_all[(n - 1) as usize];
            let diag = mu_n - mu_n * mu_n;
            let mut sums = vec![0.0; ladder.len()];
            let mut acc = 0.0;
            let mut next_rung = ladder.iter().rposition(|&m| m < n);
            for m in (first..n).rev() {
                let (im, wm) = parts[(m - 1) as usize];
                // σ^{m-n} C_n lives on Λ_n + n - m.
                let moved = in_.translate(n as i64 - m as i64);
                let joint = g.joint_parts(im, wm, moved, wn);
                acc += joint - mu_all[(m - 1) as usize] * mu_n;
                while let Some(r) = next_rung {
                    if ladder[r] == m {
                        sums[r] = acc;
                        next_rung = r.checked_sub(1);
                    } else {
                        break;
                    }
                }
            }
            (diag, sums)
        })
        .collect();
    let (diag, off) = per_column.into_iter().unzip();
    Ok(Columns {
        ladder: ladder.to_vec(),
        first,
        diag,
        off,
        mu: mu_all,
    })
}

impl Columns {
    /// `(Σ_{m,n=M}^N R_mn, Σ_{n=M}^N μ(C_n))` for every `N` in `grid`, with
    /// `M = ladder[rung]`.
    fn row(&self, rung: usize, grid: &[u64]) -> Vec<(u64, f64, f64)> {
        let m = self.ladder[rung];
        let mut out = Vec::new();
        let mut sum_r = 0.0;
        let mut sum_mu = 0.0;
        let mut gi = grid.iter().peekable();
        while gi.peek().is_some_and(|&&n| n < m) {
            gi.next();
        }
        let top = grid.last().copied().unwrap_or(0);
        for n in m..=top {
            let c = (n - self.first) as usize;
            sum_r += self.diag[c] + 2.0 * self.off[c][rung];
            sum_mu += self.mu[(n - 1) as usize];
            if gi.peek() == Some(&&n) {
                out.push((n, sum_r, sum_mu));
                gi.next();
            }
        }
        out
    }
}

fn check_window(seq: &CylinderSequence, m: u64, n: u64) -> Result<(), BcError> {
    if m == 0 || m > n || n > seq.len() {
        return Err(BcError::BadWindow { m, n });
    }
    Ok(())
}

/// `Σ_{m,n=M}^N R_mn / Σ_{n=M}^N μ(C_n)`.
pub fn sp_ratio(g: &MarkovGibbs, seq: &CylinderSequence, m: u64, n: u64) -> Result<f64, BcError> {
    check_window(seq, m, n)?;
    let cols = columns(g, seq, &[m], n)?;
    let (_, sum_r, sum_mu) = cols.row(0, &[n])[0];
    if sum_mu <= 0.0 {
        return Err(BcError::ZeroMassWindow { m, n });
    }
    Ok(sum_r / sum_mu)
}

/// Evaluates the ratio on `ladder × grid` with `M ∈ {1, 2, 4, …}` and decides
/// whether the `M = 1` row plateaus over the top octave of the grid.
pub fn sp_verdict(g: &MarkovGibbs, seq: &CylinderSequence, grid: &[u64]) -> Result<SpReport, BcError> {
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let n_top = *grid.last().ok_or(BcError::EmptyGrid)?;
    check_window(seq, grid[0].max(1), n_top)?;
    let ladder: Vec<u64> = std::iter::successors(Some(1u64), |&m| m.checked_mul(2))
        .take_while(|&m| m <= n_top)
        .collect();
    let cols = columns(g, seq, &ladder, n_top)?;
    let mut rows = Vec::new();
    for (rung, &m) in ladder.iter().enumerate() {
        for (n, sum_r, sum_mu) in cols.row(rung, &grid) {
            if sum_mu <= 0.0 {
                return Err(BcError::ZeroMassWindow { m, n });
            }
            rows.push(SpRow {
                m,
                n,
                sum_r,
                sum_mu,
                ratio: sum_r / sum_mu,
            });
        }
    }

    let sup = |limit: u64| {
        rows.iter()
            .filter(|r| r.n <= limit)
            .map(|r| r.ratio)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let sup_ratio = sup(n_top);
    let half_sup = sup(n_top / 2);
    let sup_growth = if half_sup.is_finite() && half_sup > 0.0 {
        sup_ratio / half_sup - 1.0
    } else {
        0.0
    };

    let first_row: Vec<&SpRow> = rows.iter().filter(|r| r.m == 1).collect();
    let reference = first_row
        .iter()
        .rev()
        .find(|r| r.n <= n_top / 2)
        .or(first_row.first())
        .map_or(0.0, |r| r.ratio);
    let top_octave = first_row
        .iter()
        .filter(|r| r.n > n_top / 2)
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let verdict = if top_octave <= PLATEAU_SLACK * reference {
        Verdict::Bounded
    } else {
        Verdict::Growing
    };

    let trend_slope = ladder
        .iter()
        .rev()
        .map(|&m| {
            rows.iter()
                .filter(|r| r.m == m)
                .map(|r| ((r.n as f64).ln(), r.ratio))
                .collect::<Vec<_>>()
        })
        .find(|pts| pts.len() >= 2)
        .and_then(|pts| fit_line(&pts))
        .map_or(0.0, |f| f.slope);

    Ok(SpReport {
        rows,
        sup_ratio,
        sup_growth,
        trend_slope,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::Potential;
    use crate::shift::{Cylinder, TransitionMatrix};

    #[test]
    fn single_index_ratio() {
        let a = TransitionMatrix::golden_mean();
        let g = MarkovGibbs::parry(&a).unwrap();
        let c = Cylinder::new(&a, 0, vec![0, 1]).unwrap();
        let seq = CylinderSequence::explicit(vec![c.clone(); 5]).unwrap();
        let mu = g.cylinder_measure(&c);
        assert!((sp_ratio(&g, &seq, 3, 3).unwrap() - (1.0 - mu)).abs() < 1e-14);
        assert!(sp_ratio(&g, &seq, 4, 3).is_err());
        assert!(sp_ratio(&g, &seq, 1, 6).is_err());
    }

    #[test]
    fn bernoulli_disjoint_windows_only_diagonal() {
        let a = TransitionMatrix::full(2).unwrap();
        let g = MarkovGibbs::build(&a, &Potential::constant(&a, 0.0)).unwrap();
        // Words at 0..=1: shifted copies overlap, so use aligned words of
        // length 1 whose shifted windows never coincide.
        let cyl = |w: Vec<u8>| Cylinder::new(&a, 0, w).unwrap();
        let seq = CylinderSequence::explicit(vec![cyl(vec![1]), cyl(vec![0]), cyl(vec![1])]).unwrap();
        let ratio = sp_ratio(&g, &seq, 1, 3).unwrap();
        assert!((ratio - 0.5).abs() < 1e-14, "{ratio}");
    }

    #[test]
    fn ladder_rows_match_direct_ratio() {
        let a = TransitionMatrix::golden_mean();
        let g = MarkovGibbs::parry(&a).unwrap();
        let words = [vec![0], vec![0, 1], vec![1, 0, 0], vec![0, 0]];
        let cyls: Vec<Cylinder> = (0..40)
            .map(|i| Cylinder::new(&a, -(i % 3), words[i as usize % 4].clone()).unwrap())
            .collect();
        let seq = CylinderSequence::explicit(cyls).unwrap();
        let report = sp_verdict(&g, &seq, &[5, 10, 20, 40]).unwrap();
        for r in &report.rows {
            let direct = sp_ratio(&g, &seq, r.m, r.n).unwrap();
            assert!((direct - r.ratio).abs() < 1e-12, "{r:?} vs {direct}");
        }
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("M,N,sumR,sumMu,ratio\n"));
    }

    #[test]
    fn grid_shape() {
        let grid = default_grid(64);
        assert_eq!(grid.first(), Some(&1));
        assert_eq!(grid.last(), Some(&64));
        assert!(grid.contains(&32));
    }
}
