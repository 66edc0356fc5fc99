//! Small numeric helpers shared by the experiment modules.

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares fit; `None` with fewer than two points or constant `x`.
pub fn fit_line(points: &[(f64, f64)]) -> Option<LineFit> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Linear-interpolation quantile (type 7) of unsorted data; `q` in `[0, 1]`.
pub fn quantile(data: &[f64], q: f64) -> f64 {
    assert!(!data.is_empty(), "quantile of empty data");
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(data: &[f64]) -> f64 {
    quantile(data, 0.5)
}

/// Geometric checkpoints `N_j = ceil(n_max * 2^(j - count))`, `j = 1..=count`,
/// deduplicated and increasing.
pub fn geometric_checkpoints(n_max: u64, count: usize) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=count)
        .map(|j| {
            let v = (n_max as f64 * 2f64.powi(j as i32 - count as i32)).ceil() as u64;
            v.clamp(1, n_max)
        })
        .collect();
    out.dedup();
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}
