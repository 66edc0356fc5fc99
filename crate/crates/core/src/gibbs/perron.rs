//! Power iterations for Perron data and the subdominant spectral radius.

use super::GibbsError;

const MAX_ITERATIONS: usize = 1_000_000;
const RELATIVE_TOL: f64 = 1e-14;
/// Once the change is this small, stop if it no longer improves (rounding floor).
const STALL_TOL: f64 = 1e-12;
const STALL_WINDOW: usize = 200;

type Sparse = [Vec<(u32, f64)>];

fn iterate(
    what: &'static str,
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
) -> Result<(f64, Vec<f64>), GibbsError> {
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    for _ in 0..MAX_ITERATIONS {
        apply(&x, &mut y);
        let total: f64 = y.iter().sum();
        let lambda = total / x.iter().sum::<f64>();
        let scale = y.iter().copied().fold(0.0, f64::max) / total;
        let mut diff = 0.0f64;
        for (xi, yi) in x.iter_mut().zip(&y) {
            let v = yi / total;
            diff = diff.max((v - *xi).abs());
            *xi = v;
        }
        let diff = diff / scale;
        if diff <= RELATIVE_TOL {
            return Ok((lambda, x));
        }
        if diff < best {
            best = diff;
            since_best = 0;
        } else {
            since_best += 1;
            if best <= STALL_TOL && since_best >= STALL_WINDOW {
                return Ok((lambda, x));
            }
        }
    }
    Err(GibbsError::NoConvergence {
        what,
        iterations: MAX_ITERATIONS,
    })
}

/// Perron eigenvalue and right eigenvector (sum-normalised) of `L`.
pub(super) fn right_vector(l: &Sparse) -> Result<(f64, Vec<f64>), GibbsError> {
    iterate("right Perron vector", l.len(), |x, y| {
        for (u, row) in l.iter().enumerate() {
            y[u] = row.iter().map(|&(v, w)| w * x[v as usize]).sum();
        }
    })
}

/// Left Perron eigenvector (sum-normalised) of `L`.
pub(super) fn left_vector(l: &Sparse) -> Result<Vec<f64>, GibbsError> {
    iterate("left Perron vector", l.len(), |x, y| {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (u, row) in l.iter().enumerate() {
            for &(v, w) in row {
                y[v as usize] += x[u] * w;
            }
        }
    })
    .map(|(_, v)| v)
}

fn left_apply(rows: &Sparse, p: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (u, row) in rows.iter().enumerate() {
        for &(v, prob) in row {
            out[v as usize] += p[u] * prob;
        }
    }
}

/// `max |pP - p|`.
pub(super) fn stationarity_residual(rows: &Sparse, p: &[f64]) -> f64 {
    let mut q = vec![0.0; p.len()];
    left_apply(rows, p, &mut q);
    q.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// A few sweeps of `p <- pP` to remove the rounding left by row renormalisation.
pub(super) fn refine_stationary(rows: &Sparse, p: &mut Vec<f64>) {
    let mut q = vec![0.0; p.len()];
    for _ in 0..200 {
        left_apply(rows, p, &mut q);
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= total);
        let diff = q.iter().zip(p.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(p, &mut q);
        if diff <= 1e-17 {
            break;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deflated operator `Dv = Pv - (p·v) 1`.
fn deflated(rows: &Sparse, p: &[f64], x: &[f64], out: &mut [f64]) {
    let mean = dot(p, x);
    for (u, row) in rows.iter().enumerate() {
        out[u] = row.iter().map(|&(v, prob)| prob * x[v as usize]).sum::<f64>() - mean;
    }
}

/// Modulus estimate from three consecutive iterates `x, y = Dx, z = Dy`.
///
/// A single real dominant eigenvalue is caught by the Rayleigh ratio; a
/// complex or `±` pair by the two-term recurrence `z = αy + βx`.
fn estimate(x: &[f64], y: &[f64], z: &[f64]) -> Option<f64> {
    let zz = norm(z);
    let yy = dot(y, y);
    let rho1 = dot(y, z) / yy;
    let res1: f64 = z.iter().zip(y).map(|(a, b)| (a - rho1 * b).powi(2)).sum::<f64>().sqrt() / zz;
    if res1 < 1e-9 {
        return Some(rho1.abs());
    }
    let (xx, xy, yz, xz) = (dot(x, x), dot(x, y), dot(y, z), dot(x, z));
    let det = yy * xx - xy * xy;
    if det.abs() <= 1e-300 {
        return None;
    }
    let alpha = (yz * xx - xz * xy) / det;
    let beta = (xz * yy - yz * xy) / det;
    let res2: f64 = (0..z.len())
        .map(|i| (z[i] - alpha * y[i] - beta * x[i]).powi(2))
        .sum::<f64>()
        .sqrt()
        / zz;
    if res2 >= 1e-9 {
        return None;
    }
    let disc = alpha * alpha + 4.0 * beta;
    Some(if disc >= 0.0 {
        let s = disc.sqrt();
        ((alpha + s) / 2.0).abs().max(((alpha - s) / 2.0).abs())
    } else {
        (-beta).sqrt()
    })
}

/// Largest modulus among the eigenvalues of `P` other than the Perron root.
pub(super) fn second_modulus(rows: &Sparse, p: &[f64]) -> Result<f64, GibbsError> {
    const CAP: usize = 100_000;
    const TAIL: usize = 1000;
    let n = rows.len();
    // Deterministic non-constant start: constants lie in the kernel of D.
    let mut x: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * 0.754_877_666).fract() - 0.5).collect();
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    deflated(rows, p, &x, &mut y);
    let mut last: Option<f64> = None;
    let mut log_growth = Vec::with_capacity(CAP);
    for _ in 0..CAP {
        let ny = norm(&y);
        if ny <= 1e-15 {
            return Ok(0.0);
        }
        log_growth.push(ny.ln());
        deflated(rows, p, &y, &mut z);
        if norm(&z) <= 1e-15 * ny {
            return Ok(0.0);
        }
        if let Some(est) = estimate(&x, &y, &z) {
            if let Some(prev) = last {
                if (est - prev).abs() <= 1e-13 * est.max(1e-300) {
                    return Ok(est.min(1.0));
                }
            }
            last = Some(est);
        } else {
            last = None;
        }
        for i in 0..n {
            x[i] = y[i] / ny;
            y[i] = z[i] / ny;
        }
    }
    // Several eigenvalues of equal modulus: fall back to the mean growth rate.
    let tail = &log_growth[log_growth.len() - TAIL..];
    let est = (tail.iter().sum::<f64>() / TAIL as f64).exp();
    if est.is_finite() {
        Ok(est.min(1.0))
    } else {
        Err(GibbsError::NoConvergence {
            what: "subdominant eigenvalue",
            iterations: CAP,
        })
    }
}
