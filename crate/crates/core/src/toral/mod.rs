//! Linear hyperbolic automorphisms of the 2-torus and the baker map.

mod baker;
mod torus;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baker::{
    baker_hit_experiment, baker_step, inscribe_dyadic, Ball, BakerPoint, BakerStatistics, DyadicSquare,
    INSCRIBE_RATIO_BOUND,
};
pub use torus::{
    torus_hit_experiment, DriftingSquares, FixedRectangle, ShrinkingSquares, TorusPoint, TorusTarget,
    MAX_EXTENT,
};

/// Largest `n` accepted by [`ToralMap::fix_count`].
pub const MAX_PERIOD: u32 = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToralError {
    #[error("determinant {0} is not ±1")]
    NotUnimodular(i64),
    #[error("|trace| = |{0}| must exceed 2")]
    NotHyperbolic(i64),
    #[error("exact periodic-point count overflows 128-bit integers")]
    Overflow,
    #[error("period {0} outside 1..={MAX_PERIOD}")]
    PeriodOutOfRange(u32),
    #[error("eps1/eps0 = {ratio} must exceed the expansion rate {lambda}")]
    GapTooNarrow { ratio: f64, lambda: f64 },
    #[error("extents must satisfy 0 < d <= eps1 (got du = {du}, ds = {ds})")]
    BadExtent { du: f64, ds: f64 },
    #[error("rectangle extent {0} exceeds {MAX_EXTENT}")]
    RectangleTooLarge(f64),
    #[error("expected hit count {0:.3} at the last checkpoint is below the required 20")]
    MassTooSmall(f64),
    #[error("ball centred at ({x}, {y}) with radius {r} is not a ball of radius <= 0.25 inside the open square")]
    BallOutOfRange { x: f64, y: f64, r: f64 },
    #[error(transparent)]
    Orbit(#[from] crate::orbit::OrbitError),
}

/// `x ↦ Mx mod 1` for an integer matrix with `|det M| = 1`, `|tr M| > 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[i64; 2]; 2]", into = "[[i64; 2]; 2]")]
pub struct ToralMap {
    m: [[i64; 2]; 2],
    det: i64,
    lambda_u: f64,
    lambda_s: f64,
    e_u: [f64; 2],
    e_s: [f64; 2],
}

impl TryFrom<[[i64; 2]; 2]> for ToralMap {
    type Error = ToralError;
    fn try_from(m: [[i64; 2]; 2]) -> Result<Self, ToralError> {
        Self::new(m)
    }
}

impl From<ToralMap> for [[i64; 2]; 2] {
    fn from(t: ToralMap) -> Self {
        t.m
    }
}

/// Unit eigenvector of `m` for eigenvalue `l`, with positive first component
/// (positive second when the first vanishes).
fn eigenvector(m: &[[i64; 2]; 2], l: f64) -> [f64; 2] {
    let (a, b, c, d) = (m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64);
    // Rows of M - l I are parallel; use the one with larger norm.
    let v = if b.abs() + (a - l).abs() >= c.abs() + (d - l).abs() {
        [b, l - a]
    } else {
        [l - d, c]
    };
    let n = v[0].hypot(v[1]);
    let mut v = [v[0] / n, v[1] / n];
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = [-v[0], -v[1]];
    }
    v
}

fn mat_mul(x: &[[i128; 2]; 2], y: &[[i128; 2]; 2]) -> Option<[[i128; 2]; 2]> {
    let mut out = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0].checked_mul(y[0][j])?.checked_add(x[i][1].checked_mul(y[1][j])?)?;
        }
    }
    Some(out)
}

impl ToralMap {
    pub fn new(m: [[i64; 2]; 2]) -> Result<Self, ToralError> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() != 1 {
            return Err(ToralError::NotUnimodular(det));
        }
        let tr = m[0][0] + m[1][1];
        // Orientation-reversing maps with |tr| <= 2 are hyperbolic too, but
        // the rectangle machinery assumes |tr| > 2 throughout.
        if tr.abs() <= 2 {
            return Err(ToralError::NotHyperbolic(tr));
        }
        let disc = ((tr * tr - 4 * det) as f64).sqrt();
        let t = tr as f64;
        let (l1, l2) = ((t + disc) / 2.0, (t - disc) / 2.0);
        let (lambda_u, lambda_s) = if l1.abs() > l2.abs() { (l1, l2) } else { (l2, l1) };
        // Recompute the small root from the large one to avoid cancellation.
        let lambda_s = if lambda_s.abs() < 1.0 { det as f64 / lambda_u } else { lambda_s };
        Ok(Self {
            m,
            det,
            lambda_u,
            lambda_s,
            e_u: eigenvector(&m, lambda_u),
            e_s: eigenvector(&m, lambda_s),
        })
    }

    pub fn cat() -> Self {
        Self::new([[2, 1], [1, 1]]).expect("cat map is hyperbolic")
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    pub fn trace(&self) -> i64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Expanding eigenvalue (possibly negative).
    pub fn lambda_u(&self) -> f64 {
        self.lambda_u
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }

    /// Expansion rate `|λ_u|`.
    pub fn expansion(&self) -> f64 {
        self.lambda_u.abs()
    }

    pub fn e_u(&self) -> [f64; 2] {
        self.e_u
    }

    pub fn e_s(&self) -> [f64; 2] {
        self.e_s
    }

    /// `|e_u × e_s|`: area of the parallelogram spanned by the eigenframe.
    pub fn frame_area(&self) -> f64 {
        (self.e_u[0] * self.e_s[1] - self.e_u[1] * self.e_s[0]).abs()
    }

    /// `M^n` in exact arithmetic.
    pub fn power(&self, n: u32) -> Result<[[i128; 2]; 2], ToralError> {
        let base = self.m.map(|r| r.map(i128::from));
        let mut acc = [[1, 0], [0, 1]];
        let mut sq = base;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = mat_mul(&acc, &sq).ok_or(ToralError::Overflow)?;
            }
            k >>= 1;
            if k > 0 {
                sq = mat_mul(&sq, &sq).ok_or(ToralError::Overflow)?;
            }
        }
        Ok(acc)
    }

    /// `#Fix(T^n) = |det(M^n - I)| = |det^n - tr(M^n) + 1|`.
    pub fn fix_count(&self, n: u32) -> Result<u128, ToralError> {
        if n == 0 || n > MAX_PERIOD {
            return Err(ToralError::PeriodOutOfRange(n));
        }
        let p = self.power(n)?;
        let tr = p[0][0].checked_add(p[1][1]).ok_or(ToralError::Overflow)?;
        let det_n: i128 = if self.det == -1 && n % 2 == 1 { -1 } else { 1 };
        let v = det_n.checked_sub(tr).and_then(|x| x.checked_add(1)).ok_or(ToralError::Overflow)?;
        Ok(v.unsigned_abs())
    }

    /// `Z_n = #Fix(T^n) e^{n φ}` for a constant potential `φ`.
    pub fn partition_function(&self, phi: f64, n: u32) -> Result<f64, ToralError> {
        Ok(self.fix_count(n)? as f64 * (n as f64 * phi).exp())
    }

    /// Integers `(k⁻, k⁺)` with `|λ_u|^{k⁺} d_u ∈ [eps0, eps1)` and
    /// `|λ_u|^{-k⁻} d_s ∈ [eps0, eps1)`.
    pub fn quasiround_indices(&self, du: f64, ds: f64, eps0: f64, eps1: f64) -> Result<(i64, i64), ToralError> {
        let lambda = self.expansion();
        if !(eps0 > 0.0 && eps1 / eps0 > lambda) {
            return Err(ToralError::GapTooNarrow {
                ratio: eps1 / eps0,
                lambda,
            });
        }
        if !(du > 0.0 && ds > 0.0 && du <= eps1 && ds <= eps1) {
            return Err(ToralError::BadExtent { du, ds });
        }
        let k_plus = expansion_index(du, lambda, eps0);
        let k_minus = -expansion_index(ds, lambda, eps0);
        Ok((k_minus, k_plus))
    }

    /// `M (x, y)` on the integer lattice modulo `q`.
    pub fn step_mod(&self, p: [i64; 2], q: i64) -> [i64; 2] {
        let m = &self.m;
        [
            (m[0][0] * p[0] + m[0][1] * p[1]).rem_euclid(q),
            (m[1][0] * p[0] + m[1][1] * p[1]).rem_euclid(q),
        ]
    }

    /// Period of the rational point `p / q` under `T`.
    pub fn rational_period(&self, p: [i64; 2], q: i64) -> u64 {
        let start = [p[0].rem_euclid(q), p[1].rem_euclid(q)];
        let mut x = self.step_mod(start, q);
        let mut n = 1;
        while x != start {
            x = self.step_mod(x, q);
            n += 1;
        }
        n
    }

    /// Order of `M` in `GL_2(Z/q)`.
    pub fn order_mod(&self, q: i64) -> u64 {
        let reduce = |v: [[i64; 2]; 2]| v.map(|r| r.map(|x| x.rem_euclid(q)));
        let id = reduce([[1, 0], [0, 1]]);
        let m = reduce(self.m);
        let mut acc = m;
        let mut n = 1;
        while acc != id {
            let mut next = [[0i64; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = (acc[i][0] * m[0][j] + acc[i][1] * m[1][j]).rem_euclid(q);
                }
            }
            acc = next;
            n += 1;
        }
        n
    }
}

/// Relative slack absorbing rounding when an extent sits exactly on `eps0`.
const WINDOW_SLACK: f64 = 1e-12;

/// Least `k` with `λ^k d >= eps0`; then `λ^k d < λ eps0 <= eps1`.
fn expansion_index(d: f64, lambda: f64, eps0: f64) -> i64 {
    let mut k = ((eps0 / d).ln() / lambda.ln()).ceil() as i64;
    let at = |k: i64| d * lambda.powi(k as i32) >= eps0 * (1.0 - WINDOW_SLACK);
    while at(k - 1) {
        k -= 1;
    }
    while !at(k) {
        k += 1;
    }
    k
}

/// Parallelogram `center + u e_u + s e_s`, `|u| <= du/2`, `|s| <= ds/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub center: [f64; 2],
    pub du: f64,
    pub ds: f64,
    pub k_minus: i64,
    pub k_plus: i64,
}

impl Rectangle {
    pub fn new(t: &ToralMap, center: [f64; 2], du: f64, ds: f64, eps0: f64, eps1: f64) -> Result<Self, ToralError> {
        let (k_minus, k_plus) = t.quasiround_indices(du, ds, eps0, eps1)?;
        Ok(Self {
            center,
            du,
            ds,
            k_minus,
            k_plus,
        })
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.du / self.ds
    }

    pub fn is_b_bounded(&self, b: f64) -> bool {
        let r = self.aspect_ratio();
        r >= 1.0 / b && r <= b
    }

    pub fn area(&self, t: &ToralMap) -> f64 {
        self.du * self.ds * t.frame_area()
    }
}
