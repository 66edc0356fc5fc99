//! Exact fixed-point orbits on the torus and rectangle targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Rectangle, ToralError, ToralMap};
use crate::orbit::{check_checkpoints, HitStatistics, MIN_MASS};

/// Largest rectangle extent for which nearest-translate reduction is unique.
pub const MAX_EXTENT: f64 = 0.05;

const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

/// A point `(x/2^64, y/2^64)` of the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusPoint(pub [u64; 2]);

impl TorusPoint {
    pub fn from_f64(p: [f64; 2]) -> Self {
        let f = |x: f64| (x.rem_euclid(1.0) * SCALE) as u64;
        Self([f(p[0]), f(p[1])])
    }

    pub fn to_f64(self) -> [f64; 2] {
        [self.0[0] as f64 / SCALE, self.0[1] as f64 / SCALE]
    }

    /// `M x mod 1`, exact on 64-bit fractions.
    #[inline]
    pub fn step(self, m: &[[i64; 2]; 2]) -> Self {
        let [x, y] = self.0;
        let row = |r: [i64; 2]| (r[0] as u64).wrapping_mul(x).wrapping_add((r[1] as u64).wrapping_mul(y));
        Self([row(m[0]), row(m[1])])
    }

    /// `self - other` reduced to `[-1/2, 1/2)²`.
    #[inline]
    pub fn offset_from(self, other: Self) -> [f64; 2] {
        let d = |a: u64, b: u64| a.wrapping_sub(b) as i64 as f64 / SCALE;
        [d(self.0[0], other.0[0]), d(self.0[1], other.0[1])]
    }
}

/// Eigenframe data shared by parallelogram membership tests.
#[derive(Debug, Clone, Copy)]
struct Frame {
    /// Rows of the inverse of `[e_u e_s]`.
    inv: [[f64; 2]; 2],
    abs_u: [f64; 2],
    abs_s: [f64; 2],
    area: f64,
}

impl Frame {
    fn new(t: &ToralMap) -> Self {
        let (u, s) = (t.e_u(), t.e_s());
        let det = u[0] * s[1] - u[1] * s[0];
        Self {
            inv: [[s[1] / det, -s[0] / det], [-u[1] / det, u[0] / det]],
            abs_u: [u[0].abs(), u[1].abs()],
            abs_s: [s[0].abs(), s[1].abs()],
            area: det.abs(),
        }
    }

    /// Whether the offset `d` lies in `{u e_u + s e_s : |u| <= du/2, |s| <= ds/2}`.
    #[inline]
    fn contains(&self, d: [f64; 2], du: f64, ds: f64) -> bool {
        let hx = 0.5 * (self.abs_u[0] * du + self.abs_s[0] * ds);
        let hy = 0.5 * (self.abs_u[1] * du + self.abs_s[1] * ds);
        if d[0].abs() > hx || d[1].abs() > hy {
            return false;
        }
        let u = self.inv[0][0] * d[0] + self.inv[0][1] * d[1];
        let s = self.inv[1][0] * d[0] + self.inv[1][1] * d[1];
        u.abs() <= 0.5 * du && s.abs() <= 0.5 * ds
    }

    /// Largest side of the axis-aligned bounding box.
    fn extent(&self, du: f64, ds: f64) -> f64 {
        (self.abs_u[0] * du + self.abs_s[0] * ds).max(self.abs_u[1] * du + self.abs_s[1] * ds)
    }
}

/// A sequence of targets `R_n`; `contains` sees both `T^n x` and `x`.
pub trait TorusTarget: Sync {
    /// Lebesgue measure of `R_n`.
    fn measure(&self, n: u64) -> f64;
    /// Largest bounding-box side over all `n`.
    fn max_extent(&self) -> f64;
    fn contains(&self, n: u64, xn: TorusPoint, x0: TorusPoint) -> bool;
}

/// The same rectangle at every time.
#[derive(Debug, Clone, Copy)]
pub struct FixedRectangle {
    rect: Rectangle,
    center: TorusPoint,
    frame: Frame,
}

impl FixedRectangle {
    pub fn new(t: &ToralMap, rect: Rectangle) -> Self {
        Self {
            rect,
            center: TorusPoint::from_f64(rect.center),
            frame: Frame::new(t),
        }
    }
}

impl TorusTarget for FixedRectangle {
    fn measure(&self, _n: u64) -> f64 {
        self.rect.du * self.rect.ds * self.frame.area
    }

    fn max_extent(&self) -> f64 {
        self.frame.extent(self.rect.du, self.rect.ds)
    }

    fn contains(&self, _n: u64, xn: TorusPoint, _x0: TorusPoint) -> bool {
        self.frame.contains(xn.offset_from(self.center), self.rect.du, self.rect.ds)
    }
}

/// Eigen-aligned rectangles at a fixed centre with `Leb(R_n) = min(cap, c/n)`
/// and `d_u/d_s = aspect`.
#[derive(Debug, Clone, Copy)]
pub struct ShrinkingSquares {
    center: TorusPoint,
    cap: f64,
    c: f64,
    aspect: f64,
    frame: Frame,
}

impl ShrinkingSquares {
    pub fn new(t: &ToralMap, center: [f64; 2], cap: f64, c: f64, aspect: f64) -> Self {
        Self {
            center: TorusPoint::from_f64(center),
            cap,
            c,
            aspect,
            frame: Frame::new(t),
        }
    }

    #[inline]
    fn extents(&self, n: u64) -> (f64, f64) {
        let side2 = self.measure(n) / self.frame.area;
        let du = (side2 * self.aspect).sqrt();
        (du, side2 / du)
    }

    /// `R_n` as a [`Rectangle`] with quasiround indices for `(eps0, eps1)`.
    pub fn rectangle(&self, t: &ToralMap, n: u64, eps0: f64, eps1: f64) -> Result<Rectangle, ToralError> {
        let (du, ds) = self.extents(n);
        Rectangle::new(t, self.center.to_f64(), du, ds, eps0, eps1)
    }
}

impl TorusTarget for ShrinkingSquares {
    #[inline]
    fn measure(&self, n: u64) -> f64 {
        self.cap.min(self.c / n as f64)
    }

    fn max_extent(&self) -> f64 {
        let (du, ds) = self.extents(1);
        self.frame.extent(du, ds)
    }

    #[inline]
    fn contains(&self, n: u64, xn: TorusPoint, _x0: TorusPoint) -> bool {
        let (du, ds) = self.extents(n);
        self.frame.contains(xn.offset_from(self.center), du, ds)
    }
}

/// `R_n = T^n R'_n` for shrinking squares `R'_n`; `T^n x ∈ R_n` iff `x ∈ R'_n`.
#[derive(Debug, Clone, Copy)]
pub struct DriftingSquares(pub ShrinkingSquares);

impl TorusTarget for DriftingSquares {
    fn measure(&self, n: u64) -> f64 {
        self.0.measure(n)
    }

    fn max_extent(&self) -> f64 {
        self.0.max_extent()
    }

    fn contains(&self, n: u64, _xn: TorusPoint, x0: TorusPoint) -> bool {
        self.0.contains(n, x0, x0)
    }
}

/// Hit counts of Lebesgue-random orbits against `target`. Requires
/// `E_{N_max} >= 20` and extents at most [`MAX_EXTENT`].
pub fn torus_hit_experiment(
    t: &ToralMap,
    target: &dyn TorusTarget,
    checkpoints: &[u64],
    num_samples: usize,
    seed: u64,
) -> Result<HitStatistics, ToralError> {
    let n_max = check_checkpoints(checkpoints)?;
    let extent = target.max_extent();
    if extent > MAX_EXTENT {
        return Err(ToralError::RectangleTooLarge(extent));
    }
    let mut expected = Vec::with_capacity(checkpoints.len());
    let mut total = 0.0;
    let mut n = 0;
    for &cp in checkpoints {
        while n < cp {
            n += 1;
            total += target.measure(n);
        }
        expected.push(total);
    }
    if total < MIN_MASS {
        return Err(ToralError::MassTooSmall(total));
    }
    let m = t.matrix();
    log::debug!("torus run: N = {n_max}, E_N = {total:.3}, {num_samples} samples");
    Ok(HitStatistics::collect(checkpoints.to_vec(), expected, seed, num_samples, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x0 = TorusPoint([rng.gen(), rng.gen()]);
        let mut x = x0;
        let mut hits = 0u64;
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut n = 0u64;
        for &cp in checkpoints {
            while n < cp {
                n += 1;
                x = x.step(&m);
                if target.contains(n, x, x0) {
                    hits += 1;
                }
            }
            out.push(hits);
        }
        out
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_iteration_matches_integer_lattice() {
        let t = ToralMap::cat();
        // Points k/2^64 with small k stay on the lattice exactly.
        let mut x = TorusPoint([3, 5]);
        for _ in 0..10 {
            x = x.step(&t.matrix());
        }
        let p = t.power(10).unwrap();
        let expect = [(p[0][0] * 3 + p[0][1] * 5) as u64, (p[1][0] * 3 + p[1][1] * 5) as u64];
        assert_eq!(x.0, expect);
    }

    #[test]
    fn parallelogram_membership() {
        let t = ToralMap::cat();
        let f = Frame::new(&t);
        let (u, s) = (t.e_u(), t.e_s());
        let inside = [0.4 * 0.02 * u[0] + 0.3 * 0.01 * s[0], 0.4 * 0.02 * u[1] + 0.3 * 0.01 * s[1]];
        assert!(f.contains(inside, 0.02, 0.01));
        let outside = [0.6 * 0.02 * u[0], 0.6 * 0.02 * u[1]];
        assert!(!f.contains(outside, 0.02, 0.01));
        // Wrapping: a point just below 1 is close to a centre at 0.
        let c = TorusPoint::from_f64([0.0, 0.0]);
        let x = TorusPoint::from_f64([0.999, 0.001]);
        let d = x.offset_from(c);
        assert!((d[0] + 0.001).abs() < 1e-12 && (d[1] - 0.001).abs() < 1e-12);
    }

    #[test]
    fn fixed_square_ergodic_average() {
        let t = ToralMap::cat();
        let rect = Rectangle::new(&t, [0.3, 0.7], 0.03, 0.03, 0.01, 0.05).unwrap();
        let target = FixedRectangle::new(&t, rect);
        let n = 200_000;
        let stats = torus_hit_experiment(&t, &target, &[n], 4, 1).unwrap();
        let q = target.measure(1);
        let sd = (n as f64 * q).sqrt();
        for h in &stats.hits {
            assert!((h[0] as f64 - n as f64 * q).abs() < 5.0 * sd, "{} vs {}", h[0], n as f64 * q);
        }
    }

    #[test]
    fn preconditions() {
        let t = ToralMap::cat();
        let big = ShrinkingSquares::new(&t, [0.5, 0.5], 0.01, 1.0, 1.0);
        assert!(matches!(
            torus_hit_experiment(&t, &big, &[100], 1, 0),
            Err(ToralError::RectangleTooLarge(_))
        ));
        let small = ShrinkingSquares::new(&t, [0.5, 0.5], 0.001, 1.0, 1.0);
        assert!(matches!(
            torus_hit_experiment(&t, &small, &[100], 1, 0),
            Err(ToralError::MassTooSmall(_))
        ));
        let r = small.rectangle(&t, 1000, 0.01, 0.04).unwrap();
        assert!((r.area(&t) - 0.001).abs() < 1e-15);
        assert!(r.is_b_bounded(1.0 + 1e-9));
    }
}
