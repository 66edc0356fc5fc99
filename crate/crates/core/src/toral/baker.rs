//! The baker map `(x, y) ↦ (2x mod 1, (y + ⌊2x⌋)/2)` on 63-bit binary windows.
//!
//! `x = 0.ω_0 ω_1 …` and `y = 0.ω_{-1} ω_{-2} …` in binary, so the map is
//! the left shift of `ω`. Only the leading 63 digits of each coordinate are
//! kept; the digit entering `x` from below is drawn fresh at every step,
//! which samples the infinite expansion of a Lebesgue-random point exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ToralError;
use crate::orbit::{check_checkpoints, HitStatistics, MIN_MASS};
use crate::shift::{Cylinder, ShiftError, Symbol, TransitionMatrix};

const BITS: u32 = 63;
const MASK: u64 = (1 << BITS) - 1;
const WINDOW: f64 = 9_223_372_036_854_775_808.0; // 2^63

/// Guaranteed `Leb(R)/Leb(B)` for [`inscribe_dyadic`].
pub const INSCRIBE_RATIO_BOUND: f64 = 1.0 / (8.0 * std::f64::consts::PI);

/// Leading 63 binary digits of `x` and `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BakerPoint {
    pub x: u64,
    pub y: u64,
}

impl BakerPoint {
    pub fn to_f64(self) -> [f64; 2] {
        [self.x as f64 / WINDOW, self.y as f64 / WINDOW]
    }

    /// Point with `ω_i = digits(i)` for `i` in `[-63, 62]`.
    pub fn from_symbols(digit: impl Fn(i64) -> Symbol) -> Self {
        let mut x = 0u64;
        let mut y = 0u64;
        for i in 0..BITS as i64 {
            x = (x << 1) | u64::from(digit(i));
            y = (y << 1) | u64::from(digit(-1 - i));
        }
        Self { x, y }
    }
}

/// One step of the baker map; `fresh` becomes the 63rd digit of the new `x`.
#[inline]
pub fn baker_step(p: BakerPoint, fresh: bool) -> BakerPoint {
    let top = p.x >> (BITS - 1);
    BakerPoint {
        x: ((p.x << 1) & MASK) | u64::from(fresh),
        y: (p.y >> 1) | (top << (BITS - 1)),
    }
}

/// `[i 2^{-k}, (i+1) 2^{-k}) × [j 2^{-k}, (j+1) 2^{-k})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicSquare {
    pub level: u32,
    pub i: u64,
    pub j: u64,
}

impl DyadicSquare {
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn area(&self) -> f64 {
        (-2.0 * self.level as f64).exp2()
    }

    #[inline]
    pub fn contains(&self, p: BakerPoint) -> bool {
        let shift = BITS - self.level;
        p.x >> shift == self.i && p.y >> shift == self.j
    }

    /// The 0-centred cylinder on `[-k, k-1]` of the full 2-shift coding this
    /// square: `ω_0 … ω_{k-1}` are the digits of `i`, `ω_{-1} … ω_{-k}` those of `j`.
    pub fn to_cylinder(&self, full2: &TransitionMatrix) -> Result<Cylinder, ShiftError> {
        let k = self.level;
        let mut word = Vec::with_capacity(2 * k as usize);
        for b in 0..k {
            word.push(((self.j >> b) & 1) as Symbol);
        }
        for b in (0..k).rev() {
            word.push(((self.i >> b) & 1) as Symbol);
        }
        Cylinder::new(full2, -(k as i64), word)
    }
}

/// Closed Euclidean ball in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; 2],
    pub r: f64,
}

impl Ball {
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.r * self.r
    }

    #[inline]
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        dx * dx + dy * dy <= self.r * self.r
    }

    fn contains_square(&self, sq: &DyadicSquare) -> bool {
        let s = sq.side();
        let far = |lo: f64, c: f64| (c - lo).abs().max((lo + s - c).abs());
        let dx = far(sq.i as f64 * s, self.center[0]);
        let dy = far(sq.j as f64 * s, self.center[1]);
        dx * dx + dy * dy <= self.r * self.r
    }
}

/// Largest dyadic square inside `ball` among the four cells around the
/// nearest grid point, scanning levels `k0..=k0+2` with
/// `k0 = ⌈-log2(r√2)⌉`. Some cell at level `k0 + 1` always fits, which gives
/// the ratio bound [`INSCRIBE_RATIO_BOUND`].
pub fn inscribe_dyadic(ball: &Ball) -> Result<DyadicSquare, ToralError> {
    let [x, y] = ball.center;
    let r = ball.r;
    let ok = r > 0.0 && r <= 0.25 && x - r > 0.0 && x + r < 1.0 && y - r > 0.0 && y + r < 1.0;
    if !ok {
        return Err(ToralError::BallOutOfRange { x, y, r });
    }
    let k0 = (-(r * std::f64::consts::SQRT_2).log2()).ceil().max(0.0) as u32;
    for level in k0..=(k0 + 2).min(BITS) {
        let cells = 1u64 << level;
        let s = (-(level as f64)).exp2();
        let gi = (x / s).round() as u64;
        let gj = (y / s).round() as u64;
        for i in gi.saturating_sub(1)..=gi.min(cells - 1) {
            for j in gj.saturating_sub(1)..=gj.min(cells - 1) {
                let sq = DyadicSquare { level, i, j };
                if ball.contains_square(&sq) {
                    return Ok(sq);
                }
            }
        }
    }
    unreachable!("a cell at level k0 + 1 always fits inside the ball")
}

/// Hit statistics against the balls and against their inscribed squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BakerStatistics {
    pub squares: HitStatistics,
    pub balls: HitStatistics,
}

/// Streams fresh digits from a ChaCha8 generator.
struct Digits {
    rng: ChaCha8Rng,
    buf: u64,
    left: u32,
}

impl Digits {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            buf: 0,
            left: 0,
        }
    }

    #[inline]
    fn next(&mut self) -> bool {
        if self.left == 0 {
            self.buf = self.rng.gen();
            self.left = 64;
        }
        let b = self.buf & 1 == 1;
        self.buf >>= 1;
        self.left -= 1;
        b
    }

    fn window(&mut self) -> u64 {
        self.rng.gen::<u64>() & MASK
    }
}

fn expected_at(checkpoints: &[u64], measure: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut total = 0.0;
    let mut n = 0u64;
    for &cp in checkpoints {
        while n < cp {
            total += measure(n as usize);
            n += 1;
        }
        out.push(total);
    }
    out
}

/// Hits of Lebesgue-random baker orbits in `balls[n-1]` and in its
/// inscribed dyadic square, for `n = 1..=N_max`. The squares must carry
/// `E_{N_max} >= 20`.
pub fn baker_hit_experiment(
    balls: &[Ball],
    checkpoints: &[u64],
    num_samples: usize,
    seed: u64,
) -> Result<BakerStatistics, ToralError> {
    let n_max = check_checkpoints(checkpoints)?;
    if n_max as usize > balls.len() {
        return Err(crate::orbit::OrbitError::SequenceTooShort {
            n: n_max,
            len: balls.len() as u64,
        }
        .into());
    }
    let balls = &balls[..n_max as usize];
    let squares = balls.iter().map(inscribe_dyadic).collect::<Result<Vec<_>, _>>()?;
    let e_sq = expected_at(checkpoints, |i| squares[i].area());
    let e_ball = expected_at(checkpoints, |i| balls[i].area());
    let mass = *e_sq.last().expect("nonempty");
    if mass < MIN_MASS {
        return Err(ToralError::MassTooSmall(mass));
    }
    let run = |s: u64| {
        let mut digits = Digits::new(s);
        let mut p = BakerPoint {
            x: digits.window(),
            y: digits.window(),
        };
        let (mut hs, mut hb) = (0u64, 0u64);
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut n = 0u64;
        for &cp in checkpoints {
            while n < cp {
                p = baker_step(p, digits.next());
                let i = n as usize;
                n += 1;
                hs += u64::from(squares[i].contains(p));
                hb += u64::from(balls[i].contains(p.to_f64()));
            }
            out.push([hs, hb]);
        }
        out
    };
    let both = HitStatistics::collect(checkpoints.to_vec(), e_sq.clone(), seed, num_samples, |s| {
        run(s).into_iter().flatten().collect()
    });
    let split = |k: usize| -> Vec<Vec<u64>> {
        both.hits
            .iter()
            .map(|h| h.iter().skip(k).step_by(2).copied().collect())
            .collect()
    };
    Ok(BakerStatistics {
        squares: HitStatistics {
            checkpoints: checkpoints.to_vec(),
            expected: e_sq,
            seeds: both.seeds.clone(),
            hits: split(0),
        },
        balls: HitStatistics {
            checkpoints: checkpoints.to_vec(),
            expected: e_ball,
            seeds: both.seeds.clone(),
            hits: split(1),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_the_baker_map() {
        let p = BakerPoint {
            x: 3 << 61, // 0.11 in binary = 0.75
            y: 1 << 62, // 0.5
        };
        let q = baker_step(p, false).to_f64();
        assert_eq!(q, [0.5, 0.75]);
    }

    #[test]
    fn inscribed_squares() {
        // Grid-point centre, r = 3·2^{-5}: side 2^{-4} fits, side 2^{-3} does not.
        let ball = Ball {
            center: [0.5, 0.5],
            r: 3.0 / 32.0,
        };
        let sq = inscribe_dyadic(&ball).unwrap();
        assert_eq!(sq.level, 4);
        let ratio = sq.area() / ball.area();
        assert!((ratio - 4.0 / (9.0 * std::f64::consts::PI)).abs() < 1e-12);
        // Radius 0.3 is outside the supported range.
        let big = Ball {
            center: [0.5, 0.5],
            r: 0.3,
        };
        assert!(matches!(inscribe_dyadic(&big), Err(ToralError::BallOutOfRange { .. })));
    }

    #[test]
    fn square_membership_equals_cylinder_membership() {
        let full = TransitionMatrix::full(2).unwrap();
        let sq = DyadicSquare { level: 3, i: 5, j: 2 };
        let c = sq.to_cylinder(&full).unwrap();
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits: Vec<u8> = (0..126).map(|_| rng.gen_range(0..2)).collect();
            let digit = |i: i64| bits[(i + 63) as usize];
            let p = BakerPoint::from_symbols(digit);
            assert_eq!(sq.contains(p), c.contains_point(digit));
        }
    }

    #[test]
    fn repeated_ball_frequency() {
        let ball = Ball {
            center: [0.4, 0.6],
            r: 0.2,
        };
        let n = 50_000u64;
        let stats = baker_hit_experiment(&vec![ball; n as usize], &[n / 2, n], 3, 4).unwrap();
        let q = inscribe_dyadic(&ball).unwrap().area();
        for h in &stats.squares.hits {
            let sd = (n as f64 * q * (1.0 - q)).sqrt();
            assert!((h[1] as f64 - n as f64 * q).abs() < 5.0 * sd);
        }
        for h in &stats.balls.hits {
            let sd = (n as f64 * ball.area()).sqrt();
            assert!((h[1] as f64 - n as f64 * ball.area()).abs() < 5.0 * sd);
        }
    }
}
