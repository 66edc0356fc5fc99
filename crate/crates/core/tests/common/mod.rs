//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the engine under test beyond its plain data types.

#![allow(dead_code)]

use bclab::shift::Symbol;

/// Finite-volume Gibbs oracle: dense transfer matrix on `(m-1)`-blocks, Perron
/// vectors by plain normalised power iteration, cylinder measures by the
/// thermodynamic limit formula `l[u0] W(w) r[u_end] / (λ^{steps} <l, r>)`.
pub struct GibbsOracle {
    alphabet: usize,
    adj: Vec<Vec<bool>>,
    block: usize,
    states: Vec<Vec<Symbol>>,
    weight: Vec<Vec<f64>>,
    left: Vec<f64>,
    right: Vec<f64>,
    lambda: f64,
    cache: std::sync::Mutex<std::collections::HashMap<usize, std::sync::Arc<Vec<Vec<Symbol>>>>>,
}

fn admissible(adj: &[Vec<bool>], w: &[Symbol]) -> bool {
    w.windows(2).all(|p| adj[p[0] as usize][p[1] as usize])
}

/// All admissible words of length `len`, by depth-first extension.
pub fn all_words(adj: &[Vec<bool>], len: usize) -> Vec<Vec<Symbol>> {
    fn extend(adj: &[Vec<bool>], w: &mut Vec<Symbol>, len: usize, out: &mut Vec<Vec<Symbol>>) {
        if w.len() == len {
            out.push(w.clone());
            return;
        }
        for s in 0..adj.len() {
            if w.last().map_or(true, |&p| adj[p as usize][s]) {
                w.push(s as Symbol);
                extend(adj, w, len, out);
                w.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(adj, &mut Vec::with_capacity(len), len, &mut out);
    out
}

impl GibbsOracle {
    pub fn new(entries: &[Vec<u8>], memory: usize, phi: impl Fn(&[Symbol]) -> f64) -> Self {
        let adj: Vec<Vec<bool>> = entries.iter().map(|r| r.iter().map(|&x| x == 1).collect()).collect();
        let block = memory.saturating_sub(1).max(1);
        let states = all_words(&adj, block);
        let n = states.len();
        let mut weight = vec![vec![0.0; n]; n];
        for (i, u) in states.iter().enumerate() {
            for (j, v) in states.iter().enumerate() {
                if u[1..] != v[..block - 1] || !adj[*u.last().unwrap() as usize][*v.last().unwrap() as usize] {
                    continue;
                }
                let s = *v.last().unwrap();
                let key: Vec<Symbol> = match memory {
                    1 => vec![u[0]],
                    2 => vec![u[0], s],
                    _ => u.iter().copied().chain(std::iter::once(s)).collect(),
                };
                weight[i][j] = phi(&key).exp();
            }
        }
        let iterate = |transpose: bool| {
            let mut v = vec![1.0; n];
            for _ in 0..5000 {
                let mut next = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        if transpose {
                            next[j] += v[i] * weight[i][j];
                        } else {
                            next[i] += weight[i][j] * v[j];
                        }
                    }
                }
                let max = next.iter().cloned().fold(0.0, f64::max);
                v = next.into_iter().map(|x| x / max).collect();
            }
            v
        };
        let left = iterate(true);
        let right = iterate(false);
        let wr: Vec<f64> = (0..n).map(|i| (0..n).map(|j| weight[i][j] * right[j]).sum()).collect();
        let lambda = wr.iter().zip(&left).map(|(a, b)| a * b).sum::<f64>()
            / right.iter().zip(&left).map(|(a, b)| a * b).sum::<f64>();
        Self {
            alphabet: entries.len(),
            adj,
            block,
            states,
            weight,
            left,
            right,
            lambda,
            cache: Default::default(),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adj
    }

    fn state(&self, w: &[Symbol]) -> usize {
        self.states.iter().position(|s| s == w).expect("admissible block")
    }

    fn norm(&self) -> f64 {
        self.left.iter().zip(&self.right).map(|(a, b)| a * b).sum()
    }

    /// `μ[w]` at any fixed position.
    pub fn word_measure(&self, w: &[Symbol]) -> f64 {
        if !admissible(&self.adj, w) {
            return 0.0;
        }
        let b = self.block;
        if w.len() < b {
            return self
                .states
                .iter()
                .enumerate()
                .filter(|(_, s)| s.starts_with(w))
                .map(|(i, _)| self.left[i] * self.right[i])
                .sum::<f64>()
                / self.norm();
        }
        let mut u = self.state(&w[..b]);
        let mut acc = self.left[u];
        for k in b..w.len() {
            let v = self.state(&w[k + 1 - b..=k]);
            acc *= self.weight[u][v] / self.lambda;
            u = v;
        }
        acc * self.right[u] / self.norm()
    }

    /// `μ(C1 ∩ C2)` by summing the measures of every admissible word on the
    /// convex hull that agrees with both cylinders.
    pub fn joint(&self, c1: (i64, &[Symbol]), c2: (i64, &[Symbol])) -> f64 {
        let lo = c1.0.min(c2.0);
        let hi = (c1.0 + c1.1.len() as i64).max(c2.0 + c2.1.len() as i64) - 1;
        let len = (hi - lo + 1) as usize;
        let fits = |w: &[Symbol], c: (i64, &[Symbol])| {
            c.1.iter().enumerate().all(|(j, &s)| w[(c.0 - lo) as usize + j] == s)
        };
        self.words(len)
            .iter()
            .filter(|w| fits(w, c1) && fits(w, c2))
            .map(|w| self.word_measure(w))
            .sum()
    }

    fn words(&self, len: usize) -> std::sync::Arc<Vec<Vec<Symbol>>> {
        let mut cache = self.cache.lock().unwrap();
        cache
            .entry(len)
            .or_insert_with(|| std::sync::Arc::new(all_words(&self.adj, len)))
            .clone()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }
}

/// `|d1 d2|` for the Smith normal form `diag(d1, d2)` of `a`, by
/// gcd-driven row and column elimination.
pub fn smith_invariants(a: [[i128; 2]; 2]) -> (i128, i128) {
    let mut m = a;
    loop {
        // Move the smallest nonzero entry to (0, 0).
        let mut best: Option<(usize, usize)> = None;
        for i in 0..2 {
            for j in 0..2 {
                if m[i][j] != 0 && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { return (0, 0) };
        m.swap(0, bi);
        for row in m.iter_mut() {
            row.swap(0, bj);
        }
        let p = m[0][0];
        let q1 = m[1][0] / p;
        m[1][0] -= q1 * p;
        m[1][1] -= q1 * m[0][1];
        let q2 = m[0][1] / p;
        m[0][1] -= q2 * p;
        m[1][1] -= q2 * m[1][0];
        if m[1][0] != 0 || m[0][1] != 0 {
            continue;
        }
        if m[1][1] % p != 0 {
            // Bring d2 into the first row to restore divisibility.
            m[0][1] = m[1][1];
            continue;
        }
        return (p.abs(), m[1][1].abs());
    }
}

/// Number of `x ∈ [0,1)²` with `A x ∈ Z²`, by enumerating lattice points of
/// `A [0,1)²` and testing `adj(A) k / det ∈ [0,1)²` exactly.
pub fn lattice_count(a: [[i128; 2]; 2]) -> u128 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    assert!(det != 0);
    let adj = [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]];
    let range = |r: [i128; 2]| (r[0].min(0) + r[1].min(0), r[0].max(0) + r[1].max(0));
    let (x0, x1) = range(a[0]);
    let (y0, y1) = range(a[1]);
    let inside = |num: i128| {
        // 0 <= num/det < 1
        if det > 0 {
            num >= 0 && num < det
        } else {
            num <= 0 && num > det
        }
    };
    let mut count = 0u128;
    for kx in x0..=x1 {
        for ky in y0..=y1 {
            if inside(adj[0][0] * kx + adj[0][1] * ky) && inside(adj[1][0] * kx + adj[1][1] * ky) {
                count += 1;
            }
        }
    }
    count
}

/// `M^n - I` by repeated multiplication.
pub fn power_minus_identity(m: [[i64; 2]; 2], n: u32) -> [[i128; 2]; 2] {
    let m = m.map(|r| r.map(i128::from));
    let mut p = [[1i128, 0], [0, 1]];
    for _ in 0..n {
        p = [
            [p[0][0] * m[0][0] + p[0][1] * m[1][0], p[0][0] * m[0][1] + p[0][1] * m[1][1]],
            [p[1][0] * m[0][0] + p[1][1] * m[1][0], p[1][0] * m[0][1] + p[1][1] * m[1][1]],
        ];
    }
    p[0][0] -= 1;
    p[1][1] -= 1;
    p
}

/// Largest dyadic square inside the closed ball, over every cell of every
/// level up to `max_level`.
pub fn brute_inscribe(center: [f64; 2], r: f64, max_level: u32) -> Option<(u32, u64, u64)> {
    for level in 0..=max_level {
        let s = (-(level as f64)).exp2();
        let cells = 1u64 << level;
        let lo = |c: f64| (((c - r) / s).floor().max(0.0)) as u64;
        let hi = |c: f64| (((c + r) / s).ceil() as u64).min(cells);
        for i in lo(center[0])..hi(center[0]) {
            for j in lo(center[1])..hi(center[1]) {
                let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
                let inside = corners.iter().all(|&(a, b)| {
                    let dx = a as f64 * s - center[0];
                    let dy = b as f64 * s - center[1];
                    dx * dx + dy * dy <= r * r
                });
                if inside {
                    return Some((level, i, j));
                }
            }
        }
    }
    None
}
