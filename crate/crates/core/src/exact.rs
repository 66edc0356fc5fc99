//! Exact arithmetic in `Q(√d)` for measures whose eigendata are quadratic
//! irrationals: Bernoulli measures with rational weights and Parry measures
//! on two symbols.

use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Zero};
use thiserror::Error;

use crate::shift::{Symbol, TransitionMatrix};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("exact arithmetic overflowed 128-bit rationals")]
    Overflow,
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands live in different quadratic fields (d = {0} and d = {1})")]
    FieldMismatch(i128, i128),
    #[error("exact mode supports Bernoulli weights or 2-symbol Parry measures only")]
    Unsupported,
    #[error("Bernoulli weights must be positive and sum to 1")]
    BadWeights,
}

/// `a + b√d` with `d >= 1` squarefree; `d = 1` means a rational number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Surd {
    a: Rational,
    b: Rational,
    d: i128,
}

fn squarefree_split(d: i128) -> (i128, i128) {
    let mut outside = 1i128;
    let mut inside = d;
    let mut f = 2i128;
    while f * f <= inside {
        while inside % (f * f) == 0 {
            inside /= f * f;
            outside *= f;
        }
        f += 1;
    }
    (outside, inside)
}

fn ov<T>(x: Option<T>) -> Result<T, ExactError> {
    x.ok_or(ExactError::Overflow)
}

impl Surd {
    pub fn rational(q: Rational) -> Self {
        Self {
            a: q,
            b: Rational::zero(),
            d: 1,
        }
    }

    pub fn integer(n: i128) -> Self {
        Self::rational(Rational::from_integer(n))
    }

    /// `a + b√d` for `d >= 1`, normalised so `d` is squarefree.
    pub fn new(a: Rational, b: Rational, d: i128) -> Result<Self, ExactError> {
        assert!(d >= 1, "radicand must be positive");
        let (outside, inside) = squarefree_split(d);
        let b = ov(b.checked_mul(&Rational::from_integer(outside)))?;
        if inside == 1 {
            return Ok(Self::rational(ov(a.checked_add(&b))?));
        }
        Ok(Self { a, b, d: inside })
    }

    pub fn sqrt(d: i128) -> Result<Self, ExactError> {
        Self::new(Rational::zero(), Rational::from_integer(1), d)
    }

    pub fn rational_part(&self) -> Rational {
        self.a
    }

    pub fn surd_part(&self) -> Rational {
        self.b
    }

    pub fn radicand(&self) -> i128 {
        self.d
    }

    fn field(&self, other: &Self) -> Result<i128, ExactError> {
        match (self.d, other.d) {
            (x, y) if x == y => Ok(x),
            (1, y) if self.b.is_zero() => Ok(y),
            (x, 1) if other.b.is_zero() => Ok(x),
            (x, y) => Err(ExactError::FieldMismatch(x, y)),
        }
    }

    fn normalise(a: Rational, b: Rational, d: i128) -> Self {
        if b.is_zero() {
            Self::rational(a)
        } else {
            Self { a, b, d }
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self, ExactError> {
        let d = self.field(o)?;
        Ok(Self::normalise(ov(self.a.checked_add(&o.a))?, ov(self.b.checked_add(&o.b))?, d))
    }

    pub fn sub(&self, o: &Self) -> Result<Self, ExactError> {
        let d = self.field(o)?;
        Ok(Self::normalise(ov(self.a.checked_sub(&o.a))?, ov(self.b.checked_sub(&o.b))?, d))
    }

    pub fn mul(&self, o: &Self) -> Result<Self, ExactError> {
        let d = self.field(o)?;
        let dd = Rational::from_integer(d);
        let bb = ov(ov(self.b.checked_mul(&o.b))?.checked_mul(&dd))?;
        let a = ov(ov(self.a.checked_mul(&o.a))?.checked_add(&bb))?;
        let b = ov(ov(self.a.checked_mul(&o.b))?.checked_add(&ov(self.b.checked_mul(&o.a))?))?;
        Ok(Self::normalise(a, b, d))
    }

    /// `(a - b√d) / (a² - d b²)`.
    pub fn recip(&self) -> Result<Self, ExactError> {
        let dd = Rational::from_integer(self.d);
        let norm = ov(ov(self.a.checked_mul(&self.a))?
            .checked_sub(&ov(ov(self.b.checked_mul(&self.b))?.checked_mul(&dd))?))?;
        if norm.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        Ok(Self::normalise(
            ov(self.a.checked_div(&norm))?,
            ov((-self.b).checked_div(&norm))?,
            self.d,
        ))
    }

    pub fn div(&self, o: &Self) -> Result<Self, ExactError> {
        self.mul(&o.recip()?)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let ratio = |q: &Rational| *q.numer() as f64 / *q.denom() as f64;
        let (a, b) = (ratio(&self.a), ratio(&self.b));
        a + b * (self.d as f64).sqrt()
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{} + {}·√{}", self.a, self.b, self.d)
        }
    }
}

/// Exact Markov data: transition matrix and stationary vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMarkov {
    pub lambda: Surd,
    pub transition: Vec<Vec<Surd>>,
    pub stationary: Vec<Surd>,
}

impl ExactMarkov {
    /// Bernoulli measure with rational symbol weights summing to one.
    pub fn bernoulli(weights: &[Rational]) -> Result<Self, ExactError> {
        if weights.len() < 2 || weights.iter().any(|w| *w <= Rational::zero()) {
            return Err(ExactError::BadWeights);
        }
        let total = weights
            .iter()
            .try_fold(Rational::zero(), |acc, w| acc.checked_add(w))
            .ok_or(ExactError::Overflow)?;
        if total != Rational::from_integer(1) {
            return Err(ExactError::BadWeights);
        }
        let row: Vec<Surd> = weights.iter().map(|&w| Surd::rational(w)).collect();
        Ok(Self {
            lambda: Surd::integer(1),
            transition: vec![row.clone(); weights.len()],
            stationary: row,
        })
    }

    /// Parry measure of a primitive 2×2 transition matrix.
    pub fn parry_two_symbols(a: &TransitionMatrix) -> Result<Self, ExactError> {
        if a.size() != 2 {
            return Err(ExactError::Unsupported);
        }
        let e = a.entries();
        let [a11, a12, a21, a22] = [e[0][0], e[0][1], e[1][0], e[1][1]].map(i128::from);
        let tr = a11 + a22;
        let det = a11 * a22 - a12 * a21;
        let disc = tr * tr - 4 * det;
        // λ = (tr + √disc) / 2.
        let half = Rational::new(1, 2);
        let lambda = Surd::new(Rational::from_integer(tr) * half, half, disc)?;
        let int = |x: i128| Surd::integer(x);
        let r = if a12 != 0 {
            [int(a12), lambda.sub(&int(a11))?]
        } else {
            [lambda.sub(&int(a22))?, int(a21)]
        };
        let l = if a21 != 0 {
            [int(a21), lambda.sub(&int(a11))?]
        } else {
            [lambda.sub(&int(a22))?, int(a12)]
        };
        let mut transition = vec![vec![Surd::integer(0); 2]; 2];
        for u in 0..2 {
            for v in 0..2 {
                if a.allows(u as Symbol, v as Symbol) {
                    transition[u][v] = r[v].div(&lambda.mul(&r[u])?)?;
                }
            }
        }
        let w = [l[0].mul(&r[0])?, l[1].mul(&r[1])?];
        let total = w[0].add(&w[1])?;
        let stationary = vec![w[0].div(&total)?, w[1].div(&total)?];
        Ok(Self {
            lambda,
            transition,
            stationary,
        })
    }

    /// `p_{w0} ∏ P_{w_i w_{i+1}}`.
    pub fn word_measure(&self, word: &[Symbol]) -> Result<Surd, ExactError> {
        let Some(&first) = word.first() else {
            return Ok(Surd::integer(1));
        };
        let mut acc = self.stationary[first as usize];
        for pair in word.windows(2) {
            acc = acc.mul(&self.transition[pair[0] as usize][pair[1] as usize])?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::MarkovGibbs;

    #[test]
    fn surd_field_operations() {
        let s5 = Surd::sqrt(5).unwrap();
        let sq = s5.mul(&s5).unwrap();
        assert_eq!(sq, Surd::integer(5));
        assert_eq!(Surd::sqrt(20).unwrap(), s5.mul(&Surd::integer(2)).unwrap());
        assert_eq!(Surd::sqrt(4).unwrap(), Surd::integer(2));
        let x = Surd::new(Rational::new(1, 2), Rational::new(1, 2), 5).unwrap();
        assert_eq!(x.mul(&x.recip().unwrap()).unwrap(), Surd::integer(1));
        assert!(matches!(
            s5.add(&Surd::sqrt(2).unwrap()),
            Err(ExactError::FieldMismatch(5, 2))
        ));
    }

    #[test]
    fn golden_mean_exact_parry() {
        let a = TransitionMatrix::golden_mean();
        let ex = ExactMarkov::parry_two_symbols(&a).unwrap();
        // μ(00) = 1/√5 exactly.
        let m = ex.word_measure(&[0, 0]).unwrap();
        assert_eq!(m, Surd::new(Rational::zero(), Rational::new(1, 5), 5).unwrap());
        let g = MarkovGibbs::parry(&a).unwrap();
        for w in crate::shift::enumerate_words(&a, 8).unwrap() {
            let exact = ex.word_measure(&w).unwrap().to_f64();
            assert!((exact - g.word_measure(&w)).abs() < 1e-14);
        }
        assert!((ex.lambda.to_f64() - g.lambda()).abs() < 1e-14);
    }

    #[test]
    fn full_shift_parry_is_rational() {
        let a = TransitionMatrix::full(2).unwrap();
        let ex = ExactMarkov::parry_two_symbols(&a).unwrap();
        assert_eq!(ex.lambda, Surd::integer(2));
        assert_eq!(ex.word_measure(&[1, 0, 1]).unwrap(), Surd::rational(Rational::new(1, 8)));
    }

    #[test]
    fn bernoulli_exact() {
        let ex = ExactMarkov::bernoulli(&[Rational::new(1, 3), Rational::new(2, 3)]).unwrap();
        assert_eq!(
            ex.word_measure(&[1, 1, 0]).unwrap(),
            Surd::rational(Rational::new(4, 27))
        );
        assert_eq!(
            ExactMarkov::bernoulli(&[Rational::new(1, 3), Rational::new(1, 3)]),
            Err(ExactError::BadWeights)
        );
    }
}
