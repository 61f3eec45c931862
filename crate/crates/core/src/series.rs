//! Exact scalars, polynomials in a formal parameter `q`, and truncated power series.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub type Rational = BigRational;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a ratio of scaled integers when the parts overflow f64.
        let shift = (r.numer().bits().max(r.denom().bits()) as i64 - 1000).max(0) as u32;
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// `"p/q"` (or `"p"` for integers).
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

/// Fixed 12-digit float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.12}")
}

/// Coefficient ring for series arithmetic.
pub trait Coeff:
    Clone + PartialEq + fmt::Debug + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn scale(&self, r: &Rational) -> Self;
    fn try_recip(&self) -> Option<Self>;
}

impl Coeff for Rational {
    fn scale(&self, r: &Rational) -> Self {
        self * r
    }
    fn try_recip(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self.recip())
    }
}

/// Polynomial in `q` with rational coefficients, lowest degree first, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly(Vec<Rational>);

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn constant(c: Rational) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `q`.
    pub fn q() -> Self {
        Poly::new(vec![int(0), int(1)])
    }

    pub fn monomial(c: Rational, degree: usize) -> Self {
        let mut v = vec![int(0); degree + 1];
        v[degree] = c;
        Poly::new(v)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn coeff(&self, degree: usize) -> Rational {
        self.0.get(degree).cloned().unwrap_or_else(Zero::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, q: &Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, c| acc * q + c)
    }

    pub fn eval_f64(&self, q: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * q + to_f64(c))
    }

    /// `q · d/dq`.
    pub fn euler_derivative(&self) -> Self {
        Poly::new(self.0.iter().enumerate().map(|(d, c)| c * int(d as i64)).collect())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(d, c)| match d {
                0 => fmt_rational(c),
                1 => format!("{}*q", fmt_rational(c)),
                _ => format!("{}*q^{d}", fmt_rational(c)),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl Zero for Poly {
    fn zero() -> Self {
        Poly(Vec::new())
    }
    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

impl One for Poly {
    fn one() -> Self {
        Poly::constant(int(1))
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        let (mut long, short) = if self.0.len() >= rhs.0.len() { (self.0, rhs.0) } else { (rhs.0, self.0) };
        for (a, b) in long.iter_mut().zip(short) {
            *a += b;
        }
        Poly::new(long)
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly(self.0.into_iter().map(|c| -c).collect())
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        self + (-rhs)
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        if self.0.is_empty() || rhs.0.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Coeff for Poly {
    fn scale(&self, r: &Rational) -> Self {
        Poly::new(self.0.iter().map(|c| c * r).collect())
    }
    fn try_recip(&self) -> Option<Self> {
        match self.0.as_slice() {
            [c] => Some(Poly::constant(c.recip())),
            _ => None,
        }
    }
}

/// Truncated power series `Σ_{k≤order} a_k w^k`.
#[derive(Clone, PartialEq, Debug)]
pub struct PowerSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Coeff> PowerSeries<T> {
    /// Series known through `w^order`; missing coefficients are zero.
    pub fn new(mut coeffs: Vec<T>, order: usize) -> Self {
        coeffs.resize(order + 1, T::zero());
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(Vec::new(), order)
    }

    pub fn one(order: usize) -> Self {
        Self::new(vec![T::one()], order)
    }

    /// The monomial `c·w^k`.
    pub fn monomial(c: T, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.coeffs.iter().take(order + 1).cloned().collect(), order)
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        Self::new((0..=order).map(|k| self.coeffs[k].clone() + other.coeffs[k].clone()).collect(), order)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        Self::new((0..=order).map(|k| self.coeffs[k].clone() - other.coeffs[k].clone()).collect(), order)
    }

    pub fn neg(&self) -> Self {
        Self { coeffs: self.coeffs.iter().cloned().map(|c| -c).collect() }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.scale(r)).collect() }
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        Self { coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = vec![T::zero(); order + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self { coeffs: out }
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::one(self.order()), |acc, _| acc.mul(self))
    }

    /// Multiplies by `w^k`, keeping the order.
    pub fn shift(&self, k: usize) -> Self {
        let order = self.order();
        let mut coeffs = vec![T::zero(); k.min(order + 1)];
        coeffs.extend(self.coeffs.iter().take((order + 1).saturating_sub(k)).cloned());
        Self::new(coeffs, order)
    }

    /// `d/dw`; the result is known one order less.
    pub fn derivative(&self) -> Self {
        let order = self.order().saturating_sub(1);
        Self::new(
            self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c.scale(&int(k as i64))).collect(),
            order,
        )
    }

    /// Multiplicative inverse; `None` if the constant term is not a unit.
    pub fn recip(&self) -> Option<Self> {
        let inv0 = self.coeffs[0].try_recip()?;
        let order = self.order();
        let mut out: Vec<T> = vec![inv0.clone()];
        for n in 1..=order {
            let mut acc = T::zero();
            for k in 1..=n {
                acc = acc + self.coeffs[k].clone() * out[n - k].clone();
            }
            out.push(-(inv0.clone() * acc));
        }
        Some(Self { coeffs: out })
    }

    /// `exp(f)` for `f` with zero constant term.
    pub fn exp(&self) -> Option<Self> {
        if !self.coeffs[0].is_zero() {
            return None;
        }
        let order = self.order();
        let mut out = vec![T::one()];
        for n in 1..=order {
            let mut acc = T::zero();
            for k in 1..=n {
                acc = acc + self.coeffs[k].scale(&int(k as i64)) * out[n - k].clone();
            }
            out.push(acc.scale(&rat(1, n as i64)));
        }
        Some(Self { coeffs: out })
    }

    /// `log(f)` for `f` with constant term 1.
    pub fn log(&self) -> Option<Self> {
        if self.coeffs[0] != T::one() {
            return None;
        }
        let order = self.order();
        let d = self.derivative();
        let quotient = d.mul(&self.recip()?.truncate(order.saturating_sub(1)));
        let mut out = vec![T::zero()];
        for k in 1..=order {
            out.push(quotient.coeff(k - 1).scale(&rat(1, k as i64)));
        }
        Some(Self { coeffs: out })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }
}

pub fn is_nonneg(r: &Rational) -> bool {
    !r.is_negative()
}
