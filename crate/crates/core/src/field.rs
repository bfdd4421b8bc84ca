//! Scalar types shared by the exact and floating-point code paths.
//!
//! `Q` is the exact rational type, `QSqrt2` is the quadratic field Q(√2)
//! (enough to express the orthonormal frames of lattices such as A₁ ⊕ U
//! exactly), and `f64` is the numeric fallback.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qfrac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"a/b"`, `"a"` or a decimal-free integer string into a rational.
pub fn parse_q(s: &str) -> Result<Q, String> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt, String> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| format!("not a rational number: {s:?}"))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Q::new(parse_int(n)?, d))
        }
        None => Ok(Q::from_integer(parse_int(s)?)),
    }
}

pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Very large numerators/denominators: divide after scaling.
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Fractional part in [0, 1).
pub fn frac_q(x: &Q) -> Q {
    x - x.floor()
}

pub fn is_integral(x: &Q) -> bool {
    x.denom().is_one()
}

pub fn to_i64(x: &Q) -> Option<i64> {
    if is_integral(x) {
        x.numer().to_i64()
    } else {
        None
    }
}

/// Commutative ring with unit, with a conversion from Q and to f64.
pub trait Ring:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn from_q(x: &Q) -> Self;
    fn approx(&self) -> f64;
    fn from_i64(n: i64) -> Self {
        Self::from_q(&q(n))
    }
}

/// A field: every nonzero element is invertible.
pub trait Field: Ring + Div<Output = Self> {}

impl Ring for Q {
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn approx(&self) -> f64 {
        q_to_f64(self)
    }
}
impl Field for Q {}

impl Ring for f64 {
    fn from_q(x: &Q) -> Self {
        q_to_f64(x)
    }
    fn approx(&self) -> f64 {
        *self
    }
}
impl Field for f64 {}

/// a + b√2 with rational a, b.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    pub a: Q,
    pub b: Q,
}

impl QSqrt2 {
    pub fn new(a: Q, b: Q) -> Self {
        QSqrt2 { a, b }
    }
    pub fn sqrt2() -> Self {
        QSqrt2 { a: Q::zero(), b: Q::one() }
    }
    /// Exact value when the element is rational.
    pub fn as_rational(&self) -> Option<Q> {
        if self.b.is_zero() {
            Some(self.a.clone())
        } else {
            None
        }
    }
    pub fn conj(&self) -> Self {
        QSqrt2 { a: self.a.clone(), b: -self.b.clone() }
    }
    pub fn norm(&self) -> Q {
        &self.a * &self.a - q(2) * &self.b * &self.b
    }
    pub fn is_positive(&self) -> bool {
        // sign of a + b√2 decided exactly by comparing squares
        let sa = self.a.signum();
        let sb = self.b.signum();
        if sb.is_zero() {
            return sa.is_positive();
        }
        if sa.is_zero() {
            return sb.is_positive();
        }
        if sa == sb {
            return sa.is_positive();
        }
        // opposite signs: compare a² with 2b²
        let a2 = &self.a * &self.a;
        let b2 = q(2) * &self.b * &self.b;
        if a2 > b2 {
            sa.is_positive()
        } else {
            sb.is_positive()
        }
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", fmt_q(&self.a)),
            (true, false) => write!(f, "{}*sqrt2", fmt_q(&self.b)),
            _ => write!(f, "{} + {}*sqrt2", fmt_q(&self.a), fmt_q(&self.b)),
        }
    }
}

impl Add for QSqrt2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        QSqrt2 { a: self.a + o.a, b: self.b + o.b }
    }
}
impl Sub for QSqrt2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        QSqrt2 { a: self.a - o.a, b: self.b - o.b }
    }
}
impl Mul for QSqrt2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        QSqrt2 {
            a: &self.a * &o.a + q(2) * &self.b * &o.b,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
}
impl Div for QSqrt2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let n = o.norm();
        assert!(!n.is_zero(), "division by zero in Q(sqrt 2)");
        let t = self * o.conj();
        QSqrt2 { a: t.a / &n, b: t.b / n }
    }
}
impl Neg for QSqrt2 {
    type Output = Self;
    fn neg(self) -> Self {
        QSqrt2 { a: -self.a, b: -self.b }
    }
}
impl Zero for QSqrt2 {
    fn zero() -> Self {
        QSqrt2 { a: Q::zero(), b: Q::zero() }
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}
impl One for QSqrt2 {
    fn one() -> Self {
        QSqrt2 { a: Q::one(), b: Q::zero() }
    }
}
impl Ring for QSqrt2 {
    fn from_q(x: &Q) -> Self {
        QSqrt2 { a: x.clone(), b: Q::zero() }
    }
    fn approx(&self) -> f64 {
        q_to_f64(&self.a) + q_to_f64(&self.b) * std::f64::consts::SQRT_2
    }
}
impl Field for QSqrt2 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["1/2", "-3/4", "5", "0"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert_eq!(fmt_q(&parse_q("2/4").unwrap()), "1/2");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn qsqrt2_arithmetic() {
        let s = QSqrt2::sqrt2();
        assert_eq!(s.clone() * s.clone(), QSqrt2::from_i64(2));
        let x = QSqrt2::new(qfrac(1, 2), q(3));
        let y = x.clone() / x.clone();
        assert_eq!(y, QSqrt2::one());
        assert!(QSqrt2::new(q(1), q(-1)).approx() < 0.0);
        assert!(!QSqrt2::new(q(1), q(-1)).is_positive());
        assert!(QSqrt2::new(q(-1), q(1)).is_positive());
    }
}
