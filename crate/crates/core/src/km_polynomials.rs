//! Exact polynomial engine: Hermite polynomials, the Kudla–Millson
//! polynomials, `exp(−Δ/8πy)`, the u-direction decomposition on `g♯(V)`
//! and the twisted polynomials.

use crate::field::{fmt_q, q, q_to_f64, Field, QSqrt2, Ring, Q};
use crate::grassmannian::SplitFrame;
use crate::linalg::Mat;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("coefficient is not in Q(√2): {0}")]
    NotAlgebraic(String),
}

/// Coefficient ring for [`Poly`].
pub trait Coeff:
    Clone
    + fmt::Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
}
impl<T> Coeff for T where
    T: Clone
        + fmt::Debug
        + PartialEq
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Neg<Output = T>
{
}

/// One summand `rat · 2^{a/2} · π^{b/2} · y^{d/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfPowerTerm {
    pub rat: Q,
    pub a: i32,
    pub b: i32,
    pub d: i32,
}

/// A finite sum of [`HalfPowerTerm`]s, kept canonical: `a ∈ {0, 1}` (even
/// powers of √2 are folded into the rational) and no zero rationals.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HalfPowerCoeff {
    terms: BTreeMap<(i32, i32, i32), Q>,
}

fn pow2(e: i32) -> Q {
    if e >= 0 {
        Q::from_integer(num_bigint::BigInt::one() << e as usize)
    } else {
        Q::new(num_bigint::BigInt::one(), num_bigint::BigInt::one() << (-e) as usize)
    }
}

impl HalfPowerCoeff {
    pub fn term(rat: Q, a: i32, b: i32, d: i32) -> Self {
        let mut c = HalfPowerCoeff::default();
        c.add_term(rat, a, b, d);
        c
    }
    pub fn rational(r: Q) -> Self {
        Self::term(r, 0, 0, 0)
    }
    fn add_term(&mut self, rat: Q, a: i32, b: i32, d: i32) {
        if rat.is_zero() {
            return;
        }
        let a0 = a.rem_euclid(2);
        let rat = rat * pow2((a - a0) / 2);
        let e = self.terms.entry((a0, b, d)).or_insert_with(Q::zero);
        *e += rat;
        if e.is_zero() {
            self.terms.remove(&(a0, b, d));
        }
    }
    pub fn terms(&self) -> Vec<HalfPowerTerm> {
        self.terms
            .iter()
            .map(|(&(a, b, d), r)| HalfPowerTerm { rat: r.clone(), a, b, d })
            .collect()
    }
    pub fn eval(&self, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b, d), r)| {
                q_to_f64(r) * 2f64.powf(a as f64 / 2.0) * PI.powf(b as f64 / 2.0) * y.powf(d as f64 / 2.0)
            })
            .sum()
    }
    /// Multiplies every term by `y^{k/2}`.
    pub fn shift_y(&self, k: i32) -> Self {
        let mut out = HalfPowerCoeff::default();
        for (&(a, b, d), r) in &self.terms {
            out.add_term(r.clone(), a, b, d + k);
        }
        out
    }
    /// Value in Q(√2) when no π or y powers occur.
    pub fn to_qsqrt2(&self) -> Result<QSqrt2, PolyError> {
        let mut out = QSqrt2::zero();
        for (&(a, b, d), r) in &self.terms {
            if b != 0 || d != 0 {
                return Err(PolyError::NotAlgebraic(self.to_string()));
            }
            out = out + if a == 0 { QSqrt2::new(r.clone(), Q::zero()) } else { QSqrt2::new(Q::zero(), r.clone()) };
        }
        Ok(out)
    }
}

impl fmt::Display for HalfPowerCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(a, b, d), r)| format!("{} * 2^({a}/2) * pi^({b}/2) * y^({d}/2)", fmt_q(r)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for HalfPowerCoeff {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for ((a, b, d), r) in o.terms {
            self.add_term(r, a, b, d);
        }
        self
    }
}
impl Neg for HalfPowerCoeff {
    type Output = Self;
    fn neg(mut self) -> Self {
        for v in self.terms.values_mut() {
            *v = -v.clone();
        }
        self
    }
}
impl Sub for HalfPowerCoeff {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}
impl Mul for HalfPowerCoeff {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = HalfPowerCoeff::default();
        for (&(a1, b1, d1), r1) in &self.terms {
            for (&(a2, b2, d2), r2) in &o.terms {
                out.add_term(r1 * r2, a1 + a2, b1 + b2, d1 + d2);
            }
        }
        out
    }
}
impl Zero for HalfPowerCoeff {
    fn zero() -> Self {
        HalfPowerCoeff::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}
impl One for HalfPowerCoeff {
    fn one() -> Self {
        HalfPowerCoeff::rational(Q::one())
    }
}

/// Multivariate polynomial: exponent vector → coefficient, zeros dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<C> {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, C>,
}

pub type HalfPowerPoly = Poly<HalfPowerCoeff>;

impl<C: Coeff> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }
    pub fn constant(nvars: usize, c: C) -> Self {
        Self::monomial(vec![0; nvars], c)
    }
    pub fn monomial(exps: Vec<u32>, c: C) -> Self {
        let nvars = exps.len();
        let mut p = Poly::zero(nvars);
        p.add_monomial(exps, c);
        p
    }
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, C::one())
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn add_monomial(&mut self, exps: Vec<u32>, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(v) => {
                *v = v.clone() + c;
                if v.is_zero() {
                    self.terms.remove(&exps);
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_monomial(e.clone(), c.clone());
        }
        out
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-C::one()))
    }
    pub fn scale(&self, s: &C) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_monomial(e.clone(), c.clone() * s.clone());
        }
        out
    }
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Poly::zero(self.nvars.max(o.nvars));
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let n = e1.len().max(e2.len());
                let e: Vec<u32> = (0..n)
                    .map(|i| e1.get(i).copied().unwrap_or(0) + e2.get(i).copied().unwrap_or(0))
                    .collect();
                out.add_monomial(e, c1.clone() * c2.clone());
            }
        }
        out
    }
    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.nvars, C::one()), |acc, _| acc.mul(self))
    }
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_monomial(e.clone(), f(c));
        }
        out
    }
    /// Pads (or keeps) the variable list to `n` variables.
    pub fn with_nvars(&self, n: usize) -> Self {
        assert!(n >= self.nvars || self.terms.keys().all(|e| e[n..].iter().all(|&x| x == 0)));
        let mut out = Poly::zero(n);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2.resize(n, 0);
            out.add_monomial(e2, c.clone());
        }
        out
    }
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }
    /// (degree in the first `p` variables, degree in the rest) when homogeneous in both.
    pub fn bidegree(&self, p: usize) -> Result<(u32, u32), PolyError> {
        let mut out = None;
        for e in self.terms.keys() {
            let d = (e[..p].iter().sum::<u32>(), e[p..].iter().sum::<u32>());
            match out {
                None => out = Some(d),
                Some(o) if o != d => return Err(PolyError::NotHomogeneous),
                _ => {}
            }
        }
        Ok(out.unwrap_or((0, 0)))
    }
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            let k = e2[i];
            e2[i] -= 1;
            out.add_monomial(e2, c.clone() * from_u32::<C>(k));
        }
        out
    }
    pub fn laplacian(&self) -> Self {
        (0..self.nvars).fold(Poly::zero(self.nvars), |acc, i| acc.add(&self.derivative(i).derivative(i)))
    }
    /// tr(M · Hess), for a symmetric metric matrix M.
    pub fn laplacian_metric(&self, m: &Mat<C>) -> Self {
        let mut out = Poly::zero(self.nvars);
        for i in 0..self.nvars {
            let di = self.derivative(i);
            if di.is_zero() {
                continue;
            }
            for j in 0..self.nvars {
                if m[i][j].is_zero() {
                    continue;
                }
                out = out.add(&di.derivative(j).scale(&m[i][j]));
            }
        }
        out
    }
    /// Substitutes `x_i = Σ_j rows[i][j]·y_j` (rows[i] has `n_new` entries).
    pub fn substitute_linear(&self, rows: &[Vec<C>], n_new: usize) -> Self {
        let forms: Vec<Poly<C>> = rows
            .iter()
            .map(|r| {
                let mut f = Poly::zero(n_new);
                for (j, c) in r.iter().enumerate() {
                    let mut e = vec![0; n_new];
                    e[j] = 1;
                    f.add_monomial(e, c.clone());
                }
                f
            })
            .collect();
        let mut cache: BTreeMap<(usize, u32), Poly<C>> = BTreeMap::new();
        let mut out = Poly::zero(n_new);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(n_new, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let pw = cache.entry((i, k)).or_insert_with(|| forms[i].pow(k)).clone();
                t = t.mul(&pw);
            }
            out = out.add(&t);
        }
        out
    }
    /// Evaluates with a coefficient-to-f64 map.
    pub fn eval_with(&self, x: &[f64], f: impl Fn(&C) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| f(c) * e.iter().zip(x).map(|(&k, xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }
}

impl<C: Coeff + Ring> Poly<C> {
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.eval_with(x, |c| c.approx())
    }
}

fn from_u32<C: Coeff>(k: u32) -> C {
    (0..k).fold(C::zero(), |acc, _| acc + C::one())
}

impl HalfPowerPoly {
    pub fn to_qsqrt2(&self) -> Result<Poly<QSqrt2>, PolyError> {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_monomial(e.clone(), c.to_qsqrt2()?);
        }
        Ok(out)
    }
    /// Coefficients evaluated at a numeric y.
    pub fn at_y(&self, y: f64) -> Poly<f64> {
        self.map_coeffs(|c| c.eval(y))
    }
}

impl<C: fmt::Display> fmt::Display for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, " * x{}", i + 1)?,
                    _ => write!(f, " * x{}^{k}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

/// `(q₁,…,q_p)`: how often each positive index occurs in ᾱ.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountVector {
    pub multiplicities: Vec<u32>,
}

impl CountVector {
    pub fn new(m: Vec<u32>) -> Self {
        CountVector { multiplicities: m }
    }
    pub fn norm(&self) -> u32 {
        self.multiplicities.iter().sum()
    }
    pub fn p(&self) -> usize {
        self.multiplicities.len()
    }
    /// All count vectors of length p with ‖·‖₁ = total, in lexicographic order.
    pub fn all(p: usize, total: u32) -> Vec<CountVector> {
        fn rec(p: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<CountVector>) {
            if prefix.len() + 1 == p {
                prefix.push(total);
                out.push(CountVector::new(prefix.clone()));
                prefix.pop();
                return;
            }
            for k in 0..=total {
                prefix.push(k);
                rec(p, total - k, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if p == 0 {
            if total == 0 {
                out.push(CountVector::new(vec![]));
            }
            return out;
        }
        rec(p, total, &mut Vec::new(), &mut out);
        out
    }
    pub fn parse(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| format!("bad count vector {s:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(CountVector::new)
    }
}

impl fmt::Display for CountVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.multiplicities.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// H_n, built by H_{n+1} = 2x·H_n − H_n′.
pub fn hermite(n: u32) -> HalfPowerPoly {
    let mut h = Poly::constant(1, HalfPowerCoeff::one());
    let two_x = Poly::monomial(vec![1], HalfPowerCoeff::rational(q(2)));
    for _ in 0..n {
        h = two_x.mul(&h).sub(&h.derivative(0));
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KmMode {
    Q,
    P,
}

/// `Q^ᾱ = (4π)^{−q/2} Π H_{q_j}(√(2π)x_j)` or `P^ᾱ = 2^{q/2} Π x_j^{q_j}`,
/// with q = ‖ᾱ‖₁, as polynomials in p variables.
pub fn km_poly(count: &CountVector, mode: KmMode) -> HalfPowerPoly {
    let p = count.p();
    let qn = count.norm() as i32;
    match mode {
        KmMode::P => Poly::monomial(count.multiplicities.clone(), HalfPowerCoeff::term(Q::one(), qn, 0, 0)),
        KmMode::Q => {
            let mut out = Poly::constant(p, HalfPowerCoeff::term(Q::one(), -2 * qn, -qn, 0));
            for (j, &k) in count.multiplicities.iter().enumerate() {
                let h = hermite(k);
                let mut f = Poly::zero(p);
                for (e, c) in &h.terms {
                    let deg = e[0] as i32;
                    let mut ex = vec![0; p];
                    ex[j] = e[0];
                    f.add_monomial(ex, c.clone() * HalfPowerCoeff::term(Q::one(), deg, deg, 0));
                }
                out = out.mul(&f);
            }
            out
        }
    }
}

/// `Σ_m (−1)^m/(m!(8πy)^m) Δ^m(poly)` with the Euclidean Laplacian.
pub fn exp_laplacian(poly: &HalfPowerPoly) -> HalfPowerPoly {
    let mut out = Poly::zero(poly.nvars);
    let mut term = poly.clone();
    let mut m: i32 = 0;
    let mut fact = Q::one();
    while !term.is_zero() {
        let sign = if m % 2 == 0 { Q::one() } else { -Q::one() };
        let c = HalfPowerCoeff::term(sign / (&fact * pow2(3 * m)), 0, -2 * m, -2 * m);
        out = out.add(&term.scale(&c));
        term = term.laplacian();
        m += 1;
        fact *= q(m as i64);
    }
    out
}

/// Numeric form of `exp(−Δ/8πy)P` for a metric `M` (Δ = tr(M·Hess)):
/// the list `[Δ^m P / (m!(−8π)^m)]`, to be weighted by `y^{−m}`.
#[derive(Clone, Debug)]
pub struct ExpLaplacian {
    pub parts: Vec<Poly<f64>>,
    pub degrees: Vec<u32>,
}

impl ExpLaplacian {
    pub fn new(poly: &Poly<f64>, metric: Option<&Mat<f64>>) -> Self {
        let mut parts = Vec::new();
        let mut term = poly.clone();
        let mut m = 0i32;
        let mut fact = 1.0;
        while !term.is_zero() {
            parts.push(term.scale(&(1.0 / (fact * (-8.0 * PI).powi(m)))));
            term = match metric {
                Some(mm) => term.laplacian_metric(mm),
                None => term.laplacian(),
            };
            term.terms.retain(|_, c| *c != 0.0);
            m += 1;
            fact *= m as f64;
        }
        let degrees = parts.iter().map(|p| p.total_degree().unwrap_or(0)).collect();
        ExpLaplacian { parts, degrees }
    }
    pub fn eval(&self, x: &[f64], y: f64) -> f64 {
        let mut s = 0.0;
        let mut w = 1.0;
        for p in &self.parts {
            s += w * p.eval_f64(x);
            w /= y;
        }
        s
    }
    /// Values of the individual `Δ^m P/(m!(−8π)^m)` at x.
    pub fn eval_parts(&self, x: &[f64]) -> Vec<f64> {
        self.parts.iter().map(|p| p.eval_f64(x)).collect()
    }
    /// `|·|` envelope: Σ_d C_d ρ^d bounding |exp(−Δ/8πy)P(X)| for |X| = ρ.
    pub fn envelope(&self, y: f64) -> Vec<(u32, f64)> {
        let mut by_deg: BTreeMap<u32, f64> = BTreeMap::new();
        let mut w = 1.0;
        for p in &self.parts {
            for (e, c) in &p.terms {
                *by_deg.entry(e.iter().sum()).or_insert(0.0) += w * c.abs();
            }
            w /= y;
        }
        by_deg.into_iter().collect()
    }
    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }
}

/// Checks `y^{−q/2} Q^ᾱ(√y·x) = exp(−Δ/8πy) P^ᾱ` exactly.
pub fn exp_laplacian_check(count: &CountVector) -> bool {
    let qn = count.norm() as i32;
    let qpoly = km_poly(count, KmMode::Q);
    let mut lhs = Poly::zero(qpoly.nvars);
    for (e, c) in &qpoly.terms {
        let deg: i32 = e.iter().sum::<u32>() as i32;
        lhs.add_monomial(e.clone(), c.shift_y(deg - qn));
    }
    let rhs = exp_laplacian(&km_poly(count, KmMode::P));
    lhs == rhs
}

/// γ̄ = ᾱ + β̄, `Q^γ̄`, and the opaque label of 𝔟^γ̄.
pub fn twist_poly(alpha: &CountVector, beta: &CountVector) -> (CountVector, HalfPowerPoly, String) {
    assert_eq!(alpha.p(), beta.p(), "count vectors over different p");
    let gamma = CountVector::new(
        alpha.multiplicities.iter().zip(&beta.multiplicities).map(|(a, b)| a + b).collect(),
    );
    let poly = km_poly(&gamma, KmMode::Q);
    let label = format!("b^{gamma}");
    (gamma, poly, label)
}

/// Numeric left/right sides of `(x − (1/2π)d/dx)^q e^{−πx²} = e^{−πx²}(2π)^{−q/2}H_q(√(2π)x)`.
pub fn hermite_gaussian_sides(qd: u32, x: f64) -> (f64, f64) {
    // (x − D/2π)(p·e^{−πx²}) = (2x·p − p′/2π)·e^{−πx²}
    let mut p = Poly::constant(1, 1.0);
    let two_x = Poly::monomial(vec![1], 2.0);
    for _ in 0..qd {
        p = two_x.mul(&p).sub(&p.derivative(0).scale(&(1.0 / (2.0 * PI))));
    }
    let g = (-PI * x * x).exp();
    let lhs = p.eval_f64(&[x]) * g;
    let h = hermite(qd).at_y(1.0);
    let rhs = g / (2.0 * PI).powf(qd as f64 / 2.0) * h.eval_f64(&[(2.0 * PI).sqrt() * x]);
    (lhs, rhs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecomposeMethod {
    ClosedForm,
    Oracle,
}

/// `p^{h,0}` of a homogeneous degree-(m,0) polynomial as an ambient
/// polynomial in the standard coordinates: the coefficient of aʰ in
/// `P(X + a·ĝ)`, expanded by the binomial formula monomial by monomial.
pub fn closed_form_ambient<F: Field>(poly: &Poly<F>, ghat: &[F], p: usize) -> Result<Vec<Poly<F>>, PolyError> {
    let (mp, mm) = poly.bidegree(p)?;
    if mm != 0 {
        return Err(PolyError::DegreeMismatch(format!("closed form needs degree (m,0), got ({mp},{mm})")));
    }
    let n = poly.nvars;
    let mut parts = vec![Poly::zero(n); mp as usize + 1];
    for (e, c) in &poly.terms {
        // Σ_{k ≤ e} Π C(e_j,k_j) ĝ_j^{k_j} X^{e−k}
        let mut ks: Vec<Vec<u32>> = vec![vec![]];
        for &ej in e.iter().take(p) {
            ks = ks.into_iter().flat_map(|k| (0..=ej).map(move |x| [k.clone(), vec![x]].concat())).collect();
        }
        for k in ks {
            let h: u32 = k.iter().sum();
            let mut coef = c.clone();
            let mut ex = e.clone();
            for (j, &kj) in k.iter().enumerate() {
                coef = coef * from_u32::<F>(binom(e[j], kj));
                for _ in 0..kj {
                    coef = coef * ghat[j].clone();
                }
                ex[j] -= kj;
            }
            parts[h as usize].add_monomial(ex, coef);
        }
    }
    Ok(parts)
}

fn binom(n: u32, k: u32) -> u32 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64) as u32
}

/// `(h⁺,h⁻) ↦ p^{h⁺,h⁻}` restricted to `W = g♯(V)` and written in the
/// coordinates `c` of the frame's W-basis (`X = F·c`).
pub fn u_decompose<F: Field>(
    poly: &Poly<F>,
    frame: &SplitFrame<F>,
    method: DecomposeMethod,
) -> Result<BTreeMap<(u32, u32), Poly<F>>, PolyError> {
    let n = frame.p + frame.q;
    let padded;
    let poly = if poly.nvars == frame.p && poly.nvars != n {
        padded = poly.with_nvars(n);
        &padded
    } else {
        poly
    };
    if poly.nvars != n {
        return Err(PolyError::DegreeMismatch(format!("polynomial has {} variables, frame {n}", poly.nvars)));
    }
    let wb = frame.w_basis();
    let nw = wb[0].len();
    let mut out = BTreeMap::new();
    match method {
        DecomposeMethod::ClosedForm => {
            let parts = closed_form_ambient(poly, &frame.ghat_plus(), frame.p)?;
            for (h, part) in parts.into_iter().enumerate() {
                let r = part.substitute_linear(&wb, nw);
                if !r.is_zero() {
                    out.insert((h as u32, 0), r);
                }
            }
        }
        DecomposeMethod::Oracle => {
            poly.bidegree(frame.p)?;
            // X = F·c + a·c₊/|c₊|² − b·c₋/|c₋|², variables (c, a, b)
            let norm = frame.u_perp_sq.clone();
            let rows: Vec<Vec<F>> = (0..n)
                .map(|i| {
                    let mut r = wb[i].clone();
                    if i < frame.p {
                        r.push(frame.c_plus[i].clone() / norm.clone());
                        r.push(F::zero());
                    } else {
                        r.push(F::zero());
                        r.push(-(frame.c_minus[i - frame.p].clone() / norm.clone()));
                    }
                    r
                })
                .collect();
            let sub = poly.substitute_linear(&rows, nw + 2);
            for (e, c) in &sub.terms {
                let key = (e[nw], e[nw + 1]);
                out.entry(key)
                    .or_insert_with(|| Poly::zero(nw))
                    .add_monomial(e[..nw].to_vec(), c.clone());
            }
            out.retain(|_, p: &mut Poly<F>| !p.is_zero());
        }
    }
    Ok(out)
}
