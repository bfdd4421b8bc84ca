//! Even lattices given by Gram matrices: signature, discriminant group,
//! the isotropic splitting `L = K ⊕ ℤζ ⊕ ℤu`, and lattice-point enumeration.

mod enumerate;
mod snf;

pub use enumerate::{enumerate_box, enumerate_coset, enumerate_shifted};
pub use snf::{smith, Smith, SnfError};

use crate::field::{fmt_q, frac_q, is_integral, parse_q, q, Q};
use crate::linalg::{self, Mat};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("Gram matrix is not square")]
    NotSquare,
    #[error("Gram matrix is not symmetric")]
    NotSymmetric,
    #[error("lattice is not even: diagonal entry {0} is odd")]
    NotEven(i64),
    #[error("Gram matrix is degenerate")]
    Degenerate,
    #[error("vector has the wrong number of coordinates (expected {expected}, got {got})")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector is not in the dual lattice")]
    NotInDual,
    #[error("u is not isotropic")]
    NotIsotropic,
    #[error("u is not a primitive lattice vector")]
    NotPrimitive,
    #[error("(u, u') must equal 1, got {0}")]
    BadPairing(String),
    #[error("majorant is not positive definite")]
    NotPositiveDefinite,
    #[error("split postcondition failed: {0}")]
    SplitPostcondition(String),
    #[error(transparent)]
    Snf(#[from] SnfError),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// An even nondegenerate lattice described by its Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GramLattice {
    gram: Vec<Vec<i64>>,
    signature: (usize, usize),
}

/// A vector of `L ⊗ ℚ` in lattice coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector {
    pub coords: Vec<Q>,
}

impl LatticeVector {
    pub fn new(coords: Vec<Q>) -> Self {
        LatticeVector { coords }
    }
    pub fn from_ints(c: &[i64]) -> Self {
        LatticeVector { coords: c.iter().map(|&x| q(x)).collect() }
    }
    pub fn zero(n: usize) -> Self {
        LatticeVector { coords: vec![Q::zero(); n] }
    }
    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(crate::field::q_to_f64).collect()
    }
    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(is_integral)
    }
    pub fn to_strings(&self) -> Vec<String> {
        self.coords.iter().map(fmt_q).collect()
    }
    pub fn parse(items: &[String]) -> std::result::Result<Self, String> {
        Ok(LatticeVector { coords: items.iter().map(|s| parse_q(s)).collect::<std::result::Result<_, _>>()? })
    }
}

impl Serialize for LatticeVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<serde_json::Value> = Vec::deserialize(d)?;
        let strings: Vec<String> = v
            .into_iter()
            .map(|x| match x {
                serde_json::Value::String(s) => Ok(s),
                serde_json::Value::Number(n) if n.is_i64() => Ok(n.to_string()),
                other => Err(serde::de::Error::custom(format!("expected rational string, got {other}"))),
            })
            .collect::<std::result::Result<_, _>>()?;
        LatticeVector::parse(&strings).map_err(serde::de::Error::custom)
    }
}

/// Validates a Gram matrix and computes its signature.
pub fn build_lattice(gram: Vec<Vec<i64>>) -> Result<GramLattice> {
    let n = gram.len();
    if gram.iter().any(|r| r.len() != n) {
        return Err(LatticeError::NotSquare);
    }
    for i in 0..n {
        for j in 0..i {
            if gram[i][j] != gram[j][i] {
                return Err(LatticeError::NotSymmetric);
            }
        }
    }
    if let Some(i) = (0..n).find(|&i| gram[i][i] % 2 != 0) {
        return Err(LatticeError::NotEven(gram[i][i]));
    }
    let gq: Mat<Q> = gram.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    if n > 0 && linalg::det(&gq).is_zero() {
        return Err(LatticeError::Degenerate);
    }
    let signature = signature_of(&gq);
    Ok(GramLattice { gram, signature })
}

/// Sign counts of a nondegenerate symmetric rational matrix by exact
/// congruence diagonalization.
fn signature_of(g: &Mat<Q>) -> (usize, usize) {
    let mut m = g.clone();
    let n = m.len();
    let (mut pos, mut neg) = (0, 0);
    let mut active: Vec<usize> = (0..n).collect();
    while let Some(&first) = active.first() {
        let _ = first;
        let piv = active.iter().copied().find(|&i| !m[i][i].is_zero());
        let p = match piv {
            Some(p) => p,
            None => {
                // all diagonal entries vanish: e_i ↦ e_i + e_j creates one
                let mut pair = None;
                'outer: for &i in &active {
                    for &j in &active {
                        if i != j && !m[i][j].is_zero() {
                            pair = Some((i, j));
                            break 'outer;
                        }
                    }
                }
                let Some((i, j)) = pair else { break };
                for k in 0..n {
                    let t = m[j][k].clone();
                    m[i][k] += t;
                }
                for k in 0..n {
                    let t = m[k][j].clone();
                    m[k][i] += t;
                }
                i
            }
        };
        let d = m[p][p].clone();
        if d.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        active.retain(|&x| x != p);
        for &i in &active {
            if m[i][p].is_zero() {
                continue;
            }
            let f = &m[i][p] / &d;
            for k in 0..n {
                let t = &f * &m[p][k];
                m[i][k] -= t;
            }
            for k in 0..n {
                let t = &f * &m[k][p];
                m[k][i] -= t;
            }
        }
    }
    (pos, neg)
}

impl GramLattice {
    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }
    pub fn rank(&self) -> usize {
        self.gram.len()
    }
    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }
    pub fn gram_q(&self) -> Mat<Q> {
        self.gram.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
    }
    pub fn gram_f64(&self) -> Mat<f64> {
        self.gram.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect()
    }
    pub fn det(&self) -> Q {
        if self.rank() == 0 {
            return Q::one();
        }
        linalg::det(&self.gram_q())
    }
    pub fn pair(&self, a: &[Q], b: &[Q]) -> Q {
        let mut s = Q::zero();
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if self.gram[i][j] != 0 && !bj.is_zero() {
                    s += ai * bj * q(self.gram[i][j]);
                }
            }
        }
        s
    }
    pub fn norm(&self, a: &[Q]) -> Q {
        self.pair(a, a) / q(2)
    }
    pub fn pair_f64(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                s += ai * bj * self.gram[i][j] as f64;
            }
        }
        s
    }
    /// G·v
    pub fn apply(&self, v: &[Q]) -> Vec<Q> {
        self.gram
            .iter()
            .map(|r| r.iter().zip(v).fold(Q::zero(), |acc, (&g, x)| acc + q(g) * x))
            .collect()
    }
    pub fn is_dual(&self, v: &[Q]) -> bool {
        v.len() == self.rank() && self.apply(v).iter().all(is_integral)
    }
    fn check_dim(&self, v: &[Q]) -> Result<()> {
        if v.len() != self.rank() {
            return Err(LatticeError::DimensionMismatch { expected: self.rank(), got: v.len() });
        }
        Ok(())
    }
}

/// The finite quadratic module `L′/L`.
#[derive(Clone, Debug)]
pub struct DiscriminantGroup {
    /// Nontrivial elementary divisors d₁ | d₂ | …
    pub elementary_divisors: Vec<i64>,
    /// Generators in `L′` (lattice coordinates), one per elementary divisor.
    pub generators: Vec<LatticeVector>,
    pub order: usize,
    key_rows: Vec<Vec<i64>>,
    gram: Vec<Vec<i64>>,
    reps: Vec<Vec<Q>>,
    q_mod1: Vec<Q>,
    index: BTreeMap<Vec<i64>, usize>,
}

pub fn discriminant_group(l: &GramLattice) -> Result<DiscriminantGroup> {
    let n = l.rank();
    if n == 0 {
        return Ok(DiscriminantGroup {
            elementary_divisors: vec![],
            generators: vec![],
            order: 1,
            key_rows: vec![],
            gram: vec![],
            reps: vec![vec![]],
            q_mod1: vec![Q::zero()],
            index: [(vec![], 0)].into_iter().collect(),
        });
    }
    let s = smith(l.gram())?;
    let mut divisors = Vec::new();
    let mut generators = Vec::new();
    let mut key_rows = Vec::new();
    for (i, &d) in s.diag.iter().enumerate() {
        if d == 1 {
            continue;
        }
        let d64 = i64::try_from(d).map_err(|_| SnfError::Overflow)?;
        divisors.push(d64);
        let g: Vec<Q> = (0..n).map(|r| Q::new((s.v[r][i]).into(), d.into())).collect();
        generators.push(LatticeVector::new(g));
        key_rows.push(
            s.u[i]
                .iter()
                .map(|&x| i64::try_from(x.rem_euclid(d)).map_err(|_| SnfError::Overflow))
                .collect::<std::result::Result<Vec<_>, _>>()?,
        );
    }
    let order: usize = divisors.iter().map(|&d| d as usize).product();
    let mut reps = Vec::with_capacity(order);
    let mut q_mod1 = Vec::with_capacity(order);
    let mut index = BTreeMap::new();
    let mut digits = vec![0i64; divisors.len()];
    for idx in 0..order {
        let mut x = vec![Q::zero(); n];
        for (a, g) in digits.iter().zip(&generators) {
            for (xi, gi) in x.iter_mut().zip(&g.coords) {
                *xi += q(*a) * gi;
            }
        }
        let x: Vec<Q> = x.iter().map(frac_q).collect();
        q_mod1.push(frac_q(&l.norm(&x)));
        reps.push(x);
        index.insert(digits.clone(), idx);
        // mixed-radix increment, last digit fastest
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if digits[k] < divisors[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    Ok(DiscriminantGroup {
        elementary_divisors: divisors,
        generators,
        order,
        key_rows,
        gram: l.gram().to_vec(),
        reps,
        q_mod1,
        index,
    })
}

impl DiscriminantGroup {
    pub fn len(&self) -> usize {
        self.order
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Canonical digits (aᵢ mod dᵢ) of the coset `x + L`.
    pub fn key_of(&self, x: &[Q]) -> Result<Vec<i64>> {
        let n = self.gram.len();
        if x.len() != n {
            return Err(LatticeError::DimensionMismatch { expected: n, got: x.len() });
        }
        let gx: Vec<Q> = self
            .gram
            .iter()
            .map(|r| r.iter().zip(x).fold(Q::zero(), |acc, (&g, xi)| acc + q(g) * xi))
            .collect();
        if !gx.iter().all(is_integral) {
            return Err(LatticeError::NotInDual);
        }
        Ok(self
            .key_rows
            .iter()
            .zip(&self.elementary_divisors)
            .map(|(row, &d)| {
                let s = row.iter().zip(&gx).fold(Q::zero(), |acc, (&r, v)| acc + q(r) * v);
                let s = s.to_integer();
                let d = num_bigint::BigInt::from(d);
                s.mod_floor(&d).to_i64().expect("digit fits in i64")
            })
            .collect())
    }
    pub fn index_of(&self, x: &[Q]) -> Result<usize> {
        let k = self.key_of(x)?;
        Ok(self.index[&k])
    }
    pub fn key(&self, idx: usize) -> Vec<i64> {
        self.index.iter().find(|(_, &v)| v == idx).map(|(k, _)| k.clone()).expect("index in range")
    }
    /// Representative with every lattice coordinate in [0, 1).
    pub fn rep(&self, idx: usize) -> &[Q] {
        &self.reps[idx]
    }
    pub fn reps(&self) -> &[Vec<Q>] {
        &self.reps
    }
    pub fn q_mod1(&self, idx: usize) -> &Q {
        &self.q_mod1[idx]
    }
    /// (γ, δ) mod 1, in [0, 1).
    pub fn b_mod1(&self, i: usize, j: usize) -> Q {
        let (a, b) = (&self.reps[i], &self.reps[j]);
        let mut s = Q::zero();
        for (k, ak) in a.iter().enumerate() {
            for (l, bl) in b.iter().enumerate() {
                s += ak * bl * q(self.gram[k][l]);
            }
        }
        frac_q(&s)
    }
    pub fn neg(&self, idx: usize) -> usize {
        let x: Vec<Q> = self.reps[idx].iter().map(|c| -c).collect();
        self.index_of(&x).expect("negation stays in the dual")
    }
    pub fn add(&self, i: usize, j: usize) -> usize {
        let x: Vec<Q> = self.reps[i].iter().zip(&self.reps[j]).map(|(a, b)| a + b).collect();
        self.index_of(&x).expect("sum stays in the dual")
    }
}

/// The data attached to a primitive isotropic `u ∈ L` and `u′ ∈ L′` with
/// `(u, u′) = 1`.
#[derive(Clone, Debug)]
pub struct SplitData {
    pub u: Vec<Q>,
    pub u_prime: Vec<Q>,
    /// Positive generator of the ideal `(u, L)`.
    pub n: i64,
    /// A vector of `L` with `(ζ, u) = N`.
    pub zeta: Vec<Q>,
    /// Whether ζ lies in span(u, u′), i.e. ζ ⊥ K.
    pub zeta_orthogonal: bool,
    /// Basis of K realized inside `L ∩ u⊥ ∩ u′⊥`, in lattice coordinates.
    pub k_basis: Vec<Vec<Q>>,
    pub k_lattice: GramLattice,
    pub k_disc: DiscriminantGroup,
    /// Cosets of L′/L with (γ, u) ≡ 0 mod N.
    pub l0_cosets: Vec<usize>,
    /// For every coset of L′/L: its image in K′/K when it lies in L₀′/L.
    pub projection: Vec<Option<usize>>,
    /// For every coset of K′/K: the cosets γ̃ + l·u/N (l = 0..N−1) of L₀′/L.
    pub fibers: Vec<Vec<usize>>,
}

fn content(v: &[Q]) -> num_bigint::BigInt {
    v.iter().fold(num_bigint::BigInt::zero(), |g, x| g.gcd(x.numer()))
}

fn int_matrix_inverse(m: &[Vec<i128>]) -> Vec<Vec<Q>> {
    let mq: Mat<Q> = m.iter().map(|r| r.iter().map(|&x| Q::from_integer(x.into())).collect()).collect();
    linalg::inverse(&mq).expect("unimodular matrix is invertible")
}

/// Builds K, N, ζ, the projection `p: L₀′/L → K′/K` and its fibers, and
/// verifies the structural postconditions.
pub fn split_data(l: &GramLattice, disc: &DiscriminantGroup, u: &[Q], u_prime: &[Q]) -> Result<SplitData> {
    l.check_dim(u)?;
    l.check_dim(u_prime)?;
    let n = l.rank();
    if !u.iter().all(is_integral) || u.iter().all(|x| x.is_zero()) || !content(u).is_one() {
        return Err(LatticeError::NotPrimitive);
    }
    if !l.pair(u, u).is_zero() {
        return Err(LatticeError::NotIsotropic);
    }
    if !l.is_dual(u_prime) {
        return Err(LatticeError::NotInDual);
    }
    let uu = l.pair(u, u_prime);
    if !uu.is_one() {
        return Err(LatticeError::BadPairing(fmt_q(&uu)));
    }
    let gu: Vec<i64> = l.apply(u).iter().map(|x| x.to_integer().to_i64().expect("small")).collect();
    let s = smith(&[gu.clone()])?;
    let nn = s.diag[0];
    let n_i64 = i64::try_from(nn).map_err(|_| SnfError::Overflow)?;
    let sign = s.u[0][0];
    // (Gu)ᵀ·V = (sign·N, 0, …, 0)
    let vcol = |j: usize| -> Vec<Q> { (0..n).map(|r| Q::from_integer(s.v[r][j].into())).collect() };
    let zeta_general: Vec<Q> = vcol(0).into_iter().map(|x| x * q(sign as i64)).collect();
    let kernel: Vec<Vec<Q>> = (1..n).map(vcol).collect();

    // coordinates of u in the kernel basis, then extend u to a basis
    let vinv = int_matrix_inverse(&s.v);
    let uc_full = linalg::mat_vec(&vinv, u);
    debug_assert!(uc_full[0].is_zero());
    let uc: Vec<i64> = uc_full[1..].iter().map(|x| x.to_integer().to_i64().expect("integral")).collect();
    let col: Vec<Vec<i64>> = uc.iter().map(|&x| vec![x]).collect();
    let sc = smith(&col)?;
    let ucinv = int_matrix_inverse(&sc.u);
    // new kernel basis: B·Uc⁻¹; column 0 is ±u
    let nb = kernel.len();
    let mut basis_cols: Vec<Vec<Q>> = Vec::with_capacity(nb);
    for j in 0..nb {
        let mut c = vec![Q::zero(); n];
        for (i, kv) in kernel.iter().enumerate() {
            if ucinv[i][j].is_zero() {
                continue;
            }
            for r in 0..n {
                c[r] += &ucinv[i][j] * &kv[r];
            }
        }
        basis_cols.push(c);
    }
    let first = &basis_cols[0];
    let neg_u: Vec<Q> = u.iter().map(|x| -x).collect();
    if first.as_slice() != u && first.as_slice() != neg_u.as_slice() {
        return Err(LatticeError::SplitPostcondition("failed to extend u to a basis of L ∩ u⊥".into()));
    }
    let k_basis: Vec<Vec<Q>> = basis_cols[1..]
        .iter()
        .map(|b| {
            let c = l.pair(b, u_prime);
            b.iter().zip(u).map(|(bi, ui)| bi - &c * ui).collect()
        })
        .collect();
    let m = k_basis.len();
    let kgram: Vec<Vec<i64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| l.pair(&k_basis[i], &k_basis[j]).to_integer().to_i64().expect("small"))
                .collect()
        })
        .collect();
    let k_lattice = build_lattice(kgram)?;
    let k_disc = discriminant_group(&k_lattice)?;

    // ζ: prefer N·u′ + c·u ∈ L, which is orthogonal to K
    let nu: Vec<Q> = u_prime.iter().map(|x| x * q(n_i64)).collect();
    let den = nu.iter().fold(num_bigint::BigInt::one(), |a, x| a.lcm(x.denom()));
    let den = den.to_i64().unwrap_or(i64::MAX).min(1_000_000);
    let mut zeta = None;
    for c in 0..den.max(1) {
        let cand: Vec<Q> = nu.iter().zip(u).map(|(a, b)| a + q(c) * b).collect();
        if cand.iter().all(is_integral) {
            zeta = Some(cand);
            break;
        }
    }
    let zeta_orthogonal = zeta.is_some();
    let zeta = zeta.unwrap_or(zeta_general);
    if l.pair(&zeta, u) != q(n_i64) {
        return Err(LatticeError::SplitPostcondition("(ζ, u) ≠ N".into()));
    }

    let mut sd = SplitData {
        u: u.to_vec(),
        u_prime: u_prime.to_vec(),
        n: n_i64,
        zeta,
        zeta_orthogonal,
        k_basis,
        k_lattice,
        k_disc,
        l0_cosets: vec![],
        projection: vec![],
        fibers: vec![],
    };

    // postcondition: p(L) ⊆ K
    for i in 0..n {
        let mut e = vec![Q::zero(); n];
        e[i] = Q::one();
        let pe = sd.project(l, &e);
        let kc = sd.k_coords(l, &pe).ok_or_else(|| LatticeError::SplitPostcondition("p(L) ⊄ K ⊗ ℚ".into()))?;
        if !kc.iter().all(is_integral) {
            return Err(LatticeError::SplitPostcondition("p(L) ⊄ K".into()));
        }
    }
    let nq = q(n_i64);
    let mut projection = vec![None; disc.len()];
    let mut l0 = Vec::new();
    for idx in 0..disc.len() {
        let rep = disc.rep(idx);
        if !is_integral(&(l.pair(rep, u) / &nq)) {
            continue;
        }
        l0.push(idx);
        let pr = sd.project(l, rep);
        let kc = sd.k_coords(l, &pr).ok_or_else(|| LatticeError::SplitPostcondition("p(λ) ∉ K ⊗ ℚ".into()))?;
        let kidx = sd
            .k_disc
            .index_of(&kc)
            .map_err(|_| LatticeError::SplitPostcondition("p(λ) ∉ K′".into()))?;
        projection[idx] = Some(kidx);
    }
    let mut fibers = Vec::with_capacity(sd.k_disc.len());
    for kidx in 0..sd.k_disc.len() {
        let g = sd.embed_k(sd.k_disc.rep(kidx));
        let shift = l.pair(&g, &sd.zeta) / &nq;
        let mut fib = Vec::with_capacity(n_i64 as usize);
        for lstep in 0..n_i64 {
            let x: Vec<Q> = g
                .iter()
                .zip(u)
                .map(|(gi, ui)| gi - &shift * ui + q(lstep) * ui / &nq)
                .collect();
            let li = disc
                .index_of(&x)
                .map_err(|_| LatticeError::SplitPostcondition("fiber representative ∉ L′".into()))?;
            if projection[li] != Some(kidx) {
                return Err(LatticeError::SplitPostcondition("fiber representative does not project back".into()));
            }
            fib.push(li);
        }
        fibers.push(fib);
    }
    let mut seen: Vec<usize> = fibers.iter().flatten().copied().collect();
    seen.sort_unstable();
    seen.dedup();
    if seen != l0 {
        return Err(LatticeError::SplitPostcondition("fibers do not partition L₀′/L".into()));
    }
    if disc.len() != (n_i64 as usize) * (n_i64 as usize) * sd.k_disc.len() {
        return Err(LatticeError::SplitPostcondition("|L′/L| ≠ N²·|K′/K|".into()));
    }
    sd.l0_cosets = l0;
    sd.projection = projection;
    sd.fibers = fibers;
    Ok(sd)
}

impl SplitData {
    pub fn k_rank(&self) -> usize {
        self.k_basis.len()
    }
    /// Orthogonal projection of v onto P = span(u, u′)⊥.
    pub fn proj_p(&self, l: &GramLattice, v: &[Q]) -> Vec<Q> {
        let b = l.pair(v, &self.u);
        let qup = l.norm(&self.u_prime);
        let a = l.pair(v, &self.u_prime) - q(2) * qup * &b;
        v.iter()
            .zip(&self.u)
            .zip(&self.u_prime)
            .map(|((vi, ui), upi)| vi - &a * ui - &b * upi)
            .collect()
    }
    /// The projection `λ ↦ λ_P − ((λ,u)/N)·ζ_P` on L₀′.
    pub fn project(&self, l: &GramLattice, v: &[Q]) -> Vec<Q> {
        let c = l.pair(v, &self.u) / q(self.n);
        let vp = self.proj_p(l, v);
        let zp = self.proj_p(l, &self.zeta);
        vp.iter().zip(&zp).map(|(a, b)| a - &c * b).collect()
    }
    /// Coordinates in the K basis of a vector of K ⊗ ℚ (None if outside).
    pub fn k_coords(&self, l: &GramLattice, v: &[Q]) -> Option<Vec<Q>> {
        let m = self.k_rank();
        if m == 0 {
            return if v.iter().all(|x| x.is_zero()) { Some(vec![]) } else { None };
        }
        let kg = self.k_lattice.gram_q();
        let rhs: Vec<Q> = self.k_basis.iter().map(|b| l.pair(b, v)).collect();
        let y = linalg::solve(&kg, &rhs)?;
        let back = self.embed_k(&y);
        if back.as_slice() == v {
            Some(y)
        } else {
            None
        }
    }
    /// K coordinates → lattice coordinates of L.
    pub fn embed_k(&self, y: &[Q]) -> Vec<Q> {
        let n = self.u.len();
        let mut out = vec![Q::zero(); n];
        for (b, c) in self.k_basis.iter().zip(y) {
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }
    pub fn embed_k_f64(&self, y: &[f64]) -> Vec<f64> {
        let n = self.u.len();
        let mut out = vec![0.0; n];
        for (b, c) in self.k_basis.iter().zip(y) {
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * crate::field::q_to_f64(bi);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::qfrac;

    #[test]
    fn build_examples() {
        let u = build_lattice(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(u.rank(), 2);
        assert_eq!(u.signature(), (1, 1));
        let a1 = build_lattice(vec![vec![2]]).unwrap();
        assert_eq!(a1.signature(), (1, 0));
        assert_eq!(build_lattice(vec![vec![1]]), Err(LatticeError::NotEven(1)));
        assert_eq!(build_lattice(vec![vec![0, 1], vec![2, 0]]), Err(LatticeError::NotSymmetric));
        assert_eq!(build_lattice(vec![vec![2, 2], vec![2, 2]]), Err(LatticeError::Degenerate));
    }

    #[test]
    fn discriminant_examples() {
        let u = build_lattice(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(discriminant_group(&u).unwrap().order, 1);
        let a1 = build_lattice(vec![vec![2]]).unwrap();
        let d = discriminant_group(&a1).unwrap();
        assert_eq!(d.order, 2);
        assert_eq!(d.generators[0].coords, vec![qfrac(1, 2)]);
        let half = d.index_of(&[qfrac(1, 2)]).unwrap();
        assert_eq!(*d.q_mod1(half), qfrac(1, 4));
        let u2 = build_lattice(vec![vec![0, 2], vec![2, 0]]).unwrap();
        let d = discriminant_group(&u2).unwrap();
        assert_eq!(d.elementary_divisors, vec![2, 2]);
        for a in 0..2 {
            for b in 0..2 {
                let idx = d.index_of(&[qfrac(a, 2), qfrac(b, 2)]).unwrap();
                assert_eq!(*d.q_mod1(idx), frac_q(&qfrac(a * b, 2)));
            }
        }
    }

    #[test]
    fn split_examples() {
        let l = build_lattice(vec![vec![2, 0, 0], vec![0, 0, 1], vec![0, 1, 0]]).unwrap();
        let d = discriminant_group(&l).unwrap();
        let sd = split_data(&l, &d, &[q(0), q(1), q(0)], &[q(0), q(0), q(1)]).unwrap();
        assert_eq!(sd.n, 1);
        assert_eq!(sd.k_lattice.gram(), &[vec![2]]);
        assert!(sd.zeta_orthogonal);

        let u = build_lattice(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let d = discriminant_group(&u).unwrap();
        let sd = split_data(&u, &d, &[q(1), q(0)], &[q(0), q(1)]).unwrap();
        assert_eq!(sd.n, 1);
        assert_eq!(sd.k_rank(), 0);

        let u2 = build_lattice(vec![vec![0, 2], vec![2, 0]]).unwrap();
        let d = discriminant_group(&u2).unwrap();
        let sd = split_data(&u2, &d, &[q(1), q(0)], &[q(0), qfrac(1, 2)]).unwrap();
        assert_eq!(sd.n, 2);
        assert_eq!(sd.k_rank(), 0);
        assert_eq!(d.order, 4);
        assert_eq!(sd.l0_cosets.len(), 2);
    }

    #[test]
    fn split_errors() {
        let l = build_lattice(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let d = discriminant_group(&l).unwrap();
        assert_eq!(split_data(&l, &d, &[q(1), q(1)], &[q(0), q(1)]).unwrap_err(), LatticeError::NotIsotropic);
        assert_eq!(split_data(&l, &d, &[q(2), q(0)], &[q(0), q(1)]).unwrap_err(), LatticeError::NotPrimitive);
        assert!(matches!(
            split_data(&l, &d, &[q(1), q(0)], &[q(0), q(2)]).unwrap_err(),
            LatticeError::BadPairing(_)
        ));
    }
}
