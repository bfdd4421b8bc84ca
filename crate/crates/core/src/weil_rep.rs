//! The Weil representation of Mp₂(ℤ) on ℂ[L′/L], evaluated on S/T words.

use crate::field::q_to_f64;
use crate::lattice_core::{DiscriminantGroup, GramLattice};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub type CMat = Vec<Vec<C64>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeilError {
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot parse generator word: {0}")]
    BadWord(String),
    #[error("matrix is not in SL2(Z): {0:?}")]
    NotSl2([[i64; 2]; 2]),
}

/// e(x) = exp(2πix)
pub fn e(x: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * x)
}

#[derive(Clone, Debug)]
pub struct WeilRep {
    pub signature: (usize, usize),
    pub dim: usize,
    /// Diagonal of ρ(T).
    pub rho_t: Vec<C64>,
    pub rho_s: CMat,
}

/// ρ(T)e_γ = e(q(γ))e_γ and
/// ρ(S)e_γ = i^{(q−p)/2}|L′/L|^{−1/2} Σ_δ e(−(γ,δ)) e_δ.
pub fn weil_generators(l: &GramLattice, d: &DiscriminantGroup) -> WeilRep {
    let (p, q) = l.signature();
    let n = d.len();
    let rho_t = (0..n).map(|g| e(q_to_f64(d.q_mod1(g)))).collect();
    let pref = C64::from_polar(1.0 / (n as f64).sqrt(), PI / 4.0 * (q as f64 - p as f64));
    let rho_s = (0..n)
        .map(|dl| (0..n).map(|g| pref * e(-q_to_f64(&d.b_mod1(g, dl)))).collect())
        .collect();
    WeilRep { signature: (p, q), dim: n, rho_t, rho_s }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    T,
    TInv,
    S,
    SInv,
}

impl Letter {
    fn matrix(self) -> [[i64; 2]; 2] {
        match self {
            Letter::T => [[1, 1], [0, 1]],
            Letter::TInv => [[1, -1], [0, 1]],
            Letter::S => [[0, -1], [1, 0]],
            Letter::SInv => [[0, 1], [-1, 0]],
        }
    }
}

/// A word in S, T and their inverses; `w₁w₂…w_k` denotes the product in that order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneratorWord {
    pub letters: Vec<Letter>,
}

impl GeneratorWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        GeneratorWord { letters }
    }

    pub fn push_power(&mut self, base: Letter, k: i64) {
        let (pos, neg) = match base {
            Letter::T | Letter::TInv => (Letter::T, Letter::TInv),
            Letter::S | Letter::SInv => (Letter::S, Letter::SInv),
        };
        let k = if matches!(base, Letter::TInv | Letter::SInv) { -k } else { k };
        let l = if k >= 0 { pos } else { neg };
        self.letters.extend(std::iter::repeat_n(l, k.unsigned_abs() as usize));
    }

    pub fn to_sl2(&self) -> [[i64; 2]; 2] {
        self.letters.iter().fold([[1, 0], [0, 1]], |acc, l| mul2(&acc, &l.matrix()))
    }

    pub fn inverse(&self) -> Self {
        let letters = self
            .letters
            .iter()
            .rev()
            .map(|l| match l {
                Letter::T => Letter::TInv,
                Letter::TInv => Letter::T,
                Letter::S => Letter::SInv,
                Letter::SInv => Letter::S,
            })
            .collect();
        GeneratorWord { letters }
    }
}

fn mul2(a: &[[i64; 2]; 2], b: &[[i64; 2]; 2]) -> [[i64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            let c = match l {
                Letter::T => 'T',
                Letter::TInv => 't',
                Letter::S => 'S',
                Letter::SInv => 's',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Grammar: letters `S`, `T` (inverses `s`, `t`), each optionally followed
/// by `^k` with k a possibly negative integer. Whitespace is ignored.
impl FromStr for GeneratorWord {
    type Err = WeilError;
    fn from_str(s: &str) -> Result<Self, WeilError> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut w = GeneratorWord::default();
        let mut i = 0;
        while i < chars.len() {
            let base = match chars[i] {
                'S' => Letter::S,
                's' => Letter::SInv,
                'T' => Letter::T,
                't' => Letter::TInv,
                other => return Err(WeilError::BadWord(format!("unexpected {other:?} in {s:?}"))),
            };
            i += 1;
            let mut k = 1i64;
            if i < chars.len() && chars[i] == '^' {
                i += 1;
                let start = i;
                if i < chars.len() && chars[i] == '-' {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let num: String = chars[start..i].iter().collect();
                k = num.parse().map_err(|_| WeilError::BadWord(format!("bad exponent in {s:?}")))?;
            }
            w.push_power(base, k);
        }
        Ok(w)
    }
}

fn letter_matrix(rep: &WeilRep, l: Letter) -> CMat {
    let n = rep.dim;
    match l {
        Letter::T | Letter::TInv => (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i != j {
                            C64::new(0.0, 0.0)
                        } else if l == Letter::T {
                            rep.rho_t[i]
                        } else {
                            rep.rho_t[i].conj()
                        }
                    })
                    .collect()
            })
            .collect(),
        Letter::S => rep.rho_s.clone(),
        Letter::SInv => conj_transpose(&rep.rho_s),
    }
}

pub fn conj_transpose(a: &CMat) -> CMat {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    (0..m).map(|j| (0..n).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn cmat_mul(a: &CMat, b: &CMat) -> CMat {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![C64::new(0.0, 0.0); m]; n];
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..m {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

pub fn cmat_vec(a: &CMat, v: &[C64]) -> Vec<C64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn cidentity(n: usize) -> CMat {
    (0..n)
        .map(|i| (0..n).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect()
}

/// Max-entry distance between two matrices.
pub fn cmat_dist(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

/// ρ(w₁)ρ(w₂)…ρ(w_k)
pub fn word_matrix(rep: &WeilRep, word: &GeneratorWord) -> CMat {
    word.letters
        .iter()
        .fold(cidentity(rep.dim), |acc, &l| cmat_mul(&acc, &letter_matrix(rep, l)))
}

pub fn weil_apply(rep: &WeilRep, word: &GeneratorWord, v: &[C64]) -> Result<Vec<C64>, WeilError> {
    if v.len() != rep.dim {
        return Err(WeilError::DimensionMismatch { expected: rep.dim, got: v.len() });
    }
    let mut out = v.to_vec();
    for &l in word.letters.iter().rev() {
        out = match l {
            Letter::T => out.iter().zip(&rep.rho_t).map(|(x, t)| x * t).collect(),
            Letter::TInv => out.iter().zip(&rep.rho_t).map(|(x, t)| x * t.conj()).collect(),
            Letter::S => cmat_vec(&rep.rho_s, &out),
            Letter::SInv => (0..rep.dim)
                .map(|j| (0..rep.dim).map(|i| rep.rho_s[i][j].conj() * out[i]).sum())
                .collect(),
        };
    }
    Ok(out)
}

/// Writes γ ∈ SL₂(ℤ) as a word in S and T by the Euclidean algorithm.
pub fn decompose_sl2(m: [[i64; 2]; 2]) -> Result<GeneratorWord, WeilError> {
    let [[mut a, mut b], [mut c, mut d]] = m;
    if a * d - b * c != 1 {
        return Err(WeilError::NotSl2(m));
    }
    let mut w = GeneratorWord::default();
    while c != 0 {
        let k = a.div_euclid(c);
        a -= k * c;
        b -= k * d;
        w.push_power(Letter::T, k);
        w.letters.push(Letter::S);
        (a, b, c, d) = (c, d, -a, -b);
    }
    if a == 1 {
        w.push_power(Letter::T, b);
    } else {
        w.letters.push(Letter::S);
        w.letters.push(Letter::S);
        w.push_power(Letter::T, -b);
    }
    let _ = d;
    Ok(w)
}

/// The metaplectic lift of a word: returns (φ(τ), γτ) where φ² = cτ+d.
/// Uses φ_T = 1, φ_S(τ) = √τ, φ_{S⁻¹}(τ) = −i√τ (principal branch) and
/// (γ₁,φ₁)(γ₂,φ₂) = (γ₁γ₂, φ₁(γ₂τ)φ₂(τ)).
pub fn mp2_phi(word: &GeneratorWord, tau: C64) -> (C64, C64) {
    let mut phi = C64::new(1.0, 0.0);
    let mut t = tau;
    for &l in word.letters.iter().rev() {
        match l {
            Letter::T => t += 1.0,
            Letter::TInv => t -= 1.0,
            Letter::S => {
                phi *= t.sqrt();
                t = -1.0 / t;
            }
            Letter::SInv => {
                phi *= C64::new(0.0, -1.0) * t.sqrt();
                t = -1.0 / t;
            }
        }
    }
    (phi, t)
}

/// Möbius action of an integer matrix.
pub fn mobius(m: [[i64; 2]; 2], tau: C64) -> C64 {
    (tau * m[0][0] as f64 + m[0][1] as f64) / (tau * m[1][0] as f64 + m[1][1] as f64)
}

/// Unitarity defect ‖M·M* − I‖_max.
pub fn unitarity_defect(m: &CMat) -> f64 {
    cmat_dist(&cmat_mul(m, &conj_transpose(m)), &cidentity(m.len()))
}

/// (ρ((ST)³), ρ(S²)) distance, ρ(S²)ρ(T) commutator, and generator unitarity.
pub fn relation_defects(rep: &WeilRep) -> (f64, f64, f64) {
    let st3 = word_matrix(rep, &"STSTST".parse().expect("static word"));
    let s2 = word_matrix(rep, &"SS".parse().expect("static word"));
    let t = word_matrix(rep, &"T".parse().expect("static word"));
    let comm = cmat_dist(&cmat_mul(&s2, &t), &cmat_mul(&t, &s2));
    let unit = unitarity_defect(&rep.rho_s).max(unitarity_defect(&t));
    (cmat_dist(&st3, &s2), comm, unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::{build_lattice, discriminant_group};

    fn rep(g: Vec<Vec<i64>>) -> WeilRep {
        let l = build_lattice(g).unwrap();
        let d = discriminant_group(&l).unwrap();
        weil_generators(&l, &d)
    }

    #[test]
    fn hyperbolic_plane_is_trivial() {
        let r = rep(vec![vec![0, 1], vec![1, 0]]);
        assert!((r.rho_t[0] - 1.0).norm() < 1e-15);
        assert!((r.rho_s[0][0] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn a1_generators() {
        let r = rep(vec![vec![2]]);
        assert!((r.rho_t[1] - C64::new(0.0, 1.0)).norm() < 1e-15);
        let pref = C64::from_polar(1.0 / 2f64.sqrt(), -PI / 4.0);
        let want = [[pref, pref], [pref, -pref]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.rho_s[i][j] - want[i][j]).norm() < 1e-15);
            }
        }
        let v = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        // S⁴ = (I, −1) acts by (−1)^{p−q}
        let w = weil_apply(&r, &"SSSS".parse().unwrap(), &v).unwrap();
        assert!((w[0] + v[0]).norm() < 1e-12 && w[1].norm() < 1e-12);
        let w = weil_apply(&r, &"S^8".parse().unwrap(), &v).unwrap();
        assert!((w[0] - v[0]).norm() < 1e-12 && w[1].norm() < 1e-12);
        let (rel, comm, unit) = relation_defects(&r);
        assert!(rel < 1e-12 && comm < 1e-12 && unit < 1e-12);
    }

    #[test]
    fn word_parsing() {
        let w: GeneratorWord = "ST^3s t^-2".parse().unwrap();
        assert_eq!(w.to_string(), "STTTsTT");
        assert!("SX".parse::<GeneratorWord>().is_err());
        assert_eq!(GeneratorWord::default().to_sl2(), [[1, 0], [0, 1]]);
    }

    #[test]
    fn euclid_decomposition_round_trip() {
        for m in [[[1, 0], [0, 1]], [[2, 1], [1, 1]], [[-1, 0], [0, -1]], [[3, -2], [5, -3]], [[0, -1], [1, 0]]] {
            assert_eq!(decompose_sl2(m).unwrap().to_sl2(), m);
        }
    }

    #[test]
    fn metaplectic_square_roots() {
        let tau = C64::new(0.3, 1.1);
        for m in [[[2, 1], [1, 1]], [[3, -2], [5, -3]], [[-1, 2], [-3, 5]]] {
            let w = decompose_sl2(m).unwrap();
            let (phi, gt) = mp2_phi(&w, tau);
            let ctd = tau * m[1][0] as f64 + m[1][1] as f64;
            assert!((phi * phi - ctd).norm() < 1e-12);
            assert!((gt - mobius(m, tau)).norm() < 1e-12);
        }
    }
}
