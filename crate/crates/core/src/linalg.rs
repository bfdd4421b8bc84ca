//! Small dense linear algebra over any [`Field`], row-major `Vec<Vec<F>>`.
//!
//! Matrices here are at most a handful of rows; clarity wins over speed.

use crate::field::{Field, Ring};

pub type Mat<F> = Vec<Vec<F>>;

pub fn zeros<F: Ring>(r: usize, c: usize) -> Mat<F> {
    vec![vec![F::zero(); c]; r]
}

pub fn identity<F: Ring>(n: usize) -> Mat<F> {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = F::one();
    }
    m
}

pub fn transpose<F: Ring>(a: &Mat<F>) -> Mat<F> {
    if a.is_empty() {
        return Vec::new();
    }
    let (r, c) = (a.len(), a[0].len());
    (0..c).map(|j| (0..r).map(|i| a[i][j].clone()).collect()).collect()
}

pub fn mat_mul<F: Ring>(a: &Mat<F>, b: &Mat<F>) -> Mat<F> {
    let r = a.len();
    let inner = b.len();
    let c = if inner == 0 { 0 } else { b[0].len() };
    let mut out: Mat<F> = zeros(r, c);
    for i in 0..r {
        for k in 0..inner {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..c {
                out[i][j] = out[i][j].clone() + a[i][k].clone() * b[k][j].clone();
            }
        }
    }
    out
}

pub fn mat_vec<F: Ring>(a: &Mat<F>, v: &[F]) -> Vec<F> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
        })
        .collect()
}

pub fn dot<F: Ring>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// aᵀ·G·b
pub fn form<F: Ring>(g: &Mat<F>, a: &[F], b: &[F]) -> F {
    dot(a, &mat_vec(g, b))
}

pub fn add_vec<F: Ring>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn sub_vec<F: Ring>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn scale_vec<F: Ring>(s: &F, a: &[F]) -> Vec<F> {
    a.iter().map(|x| s.clone() * x.clone()).collect()
}

pub fn column<F: Ring>(a: &Mat<F>, j: usize) -> Vec<F> {
    a.iter().map(|row| row[j].clone()).collect()
}

/// Matrix whose columns are the given vectors.
pub fn from_columns<F: Ring>(cols: &[Vec<F>]) -> Mat<F> {
    if cols.is_empty() {
        return Vec::new();
    }
    let n = cols[0].len();
    (0..n).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect()
}

pub fn map_mat<F: Ring, G: Ring>(a: &Mat<F>, f: impl Fn(&F) -> G) -> Mat<G> {
    a.iter().map(|r| r.iter().map(&f).collect()).collect()
}

fn pivot_row<F: Field>(a: &Mat<F>, col: usize, from: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (r, row) in a.iter().enumerate().skip(from) {
        if row[col].is_zero() {
            continue;
        }
        let score = row[col].approx().abs();
        match best {
            Some((_, s)) if s >= score => {}
            _ => best = Some((r, score)),
        }
    }
    best.map(|(r, _)| r)
}

/// Reduced row echelon form; returns (rref, pivot columns).
pub fn rref<F: Field>(a: &Mat<F>) -> (Mat<F>, Vec<usize>) {
    let mut m = a.clone();
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = pivot_row(&m, c, r) else { continue };
        m.swap(r, p);
        let inv = F::one() / m[r][c].clone();
        for j in 0..cols {
            m[r][j] = m[r][j].clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    m[i][j] = m[i][j].clone() - f.clone() * m[r][j].clone();
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

pub fn rank<F: Field>(a: &Mat<F>) -> usize {
    rref(a).1.len()
}

pub fn inverse<F: Field>(a: &Mat<F>) -> Option<Mat<F>> {
    let n = a.len();
    let mut aug: Mat<F> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { F::one() } else { F::zero() }));
            r
        })
        .collect();
    let (red, piv) = rref(&aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    aug = red;
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn det<F: Field>(a: &Mat<F>) -> F {
    let n = a.len();
    let mut m = a.clone();
    let mut d = F::one();
    for c in 0..n {
        let Some(p) = pivot_row(&m, c, c) else { return F::zero() };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d = d * m[c][c].clone();
        let inv = F::one() / m[c][c].clone();
        for i in (c + 1)..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone() * inv.clone();
            for j in c..n {
                m[i][j] = m[i][j].clone() - f.clone() * m[c][j].clone();
            }
        }
    }
    d
}

pub fn solve<F: Field>(a: &Mat<F>, b: &[F]) -> Option<Vec<F>> {
    let inv = inverse(a)?;
    Some(mat_vec(&inv, b))
}

/// Basis of the right kernel {x : A x = 0}.
pub fn kernel<F: Field>(a: &Mat<F>, ncols: usize) -> Vec<Vec<F>> {
    if a.is_empty() {
        return (0..ncols)
            .map(|i| (0..ncols).map(|j| if i == j { F::one() } else { F::zero() }).collect())
            .collect();
    }
    let (m, piv) = rref(a);
    let free: Vec<usize> = (0..ncols).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![F::zero(); ncols];
            v[f] = F::one();
            for (r, &pc) in piv.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}
