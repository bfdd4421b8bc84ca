//! Lattice points of a shifted lattice inside a majorant ball.

use super::{GramLattice, LatticeError, LatticeVector, Result};
use crate::field::q;
use nalgebra::DMatrix;

const REL_SLACK: f64 = 1e-12;

fn to_dmatrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j])
}

fn quad(m: &[Vec<f64>], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, row) in m.iter().enumerate() {
        let mut t = 0.0;
        for (j, v) in row.iter().enumerate() {
            t += v * x[j];
        }
        s += x[i] * t;
    }
    s
}

fn inside(m: &[Vec<f64>], x: &[f64], r: f64) -> bool {
    quad(m, x) <= r * r * (1.0 + REL_SLACK) + REL_SLACK
}

fn check_pd(m: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = m.len();
    let d = to_dmatrix(m);
    for i in 0..n {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > 1e-9 * (1.0 + m[i][j].abs()) {
                return Err(LatticeError::NotPositiveDefinite);
            }
        }
    }
    let ev = d.clone().symmetric_eigenvalues();
    if n > 0 && !(ev.min() > 0.0) {
        return Err(LatticeError::NotPositiveDefinite);
    }
    Ok(d)
}

/// All integer vectors k with `(k+shift)ᵀ M (k+shift) ≤ r²`, in
/// lexicographic order. Fincke–Pohst recursion on the Cholesky factor.
pub fn enumerate_shifted(m: &[Vec<f64>], shift: &[f64], r: f64) -> Result<Vec<Vec<i64>>> {
    let n = m.len();
    if n == 0 {
        return Ok(vec![vec![]]);
    }
    let d = check_pd(m)?;
    let chol = d.cholesky().ok_or(LatticeError::NotPositiveDefinite)?;
    let rt = chol.l().transpose(); // upper triangular, M = Rᵀ R
    let r2 = r * r * (1.0 + REL_SLACK) + REL_SLACK;
    let mut out = Vec::new();
    let mut x = vec![0.0; n];
    let mut k = vec![0i64; n];
    recurse(&rt, shift, r2, n - 1, 0.0, &mut x, &mut k, &mut out);
    out.retain(|k| {
        let x: Vec<f64> = k.iter().zip(shift).map(|(a, b)| *a as f64 + b).collect();
        inside(m, &x, r)
    });
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    rt: &DMatrix<f64>,
    shift: &[f64],
    r2: f64,
    i: usize,
    used: f64,
    x: &mut [f64],
    k: &mut [i64],
    out: &mut Vec<Vec<i64>>,
) {
    let n = x.len();
    let t: f64 = ((i + 1)..n).map(|j| rt[(i, j)] * x[j]).sum();
    let rem = (r2 - used).max(0.0);
    let rii = rt[(i, i)];
    let w = rem.sqrt() / rii;
    let centre = -t / rii;
    // x_i = k_i + shift_i ∈ [centre − w, centre + w]
    let lo = (centre - w - shift[i] - 1e-9).ceil() as i64;
    let hi = (centre + w - shift[i] + 1e-9).floor() as i64;
    for ki in lo..=hi {
        let xi = ki as f64 + shift[i];
        let c = rii * xi + t;
        let u = used + c * c;
        if u > r2 + 1e-9 {
            continue;
        }
        x[i] = xi;
        k[i] = ki;
        if i == 0 {
            out.push(k.to_vec());
        } else {
            recurse(rt, shift, r2, i - 1, u, x, k, out);
        }
    }
}

/// Naive oracle: scans the box implied by the smallest eigenvalue.
pub fn enumerate_box(m: &[Vec<f64>], shift: &[f64], r: f64) -> Result<Vec<Vec<i64>>> {
    let n = m.len();
    if n == 0 {
        return Ok(vec![vec![]]);
    }
    let d = check_pd(m)?;
    let lmin = d.symmetric_eigenvalues().min();
    let b = r * (1.0 + REL_SLACK) / lmin.sqrt() + 1e-9;
    let ranges: Vec<(i64, i64)> = shift
        .iter()
        .map(|s| ((-s - b).ceil() as i64, (-s + b).floor() as i64))
        .collect();
    let mut out = Vec::new();
    let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|(a, b)| a > b) {
        return Ok(out);
    }
    loop {
        let x: Vec<f64> = k.iter().zip(shift).map(|(a, s)| *a as f64 + s).collect();
        if inside(m, &x, r) {
            out.push(k.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                out.sort();
                return Ok(out);
            }
            i -= 1;
            k[i] += 1;
            if k[i] <= ranges[i].1 {
                break;
            }
            k[i] = ranges[i].0;
        }
    }
}

/// All `λ ∈ L + coset` with `(λ,λ)_z ≤ R²`, sorted lexicographically.
pub fn enumerate_coset(
    l: &GramLattice,
    coset: &LatticeVector,
    majorant: &[Vec<f64>],
    r: f64,
) -> Result<Vec<LatticeVector>> {
    if coset.coords.len() != l.rank() || majorant.len() != l.rank() {
        return Err(LatticeError::DimensionMismatch { expected: l.rank(), got: coset.coords.len() });
    }
    let shift = coset.to_f64();
    let ks = enumerate_shifted(majorant, &shift, r)?;
    Ok(ks
        .into_iter()
        .map(|k| LatticeVector::new(k.iter().zip(&coset.coords).map(|(a, c)| q(*a) + c).collect()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::qfrac;
    use crate::lattice_core::build_lattice;

    #[test]
    fn origin_only() {
        let u = build_lattice(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let maj = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let pts = enumerate_coset(&u, &LatticeVector::zero(2), &maj, 0.5).unwrap();
        assert_eq!(pts, vec![LatticeVector::zero(2)]);
    }

    #[test]
    fn a1_half_coset() {
        let a1 = build_lattice(vec![vec![2]]).unwrap();
        let pts = enumerate_coset(&a1, &LatticeVector::new(vec![qfrac(1, 2)]), &[vec![1.0]], 2.0).unwrap();
        let want: Vec<LatticeVector> = [-3, -1, 1, 3].iter().map(|&x| LatticeVector::new(vec![qfrac(x, 2)])).collect();
        assert_eq!(pts, want);
    }

    #[test]
    fn nine_points_in_orthogonal_frame() {
        let u = build_lattice(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let maj = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(enumerate_coset(&u, &LatticeVector::zero(2), &maj, 1.5).unwrap().len(), 9);
    }

    #[test]
    fn rejects_indefinite() {
        let m = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
        assert_eq!(enumerate_shifted(&m, &[0.0, 0.0], 1.0), Err(LatticeError::NotPositiveDefinite));
    }
}
