//! Points of the Grassmannian, majorants, isometries to the base point,
//! split frames and Eichler transformations.
//!
//! A frame is stored as a *chart* `A`: the matrix sending lattice
//! coordinates to standard coordinates of ℝ^{p,q} (positive coordinates
//! first), with `Aᵀ·J·A = G`. If `E` is the stored orthonormal base frame
//! of V (columns in lattice coordinates), the isometry is `g = E·A` and
//! `g(z) = z₀` with `z = A⁻¹(0 ⊕ ℝ^q)`.

use crate::field::{q, q_to_f64, Field, QSqrt2, Ring, Q};
use crate::lattice_core::{GramLattice, SplitData};
use crate::linalg::{self, Mat};
use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

pub const GEOM_TOL: f64 = 1e-10;
const MAX_COND: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("basis does not span a negative definite subspace")]
    NotNegativeDefinite,
    #[error("subspace basis is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("degenerate split frame: u_(z⊥)² = {0:e}")]
    DegenerateFrame(f64),
    #[error("Eichler parameter is not orthogonal to u")]
    NotOrthogonalToU,
    #[error("invalid chart: {0}")]
    BadChart(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, GeomError>;

fn j_sign<F: Ring>(p: usize, i: usize) -> F {
    if i < p {
        F::one()
    } else {
        -F::one()
    }
}

fn gram_as<F: Ring>(l: &GramLattice) -> Mat<F> {
    l.gram().iter().map(|r| r.iter().map(|&x| F::from_i64(x)).collect()).collect()
}

fn vec_as<F: Ring>(v: &[Q]) -> Vec<F> {
    v.iter().map(F::from_q).collect()
}

/// max |AᵀJA − G|.
pub fn chart_defect<F: Field>(l: &GramLattice, a: &Mat<F>) -> f64 {
    let (p, _) = l.signature();
    let n = l.rank();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut s = F::zero();
            for k in 0..n {
                s = s + j_sign::<F>(p, k) * a[k][i].clone() * a[k][j].clone();
            }
            worst = worst.max((s.approx() - l.gram()[i][j] as f64).abs());
        }
    }
    worst
}

/// Orthonormal frame of V (columns in lattice coordinates), positive
/// vectors first; the base point z₀ is spanned by the last q columns.
#[derive(Clone, Debug)]
pub struct BaseFrame {
    pub vectors: Mat<f64>,
    pub p: usize,
    pub q: usize,
}

impl BaseFrame {
    /// Eigenvectors of the Gram matrix, rescaled to norm ±1.
    pub fn from_eigen(l: &GramLattice) -> Self {
        let n = l.rank();
        let (p, qq) = l.signature();
        let g = DMatrix::from_fn(n, n, |i, j| l.gram()[i][j] as f64);
        let eig = g.symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut cols = Vec::with_capacity(n);
        for &k in &idx {
            let s = eig.eigenvalues[k].abs().sqrt();
            cols.push((0..n).map(|r| eig.eigenvectors[(r, k)] / s).collect::<Vec<f64>>());
        }
        BaseFrame { vectors: linalg::from_columns(&cols), p, q: qq }
    }
    /// The frame whose standard coordinates are given by `chart`.
    pub fn from_chart<F: Field>(l: &GramLattice, chart: &Mat<F>) -> Result<Self> {
        let (p, qq) = l.signature();
        let a = linalg::map_mat(chart, |x| x.approx());
        let e = linalg::inverse(&a).ok_or_else(|| GeomError::BadChart("singular".into()))?;
        Ok(BaseFrame { vectors: e, p, q: qq })
    }
    pub fn base_point(&self) -> GrassPoint {
        let n = self.p + self.q;
        GrassPoint { neg_basis: (self.p..n).map(|j| linalg::column(&self.vectors, j)).collect() }
    }
}

/// A negative definite q-plane z ⊂ V, spanned by `neg_basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassPoint {
    pub neg_basis: Vec<Vec<f64>>,
}

fn basis_gram(l: &GramLattice, b: &[Vec<f64>]) -> Mat<f64> {
    b.iter().map(|x| b.iter().map(|y| l.pair_f64(x, y)).collect()).collect()
}

pub fn grass_point(l: &GramLattice, neg_basis: Vec<Vec<f64>>) -> Result<GrassPoint> {
    let (_, qq) = l.signature();
    if neg_basis.len() != qq {
        return Err(GeomError::DimensionMismatch { expected: qq, got: neg_basis.len() });
    }
    for v in &neg_basis {
        if v.len() != l.rank() {
            return Err(GeomError::DimensionMismatch { expected: l.rank(), got: v.len() });
        }
    }
    let g = basis_gram(l, &neg_basis);
    let m = DMatrix::from_fn(qq, qq, |i, j| -g[i][j]);
    let ev = m.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    if qq > 0 && !(lo > 0.0) {
        return Err(GeomError::NotNegativeDefinite);
    }
    if qq > 0 && hi / lo > MAX_COND {
        return Err(GeomError::IllConditioned(hi / lo));
    }
    Ok(GrassPoint { neg_basis })
}

/// Matrix of `(·,·)_z` in lattice coordinates: `G − 2GB(BᵀGB)⁻¹BᵀG`.
pub fn majorant_matrix(l: &GramLattice, z: &GrassPoint) -> Mat<f64> {
    let n = l.rank();
    let g = l.gram_f64();
    let gb: Vec<Vec<f64>> = z.neg_basis.iter().map(|b| linalg::mat_vec(&g, b)).collect();
    let bgb = basis_gram(l, &z.neg_basis);
    let inv = linalg::inverse(&bgb).unwrap_or_default();
    let mut m = g;
    for (a, ga) in gb.iter().enumerate() {
        for (b, gbb) in gb.iter().enumerate() {
            let c = 2.0 * inv[a][b];
            for i in 0..n {
                for j in 0..n {
                    m[i][j] -= c * ga[i] * gbb[j];
                }
            }
        }
    }
    m
}

pub fn majorant(l: &GramLattice, z: &GrassPoint, v: &[f64]) -> f64 {
    let m = majorant_matrix(l, z);
    linalg::form(&m, v, v)
}

/// Isometry of V in lattice coordinates.
#[derive(Clone, Debug)]
pub struct Isometry {
    pub matrix: Mat<f64>,
}

impl Isometry {
    /// max |MᵀGM − G|.
    pub fn defect(&self, l: &GramLattice) -> f64 {
        let g = l.gram_f64();
        let mt = linalg::transpose(&self.matrix);
        let r = linalg::mat_mul(&linalg::mat_mul(&mt, &g), &self.matrix);
        let mut w: f64 = 0.0;
        for i in 0..g.len() {
            for j in 0..g.len() {
                w = w.max((r[i][j] - g[i][j]).abs());
            }
        }
        w
    }
    pub fn det(&self) -> f64 {
        linalg::det(&self.matrix)
    }
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.matrix, v)
    }
    /// The chart `E⁻¹·g` relative to `base`.
    pub fn chart(&self, base: &BaseFrame) -> Mat<f64> {
        let einv = linalg::inverse(&base.vectors).expect("base frame is invertible");
        linalg::mat_mul(&einv, &self.matrix)
    }
}

/// Orthonormalise `vs` for the form `sign·(·,·)`, against the earlier
/// vectors in `done` (which have norm `signs`).
fn gram_schmidt(l: &GramLattice, vs: &[Vec<f64>], sign: f64, done: &mut Vec<(Vec<f64>, f64)>) -> Result<()> {
    for v in vs {
        let mut w = v.clone();
        for (f, s) in done.iter() {
            let c = l.pair_f64(&w, f) * s;
            for (wi, fi) in w.iter_mut().zip(f) {
                *wi -= c * fi;
            }
        }
        let nn = sign * l.pair_f64(&w, &w);
        if !(nn > 1e-12) {
            return Err(GeomError::NotNegativeDefinite);
        }
        let s = nn.sqrt();
        done.push((w.iter().map(|x| x / s).collect(), sign));
    }
    Ok(())
}

/// Some g ∈ SO(V) with g(z) = z₀, built by Gram–Schmidt.
pub fn isometry_to_base(l: &GramLattice, z: &GrassPoint, base: &BaseFrame) -> Result<Isometry> {
    let z = grass_point(l, z.neg_basis.clone())?;
    let n = l.rank();
    let (p, _) = l.signature();
    let mut neg = Vec::new();
    gram_schmidt(l, &z.neg_basis, -1.0, &mut neg)?;
    // z⊥: kernel of Bᵀ·G
    let g = l.gram_f64();
    let rows: Mat<f64> = z.neg_basis.iter().map(|b| linalg::mat_vec(&g, b)).collect();
    let perp = if rows.is_empty() { linalg::identity::<f64>(n) } else { linalg::kernel(&rows, n) };
    let mut pos = Vec::new();
    gram_schmidt(l, &perp, 1.0, &mut pos).map_err(|_| GeomError::BadChart("z⊥ is not positive".into()))?;
    if pos.len() != p {
        return Err(GeomError::BadChart("z⊥ has wrong dimension".into()));
    }
    let mut cols: Vec<Vec<f64>> = pos.into_iter().chain(neg).map(|(v, _)| v).collect();
    let mut f = linalg::from_columns(&cols);
    let mut m = linalg::mat_mul(&base.vectors, &linalg::inverse(&f).ok_or(GeomError::NotNegativeDefinite)?);
    if linalg::det(&m) < 0.0 {
        for x in cols[0].iter_mut() {
            *x = -*x;
        }
        f = linalg::from_columns(&cols);
        m = linalg::mat_mul(&base.vectors, &linalg::inverse(&f).expect("invertible"));
    }
    Ok(Isometry { matrix: m })
}

/// Geometry of a point z relative to the isotropic pair (u, u′).
///
/// `c_plus`, `c_minus` are the two halves of `A·u`; `W = w⊥ ⊕ w` is
/// `c₊⊥ ⊕ c₋⊥` in standard coordinates, and `g♯ = P_W·A`.
#[derive(Clone, Debug)]
pub struct SplitFrame<F> {
    pub p: usize,
    pub q: usize,
    pub chart: Mat<F>,
    pub chart_inv: Mat<F>,
    pub u: Vec<F>,
    pub u_prime: Vec<F>,
    pub c_plus: Vec<F>,
    pub c_minus: Vec<F>,
    pub u_perp_sq: F,
    pub u_z_sq: F,
    pub u_perp: Vec<F>,
    pub u_z: Vec<F>,
    pub mu: Vec<F>,
    pub projector: Mat<F>,
    gram: Mat<F>,
}

impl<F: Field> SplitFrame<F> {
    pub fn from_chart(l: &GramLattice, chart: Mat<F>, u: &[Q], u_prime: &[Q]) -> Result<Self> {
        let n = l.rank();
        let (p, qq) = l.signature();
        if chart.len() != n || chart.iter().any(|r| r.len() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: chart.len() });
        }
        let scale = l.gram().iter().flatten().map(|x| x.abs() as f64).fold(1.0, f64::max);
        let defect = chart_defect(l, &chart);
        if defect > 1e-9 * scale {
            return Err(GeomError::BadChart(format!("AᵀJA − G = {defect:e}")));
        }
        let chart_inv = linalg::inverse(&chart).ok_or_else(|| GeomError::BadChart("singular".into()))?;
        let uf: Vec<F> = vec_as(u);
        let au = linalg::mat_vec(&chart, &uf);
        let c_plus = au[..p].to_vec();
        let c_minus = au[p..].to_vec();
        let u_perp_sq = linalg::dot(&c_plus, &c_plus);
        if !(u_perp_sq.approx() > 1e-12) {
            return Err(GeomError::DegenerateFrame(u_perp_sq.approx()));
        }
        let u_z_sq = -linalg::dot(&c_minus, &c_minus);
        let mut plus_std = c_plus.clone();
        plus_std.extend(std::iter::repeat_n(F::zero(), qq));
        let mut minus_std = vec![F::zero(); p];
        minus_std.extend(c_minus.iter().cloned());
        let u_perp = linalg::mat_vec(&chart_inv, &plus_std);
        let u_z = linalg::mat_vec(&chart_inv, &minus_std);
        let upf: Vec<F> = vec_as(u_prime);
        let two = F::from_i64(2);
        let mu: Vec<F> = (0..n)
            .map(|i| {
                -upf[i].clone()
                    + u_perp[i].clone() / (two.clone() * u_perp_sq.clone())
                    + u_z[i].clone() / (two.clone() * u_z_sq.clone())
            })
            .collect();
        let mut projector = linalg::identity::<F>(n);
        let cm_sq = -u_z_sq.clone();
        for i in 0..n {
            for j in 0..n {
                if i < p && j < p {
                    projector[i][j] = projector[i][j].clone() - c_plus[i].clone() * c_plus[j].clone() / u_perp_sq.clone();
                } else if i >= p && j >= p {
                    projector[i][j] =
                        projector[i][j].clone() - c_minus[i - p].clone() * c_minus[j - p].clone() / cm_sq.clone();
                }
            }
        }
        Ok(SplitFrame {
            p,
            q: qq,
            chart,
            chart_inv,
            u: uf,
            u_prime: upf,
            c_plus,
            c_minus,
            u_perp_sq,
            u_z_sq,
            u_perp,
            u_z,
            mu,
            projector,
            gram: gram_as(l),
        })
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }
    pub fn pair(&self, a: &[F], b: &[F]) -> F {
        linalg::form(&self.gram, a, b)
    }
    /// Standard coordinates `A·v`.
    pub fn std(&self, v: &[F]) -> Vec<F> {
        linalg::mat_vec(&self.chart, v)
    }
    /// `g♯(v)` in standard coordinates.
    pub fn g_sharp(&self, v: &[F]) -> Vec<F> {
        linalg::mat_vec(&self.projector, &self.std(v))
    }
    /// `ĝ₊ = c₊/|c₊|²`, the positive part of g(u_{z⊥})/u_{z⊥}².
    pub fn ghat_plus(&self) -> Vec<F> {
        self.c_plus.iter().map(|c| c.clone() / self.u_perp_sq.clone()).collect()
    }
    /// Basis of W as an n×(n−2) matrix of standard coordinates: first
    /// the p−1 vectors spanning w⊥, then the q−1 spanning w.
    pub fn w_basis(&self) -> Mat<F> {
        let n = self.n();
        let kp = linalg::kernel(&vec![self.c_plus.clone()], self.p);
        let km = linalg::kernel(&vec![self.c_minus.clone()], self.q);
        let mut cols = Vec::with_capacity(n.saturating_sub(2));
        for k in kp {
            let mut c = k;
            c.extend(std::iter::repeat_n(F::zero(), self.q));
            cols.push(c);
        }
        for k in km {
            let mut c = vec![F::zero(); self.p];
            c.extend(k);
            cols.push(c);
        }
        if cols.is_empty() {
            return vec![vec![]; n];
        }
        linalg::from_columns(&cols)
    }
    /// Majorant matrix `AᵀA` in lattice coordinates.
    pub fn majorant_matrix(&self) -> Mat<F> {
        linalg::mat_mul(&linalg::transpose(&self.chart), &self.chart)
    }
    pub fn grass_point(&self) -> GrassPoint {
        let n = self.n();
        GrassPoint {
            neg_basis: (self.p..n)
                .map(|j| linalg::column(&self.chart_inv, j).iter().map(|x| x.approx()).collect())
                .collect(),
        }
    }
    pub fn to_f64(&self) -> SplitFrame<f64> {
        let m = |a: &Mat<F>| linalg::map_mat(a, |x| x.approx());
        let v = |a: &[F]| a.iter().map(|x| x.approx()).collect::<Vec<f64>>();
        SplitFrame {
            p: self.p,
            q: self.q,
            chart: m(&self.chart),
            chart_inv: m(&self.chart_inv),
            u: v(&self.u),
            u_prime: v(&self.u_prime),
            c_plus: v(&self.c_plus),
            c_minus: v(&self.c_minus),
            u_perp_sq: self.u_perp_sq.approx(),
            u_z_sq: self.u_z_sq.approx(),
            u_perp: v(&self.u_perp),
            u_z: v(&self.u_z),
            mu: v(&self.mu),
            projector: m(&self.projector),
            gram: m(&self.gram),
        }
    }
    /// The isometry `g = E·A` for a base frame E.
    pub fn isometry(&self, base: &BaseFrame) -> Isometry {
        let a = linalg::map_mat(&self.chart, |x| x.approx());
        Isometry { matrix: linalg::mat_mul(&base.vectors, &a) }
    }
    /// The frame of the point mapped to z by `m` (chart `A·m`).
    pub fn pulled_back(&self, l: &GramLattice, m: &Mat<F>, u: &[Q], u_prime: &[Q]) -> Result<Self> {
        Self::from_chart(l, linalg::mat_mul(&self.chart, m), u, u_prime)
    }
}

/// Split frame of z from the Gram–Schmidt isometry to the base point.
pub fn split_frame(l: &GramLattice, z: &GrassPoint, sd: &SplitData, base: &BaseFrame) -> Result<SplitFrame<f64>> {
    let g = isometry_to_base(l, z, base)?;
    SplitFrame::from_chart(l, g.chart(base), &sd.u, &sd.u_prime)
}

/// Residuals of the defining properties of a split frame.
#[derive(Clone, Debug, Default)]
pub struct FrameDefects {
    /// |u − u_z − u_{z⊥}|
    pub reconstruct: f64,
    /// |(μ,u)|
    pub mu_u: f64,
    /// |g♯(u)|
    pub g_sharp_u: f64,
    /// max over test vectors of |‖g♯v‖² − (v_{w⊥}² + v_w²)|, with the
    /// right side computed from the majorant of z.
    pub isometry: f64,
    /// sign conditions u_{z⊥}² > 0 > u_z² hold
    pub signs_ok: bool,
}

pub fn frame_defects(l: &GramLattice, fr: &SplitFrame<f64>, tests: &[Vec<f64>]) -> FrameDefects {
    let n = fr.n();
    let reconstruct = (0..n).map(|i| (fr.u[i] - fr.u_z[i] - fr.u_perp[i]).abs()).fold(0.0, f64::max);
    let mu_u = fr.pair(&fr.mu, &fr.u).abs();
    let g_sharp_u = fr.g_sharp(&fr.u).iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let z = fr.grass_point();
    let maj = majorant_matrix(l, &z);
    let mut iso: f64 = 0.0;
    for v in tests {
        let x = fr.g_sharp(v);
        let lhs: f64 = (0..n).map(|i| if i < fr.p { x[i] * x[i] } else { -x[i] * x[i] }).sum();
        let vv = fr.pair(v, v);
        let vz = linalg::form(&maj, v, v);
        let perp_sq = (vv + vz) / 2.0; // v_{z⊥}²
        let z_sq = (vv - vz) / 2.0; // v_z² (negative)
        let a = fr.pair(v, &fr.u_perp);
        let b = fr.pair(v, &fr.u_z);
        let rhs = (perp_sq - a * a / fr.u_perp_sq) + (z_sq - b * b / fr.u_z_sq);
        iso = iso.max((lhs - rhs).abs() / (1.0 + vz));
    }
    FrameDefects {
        reconstruct,
        mu_u,
        g_sharp_u,
        isometry: iso,
        signs_ok: fr.u_perp_sq > 0.0 && fr.u_z_sq < 0.0,
    }
}

/// Matrix of `E(u,λ)` in lattice coordinates, λ ∈ u⊥ in lattice coordinates.
pub fn eichler<F: Field>(l: &GramLattice, u: &[Q], lam: &[F]) -> Result<Mat<F>> {
    let n = l.rank();
    if lam.len() != n || u.len() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: lam.len() });
    }
    let g: Mat<F> = gram_as(l);
    let uf: Vec<F> = vec_as(u);
    let lu = linalg::form(&g, lam, &uf);
    if lu.approx().abs() > 1e-12 {
        return Err(GeomError::NotOrthogonalToU);
    }
    let ql = linalg::form(&g, lam, lam) / F::from_i64(2);
    let gu = linalg::mat_vec(&g, &uf);
    let gl = linalg::mat_vec(&g, lam);
    // column j = E(b_j)
    let mut m = linalg::identity::<F>(n);
    for i in 0..n {
        for j in 0..n {
            let v = -gu[j].clone() * lam[i].clone() + gl[j].clone() * uf[i].clone()
                - ql.clone() * gu[j].clone() * uf[i].clone();
            m[i][j] = m[i][j].clone() + v;
        }
    }
    Ok(m)
}

/// `E(u,λ)` for λ given in K coordinates.
pub fn eichler_k<F: Field>(l: &GramLattice, sd: &SplitData, lam_k: &[F]) -> Result<Mat<F>> {
    if lam_k.len() != sd.k_rank() {
        return Err(GeomError::DimensionMismatch { expected: sd.k_rank(), got: lam_k.len() });
    }
    eichler(l, &sd.u, &embed_k(sd, lam_k))
}

pub fn embed_k<F: Ring>(sd: &SplitData, y: &[F]) -> Vec<F> {
    let n = sd.u.len();
    let mut out = vec![F::zero(); n];
    for (b, c) in sd.k_basis.iter().zip(y) {
        for (o, bi) in out.iter_mut().zip(b) {
            *o = o.clone() + c.clone() * F::from_q(bi);
        }
    }
    out
}

/// Residuals of the five Eichler-transformation properties.
#[derive(Clone, Debug, Default)]
pub struct EichlerResiduals {
    pub fixes_u: f64,
    pub maps_w: f64,
    pub maps_w_perp: f64,
    pub g_sharp: f64,
    pub norm: f64,
    pub phase: f64,
}

impl EichlerResiduals {
    pub fn max(&self) -> f64 {
        [self.fixes_u, self.maps_w, self.maps_w_perp, self.g_sharp, self.norm, self.phase]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Checks the Eichler properties for `E = E(u,λ)` and the frame of
/// `z̃ = E⁻¹z`, whose chart is `A·E`. `lam_primes` are test vectors in K
/// coordinates.
pub fn eichler_residuals(
    l: &GramLattice,
    sd: &SplitData,
    fr: &SplitFrame<f64>,
    lam_k: &[f64],
    lam_primes: &[Vec<f64>],
) -> Result<EichlerResiduals> {
    let n = fr.n();
    let p = fr.p;
    let e = eichler_k(l, sd, lam_k)?;
    let ft = fr.pulled_back(l, &e, &sd.u, &sd.u_prime)?;
    let mut r = EichlerResiduals::default();
    let eu = linalg::mat_vec(&e, &fr.u);
    r.fixes_u = (0..n).map(|i| (eu[i] - fr.u[i]).abs()).fold(0.0, f64::max);
    // images of w̃, w̃⊥ in the standard coordinates of z
    let wb = ft.w_basis();
    let a_e_ainv = linalg::mat_mul(&linalg::mat_mul(&fr.chart, &e), &ft.chart_inv);
    let cp2 = fr.u_perp_sq;
    for j in 0..wb[0].len() {
        let col = linalg::column(&wb, j);
        let x = linalg::mat_vec(&a_e_ainv, &col);
        let scale = col.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let along_plus: f64 = (0..p).map(|i| x[i] * fr.c_plus[i]).sum::<f64>() / cp2.sqrt();
        let along_minus: f64 = (p..n).map(|i| x[i] * fr.c_minus[i - p]).sum::<f64>() / cp2.sqrt();
        if j < p - 1 {
            let neg: f64 = (p..n).map(|i| x[i].abs()).fold(0.0, f64::max);
            r.maps_w_perp = r.maps_w_perp.max(along_plus.abs().max(neg) / scale);
        } else {
            let pos: f64 = (0..p).map(|i| x[i].abs()).fold(0.0, f64::max);
            r.maps_w = r.maps_w.max(along_minus.abs().max(pos) / scale);
        }
    }
    let lam = embed_k(sd, lam_k);
    for lp_k in lam_primes {
        let v = embed_k(sd, lp_k);
        let a = fr.g_sharp(&v);
        let b = ft.g_sharp(&v);
        let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        r.g_sharp = r.g_sharp.max((0..n).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max) / scale);
        let na: f64 = a[..p].iter().map(|x| x * x).sum();
        let nb: f64 = b[..p].iter().map(|x| x * x).sum();
        r.norm = r.norm.max((na - nb).abs() / (1.0 + na));
        let d = fr.pair(&v, &ft.mu) - fr.pair(&v, &fr.mu) - fr.pair(&v, &lam);
        r.phase = r.phase.max(dist_to_int(d));
    }
    Ok(r)
}

/// Building blocks of the lattices with explicit algebraic frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    /// U(N): Gram [[0,N],[N,0]]
    U(i64),
    /// A₁: Gram [[2]]
    A1,
    /// A₁(−1): Gram [[−2]]
    A1Neg,
}

impl Block {
    pub fn rank(&self) -> usize {
        match self {
            Block::U(_) => 2,
            _ => 1,
        }
    }
}

pub fn block_gram(blocks: &[Block]) -> Vec<Vec<i64>> {
    let n: usize = blocks.iter().map(Block::rank).sum();
    let mut g = vec![vec![0i64; n]; n];
    let mut o = 0;
    for b in blocks {
        match *b {
            Block::U(m) => {
                g[o][o + 1] = m;
                g[o + 1][o] = m;
            }
            Block::A1 => g[o][o] = 2,
            Block::A1Neg => g[o][o] = -2,
        }
        o += b.rank();
    }
    g
}

/// √(N/2) in ℚ(√2), when it lies there.
fn sqrt_half(nn: i64) -> Option<QSqrt2> {
    let k = (nn as f64).sqrt().round() as i64;
    if k * k == nn {
        return Some(QSqrt2::new(Q::zero(), Q::new(k.into(), 2.into())));
    }
    if nn % 2 == 0 {
        let k = ((nn / 2) as f64).sqrt().round() as i64;
        if k * k == nn / 2 {
            return Some(QSqrt2::new(q(k), Q::zero()));
        }
    }
    None
}

/// Chart of the orthonormal frame adapted to the block decomposition:
/// positive standard coordinates in block order, then negative ones in
/// block order. For a trailing U block its generators satisfy
/// `e₁ = (e_p + e_{p+q})/√2`.
pub fn block_chart(blocks: &[Block]) -> Option<Mat<QSqrt2>> {
    let n: usize = blocks.iter().map(Block::rank).sum();
    let p = blocks.iter().filter(|b| !matches!(b, Block::A1Neg)).count();
    let mut a = linalg::zeros::<QSqrt2>(n, n);
    let (mut o, mut ip, mut im) = (0, 0, p);
    let sqrt2 = QSqrt2::sqrt2();
    for b in blocks {
        match *b {
            Block::U(m) => {
                let s = sqrt_half(m)?;
                a[ip][o] = s.clone();
                a[im][o] = s.clone();
                a[ip][o + 1] = s.clone();
                a[im][o + 1] = -s;
                ip += 1;
                im += 1;
            }
            Block::A1 => {
                a[ip][o] = sqrt2.clone();
                ip += 1;
            }
            Block::A1Neg => {
                a[im][o] = sqrt2.clone();
                im += 1;
            }
        }
        o += b.rank();
    }
    Some(a)
}

/// Rational Cayley transform `(I − JK)⁻¹(I + JK)` for skew K: an element
/// of SO(p,q) acting on standard coordinates.
pub fn cayley(p: usize, skew: &Mat<Q>) -> Option<Mat<Q>> {
    let n = skew.len();
    let x: Mat<Q> = (0..n)
        .map(|i| (0..n).map(|j| if i < p { skew[i][j].clone() } else { -skew[i][j].clone() }).collect())
        .collect();
    let id = linalg::identity::<Q>(n);
    let a: Mat<Q> = (0..n).map(|i| (0..n).map(|j| &id[i][j] - &x[i][j]).collect()).collect();
    let b: Mat<Q> = (0..n).map(|i| (0..n).map(|j| &id[i][j] + &x[i][j]).collect()).collect();
    Some(linalg::mat_mul(&linalg::inverse(&a)?, &b))
}

/// Random Cayley transform with skew entries in {−2,…,2}/den.
pub fn random_cayley<R: Rng>(rng: &mut R, p: usize, n: usize, den: i64) -> Mat<Q> {
    loop {
        let mut k = linalg::zeros::<Q>(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = Q::new(rng.gen_range(-2i64..=2).into(), den.into());
                k[i][j] = v.clone();
                k[j][i] = -v;
            }
        }
        if let Some(o) = cayley(p, &k) {
            return o;
        }
    }
}

/// Gauge isometry on standard coordinates: swaps e_α and e_p,
/// negates e_{p+1}. `alpha` is 1-based in `1..p`.
pub fn gauge_std(p: usize, qq: usize, alpha: usize) -> Mat<Q> {
    let n = p + qq;
    let mut m = linalg::identity::<Q>(n);
    let (a, b) = (alpha - 1, p - 1);
    m[a][a] = Q::zero();
    m[b][b] = Q::zero();
    m[a][b] = Q::one();
    m[b][a] = Q::one();
    m[p][p] = -Q::one();
    m
}

/// Lifts a rational standard-coordinate matrix into ℚ(√2).
pub fn to_qsqrt2(m: &Mat<Q>) -> Mat<QSqrt2> {
    linalg::map_mat(m, |x| QSqrt2::new(x.clone(), Q::zero()))
}

pub fn chart_f64<F: Ring>(m: &Mat<F>) -> Mat<f64> {
    linalg::map_mat(m, |x| x.approx())
}

pub fn q_vec_f64(v: &[Q]) -> Vec<f64> {
    v.iter().map(q_to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::qfrac;
    use crate::lattice_core::{build_lattice, discriminant_group, split_data};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn u_lattice() -> GramLattice {
        build_lattice(vec![vec![0, 1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn majorant_examples() {
        let l = u_lattice();
        let z = grass_point(&l, vec![vec![1.0, -1.0]]).unwrap();
        assert!((majorant(&l, &z, &[1.0, 0.0]) - 1.0).abs() < 1e-12);
        // v ∈ z⊥ and v ∈ z
        assert!((majorant(&l, &z, &[1.0, 1.0]) - 2.0).abs() < 1e-12);
        assert!((majorant(&l, &z, &[1.0, -1.0]) - 2.0).abs() < 1e-12);
        assert_eq!(grass_point(&l, vec![vec![1.0, 1.0]]), Err(GeomError::NotNegativeDefinite));
    }

    #[test]
    fn isometry_postconditions() {
        let l = u_lattice();
        let base = BaseFrame::from_eigen(&l);
        let z = grass_point(&l, vec![vec![1.0, -3.0]]).unwrap();
        let g = isometry_to_base(&l, &z, &base).unwrap();
        assert!(g.defect(&l) < 1e-10);
        assert!((g.det() - 1.0).abs() < 1e-10);
        // g(z) ⊂ z₀
        let gz = g.apply(&z.neg_basis[0]);
        let coords = linalg::mat_vec(&linalg::inverse(&base.vectors).unwrap(), &gz);
        assert!(coords[0].abs() < 1e-10);
        let z0 = base.base_point();
        let g0 = isometry_to_base(&l, &z0, &base).unwrap();
        let c = linalg::mat_vec(&linalg::inverse(&base.vectors).unwrap(), &g0.apply(&z0.neg_basis[0]));
        assert!(c[0].abs() < 1e-10);
    }

    #[test]
    fn u_split_frame_example() {
        let l = u_lattice();
        let d = discriminant_group(&l).unwrap();
        let sd = split_data(&l, &d, &[q(1), q(0)], &[q(0), q(1)]).unwrap();
        let base = BaseFrame::from_eigen(&l);
        let z = grass_point(&l, vec![vec![1.0, -1.0]]).unwrap();
        let fr = split_frame(&l, &z, &sd, &base).unwrap();
        assert!((fr.u_perp_sq - 0.5).abs() < 1e-12);
        assert!((fr.u_z[0] - 0.5).abs() < 1e-12 && (fr.u_z[1] + 0.5).abs() < 1e-12);
        assert!((fr.u_perp[0] - 0.5).abs() < 1e-12 && (fr.u_perp[1] - 0.5).abs() < 1e-12);
        let d = frame_defects(&l, &fr, &[vec![1.0, 2.0]]);
        assert!(d.reconstruct < 1e-12 && d.mu_u < 1e-12 && d.signs_ok);
    }

    #[test]
    fn block_charts_are_exact() {
        for blocks in [
            vec![Block::U(1)],
            vec![Block::A1, Block::U(1)],
            vec![Block::A1, Block::A1, Block::A1Neg, Block::U(1)],
            vec![Block::U(2), Block::U(1)],
        ] {
            let l = build_lattice(block_gram(&blocks)).unwrap();
            let a = block_chart(&blocks).unwrap();
            assert_eq!(chart_defect(&l, &a), 0.0);
        }
    }

    #[test]
    fn cayley_preserves_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (p, n) in [(2, 3), (3, 5), (1, 2)] {
            let o = random_cayley(&mut rng, p, n, 3);
            for i in 0..n {
                for j in 0..n {
                    let s: Q = (0..n).map(|k| j_sign::<Q>(p, k) * &o[k][i] * &o[k][j]).sum();
                    assert_eq!(s, if i != j { q(0) } else { j_sign::<Q>(p, i) });
                }
            }
            assert_eq!(linalg::det(&o), q(1));
        }
    }

    #[test]
    fn eichler_exact() {
        let blocks = [Block::A1, Block::U(1)];
        let l = build_lattice(block_gram(&blocks)).unwrap();
        let d = discriminant_group(&l).unwrap();
        let sd = split_data(&l, &d, &[q(0), q(1), q(0)], &[q(0), q(0), q(1)]).unwrap();
        let zero = eichler_k(&l, &sd, &[q(0)]).unwrap();
        assert_eq!(zero, linalg::identity::<Q>(3));
        let e = eichler_k(&l, &sd, &[qfrac(3, 7)]).unwrap();
        let einv = eichler_k(&l, &sd, &[qfrac(-3, 7)]).unwrap();
        assert_eq!(linalg::mat_mul(&e, &einv), linalg::identity::<Q>(3));
        assert_eq!(linalg::mat_vec(&e, &sd.u), sd.u);
        assert_eq!(eichler(&l, &sd.u, &[q(0), q(0), q(1)]), Err(GeomError::NotOrthogonalToU));
    }

    #[test]
    fn eichler_properties_on_random_frame() {
        let blocks = [Block::A1, Block::U(1)];
        let l = build_lattice(block_gram(&blocks)).unwrap();
        let d = discriminant_group(&l).unwrap();
        let sd = split_data(&l, &d, &[q(0), q(1), q(0)], &[q(0), q(0), q(1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let o = to_qsqrt2(&random_cayley(&mut rng, 2, 3, 5));
        let chart = linalg::mat_mul(&o, &block_chart(&blocks).unwrap());
        let fr = SplitFrame::from_chart(&l, chart, &sd.u, &sd.u_prime).unwrap().to_f64();
        let r = eichler_residuals(&l, &sd, &fr, &[0.37], &[vec![1.3], vec![-0.4]]).unwrap();
        assert!(r.max() < 1e-10, "{r:?}");
    }
}
