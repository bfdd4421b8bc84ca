//! Polynomial-weighted Siegel theta functions with certified truncation,
//! modularity defects, the splitting to the sublattice K and the
//! construction of F_K.

use crate::field::{parse_q, q_to_f64, Q};
use crate::grassmannian::{GeomError, SplitFrame};
use crate::km_polynomials::{closed_form_ambient, km_poly, CountVector, ExpLaplacian, KmMode, Poly, PolyError};
use crate::lattice_core::{enumerate_box, enumerate_shifted, DiscriminantGroup, GramLattice, LatticeError, SplitData};
use crate::linalg::{self, Mat};
use crate::weil_rep::{cmat_vec, decompose_sl2, e, mp2_phi, weil_generators, CMat, WeilError, WeilRep};
use num_complex::Complex64 as C64;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("cannot certify the tail below {target:e} (radius {radius}, bound {bound:e})")]
    NonconvergentRequest { radius: f64, bound: f64, target: f64 },
    #[error("Im(tau) must be positive")]
    BadTau,
    #[error("index mismatch: {0}")]
    IndexMismatch(String),
    #[error("cannot express coset representative as a word: {0}")]
    WordDecompositionFailure(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Weil(#[from] WeilError),
}

pub type Result<T> = std::result::Result<T, ThetaError>;

/// Components indexed like the discriminant group, with a certified bound
/// on the truncation error of every component.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaValue {
    pub components: Vec<C64>,
    pub tail_bound: f64,
    pub radius: f64,
}

impl ThetaValue {
    pub fn zeros(n: usize) -> Self {
        ThetaValue { components: vec![C64::zero(); n], tail_bound: 0.0, radius: 0.0 }
    }
    pub fn sup_dist(&self, o: &ThetaValue) -> f64 {
        sup_dist(&self.components, &o.components)
    }
}

pub fn sup_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Neumaier-compensated complex sum in the given order.
pub fn compensated_sum(terms: impl IntoIterator<Item = C64>) -> C64 {
    let (mut sr, mut cr, mut si, mut ci) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for t in terms {
        for (s, c, x) in [(&mut sr, &mut cr, t.re), (&mut si, &mut ci, t.im)] {
            let nt = *s + x;
            if s.abs() >= x.abs() {
                *c += (*s - nt) + x;
            } else {
                *c += (x - nt) + *s;
            }
            *s = nt;
        }
    }
    C64::new(sr + cr, si + ci)
}

/// `∫_a^∞ s^k e^{−πy s²} ds`.
fn gaussian_moment(k: f64, y: f64, a: f64) -> f64 {
    let h = (k + 1.0) / 2.0;
    let x = PI * y * a * a;
    0.5 * (PI * y).powf(-h) * puruspe::gamma(h) * if x > 0.0 { puruspe::gammq(h, x) } else { 1.0 }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One lattice point of a theta sum at a fixed height.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaPoint {
    pub lam: Vec<f64>,
    pub amp: f64,
    pub half_norm: f64,
}

/// A lattice with a linear map X into standard coordinates ℝ^{p,q} and
/// a polynomial weight. Evaluates
/// `y^e Σ_{λ∈γ+L} exp(−Δ/8πy)P(X(λ+ν)) e(τ|X₊|²/2 − τ̄|X₋|²/2 − (λ+ν/2,δ))`.
#[derive(Clone, Debug)]
pub struct ThetaKernel {
    /// std coordinates of the basis vectors (n_std × rank)
    pub map: Mat<f64>,
    pub p_std: usize,
    pub poly: Poly<f64>,
    /// Laplacian metric on standard coordinates (None = Euclidean)
    pub metric: Option<Mat<f64>>,
    pub y_power: f64,
    majorant: Mat<f64>,
    rho0: f64,
}

impl ThetaKernel {
    pub fn new(map: Mat<f64>, p_std: usize, poly: Poly<f64>, metric: Option<Mat<f64>>, y_power: f64) -> Self {
        let mt = linalg::transpose(&map);
        let majorant = linalg::mat_mul(&mt, &map);
        let rank = majorant.len();
        let rho0 = if rank == 0 {
            f64::INFINITY
        } else {
            let d = nalgebra::DMatrix::from_fn(rank, rank, |i, j| majorant[i][j]);
            d.symmetric_eigenvalues().min().max(0.0).sqrt() / 2.0
        };
        ThetaKernel { map, p_std, poly, metric, y_power, majorant, rho0 }
    }
    pub fn rank(&self) -> usize {
        self.majorant.len()
    }
    pub fn majorant(&self) -> &Mat<f64> {
        &self.majorant
    }
    fn explap(&self) -> ExpLaplacian {
        ExpLaplacian::new(&self.poly, self.metric.as_ref())
    }

    /// Bound on Σ over points with |X| > R of the absolute summands
    /// (including the y-power), by comparison with a radial integral.
    pub fn tail_bound(&self, y: f64, radius: f64) -> f64 {
        let el = self.explap();
        if el.is_zero() {
            return 0.0;
        }
        let n = self.rank();
        if n == 0 {
            return 0.0;
        }
        let env = el.envelope(y);
        let maxdeg = env.iter().map(|(d, _)| *d).max().unwrap_or(0) as f64;
        let rho = self.rho0;
        let a = radius - 2.0 * rho;
        if !(rho > 0.0) || a <= 0.0 || a < (maxdeg / (2.0 * PI * y)).sqrt() {
            return f64::INFINITY;
        }
        let mut s = 0.0;
        for (d, c) in env {
            for j in 0..n {
                s += c
                    * binomial(n - 1, j)
                    * rho.powi((n - 1 - j) as i32)
                    * gaussian_moment(d as f64 + j as f64, y, a);
            }
        }
        y.powf(self.y_power) * n as f64 / rho.powi(n as i32) * s
    }

    /// Smallest radius on a geometric grid whose tail bound is below target.
    pub fn radius_for(&self, y: f64, target: f64) -> Result<f64> {
        let mut r = (2.0 * self.rho0).max(1.0) + 1.0;
        for _ in 0..200 {
            let b = self.tail_bound(y, r);
            if b < target {
                return Ok(r);
            }
            r *= 1.08;
        }
        Err(ThetaError::NonconvergentRequest { radius: r, bound: self.tail_bound(y, r), target })
    }

    fn term(&self, el: &ExpLaplacian, tau: C64, x: &[f64], lam: &[f64], nu: &[f64], delta_fn: &[f64]) -> C64 {
        let y = tau.im;
        let (mut np, mut nm) = (0.0, 0.0);
        for (i, xi) in x.iter().enumerate() {
            if i < self.p_std {
                np += xi * xi;
            } else {
                nm += xi * xi;
            }
        }
        let mut ph = 0.0;
        for i in 0..lam.len() {
            ph += (lam[i] + nu[i] / 2.0) * delta_fn[i];
        }
        let w = el.eval(x, y);
        let arg = tau * (np / 2.0) - tau.conj() * (nm / 2.0) - ph;
        w * (C64::new(0.0, 2.0 * PI) * arg).exp()
    }

    /// Theta components for the coset representatives `reps` (lattice
    /// coordinates). `delta_fn` is the functional λ ↦ (λ,δ).
    pub fn eval(&self, tau: C64, reps: &[Vec<f64>], delta_fn: &[f64], nu: &[f64], radius: f64) -> Result<ThetaValue> {
        if !(tau.im > 0.0) {
            return Err(ThetaError::BadTau);
        }
        let el = self.explap();
        let n = self.rank();
        let tail = self.tail_bound(tau.im, radius);
        if el.is_zero() {
            return Ok(ThetaValue { components: vec![C64::zero(); reps.len()], tail_bound: 0.0, radius });
        }
        let yp = tau.im.powf(self.y_power);
        let mut comps = Vec::with_capacity(reps.len());
        for rep in reps {
            let shift: Vec<f64> = (0..n).map(|i| rep[i] + nu[i]).collect();
            let pts = enumerate_shifted(&self.majorant, &shift, radius)?;
            let mut terms: Vec<(f64, Vec<i64>, C64)> = pts
                .into_par_iter()
                .map(|k| {
                    let lam: Vec<f64> = (0..n).map(|i| k[i] as f64 + rep[i]).collect();
                    let v: Vec<f64> = (0..n).map(|i| lam[i] + nu[i]).collect();
                    let x = linalg::mat_vec(&self.map, &v);
                    let norm: f64 = x.iter().map(|t| t * t).sum();
                    let t = self.term(&el, tau, &x, &lam, nu, delta_fn);
                    (norm, k, t)
                })
                .collect();
            terms.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            comps.push(yp * compensated_sum(terms.into_iter().map(|t| t.2)));
        }
        Ok(ThetaValue { components: comps, tail_bound: tail, radius })
    }

    /// The summands at height y with the x-dependence left open: the
    /// component at `x + iy` is `Σ amp·e(x·half_norm − (λ+ν/2, δ))`.
    pub fn points(&self, y: f64, reps: &[Vec<f64>], nu: &[f64], radius: f64) -> Result<Vec<Vec<ThetaPoint>>> {
        let el = self.explap();
        let n = self.rank();
        if el.is_zero() {
            return Ok(vec![Vec::new(); reps.len()]);
        }
        let yp = y.powf(self.y_power);
        let mut out = Vec::with_capacity(reps.len());
        for rep in reps {
            let shift: Vec<f64> = (0..n).map(|i| rep[i] + nu[i]).collect();
            let pts = enumerate_shifted(&self.majorant, &shift, radius)?;
            let mut v: Vec<(f64, ThetaPoint)> = pts
                .into_par_iter()
                .map(|k| {
                    let lam: Vec<f64> = (0..n).map(|i| k[i] as f64 + rep[i]).collect();
                    let w: Vec<f64> = (0..n).map(|i| lam[i] + nu[i]).collect();
                    let x = linalg::mat_vec(&self.map, &w);
                    let (mut np, mut nm) = (0.0, 0.0);
                    for (i, xi) in x.iter().enumerate() {
                        if i < self.p_std {
                            np += xi * xi;
                        } else {
                            nm += xi * xi;
                        }
                    }
                    let amp = yp * el.eval(&x, y) * (-PI * y * (np + nm)).exp();
                    (np + nm, ThetaPoint { lam, amp, half_norm: (np - nm) / 2.0 })
                })
                .collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.lam.partial_cmp(&b.1.lam).unwrap()));
            out.push(v.into_iter().map(|t| t.1).collect());
        }
        Ok(out)
    }

    /// Per component, a bound on `Σ |summand|` valid for every height
    /// `y′ ≥ y`, after removing the factor `y′^e`.
    pub fn abs_bound(&self, y: f64, reps: &[Vec<f64>], radius: f64) -> Result<Vec<f64>> {
        let el = self.explap();
        let n = self.rank();
        if el.is_zero() {
            return Ok(vec![0.0; reps.len()]);
        }
        let tail = self.tail_bound(y, radius) / y.powf(self.y_power);
        let mut out = Vec::with_capacity(reps.len());
        for rep in reps {
            let mut s = tail;
            for k in enumerate_shifted(&self.majorant, rep, radius)? {
                let lam: Vec<f64> = (0..n).map(|i| k[i] as f64 + rep[i]).collect();
                let x = linalg::mat_vec(&self.map, &lam);
                let norm: f64 = x.iter().map(|t| t * t).sum();
                let mut w = 1.0;
                let mut a = 0.0;
                for part in el.eval_parts(&x) {
                    a += w * part.abs();
                    w /= y;
                }
                s += a * (-PI * y * norm).exp();
            }
            out.push(s);
        }
        Ok(out)
    }

    /// Independent evaluation by box scan and exact-to-float polynomial
    /// expansion, used as a test oracle.
    pub fn eval_naive(&self, tau: C64, reps: &[Vec<f64>], delta_fn: &[f64], nu: &[f64], radius: f64) -> Result<Vec<C64>> {
        let n = self.rank();
        let y = tau.im;
        // exp(−Δ/8πy)P summed directly at the given y
        let mut pe = Poly::zero(self.poly.nvars);
        let mut term = self.poly.clone();
        let mut m = 0;
        let mut w = 1.0;
        while !term.is_zero() && m < 64 {
            pe = pe.add(&term.scale(&w));
            term = match &self.metric {
                Some(mm) => term.laplacian_metric(mm),
                None => term.laplacian(),
            };
            m += 1;
            w *= -1.0 / (8.0 * PI * y * m as f64);
        }
        let mut out = Vec::new();
        for rep in reps {
            let shift: Vec<f64> = (0..n).map(|i| rep[i] + nu[i]).collect();
            let mut s = C64::zero();
            for k in enumerate_box(&self.majorant, &shift, radius)? {
                let lam: Vec<f64> = (0..n).map(|i| k[i] as f64 + rep[i]).collect();
                let v: Vec<f64> = (0..n).map(|i| lam[i] + nu[i]).collect();
                let x = linalg::mat_vec(&self.map, &v);
                let xp: f64 = x[..self.p_std].iter().map(|t| t * t).sum();
                let xm: f64 = x[self.p_std..].iter().map(|t| t * t).sum();
                let d: f64 = (0..n).map(|i| (lam[i] + nu[i] / 2.0) * delta_fn[i]).sum();
                let phase = 2.0 * PI * (tau.re * (xp - xm) / 2.0 - d);
                let gauss = (-PI * y * (xp + xm)).exp();
                s += pe.eval_f64(&x) * gauss * C64::from_polar(1.0, phase);
            }
            out.push(y.powf(self.y_power) * s);
        }
        Ok(out)
    }
}

/// Θ_L(τ, δ, ν, g, P) request. `chart` is the chart of g; δ, ν are in
/// lattice coordinates; `poly` is a polynomial in p+q standard variables.
#[derive(Clone, Debug)]
pub struct ThetaRequest<'a> {
    pub lattice: &'a GramLattice,
    pub disc: &'a DiscriminantGroup,
    pub tau: C64,
    pub delta: Vec<f64>,
    pub nu: Vec<f64>,
    pub chart: Mat<f64>,
    pub poly: Poly<f64>,
    pub radius: f64,
}

fn reps_f64(disc: &DiscriminantGroup) -> Vec<Vec<f64>> {
    disc.reps().iter().map(|r| r.iter().map(q_to_f64).collect()).collect()
}

impl ThetaRequest<'_> {
    pub fn kernel(&self) -> Result<ThetaKernel> {
        let (p, qq) = self.lattice.signature();
        let mm = if self.poly.is_zero() { 0 } else { self.poly.bidegree(p)?.1 };
        Ok(ThetaKernel::new(self.chart.clone(), p, self.poly.clone(), None, qq as f64 / 2.0 + mm as f64))
    }
    fn delta_fn(&self) -> Vec<f64> {
        linalg::mat_vec(&self.lattice.gram_f64(), &self.delta)
    }
}

/// Truncated Θ_L with certified tail bound.
pub fn siegel_theta(req: &ThetaRequest) -> Result<ThetaValue> {
    if !(req.radius > 0.0) {
        return Err(ThetaError::NonconvergentRequest { radius: req.radius, bound: f64::INFINITY, target: 0.0 });
    }
    let k = req.kernel()?;
    k.eval(req.tau, &reps_f64(req.disc), &req.delta_fn(), &req.nu, req.radius)
}

/// Box-scan oracle for [`siegel_theta`].
pub fn siegel_theta_naive(req: &ThetaRequest) -> Result<Vec<C64>> {
    let k = req.kernel()?;
    k.eval_naive(req.tau, &reps_f64(req.disc), &req.delta_fn(), &req.nu, req.radius)
}

/// P_ᾱ as a float polynomial in p+q variables.
pub fn p_alpha(alpha: &CountVector, n: usize) -> Poly<f64> {
    km_poly(alpha, KmMode::P).at_y(1.0).with_nvars(n)
}

/// `ᾱ ↦ Θ_L(τ, g, P_ᾱ)` for all count vectors with ‖ᾱ‖₁ = q.
pub fn km_theta_components(
    l: &GramLattice,
    disc: &DiscriminantGroup,
    tau: C64,
    chart: &Mat<f64>,
    radius: f64,
) -> Result<BTreeMap<CountVector, ThetaValue>> {
    let (p, qq) = l.signature();
    let mut out = BTreeMap::new();
    for alpha in CountVector::all(p, qq as u32) {
        let req = ThetaRequest {
            lattice: l,
            disc,
            tau,
            delta: vec![0.0; p + qq],
            nu: vec![0.0; p + qq],
            chart: chart.clone(),
            poly: p_alpha(&alpha, p + qq),
            radius,
        };
        out.insert(alpha, siegel_theta(&req)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    S,
    T,
}

/// ‖Θ(γτ) − φ(τ)^{2w}ρ(γ)Θ(τ)‖∞ for γ ∈ {S, T}, w = (p−q)/2 + m⁺ − m⁻,
/// with both sides truncated so each tail is below target/4.
pub fn modularity_defect(
    l: &GramLattice,
    disc: &DiscriminantGroup,
    poly: &Poly<f64>,
    gen: Generator,
    tau: C64,
    chart: &Mat<f64>,
    target: f64,
) -> Result<f64> {
    let (p, qq) = l.signature();
    let n = p + qq;
    let rep = weil_generators(l, disc);
    let (mp, mm) = if poly.is_zero() { (0, 0) } else { poly.bidegree(p)? };
    let w = (p as f64 - qq as f64) / 2.0 + mp as f64 - mm as f64;
    let gt = match gen {
        Generator::T => tau + 1.0,
        Generator::S => -1.0 / tau,
    };
    let mk = |t: C64| -> Result<ThetaValue> {
        let base = ThetaRequest {
            lattice: l,
            disc,
            tau: t,
            delta: vec![0.0; n],
            nu: vec![0.0; n],
            chart: chart.clone(),
            poly: poly.clone(),
            radius: 1.0,
        };
        let k = base.kernel()?;
        let r = k.radius_for(t.im, target / 4.0)?;
        siegel_theta(&ThetaRequest { radius: r, ..base })
    };
    let lhs = mk(gt)?;
    let rhs0 = mk(tau)?;
    let rhs: Vec<C64> = match gen {
        Generator::T => rhs0.components.iter().zip(&rep.rho_t).map(|(a, b)| a * b).collect(),
        Generator::S => {
            let f = tau.sqrt().powf(2.0 * w);
            cmat_vec(&rep.rho_s, &rhs0.components).into_iter().map(|x| x * f).collect()
        }
    };
    Ok(sup_dist(&lhs.components, &rhs))
}

/// The data needed to move between L′/L and K′/K.
#[derive(Clone, Debug)]
pub struct SplitContext<'a> {
    pub lattice: &'a GramLattice,
    pub disc: &'a DiscriminantGroup,
    pub sd: &'a SplitData,
    pub frame: &'a SplitFrame<f64>,
    pub rep: WeilRep,
    /// `lifts[γ][l]` = index of γ̃ + l·u/N in L′/L, γ ∈ K′/K
    pub lifts: Vec<Vec<usize>>,
    pub k_reps: Vec<Vec<f64>>,
    /// (k_i, μ)
    pub k_mu: Vec<f64>,
    /// g♯ on the K basis (std coordinates), n × rank K
    pub k_map: Mat<f64>,
}

impl<'a> SplitContext<'a> {
    pub fn new(
        lattice: &'a GramLattice,
        disc: &'a DiscriminantGroup,
        sd: &'a SplitData,
        frame: &'a SplitFrame<f64>,
    ) -> Result<Self> {
        let nn = sd.n;
        let mut lifts = Vec::with_capacity(sd.k_disc.len());
        for gi in 0..sd.k_disc.len() {
            let g = sd.embed_k(sd.k_disc.rep(gi));
            let c = lattice.pair(&g, &sd.zeta) / Q::from_integer(nn.into());
            let gt: Vec<Q> = g.iter().zip(&sd.u).map(|(a, b)| a - &c * b).collect();
            let mut row = Vec::with_capacity(nn as usize);
            for l in 0..nn {
                let f = Q::new(l.into(), nn.into());
                let v: Vec<Q> = gt.iter().zip(&sd.u).map(|(a, b)| a + &f * b).collect();
                row.push(disc.index_of(&v)?);
            }
            lifts.push(row);
        }
        let k_reps = reps_f64(&sd.k_disc);
        let kb: Vec<Vec<f64>> = sd.k_basis.iter().map(|b| b.iter().map(q_to_f64).collect()).collect();
        let k_mu = kb.iter().map(|b| frame.pair(b, &frame.mu)).collect();
        let cols: Vec<Vec<f64>> = kb.iter().map(|b| frame.g_sharp(b)).collect();
        let k_map = if cols.is_empty() { vec![vec![]; frame.n()] } else { linalg::from_columns(&cols) };
        Ok(SplitContext { lattice, disc, sd, frame, rep: weil_generators(lattice, disc), lifts, k_reps, k_mu, k_map })
    }

    /// Θ_K(τ, rμ, 0, g♯, P) for an ambient polynomial P on standard
    /// coordinates, restricted to W.
    pub fn theta_k_kernel(&self, poly: &Poly<f64>, mm: u32) -> ThetaKernel {
        ThetaKernel::new(
            self.k_map.clone(),
            self.frame.p,
            poly.clone(),
            Some(self.frame.projector.clone()),
            (self.frame.q as f64 - 1.0) / 2.0 + mm as f64,
        )
    }

    pub fn theta_k(&self, kernel: &ThetaKernel, tau: C64, r: f64, radius: f64) -> Result<ThetaValue> {
        let delta: Vec<f64> = self.k_mu.iter().map(|x| r * x).collect();
        let nu = vec![0.0; self.sd.k_rank()];
        kernel.eval(tau, &self.k_reps, &delta, &nu, radius)
    }

    /// `g ⊗ Σ_l e(−lr/N) 𝔢_{lu/N}` as a vector on L′/L.
    pub fn tensor(&self, g: &[C64], r: i64) -> Vec<C64> {
        let nn = self.sd.n;
        let mut v = vec![C64::zero(); self.disc.len()];
        for (gi, row) in self.lifts.iter().enumerate() {
            for (l, &idx) in row.iter().enumerate() {
                v[idx] += g[gi] * e(-((l as i64 * r).mod_floor(&nn)) as f64 / nn as f64);
            }
        }
        v
    }

    /// Ambient parts `p^{h,0}` of P (degree (m,0)).
    pub fn u_parts(&self, poly: &Poly<f64>) -> Result<Vec<Poly<f64>>> {
        Ok(closed_form_ambient(poly, &self.frame.ghat_plus(), self.frame.p)?)
    }
}

/// Representatives (a,b;c,d) of Γ∞\SL₂(ℤ) with 0 < |c| ≤ C, |d| ≤ D·C,
/// both signs, plus ±identity.
pub fn coset_reps(c_max: i64, d_factor: i64) -> Vec<[[i64; 2]; 2]> {
    let mut out = vec![[[1, 0], [0, 1]], [[-1, 0], [0, -1]]];
    for c in 1..=c_max {
        for d in -d_factor * c..=d_factor * c {
            if c.gcd(&d) != 1 {
                continue;
            }
            let g = d.extended_gcd(&c);
            // a·d − b·c = 1 with a = x, b = −y where x·d + y·c = 1
            let (a, b) = (g.x, -g.y);
            debug_assert_eq!(a * d - b * c, 1);
            out.push([[a, b], [c, d]]);
            out.push([[-a, -b], [-c, -d]]);
        }
    }
    out
}

/// Truncation parameters of the splitting.
#[derive(Clone, Debug)]
pub struct SplitParams {
    pub coset_cutoff: i64,
    pub d_factor: i64,
    pub radius_l: f64,
    pub tail_target: f64,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams { coset_cutoff: 5, d_factor: 40, radius_l: 8.0, tail_target: 1e-12 }
    }
}

/// Both sides of the splitting of Θ_L(τ, g, P) for P homogeneous of
/// degree (m,0): the direct theta function and the sum over K-theta
/// functions and Γ∞\Mp₂(ℤ).
pub fn split_theta_sides(
    ctx: &SplitContext,
    tau: C64,
    poly: &Poly<f64>,
    params: &SplitParams,
) -> Result<(ThetaValue, ThetaValue)> {
    let l = ctx.lattice;
    let fr = ctx.frame;
    let (p, qq) = (fr.p, fr.q);
    let n = p + qq;
    let lhs = siegel_theta(&ThetaRequest {
        lattice: l,
        disc: ctx.disc,
        tau,
        delta: vec![0.0; n],
        nu: vec![0.0; n],
        chart: fr.chart.clone(),
        poly: poly.clone(),
        radius: params.radius_l,
    })?;
    let (m, _) = poly.bidegree(p)?;
    let parts = ctx.u_parts(poly)?;
    let kernels: Vec<ThetaKernel> = parts.iter().map(|pp| ctx.theta_k_kernel(pp, 0)).collect();
    let pref = 1.0 / (2.0 * fr.u_perp_sq).sqrt();
    let mut tail = 0.0;
    let mut total = vec![C64::zero(); ctx.disc.len()];
    // identity term
    {
        let r0 = kernels[0].radius_for(tau.im, params.tail_target)?;
        let th = ctx.theta_k(&kernels[0], tau, 0.0, r0)?;
        tail += pref * th.tail_bound * ctx.sd.n as f64;
        for (t, v) in total.iter_mut().zip(ctx.tensor(&th.components, 0)) {
            *t += pref * v;
        }
    }
    let weight_exp = -((p as i64 - qq as i64) + 2 * m as i64) as f64;
    for g in coset_reps(params.coset_cutoff, params.d_factor) {
        let word = decompose_sl2(g).map_err(|e| ThetaError::WordDecompositionFailure(e.to_string()))?;
        let (phi, gt) = mp2_phi(&word, tau);
        let yy = gt.im;
        let rho = crate::weil_rep::conj_transpose(&crate::weil_rep::word_matrix(&ctx.rep, &word));
        let phi_w = phi.powf(weight_exp);
        let mut acc = vec![C64::zero(); ctx.disc.len()];
        for (h, kern) in kernels.iter().enumerate() {
            if kern.poly.is_zero() {
                continue;
            }
            for r in 1..10_000i64 {
                let rf = r as f64;
                let gauss = (-PI * rf * rf / (2.0 * yy * fr.u_perp_sq)).exp();
                let fac = C64::new(0.0, -2.0).powi(-(h as i32)) * rf.powi(h as i32) * phi_w * yy.powi(-(h as i32)) * gauss;
                if fac.norm() < 1e-14 {
                    break;
                }
                let rad = kern.radius_for(yy, params.tail_target / fac.norm().max(1e-300))?;
                let th = ctx.theta_k(kern, gt, rf, rad)?;
                tail += pref * fac.norm() * th.tail_bound * ctx.sd.n as f64;
                for (a, v) in acc.iter_mut().zip(ctx.tensor(&th.components, r)) {
                    *a += fac * v;
                }
            }
        }
        let back = cmat_vec(&rho, &acc);
        for (t, v) in total.iter_mut().zip(back) {
            *t += pref * v;
        }
    }
    Ok((lhs, ThetaValue { components: total, tail_bound: tail, radius: 0.0 }))
}

/// `ρ(γ)⁻¹` for γ ∈ SL₂(ℤ) via its S/T word.
pub fn rho_inverse(rep: &WeilRep, m: [[i64; 2]; 2]) -> Result<CMat> {
    let w = decompose_sl2(m)?;
    Ok(crate::weil_rep::conj_transpose(&crate::weil_rep::word_matrix(rep, &w)))
}

/// A table of Fourier coefficients `c(f_γ, n)`, n ∈ ℤ + q(γ), n > 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspFormData {
    pub weight: String,
    pub coeffs: Vec<CoeffEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub coset: Vec<String>,
    pub n: String,
    pub c: [f64; 2],
}

/// Coefficients indexed by discriminant-group index, then by n.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoeffTable {
    pub by_coset: Vec<BTreeMap<Q, C64>>,
}

impl CoeffTable {
    pub fn new(len: usize) -> Self {
        CoeffTable { by_coset: vec![BTreeMap::new(); len] }
    }
    pub fn get(&self, coset: usize, n: &Q) -> C64 {
        self.by_coset[coset].get(n).copied().unwrap_or_default()
    }
    pub fn insert(&mut self, coset: usize, n: Q, c: C64) {
        *self.by_coset[coset].entry(n).or_default() += c;
    }
    pub fn scale(&self, s: C64) -> Self {
        CoeffTable {
            by_coset: self.by_coset.iter().map(|m| m.iter().map(|(k, v)| (k.clone(), v * s)).collect()).collect(),
        }
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (i, m) in o.by_coset.iter().enumerate() {
            for (k, v) in m {
                out.insert(i, k.clone(), *v);
            }
        }
        out
    }
    pub fn is_zero(&self) -> bool {
        self.by_coset.iter().all(|m| m.values().all(|v| v.norm() == 0.0))
    }
    pub fn n_min(&self) -> Option<Q> {
        self.by_coset.iter().flat_map(|m| m.keys().cloned()).min()
    }
    /// `Σ_γ Σ_n c(f_γ,n) e(nτ) 𝔢_γ` truncated to the stored entries.
    pub fn eval(&self, tau: C64) -> Vec<C64> {
        self.by_coset
            .iter()
            .map(|m| {
                compensated_sum(m.iter().map(|(n, c)| c * (C64::new(0.0, 2.0 * PI * q_to_f64(n)) * tau).exp()))
            })
            .collect()
    }
}

impl CuspFormData {
    pub fn table(&self, disc: &DiscriminantGroup) -> Result<CoeffTable> {
        let mut t = CoeffTable::new(disc.len());
        for ent in &self.coeffs {
            let coset: Vec<Q> =
                ent.coset.iter().map(|s| parse_q(s)).collect::<std::result::Result<_, _>>().map_err(ThetaError::IndexMismatch)?;
            let idx = disc.index_of(&coset)?;
            let n = parse_q(&ent.n).map_err(ThetaError::IndexMismatch)?;
            if !n.is_positive() {
                return Err(ThetaError::IndexMismatch(format!("non-positive index n = {}", ent.n)));
            }
            let frac = &n - disc.q_mod1(idx);
            if !frac.is_integer() {
                return Err(ThetaError::IndexMismatch(format!("n = {} is not in ℤ + q(γ)", ent.n)));
            }
            t.insert(idx, n, C64::new(ent.c[0], ent.c[1]));
        }
        Ok(t)
    }
    pub fn from_table(weight: &Q, disc: &DiscriminantGroup, t: &CoeffTable) -> Self {
        let mut coeffs = Vec::new();
        for (i, m) in t.by_coset.iter().enumerate() {
            for (n, c) in m {
                coeffs.push(CoeffEntry {
                    coset: disc.rep(i).iter().map(crate::field::fmt_q).collect(),
                    n: crate::field::fmt_q(n),
                    c: [c.re, c.im],
                });
            }
        }
        CuspFormData { weight: crate::field::fmt_q(weight), coeffs }
    }
}

/// `F_K(τ; r, t)` as a coefficient table on K′/K:
/// `f_γ(τ;r,t) = Σ_{λ ∈ L₀′/L, p(λ)=γ} e(−r(λ,u′) − rt·q(u′)) f_{λ + t u′}`.
pub fn f_to_fk(l: &GramLattice, disc: &DiscriminantGroup, sd: &SplitData, f: &CoeffTable, r: i64, t: i64) -> Result<CoeffTable> {
    if f.by_coset.len() != disc.len() {
        return Err(ThetaError::IndexMismatch(format!("table has {} cosets, group {}", f.by_coset.len(), disc.len())));
    }
    let mut out = CoeffTable::new(sd.k_disc.len());
    let qup = q_to_f64(&l.norm(&sd.u_prime));
    for (gk, fiber) in sd.fibers.iter().enumerate() {
        for &li in fiber {
            let lam = disc.rep(li);
            let ph = e(-(r as f64) * q_to_f64(&l.pair(lam, &sd.u_prime)) - (r * t) as f64 * qup);
            let shifted: Vec<Q> = lam.iter().zip(&sd.u_prime).map(|(a, b)| a + Q::from_integer(t.into()) * b).collect();
            let si = disc.index_of(&shifted)?;
            for (n, c) in &f.by_coset[si] {
                out.insert(gk, n.clone(), ph * c);
            }
        }
    }
    Ok(out)
}

/// Both sides of `⟨f, g ⊗ Σ_l e(−lr/N)𝔢_{lu/N}⟩ = ⟨F_K(−r,0), g⟩` for
/// vectors f on L′/L and g on K′/K.
pub fn pairing_sides(ctx: &SplitContext, f: &[C64], g: &[C64], r: i64) -> (C64, C64) {
    let lhs: C64 = f.iter().zip(ctx.tensor(g, r)).map(|(a, b)| a * b.conj()).sum();
    let l = ctx.lattice;
    let sd = ctx.sd;
    let mut fk = vec![C64::zero(); sd.k_disc.len()];
    for (gk, fiber) in sd.fibers.iter().enumerate() {
        for &li in fiber {
            let lam = ctx.disc.rep(li);
            fk[gk] += e(r as f64 * q_to_f64(&l.pair(lam, &sd.u_prime))) * f[li];
        }
    }
    let rhs: C64 = fk.iter().zip(g).map(|(a, b)| a * b.conj()).sum();
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmannian::{block_chart, block_gram, chart_f64, Block};
    use crate::lattice_core::{build_lattice, discriminant_group, split_data};

    fn setup(blocks: &[Block]) -> (GramLattice, DiscriminantGroup, Mat<f64>) {
        let l = build_lattice(block_gram(blocks)).unwrap();
        let d = discriminant_group(&l).unwrap();
        (l, d, chart_f64(&block_chart(blocks).unwrap()))
    }

    #[test]
    fn matches_naive_and_tail_is_honest() {
        let (l, d, a) = setup(&[Block::A1, Block::U(1)]);
        let poly = p_alpha(&CountVector::new(vec![1, 0]), 3);
        let req = ThetaRequest {
            lattice: &l,
            disc: &d,
            tau: C64::new(0.3, 1.1),
            delta: vec![0.1, 0.2, -0.3],
            nu: vec![0.05, 0.0, 0.1],
            chart: a,
            poly,
            radius: 4.0,
        };
        let v = siegel_theta(&req).unwrap();
        let w = siegel_theta_naive(&req).unwrap();
        assert!(sup_dist(&v.components, &w) < 1e-12);
        let big = siegel_theta(&ThetaRequest { radius: 6.0, ..req.clone() }).unwrap();
        assert!(v.sup_dist(&big) <= v.tail_bound);
        assert!(v.tail_bound < 1e-3);
    }

    #[test]
    fn origin_only_and_zero_poly() {
        let (l, d, a) = setup(&[Block::U(1)]);
        let req = ThetaRequest {
            lattice: &l,
            disc: &d,
            tau: C64::new(0.0, 2.0),
            delta: vec![0.0; 2],
            nu: vec![0.0; 2],
            chart: a,
            poly: Poly::constant(2, 1.0),
            radius: 0.5,
        };
        let v = siegel_theta(&req).unwrap();
        assert!((v.components[0] - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-14);
        let z = siegel_theta(&ThetaRequest { poly: Poly::zero(2), ..req }).unwrap();
        assert_eq!(z.components, vec![C64::zero()]);
    }

    #[test]
    fn t_and_s_modularity() {
        let (l, d, a) = setup(&[Block::A1, Block::U(1)]);
        let poly = p_alpha(&CountVector::new(vec![1, 0]), 3);
        let tt = modularity_defect(&l, &d, &poly, Generator::T, C64::new(0.3, 1.1), &a, 1e-9).unwrap();
        assert!(tt < 1e-8, "{tt}");
        let ss = modularity_defect(&l, &d, &poly, Generator::S, C64::new(0.1, 1.3), &a, 1e-8).unwrap();
        assert!(ss < 1e-6, "{ss}");
        let (l, d, a) = setup(&[Block::U(1)]);
        let s = modularity_defect(&l, &d, &Poly::constant(2, 1.0), Generator::S, C64::new(0.0, 1.0), &a, 1e-8).unwrap();
        assert!(s < 1e-6, "{s}");
    }

    #[test]
    fn fiber_pairing_on_u2() {
        let l = build_lattice(vec![vec![0, 2], vec![2, 0]]).unwrap();
        let d = discriminant_group(&l).unwrap();
        let sd = split_data(&l, &d, &[crate::field::q(1), crate::field::q(0)], &[crate::field::q(0), crate::field::qfrac(1, 2)]).unwrap();
        let blocks = [Block::U(2)];
        let fr = SplitFrame::from_chart(&l, block_chart(&blocks).unwrap(), &sd.u, &sd.u_prime).unwrap().to_f64();
        let ctx = SplitContext::new(&l, &d, &sd, &fr).unwrap();
        let f: Vec<C64> = (0..d.len()).map(|i| C64::new(0.3 * i as f64 - 0.2, 0.7 - 0.1 * i as f64)).collect();
        let g = vec![C64::new(0.4, -1.1)];
        for r in -3..4 {
            let (a, b) = pairing_sides(&ctx, &f, &g, r);
            assert!((a - b).norm() < 1e-12);
        }
    }
}
