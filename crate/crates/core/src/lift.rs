//! The defining integrals of the Kudla–Millson lift: the Poincaré kernel
//! h_ᾱ, Fourier coefficients of the unfolded integral, the strip check,
//! the gauge frame, recovery of cusp-form coefficients and the
//! fundamental-domain integral.

use crate::field::{fmt_q, q, q_to_f64, QSqrt2, Q};
use crate::grassmannian::{block_chart, block_gram, gauge_std, to_qsqrt2, Block, GeomError, SplitFrame};
use crate::km_polynomials::{km_poly, u_decompose, CountVector, DecomposeMethod, ExpLaplacian, KmMode, Poly, PolyError};
use crate::lattice_core::{enumerate_box, DiscriminantGroup, GramLattice, LatticeError, SplitData};
use crate::linalg::{self, Mat};
use crate::theta::{
    compensated_sum, coset_reps, f_to_fk, p_alpha, pairing_sides, siegel_theta, split_theta_sides, CoeffTable,
    SplitContext, SplitParams, ThetaError, ThetaKernel, ThetaRequest,
};
use crate::weil_rep::{decompose_sl2, e, mp2_phi};
use num_complex::Complex64 as C64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiftError {
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("weight {got} differs from (p+q)/2 + ell = {expected}")]
    WeightMismatch { expected: String, got: String },
    #[error("count vector {0} does not fit the signature and twist")]
    BadAlpha(String),
    #[error("vector is not in K′")]
    NotInDual,
    #[error("the constant term is not a Fourier coefficient")]
    ConstantTerm,
    #[error("y-integral diverges: s = {s}, A = {a}")]
    DivergentIntegral { s: f64, a: f64 },
    #[error("signature ({p},{q}) or α₁ = {alpha1} admits no gauge frame")]
    BadSignature { p: usize, q: usize, alpha1: usize },
    #[error("modular check requested with synthetic coefficients")]
    ModeMismatch,
    #[error("tables disagree at coset {coset}, n = {n}: spread {spread:e}")]
    InconsistentTables { coset: usize, n: String, spread: f64 },
    #[error("not convergent: {0}")]
    NonconvergentRequest(String),
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, LiftError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YMethod {
    Quadrature,
    Bessel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    /// x-nodes of the periodic trapezoid rule on [0, 1]
    pub nx: usize,
    /// torus points per K-coordinate for the Fourier extraction
    pub torus: usize,
    /// step in log y
    pub log_y_step: f64,
    /// relative tolerance of the adaptive y-integrals
    pub tol: f64,
    /// Gauss–Legendre nodes per panel on the fundamental domain
    pub fd_nodes: usize,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams { nx: 32, torus: 16, log_y_step: 0.04, tol: 1e-12, fd_nodes: 24 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// the r-sum stops once the Gaussian weight r^h·e^{−πr²/2yu²} is below this
    pub gauss_cut: f64,
    /// tail target for each theta evaluation
    pub tail_target: f64,
    pub y_max: f64,
    pub coset_cutoff: i64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { gauss_cut: 1e-18, tail_target: 1e-15, y_max: 8.0, coset_cutoff: 5 }
    }
}

/// One defining integral I_ᾱ(g) for a cusp form f.
#[derive(Clone, Debug)]
pub struct LiftRequest<'a> {
    pub lattice: &'a GramLattice,
    pub disc: &'a DiscriminantGroup,
    pub sd: &'a SplitData,
    pub frame: &'a SplitFrame<f64>,
    pub f: CoeffTable,
    pub weight: Q,
    /// ᾱ with ‖ᾱ‖₁ = q, or γ̄ with ‖γ̄‖₁ = q + ell
    pub alpha: CountVector,
    pub ell: u32,
    /// whether f is a genuine modular form (enables the unfolding check)
    pub modular: bool,
    pub quad: QuadParams,
    pub trunc: Truncation,
}

/// κ = (p+q)/2 + ell.
pub fn lift_weight(l: &GramLattice, ell: u32) -> Q {
    let (p, qq) = l.signature();
    Q::new(((p + qq) as i64).into(), 2.into()) + q(ell as i64)
}

impl<'a> LiftRequest<'a> {
    pub fn new(
        lattice: &'a GramLattice,
        disc: &'a DiscriminantGroup,
        sd: &'a SplitData,
        frame: &'a SplitFrame<f64>,
        f: CoeffTable,
        alpha: CountVector,
        ell: u32,
    ) -> Self {
        LiftRequest {
            lattice,
            disc,
            sd,
            frame,
            f,
            weight: lift_weight(lattice, ell),
            alpha,
            ell,
            modular: false,
            quad: QuadParams::default(),
            trunc: Truncation::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (p, qq) = self.lattice.signature();
        let k = lift_weight(self.lattice, self.ell);
        if k != self.weight {
            return Err(LiftError::WeightMismatch { expected: fmt_q(&k), got: fmt_q(&self.weight) });
        }
        if self.alpha.p() != p || self.alpha.norm() as usize != qq + self.ell as usize {
            return Err(LiftError::BadAlpha(self.alpha.to_string()));
        }
        if self.f.by_coset.len() != self.disc.len() {
            return Err(LiftError::Theta(ThetaError::IndexMismatch(format!(
                "table has {} cosets, group {}",
                self.f.by_coset.len(),
                self.disc.len()
            ))));
        }
        if self.frame.p != p || self.frame.q != qq {
            return Err(LiftError::Unsupported("frame signature differs from the lattice".into()));
        }
        Ok(())
    }

    fn kappa(&self) -> f64 {
        q_to_f64(&self.weight)
    }
}

/// A request together with the precomputed K-side data.
pub struct Lift<'a> {
    pub req: &'a LiftRequest<'a>,
    pub ctx: SplitContext<'a>,
    /// ambient p^{h,0}, h = 0..=‖ᾱ‖₁
    pub parts: Vec<Poly<f64>>,
    kernels: Vec<ThetaKernel>,
    explaps: Vec<ExpLaplacian>,
    u_norm: f64,
}

impl<'a> Lift<'a> {
    pub fn new(req: &'a LiftRequest<'a>) -> Result<Self> {
        req.validate()?;
        let ctx = SplitContext::new(req.lattice, req.disc, req.sd, req.frame)?;
        let n = req.frame.n();
        // restricted to W, where they are evaluated
        let mut parts: Vec<Poly<f64>> = ctx
            .u_parts(&p_alpha(&req.alpha, n))?
            .iter()
            .map(|pp| pp.substitute_linear(&req.frame.projector, n))
            .collect();
        // round-off left over at exact frames
        let big = parts.iter().flat_map(|pp| pp.terms.values()).fold(0.0f64, |m, c| m.max(c.abs()));
        for pp in &mut parts {
            pp.terms.retain(|_, c| c.abs() > 1e-13 * big);
        }
        let kernels: Vec<ThetaKernel> = parts.iter().map(|pp| ctx.theta_k_kernel(pp, 0)).collect();
        let explaps = parts.iter().map(|pp| ExpLaplacian::new(pp, Some(&req.frame.projector))).collect();
        let u_norm = req.frame.u_perp_sq.sqrt();
        Ok(Lift { req, ctx, parts, kernels, explaps, u_norm })
    }

    fn qq(&self) -> usize {
        self.req.frame.q
    }

    fn h_max(&self) -> usize {
        self.parts.len().saturating_sub(1)
    }

    /// Largest r kept at height y.
    pub fn r_cutoff(&self, y: f64) -> i64 {
        let u2 = self.req.frame.u_perp_sq;
        let hm = self.h_max() as i32;
        let mut r = 1i64;
        loop {
            let rf = r as f64;
            let w = (-PI * rf * rf / (2.0 * y * u2)).exp() * rf.powi(hm).max(1.0);
            if w < self.req.trunc.gauss_cut || r > 100_000 {
                return r - 1;
            }
            r += 1;
        }
    }

    /// h_ᾱ(x + iy) with μ replaced by μ + v (v in K coordinates), on the
    /// grid xs × vs; result indexed `[v][x]`.
    pub fn h_grid(&self, y: f64, xs: &[f64], vs: &[Vec<f64>], r_max: Option<i64>) -> Result<Vec<Vec<C64>>> {
        let req = self.req;
        let kr = req.sd.k_rank();
        let kgram = req.sd.k_lattice.gram_f64();
        let nk = req.sd.k_disc.len();
        let pref = 1.0 / (2f64.sqrt() * self.u_norm);
        let kappa = req.kappa();
        let mut out = vec![vec![C64::zero(); xs.len()]; vs.len()];
        let rmax = r_max.unwrap_or_else(|| self.r_cutoff(y));
        let nu = vec![0.0; kr];
        for r in 1..=rmax {
            let rf = r as f64;
            let gauss = (-PI * rf * rf / (2.0 * y * req.frame.u_perp_sq)).exp();
            let fk = f_to_fk(req.lattice, req.disc, req.sd, &req.f, -r, 0)?;
            // F_K(x + iy; −r, 0) per x and coset
            let fv: Vec<Vec<C64>> = xs
                .iter()
                .map(|&x| {
                    fk.by_coset
                        .iter()
                        .map(|m| m.iter().map(|(n, c)| c * e(q_to_f64(n) * x) * (-2.0 * PI * q_to_f64(n) * y).exp()).sum())
                        .collect()
                })
                .collect();
            for (h, kern) in self.kernels.iter().enumerate() {
                if kern.poly.is_zero() {
                    continue;
                }
                let fac = C64::new(0.0, 2.0).powi(-(h as i32)) * rf.powi(h as i32) * y.powf(kappa - h as f64) * gauss;
                if fac.norm() == 0.0 {
                    continue;
                }
                let rad = kern.radius_for(y, req.trunc.tail_target / fac.norm())?;
                let pts = kern.points(y, &self.ctx.k_reps, &nu, rad)?;
                // per point: base phase and the functional v ↦ (λ, v)
                let data: Vec<Vec<(f64, f64, f64, Vec<f64>)>> = pts
                    .iter()
                    .map(|comp| {
                        comp.iter()
                            .map(|pt| {
                                let mu: f64 = pt.lam.iter().zip(&self.ctx.k_mu).map(|(a, b)| a * b).sum();
                                let lv: Vec<f64> = (0..kr).map(|i| (0..kr).map(|j| kgram[i][j] * pt.lam[j]).sum()).collect();
                                (pt.amp, pt.half_norm, -rf * mu, lv)
                            })
                            .collect()
                    })
                    .collect();
                let rows: Vec<Vec<C64>> = vs
                    .par_iter()
                    .map(|v| {
                        xs.iter()
                            .enumerate()
                            .map(|(xi, &x)| {
                                let mut s = C64::zero();
                                for g in 0..nk {
                                    let th = compensated_sum(data[g].iter().map(|(amp, hn, ph, lv)| {
                                        let pv: f64 = lv.iter().zip(v).map(|(a, b)| a * b).sum();
                                        *amp * e(x * hn + ph - rf * pv)
                                    }));
                                    s += fv[xi][g] * th.conj();
                                }
                                s
                            })
                            .collect()
                    })
                    .collect();
                for (o, row) in out.iter_mut().zip(rows) {
                    for (a, b) in o.iter_mut().zip(row) {
                        *a += pref * fac * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn h_alpha(&self, tau: C64) -> Result<C64> {
        self.h_alpha_cutoff(tau, None)
    }

    pub fn h_alpha_cutoff(&self, tau: C64, r_max: Option<i64>) -> Result<C64> {
        if !(tau.im > 0.0) {
            return Err(ThetaError::BadTau.into());
        }
        let v = vec![0.0; self.req.sd.k_rank()];
        Ok(self.h_grid(tau.im, &[tau.re], &[v], r_max)?[0][0])
    }

    /// h_ᾱ by expanding F_K and Θ_K summand by summand, with the
    /// polynomial split in coordinates of W (independent code path).
    pub fn h_alpha_termwise(&self, tau: C64) -> Result<C64> {
        let req = self.req;
        let fr = req.frame;
        let (x, y) = (tau.re, tau.im);
        let sd = req.sd;
        let kr = sd.k_rank();
        let n = fr.n();
        let wb = fr.w_basis();
        let nw = if n >= 2 { n - 2 } else { 0 };
        let decomp = u_decompose(&p_alpha(&req.alpha, n), fr, DecomposeMethod::Oracle)?;
        // Euclidean metric of W in the basis wb, inverted
        let gw: Mat<f64> = (0..nw).map(|i| (0..nw).map(|j| (0..n).map(|k| wb[k][i] * wb[k][j]).sum()).collect()).collect();
        let gw_inv = if nw == 0 { vec![] } else { linalg::inverse(&gw).ok_or_else(|| LiftError::Unsupported("W basis".into()))? };
        let coords = |xs: &[f64]| -> Vec<f64> {
            let b: Vec<f64> = (0..nw).map(|i| (0..n).map(|k| wb[k][i] * xs[k]).sum()).collect();
            linalg::mat_vec(&gw_inv, &b)
        };
        let kappa = req.kappa();
        let pref = 1.0 / (2f64.sqrt() * fr.u_perp_sq.sqrt());
        let kgram = sd.k_lattice.gram_q();
        let mut total = C64::zero();
        for r in 1..=self.r_cutoff(y) {
            let rf = r as f64;
            let gauss = (-PI * rf * rf / (2.0 * y * fr.u_perp_sq)).exp();
            for ((h, mm), poly) in &decomp {
                assert_eq!(*mm, 0);
                let fac = C64::new(0.0, 2.0).powi(-(*h as i32)) * rf.powi(*h as i32) * y.powf(kappa - *h as f64) * gauss;
                // exp(−Δ/8πy) on W
                let mut pe = Poly::zero(nw);
                let mut term = poly.clone();
                let mut w = 1.0;
                let mut m = 0;
                while !term.is_zero() {
                    pe = pe.add(&term.scale(&w));
                    term = term.laplacian_metric(&gw_inv);
                    m += 1;
                    w *= -1.0 / (8.0 * PI * y * m as f64);
                }
                let kern = &self.kernels[*h as usize];
                let rad = kern.radius_for(y, req.trunc.tail_target / fac.norm().max(1e-300))?;
                for (gk, fiber) in sd.fibers.iter().enumerate() {
                    let mut fval = C64::zero();
                    for &li in fiber {
                        let ph = e(rf * q_to_f64(&req.lattice.pair(req.disc.rep(li), &sd.u_prime)));
                        for (nn, c) in &req.f.by_coset[li] {
                            fval += ph * c * (C64::new(0.0, 2.0 * PI * q_to_f64(nn)) * tau).exp();
                        }
                    }
                    if fval == C64::zero() {
                        continue;
                    }
                    let rep = sd.k_disc.rep(gk);
                    let shift: Vec<f64> = rep.iter().map(q_to_f64).collect();
                    let mut th = C64::zero();
                    for k in enumerate_box(kern.majorant(), &shift, rad)? {
                        let lam: Vec<Q> = (0..kr).map(|i| q(k[i]) + &rep[i]).collect();
                        let qn = q_to_f64(&linalg::form(&kgram, &lam, &lam)) / 2.0;
                        let amb: Vec<f64> = sd.embed_k(&lam).iter().map(q_to_f64).collect();
                        let xs = fr.g_sharp(&amb);
                        let norm: f64 = xs.iter().map(|t| t * t).sum();
                        let lm = fr.pair(&amb, &fr.mu);
                        let val = pe.eval_f64(&coords(&xs)) * (-PI * y * norm).exp();
                        th += val * e(x * qn - rf * lm);
                    }
                    total += pref * fac * fval * (y.powf((fr.q as f64 - 1.0) / 2.0) * th).conj();
                }
            }
        }
        Ok(total)
    }
}

/// `∫₀^∞ y^s e^{−Ay−B/y} dy`.
pub fn y_integral(s: f64, a: f64, b: f64, method: YMethod, tol: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        if a > 0.0 && b == 0.0 && s > -1.0 {
            return Ok(puruspe::gamma(s + 1.0) / a.powf(s + 1.0));
        }
        if b > 0.0 && a <= 0.0 && s < -1.0 {
            return Ok(puruspe::gamma(-s - 1.0) * b.powf(s + 1.0));
        }
        return Err(LiftError::DivergentIntegral { s, a });
    }
    match method {
        YMethod::Bessel => {
            let x = 2.0 * (a * b).sqrt();
            if x > 1400.0 {
                return Ok(0.0);
            }
            let (_, k) = puruspe::Inu_Knu((s + 1.0).abs(), x);
            Ok(2.0 * (b / a).powf((s + 1.0) / 2.0) * k)
        }
        YMethod::Quadrature => Ok(log_trapezoid(s, a, b, tol)),
    }
}

/// Trapezoid rule in v = log y, where the integrand decays doubly
/// exponentially at both ends; the step is halved until stable.
fn log_trapezoid(s: f64, a: f64, b: f64, tol: f64) -> f64 {
    let g = |v: f64| (s + 1.0) * v - a * v.exp() - b * (-v).exp();
    let c = s + 1.0;
    let v0 = ((c + (c * c + 4.0 * a * b).sqrt()) / (2.0 * a)).ln();
    let gmax = g(v0);
    let cut = gmax - 60.0;
    let mut lo = v0 - 1.0;
    while g(lo) > cut {
        lo -= 1.0;
    }
    let mut hi = v0 + 1.0;
    while g(hi) > cut {
        hi += 1.0;
    }
    let mut h = 0.5;
    let mut prev = f64::NAN;
    loop {
        let n = ((hi - lo) / h).ceil() as i64;
        let sum = compensated_sum((0..=n).map(|i| C64::new((g(lo + i as f64 * h) - gmax).exp(), 0.0))).re;
        let val = sum * h * gmax.exp();
        if (val - prev).abs() <= tol * val.abs() || h < 1e-4 {
            return val;
        }
        prev = val;
        h /= 2.0;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierPiece {
    pub t: i64,
    pub h: u32,
    pub value: [f64; 2],
}

/// The coefficient c_λ(g) of e((λ,μ)).
#[derive(Clone, Debug, PartialEq)]
pub struct FourierResult {
    pub lam: Vec<Q>,
    pub value: C64,
    pub pieces: Vec<FourierPiece>,
    pub method: YMethod,
    /// q(λ) < 0: the coefficient vanishes since f has no such terms
    pub negative_norm: bool,
}

/// Positive divisors of a nonzero integer.
fn divisors(g: i64) -> Vec<i64> {
    let g = g.abs();
    (1..=g).filter(|t| g % t == 0).collect()
}

impl Lift<'_> {
    fn k_dual_check(&self, lam: &[Q]) -> Result<Vec<i64>> {
        let sd = self.req.sd;
        if lam.len() != sd.k_rank() || !sd.k_lattice.is_dual(lam) {
            return Err(LiftError::NotInDual);
        }
        Ok(sd.k_lattice.apply(lam).iter().map(|x| x.to_integer().to_i64().unwrap_or(0)).collect())
    }

    /// `(√2/|u|)(t/2i)^h ∫ y^{s−m}… exp(−Δ/8πy)p^{h,0}(g♯(λ/t)) dy` for one cell.
    pub fn cell(&self, lam_t: &[Q], t: i64, h: usize, method: YMethod) -> Result<C64> {
        let fr = self.req.frame;
        let el = &self.explaps[h];
        if el.is_zero() {
            return Ok(C64::zero());
        }
        let amb: Vec<f64> = self.req.sd.embed_k(lam_t).iter().map(q_to_f64).collect();
        let xs = fr.g_sharp(&amb);
        let xp: f64 = xs[..fr.p].iter().map(|v| v * v).sum();
        let (p, qq) = (fr.p as f64, self.qq() as f64);
        let s = qq + self.req.ell as f64 + (p - 5.0) / 2.0 - h as f64;
        let tf = t as f64;
        let a = 2.0 * PI * xp;
        let b = PI * tf * tf / (2.0 * fr.u_perp_sq);
        let mut acc = 0.0;
        for (m, val) in el.eval_parts(&xs).into_iter().enumerate() {
            if val == 0.0 {
                continue;
            }
            acc += val * y_integral(s - m as f64, a, b, method, self.req.quad.tol)?;
        }
        let pref = 2f64.sqrt() / self.u_norm;
        Ok(pref * (C64::new(0.0, 2.0) / tf).powi(-(h as i32)) * acc)
    }

    /// `Σ_{λ₂ ∈ L₀′/L, p(λ₂) = λ/t} e(t(λ₂,u′)) c(f_{λ₂}, q(λ)/t²)`.
    fn fiber_sum(&self, lam_t: &[Q], t: i64, n: &Q) -> Result<C64> {
        let req = self.req;
        let gk = req.sd.k_disc.index_of(lam_t)?;
        let mut s = C64::zero();
        for &li in &req.sd.fibers[gk] {
            let c = req.f.get(li, n);
            if c != C64::zero() {
                s += e(t as f64 * q_to_f64(&req.lattice.pair(req.disc.rep(li), &req.sd.u_prime))) * c;
            }
        }
        Ok(s)
    }

    /// `e((λ,μ))` for the frame of the request.
    pub fn mu_phase(&self, lam: &[Q]) -> C64 {
        e(lam.iter().zip(&self.ctx.k_mu).map(|(a, b)| q_to_f64(a) * b).sum())
    }

    /// `c_λ(g)·e((λ,μ))`.
    pub fn fourier_term(&self, lam: &[Q], method: YMethod) -> Result<C64> {
        Ok(self.fourier_coefficient(lam, method)?.value * self.mu_phase(lam))
    }

    /// The Fourier coefficient of λ ∈ K′ (K coordinates).
    pub fn fourier_coefficient(&self, lam: &[Q], method: YMethod) -> Result<FourierResult> {
        let pair_k = self.k_dual_check(lam)?;
        if lam.iter().all(|x| x.is_zero()) {
            return Err(LiftError::ConstantTerm);
        }
        let qn = self.req.sd.k_lattice.norm(lam);
        let mut res = FourierResult { lam: lam.to_vec(), value: C64::zero(), pieces: vec![], method, negative_norm: false };
        if qn.is_negative() {
            res.negative_norm = true;
            return Ok(res);
        }
        let g = pair_k.iter().fold(0i64, |a, b| a.gcd(b));
        let cells: Vec<(i64, usize)> =
            divisors(g)
            .into_iter()
            .flat_map(|t| (0..self.parts.len()).filter(|&h| !self.explaps[h].is_zero()).map(move |h| (t, h)))
            .collect();
        let pieces: Vec<Result<Option<FourierPiece>>> = cells
            .par_iter()
            .map(|&(t, h)| {
                let tq = q(t);
                let lam_t: Vec<Q> = lam.iter().map(|x| x / &tq).collect();
                let n = &qn / (&tq * &tq);
                let fs = self.fiber_sum(&lam_t, t, &n)?;
                if fs == C64::zero() {
                    return Ok(None);
                }
                let v = fs * self.cell(&lam_t, t, h, method)?;
                Ok(Some(FourierPiece { t, h: h as u32, value: [v.re, v.im] }))
            })
            .collect();
        for p in pieces {
            if let Some(p) = p? {
                res.value += C64::new(p.value[0], p.value[1]);
                res.pieces.push(p);
            }
        }
        Ok(res)
    }
}

/// Both evaluations of the λ-term of `2∫_{Γ∞\ℍ} h_ᾱ dx dy/y²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StripCheck {
    pub series: [f64; 2],
    pub quadrature: [f64; 2],
    pub residual: f64,
    /// step-halving estimate of the quadrature error
    pub quad_error: f64,
}

impl Lift<'_> {
    /// Integrates h_ᾱ numerically over the strip after isolating the
    /// e((λ,μ))-term by averaging over translates μ + v, v ∈ (K⊗ℝ)/K.
    pub fn strip_integral_check(&self, lam: &[Q], method: YMethod) -> Result<StripCheck> {
        let series = self.fourier_coefficient(lam, method)?.value;
        let req = self.req;
        let kr = req.sd.k_rank();
        let pair_k: Vec<f64> = self.k_dual_check(lam)?.iter().map(|&x| x as f64).collect();
        let lam_f: Vec<f64> = lam.iter().map(q_to_f64).collect();
        let lam_mu: f64 = lam_f.iter().zip(&self.ctx.k_mu).map(|(a, b)| a * b).sum();
        let nx = req.quad.nx;
        let xs: Vec<f64> = (0..nx).map(|i| i as f64 / nx as f64).collect();
        let m = req.quad.torus;
        let mut vs: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..kr {
            vs = vs.into_iter().flat_map(|v| (0..m).map(move |j| [v.clone(), vec![j as f64 / m as f64]].concat())).collect();
        }
        let weights: Vec<C64> = vs
            .iter()
            .map(|v| e(-(lam_mu + pair_k.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())))
            .collect();
        let n_min = match req.f.n_min() {
            Some(n) => q_to_f64(&n),
            None => return Ok(StripCheck { series: [series.re, series.im], quadrature: [0.0; 2], residual: series.norm(), quad_error: 0.0 }),
        };
        let y_lo = PI / (2.0 * req.frame.u_perp_sq * 50.0);
        let y_hi = 50.0 / (2.0 * PI * n_min);
        let hstep = req.quad.log_y_step;
        let (a0, a1) = (y_lo.ln(), y_hi.ln());
        let nodes = ((a1 - a0) / hstep).ceil() as usize;
        let total = nx as f64 * vs.len() as f64;
        let vals: Vec<Result<C64>> = (0..=nodes)
            .into_par_iter()
            .map(|i| {
                let y = (a0 + i as f64 * hstep).exp();
                let grid = self.h_grid(y, &xs, &vs, None)?;
                let s: C64 = grid.iter().zip(&weights).map(|(row, w)| w * row.iter().sum::<C64>()).sum();
                // 2·g(y)/y² · dy, dy = y dv
                Ok(2.0 * s / total / y)
            })
            .collect();
        let vals: Vec<C64> = vals.into_iter().collect::<Result<_>>()?;
        let fine = compensated_sum(vals.iter().copied()) * hstep;
        let coarse = compensated_sum(vals.iter().step_by(2).copied()) * (2.0 * hstep);
        Ok(StripCheck {
            series: [series.re, series.im],
            quadrature: [fine.re, fine.im],
            residual: (fine - series).norm(),
            quad_error: (fine - coarse).norm(),
        })
    }
}

/// Residuals of the algebraic steps behind the unfolding.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitCheck {
    /// pairing with the sublattice
    pub pairing: f64,
    /// theta splitting
    pub splitting: f64,
    /// full kernel identity, only for modular f
    pub unfolding: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Formal,
    Modular,
}

impl Lift<'_> {
    /// The constant part `y^κ/(√2|u|)⟨F_K(τ;0,0), Θ_K(τ, p^{0,0})⟩`.
    pub fn constant_integrand(&self, tau: C64) -> Result<C64> {
        let req = self.req;
        let kern = &self.kernels[0];
        let fk = f_to_fk(req.lattice, req.disc, req.sd, &req.f, 0, 0)?.eval(tau);
        let rad = kern.radius_for(tau.im, req.trunc.tail_target)?;
        let th = self.ctx.theta_k(kern, tau, 0.0, rad)?;
        let s: C64 = fk.iter().zip(&th.components).map(|(a, b)| a * b.conj()).sum();
        Ok(tau.im.powf(req.kappa()) / (2f64.sqrt() * self.u_norm) * s)
    }

    /// `y^κ⟨f(τ), Θ_L(τ, g, P_ᾱ)⟩`.
    pub fn lift_integrand(&self, tau: C64) -> Result<C64> {
        let req = self.req;
        let n = req.frame.n();
        let base = ThetaRequest {
            lattice: req.lattice,
            disc: req.disc,
            tau,
            delta: vec![0.0; n],
            nu: vec![0.0; n],
            chart: req.frame.chart.clone(),
            poly: p_alpha(&req.alpha, n),
            radius: 1.0,
        };
        let rad = base.kernel()?.radius_for(tau.im, req.trunc.tail_target)?;
        let th = siegel_theta(&ThetaRequest { radius: rad, ..base })?;
        let fv = req.f.eval(tau);
        let s: C64 = fv.iter().zip(&th.components).map(|(a, b)| a * b.conj()).sum();
        Ok(tau.im.powf(req.kappa()) * s)
    }

    pub fn integrand_split_check(&self, tau: C64, mode: CheckMode) -> Result<SplitCheck> {
        let req = self.req;
        let fv = req.f.eval(tau);
        let mut pairing = 0.0f64;
        for kern in &self.kernels {
            if kern.poly.is_zero() {
                continue;
            }
            let rad = kern.radius_for(tau.im, req.trunc.tail_target)?;
            for r in 0..=3i64 {
                let th = self.ctx.theta_k(kern, tau, r as f64, rad)?;
                for sgn in [-1, 1] {
                    let (a, b) = pairing_sides(&self.ctx, &fv, &th.components, sgn * r);
                    pairing = pairing.max((a - b).norm());
                }
            }
        }
        let params = SplitParams { coset_cutoff: req.trunc.coset_cutoff, ..SplitParams::default() };
        let (lhs, rhs) = split_theta_sides(&self.ctx, tau, &p_alpha(&req.alpha, req.frame.n()), &params)?;
        let splitting = lhs.sup_dist(&rhs);
        let unfolding = match mode {
            CheckMode::Formal => None,
            CheckMode::Modular => {
                if !(req.modular || req.f.is_zero()) {
                    return Err(LiftError::ModeMismatch);
                }
                let lhs = self.lift_integrand(tau)? - self.constant_integrand(tau)?;
                let mut acc = C64::zero();
                for g in coset_reps(req.trunc.coset_cutoff, params.d_factor) {
                    let word = decompose_sl2(g).map_err(|e| ThetaError::WordDecompositionFailure(e.to_string()))?;
                    let (_, gt) = mp2_phi(&word, tau);
                    acc += self.h_alpha(gt)?;
                }
                Some((lhs - acc).norm())
            }
        };
        Ok(SplitCheck { pairing, splitting, unfolding })
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jm = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jm.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectIntegral {
    pub value: [f64; 2],
    /// bound on the part above y_max
    pub tail_bound: f64,
    pub y_max: f64,
}

impl Lift<'_> {
    /// `∫_{SL₂(ℤ)\ℍ} y^κ⟨f, Θ_L(τ,g,P_ᾱ)⟩ dx dy/y²` on the standard
    /// fundamental domain cut at y_max, with a bound on the rest.
    pub fn direct_lift_integral(&self) -> Result<DirectIntegral> {
        let req = self.req;
        let ymax = req.trunc.y_max;
        if req.f.is_zero() {
            return Ok(DirectIntegral { value: [0.0; 2], tail_bound: 0.0, y_max: ymax });
        }
        let (gx, gw) = gauss_legendre(req.quad.fd_nodes);
        // panels in y: [√(1−x²), 1.5], then doubling up to y_max
        let mut edges = vec![1.5];
        while *edges.last().unwrap() < ymax {
            let nxt = (edges.last().unwrap() * 2.0).min(ymax);
            edges.push(nxt);
        }
        let mut cells: Vec<(f64, f64)> = Vec::new();
        for (xi, xw) in gx.iter().zip(&gw) {
            let x = xi / 2.0;
            let wx = xw / 2.0;
            let y0 = (1.0 - x * x).sqrt();
            let mut lo = y0;
            for &hi in &edges {
                if hi <= lo {
                    continue;
                }
                for (yi, yw) in gx.iter().zip(&gw) {
                    let y = lo + (hi - lo) * (yi + 1.0) / 2.0;
                    cells.push((x, y));
                    let _ = yw;
                }
                lo = hi;
            }
            let _ = wx;
        }
        // recompute with weights in the same order
        let mut weights = Vec::with_capacity(cells.len());
        for (xi, xw) in gx.iter().zip(&gw) {
            let x = xi / 2.0;
            let y0 = (1.0 - x * x).sqrt();
            let mut lo = y0;
            for &hi in &edges {
                if hi <= lo {
                    continue;
                }
                for yw in &gw {
                    weights.push(xw / 2.0 * yw * (hi - lo) / 2.0);
                }
                lo = hi;
            }
        }
        let vals: Vec<Result<C64>> = cells
            .par_iter()
            .map(|&(x, y)| Ok(self.lift_integrand(C64::new(x, y))? / (y * y)))
            .collect();
        let mut terms = Vec::with_capacity(vals.len());
        for (v, w) in vals.into_iter().zip(&weights) {
            terms.push(v? * w);
        }
        let value = compensated_sum(terms);
        Ok(DirectIntegral { value: [value.re, value.im], tail_bound: self.fd_tail(ymax)?, y_max: ymax })
    }

    /// `∫_{y_max}^∞ y^{κ+e−2} Σ_γ S_γ Σ_n |c(f_γ,n)| e^{−2πny} dy` with S_γ
    /// bounding the theta component divided by y^e.
    fn fd_tail(&self, ymax: f64) -> Result<f64> {
        let req = self.req;
        let n = req.frame.n();
        let base = ThetaRequest {
            lattice: req.lattice,
            disc: req.disc,
            tau: C64::new(0.0, ymax),
            delta: vec![0.0; n],
            nu: vec![0.0; n],
            chart: req.frame.chart.clone(),
            poly: p_alpha(&req.alpha, n),
            radius: 1.0,
        };
        let kern = base.kernel()?;
        let rad = kern.radius_for(ymax, 1e-12)?;
        let reps: Vec<Vec<f64>> = req.disc.reps().iter().map(|r| r.iter().map(q_to_f64).collect()).collect();
        let s = kern.abs_bound(ymax, &reps, rad)?;
        let a = req.kappa() + kern.y_power - 2.0;
        let mut tot = 0.0;
        for (g, m) in req.f.by_coset.iter().enumerate() {
            for (nn, c) in m {
                let lam = 2.0 * PI * q_to_f64(nn);
                let inc = puruspe::gamma(a + 1.0) * puruspe::gammq(a + 1.0, lam * ymax) / lam.powf(a + 1.0);
                tot += s[g] * c.norm() * inc;
            }
        }
        Ok(tot)
    }
}

/// The gauge frame: the block chart composed with the swap e_{α₁} ↔ e_p
/// and the sign change of e_{p+1}.
pub fn gauge_chart(blocks: &[Block], alpha1: usize) -> Result<Mat<QSqrt2>> {
    let l = crate::lattice_core::build_lattice(block_gram(blocks))?;
    let (p, qq) = l.signature();
    if p <= 1 || alpha1 == 0 || alpha1 >= p || !matches!(blocks.last(), Some(Block::U(1))) {
        return Err(LiftError::BadSignature { p, q: qq, alpha1 });
    }
    let bc = block_chart(blocks).ok_or_else(|| LiftError::Unsupported("no exact chart for these blocks".into()))?;
    Ok(linalg::mat_mul(&to_qsqrt2(&gauge_std(p, qq, alpha1)), &bc))
}

/// `u, u′` = standard generators of the trailing U.
pub fn trailing_u(blocks: &[Block]) -> (Vec<Q>, Vec<Q>) {
    let n: usize = blocks.iter().map(|b| b.rank()).sum();
    let mut u = vec![q(0); n];
    let mut up = vec![q(0); n];
    u[n - 2] = q(1);
    up[n - 1] = q(1);
    (u, up)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeReport {
    /// the stabilizer element in standard coordinates
    pub g: Vec<Vec<i64>>,
    pub det: i64,
    pub fixes_base_point: bool,
    /// (h⁺, h⁻) ↦ p^{h⁺,h⁻} on W, for both decomposition methods
    pub closed_form: BTreeMap<String, String>,
    pub oracle: BTreeMap<String, String>,
    /// both equal 2^{q+ℓ}·[h⁺ = q+ℓ]
    pub ok: bool,
}

/// Builds the gauge element for `ᾱ = (α₁,…,α₁)` and checks the
/// decomposition of P_ᾱ exactly.
pub fn gauge_isometry(blocks: &[Block], alpha1: usize, ell: u32) -> Result<GaugeReport> {
    let l = crate::lattice_core::build_lattice(block_gram(blocks))?;
    let (p, qq) = l.signature();
    let chart = gauge_chart(blocks, alpha1)?;
    let g = gauge_std(p, qq, alpha1);
    let det = linalg::det(&g).to_integer().to_i64().unwrap_or(0);
    let fixes = (0..p).all(|i| (p..p + qq).all(|j| g[i][j].is_zero() && g[j][i].is_zero()));
    let (u, up) = trailing_u(blocks);
    let fr = SplitFrame::from_chart(&l, chart, &u, &up)?;
    let deg = qq as u32 + ell;
    let mut m = vec![0u32; p];
    m[alpha1 - 1] = deg;
    let poly = km_poly(&CountVector::new(m), KmMode::P).to_qsqrt2()?;
    let want = QSqrt2::new(q(1i64 << deg), Q::zero());
    let mut ok = true;
    let mut maps = Vec::new();
    for method in [DecomposeMethod::ClosedForm, DecomposeMethod::Oracle] {
        let parts = u_decompose(&poly, &fr, method)?;
        let good = parts.len() == 1
            && parts.get(&(deg, 0)).is_some_and(|pp| pp.terms.len() == 1 && pp.terms.iter().all(|(e, c)| e.iter().all(|x| *x == 0) && *c == want));
        ok &= good;
        maps.push(parts.iter().map(|((a, b), pp)| (format!("{a},{b}"), pp.to_string())).collect());
    }
    let oracle = maps.pop().unwrap();
    let closed_form = maps.pop().unwrap();
    Ok(GaugeReport {
        g: g.iter().map(|r| r.iter().map(|x| x.to_integer().to_i64().unwrap_or(0)).collect()).collect(),
        det,
        fixes_base_point: fixes,
        closed_form,
        oracle,
        ok: ok && det == 1 && fixes,
    })
}

/// Fourier coefficients at one gauge frame, keyed by λ ∈ K′.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTable {
    pub alpha1: usize,
    pub values: BTreeMap<Vec<Q>, C64>,
}

/// Nonzero λ ∈ K′ with `0 < q(λ) ≤ cutoff` and dual coordinates
/// `(λ, k_i)` bounded by `bound`.
pub fn positive_dual_vectors(sd: &SplitData, cutoff: &Q, bound: i64) -> Vec<Vec<Q>> {
    let kr = sd.k_rank();
    let inv = linalg::inverse(&sd.k_lattice.gram_q()).unwrap_or_default();
    let mut ms: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..kr {
        ms = ms.into_iter().flat_map(|m| (-bound..=bound).map(move |x| [m.clone(), vec![x]].concat())).collect();
    }
    let mut out: Vec<Vec<Q>> = ms
        .into_iter()
        .map(|m| linalg::mat_vec(&inv, &m.iter().map(|&x| q(x)).collect::<Vec<_>>()))
        .filter(|lam| {
            let n = sd.k_lattice.norm(lam);
            n.is_positive() && &n <= cutoff
        })
        .collect();
    out.sort_by(|a, b| sd.k_lattice.norm(a).cmp(&sd.k_lattice.norm(b)).then_with(|| a.cmp(b)));
    out
}

/// The setting of the recovery procedure: a lattice `M ⊕ U` given by
/// blocks with U last, and the twist degree.
pub struct GaugeSetting<'a> {
    pub lattice: &'a GramLattice,
    pub disc: &'a DiscriminantGroup,
    pub sd: &'a SplitData,
    pub blocks: &'a [Block],
    pub ell: u32,
}

impl GaugeSetting<'_> {
    fn frame(&self, alpha1: usize) -> Result<SplitFrame<f64>> {
        let chart = gauge_chart(self.blocks, alpha1)?;
        Ok(SplitFrame::from_chart(self.lattice, chart, &self.sd.u, &self.sd.u_prime)?.to_f64())
    }

    fn alpha(&self, alpha1: usize) -> CountVector {
        let (p, qq) = self.lattice.signature();
        let mut m = vec![0u32; p];
        m[alpha1 - 1] = qq as u32 + self.ell;
        CountVector::new(m)
    }

    /// Forward direction: coefficient tables of f at the gauge frames.
    pub fn tables(&self, f: &CoeffTable, alpha1s: &[usize], lams: &[Vec<Q>]) -> Result<Vec<GaugeTable>> {
        let mut out = Vec::new();
        for &a in alpha1s {
            let fr = self.frame(a)?;
            let req = LiftRequest::new(self.lattice, self.disc, self.sd, &fr, f.clone(), self.alpha(a), self.ell);
            let lift = Lift::new(&req)?;
            let mut values = BTreeMap::new();
            for lam in lams {
                values.insert(lam.clone(), lift.fourier_coefficient(lam, YMethod::Bessel)?.value);
            }
            out.push(GaugeTable { alpha1: a, values });
        }
        Ok(out)
    }
}

/// Recovered coefficients c(f_γ, n) and the keys the tables cannot reach.
#[derive(Clone, Debug, PartialEq)]
pub struct Elimination {
    pub recovered: BTreeMap<(usize, Q), C64>,
    pub unresolved: Vec<(usize, Q)>,
}

/// Inverts the gauge-frame Fourier coefficients by induction on the
/// divisibility of λ: at a gauge frame only the top h⁺ survives, so the
/// t = 1 cell is a nonzero multiple of the unknown c(f_γ, q(λ)).
pub fn eliminate_coefficients(set: &GaugeSetting, tables: &[GaugeTable], cutoff: &Q) -> Result<Elimination> {
    let sd = set.sd;
    if sd.fibers.iter().any(|f| f.len() != 1) {
        return Err(LiftError::Unsupported("recovery needs u in a unimodular hyperbolic summand (N = 1)".into()));
    }
    let mut estimates: BTreeMap<(usize, Q), Vec<C64>> = BTreeMap::new();
    for tab in tables {
        let fr = set.frame(tab.alpha1)?;
        // the unit table only feeds the cell weights, which do not read f
        let req = LiftRequest::new(set.lattice, set.disc, sd, &fr, CoeffTable::new(set.disc.len()), set.alpha(tab.alpha1), set.ell);
        let lift = Lift::new(&req)?;
        let top = lift.parts.len() - 1;
        let mut known: BTreeMap<(usize, Q), C64> = BTreeMap::new();
        let mut order: Vec<(&Vec<Q>, &C64)> = tab.values.iter().collect();
        order.sort_by(|a, b| sd.k_lattice.norm(a.0).cmp(&sd.k_lattice.norm(b.0)).then_with(|| a.0.cmp(b.0)));
        for (lam, val) in order {
            let qn = sd.k_lattice.norm(lam);
            if !qn.is_positive() || &qn > cutoff {
                continue;
            }
            let pair_k = lift.k_dual_check(lam)?;
            let g = pair_k.iter().fold(0i64, |a, b| a.gcd(b));
            let mut rhs = *val;
            let mut complete = true;
            for t in divisors(g).into_iter().filter(|&t| t > 1) {
                let tq = q(t);
                let lam_t: Vec<Q> = lam.iter().map(|x| x / &tq).collect();
                let li = sd.fibers[sd.k_disc.index_of(&lam_t)?][0];
                let n = &qn / (&tq * &tq);
                match known.get(&(li, n.clone())) {
                    Some(c) => {
                        let ph = e(t as f64 * q_to_f64(&set.lattice.pair(set.disc.rep(li), &sd.u_prime)));
                        let w: C64 = (0..=top).map(|h| lift.cell(&lam_t, t, h, YMethod::Bessel)).sum::<Result<C64>>()?;
                        rhs -= ph * c * w;
                    }
                    None => complete = false,
                }
            }
            if !complete {
                continue;
            }
            let li = sd.fibers[sd.k_disc.index_of(lam)?][0];
            let ph = e(q_to_f64(&set.lattice.pair(set.disc.rep(li), &sd.u_prime)));
            let w: C64 = (0..=top).map(|h| lift.cell(lam, 1, h, YMethod::Bessel)).sum::<Result<C64>>()?;
            if w.norm() == 0.0 {
                continue;
            }
            let c = rhs / (ph * w);
            known.entry((li, qn.clone())).or_insert(c);
            estimates.entry((li, qn)).or_default().push(c);
        }
    }
    let mut recovered = BTreeMap::new();
    for ((li, n), v) in estimates {
        let first = v[0];
        let spread = v.iter().map(|c| (c - first).norm()).fold(0.0, f64::max);
        if spread > 1e-6 * first.norm().max(1.0) {
            return Err(LiftError::InconsistentTables { coset: li, n: fmt_q(&n), spread });
        }
        recovered.insert((li, n), first);
    }
    let mut unresolved = Vec::new();
    for li in 0..set.disc.len() {
        let base = set.disc.q_mod1(li).clone();
        let mut n = if base.is_zero() { Q::one() } else { base };
        while &n <= cutoff {
            if !recovered.contains_key(&(li, n.clone())) {
                unresolved.push((li, n.clone()));
            }
            n += Q::one();
        }
    }
    Ok(Elimination { recovered, unresolved })
}

/// Coefficients of every ᾱ at one frame.
pub fn all_alpha_coefficients(
    l: &GramLattice,
    disc: &DiscriminantGroup,
    sd: &SplitData,
    frame: &SplitFrame<f64>,
    f: &CoeffTable,
    ell: u32,
    lams: &[Vec<Q>],
    method: YMethod,
) -> Result<Vec<(CountVector, Vec<FourierResult>)>> {
    let (p, qq) = l.signature();
    let mut out = Vec::new();
    for alpha in CountVector::all(p, qq as u32 + ell) {
        let req = LiftRequest::new(l, disc, sd, frame, f.clone(), alpha.clone(), ell);
        let lift = Lift::new(&req)?;
        let mut v = Vec::new();
        for lam in lams {
            v.push(lift.fourier_coefficient(lam, method)?);
        }
        out.push((alpha, v));
    }
    Ok(out)
}

/// A synthetic table with `c(f_γ, n) = w_γ·e^{−decay·n}`, for all
/// admissible n up to `n_max`, with fixed pseudo-random phases w_γ.
pub fn synthetic_table(disc: &DiscriminantGroup, n_max: &Q, decay: f64, seed: u64) -> CoeffTable {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut t = CoeffTable::new(disc.len());
    for li in 0..disc.len() {
        let base = disc.q_mod1(li).clone();
        let mut n = if base.is_zero() { Q::one() } else { base };
        while &n <= n_max {
            let w = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            t.insert(li, n.clone(), w * (-decay * q_to_f64(&n)).exp());
            n += Q::one();
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::{build_lattice, discriminant_group, split_data};

    #[test]
    fn bessel_matches_quadrature() {
        let k0 = 2.0 * puruspe::Inu_Knu(0.0, 2.0).1;
        let b = y_integral(-1.0, 1.0, 1.0, YMethod::Bessel, 1e-13).unwrap();
        let qd = y_integral(-1.0, 1.0, 1.0, YMethod::Quadrature, 1e-13).unwrap();
        assert!((b - k0).abs() < 1e-14 && (qd - k0).abs() < 1e-10, "{b} {qd} {k0}");
        for (s, a, bb) in [(-0.5, 2.0, 0.3), (1.5, 0.7, 4.0), (-3.5, 5.0, 0.2), (0.0, 10.0, 10.0), (2.5, 0.05, 0.1)] {
            let x = y_integral(s, a, bb, YMethod::Bessel, 1e-13).unwrap();
            let y = y_integral(s, a, bb, YMethod::Quadrature, 1e-13).unwrap();
            assert!((x - y).abs() < 1e-9 * x.abs().max(1e-300), "{s} {a} {bb}: {x} {y}");
        }
    }

    #[test]
    fn divergent_when_a_vanishes() {
        assert!(matches!(y_integral(0.5, 0.0, 1.0, YMethod::Bessel, 1e-12), Err(LiftError::DivergentIntegral { .. })));
        let v = y_integral(-2.5, 0.0, 1.0, YMethod::Bessel, 1e-12).unwrap();
        assert!((v - puruspe::gamma(1.5)).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn gauge_reports() {
        let r = gauge_isometry(&[Block::A1, Block::U(1)], 1, 0).unwrap();
        assert!(r.ok, "{r:?}");
        assert_eq!(r.closed_form.keys().collect::<Vec<_>>(), vec!["1,0"]);
        assert!(matches!(gauge_isometry(&[Block::A1Neg, Block::U(1)], 1, 0), Err(LiftError::BadSignature { .. })));
        let r = gauge_isometry(&[Block::A1, Block::A1, Block::A1Neg, Block::U(1)], 2, 0).unwrap();
        assert!(r.ok && r.det == 1);
        assert!(gauge_isometry(&[Block::A1, Block::U(1)], 1, 2).unwrap().ok);
    }

    #[test]
    fn weight_is_checked() {
        let blocks = [Block::A1, Block::U(1)];
        let l = build_lattice(block_gram(&blocks)).unwrap();
        let d = discriminant_group(&l).unwrap();
        let (u, up) = trailing_u(&blocks);
        let sd = split_data(&l, &d, &u, &up).unwrap();
        let fr = SplitFrame::from_chart(&l, block_chart(&blocks).unwrap(), &u, &up).unwrap().to_f64();
        let mut req = LiftRequest::new(&l, &d, &sd, &fr, CoeffTable::new(2), CountVector::new(vec![1, 0]), 0);
        assert_eq!(req.weight, Q::new(3.into(), 2.into()));
        req.weight = q(2);
        assert!(matches!(Lift::new(&req), Err(LiftError::WeightMismatch { .. })));
        req.weight = lift_weight(&l, 0);
        req.alpha = CountVector::new(vec![2, 0]);
        assert!(matches!(Lift::new(&req), Err(LiftError::BadAlpha(_))));
    }
}
