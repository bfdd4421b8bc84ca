//! The acceptance suite: eight groups of checks run against a lattice
//! corpus, each reported as records (name, value, tolerance, pass).

use crate::field::{parse_q, q, QSqrt2, Q};
use crate::grassmannian::{
    block_chart, chart_f64, eichler_k, eichler_residuals, frame_defects, grass_point, random_cayley, split_frame,
    to_qsqrt2, BaseFrame, Block, SplitFrame,
};
use crate::km_polynomials::{hermite, km_poly, exp_laplacian_check, u_decompose, CountVector, DecomposeMethod, KmMode, Poly};
use crate::lattice_core::{build_lattice, discriminant_group, split_data, DiscriminantGroup, GramLattice, SplitData};
use crate::lift::{
    all_alpha_coefficients, eliminate_coefficients, gauge_isometry, positive_dual_vectors, synthetic_table,
    y_integral, GaugeSetting, Lift, LiftRequest, YMethod,
};
use crate::linalg::{self, Mat};
use crate::theta::{
    modularity_defect, p_alpha, siegel_theta, siegel_theta_naive, split_theta_sides, sup_dist, CoeffTable, Generator,
    SplitContext, SplitParams, ThetaRequest,
};
use crate::weil_rep::{relation_defects, weil_generators};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// K₀(2), from standard tables.
const K0_OF_2: f64 = 0.113_893_872_749_533_435_65;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("corpus: {0}")]
    Corpus(String),
    #[error("{check} on {lattice}: {msg}")]
    Check { check: String, lattice: String, msg: String },
}

pub type Result<T> = std::result::Result<T, VerifyError>;

/// A lattice file: Gram matrix, optional block decomposition with an
/// exact chart, and the isotropic pair used for splitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeFile {
    pub name: String,
    pub gram: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_prime: Option<Vec<String>>,
    #[serde(default)]
    pub suites: Vec<String>,
}

pub fn parse_block(s: &str) -> std::result::Result<Block, String> {
    match s {
        "A1" => Ok(Block::A1),
        "A1-" => Ok(Block::A1Neg),
        _ => match s.strip_prefix('U').map(str::parse::<i64>) {
            Some(Ok(n)) if n > 0 => Ok(Block::U(n)),
            _ => Err(format!("unknown block {s:?}")),
        },
    }
}

fn parse_qvec(v: &[String]) -> std::result::Result<Vec<Q>, String> {
    v.iter().map(|s| parse_q(s)).collect()
}

/// A lattice file with its derived data.
pub struct Prepared {
    pub file: LatticeFile,
    pub lattice: GramLattice,
    pub disc: DiscriminantGroup,
    pub blocks: Option<Vec<Block>>,
    pub split: Option<SplitData>,
}

impl Prepared {
    pub fn new(file: LatticeFile) -> std::result::Result<Self, String> {
        let lattice = build_lattice(file.gram.clone()).map_err(|e| e.to_string())?;
        let disc = discriminant_group(&lattice).map_err(|e| e.to_string())?;
        let blocks = match &file.blocks {
            Some(b) => Some(b.iter().map(|s| parse_block(s)).collect::<std::result::Result<Vec<_>, _>>()?),
            None => None,
        };
        if let Some(b) = &blocks {
            if crate::grassmannian::block_gram(b) != file.gram {
                return Err(format!("{}: blocks do not match the Gram matrix", file.name));
            }
        }
        let split = match (&file.u, &file.u_prime) {
            (Some(u), Some(up)) => {
                Some(split_data(&lattice, &disc, &parse_qvec(u)?, &parse_qvec(up)?).map_err(|e| e.to_string())?)
            }
            _ => None,
        };
        Ok(Prepared { file, lattice, disc, blocks, split })
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn has(&self, suite: &str) -> bool {
        self.file.suites.iter().any(|s| s == suite)
    }

    /// Exact chart of the block decomposition, or the eigenvector chart.
    pub fn chart(&self) -> Mat<f64> {
        match self.blocks.as_ref().and_then(|b| block_chart(b)) {
            Some(a) => chart_f64(&a),
            None => linalg::inverse(&BaseFrame::from_eigen(&self.lattice).vectors).expect("eigenbasis"),
        }
    }

    /// A generic split frame: a random rational Lorentz rotation of the
    /// block chart, or a perturbed base point otherwise.
    pub fn random_frame(&self, seed: u64) -> std::result::Result<SplitFrame<f64>, String> {
        let sd = self.split.as_ref().ok_or("no isotropic pair")?;
        let (p, qq) = self.lattice.signature();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(bc) = self.blocks.as_ref().and_then(|b| block_chart(b)) {
            let o = to_qsqrt2(&random_cayley(&mut rng, p, p + qq, 4));
            let chart: Mat<QSqrt2> = linalg::mat_mul(&o, &bc);
            return Ok(SplitFrame::from_chart(&self.lattice, chart, &sd.u, &sd.u_prime)
                .map_err(|e| e.to_string())?
                .to_f64());
        }
        let base = BaseFrame::from_eigen(&self.lattice);
        let nb: Vec<Vec<f64>> = base
            .base_point()
            .neg_basis
            .iter()
            .map(|v| v.iter().map(|x| x + rng.gen_range(-0.3..0.3)).collect())
            .collect();
        let z = grass_point(&self.lattice, nb).map_err(|e| e.to_string())?;
        split_frame(&self.lattice, &z, sd, &base).map_err(|e| e.to_string())
    }
}

/// All `*.json` lattice files of a directory, by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<Prepared>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| VerifyError::Corpus(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(VerifyError::Corpus(format!("{}: no lattice files", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| VerifyError::Corpus(format!("{}: {e}", p.display())))?;
            let file: LatticeFile =
                serde_json::from_str(&text).map_err(|e| VerifyError::Corpus(format!("{}: {e}", p.display())))?;
            Prepared::new(file).map_err(VerifyError::Corpus)
        })
        .collect()
}

/// Tolerances per check name; `KMLIFT_TOL_SCALE` multiplies all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let tolerances = [
            ("hermite_recurrence", 0.5),
            ("exp_laplacian_identity", 0.5),
            ("u_decompose_closed_form", 0.5),
            ("gauge_power_of_two", 0.5),
            ("weil_relations", 1e-12),
            ("theta_oracle", 1e-12),
            ("theta_t_defect", 1e-8),
            ("theta_s_defect", 1e-6),
            ("splitting", 1e-4),
            ("strip_integral", 1e-6),
            ("y_integral_methods", 1e-9),
            ("bessel_k0", 1e-10),
            ("round_trip", 1e-8),
            ("zero_tables", 1e-300),
            ("linearity_scaling", 1e-10),
            ("frame_properties", 1e-10),
            ("eichler_phase", 1e-8),
            ("p1_vanishing", 1e-10),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        RunConfig { tolerances, seed: 20_240_601 }
    }
}

impl RunConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self.tolerances.iter().find(|(_, v)| !(**v > 0.0)) {
            Some((k, v)) => Err(format!("tolerance {k} = {v} is not positive")),
            None => Ok(()),
        }
    }

    /// Applies the `KMLIFT_TOL_SCALE` environment override.
    pub fn with_env(mut self) -> std::result::Result<Self, String> {
        if let Ok(s) = std::env::var("KMLIFT_TOL_SCALE") {
            let f: f64 = s.parse().map_err(|_| format!("KMLIFT_TOL_SCALE={s:?} is not a number"))?;
            if !(f > 0.0) {
                return Err(format!("KMLIFT_TOL_SCALE={s:?} must be positive"));
            }
            for v in self.tolerances.values_mut() {
                *v *= f;
            }
        }
        Ok(self)
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(1e-8)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub criterion: u8,
    pub check: String,
    pub lattice: String,
    pub params: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Name and runtime budget in seconds of each criterion.
pub const CRITERIA: [(u8, &str, f64); 8] = [
    (1, "exact identities", 10.0),
    (2, "weil representation", 5.0),
    (3, "siegel theta", 120.0),
    (4, "theta splitting", 300.0),
    (5, "unfolding", 600.0),
    (6, "injectivity round trip", 120.0),
    (7, "geometry", 5.0),
    (8, "p = 1 vanishing", 60.0),
];

struct Sink<'a> {
    criterion: u8,
    cfg: &'a RunConfig,
    out: Vec<Record>,
}

impl Sink<'_> {
    /// `value ≤ tolerance`; NaN fails.
    fn push(&mut self, check: &str, lattice: &str, params: String, value: f64) {
        let tolerance = self.cfg.tol(check);
        self.out.push(Record {
            criterion: self.criterion,
            check: check.into(),
            lattice: lattice.into(),
            params,
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }
}

fn fail(check: &str, lattice: &str, e: impl std::fmt::Display) -> VerifyError {
    VerifyError::Check { check: check.into(), lattice: lattice.into(), msg: e.to_string() }
}

fn find<'a>(corpus: &'a [Prepared], suite: &str) -> Vec<&'a Prepared> {
    corpus.iter().filter(|p| p.has(suite)).collect()
}

/// Runs one criterion; records are sorted by (check, lattice, params).
pub fn run_criterion(id: u8, corpus: &[Prepared], cfg: &RunConfig) -> Result<Vec<Record>> {
    let mut sink = Sink { criterion: id, cfg, out: Vec::new() };
    match id {
        1 => exact_suite(corpus, &mut sink)?,
        2 => weil_suite(corpus, &mut sink)?,
        3 => theta_suite(corpus, &mut sink)?,
        4 => splitting_suite(corpus, &mut sink)?,
        5 => unfolding_suite(corpus, &mut sink)?,
        6 => injectivity_suite(corpus, &mut sink)?,
        7 => geometry_suite(corpus, &mut sink)?,
        8 => p_one_suite(corpus, &mut sink)?,
        _ => return Err(VerifyError::Corpus(format!("no criterion {id}"))),
    }
    let mut out = sink.out;
    if out.is_empty() {
        return Err(VerifyError::Corpus(format!("criterion {id}: no corpus entry carries its suite")));
    }
    out.sort_by(|a, b| (&a.check, &a.lattice, &a.params).cmp(&(&b.check, &b.lattice, &b.params)));
    Ok(out)
}

pub fn run_all(corpus: &[Prepared], cfg: &RunConfig) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (id, _, _) in CRITERIA {
        out.extend(run_criterion(id, corpus, cfg)?);
    }
    Ok(out)
}

fn exact_suite(corpus: &[Prepared], sink: &mut Sink) -> Result<()> {
    use crate::km_polynomials::HalfPowerCoeff;
    // H_{n+1} = 2x·H_n − 2n·H_{n−1}
    let two_x = Poly::monomial(vec![1], HalfPowerCoeff::rational(q(2)));
    let mut bad = 0;
    for n in 1..12u32 {
        let rhs = two_x.mul(&hermite(n)).sub(&hermite(n - 1).scale(&HalfPowerCoeff::rational(q(2 * n as i64))));
        bad += (hermite(n + 1) != rhs) as u32;
    }
    sink.push("hermite_recurrence", "-", "n<=12".into(), bad as f64);

    let mut bad = 0;
    let mut count = 0;
    for p in 1..=3 {
        for total in 0..=4 {
            for c in CountVector::all(p, total) {
                bad += !exp_laplacian_check(&c) as u32;
                count += 1;
            }
        }
    }
    sink.push("exp_laplacian_identity", "-", format!("p<=3,|a|<=4,count={count}"), bad as f64);

    let exact = find(corpus, "exact");
    let mut rng = ChaCha8Rng::seed_from_u64(sink.cfg.seed);
    let mut frames = 0;
    let mut bad = 0;
    while frames < 24 {
        for pr in &exact {
            let (Some(blocks), Some(sd)) = (&pr.blocks, &pr.split) else { continue };
            let (p, qq) = pr.lattice.signature();
            let o = to_qsqrt2(&random_cayley(&mut rng, p, p + qq, 3));
            let chart = linalg::mat_mul(&o, &block_chart(blocks).ok_or_else(|| fail("u_decompose", pr.name(), "chart"))?);
            let fr = SplitFrame::from_chart(&pr.lattice, chart, &sd.u, &sd.u_prime)
                .map_err(|e| fail("u_decompose", pr.name(), e))?;
            for alpha in CountVector::all(p, qq as u32) {
                let poly = km_poly(&alpha, KmMode::P).to_qsqrt2().map_err(|e| fail("u_decompose", pr.name(), e))?;
                let a = u_decompose(&poly, &fr, DecomposeMethod::ClosedForm);
                let b = u_decompose(&poly, &fr, DecomposeMethod::Oracle);
                bad += !(a.is_ok() && a == b) as u32;
            }
            frames += 1;
        }
        if exact.is_empty() {
            break;
        }
    }
    if frames > 0 {
        sink.push("u_decompose_closed_form", "exact corpus", format!("frames={frames}"), bad as f64);
    }

    for pr in &exact {
        let Some(blocks) = &pr.blocks else { continue };
        let (p, qq) = pr.lattice.signature();
        for a1 in 1..p {
            let rep = gauge_isometry(blocks, a1, 0).map_err(|e| fail("gauge", pr.name(), e))?;
            let sig = format!("sig=({p},{qq}),alpha1={a1}");
            sink.push("gauge_power_of_two", pr.name(), sig, (!rep.ok) as u32 as f64);
        }
    }
    Ok(())
}

fn weil_suite(corpus: &[Prepared], sink: &mut Sink) -> Result<()> {
    for pr in find(corpus, "weil") {
        let rep = weil_generators(&pr.lattice, &pr.disc);
        let (rel, comm, unit) = relation_defects(&rep);
        sink.push("weil_relations", pr.name(), format!("|D|={}", pr.disc.len()), rel.max(comm).max(unit));
    }
    Ok(())
}

fn theta_suite(corpus: &[Prepared], sink: &mut Sink) -> Result<()> {
    let taus = [C64::new(0.3, 1.1), C64::new(-0.15, 1.4)];
    for pr in find(corpus, "theta") {
        let (p, qq) = pr.lattice.signature();
        let n = p + qq;
        let chart = pr.chart();
        let alpha = CountVector::all(p, qq as u32).into_iter().next_back().expect("nonempty");
        let poly = p_alpha(&alpha, n);
        let name = pr.name();
        let req = ThetaRequest {
            lattice: &pr.lattice,
            disc: &pr.disc,
            tau: C64::new(0.2, 1.2),
            delta: (0..n).map(|i| 0.1 * (i as f64 + 1.0)).collect(),
            nu: (0..n).map(|i| 0.05 * i as f64).collect(),
            chart: chart.clone(),
            poly: poly.clone(),
            radius: 3.0,
        };
        let v = siegel_theta(&req).map_err(|e| fail("theta_oracle", name, e))?;
        let w = siegel_theta_naive(&req).map_err(|e| fail("theta_oracle", name, e))?;
        sink.push("theta_oracle", name, format!("alpha={alpha},radius=3"), sup_dist(&v.components, &w));
        let big = siegel_theta(&ThetaRequest { radius: 5.0, ..req.clone() }).map_err(|e| fail("theta_oracle", name, e))?;
        // the reported tail bound must cover the truncation error
        sink.push("theta_oracle", name, "tail_bound_excess".into(), (v.sup_dist(&big) - v.tail_bound).max(0.0));
        for (i, &tau) in taus.iter().enumerate() {
            let t = modularity_defect(&pr.lattice, &pr.disc, &poly, Generator::T, tau, &chart, 1e-10)
                .map_err(|e| fail("theta_t_defect", name, e))?;
            sink.push("theta_t_defect", name, format!("tau#{i}"), t);
            let s = modularity_defect(&pr.lattice, &pr.disc, &poly, Generator::S, tau, &chart, 1e-8)
                .map_err(|e| fail("theta_s_defect", name, e))?;
            sink.push("theta_s_defect", name, format!("tau#{i}"), s);
        }
    }
    Ok(())
}

fn splitting_suite(corpus: &[Prepared], sink: &mut Sink) -> Result<()> {
    for pr in find(corpus, "splitting") {
        let name = pr.name();
        let sd = pr.split.as_ref().ok_or_else(|| fail("splitting", name, "no isotropic pair"))?;
        let fr = pr.random_frame(sink.cfg.seed).map_err(|e| fail("splitting", name, e))?;
        let ctx = SplitContext::new(&pr.lattice, &pr.disc, sd, &fr).map_err(|e| fail("splitting", name, e))?;
        let (p, qq) = pr.lattice.signature();
        let params = SplitParams { coset_cutoff: 5, ..SplitParams::default() };
        for tau in [C64::new(0.0, 3.0), C64::new(0.2, 2.5)] {
            for alpha in CountVector::all(p, qq as u32) {
                let (lhs, rhs) = split_theta_sides(&ctx, tau, &p_alpha(&alpha, p + qq), &params)
                    .map_err(|e| fail("splitting", name, e))?;
                sink.push("splitting", name, format!("tau={tau},alpha={alpha},C=5"), lhs.sup_dist(&rhs));
            }
        }
    }
    Ok(())
}

fn unfolding_suite(corpus: &[Prepared], sink: &mut Sink) -> Result<()> {
    let corpus_sab = [(-1.0, 1.0, 1.0), (-0.5, 2.0, 0.3), (1.5, 0.7, 4.0), (-3.5, 5.0, 0.2), (0.0, 10.0, 10.0), (2.5, 0.05, 0.1), (-2.0, 0.3, 3.0)];
    for (s, a, b) in corpus_sab {
        let x = y_integral(s, a, b, YMethod::Bessel, 1e-13).map_err(|e| fail("y_integral_methods", "-", e))?;
        let y = y_integral(s, a, b, YMethod::Quadrature, 1e-13).map_err(|e| fail("y_integral_methods", "-", e))?;
        sink.push("y_integral_methods", "-", format!("s={s},A={a},B={b}"), (x - y).abs() / x.abs().max(1e-300));
    }
    for m in [YMethod::Bessel, YMethod::Quadrature] {
        let v = y_integral(-1.0, 1.0, 1.0, m, 1e-13).map_err(|e| fail("bessel_k0", "-", e))?;
        sink.push("bessel_k0", "-", format!("{m:?}"), (v - 2.0 * K0_OF_2).abs());
    }
    for pr in find(corpus, "unfolding") {
        let name = pr.name();
        let sd = pr.split.as_ref().ok_or_else(|| fail("strip_integral", name, "no isotropic pair"))?;
        let fr = pr.random_frame(sink.cfg.seed).map_err(|e| fail("strip_integral", name, e))?;
        let f = synthetic_table(&pr.disc, &q(4), 0.3, sink.cfg.seed);
        let lams = positive_dual_vectors(sd, &q(3), 4).into_iter().filter(|l| l.iter().all(|x| *x >= q(0)));
        let lams: Vec<Vec<Q>> = lams.take(3).collect();
        let (p, qq) = pr.lattice.signature();
        for alpha in CountVector::all(p, qq as u32) {
            let req = LiftRequest::new(&pr.lattice, &pr.disc, sd, &fr, f.clone(), alpha.clone(), 0);
            let lift = Lift::new(&req).map_err(|e| fail("strip_integral", name, e))?;
            for lam in &lams {
                for m in [YMethod::Bessel, YMethod::Quadrature] {
                    let sc = lift.strip_integral_check(lam, m).map_err(|e| fail("strip_integral", name, e))?;
                    let lam_s: Vec<String> = lam.iter().map(crate::field::fmt_q).collect();
                    let tag = format!("alpha={alpha},lambda=({}),{m:?}", lam_s.join(","));
                    // a vanishing series would make the comparison empty
                    let size = sc.series[0].hypot(sc.series[1]);
                    let value = if size > 0.0 { sc.residual.max(sc.quad_error) } else { f64::INFINITY };
                    sink.push("strip_integral", name, tag, value);
                }
            }
        }
    }
    Ok(())
}

fn injectivity_suite(corpus: &[Prepared], sink: &mut Sink) -> Result<()> {
    let cutoff = q(3);
    for pr in find(corpus, "elimination") {
        let name = pr.name();
        let sd = pr.split.as_ref().ok_or_else(|| fail("round_trip", name, "no isotropic pair"))?;
        let blocks = pr.blocks.as_ref().ok_or_else(|| fail("round_trip", name, "needs a block decomposition"))?;
        let set = GaugeSetting { lattice: &pr.lattice, disc: &pr.disc, sd, blocks, ell: 0 };
        let (p, _) = pr.lattice.signature();
        let alpha1s: Vec<usize> = (1..p).collect();
        let lams = positive_dual_vectors(sd, &cutoff, 4);
        let f = synthetic_table(&pr.disc, &cutoff, 0.4, sink.cfg.seed);
        let run = |f: &CoeffTable| -> Result<crate::lift::Elimination> {
            let t = set.tables(f, &alpha1s, &lams).map_err(|e| fail("round_trip", name, e))?;
            eliminate_coefficients(&set, &t, &cutoff).map_err(|e| fail("round_trip", name, e))
        };
        let el = run(&f)?;
        let err = el.recovered.iter().map(|((li, n), c)| (c - f.get(*li, n)).norm()).fold(0.0, f64::max);
        let params = format!("cutoff=3,recovered={},unresolved={}", el.recovered.len(), el.unresolved.len());
        sink.push("round_trip", name, params, if el.recovered.is_empty() { f64::INFINITY } else { err });
        let el0 = run(&CoeffTable::new(pr.disc.len()))?;
        let zero = el0.recovered.values().map(|c| c.norm()).fold(0.0, f64::max);
        sink.push("zero_tables", name, "cutoff=3".into(), if zero == 0.0 { 0.0 } else { zero });
        let el2 = run(&f.scale(C64::new(2.0, 0.0)))?;
        let lin = el
            .recovered
            .iter()
            .map(|(k, c)| el2.recovered.get(k).map_or(f64::INFINITY, |d| (d - 2.0 * c).norm()))
            .fold(0.0, f64::max);
        sink.push("linearity_scaling", name, "factor=2".into(), lin);
    }
    Ok(())
}

fn geometry_suite(corpus: &[Prepared], sink: &mut Sink) -> Result<()> {
    let geo = find(corpus, "geometry");
    let mut worst = 0.0f64;
    let mut frames = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(sink.cfg.seed ^ 7);
    while frames < 20 && !geo.is_empty() {
        for pr in &geo {
            let name = pr.name();
            let sd = pr.split.as_ref().ok_or_else(|| fail("frame_properties", name, "no isotropic pair"))?;
            let fr = pr.random_frame(sink.cfg.seed + frames as u64).map_err(|e| fail("frame_properties", name, e))?;
            let n = pr.lattice.rank();
            let kr = sd.k_rank();
            let tests: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let d = frame_defects(&pr.lattice, &fr, &tests);
            let lam: Vec<f64> = (0..kr).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let primes: Vec<Vec<f64>> = (0..2).map(|_| (0..kr).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let r = eichler_residuals(&pr.lattice, sd, &fr, &lam, &primes).map_err(|e| fail("frame_properties", name, e))?;
            let signs = if d.signs_ok { 0.0 } else { f64::INFINITY };
            worst = worst.max(d.reconstruct).max(d.mu_u).max(d.g_sharp_u).max(d.isometry).max(signs).max(r.max());
            frames += 1;
        }
    }
    if frames > 0 {
        sink.push("frame_properties", "geometry corpus", format!("frames={frames}"), worst);
    }
    for pr in geo.iter().filter(|p| p.lattice.signature() == (2, 1)) {
        let name = pr.name();
        let sd = pr.split.as_ref().ok_or_else(|| fail("eichler_phase", name, "no isotropic pair"))?;
        let fr = pr.random_frame(sink.cfg.seed).map_err(|e| fail("eichler_phase", name, e))?;
        let v = [1.0 / 3.0];
        let e = eichler_k(&pr.lattice, sd, &v).map_err(|e| fail("eichler_phase", name, e))?;
        let ft = fr.pulled_back(&pr.lattice, &e, &sd.u, &sd.u_prime).map_err(|e| fail("eichler_phase", name, e))?;
        let f = synthetic_table(&pr.disc, &q(4), 0.3, sink.cfg.seed);
        let vk = sd.embed_k_f64(&v);
        let mut worst = 0.0f64;
        for alpha in CountVector::all(2, 1) {
            let r1 = LiftRequest::new(&pr.lattice, &pr.disc, sd, &fr, f.clone(), alpha.clone(), 0);
            let r2 = LiftRequest::new(&pr.lattice, &pr.disc, sd, &ft, f.clone(), alpha.clone(), 0);
            let l1 = Lift::new(&r1).map_err(|e| fail("eichler_phase", name, e))?;
            let l2 = Lift::new(&r2).map_err(|e| fail("eichler_phase", name, e))?;
            for lam in positive_dual_vectors(sd, &q(3), 4) {
                let t1 = l1.fourier_term(&lam, YMethod::Bessel).map_err(|e| fail("eichler_phase", name, e))?;
                let t2 = l2.fourier_term(&lam, YMethod::Bessel).map_err(|e| fail("eichler_phase", name, e))?;
                let lv = pr.lattice.pair_f64(&sd.embed_k_f64(&crate::grassmannian::q_vec_f64(&lam)), &vk);
                let phase = crate::weil_rep::e(lv);
                worst = worst.max((t2 - t1 * phase).norm() / (1.0 + t1.norm()));
            }
        }
        sink.push("eichler_phase", name, "v=1/3".into(), worst);
    }
    Ok(())
}

fn p_one_suite(corpus: &[Prepared], sink: &mut Sink) -> Result<()> {
    for pr in find(corpus, "p1") {
        let name = pr.name();
        let sd = pr.split.as_ref().ok_or_else(|| fail("p1_vanishing", name, "no isotropic pair"))?;
        let (p, qq) = pr.lattice.signature();
        if p != 1 {
            return Err(fail("p1_vanishing", name, "signature is not (1,q)"));
        }
        let fr = pr.random_frame(sink.cfg.seed).map_err(|e| fail("p1_vanishing", name, e))?;
        let f = synthetic_table(&pr.disc, &q(4), 0.2, sink.cfg.seed);
        // K′ vectors of every sign: q(λ) ≤ 0 throughout K′ here
        let inv = linalg::inverse(&sd.k_lattice.gram_q()).ok_or_else(|| fail("p1_vanishing", name, "K singular"))?;
        let lams: Vec<Vec<Q>> = (-4..=4i64)
            .filter(|&m| m != 0)
            .map(|m| linalg::mat_vec(&inv, &vec![q(m); sd.k_rank()]))
            .collect();
        let all = all_alpha_coefficients(&pr.lattice, &pr.disc, sd, &fr, &f, 0, &lams, YMethod::Bessel)
            .map_err(|e| fail("p1_vanishing", name, e))?;
        let worst = all.iter().flat_map(|(_, v)| v.iter().map(|r| r.value.norm())).fold(0.0, f64::max);
        sink.push("p1_vanishing", name, format!("sig=(1,{qq}),coefficients={}", all.len() * lams.len()), worst);
        // p^{0,0} vanishes on W at an exact frame
        if let Some(bc) = pr.blocks.as_ref().and_then(|b| block_chart(b)) {
            let fr = SplitFrame::from_chart(&pr.lattice, bc, &sd.u, &sd.u_prime).map_err(|e| fail("p1_vanishing", name, e))?;
            for alpha in CountVector::all(1, qq as u32) {
                let poly = km_poly(&alpha, KmMode::P).to_qsqrt2().map_err(|e| fail("p1_vanishing", name, e))?;
                let parts = u_decompose(&poly, &fr, DecomposeMethod::ClosedForm).map_err(|e| fail("p1_vanishing", name, e))?;
                let nonzero = parts.get(&(0, 0)).is_some_and(|pp| !pp.is_zero());
                sink.push("p1_vanishing", name, "p00_on_W".into(), if nonzero { 1.0 } else { 0.0 });
            }
        }
    }
    Ok(())
}
