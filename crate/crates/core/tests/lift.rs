use kmlift::field::{q, q_to_f64, qfrac, Q};
use kmlift::grassmannian::{
    block_chart, block_gram, cayley, eichler_k, grass_point, random_cayley, split_frame, to_qsqrt2, BaseFrame, Block,
    SplitFrame,
};
use kmlift::km_polynomials::CountVector;
use kmlift::lattice_core::{build_lattice, discriminant_group, split_data, DiscriminantGroup, GramLattice, SplitData};
use kmlift::lift::{
    all_alpha_coefficients, positive_dual_vectors, synthetic_table, trailing_u, y_integral, CheckMode, Lift,
    LiftError, LiftRequest, QuadParams, YMethod,
};
use kmlift::linalg;
use kmlift::theta::{km_theta_components, CoeffTable};
use kmlift::weil_rep::e;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Setup {
    l: GramLattice,
    d: DiscriminantGroup,
    sd: SplitData,
    fr: SplitFrame<f64>,
}

fn from_blocks(blocks: &[Block], seed: u64) -> Setup {
    let l = build_lattice(block_gram(blocks)).unwrap();
    let d = discriminant_group(&l).unwrap();
    let (u, up) = trailing_u(blocks);
    let sd = split_data(&l, &d, &u, &up).unwrap();
    let (p, qq) = l.signature();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = to_qsqrt2(&random_cayley(&mut rng, p, p + qq, 4));
    let chart = linalg::mat_mul(&o, &block_chart(blocks).unwrap());
    let fr = SplitFrame::from_chart(&l, chart, &sd.u, &sd.u_prime).unwrap().to_f64();
    Setup { l, d, sd, fr }
}

fn generic(gram: Vec<Vec<i64>>, seed: u64) -> Setup {
    let l = build_lattice(gram).unwrap();
    let d = discriminant_group(&l).unwrap();
    let n = l.rank();
    let mut u = vec![q(0); n];
    let mut up = vec![q(0); n];
    u[n - 2] = q(1);
    up[n - 1] = q(1);
    let sd = split_data(&l, &d, &u, &up).unwrap();
    let base = BaseFrame::from_eigen(&l);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb: Vec<Vec<f64>> = base
        .base_point()
        .neg_basis
        .iter()
        .map(|v| v.iter().map(|x| x + rng.gen_range(-0.3..0.3)).collect())
        .collect();
    let z = grass_point(&l, nb).unwrap();
    let fr = split_frame(&l, &z, &sd, &base).unwrap();
    Setup { l, d, sd, fr }
}

fn a1u() -> Setup {
    from_blocks(&[Block::A1, Block::U(1)], 5)
}

fn quick() -> QuadParams {
    QuadParams { nx: 16, torus: 16, log_y_step: 0.08, ..QuadParams::default() }
}

fn single(d: &DiscriminantGroup, coset: usize, n: Q) -> CoeffTable {
    let mut f = CoeffTable::new(d.len());
    f.insert(coset, n, C64::new(1.0, 0.0));
    f
}

#[test]
fn zero_form_gives_zero() {
    let s = a1u();
    let req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, CoeffTable::new(2), CountVector::new(vec![1, 0]), 0);
    let lift = Lift::new(&req).unwrap();
    assert_eq!(lift.h_alpha(C64::new(0.1, 2.0)).unwrap(), C64::new(0.0, 0.0));
    let c = lift.fourier_coefficient(&[qfrac(1, 2)], YMethod::Bessel).unwrap();
    assert_eq!(c.value, C64::new(0.0, 0.0));
    let sc = lift.strip_integral_check(&[qfrac(1, 2)], YMethod::Bessel).unwrap();
    assert_eq!(sc.residual, 0.0);
    let direct = lift.direct_lift_integral().unwrap();
    assert_eq!(direct.value, [0.0, 0.0]);
    let chk = lift.integrand_split_check(C64::new(0.0, 3.0), CheckMode::Modular).unwrap();
    assert!(chk.unfolding.unwrap() < 1e-300);
}

#[test]
fn h_alpha_two_paths_and_cutoff() {
    let s = a1u();
    let f = single(&s.d, 0, q(1));
    for alpha in CountVector::all(2, 1) {
        let req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f.clone(), alpha, 0);
        let lift = Lift::new(&req).unwrap();
        let tau = C64::new(0.0, 2.0);
        let a = lift.h_alpha(tau).unwrap();
        let b = lift.h_alpha_termwise(tau).unwrap();
        assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()), "{a} {b}");
        let rc = lift.r_cutoff(2.0);
        let c = lift.h_alpha_cutoff(tau, Some(2 * rc)).unwrap();
        assert!((a - c).norm() < 1e-10);
    }
}

#[test]
fn empty_fiber_and_negative_norm() {
    let s = from_blocks(&[Block::A1Neg, Block::A1, Block::U(1)], 2);
    let f = synthetic_table(&s.d, &q(3), 0.5, 1);
    let req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f, CountVector::new(vec![1, 1]), 0);
    let lift = Lift::new(&req).unwrap();
    let r = lift.fourier_coefficient(&[q(0), qfrac(1, 2)], YMethod::Bessel).unwrap();
    assert!(r.negative_norm && r.value == C64::new(0.0, 0.0));
    let f = single(&s.d, 0, q(1));
    let req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f, CountVector::new(vec![1, 1]), 0);
    let lift = Lift::new(&req).unwrap();
    let r = lift.fourier_coefficient(&[qfrac(1, 2), q(0)], YMethod::Bessel).unwrap();
    assert!(!r.negative_norm && r.value == C64::new(0.0, 0.0) && r.pieces.is_empty());
    assert!(matches!(lift.fourier_coefficient(&[qfrac(1, 3), q(0)], YMethod::Bessel), Err(LiftError::NotInDual)));
}

#[test]
fn strip_on_a1_u() {
    let s = a1u();
    let f = synthetic_table(&s.d, &q(3), 0.3, 11);
    let mut req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f, CountVector::new(vec![0, 1]), 0);
    req.quad = quick();
    let lift = Lift::new(&req).unwrap();
    for lam in [qfrac(1, 2), q(1)] {
        let sc = lift.strip_integral_check(&[lam], YMethod::Bessel).unwrap();
        let size = sc.series[0].hypot(sc.series[1]);
        assert!(size > 1e-6 && sc.residual < 1e-9, "{sc:?}");
    }
    // no coefficient on the coset of λ = 1/2
    let f = single(&s.d, 0, q(1));
    let mut req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f, CountVector::new(vec![0, 1]), 0);
    req.quad = quick();
    let lift = Lift::new(&req).unwrap();
    let sc = lift.strip_integral_check(&[qfrac(1, 2)], YMethod::Bessel).unwrap();
    assert!(sc.series == [0.0, 0.0] && sc.quadrature[0].hypot(sc.quadrature[1]) < 1e-10, "{sc:?}");
}

#[test]
fn twisted_strip() {
    let s = a1u();
    let f = synthetic_table(&s.d, &q(3), 0.3, 12);
    let mut req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f, CountVector::new(vec![1, 1]), 1);
    req.quad = quick();
    assert_eq!(req.weight, qfrac(5, 2));
    let lift = Lift::new(&req).unwrap();
    let sc = lift.strip_integral_check(&[qfrac(1, 2)], YMethod::Quadrature).unwrap();
    assert!(sc.series[0].hypot(sc.series[1]) > 1e-6 && sc.residual < 1e-9, "{sc:?}");
}

/// At the gauge frame only h⁺ = q + ℓ survives, with polynomial value 2^{q+ℓ}.
fn gauge_prediction(ell: u32) {
    let blocks = [Block::A1, Block::U(1)];
    let l = build_lattice(block_gram(&blocks)).unwrap();
    let d = discriminant_group(&l).unwrap();
    let (u, up) = trailing_u(&blocks);
    let sd = split_data(&l, &d, &u, &up).unwrap();
    let chart = kmlift::lift::gauge_chart(&blocks, 1).unwrap();
    let fr = SplitFrame::from_chart(&l, chart, &u, &up).unwrap().to_f64();
    for (lam, coset) in [(qfrac(1, 2), 1), (qfrac(3, 2), 1)] {
        let n = &lam * &lam;
        let f = single(&d, coset, n.clone());
        let req = LiftRequest::new(&l, &d, &sd, &fr, f, CountVector::new(vec![1 + ell, 0]), ell);
        let lift = Lift::new(&req).unwrap();
        let got = lift.fourier_coefficient(&[lam.clone()], YMethod::Bessel).unwrap();
        // |u_{z⊥}|² = 1/2, λ_{w⊥}² = 2q(λ), s = (p−5)/2 = −3/2
        let y = y_integral(-1.5, 4.0 * std::f64::consts::PI * q_to_f64(&n), std::f64::consts::PI, YMethod::Quadrature, 1e-13)
            .unwrap();
        let want = 2.0 * C64::new(0.0, 1.0).powi(-(1 + ell as i32)) * y;
        assert!((got.value - want).norm() < 1e-12 * want.norm(), "{} {want}", got.value);
        assert_eq!(got.pieces.len(), 1);
        assert_eq!(got.pieces[0].h, 1 + ell);
    }
}

#[test]
fn gauge_prediction_untwisted() {
    gauge_prediction(0);
}

#[test]
fn gauge_prediction_twisted() {
    gauge_prediction(2);
}

#[test]
fn linear_in_f() {
    let s = generic(vec![vec![0, 2, 0, 0], vec![2, 0, 0, 0], vec![0, 0, 0, 1], vec![0, 0, 1, 0]], 8);
    let f1 = synthetic_table(&s.d, &q(4), 0.4, 1);
    let f2 = synthetic_table(&s.d, &q(4), 0.7, 2);
    let f12 = f1.add(&f2);
    let lams = positive_dual_vectors(&s.sd, &q(2), 3);
    assert!(!lams.is_empty());
    for alpha in CountVector::all(2, 2) {
        let val = |f: &CoeffTable, lam: &[Q]| {
            let req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f.clone(), alpha.clone(), 0);
            Lift::new(&req).unwrap().fourier_coefficient(lam, YMethod::Bessel).unwrap().value
        };
        for lam in &lams {
            let (a, b, c) = (val(&f1, lam), val(&f2, lam), val(&f12, lam));
            assert!((a + b - c).norm() < 1e-10 * (1.0 + c.norm()));
        }
    }
}

#[test]
fn eichler_phase_law() {
    let s = a1u();
    let f = synthetic_table(&s.d, &q(4), 0.3, 3);
    let v = [qfrac(1, 3)];
    let e_mat = eichler_k(&s.l, &s.sd, &[q_to_f64(&v[0])]).unwrap();
    let ft = s.fr.pulled_back(&s.l, &e_mat, &s.sd.u, &s.sd.u_prime).unwrap();
    for alpha in CountVector::all(2, 1) {
        let r1 = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f.clone(), alpha.clone(), 0);
        let r2 = LiftRequest::new(&s.l, &s.d, &s.sd, &ft, f.clone(), alpha.clone(), 0);
        let (l1, l2) = (Lift::new(&r1).unwrap(), Lift::new(&r2).unwrap());
        for lam in [qfrac(1, 2), q(1), qfrac(3, 2)] {
            let t1 = l1.fourier_term(&[lam.clone()], YMethod::Bessel).unwrap();
            let t2 = l2.fourier_term(&[lam.clone()], YMethod::Bessel).unwrap();
            // (λ, v) with (k, k) = 2
            let phase = e(2.0 * q_to_f64(&(&lam * &v[0])));
            assert!((t2 - t1 * phase).norm() < 1e-8 * (1.0 + t1.norm()), "{t1} {t2}");
        }
    }
}

/// Rotating the positive standard coordinates by R ∈ SO(2) mixes the
/// degree-one integrals linearly: c^{(α)}(k·g) = Σ_β R_{αβ} c^{(β)}(g).
#[test]
fn frame_independence_on_2_1() {
    let blocks = [Block::A1, Block::U(1)];
    let s = from_blocks(&blocks, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let chart1 = linalg::mat_mul(&to_qsqrt2(&random_cayley(&mut rng, 2, 3, 4)), &block_chart(&blocks).unwrap());
    let mut skew = linalg::zeros::<Q>(3, 3);
    skew[0][1] = qfrac(2, 3);
    skew[1][0] = qfrac(-2, 3);
    let k = cayley(2, &skew).unwrap();
    assert!(k[2][2] == q(1) && k[0][2] == q(0));
    let chart2 = linalg::mat_mul(&to_qsqrt2(&k), &chart1);
    let fr2 = SplitFrame::from_chart(&s.l, chart2, &s.sd.u, &s.sd.u_prime).unwrap().to_f64();
    let f = synthetic_table(&s.d, &q(4), 0.3, 9);
    let lams = vec![vec![qfrac(1, 2)], vec![q(1)], vec![qfrac(3, 2)]];
    let c1 = all_alpha_coefficients(&s.l, &s.d, &s.sd, &s.fr, &f, 0, &lams, YMethod::Bessel).unwrap();
    let c2 = all_alpha_coefficients(&s.l, &s.d, &s.sd, &fr2, &f, 0, &lams, YMethod::Bessel).unwrap();
    // CountVector::all(2,1) lists (0,1) before (1,0)
    let idx = |a: &CountVector| a.multiplicities.iter().position(|&m| m == 1).unwrap();
    for li in 0..lams.len() {
        let mut v1 = [C64::new(0.0, 0.0); 2];
        let mut v2 = v1;
        for (a, vals) in &c1 {
            v1[idx(a)] = vals[li].value;
        }
        for (a, vals) in &c2 {
            v2[idx(a)] = vals[li].value;
        }
        let n1 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
        let n2 = (v2[0].norm_sqr() + v2[1].norm_sqr()).sqrt();
        assert!(n1 > 1e-8 && (n1 - n2).abs() < 1e-8 * n1, "{n1} {n2}");
        for i in 0..2 {
            let pred: C64 = (0..2).map(|j| q_to_f64(&k[i][j]) * v1[j]).sum();
            assert!((pred - v2[i]).norm() < 1e-8 * n1, "{pred} {}", v2[i]);
        }
    }
}

#[test]
fn p_one_vanishes() {
    let s = from_blocks(&[Block::A1Neg, Block::U(1)], 3);
    assert_eq!(s.l.signature(), (1, 2));
    let f = synthetic_table(&s.d, &q(4), 0.2, 4);
    let lams: Vec<Vec<Q>> = (1..=4).map(|m| vec![qfrac(m, 2)]).collect();
    for (_, vals) in all_alpha_coefficients(&s.l, &s.d, &s.sd, &s.fr, &f, 0, &lams, YMethod::Bessel).unwrap() {
        for v in vals {
            assert!(v.value.norm() < 1e-10 && v.negative_norm);
        }
    }
    let req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f, CountVector::new(vec![2]), 0);
    let lift = Lift::new(&req).unwrap();
    assert!(lift.parts[0].is_zero());
}

#[test]
fn split_checks_formal_and_modular() {
    let s = generic(vec![vec![0, 2, 0, 0], vec![2, 0, 0, 0], vec![0, 0, 0, 1], vec![0, 0, 1, 0]], 2);
    let f = synthetic_table(&s.d, &q(3), 0.5, 6);
    let req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f, CountVector::new(vec![1, 1]), 0);
    let lift = Lift::new(&req).unwrap();
    let chk = lift.integrand_split_check(C64::new(0.0, 3.0), CheckMode::Formal).unwrap();
    assert!(chk.pairing < 1e-12 && chk.splitting < 1e-4 && chk.unfolding.is_none(), "{chk:?}");
    assert!(matches!(lift.integrand_split_check(C64::new(0.0, 3.0), CheckMode::Modular), Err(LiftError::ModeMismatch)));
}

#[test]
fn direct_integral_plumbing() {
    let s = a1u();
    let f = synthetic_table(&s.d, &q(3), 0.5, 6);
    let mut req = LiftRequest::new(&s.l, &s.d, &s.sd, &s.fr, f.clone(), CountVector::new(vec![1, 0]), 0);
    req.quad.fd_nodes = 12;
    req.trunc.y_max = 3.0;
    let lift = Lift::new(&req).unwrap();
    let third = C64::new(0.5, 3f64.sqrt() / 2.0);
    for tau in [third, C64::new(-0.5, 3f64.sqrt() / 2.0), C64::new(0.0, 1.0)] {
        let a = lift.lift_integrand(tau).unwrap();
        let th = km_theta_components(&s.l, &s.d, tau, &s.fr.chart, 9.0).unwrap();
        let fv = f.eval(tau);
        let b: C64 = fv.iter().zip(&th[&req.alpha].components).map(|(x, t)| x * t.conj()).sum::<C64>() * tau.im.powf(1.5);
        assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()), "{a} {b}");
    }
    let d1 = lift.direct_lift_integral().unwrap();
    let mut req2 = req.clone();
    req2.trunc.y_max = 6.0;
    let d2 = Lift::new(&req2).unwrap().direct_lift_integral().unwrap();
    let diff = (d1.value[0] - d2.value[0]).hypot(d1.value[1] - d2.value[1]);
    assert!(diff < d1.tail_bound && d2.tail_bound < d1.tail_bound, "{d1:?} {d2:?}");
}


fn round_trip(blocks: &[Block], alpha1s: &[usize]) -> (usize, usize) {
    use kmlift::lift::{eliminate_coefficients, GaugeSetting};
    let l = build_lattice(block_gram(blocks)).unwrap();
    let d = discriminant_group(&l).unwrap();
    let (u, up) = trailing_u(blocks);
    let sd = split_data(&l, &d, &u, &up).unwrap();
    let set = GaugeSetting { lattice: &l, disc: &d, sd: &sd, blocks, ell: 0 };
    let cutoff = q(3);
    let lams = positive_dual_vectors(&sd, &cutoff, 4);
    let f = synthetic_table(&d, &cutoff, 0.4, 21);
    let tables = set.tables(&f, alpha1s, &lams).unwrap();
    let el = eliminate_coefficients(&set, &tables, &cutoff).unwrap();
    for ((li, n), c) in &el.recovered {
        let want = f.get(*li, n);
        assert!((c - want).norm() < 1e-8, "{li} {n}: {c} {want}");
    }
    let f2 = f.scale(C64::new(2.0, 0.0));
    let el2 = eliminate_coefficients(&set, &set.tables(&f2, alpha1s, &lams).unwrap(), &cutoff).unwrap();
    for (k, c) in &el.recovered {
        assert!((el2.recovered[k] - 2.0 * c).norm() < 1e-10);
    }
    let zero = set.tables(&CoeffTable::new(d.len()), alpha1s, &lams).unwrap();
    let el0 = eliminate_coefficients(&set, &zero, &cutoff).unwrap();
    assert!(el0.recovered.values().all(|c| c.norm() == 0.0));
    assert_eq!(el0.recovered.len(), el.recovered.len());
    (el.recovered.len(), el.unresolved.len())
}

#[test]
fn elimination_a1_u() {
    let (rec, unres) = round_trip(&[Block::A1, Block::U(1)], &[1]);
    // (1,1/4), (0,1), (1,9/4) reachable; (1,5/4), (0,2), (0,3) are not
    assert_eq!((rec, unres), (3, 3));
}

#[test]
fn elimination_u_u() {
    assert_eq!(round_trip(&[Block::U(1), Block::U(1)], &[1]), (3, 0));
}

#[test]
fn elimination_rank_five() {
    let (rec, _) = round_trip(&[Block::A1, Block::A1, Block::A1Neg, Block::U(1)], &[1, 2]);
    assert!(rec > 0);
}

#[test]
fn inconsistent_tables_are_rejected() {
    use kmlift::lift::{eliminate_coefficients, GaugeSetting};
    let blocks = [Block::A1, Block::U(1)];
    let l = build_lattice(block_gram(&blocks)).unwrap();
    let d = discriminant_group(&l).unwrap();
    let (u, up) = trailing_u(&blocks);
    let sd = split_data(&l, &d, &u, &up).unwrap();
    let set = GaugeSetting { lattice: &l, disc: &d, sd: &sd, blocks: &blocks, ell: 0 };
    let lams = positive_dual_vectors(&sd, &q(1), 2);
    let mut tables = set.tables(&synthetic_table(&d, &q(1), 0.4, 2), &[1], &lams).unwrap();
    *tables[0].values.get_mut(&vec![qfrac(-1, 2)]).unwrap() *= 1.5;
    assert!(matches!(eliminate_coefficients(&set, &tables, &q(1)), Err(LiftError::InconsistentTables { .. })));
}
