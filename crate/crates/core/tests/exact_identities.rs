use kmlift::field::{q, QSqrt2, Q};
use kmlift::grassmannian::{block_chart, block_gram, gauge_std, random_cayley, to_qsqrt2, Block, SplitFrame};
use kmlift::km_polynomials::{km_poly, u_decompose, CountVector, DecomposeMethod, KmMode};
use kmlift::lattice_core::build_lattice;
use kmlift::linalg;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn std_u(blocks: &[Block]) -> (Vec<Q>, Vec<Q>) {
    let n: usize = blocks.iter().map(|b| b.rank()).sum();
    let mut u = vec![q(0); n];
    let mut up = vec![q(0); n];
    u[n - 2] = q(1);
    up[n - 1] = q(1);
    (u, up)
}

#[test]
fn gauge_gives_power_of_two() {
    for (blocks, alpha) in [
        (vec![Block::A1, Block::U(1)], 1),
        (vec![Block::A1, Block::A1, Block::U(1)], 1),
        (vec![Block::A1, Block::A1, Block::U(1)], 2),
        (vec![Block::A1, Block::A1, Block::A1Neg, Block::U(1)], 2),
    ] {
        let l = build_lattice(block_gram(&blocks)).unwrap();
        let (p, qq) = l.signature();
        let chart = linalg::mat_mul(&to_qsqrt2(&gauge_std(p, qq, alpha)), &block_chart(&blocks).unwrap());
        let (u, up) = std_u(&blocks);
        let fr = SplitFrame::from_chart(&l, chart, &u, &up).unwrap();
        let mut m = vec![0u32; p];
        m[alpha - 1] = qq as u32;
        let poly = km_poly(&CountVector::new(m), KmMode::P).to_qsqrt2().unwrap();
        for method in [DecomposeMethod::ClosedForm, DecomposeMethod::Oracle] {
            let parts = u_decompose(&poly, &fr, method).unwrap();
            assert_eq!(parts.len(), 1, "{blocks:?} {method:?}");
            let (key, val) = parts.iter().next().unwrap();
            assert_eq!(*key, (qq as u32, 0));
            let c = QSqrt2::new(q(1 << qq), Q::zero());
            assert_eq!(val.terms.len(), 1);
            assert_eq!(val.terms.values().next().unwrap(), &c);
            assert!(val.terms.keys().next().unwrap().iter().all(|&e| e == 0));
        }
    }
}

#[test]
fn closed_form_matches_oracle_on_random_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lattices = [
        vec![Block::A1, Block::U(1)],
        vec![Block::U(1), Block::U(1)],
        vec![Block::A1, Block::A1, Block::U(1)],
        vec![Block::A1, Block::A1Neg, Block::U(1)],
        vec![Block::A1, Block::A1, Block::A1Neg, Block::U(1)],
    ];
    let mut count = 0;
    for blocks in &lattices {
        let l = build_lattice(block_gram(blocks)).unwrap();
        let (p, qq) = l.signature();
        let n = p + qq;
        let (u, up) = std_u(blocks);
        for _ in 0..5 {
            let o = to_qsqrt2(&random_cayley(&mut rng, p, n, 3));
            let chart = linalg::mat_mul(&o, &block_chart(blocks).unwrap());
            let fr = SplitFrame::from_chart(&l, chart, &u, &up).unwrap();
            for alpha in CountVector::all(p, qq as u32) {
                let poly = km_poly(&alpha, KmMode::P).to_qsqrt2().unwrap();
                let a = u_decompose(&poly, &fr, DecomposeMethod::ClosedForm).unwrap();
                let b = u_decompose(&poly, &fr, DecomposeMethod::Oracle).unwrap();
                assert_eq!(a, b, "{blocks:?} {alpha}");
            }
            count += 1;
        }
    }
    assert!(count >= 20);
    let _ = QSqrt2::one();
}
