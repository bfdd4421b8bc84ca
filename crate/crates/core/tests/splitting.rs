use kmlift::field::q;
use kmlift::grassmannian::{block_chart, block_gram, random_cayley, to_qsqrt2, Block, SplitFrame};
use kmlift::km_polynomials::CountVector;
use kmlift::lattice_core::{build_lattice, discriminant_group, split_data};
use kmlift::linalg;
use kmlift::theta::{p_alpha, split_theta_sides, SplitContext, SplitParams};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[test]
fn splitting_a1_u() {
    let blocks = [Block::A1, Block::U(1)];
    let l = build_lattice(block_gram(&blocks)).unwrap();
    let d = discriminant_group(&l).unwrap();
    let sd = split_data(&l, &d, &[q(0), q(1), q(0)], &[q(0), q(0), q(1)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let o = to_qsqrt2(&random_cayley(&mut rng, 2, 3, 4));
    let chart = linalg::mat_mul(&o, &block_chart(&blocks).unwrap());
    let fr = SplitFrame::from_chart(&l, chart, &sd.u, &sd.u_prime).unwrap().to_f64();
    let ctx = SplitContext::new(&l, &d, &sd, &fr).unwrap();
    for tau in [C64::new(0.0, 3.0), C64::new(0.2, 2.5)] {
        for alpha in CountVector::all(2, 1) {
            let t0 = Instant::now();
            let (lhs, rhs) = split_theta_sides(&ctx, tau, &p_alpha(&alpha, 3), &SplitParams::default()).unwrap();
            let dist = lhs.sup_dist(&rhs);
            eprintln!("{tau} {alpha} {dist:e} {:?}", t0.elapsed());
            assert!(dist < 1e-4);
        }
    }
}

fn generic_case(gram: Vec<Vec<i64>>, u: Vec<i64>, up: Vec<i64>, z_seed: u64) {
    use kmlift::grassmannian::{grass_point, split_frame, BaseFrame};
    use rand::Rng;
    let l = build_lattice(gram).unwrap();
    let d = discriminant_group(&l).unwrap();
    let uq: Vec<_> = u.iter().map(|&x| q(x)).collect();
    let upq: Vec<_> = up.iter().map(|&x| q(x)).collect();
    let sd = split_data(&l, &d, &uq, &upq).unwrap();
    let (p, qq) = l.signature();
    let base = BaseFrame::from_eigen(&l);
    let mut rng = ChaCha8Rng::seed_from_u64(z_seed);
    let z0 = base.base_point();
    let nb: Vec<Vec<f64>> = z0
        .neg_basis
        .iter()
        .map(|v| v.iter().map(|x| x + rng.gen_range(-0.3..0.3)).collect())
        .collect();
    let z = grass_point(&l, nb).unwrap();
    let fr = split_frame(&l, &z, &sd, &base).unwrap();
    let ctx = SplitContext::new(&l, &d, &sd, &fr).unwrap();
    for tau in [C64::new(0.0, 3.0), C64::new(0.2, 2.5)] {
        for alpha in CountVector::all(p, qq as u32) {
            let t0 = Instant::now();
            let (lhs, rhs) = split_theta_sides(&ctx, tau, &p_alpha(&alpha, p + qq), &SplitParams::default()).unwrap();
            let dist = lhs.sup_dist(&rhs);
            let size = lhs.components.iter().map(|c| c.norm()).fold(0.0, f64::max);
            eprintln!("{tau} {alpha} |lhs|={size:e} diff={dist:e} tail={:e} {:?}", rhs.tail_bound, t0.elapsed());
            assert!(dist < 1e-4);
        }
    }
}

#[test]
fn splitting_u_u() {
    generic_case(
        vec![vec![0, 1, 0, 0], vec![1, 0, 0, 0], vec![0, 0, 0, 1], vec![0, 0, 1, 0]],
        vec![0, 0, 1, 0],
        vec![0, 0, 0, 1],
        1,
    );
}

#[test]
fn splitting_a2_u() {
    generic_case(
        vec![vec![2, -1, 0, 0], vec![-1, 2, 0, 0], vec![0, 0, 0, 1], vec![0, 0, 1, 0]],
        vec![0, 0, 1, 0],
        vec![0, 0, 0, 1],
        2,
    );
}
