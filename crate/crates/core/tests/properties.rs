use kmlift::field::{q, qfrac};
use kmlift::grassmannian::{block_chart, block_gram, Block, SplitFrame};
use kmlift::km_polynomials::CountVector;
use kmlift::lattice_core::{build_lattice, discriminant_group, split_data};
use kmlift::lift::{synthetic_table, trailing_u, y_integral, Lift, LiftRequest, YMethod};
use kmlift::weil_rep::{relation_defects, weil_generators};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn y_integral_two_methods(s in -3.0f64..3.0, a in 0.05f64..6.0, b in 0.05f64..6.0) {
        let k = y_integral(s, a, b, YMethod::Bessel, 1e-13).unwrap();
        let qd = y_integral(s, a, b, YMethod::Quadrature, 1e-13).unwrap();
        prop_assert!(k > 0.0);
        prop_assert!((k - qd).abs() <= 1e-9 * k.abs(), "s={s} a={a} b={b}: {k} vs {qd}");
    }

    #[test]
    fn y_integral_symmetry(s in -3.0f64..3.0, a in 0.05f64..6.0, b in 0.05f64..6.0) {
        // y ↦ 1/y exchanges A and B and sends s to −s−2
        let l = y_integral(s, a, b, YMethod::Bessel, 1e-13).unwrap();
        let r = y_integral(-s - 2.0, b, a, YMethod::Bessel, 1e-13).unwrap();
        prop_assert!((l - r).abs() <= 1e-10 * l.abs());
    }

    #[test]
    fn weil_relations_hold(d1 in 1i64..4, d2 in 1i64..4, n in 1i64..4, neg in any::<bool>()) {
        let mut gram = vec![vec![0i64; 4]; 4];
        gram[0][0] = 2 * d1;
        gram[1][1] = if neg { -2 * d2 } else { 2 * d2 };
        gram[2][3] = n;
        gram[3][2] = n;
        let l = build_lattice(gram).unwrap();
        let d = discriminant_group(&l).unwrap();
        prop_assert_eq!(d.len() as i64, 4 * d1 * d2 * n * n);
        let (rel, comm, unit) = relation_defects(&weil_generators(&l, &d));
        prop_assert!(rel < 1e-10 && comm < 1e-10 && unit < 1e-10, "{rel} {comm} {unit}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fourier_coefficient_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let blocks = [Block::A1, Block::U(1)];
        let l = build_lattice(block_gram(&blocks)).unwrap();
        let d = discriminant_group(&l).unwrap();
        let (u, up) = trailing_u(&blocks);
        let sd = split_data(&l, &d, &u, &up).unwrap();
        let fr = SplitFrame::from_chart(&l, block_chart(&blocks).unwrap(), &sd.u, &sd.u_prime).unwrap().to_f64();
        let k = C64::new(re, im);
        let f1 = synthetic_table(&d, &q(3), 0.5, s1);
        let f2 = synthetic_table(&d, &q(3), 0.5, s2);
        let f12 = f1.add(&f2.scale(k));
        for alpha in CountVector::all(2, 1) {
            let val = |f: &kmlift::theta::CoeffTable, lam| {
                let req = LiftRequest::new(&l, &d, &sd, &fr, f.clone(), alpha.clone(), 0);
                Lift::new(&req).unwrap().fourier_coefficient(&[lam], YMethod::Bessel).unwrap().value
            };
            for lam in [qfrac(1, 2), q(1)] {
                let (a, b, c) = (val(&f1, lam.clone()), val(&f2, lam.clone()), val(&f12, lam));
                prop_assert!((a + k * b - c).norm() <= 1e-11 * (1.0 + c.norm()));
            }
        }
    }
}
