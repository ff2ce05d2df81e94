use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subsym_core::linalg::{self, c, CMat};
use subsym_core::semiclassical::{dense_sigma_min, sigma_min, SubexModel, SweepModel};
use subsym_core::spectral::spectral_projection;
use subsym_core::sparse::{SparseLu, SparseMatrix};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hermitian_split_reassembles(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = linalg::random_cmat(&mut rng, n, n);
        let (re, im) = linalg::hermitian_split(&a);
        prop_assert!(linalg::frob(&(&re + &im * c(0.0, 1.0) - &a)) < 1e-12);
        prop_assert!(linalg::frob(&(&re - re.adjoint())) < 1e-14);
        prop_assert!(linalg::frob(&(&im - im.adjoint())) < 1e-14);
    }

    #[test]
    fn projection_is_idempotent_and_commutes(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = linalg::random_conditioned(&mut rng, n, 4.0);
        let d: Vec<_> = (0..n).map(|i| if i == 0 { c(1e-3, 0.0) } else { c(1.0 + i as f64, 0.5) }).collect();
        let q = &s * CMat::from_diagonal(&nalgebra::DVector::from_vec(d)) * linalg::inverse(&s).unwrap();
        let p = spectral_projection(&q, None, None).unwrap();
        prop_assert_eq!(p.rank, 1);
        prop_assert!(p.idempotency_defect <= 1e-8 && p.commutation_defect <= 1e-8);
    }

    #[test]
    fn sparse_lu_solves(seed in any::<u64>(), n in 3usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = SparseMatrix::new(n);
        for i in 0..n {
            a.push(i, i, c(4.0, 1.0));
            a.push(i, (i + 1) % n, c(linalg::gaussian(&mut rng), 0.0));
            a.push(i, (i + n - 1) % n, c(0.0, linalg::gaussian(&mut rng)));
        }
        let x: Vec<_> = (0..n).map(|i| c(i as f64, 1.0)).collect();
        let lu = SparseLu::new(&a).unwrap();
        let y = lu.solve(&a.matvec(&x));
        let z = lu.solve_adjoint(&a.adjoint_matvec(&x));
        for i in 0..n {
            prop_assert!((y[i] - x[i]).norm() < 1e-9 && (z[i] - x[i]).norm() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn iterative_sigma_matches_dense(alpha in prop_oneof![Just(0.0), Just(0.5), Just(1.0)], beta in -2.0f64..2.0, h in 1e-3f64..1e-1) {
        let m = SubexModel { grid: Some((24, 24)), ..SubexModel::new(alpha, beta) };
        let op = m.discretize(h).unwrap();
        let dense = op.blocks.iter().map(dense_sigma_min).fold(f64::INFINITY, f64::min);
        let it = sigma_min(&op).unwrap();
        prop_assert!((it / dense - 1.0).abs() < 1e-8, "{} {}", it, dense);
    }
}
