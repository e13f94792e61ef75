use lsw_core::metrics::{
    frechet_distance, identity_preservation, kernel_distance, semantic_correctness,
};
use lsw_core::Matrix;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, e: usize, offset: &[f64], rng: &mut ChaCha8Rng) -> Matrix {
    let data: Vec<f64> = (0..n * e)
        .map(|k| {
            let v: f64 = StandardNormal.sample(rng);
            v + offset[k % e]
        })
        .collect();
    Matrix::from_vec(n, e, data).unwrap()
}

fn random_orthogonal(e: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(e, e, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

fn transform(m: &Matrix, q: &DMatrix<f64>) -> Matrix {
    let x = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let y = x * q;
    let rows: Vec<Vec<f64>> = y.row_iter().map(|r| r.iter().copied().collect()).collect();
    Matrix::from_rows(m.cols(), &rows).unwrap()
}

#[test]
fn frechet_self_distance_and_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = gaussian(500, 6, &[0.0; 6], &mut rng);
    let b = gaussian(400, 6, &[0.3, 0.0, -0.2, 0.0, 0.0, 1.0], &mut rng);
    assert!(frechet_distance(&a, &a).unwrap().value < 1e-6);
    let (ab, ba) = (
        frechet_distance(&a, &b).unwrap().value,
        frechet_distance(&b, &a).unwrap().value,
    );
    assert!((ab - ba).abs() < 1e-9, "{ab} vs {ba}");
}

#[test]
fn frechet_of_offset_gaussians_is_squared_offset() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let v = [1.0, -0.5, 0.8, 0.0, 0.3];
    let expected: f64 = v.iter().map(|x| x * x).sum();
    let a = gaussian(10_000, 5, &[0.0; 5], &mut rng);
    let b = gaussian(10_000, 5, &v, &mut rng);
    let fd = frechet_distance(&a, &b).unwrap();
    assert!(!fd.regularized);
    assert!(
        (fd.value - expected).abs() / expected < 0.05,
        "{} vs {expected}",
        fd.value
    );
}

#[test]
fn frechet_is_invariant_under_common_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let a = gaussian(300, 8, &[0.5; 8], &mut rng);
        let b = gaussian(300, 8, &[0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.2], &mut rng);
        let q = random_orthogonal(8, &mut rng);
        let before = frechet_distance(&a, &b).unwrap().value;
        let after = frechet_distance(&transform(&a, &q), &transform(&b, &q))
            .unwrap()
            .value;
        assert!((before - after).abs() < 1e-6, "{before} vs {after}");
    }
}

#[test]
fn rank_deficient_covariance_is_regularized_and_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = gaussian(5, 8, &[0.0; 8], &mut rng);
    let b = gaussian(5, 8, &[0.0; 8], &mut rng);
    let fd = frechet_distance(&a, &b).unwrap();
    assert!(fd.regularized);
    assert!(fd.value.is_finite() && fd.value >= 0.0);
}

#[test]
fn kernel_distance_null_and_sweep() {
    let e = 8;
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let a = gaussian(1000, e, &[0.0; 8], &mut rng);
        let b = gaussian(1000, e, &[0.0; 8], &mut rng);
        let kid = kernel_distance(&a, &b, 500, 10, seed).unwrap();
        assert!(kid.abs() < 0.01, "seed {seed}: {kid}");
        assert_eq!(kid, kernel_distance(&a, &b, 500, 10, seed).unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = gaussian(1000, e, &[0.0; 8], &mut rng);
    let sweep: Vec<f64> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&o| {
            let shifted = gaussian(1000, e, &[o; 8], &mut rng);
            kernel_distance(&base, &shifted, 500, 10, 0).unwrap()
        })
        .collect();
    assert!(
        sweep[0] > 0.0 && sweep[0] < sweep[1] && sweep[1] < sweep[2],
        "{sweep:?}"
    );
}

#[test]
fn identity_rates_for_copies_and_negations() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = gaussian(50, 4, &[0.0; 4], &mut rng);
    let neg = Matrix::from_vec(50, 4, a.as_slice().iter().map(|v| -v).collect()).unwrap();
    assert_eq!(identity_preservation(&a, &a, 0.99).unwrap(), 1.0);
    for thr in [1e-6, 0.3, 0.9] {
        assert_eq!(identity_preservation(&a, &neg, thr).unwrap(), 0.0);
    }
}

proptest! {
    #[test]
    fn rates_ignore_common_row_order(seed in any::<u64>(), n in 1usize..60, thr in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(n, 3, &[0.1; 3], &mut rng);
        let b = gaussian(n, 3, &[0.1; 3], &mut rng);
        let before: Vec<f64> = (0..n).map(|i| (a.get(i, 0).tanh() + 1.0) / 2.0).collect();
        let after: Vec<f64> = (0..n).map(|i| (b.get(i, 0).tanh() + 1.0) / 2.0).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let pb: Vec<f64> = perm.iter().map(|&i| before[i]).collect();
        let pa: Vec<f64> = perm.iter().map(|&i| after[i]).collect();
        prop_assert_eq!(semantic_correctness(&before, &after, thr).unwrap(), semantic_correctness(&pb, &pa, thr).unwrap());
        prop_assert_eq!(
            identity_preservation(&a, &b, thr).unwrap(),
            identity_preservation(&a.select_rows(&perm), &b.select_rows(&perm), thr).unwrap()
        );
    }
}
