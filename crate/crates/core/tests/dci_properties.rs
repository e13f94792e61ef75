use lsw_core::dci::{compute_dci, disentanglement_completeness};
use lsw_core::forest::{ForestConfig, MaxFeatures};
use lsw_core::{LatentDataset, Matrix, SpaceTag};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Three attributes, each a noisy function of one or two of six dims.
fn dataset(seed: u64, n: usize) -> LatentDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 6;
    let x: Vec<f64> = (0..n * d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut scores = Vec::with_capacity(n * 3);
    for i in 0..n {
        let r = &x[i * d..(i + 1) * d];
        let noise = |rng: &mut ChaCha8Rng| -> f64 {
            let v: f64 = StandardNormal.sample(rng);
            0.3 * v
        };
        scores.push(logistic(3.0 * r[0] + noise(&mut rng)));
        scores.push(logistic(2.0 * r[2] + r[3] + noise(&mut rng)));
        scores.push(logistic(2.0 * r[4] - r[0] + noise(&mut rng)));
    }
    LatentDataset::new(
        SpaceTag::S,
        Matrix::from_vec(n, d, x).unwrap(),
        vec!["a".into(), "b".into(), "c".into()],
        Matrix::from_vec(n, 3, scores).unwrap(),
        None,
    )
    .unwrap()
}

/// Deterministic, resampling-free forest so that data transformations map
/// one-to-one onto tree transformations. Depth is capped so that no node is
/// small enough for two dims to tie exactly.
fn exact_cfg() -> ForestConfig {
    ForestConfig {
        n_trees: 3,
        max_depth: Some(4),
        max_features: MaxFeatures::All,
        bootstrap: false,
        min_samples_leaf: 1,
        ..Default::default()
    }
}

fn permute_columns(m: &Matrix, perm: &[usize]) -> Matrix {
    let rows: Vec<Vec<f64>> = m
        .iter_rows()
        .map(|r| perm.iter().map(|&j| r[j]).collect())
        .collect();
    Matrix::from_rows(perm.len(), &rows).unwrap()
}

#[test]
fn extremes() {
    let diag = Matrix::from_rows(
        3,
        &[
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0],
        ],
    )
    .unwrap();
    let (d, c) = disentanglement_completeness(&diag).unwrap();
    assert!((d - 1.0).abs() < 1e-9 && (c - 1.0).abs() < 1e-9);
    let uniform = Matrix::from_vec(8, 4, vec![0.125; 32]).unwrap();
    let (d, c) = disentanglement_completeness(&uniform).unwrap();
    assert!(d < 0.05 && c < 0.05);
}

#[test]
fn permuting_dims_permutes_rows_and_keeps_scores() {
    let ds = dataset(1, 600);
    let (train, test) = ds.split_by_index(0.8);
    let base = compute_dci(&train, &test, &exact_cfg()).unwrap();
    let perm = [3, 5, 0, 4, 1, 2];
    let pd = |x: &LatentDataset| {
        LatentDataset::new(
            SpaceTag::S,
            permute_columns(x.latents(), &perm),
            x.attribute_names().to_vec(),
            x.scores().clone(),
            None,
        )
        .unwrap()
    };
    let moved = compute_dci(&pd(&train), &pd(&test), &exact_cfg()).unwrap();
    for (new_row, &old_row) in perm.iter().enumerate() {
        for j in 0..3 {
            let (a, b) = (
                moved.importance_matrix.get(new_row, j),
                base.importance_matrix.get(old_row, j),
            );
            assert!((a - b).abs() < 1e-9, "row {new_row} col {j}: {a} vs {b}");
        }
    }
    assert!((moved.disentanglement - base.disentanglement).abs() < 1e-9);
    assert!((moved.completeness - base.completeness).abs() < 1e-9);
    assert!((moved.informativeness - base.informativeness).abs() < 1e-9);
}

#[test]
fn permuting_attributes_keeps_disentanglement_and_informativeness() {
    let ds = dataset(2, 600);
    let perm = [2, 0, 1];
    let names: Vec<String> = perm
        .iter()
        .map(|&j| ds.attribute_names()[j].clone())
        .collect();
    let moved = LatentDataset::new(
        SpaceTag::S,
        ds.latents().clone(),
        names,
        permute_columns(ds.scores(), &perm),
        None,
    )
    .unwrap();
    let (tr, te) = ds.split_by_index(0.8);
    let base = compute_dci(&tr, &te, &exact_cfg()).unwrap();
    let (tr2, te2) = moved.split_by_index(0.8);
    let other = compute_dci(&tr2, &te2, &exact_cfg()).unwrap();
    assert!((base.disentanglement - other.disentanglement).abs() < 1e-9);
    assert!((base.informativeness - other.informativeness).abs() < 1e-9);
    assert!((base.completeness - other.completeness).abs() < 1e-9);
}

#[test]
fn duplicating_training_samples_changes_nothing() {
    let ds = dataset(3, 500);
    let (train, test) = ds.split_by_index(0.8);
    let base = compute_dci(&train, &test, &exact_cfg()).unwrap();
    let twice: Vec<usize> = (0..train.n_samples()).flat_map(|i| [i, i]).collect();
    let doubled = compute_dci(&train.select(&twice), &test, &exact_cfg()).unwrap();
    assert!((doubled.disentanglement - base.disentanglement).abs() < 1e-9);
    assert!((doubled.completeness - base.completeness).abs() < 1e-9);
    assert!((doubled.informativeness - base.informativeness).abs() < 1e-9);
}

#[test]
fn single_class_attribute_is_rejected() {
    let ds = dataset(4, 200);
    let mut scores = ds.scores().clone();
    for i in 0..200 {
        scores.set(i, 1, 0.2);
    }
    let bad = LatentDataset::new(
        SpaceTag::S,
        ds.latents().clone(),
        ds.attribute_names().to_vec(),
        scores,
        None,
    )
    .unwrap();
    let (tr, te) = bad.split_by_index(0.8);
    assert!(compute_dci(&tr, &te, &exact_cfg()).is_err());
}

proptest! {
    #[test]
    fn scores_bounded_and_row_permutation_invariant(
        d in 2usize..12,
        a in 2usize..6,
        seed in any::<u64>(),
        zeros in 0.0f64..0.5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..d * a).map(|_| if rng.random::<f64>() < zeros { 0.0 } else { rng.random::<f64>() }).collect();
        let r = Matrix::from_vec(d, a, data).unwrap();
        let (dis, com) = disentanglement_completeness(&r).unwrap();
        prop_assert!((0.0..=1.0).contains(&dis) && (0.0..=1.0).contains(&com));
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rng);
        let (dp, cp) = disentanglement_completeness(&r.select_rows(&perm)).unwrap();
        prop_assert!((dp - dis).abs() < 1e-9 && (cp - com).abs() < 1e-9);
    }
}
