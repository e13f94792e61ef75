use lsw_core::editor::{
    choose_k, linear_edit_baseline, select_reference, swap_top_k, Direction, EditConfig,
};
use lsw_core::{Error, FeatureRanking, LatentDataset, Matrix, RankerId, SpaceTag};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ranking_from(order_seed: u64, d: usize) -> FeatureRanking {
    let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
    let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    FeatureRanking::from_importances("a", RankerId::ForestMdi, raw).unwrap()
}

fn case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, u64, usize)> {
    (1usize..=256).prop_flat_map(|d| {
        (
            prop::collection::vec(-10.0f64..10.0, d),
            prop::collection::vec(-10.0f64..10.0, d),
            any::<u64>(),
            0..=d,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn swap_algebra((t, r, seed, k) in case()) {
        let d = t.len();
        let rank = ranking_from(seed, d);
        prop_assert_eq!(swap_top_k(&t, &r, &rank, 0).unwrap(), t.clone());
        prop_assert_eq!(swap_top_k(&t, &r, &rank, d).unwrap(), r.clone());

        let once = swap_top_k(&t, &r, &rank, k).unwrap();
        prop_assert_eq!(swap_top_k(&once, &r, &rank, k).unwrap(), once.clone());

        let top = rank.top(k);
        for i in 0..d {
            if top.contains(&i) {
                prop_assert_eq!(once[i].to_bits(), r[i].to_bits());
            } else {
                prop_assert_eq!(once[i].to_bits(), t[i].to_bits());
            }
        }
    }

    #[test]
    fn dims_taken_from_reference_grow_with_k((t, r, seed, _k) in case()) {
        let d = t.len();
        let rank = ranking_from(seed, d);
        let mut prev: Vec<bool> = vec![false; d];
        for k in 0..=d {
            let out = swap_top_k(&t, &r, &rank, k).unwrap();
            let from_ref: Vec<bool> = (0..d).map(|i| rank.top(k).contains(&i)).collect();
            for i in 0..d {
                prop_assert!(!prev[i] || from_ref[i]);
                if from_ref[i] {
                    prop_assert_eq!(out[i], r[i]);
                }
            }
            prev = from_ref;
        }
    }

    #[test]
    fn linear_baseline_limits((t, r, seed, k) in case(), step in -5.0f64..5.0) {
        let rank = ranking_from(seed, t.len());
        prop_assert_eq!(linear_edit_baseline(&t, &r, &rank, k, 0.0).unwrap(), t.clone());
        prop_assert_eq!(linear_edit_baseline(&t, &t, &rank, k, step).unwrap(), t.clone());
    }

    /// Whenever the result is flagged satisfied, the loss of the emitted
    /// edit, re-evaluated, is below tau.
    #[test]
    fn budget_compliance(losses in prop::collection::vec(0.0f64..1.0, 4), tau in 0.01f64..1.0) {
        let ds = small_dataset(40, 8, 3);
        let rank = ranking_from(1, 8);
        let mut cfg = EditConfig::new(rank, Direction::Add, tau);
        cfg.k_grid = vec![1, 2, 4, 8];
        cfg.support_n = 5;
        let target = ds.latent(0).to_vec();
        let loss_of = |edited: &[f64]| {
            let changed = edited.iter().zip(&target).filter(|(a, b)| a != b).count();
            losses[changed.min(8).next_power_of_two().trailing_zeros() as usize % 4]
        };
        let res = choose_k(&target, &ds, &cfg, |_, e| Ok::<_, Error>(loss_of(e))).unwrap();
        prop_assert!(cfg.k_grid.contains(&res.chosen_k));
        prop_assert!(res.identity_loss >= 0.0);
        if res.satisfied {
            prop_assert!(loss_of(&res.edited_latent) < tau);
            prop_assert!(res.identity_loss < tau);
        }
    }
}

fn small_dataset(n: usize, d: usize, seed: u64) -> LatentDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latents: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    LatentDataset::new(
        SpaceTag::S,
        Matrix::from_vec(n, d, latents).unwrap(),
        vec!["a".into()],
        Matrix::from_vec(n, 1, scores).unwrap(),
        None,
    )
    .unwrap()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn reference_matches_brute_force_over_extremes() {
    for seed in 0..20 {
        let ds = small_dataset(100, 12, seed);
        let scores = ds.attribute_scores("a").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let target: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        for dir in [Direction::Add, Direction::Remove] {
            let cfg = EditConfig {
                support_n: 32,
                ..EditConfig::new(ranking_from(seed, 12), dir, 0.25)
            };
            // Oracle: the 32 extreme scores by full sort, then exhaustive cosine argmax.
            let mut idx: Vec<usize> = (0..100).collect();
            idx.sort_by(|&a, &b| {
                let (x, y) = (scores[a], scores[b]);
                match dir {
                    Direction::Add => y.partial_cmp(&x).unwrap(),
                    Direction::Remove => x.partial_cmp(&y).unwrap(),
                }
            });
            let best = idx[..32]
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    cosine(ds.latent(a), &target)
                        .partial_cmp(&cosine(ds.latent(b), &target))
                        .unwrap()
                })
                .unwrap();
            assert_eq!(select_reference(&ds, &cfg, &target).unwrap(), best);
        }
    }
}

#[test]
fn support_of_one_ignores_similarity() {
    let ds = small_dataset(50, 6, 9);
    let scores = ds.attribute_scores("a").unwrap();
    let top = (0..50)
        .max_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap())
        .unwrap();
    let cfg = EditConfig {
        support_n: 1,
        ..EditConfig::new(ranking_from(0, 6), Direction::Add, 0.25)
    };
    for i in 0..50 {
        assert_eq!(select_reference(&ds, &cfg, ds.latent(i)).unwrap(), top);
    }
}

#[test]
fn target_in_support_selects_itself() {
    let ds = small_dataset(100, 10, 4);
    let cfg = EditConfig::new(ranking_from(0, 10), Direction::Remove, 0.25);
    let support = lsw_core::editor::support_set(&ds, "a", Direction::Remove, 32).unwrap();
    for &i in &support {
        assert_eq!(select_reference(&ds, &cfg, ds.latent(i)).unwrap(), i);
    }
}

#[test]
fn constant_losses() {
    let ds = small_dataset(40, 16, 2);
    let cfg = EditConfig::new(ranking_from(3, 16), Direction::Add, 0.25);
    let t = ds.latent(5).to_vec();
    let zero = choose_k(&t, &ds, &cfg, |_, _| Ok::<_, Error>(0.0)).unwrap();
    assert_eq!(zero.chosen_k, 16);
    assert!(zero.satisfied);
    let one = choose_k(&t, &ds, &cfg, |_, _| Ok::<_, Error>(1.0)).unwrap();
    assert_eq!(one.chosen_k, 1);
    assert!(!one.satisfied);
    assert_eq!(
        one.edited_latent,
        swap_top_k(&t, ds.latent(one.reference_index), &cfg.ranking, 1).unwrap()
    );
}
