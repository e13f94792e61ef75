use lsw_core::forest::ForestConfig;
use lsw_core::ranking::{rank_forest, rank_linear_coef, rank_score_topk, LinearRankerConfig};
use lsw_core::{LatentDataset, Matrix, SpaceTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dataset(x: Matrix, scores: Vec<f64>) -> LatentDataset {
    let n = scores.len();
    LatentDataset::new(
        SpaceTag::S,
        x,
        vec!["a".into()],
        Matrix::from_vec(n, 1, scores).unwrap(),
        None,
    )
    .unwrap()
}

fn gaussian(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_vec(n, d, data).unwrap()
}

fn forest() -> ForestConfig {
    ForestConfig {
        n_trees: 30,
        ..Default::default()
    }
}

#[test]
fn rankers_agree_on_monotone_attributes() {
    let mut agree = 0;
    for trial in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let d = 16;
        let x = gaussian(800, d, &mut rng);
        let p = rng.random_range(0..d);
        let scores = (0..800)
            .map(|i| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                logistic(3.0 * x.get(i, p) + 0.5 * noise)
            })
            .collect();
        let ds = dataset(x, scores);
        let f = rank_forest(&ds, "a", &forest().with_seed(trial)).unwrap();
        let s = rank_score_topk(&ds, "a").unwrap();
        let l = rank_linear_coef(
            &ds,
            "a",
            &LinearRankerConfig {
                seed: trial,
                ..Default::default()
            },
        )
        .unwrap();
        for r in [&f, &s, &l] {
            r.validate().unwrap();
        }
        if f.order[0] == p && s.order[0] == p && l.order[0] == p {
            agree += 1;
        }
    }
    assert!(agree >= 45, "agreement in {agree}/50 trials");
}

/// Score flips periodically along one dim; thirty other dims carry a weak
/// monotone signal.
#[test]
fn periodic_attribute_defeats_the_linear_ranker() {
    let mut ok = 0;
    let trials = 20;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let (n, d) = (2000, 64);
        let x = gaussian(n, d, &mut rng);
        let p = rng.random_range(0..d);
        let weak: Vec<usize> = (0..d).filter(|&j| j != p).take(30).collect();
        let scores = (0..n)
            .map(|i| {
                let lin: f64 = weak.iter().map(|&j| 0.4 * x.get(i, j)).sum();
                logistic(4.0 * (3.0 * x.get(i, p)).cos() + lin)
            })
            .collect();
        let ds = dataset(x, scores);
        let f = rank_forest(&ds, "a", &forest().with_seed(trial)).unwrap();
        let l = rank_linear_coef(
            &ds,
            "a",
            &LinearRankerConfig {
                seed: trial,
                ..Default::default()
            },
        )
        .unwrap();
        if f.rank_of(p).unwrap() < 5 && l.rank_of(p).unwrap() >= 25 {
            ok += 1;
        }
    }
    assert!(ok * 10 >= trials * 8, "{ok}/{trials} trials");
}

#[test]
fn forest_finds_the_logistic_dim() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = gaussian(1000, 12, &mut rng);
    let scores: Vec<f64> = (0..1000).map(|i| logistic(x.get(i, 7))).collect();
    // Oracle: the dim with the largest absolute correlation.
    let corr = |j: usize| {
        let col = x.column(j);
        let (mx, my) = (
            col.iter().sum::<f64>() / 1000.0,
            scores.iter().sum::<f64>() / 1000.0,
        );
        let cov: f64 = col
            .iter()
            .zip(&scores)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum();
        let vx: f64 = col.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = scores.iter().map(|b| (b - my).powi(2)).sum();
        (cov / (vx * vy).sqrt()).abs()
    };
    let best = (0..12)
        .max_by(|&a, &b| corr(a).partial_cmp(&corr(b)).unwrap())
        .unwrap();
    assert_eq!(best, 7);
    let ds = dataset(x, scores);
    let r = rank_forest(&ds, "a", &forest()).unwrap();
    assert_eq!(r.order[0], 7);
    assert_eq!(r, rank_forest(&ds, "a", &forest()).unwrap());
}

#[test]
fn constant_scores_give_identity_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ds = dataset(gaussian(100, 6, &mut rng), vec![0.3; 100]);
    let r = rank_forest(&ds, "a", &forest()).unwrap();
    assert_eq!(r.order, (0..6).collect::<Vec<_>>());
    assert!(r.importances.iter().all(|&v| v == 0.0));
}

#[test]
fn correlation_ranker_is_flat_on_noise_on_average() {
    let d = 16;
    let mut mean = vec![0.0; d];
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian(500, d, &mut rng);
        let scores = (0..500).map(|_| rng.random::<f64>()).collect();
        let r = rank_score_topk(&dataset(x, scores), "a").unwrap();
        for (m, v) in mean.iter_mut().zip(&r.importances) {
            *m += v / 50.0;
        }
    }
    let bound = 3.0 / d as f64;
    assert!(mean.iter().all(|&v| v < bound), "{mean:?}");
}

#[test]
fn linear_ranker_on_separable_dim() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 400;
    let mut x = gaussian(n, 8, &mut rng);
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let v = x.get(i, 4);
        let shifted = if v >= 0.0 { v + 0.5 } else { v - 0.5 };
        x.set(i, 4, shifted);
        scores.push(if shifted > 0.0 { 0.9 } else { 0.1 });
    }
    // Oracle: only a stump on dim 4 separates the classes, with margin ≥ 1.
    for j in 0..8 {
        let col = x.column(j);
        let pos = (0..n).filter(|&i| scores[i] > 0.5).map(|i| col[i]);
        let neg = (0..n).filter(|&i| scores[i] < 0.5).map(|i| col[i]);
        let gap = pos.fold(f64::MAX, f64::min) - neg.fold(f64::MIN, f64::max);
        assert_eq!(gap >= 1.0, j == 4, "dim {j} gap {gap}");
    }
    let r = rank_linear_coef(&dataset(x, scores), "a", &LinearRankerConfig::default()).unwrap();
    assert_eq!(r.order[0], 4);
}
