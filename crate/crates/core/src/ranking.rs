//! Per-attribute rankings of latent dimensions.
//!
//! [`rank_forest`] is the default. [`rank_score_topk`] (squared Pearson
//! correlation) and [`rank_linear_coef`] (hinge-loss linear classifier
//! weights) are univariate and linear alternatives that miss attributes
//! whose dependence on a dimension is periodic.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::forest::{self, ForestConfig};
use crate::{rng, Error, FeatureRanking, LatentDataset, RankerId, Result};

/// Ranks dimensions by the MDI importance of a regression forest trained on
/// the attribute's scores.
pub fn rank_forest(
    dataset: &LatentDataset,
    attribute: &str,
    cfg: &ForestConfig,
) -> Result<FeatureRanking> {
    let y = dataset.attribute_scores(attribute)?;
    let model = forest::fit(dataset.latents(), &y, cfg)?;
    FeatureRanking::from_importances(attribute, RankerId::ForestMdi, model.importances)
}

/// Ranks dimensions by squared Pearson correlation with the attribute score.
/// Constant dimensions score zero.
pub fn rank_score_topk(dataset: &LatentDataset, attribute: &str) -> Result<FeatureRanking> {
    let y = dataset.attribute_scores(attribute)?;
    let n = y.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let y_var: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    let x = dataset.latents();
    let raw = (0..dataset.n_dims())
        .map(|d| {
            let col = x.column(d);
            let mean = col.iter().sum::<f64>() / n as f64;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (xi, yi) in col.iter().zip(&y) {
                sxy += (xi - mean) * (yi - y_mean);
                sxx += (xi - mean) * (xi - mean);
            }
            if sxx <= 0.0 || y_var <= 0.0 {
                0.0
            } else {
                (sxy * sxy / (sxx * y_var)).min(1.0)
            }
        })
        .collect();
    FeatureRanking::from_importances(attribute, RankerId::ScoreTopk, raw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRankerConfig {
    /// L2 penalty strength; `f64::INFINITY` forces all weights to zero.
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearRankerConfig {
    fn default() -> Self {
        LinearRankerConfig {
            l2: 1e-2,
            epochs: 20,
            seed: 0,
        }
    }
}

/// Weights and bias of a linear classifier on standardised features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Trains a hinge-loss linear classifier by SGD on standardised latents
/// against scores binarised at 0.5 (`η_t = η₀ / (1 + η₀ λ t)`, seeded
/// per-epoch shuffling).
pub fn train_linear_svm(
    dataset: &LatentDataset,
    attribute: &str,
    cfg: &LinearRankerConfig,
) -> Result<LinearModel> {
    if cfg.l2.is_nan() || cfg.l2 <= 0.0 {
        return Err(Error::InvalidConfig("l2 must be positive".into()));
    }
    let y: Vec<f64> = dataset
        .attribute_scores(attribute)?
        .into_iter()
        .map(|s| if s >= 0.5 { 1.0 } else { -1.0 })
        .collect();
    let positives = y.iter().filter(|&&v| v > 0.0).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClass(attribute.into()));
    }
    let d = dataset.n_dims();
    if cfg.l2.is_infinite() {
        return Ok(LinearModel {
            weights: vec![0.0; d],
            bias: 0.0,
        });
    }

    let x = standardize(dataset);
    let n = y.len();
    let eta0 = 0.1;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut t = 1.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(cfg.seed, 0);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = eta0 / (1.0 + eta0 * cfg.l2 * t);
            let row = &x[i * d..(i + 1) * d];
            let margin = y[i] * (crate::toygen::dot(&w, row) + b);
            let shrink = 1.0 - eta * cfg.l2;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(row) {
                    *wj += eta * y[i] * xj;
                }
                b += eta * y[i];
            }
            t += 1.0;
        }
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
    })
}

/// Ranks dimensions by the absolute weights of [`train_linear_svm`].
pub fn rank_linear_coef(
    dataset: &LatentDataset,
    attribute: &str,
    cfg: &LinearRankerConfig,
) -> Result<FeatureRanking> {
    let model = train_linear_svm(dataset, attribute, cfg)?;
    let raw = model.weights.iter().map(|w| libm::fabs(*w)).collect();
    FeatureRanking::from_importances(attribute, RankerId::LinearCoef, raw)
}

/// Row-major z-scored copy of the latents; constant columns become zero.
fn standardize(dataset: &LatentDataset) -> Vec<f64> {
    let (n, d) = (dataset.n_samples(), dataset.n_dims());
    let x = dataset.latents();
    let mut out = x.as_slice().to_vec();
    for j in 0..d {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = libm::sqrt(var);
        for i in 0..n {
            out[i * d + j] = if sd > 0.0 { (col[i] - mean) / sd } else { 0.0 };
        }
    }
    out
}
