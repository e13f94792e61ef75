//! Disentanglement, completeness and informativeness of a latent space,
//! computed from per-attribute forest importances.
//!
//! With `R` the D×A importance matrix (one column per attribute):
//!
//! * disentanglement = Σ_i ρ_i (1 − H_A(P_i·)), `P_ij = R_ij / Σ_j R_ij`,
//!   `ρ_i = Σ_j R_ij / Σ_ij R_ij`
//! * completeness = mean_j (1 − H_D(P̃_·j)), `P̃_ij = R_ij / Σ_i R_ij`
//! * informativeness = mean test accuracy of the forests at threshold 0.5
//!
//! `H_k` is the entropy with logarithm base `k`. All-zero rows carry no
//! weight; an all-zero column contributes zero completeness.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::forest::{self, ForestConfig};
use crate::{Error, LatentDataset, Matrix, Result, SpaceTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DciReport {
    pub space_tag: SpaceTag,
    pub disentanglement: f64,
    pub completeness: f64,
    pub informativeness: f64,
    /// D×A, column j holds the importances for attribute j.
    pub importance_matrix: Matrix,
    pub per_attribute_accuracy: Vec<f64>,
}

fn normalized_entropy(p: impl Iterator<Item = f64>, base: usize) -> f64 {
    let h: f64 = p.filter(|&v| v > 0.0).map(|v| -v * libm::log(v)).sum();
    h / libm::log(base as f64)
}

/// Disentanglement and completeness of a D×A importance matrix.
pub fn disentanglement_completeness(r: &Matrix) -> Result<(f64, f64)> {
    let (d, a) = (r.rows(), r.cols());
    if d < 2 || a < 2 {
        return Err(Error::InvalidConfig(format!(
            "DCI needs at least 2 dims and 2 attributes (got {d}×{a})"
        )));
    }
    if r.as_slice().iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Degenerate(
            "importance matrix has negative or non-finite entries".into(),
        ));
    }
    let total: f64 = r.as_slice().iter().sum();

    let mut disentanglement = 0.0;
    if total > 0.0 {
        for i in 0..d {
            let row = r.row(i);
            let row_sum: f64 = row.iter().sum();
            if row_sum > 0.0 {
                let h = normalized_entropy(row.iter().map(|v| v / row_sum), a);
                disentanglement += (row_sum / total) * (1.0 - h);
            }
        }
    }

    let mut completeness = 0.0;
    for j in 0..a {
        let col = r.column(j);
        let col_sum: f64 = col.iter().sum();
        if col_sum > 0.0 {
            completeness += 1.0 - normalized_entropy(col.iter().map(|v| v / col_sum), d);
        }
    }
    completeness /= a as f64;

    Ok((
        disentanglement.clamp(0.0, 1.0),
        completeness.clamp(0.0, 1.0),
    ))
}

/// Fits one forest per attribute on `train` and scores the latent space.
/// Attribute `j` uses forest seed `cfg.seed + j`.
pub fn compute_dci(
    train: &LatentDataset,
    test: &LatentDataset,
    cfg: &ForestConfig,
) -> Result<DciReport> {
    let d = train.n_dims();
    if test.n_dims() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: test.n_dims(),
        });
    }
    if train.attribute_names() != test.attribute_names() {
        return Err(Error::InvalidDataset(
            "train and test attribute names differ".into(),
        ));
    }
    if test.n_samples() == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let a = train.attribute_names().len();
    if d < 2 || a < 2 {
        return Err(Error::InvalidConfig(format!(
            "DCI needs at least 2 dims and 2 attributes (got {d}×{a})"
        )));
    }

    let mut importance = Matrix::zeros(d, a);
    let mut accuracy = Vec::with_capacity(a);
    for (j, name) in train.attribute_names().iter().enumerate() {
        let y = train.scores().column(j);
        let positives = y.iter().filter(|&&v| v >= 0.5).count();
        if positives == 0 || positives == y.len() {
            return Err(Error::SingleClass(name.clone()));
        }
        let cfg_j = cfg.clone().with_seed(cfg.seed.wrapping_add(j as u64));
        let model = forest::fit(train.latents(), &y, &cfg_j)?;
        for (i, &v) in model.importances.iter().enumerate() {
            importance.set(i, j, v);
        }
        let hits = test
            .latents()
            .iter_rows()
            .zip(test.scores().column(j))
            .filter(|(x, s)| (model.predict_unchecked(x) >= 0.5) == (*s >= 0.5))
            .count();
        accuracy.push(hits as f64 / test.n_samples() as f64);
    }

    let (disentanglement, completeness) = disentanglement_completeness(&importance)?;
    let informativeness = accuracy.iter().sum::<f64>() / a as f64;
    Ok(DciReport {
        space_tag: train.space_tag(),
        disentanglement,
        completeness,
        informativeness,
        importance_matrix: importance,
        per_attribute_accuracy: accuracy,
    })
}
