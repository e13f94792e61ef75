//! In-memory latent datasets and per-attribute feature rankings.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// Which latent space a dataset's codes live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceTag {
    /// Raw Gaussian input codes.
    Z,
    /// Mapped style / modulation codes.
    S,
}

impl fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceTag::Z => f.write_str("Z"),
            SpaceTag::S => f.write_str("S"),
        }
    }
}

/// N latent codes with per-sample attribute scores and optional identity
/// embeddings. Construction validates every invariant; a dataset that
/// exists is well-formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentDataset {
    space_tag: SpaceTag,
    latents: Matrix,
    attribute_names: Vec<String>,
    scores: Matrix,
    embeddings: Option<Matrix>,
    domain: Option<String>,
}

impl LatentDataset {
    pub fn new(
        space_tag: SpaceTag,
        latents: Matrix,
        attribute_names: Vec<String>,
        scores: Matrix,
        embeddings: Option<Matrix>,
    ) -> Result<Self> {
        let n = latents.rows();
        if scores.rows() != n {
            return Err(Error::InvalidDataset(format!(
                "scores have {} rows but latents have {n}",
                scores.rows()
            )));
        }
        if scores.cols() != attribute_names.len() {
            return Err(Error::InvalidDataset(format!(
                "scores have {} columns but {} attribute names",
                scores.cols(),
                attribute_names.len()
            )));
        }
        for (i, name) in attribute_names.iter().enumerate() {
            if attribute_names[..i].contains(name) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate attribute name `{name}`"
                )));
            }
        }
        if let Some((row, col)) = latents.find_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        for i in 0..n {
            for (j, &v) in scores.row(i).iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidDataset(format!(
                        "score {v} outside [0,1] at row {i}, column {j} (`{}`)",
                        attribute_names[j]
                    )));
                }
            }
        }
        if let Some(emb) = &embeddings {
            if emb.rows() != n {
                return Err(Error::InvalidDataset(format!(
                    "embeddings have {} rows but latents have {n}",
                    emb.rows()
                )));
            }
            if let Some((row, col)) = emb.find_non_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(LatentDataset {
            space_tag,
            latents,
            attribute_names,
            scores,
            embeddings,
            domain: None,
        })
    }

    /// Tags the dataset with a content domain such as `"face"`.
    pub fn with_domain(mut self, domain: Option<String>) -> Self {
        self.domain = domain;
        self
    }

    pub fn space_tag(&self) -> SpaceTag {
        self.space_tag
    }

    pub fn n_samples(&self) -> usize {
        self.latents.rows()
    }

    pub fn n_dims(&self) -> usize {
        self.latents.cols()
    }

    pub fn latents(&self) -> &Matrix {
        &self.latents
    }

    pub fn latent(&self, i: usize) -> &[f64] {
        self.latents.row(i)
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn embeddings(&self) -> Option<&Matrix> {
        self.embeddings.as_ref()
    }

    pub fn domain(&self) -> Option<&str> {
        self.domain.as_deref()
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attribute_names
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// Score column of one attribute.
    pub fn attribute_scores(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.attribute_index(name)?;
        Ok(self.scores.column(j))
    }

    /// Subset of the dataset with the given rows, in order.
    pub fn select(&self, idx: &[usize]) -> LatentDataset {
        LatentDataset {
            space_tag: self.space_tag,
            latents: self.latents.select_rows(idx),
            attribute_names: self.attribute_names.clone(),
            scores: self.scores.select_rows(idx),
            embeddings: self.embeddings.as_ref().map(|e| e.select_rows(idx)),
            domain: self.domain.clone(),
        }
    }

    /// Deterministic split by sample index: the first `round(train_fraction * N)`
    /// samples train, the rest test.
    pub fn split_by_index(&self, train_fraction: f64) -> (LatentDataset, LatentDataset) {
        let n = self.n_samples();
        let cut = libm::round(train_fraction.clamp(0.0, 1.0) * n as f64) as usize;
        let train: Vec<usize> = (0..cut).collect();
        let test: Vec<usize> = (cut..n).collect();
        (self.select(&train), self.select(&test))
    }
}

/// Which ranker produced a [`FeatureRanking`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankerId {
    ForestMdi,
    ScoreTopk,
    LinearCoef,
}

impl RankerId {
    pub fn as_str(self) -> &'static str {
        match self {
            RankerId::ForestMdi => "forest_mdi",
            RankerId::ScoreTopk => "score_topk",
            RankerId::LinearCoef => "linear_coef",
        }
    }
}

impl core::str::FromStr for RankerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forest_mdi" => Ok(RankerId::ForestMdi),
            "score_topk" => Ok(RankerId::ScoreTopk),
            "linear_coef" => Ok(RankerId::LinearCoef),
            other => Err(Error::InvalidConfig(format!("unknown ranker `{other}`"))),
        }
    }
}

/// Latent dimensions of one attribute ordered by descending importance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub attribute: String,
    pub ranker_id: RankerId,
    pub order: Vec<usize>,
    pub importances: Vec<f64>,
}

impl FeatureRanking {
    /// Normalises raw non-negative scores to sum to one (unless all zero) and
    /// orders dimensions by descending importance, ties by ascending index.
    pub fn from_importances(
        attribute: impl Into<String>,
        ranker_id: RankerId,
        raw: Vec<f64>,
    ) -> Result<Self> {
        if let Some(d) = raw.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Degenerate(format!(
                "importance {} at dim {d}",
                raw[d]
            )));
        }
        let importances = normalize(raw);
        let order = descending_order(&importances);
        Ok(FeatureRanking {
            attribute: attribute.into(),
            ranker_id,
            order,
            importances,
        })
    }

    pub fn n_dims(&self) -> usize {
        self.order.len()
    }

    /// The `k` most important dimensions.
    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }

    /// Position of `dim` in the ranking (0 = most important).
    pub fn rank_of(&self, dim: usize) -> Option<usize> {
        self.order.iter().position(|&d| d == dim)
    }

    /// Checks the permutation, ordering and normalisation invariants.
    pub fn validate(&self) -> Result<()> {
        let d = self.importances.len();
        if self.order.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.order.len(),
            });
        }
        let mut seen = alloc::vec![false; d];
        for &o in &self.order {
            if o >= d || seen[o] {
                return Err(Error::Degenerate(format!(
                    "order is not a permutation (at {o})"
                )));
            }
            seen[o] = true;
        }
        if self.importances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Degenerate(
                "negative or non-finite importance".into(),
            ));
        }
        for w in self.order.windows(2) {
            let (a, b) = (self.importances[w[0]], self.importances[w[1]]);
            if a < b || (a == b && w[0] > w[1]) {
                return Err(Error::Degenerate(format!(
                    "order violated between dims {} and {}",
                    w[0], w[1]
                )));
            }
        }
        let sum: f64 = self.importances.iter().sum();
        if sum != 0.0 && libm::fabs(sum - 1.0) > 1e-9 {
            return Err(Error::Degenerate(format!("importances sum to {sum}")));
        }
        Ok(())
    }
}

pub(crate) fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        v.iter_mut().for_each(|x| *x /= sum);
    }
    v
}

/// Indices sorted by descending value; equal values keep ascending index.
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| match values[b].partial_cmp(&values[a]) {
        Some(Ordering::Equal) | None => a.cmp(&b),
        Some(o) => o,
    });
    order
}
