//! Attribute editing by swapping top-ranked latent dimensions with a
//! reference code.
//!
//! The reference comes from a support set: the `support_n` samples with the
//! most extreme score for the attribute (highest to add it, lowest to remove
//! it). Among those, the one closest in cosine similarity to the target is
//! used. K is chosen per sample as the largest grid value whose identity loss
//! stays strictly below `tau`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::toygen::dot;
use crate::{Error, FeatureRanking, LatentDataset, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Add,
    Remove,
}

impl core::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" | "+" => Ok(Direction::Add),
            "remove" | "-" => Ok(Direction::Remove),
            other => Err(Error::InvalidConfig(format!("unknown direction `{other}`"))),
        }
    }
}

/// Identity budget used when none is given: 0.25 for faces, 0.1 elsewhere.
pub fn default_tau(domain: Option<&str>) -> f64 {
    match domain {
        Some("face") => 0.25,
        _ => 0.1,
    }
}

/// Powers of two below `min(n_dims, 4096)`, followed by that bound.
pub fn default_k_grid(n_dims: usize) -> Vec<usize> {
    let top = n_dims.min(4096);
    let mut grid: Vec<usize> = core::iter::successors(Some(1usize), |k| Some(k * 2))
        .take_while(|&k| k < top)
        .collect();
    if top > 0 {
        grid.push(top);
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditConfig {
    pub attribute: String,
    pub direction: Direction,
    pub tau: f64,
    pub support_n: usize,
    pub k_grid: Vec<usize>,
    pub ranking: FeatureRanking,
}

impl EditConfig {
    /// Config with the default support set of 32 and the geometric K grid.
    pub fn new(ranking: FeatureRanking, direction: Direction, tau: f64) -> Self {
        EditConfig {
            attribute: ranking.attribute.clone(),
            direction,
            tau,
            support_n: 32,
            k_grid: default_k_grid(ranking.n_dims()),
            ranking,
        }
    }

    pub fn validate(&self, n_dims: usize) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tau {} outside (0, 1]",
                self.tau
            )));
        }
        if self.support_n == 0 {
            return Err(Error::InvalidConfig("support_n must be at least 1".into()));
        }
        if self.k_grid.is_empty() {
            return Err(Error::InvalidConfig("k_grid is empty".into()));
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "k_grid must be strictly ascending".into(),
            ));
        }
        if self.k_grid[self.k_grid.len() - 1] > n_dims {
            return Err(Error::InvalidConfig(format!(
                "k_grid exceeds {n_dims} dims"
            )));
        }
        if self.ranking.n_dims() != n_dims {
            return Err(Error::DimensionMismatch {
                expected: n_dims,
                got: self.ranking.n_dims(),
            });
        }
        if self.ranking.attribute != self.attribute {
            return Err(Error::InvalidConfig(format!(
                "ranking is for `{}`, edit targets `{}`",
                self.ranking.attribute, self.attribute
            )));
        }
        self.ranking.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditResult {
    pub edited_latent: Vec<f64>,
    pub reference_index: usize,
    pub chosen_k: usize,
    pub identity_loss: f64,
    /// Whether the identity budget was met.
    pub satisfied: bool,
}

/// The `n` samples with the most extreme score in the edit direction; ties
/// keep the lower sample index first.
pub fn support_set(
    dataset: &LatentDataset,
    attribute: &str,
    direction: Direction,
    n: usize,
) -> Result<Vec<usize>> {
    if dataset.n_samples() == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if dataset.n_samples() < n {
        return Err(Error::TooFewSamples {
            needed: n,
            got: dataset.n_samples(),
        });
    }
    let scores = dataset.attribute_scores(attribute)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = match direction {
            Direction::Add => scores[b].partial_cmp(&scores[a]),
            Direction::Remove => scores[a].partial_cmp(&scores[b]),
        };
        o.unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    idx.truncate(n);
    Ok(idx)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = libm::sqrt(dot(a, a));
    let nb = libm::sqrt(dot(b, b));
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Candidate in `support` whose latent is most cosine-similar to `target`;
/// ties go to the lower sample index.
pub fn closest_in_support(
    dataset: &LatentDataset,
    support: &[usize],
    target: &[f64],
) -> Result<usize> {
    if target.len() != dataset.n_dims() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n_dims(),
            got: target.len(),
        });
    }
    let mut best: Option<(usize, f64)> = None;
    for &i in support {
        let c = cosine(dataset.latent(i), target);
        best = match best {
            Some((bi, bc)) if bc > c || (bc == c && bi < i) => Some((bi, bc)),
            _ => Some((i, c)),
        };
    }
    best.map(|(i, _)| i)
        .ok_or(Error::TooFewSamples { needed: 1, got: 0 })
}

pub fn select_reference(
    dataset: &LatentDataset,
    cfg: &EditConfig,
    target: &[f64],
) -> Result<usize> {
    let support = support_set(dataset, &cfg.attribute, cfg.direction, cfg.support_n)?;
    closest_in_support(dataset, &support, target)
}

/// Copies the reference values of the `k` top-ranked dims into the target.
pub fn swap_top_k(
    target: &[f64],
    reference: &[f64],
    ranking: &FeatureRanking,
    k: usize,
) -> Result<Vec<f64>> {
    check_edit_args(target, reference, ranking, k)?;
    let mut out = target.to_vec();
    for &d in ranking.top(k) {
        out[d] = reference[d];
    }
    Ok(out)
}

/// Moves each of the `k` top-ranked dims by `step` towards the reference
/// (by the sign of the difference; equal values stay put).
pub fn linear_edit_baseline(
    target: &[f64],
    reference: &[f64],
    ranking: &FeatureRanking,
    k: usize,
    step: f64,
) -> Result<Vec<f64>> {
    check_edit_args(target, reference, ranking, k)?;
    let mut out = target.to_vec();
    for &d in ranking.top(k) {
        let diff = reference[d] - target[d];
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        out[d] = target[d] + step * sign;
    }
    Ok(out)
}

fn check_edit_args(
    target: &[f64],
    reference: &[f64],
    ranking: &FeatureRanking,
    k: usize,
) -> Result<()> {
    let d = ranking.n_dims();
    if target.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.len(),
        });
    }
    if reference.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: reference.len(),
        });
    }
    if k > d {
        return Err(Error::InvalidConfig(format!("k = {k} exceeds {d} dims")));
    }
    Ok(())
}

/// Editor bound to one dataset and config, with the support set computed once.
#[derive(Debug, Clone)]
pub struct Editor<'a> {
    dataset: &'a LatentDataset,
    cfg: &'a EditConfig,
    support: Vec<usize>,
}

impl<'a> Editor<'a> {
    pub fn new(dataset: &'a LatentDataset, cfg: &'a EditConfig) -> Result<Self> {
        cfg.validate(dataset.n_dims())?;
        let support = support_set(dataset, &cfg.attribute, cfg.direction, cfg.support_n)?;
        Ok(Editor {
            dataset,
            cfg,
            support,
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Picks a reference, then the largest grid K with `id_loss < tau`. When
    /// no K qualifies the smallest K is used and the result is flagged
    /// unsatisfied.
    pub fn edit<F, E>(&self, target: &[f64], mut id_loss: F) -> core::result::Result<EditResult, E>
    where
        F: FnMut(&[f64], &[f64]) -> core::result::Result<f64, E>,
        E: From<Error>,
    {
        let reference_index = closest_in_support(self.dataset, &self.support, target)?;
        let reference = self.dataset.latent(reference_index);
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        let mut smallest: Option<(usize, Vec<f64>, f64)> = None;
        for (i, &k) in self.cfg.k_grid.iter().enumerate() {
            let edited = swap_top_k(target, reference, &self.cfg.ranking, k)?;
            let loss = id_loss(target, &edited)?;
            if !(loss >= 0.0 && loss.is_finite()) {
                return Err(Error::Degenerate(format!("identity loss {loss} at k = {k}")).into());
            }
            if loss < self.cfg.tau {
                best = Some((k, edited, loss));
            } else if i == 0 {
                smallest = Some((k, edited, loss));
            }
        }
        let satisfied = best.is_some();
        let (chosen_k, edited_latent, identity_loss) = best
            .or(smallest)
            .expect("the smallest K is either accepted or kept");
        Ok(EditResult {
            edited_latent,
            reference_index,
            chosen_k,
            identity_loss,
            satisfied,
        })
    }
}

/// One-shot [`Editor::edit`].
pub fn choose_k<F, E>(
    target: &[f64],
    dataset: &LatentDataset,
    cfg: &EditConfig,
    id_loss: F,
) -> core::result::Result<EditResult, E>
where
    F: FnMut(&[f64], &[f64]) -> core::result::Result<f64, E>,
    E: From<Error>,
{
    Editor::new(dataset, cfg)?.edit(target, id_loss)
}
