//! CART regression trees and random forests with mean-decrease-in-impurity
//! (MDI) feature importance.
//!
//! Splits minimise the weighted variance of the children. Candidate
//! thresholds are midpoints between consecutive distinct values; among equal
//! impurity decreases the lowest dimension wins, then the lowest threshold.
//! Each tree draws from its own ChaCha stream (`seed`, tree index), so a
//! fitted forest does not depend on how trees are scheduled across threads.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::normalize;
use crate::{rng, Error, Matrix, Result};

/// Number of candidate features examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    Third,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_dims: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => (libm::sqrt(n_dims as f64) as usize).max(1),
            MaxFeatures::Third => (n_dims / 3).max(1),
            MaxFeatures::All => n_dims,
            MaxFeatures::Count(k) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 5,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, n_dims: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if let MaxFeatures::Count(k) = self.max_features {
            if k == 0 || k > n_dims {
                return Err(Error::InvalidConfig(format!(
                    "max_features {k} outside [1, {n_dims}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        n_samples: usize,
    },
    Split {
        dim: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Reduction of the summed squared error achieved by this split.
        impurity_decrease: f64,
        n_samples: usize,
    },
}

/// A binary regression tree stored as a node array rooted at index 0.
/// Samples with `x[dim] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    dim,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x[dim] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    /// Per-dimension impurity decrease, weighted by the root sample count.
    fn weighted_decreases(&self, n_dims: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_dims];
        let root_n = match self.nodes[0] {
            Node::Leaf { n_samples, .. } | Node::Split { n_samples, .. } => n_samples.max(1) as f64,
        };
        for node in &self.nodes {
            if let Node::Split {
                dim,
                impurity_decrease,
                ..
            } = *node
            {
                out[dim] += impurity_decrease / root_n;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_dims: usize,
    pub trees: Vec<Tree>,
    /// Out-of-bag mean squared error, when bootstrap sampling was used.
    pub oob_error: Option<f64>,
    pub importances: Vec<f64>,
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_dims {
            return Err(Error::DimensionMismatch {
                expected: self.n_dims,
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict_rows(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }
}

/// MDI importance: each split credits its weighted impurity decrease to its
/// dimension; per-tree totals are averaged and normalised to sum to one.
/// All zeros when no tree has a split.
pub fn mdi_importance(model: &ForestModel) -> Vec<f64> {
    let mut total = vec![0.0; model.n_dims];
    for tree in &model.trees {
        for (t, d) in total.iter_mut().zip(tree.weighted_decreases(model.n_dims)) {
            *t += d;
        }
    }
    let n = model.trees.len().max(1) as f64;
    total.iter_mut().for_each(|v| *v /= n);
    normalize(total)
}

/// Fits a regression forest on the rows of `latents` against `targets`.
pub fn fit(latents: &Matrix, targets: &[f64], cfg: &ForestConfig) -> Result<ForestModel> {
    let (n, d) = (latents.rows(), latents.cols());
    cfg.validate(d)?;
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    let needed = 2 * cfg.min_samples_leaf;
    if n < needed || n < 2 {
        return Err(Error::TooFewSamples {
            needed: needed.max(2),
            got: n,
        });
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidConfig("more than 2^32 samples".into()));
    }
    if let Some((row, col)) = latents.find_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    if let Some(row) = targets.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFinite { row, col: 0 });
    }

    let mut columns = vec![0.0; n * d];
    for (i, row) in latents.iter_rows().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            columns[j * n + i] = v;
        }
    }
    let builder = TreeBuilder {
        columns: &columns,
        targets,
        n,
        n_dims: d,
        mtry: cfg.max_features.resolve(d),
        min_leaf: cfg.min_samples_leaf,
        max_depth: cfg.max_depth.unwrap_or(usize::MAX),
        bootstrap: cfg.bootstrap,
        seed: cfg.seed,
    };

    #[cfg(feature = "parallel")]
    let built: Vec<(Tree, Vec<bool>)> = {
        use rayon::prelude::*;
        (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| builder.build(t as u64))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let built: Vec<(Tree, Vec<bool>)> = (0..cfg.n_trees).map(|t| builder.build(t as u64)).collect();

    let oob_error = if cfg.bootstrap {
        oob_mse(latents, targets, &built)
    } else {
        None
    };
    let trees: Vec<Tree> = built.into_iter().map(|(t, _)| t).collect();
    let mut model = ForestModel {
        n_dims: d,
        trees,
        oob_error,
        importances: Vec::new(),
    };
    model.importances = mdi_importance(&model);
    Ok(model)
}

fn oob_mse(latents: &Matrix, targets: &[f64], built: &[(Tree, Vec<bool>)]) -> Option<f64> {
    let n = targets.len();
    let mut sum = vec![0.0; n];
    let mut count = vec![0u32; n];
    for (tree, in_bag) in built {
        for i in 0..n {
            if !in_bag[i] {
                sum[i] += tree.predict(latents.row(i));
                count[i] += 1;
            }
        }
    }
    let (mut se, mut m) = (0.0, 0usize);
    for i in 0..n {
        if count[i] > 0 {
            let e = sum[i] / count[i] as f64 - targets[i];
            se += e * e;
            m += 1;
        }
    }
    (m > 0).then(|| se / m as f64)
}

struct TreeBuilder<'a> {
    /// Column-major copy of the design matrix.
    columns: &'a [f64],
    targets: &'a [f64],
    n: usize,
    n_dims: usize,
    mtry: usize,
    min_leaf: usize,
    max_depth: usize,
    bootstrap: bool,
    seed: u64,
}

struct BestSplit {
    dim: usize,
    threshold: f64,
    decrease: f64,
}

impl TreeBuilder<'_> {
    fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    /// Grows one tree; also returns the in-bag mask of its bootstrap sample.
    fn build(&self, tree_index: u64) -> (Tree, Vec<bool>) {
        let mut rng = rng::stream(self.seed, tree_index);
        let mut in_bag = vec![false; self.n];
        let mut samples: Vec<u32> = if self.bootstrap {
            (0..self.n)
                .map(|_| {
                    let i = rng.random_range(0..self.n);
                    in_bag[i] = true;
                    i as u32
                })
                .collect()
        } else {
            in_bag.iter_mut().for_each(|b| *b = true);
            (0..self.n as u32).collect()
        };

        let mut features: Vec<usize> = (0..self.n_dims).collect();
        let mut candidates: Vec<usize> = Vec::with_capacity(self.mtry);
        let mut buf: Vec<(f64, f64)> = Vec::with_capacity(self.n);
        let mut nodes: Vec<Node> = vec![Node::Leaf {
            value: 0.0,
            n_samples: 0,
        }];
        // (node index, start, end, depth)
        let mut stack = vec![(0usize, 0usize, samples.len(), 0usize)];

        while let Some((id, start, end, depth)) = stack.pop() {
            let idx = &mut samples[start..end];
            let m = idx.len();
            let mean = idx.iter().map(|&s| self.targets[s as usize]).sum::<f64>() / m as f64;
            let sse: f64 = idx
                .iter()
                .map(|&s| {
                    let e = self.targets[s as usize] - mean;
                    e * e
                })
                .sum();

            let splittable = depth < self.max_depth && m >= 2 * self.min_leaf && sse > 0.0;
            let best = if splittable {
                for i in 0..self.mtry {
                    let j = rng.random_range(i..self.n_dims);
                    features.swap(i, j);
                }
                candidates.clear();
                candidates.extend_from_slice(&features[..self.mtry]);
                candidates.sort_unstable();
                self.best_split(idx, mean, &candidates, &mut buf)
                    .filter(|b| b.decrease > sse * 1e-10)
            } else {
                None
            };

            match best {
                None => {
                    nodes[id] = Node::Leaf {
                        value: mean,
                        n_samples: m,
                    }
                }
                Some(b) => {
                    let col = self.column(b.dim);
                    let mut split = 0;
                    for k in 0..m {
                        if col[idx[k] as usize] <= b.threshold {
                            idx.swap(split, k);
                            split += 1;
                        }
                    }
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf {
                        value: 0.0,
                        n_samples: 0,
                    });
                    nodes.push(Node::Leaf {
                        value: 0.0,
                        n_samples: 0,
                    });
                    nodes[id] = Node::Split {
                        dim: b.dim,
                        threshold: b.threshold,
                        left,
                        right,
                        impurity_decrease: b.decrease,
                        n_samples: m,
                    };
                    stack.push((right, start + split, end, depth + 1));
                    stack.push((left, start, start + split, depth + 1));
                }
            }
        }
        (Tree { nodes }, in_bag)
    }

    fn best_split(
        &self,
        idx: &[u32],
        mean: f64,
        candidates: &[usize],
        buf: &mut Vec<(f64, f64)>,
    ) -> Option<BestSplit> {
        let m = idx.len();
        let min_leaf = self.min_leaf;
        let mut best: Option<BestSplit> = None;
        for &dim in candidates {
            let col = self.column(dim);
            buf.clear();
            buf.extend(
                idx.iter()
                    .map(|&s| (col[s as usize], self.targets[s as usize] - mean)),
            );
            buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if buf[0].0 == buf[m - 1].0 {
                continue;
            }
            let total: f64 = buf.iter().map(|p| p.1).sum();
            let parent = total * total / m as f64;
            let mut left_sum = 0.0;
            for i in 0..m - min_leaf {
                left_sum += buf[i].1;
                let n_left = i + 1;
                if n_left < min_leaf || buf[i].0 == buf[i + 1].0 {
                    continue;
                }
                let n_right = m - n_left;
                let right_sum = total - left_sum;
                let decrease = left_sum * left_sum / n_left as f64
                    + right_sum * right_sum / n_right as f64
                    - parent;
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    let (lo, hi) = (buf[i].0, buf[i + 1].0);
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        dim,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best
    }
}
