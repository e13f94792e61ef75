//! Edit-quality and distribution-level metrics on caller-supplied scores
//! and embeddings.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::toygen::dot;
use crate::{rng, Error, Matrix, Result};

/// Diagonal loading applied to rank-deficient covariance estimates.
pub const COVARIANCE_EPS: f64 = 1e-6;

/// Fraction of samples scoring at least `threshold`, before and after an edit.
pub fn semantic_correctness(before: &[f64], after: &[f64], threshold: f64) -> Result<(f64, f64)> {
    if before.len() != after.len() {
        return Err(Error::DimensionMismatch {
            expected: before.len(),
            got: after.len(),
        });
    }
    if before.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let rate = |v: &[f64]| v.iter().filter(|&&s| s >= threshold).count() as f64 / v.len() as f64;
    Ok((rate(before), rate(after)))
}

/// Fraction of matched rows whose embeddings have cosine similarity of at
/// least `sim_threshold`.
pub fn identity_preservation(before: &Matrix, after: &Matrix, sim_threshold: f64) -> Result<f64> {
    if before.rows() != after.rows() {
        return Err(Error::DimensionMismatch {
            expected: before.rows(),
            got: after.rows(),
        });
    }
    if before.cols() != after.cols() {
        return Err(Error::DimensionMismatch {
            expected: before.cols(),
            got: after.cols(),
        });
    }
    if before.rows() == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut kept = 0usize;
    for (i, (a, b)) in before.iter_rows().zip(after.iter_rows()).enumerate() {
        let (na, nb) = (libm::sqrt(dot(a, a)), libm::sqrt(dot(b, b)));
        if na == 0.0 || nb == 0.0 {
            return Err(Error::Degenerate(format!("zero-norm embedding in row {i}")));
        }
        if dot(a, b) / (na * nb) >= sim_threshold {
            kept += 1;
        }
    }
    Ok(kept as f64 / before.rows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetDistance {
    pub value: f64,
    /// True when [`COVARIANCE_EPS`] was added to both covariance diagonals.
    pub regularized: bool,
}

fn mean_and_cov(x: &Matrix) -> (DVector<f64>, DMatrix<f64>) {
    let (n, e) = (x.rows(), x.cols());
    let m = DMatrix::from_row_slice(n, e, x.as_slice());
    let mean = DVector::from_iterator(e, (0..e).map(|j| m.column(j).sum() / n as f64));
    let mut centered = m;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    (mean, cov)
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let vals = eig.eigenvalues.map(|v| libm::sqrt(v.max(0.0)));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

fn is_rank_deficient(cov: &DMatrix<f64>) -> bool {
    let eig = cov.clone().symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    max.is_nan() || max <= 0.0 || min <= 1e-10 * max
}

/// Fréchet distance between Gaussians fitted to two embedding sets:
/// `‖μa − μb‖² + tr(Σa + Σb − 2 (Σa Σb)^½)`.
pub fn frechet_distance(a: &Matrix, b: &Matrix) -> Result<FrechetDistance> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: b.cols(),
        });
    }
    if a.rows() < 2 || b.rows() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: a.rows().min(b.rows()),
        });
    }
    let e = a.cols();
    let (mu_a, mut cov_a) = mean_and_cov(a);
    let (mu_b, mut cov_b) = mean_and_cov(b);
    let regularized = is_rank_deficient(&cov_a) || is_rank_deficient(&cov_b);
    if regularized {
        let eps = DMatrix::identity(e, e) * COVARIANCE_EPS;
        cov_a += &eps;
        cov_b += eps;
    }
    let sqrt_a = psd_sqrt(&cov_a);
    let mut inner = &sqrt_a * &cov_b * &sqrt_a;
    inner = (&inner + inner.transpose()) * 0.5;
    let tr_sqrt: f64 = inner
        .symmetric_eigenvalues()
        .iter()
        .map(|v| libm::sqrt(v.max(0.0)))
        .sum();
    let diff = mu_a - mu_b;
    let value = diff.dot(&diff) + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
    Ok(FrechetDistance {
        value: value.max(0.0),
        regularized,
    })
}

fn poly_kernel(x: &[f64], y: &[f64]) -> f64 {
    let v = dot(x, y) / x.len() as f64 + 1.0;
    v * v * v
}

/// Unbiased MMD² with the kernel `(x·y / E + 1)³`, averaged over `n_subsets`
/// seeded draws of `subset_size` rows from each set.
pub fn kernel_distance(
    a: &Matrix,
    b: &Matrix,
    subset_size: usize,
    n_subsets: usize,
    seed: u64,
) -> Result<f64> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: b.cols(),
        });
    }
    if subset_size < 2 {
        return Err(Error::InvalidConfig(
            "subset_size must be at least 2".into(),
        ));
    }
    if n_subsets == 0 {
        return Err(Error::InvalidConfig("n_subsets must be at least 1".into()));
    }
    if a.rows() < subset_size || b.rows() < subset_size {
        return Err(Error::TooFewSamples {
            needed: subset_size,
            got: a.rows().min(b.rows()),
        });
    }
    let m = subset_size as f64;
    let mut total = 0.0;
    for s in 0..n_subsets {
        let mut r = rng::stream(seed, s as u64);
        let ia: Vec<usize> = index::sample(&mut r, a.rows(), subset_size).into_vec();
        let ib: Vec<usize> = index::sample(&mut r, b.rows(), subset_size).into_vec();
        let (mut kxx, mut kyy, mut kxy) = (0.0, 0.0, 0.0);
        for (p, &i) in ia.iter().enumerate() {
            for &j in &ia[p + 1..] {
                kxx += poly_kernel(a.row(i), a.row(j));
            }
            for &j in &ib {
                kxy += poly_kernel(a.row(i), b.row(j));
            }
        }
        for (p, &i) in ib.iter().enumerate() {
            for &j in &ib[p + 1..] {
                kyy += poly_kernel(b.row(i), b.row(j));
            }
        }
        total += 2.0 * (kxx + kyy) / (m * (m - 1.0)) - 2.0 * kxy / (m * m);
    }
    Ok(total / n_subsets as f64)
}
