//! A deterministic synthetic "3D GAN" built from sine-FiLM units.
//!
//! Each output channel `c` is `sin(γ_c · F_c(camera) + β_c)`, where the
//! frequency `γ_c` and the phase shift `β_c` are affine in slices of the
//! style code `s`, and `F_c` is a fixed per-channel function of the camera
//! angle. Channels come in three groups:
//!
//! * attribute channels `0..A`: phase = sum of the planted dims of attribute
//!   `j`, camera independent, read by the oracle classifier;
//! * pose channels `A..A+4`: driven by the camera only;
//! * nuisance channels: one phase dim and one frequency dim each (cycling
//!   when there are more dims), read by the identity embedder.
//!
//! Phase dims enter with integer coefficients, so shifting any of them by 2π
//! leaves the output unchanged. The Z space is `s = ψ(Q z)` with a seeded
//! orthogonal `Q` and the elementwise bijection `ψ(u) = u + tanh(u)`, which
//! entangles every attribute across all of `z`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{rng, Error, LatentDataset, Matrix, Result, SpaceTag};

const POSE_CHANNELS: usize = 4;
const PHASE_COEF: f64 = 2.0;
const FREQ_GAIN: f64 = 0.5;
const MIX_GAIN: f64 = 1.0;
const ORACLE_WEIGHT: f64 = 6.0;
const PERCEPTUAL_DIM: usize = 16;

/// Feature-wise affine modulation `γ·F + β`.
pub fn film(f: f64, gamma: f64, beta: f64) -> f64 {
    gamma * f + beta
}

/// Sine of the modulated feature: `sin(γ·F + β)`.
pub fn sine_film(f: f64, gamma: f64, beta: f64) -> f64 {
    libm::sin(film(f, gamma, beta))
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyGeneratorSpec {
    /// Style-space width; the Z space has the same width.
    pub d_s: usize,
    pub out_dim: usize,
    pub attribute_names: Vec<String>,
    /// Disjoint S dims driving each attribute, one list per attribute.
    pub planted_dims: Vec<Vec<usize>>,
    pub embed_dim: usize,
    /// Standard deviation of each planted dim around its ±π/(2p) centre.
    pub planted_noise: f64,
    /// Seeds every fixed random parameter: channel wiring constants, the
    /// Z→S rotation and the embedding projections.
    pub mixing_seed: u64,
}

impl Default for ToyGeneratorSpec {
    fn default() -> Self {
        ToyGeneratorSpec::new(64, 32, 4, 4, 16, 7)
    }
}

impl ToyGeneratorSpec {
    /// Spec with `n_attributes` attributes of `per_attribute` planted dims
    /// scattered over the S space by a seeded permutation.
    pub fn new(
        d_s: usize,
        out_dim: usize,
        n_attributes: usize,
        per_attribute: usize,
        embed_dim: usize,
        mixing_seed: u64,
    ) -> Self {
        let mut perm: Vec<usize> = (0..d_s).collect();
        perm.shuffle(&mut rng::stream(mixing_seed, 1));
        let planted_dims = (0..n_attributes)
            .map(|j| {
                let mut dims: Vec<usize> = perm
                    .iter()
                    .skip(j * per_attribute)
                    .take(per_attribute)
                    .copied()
                    .collect();
                dims.sort_unstable();
                dims
            })
            .collect();
        ToyGeneratorSpec {
            d_s,
            out_dim,
            attribute_names: (0..n_attributes).map(|j| format!("attr_{j}")).collect(),
            planted_dims,
            embed_dim,
            planted_noise: 0.1,
            mixing_seed,
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    /// S dims not planted for any attribute, ascending.
    pub fn nuisance_dims(&self) -> Vec<usize> {
        let mut planted = vec![false; self.d_s];
        for &d in self.planted_dims.iter().flatten() {
            if d < self.d_s {
                planted[d] = true;
            }
        }
        (0..self.d_s).filter(|&d| !planted[d]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.n_attributes();
        if a == 0 {
            return Err(Error::InvalidConfig(
                "toy generator needs at least one attribute".into(),
            ));
        }
        if self.planted_dims.len() != a {
            return Err(Error::InvalidConfig(format!(
                "{} planted-dim lists for {a} attributes",
                self.planted_dims.len()
            )));
        }
        let mut seen = vec![false; self.d_s];
        for (j, dims) in self.planted_dims.iter().enumerate() {
            if dims.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "attribute {j} has no planted dims"
                )));
            }
            for &d in dims {
                if d >= self.d_s || seen[d] {
                    return Err(Error::InvalidConfig(format!(
                        "planted dim {d} out of range or reused"
                    )));
                }
                seen[d] = true;
            }
        }
        if self.nuisance_dims().is_empty() {
            return Err(Error::InvalidConfig("no nuisance dims left".into()));
        }
        if self.out_dim < a + POSE_CHANNELS + 1 {
            return Err(Error::InvalidConfig(format!(
                "out_dim {} too small: need {a} attribute, {POSE_CHANNELS} pose and at least one nuisance channel",
                self.out_dim
            )));
        }
        if self.embed_dim == 0 {
            return Err(Error::InvalidConfig("embed_dim must be positive".into()));
        }
        if !(self.planted_noise >= 0.0 && self.planted_noise.is_finite()) {
            return Err(Error::InvalidConfig(
                "planted_noise must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Output vector of the toy generator, entries in [−1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedOutput(pub Vec<f64>);

impl RenderedOutput {
    pub fn pixels(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Channel {
    phase_dims: Vec<usize>,
    phase_coef: f64,
    phase_offset: f64,
    freq_dims: Vec<usize>,
    /// F_c(camera) = feature_offset + camera_slope · camera
    feature_offset: f64,
    camera_slope: f64,
}

/// A built toy generator: the [`ToyGeneratorSpec`] plus every derived fixed parameter.
#[derive(Debug, Clone)]
pub struct ToyGenerator {
    spec: ToyGeneratorSpec,
    channels: Vec<Channel>,
    nuisance_channels: Vec<usize>,
    /// d_s × d_s orthogonal, row-major.
    rotation: Matrix,
    /// embed_dim × nuisance-channel projection.
    identity_proj: Matrix,
    /// PERCEPTUAL_DIM × out_dim projection used as a perceptual surrogate.
    perceptual_proj: Matrix,
}

impl ToyGenerator {
    pub fn new(spec: ToyGeneratorSpec) -> Result<Self> {
        spec.validate()?;
        let a = spec.n_attributes();
        let mut params = rng::stream(spec.mixing_seed, 2);
        let mut channels = Vec::with_capacity(spec.out_dim);
        for dims in &spec.planted_dims {
            channels.push(Channel {
                phase_dims: dims.clone(),
                phase_coef: 1.0,
                phase_offset: 0.0,
                freq_dims: Vec::new(),
                feature_offset: 0.0,
                camera_slope: 0.0,
            });
        }
        for _ in 0..POSE_CHANNELS {
            channels.push(Channel {
                phase_dims: Vec::new(),
                phase_coef: 0.0,
                phase_offset: params.random_range(0.0..TAU),
                freq_dims: Vec::new(),
                feature_offset: 0.0,
                camera_slope: params.random_range(1.0..2.5),
            });
        }
        let first_nuisance = a + POSE_CHANNELS;
        let nuisance_channels: Vec<usize> = (first_nuisance..spec.out_dim).collect();
        for _ in &nuisance_channels {
            channels.push(Channel {
                phase_dims: Vec::new(),
                phase_coef: PHASE_COEF,
                phase_offset: params.random_range(0.0..TAU),
                freq_dims: Vec::new(),
                feature_offset: params.random_range(0.5..1.5),
                camera_slope: params.random_range(-0.3..0.3),
            });
        }
        // phase dims first, then frequency dims, cycling over nuisance channels
        let n_nc = nuisance_channels.len();
        for (k, d) in spec.nuisance_dims().into_iter().enumerate() {
            let ch = &mut channels[first_nuisance + k % n_nc];
            if (k / n_nc).is_multiple_of(2) {
                ch.phase_dims.push(d);
            } else {
                ch.freq_dims.push(d);
            }
        }

        let d = spec.d_s;
        let mut mix = rng::stream(spec.mixing_seed, 3);
        let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut mix));
        let q = g.qr().q();
        let rotation = Matrix::from_vec(d, d, (0..d * d).map(|k| q[(k / d, k % d)]).collect())?;

        let identity_proj = gaussian_matrix(spec.embed_dim, n_nc, spec.mixing_seed, 4);
        let perceptual_proj = gaussian_matrix(PERCEPTUAL_DIM, spec.out_dim, spec.mixing_seed, 5);

        Ok(ToyGenerator {
            spec,
            channels,
            nuisance_channels,
            rotation,
            identity_proj,
            perceptual_proj,
        })
    }

    pub fn spec(&self) -> &ToyGeneratorSpec {
        &self.spec
    }

    pub fn d_s(&self) -> usize {
        self.spec.d_s
    }

    pub fn out_dim(&self) -> usize {
        self.spec.out_dim
    }

    pub fn embed_dim(&self) -> usize {
        self.spec.embed_dim
    }

    /// S dims that act as phase shifts (2π-periodic), ascending.
    pub fn phase_dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self
            .channels
            .iter()
            .flat_map(|c| c.phase_dims.iter().copied())
            .collect();
        dims.sort_unstable();
        dims
    }

    /// Renders a style code from camera angle `camera`.
    pub fn render(&self, s: &[f64], camera: f64) -> Result<RenderedOutput> {
        if s.len() != self.spec.d_s {
            return Err(Error::DimensionMismatch {
                expected: self.spec.d_s,
                got: s.len(),
            });
        }
        Ok(self.render_unchecked(s, camera))
    }

    pub(crate) fn render_unchecked(&self, s: &[f64], camera: f64) -> RenderedOutput {
        let out = self
            .channels
            .iter()
            .map(|ch| {
                let gamma = 1.0 + FREQ_GAIN * ch.freq_dims.iter().map(|&d| s[d]).sum::<f64>();
                let beta = ch.phase_offset
                    + ch.phase_coef * ch.phase_dims.iter().map(|&d| s[d]).sum::<f64>();
                let feature = ch.feature_offset + ch.camera_slope * camera;
                sine_film(feature, gamma, beta)
            })
            .collect();
        RenderedOutput(out)
    }

    /// Renders a Z-space code by mapping it to S first.
    pub fn render_z(&self, z: &[f64], camera: f64) -> Result<RenderedOutput> {
        let s = self.z_to_s(z)?;
        Ok(self.render_unchecked(&s, camera))
    }

    /// Per-attribute probabilities from a logistic read-out of each attribute channel.
    pub fn oracle_classify(&self, out: &RenderedOutput) -> Vec<f64> {
        (0..self.spec.n_attributes())
            .map(|j| logistic(ORACLE_WEIGHT * out.0[j]))
            .collect()
    }

    /// L2-normalised projection of the nuisance channels.
    pub fn identity_embed(&self, out: &RenderedOutput) -> Result<Vec<f64>> {
        if out.0.len() != self.spec.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.out_dim,
                got: out.0.len(),
            });
        }
        let x: Vec<f64> = self.nuisance_channels.iter().map(|&c| out.0[c]).collect();
        let mut e: Vec<f64> = self.identity_proj.iter_rows().map(|w| dot(w, &x)).collect();
        let norm = libm::sqrt(dot(&e, &e));
        if norm.is_nan() || norm <= 1e-12 {
            return Err(Error::Degenerate("identity embedding has zero norm".into()));
        }
        e.iter_mut().for_each(|v| *v /= norm);
        Ok(e)
    }

    /// `1 − cos` between the identity embeddings of two outputs.
    pub fn identity_loss(&self, a: &RenderedOutput, b: &RenderedOutput) -> Result<f64> {
        let ea = self.identity_embed(a)?;
        let eb = self.identity_embed(b)?;
        Ok((1.0 - dot(&ea, &eb)).max(0.0))
    }

    /// Fixed random projection of an output, the perceptual-loss surrogate.
    pub fn perceptual_features(&self, out: &RenderedOutput) -> Vec<f64> {
        self.perceptual_proj
            .iter_rows()
            .map(|w| dot(w, &out.0))
            .collect()
    }

    /// `s = ψ(Q z)` with `ψ(u) = u + tanh(u)`.
    pub fn z_to_s(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.spec.d_s {
            return Err(Error::DimensionMismatch {
                expected: self.spec.d_s,
                got: z.len(),
            });
        }
        Ok(self
            .rotation
            .iter_rows()
            .map(|q| mix_forward(dot(q, z)))
            .collect())
    }

    /// Inverse of [`ToyGenerator::z_to_s`]: `z = Qᵀ ψ⁻¹(s)`.
    pub fn s_to_z(&self, s: &[f64]) -> Result<Vec<f64>> {
        let d = self.spec.d_s;
        if s.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.len(),
            });
        }
        let u: Vec<f64> = s.iter().map(|&v| mix_inverse(v)).collect();
        let mut z = vec![0.0; d];
        for (i, ui) in u.iter().enumerate() {
            for (zj, q) in z.iter_mut().zip(self.rotation.row(i)) {
                *zj += q * ui;
            }
        }
        Ok(z)
    }

    /// Draws one style code with the given attribute factors.
    pub fn sample_s<R: Rng + ?Sized>(&self, factors: &[bool], rng: &mut R) -> Vec<f64> {
        let mut s: Vec<f64> = (0..self.spec.d_s)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        for (dims, &on) in self.spec.planted_dims.iter().zip(factors) {
            let centre = FRAC_PI_2 / dims.len() as f64;
            for &d in dims {
                let noise: f64 = StandardNormal.sample(rng);
                s[d] = if on { centre } else { -centre } + self.spec.planted_noise * noise;
            }
        }
        s
    }

    /// Draws `n` samples with Bernoulli(0.5) attribute factors and returns the
    /// paired Z- and S-space datasets. Scores come from the oracle and
    /// embeddings from the identity embedder, both at camera 0.
    pub fn sample_dataset(&self, n: usize, seed: u64) -> Result<(LatentDataset, LatentDataset)> {
        let (z, s) = self.sample_codes(n, seed)?;
        let a = self.spec.n_attributes();
        let mut scores = Matrix::zeros(n, a);
        let mut emb = Matrix::zeros(n, self.spec.embed_dim);
        for i in 0..n {
            let out = self.render_unchecked(s.row(i), 0.0);
            scores
                .row_mut(i)
                .copy_from_slice(&self.oracle_classify(&out));
            emb.row_mut(i).copy_from_slice(&self.identity_embed(&out)?);
        }
        let names = self.spec.attribute_names.clone();
        let ds_z = LatentDataset::new(
            SpaceTag::Z,
            z,
            names.clone(),
            scores.clone(),
            Some(emb.clone()),
        )?;
        let ds_s = LatentDataset::new(SpaceTag::S, s, names, scores, Some(emb))?;
        Ok((ds_z, ds_s))
    }

    /// Raw (Z, S) code matrices of [`ToyGenerator::sample_dataset`].
    pub fn sample_codes(&self, n: usize, seed: u64) -> Result<(Matrix, Matrix)> {
        if n == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let d = self.spec.d_s;
        let mut rng = rng::stream(seed, 0);
        let mut s = Matrix::zeros(n, d);
        let mut z = Matrix::zeros(n, d);
        let mut factors = vec![false; self.spec.n_attributes()];
        for i in 0..n {
            factors.iter_mut().for_each(|f| *f = rng.random_bool(0.5));
            let code = self.sample_s(&factors, &mut rng);
            z.row_mut(i).copy_from_slice(&self.s_to_z(&code)?);
            s.row_mut(i).copy_from_slice(&code);
        }
        Ok((z, s))
    }

    /// Mean style code estimated from `n` seeded draws.
    pub fn mean_s(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let (_, s) = self.sample_codes(n, seed)?;
        let mut mean = vec![0.0; self.spec.d_s];
        for row in s.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        Ok(mean)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64, stream: u64) -> Matrix {
    let mut r = rng::stream(seed, stream);
    let scale = 1.0 / libm::sqrt(cols.max(1) as f64);
    let data = (0..rows * cols)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut r);
            scale * v
        })
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}

fn mix_forward(u: f64) -> f64 {
    u + MIX_GAIN * libm::tanh(u)
}

/// Solves `u + tanh(u) = s` by bracketed Newton; the root lies between
/// `s / (1 + gain)` and `s`.
fn mix_inverse(s: f64) -> f64 {
    let (mut lo, mut hi) = if s >= 0.0 {
        (s / (1.0 + MIX_GAIN), s)
    } else {
        (s, s / (1.0 + MIX_GAIN))
    };
    let mut u = s / (1.0 + MIX_GAIN);
    for _ in 0..60 {
        let t = libm::tanh(u);
        let f = u + MIX_GAIN * t - s;
        if f == 0.0 {
            return u;
        }
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let next = u - f / (1.0 + MIX_GAIN * (1.0 - t * t));
        let next = if next > lo && next < hi {
            next
        } else {
            lo + (hi - lo) / 2.0
        };
        if libm::fabs(next - u) <= 1e-15 * (1.0 + libm::fabs(u)) {
            return next;
        }
        u = next;
    }
    u
}
