//! Embedding a target output into the toy generator by alternating camera
//! and latent optimisation.
//!
//! The objective is `λ1·L2 + λ2·Lperc + λ3·Lid`: pixel MSE, MSE after a
//! fixed random projection (perceptual surrogate) and `1 − cos` between
//! identity embeddings. Gradients are central finite differences, so any
//! black-box renderer would do. Updates are heavy-ball descent with
//! momentum 0.9; the velocity restarts at every phase switch.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::toygen::{dot, RenderedOutput, ToyGenerator};
use crate::{Error, Result};

const MOMENTUM: f64 = 0.9;
/// Draws used to estimate the mean style code that seeds the latent.
pub const MEAN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub n_alternations: usize,
    pub steps_per_phase: usize,
    pub final_latent_steps: usize,
    pub learning_rate: f64,
    pub fd_epsilon: f64,
    pub seed: u64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            lambda1: 1.0,
            lambda2: 0.6,
            lambda3: 0.3,
            n_alternations: 10,
            steps_per_phase: 20,
            final_latent_steps: 200,
            learning_rate: 0.05,
            fd_epsilon: 1e-4,
            seed: 0,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, l) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ] {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        if self.steps_per_phase == 0 {
            return Err(Error::InvalidConfig(
                "steps_per_phase must be at least 1".into(),
            ));
        }
        if !(self.fd_epsilon > 0.0 && self.fd_epsilon.is_finite()) {
            return Err(Error::InvalidConfig("fd_epsilon must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionResult {
    pub s_hat: Vec<f64>,
    pub camera_hat: f64,
    pub final_loss: f64,
    /// Loss at initialisation followed by the loss after every update.
    pub loss_trace: Vec<f64>,
}

/// Loss against a fixed target with the target-side features precomputed.
pub struct Objective<'a> {
    generator: &'a ToyGenerator,
    target: &'a RenderedOutput,
    target_features: Vec<f64>,
    target_embedding: Option<Vec<f64>>,
    weights: [f64; 3],
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len().max(1) as f64
}

impl<'a> Objective<'a> {
    pub fn new(
        generator: &'a ToyGenerator,
        target: &'a RenderedOutput,
        cfg: &InversionConfig,
    ) -> Result<Self> {
        if target.0.len() != generator.out_dim() {
            return Err(Error::DimensionMismatch {
                expected: generator.out_dim(),
                got: target.0.len(),
            });
        }
        if let Some(i) = target.0.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, col: i });
        }
        let target_embedding = if cfg.lambda3 > 0.0 {
            Some(generator.identity_embed(target)?)
        } else {
            None
        };
        Ok(Objective {
            generator,
            target,
            target_features: generator.perceptual_features(target),
            target_embedding,
            weights: [cfg.lambda1, cfg.lambda2, cfg.lambda3],
        })
    }

    /// Objective value; NaN when the rendered identity embedding degenerates.
    pub fn loss(&self, s: &[f64], camera: f64) -> f64 {
        let out = self.generator.render_unchecked(s, camera);
        let [l1, l2, l3] = self.weights;
        let mut total = l1 * mse(&out.0, &self.target.0);
        if l2 > 0.0 {
            total += l2
                * mse(
                    &self.generator.perceptual_features(&out),
                    &self.target_features,
                );
        }
        if let Some(te) = &self.target_embedding {
            total += match self.generator.identity_embed(&out) {
                Ok(e) => l3 * (1.0 - dot(&e, te)),
                Err(_) => f64::NAN,
            };
        }
        total
    }

    /// Central-difference gradient with respect to the latent.
    pub fn latent_gradient(&self, s: &[f64], camera: f64, eps: f64) -> Vec<f64> {
        let mut probe = s.to_vec();
        (0..s.len())
            .map(|i| {
                probe[i] = s[i] + eps;
                let up = self.loss(&probe, camera);
                probe[i] = s[i] - eps;
                let down = self.loss(&probe, camera);
                probe[i] = s[i];
                (up - down) / (2.0 * eps)
            })
            .collect()
    }

    /// Central-difference derivative with respect to the camera angle.
    pub fn camera_gradient(&self, s: &[f64], camera: f64, eps: f64) -> f64 {
        (self.loss(s, camera + eps) - self.loss(s, camera - eps)) / (2.0 * eps)
    }
}

/// Weighted reconstruction loss of `(s, camera)` against `target`.
pub fn inversion_loss(
    generator: &ToyGenerator,
    s: &[f64],
    camera: f64,
    target: &RenderedOutput,
    cfg: &InversionConfig,
) -> Result<f64> {
    if s.len() != generator.d_s() {
        return Err(Error::DimensionMismatch {
            expected: generator.d_s(),
            got: s.len(),
        });
    }
    Ok(Objective::new(generator, target, cfg)?.loss(s, camera))
}

/// Starts from the mean style code and a frontal camera, alternates
/// camera-only and latent-only phases, then refines the latent alone.
pub fn invert(
    generator: &ToyGenerator,
    target: &RenderedOutput,
    cfg: &InversionConfig,
) -> Result<InversionResult> {
    cfg.validate()?;
    let objective = Objective::new(generator, target, cfg)?;
    let mut s = generator.mean_s(MEAN_SAMPLES, cfg.seed)?;
    let mut camera = 0.0;
    let mut trace = vec![objective.loss(&s, camera)];
    check_finite(&trace)?;

    let (lr, eps) = (cfg.learning_rate, cfg.fd_epsilon);
    let latent_phase =
        |s: &mut Vec<f64>, camera: f64, steps: usize, trace: &mut Vec<f64>| -> Result<()> {
            let mut velocity = vec![0.0; s.len()];
            for _ in 0..steps {
                let g = objective.latent_gradient(s, camera, eps);
                for ((si, vi), gi) in s.iter_mut().zip(velocity.iter_mut()).zip(&g) {
                    *vi = MOMENTUM * *vi - lr * gi;
                    *si += *vi;
                }
                trace.push(objective.loss(s, camera));
                check_finite(trace)?;
            }
            Ok(())
        };

    for _ in 0..cfg.n_alternations {
        let mut velocity = 0.0;
        for _ in 0..cfg.steps_per_phase {
            let g = objective.camera_gradient(&s, camera, eps);
            velocity = MOMENTUM * velocity - lr * g;
            camera += velocity;
            trace.push(objective.loss(&s, camera));
            check_finite(&trace)?;
        }
        latent_phase(&mut s, camera, cfg.steps_per_phase, &mut trace)?;
    }
    latent_phase(&mut s, camera, cfg.final_latent_steps, &mut trace)?;

    let final_loss = *trace.last().expect("trace starts non-empty");
    Ok(InversionResult {
        s_hat: s,
        camera_hat: camera,
        final_loss,
        loss_trace: trace,
    })
}

fn check_finite(trace: &[f64]) -> Result<()> {
    match trace.last() {
        Some(v) if !v.is_finite() => Err(Error::Diverged {
            step: trace.len() - 1,
            trace: trace.to_vec(),
        }),
        _ => Ok(()),
    }
}
