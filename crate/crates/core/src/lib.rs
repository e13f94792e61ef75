//! Attribute editing in generator latent spaces by swapping the latent
//! dimensions a random forest ranks as most relevant to the attribute.
//!
//! The crate is `no_std` (with `alloc`) so the numerical pipeline can be
//! embedded anywhere; file formats and the command-line front end live in
//! the `lsw` companion crate.
//!
//! Module map:
//!
//! * [`dataset`] – in-memory latent datasets and feature rankings
//! * [`forest`] – CART regression trees, random forests and MDI importance
//! * [`ranking`] – forest, univariate-score and linear-coefficient rankers
//! * [`editor`] – reference selection, top-K swap, budgeted K selection
//! * [`dci`] – disentanglement / completeness / informativeness
//! * [`toygen`] – deterministic sine-FiLM generator used as a test substrate
//! * [`inversion`] – alternating latent/camera optimisation
//! * [`metrics`] – edit-quality and distribution-level metrics

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
pub mod dci;
pub mod editor;
mod error;
pub mod forest;
pub mod inversion;
pub mod matrix;
pub mod metrics;
pub mod ranking;
mod rng;
pub mod toygen;

pub use dataset::{FeatureRanking, LatentDataset, RankerId, SpaceTag};
pub use error::{Error, Result};
pub use matrix::Matrix;
