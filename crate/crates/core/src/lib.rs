//! Manifold reconstruction and regularized autoencoder embeddings for noisy
//! point clouds.
//!
//! The pipeline contracts each point toward the latent manifold
//! ([`mrl`]), embeds the result with a small autoencoder ([`nn`]) and
//! trains it with a reconstruction loss plus a persistence-based
//! topological loss and a relaxed distortion loss ([`regularizers`]).
//! [`metrics`] scores embeddings; [`training`] and [`sweep`] run the
//! experiments.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops over parallel arrays read closer to the formulas, and
// `is_multiple_of` is newer than the supported toolchain.
#![allow(clippy::needless_range_loop, clippy::manual_is_multiple_of)]

pub mod data;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod mrl;
pub mod nn;
pub mod persistence;
pub mod regularizers;
pub mod rng;
pub mod sweep;
pub mod training;

pub use data::{DatasetKind, DatasetSpec};
pub use error::{Error, Result};
pub use geometry::{DistanceMatrix, PointCloud};
pub use metrics::MetricReport;
pub use mrl::MrlParams;
pub use nn::{Autoencoder, Mlp};
pub use persistence::{Diagram, FiltrationEdge, PersistencePairing};
pub use regularizers::{GeomLossParts, TopoLossParts};
pub use training::{Ablation, Preset, TrainConfig, TrainOutcome, TrainReport};
