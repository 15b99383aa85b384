//! Deterministic federated-learning simulator for private-shared network
//! splits.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: layers, cross-entropy, momentum SGD, and the two-way
//!   (Gumbel-)softmax used by the fusion layers.
//! - [`splitnet`]: block splits, privatization ways (`"AaB"`, `"ABb"`, ...),
//!   and client models with shared/private parameter partitions.
//! - [`scenes`]: datasets, the binary dataset format, label-shift and
//!   covariate-shift partitioners.
//! - [`fedsim`]: client sampling, local training, shared-only averaging,
//!   and metric recording.
//! - [`autofuse`]: cross-stitch, soft-attention and hard-selection fusion
//!   over a full double-branch model.
//! - [`interp`]: post-hoc feature/prediction interpolation sweeps.
//! - [`bregman`]: numeric checks of the Bregman-divergence results that
//!   motivate private-shared models.

pub mod autofuse;
pub mod bregman;
pub mod error;
pub mod experiment;
pub mod fedsim;
pub mod gradcheck;
pub mod interp;
pub mod nn;
pub mod report;
pub mod rng;
pub mod scenes;
pub mod splitnet;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
