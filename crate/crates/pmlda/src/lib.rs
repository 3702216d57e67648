//! Partial-membership topic modeling for soft image segmentation.
//!
//! Words (per-pixel feature vectors) belong to topics with continuous,
//! simplex-valued memberships rather than one-hot assignments. The crate
//! provides:
//!
//! - [`model`]: the blended-Gaussian emission density and the per-document /
//!   corpus log joints;
//! - [`generative`]: forward simulation of corpora with ground-truth latents;
//! - [`sampler`]: Metropolis-within-Gibbs MAP inference over proportions,
//!   scales, memberships, topic means and the shared variance;
//! - [`features`]: image-to-corpus pipelines (intensity/entropy, Gaussian
//!   gradient + color, texture filter bank) with sliding-window or
//!   label-map document construction;
//! - [`fcm`]: a fuzzy c-means baseline producing the same membership layout;
//! - [`segmentation`] and [`roc`]: membership-map assembly, crisp and
//!   transition maps, and pixel-level ROC/AUC evaluation;
//! - [`io`]: CSV / key-value / PNM readers and writers for every artifact.

pub mod error;
pub mod fcm;
pub mod features;
pub mod generative;
pub mod io;
pub mod model;
pub mod roc;
pub mod sampler;
pub mod segmentation;
pub mod stream;

pub use error::{Error, Result};
