//! Detection of images produced by deep generative networks from the
//! statistics of their color components.
//!
//! The pipeline converts an RGB image to several color spaces, applies
//! difference filters, quantizes the residuals and summarizes them as
//! symmetric co-occurrence histograms. Those features feed either a random
//! subspace ensemble of Fisher discriminants, trained on both classes, or a
//! one-class kernel novelty detector trained on camera images alone.

pub mod analysis;
pub mod classifier;
pub mod colorspace;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod label;
pub mod residual;
pub mod synthgen;

pub use error::{Error, Result};
pub use label::Label;
