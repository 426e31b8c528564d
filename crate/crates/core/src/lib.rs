//! Stability diagnostics for learned 2D projections.
//!
//! A small ReLU network is trained to reproduce a reference embedding.
//! Around class-centroid anchors it is then probed with isotropic Gaussian
//! noise, and the projected noise clouds are summarized by mean
//! displacement, displacement bias and nearest-anchor assignment error,
//! next to trustworthiness and continuity of the held-out projection.
//! SVG diagnostics show the clouds per anchor.
//!
//! The narrative guide lives in the `book/` directory of the repository.

pub mod anchors;
pub mod data;
pub mod error;
mod linalg;
pub mod matrix;
pub mod mlp;
pub mod perturb;
pub mod pipeline;
pub mod quality;
pub mod render;
pub mod report;
pub mod rng;
pub mod stability;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;
