//! Topological probes of neural-network layer representations.
//!
//! The crate generates a twisted torus in four dimensions with uniform
//! background noise, trains a small fully connected classifier on it, and
//! measures the shape of each hidden layer's representation with
//! Vietoris–Rips persistent homology, density clustering and PCA.

pub mod analysis;
pub mod cloud;
pub mod error;
pub mod filtration;
pub mod geometry;
pub mod mlp;
pub mod persistence;
pub mod pipeline;
pub mod plot;
pub mod rng;

pub use cloud::PointCloud;
pub use error::{Error, Result};
