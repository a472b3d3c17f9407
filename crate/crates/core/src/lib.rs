//! Topological features for image classification.
//!
//! Images become point clouds, point clouds become Vietoris-Rips persistence
//! diagrams, diagrams become three-channel persistence images, and a small
//! two-branch CNN fuses those images with the raw pixels before an optional
//! squeeze-and-excitation block and a fully connected classifier.

pub mod diagram;
pub mod error;
pub mod homology;
pub mod ingest;
pub mod io;
pub mod persistence_image;

pub use error::{Error, Result};
pub mod cli;
pub mod nn;
pub mod pipeline;
