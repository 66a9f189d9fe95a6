//! Defect detection for periodic (patterned) textures in gradient space.
//!
//! The inspection pipeline:
//!
//! 1. **Gradient space** – forward-difference gradient magnitude of the input.
//! 2. **Tiling** – four corner crops holding whole periodic units, each split
//!    into blocks the size of one periodic unit.
//! 3. **Features** – L1 energy of every block.
//! 4. **Clustering** – Ward agglomeration of the energies, cut at two clusters;
//!    the smaller cluster is labelled defective.
//! 5. **Fusion** – block outlines from every crop are merged, hole-filled and
//!    traced with a Canny detector.
//!
//! [`evaluation`] scores block-level decisions against ground truth and
//! renders seeded synthetic textures; [`cli`] wires everything to files.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod fusion;
pub mod image;
pub mod pipeline;
pub mod tiling;
pub mod ward;

pub use error::{Error, Result};
pub use image::{forward_differences, gradient_space, GradientField, GrayImage};
pub use pipeline::{inspect_image, CropAnalysis, Inspection, InspectParams};
