//! Corn-kernel inspection toolkit.
//!
//! * [`tensor`]: f64 tensors, im2col convolution, pooling and activations.
//! * [`model`]: the three-block CNN classifier, BCE loss, SGD/Adam and the 0.5 decision rule.
//! * [`data`]: dataset loading, preprocessing, augmentation and batching.
//! * [`synth`]: procedural kernel images, datasets and multi-kernel scenes.
//! * [`detector`]: Otsu segmentation, connected components and scene inspection.
//! * [`trainer`]: the training loop, evaluation reports, checkpoints and metrics CSV.

pub mod data;
pub mod detector;
pub mod error;
pub mod geometry;
pub mod label;
pub mod model;
pub mod report;
pub mod synth;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use label::KernelLabel;
pub use model::{Model, ModelConfig, ModelParameters};
pub use tensor::Tensor;
