//! Learning 1-bit RIS codebooks from user coordinates.
//!
//! - [`field`]: double-path channel gains and received power.
//! - [`codebook`]: codebooks, row/column flip factorization, `M + N - 1` bit labels.
//! - [`oracle`]: greedy row/column traversal labeler and exhaustive references.
//! - [`dataset`]: grid sampling, normalization, splits, dataset files.
//! - [`inr`]: positional encoding, MLP, BCE, SGD training, checkpoints.
//! - [`eval`]: accuracy and power metrics, ablation and data-fraction sweeps.

pub mod codebook;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod exec;
pub mod field;
pub mod inr;
pub mod oracle;

pub use codebook::{Codebook, EncodedLabel, FlipMask};
pub use error::{Error, Result};
pub use exec::Execution;
pub use field::{GeometryConfig, Point3, Power, ScenarioGeometry};
