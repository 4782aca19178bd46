//! Local decision boundary approximation for black-box binary classifiers,
//! with LIME-style baselines, synthetic benchmarks and evaluation metrics.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

pub mod baselines;
pub mod classifier;
pub mod classifiers;
pub mod codec;
pub mod data;
pub mod datagen;
pub mod dba_att;
pub mod dba_tab;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod explanation;
pub mod glm;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod standardize;
pub mod subprocess;

pub use classifier::{Classifier, Concurrency};
pub use codec::{AffineCodec, Codec, IdentityCodec};
pub use data::{Annotations, Dataset, Label};
pub use dba_tab::{DbaParams, ReferenceSet};
pub use error::{Error, Result};
pub use explanation::{Explanation, Method};
pub use rng::SeedStream;
pub use scalar::Scalar;
pub use standardize::Standardizer;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Explanation64 = Explanation<f64>;
pub type Explanation32 = Explanation<f32>;
pub type DbaParams64 = DbaParams<f64>;
pub type DbaParams32 = DbaParams<f32>;
pub type LinearModel64 = glm::LinearModel<f64>;
pub type LinearModel32 = glm::LinearModel<f32>;
pub type EvaluationReport64 = evaluation::EvaluationReport<f64>;
