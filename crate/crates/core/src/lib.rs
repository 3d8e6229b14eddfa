//! Tensor-train surrogate models for discretized black-box functions.
//!
//! The pipeline fits a first-order ANOVA model from scattered grid samples,
//! converts it exactly into a rank-2 tensor train, pads it to the target
//! rank, and refines it by alternating-least-squares completion on the same
//! samples.

pub mod als;
pub mod anova;
pub mod benchmarks;
pub mod error;
pub mod experiment;
pub mod lstsq;
pub mod pde;
pub mod rng;
pub mod sampling;
pub mod tt;

pub use als::{AlsConfig, AlsReport, MinRowsPolicy};
pub use anova::AnovaModel;
pub use benchmarks::Benchmark;
pub use error::{Error, Result};
pub use sampling::{Dataset, Grid};
pub use tt::{relative_error, FullTensor, TtTensor};
