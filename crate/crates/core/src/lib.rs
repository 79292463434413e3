//! Multiplier bootstraps for network count functionals.
//!
//! Exact and sketched motif statistics, linear / quadratic / multiplicative
//! bootstraps, empirical Edgeworth expansions and corrected percentile
//! intervals under the sparse graphon model.

pub mod bootstrap;
pub mod counts;
pub mod error;
pub mod esp;
pub mod expansion;
pub mod graph;
pub mod harness;
pub mod interval;
pub mod motif;
pub mod population;
pub mod rng;
pub mod scalar;
pub mod sketch;
pub mod smooth;

pub use error::{Error, Result};
pub use graph::{Graph, GraphonSpec};
pub use motif::Motif;
pub use scalar::Scalar;

pub type LocalStats64 = counts::LocalStats<f64>;
pub type LocalStats32 = counts::LocalStats<f32>;
pub type BootstrapRun64 = bootstrap::BootstrapRun<f64>;
pub type BootstrapRun32 = bootstrap::BootstrapRun<f32>;
pub type EdgeworthCoefficients64 = expansion::EdgeworthCoefficients<f64>;
pub type EdgeworthCoefficients32 = expansion::EdgeworthCoefficients<f32>;
pub type SmoothBootOutput64 = smooth::SmoothBootOutput<f64>;
pub type SmoothBootOutput32 = smooth::SmoothBootOutput<f32>;
pub type CiResult64 = interval::CiResult<f64>;
pub type CiResult32 = interval::CiResult<f32>;
