//! Exact and Monte Carlo tools for disorder chaos, superconcentration and
//! multiple valleys in Gaussian spin glasses.

pub mod analysis;
pub mod disorder;
pub mod error;
pub mod exact;
pub mod models;
pub mod quadrature;
pub mod runner;
pub mod sampler;
pub mod stats;
pub mod valleys;

pub use disorder::{CoupledDisorder, DisorderVector, ResampleMask, SeedRecord, Sign};
pub use error::{Error, Result};
pub use exact::{Beta, GibbsTable};
pub use models::{Graph, ModelSpec, PSpinTerm, SpinConfiguration};
