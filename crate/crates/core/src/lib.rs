//! Multivariate α-stable laws (1 < α < 2): sampling, Stein-equation
//! solvers for the Ornstein–Uhlenbeck-type generator, exact Wasserstein-1
//! distances and generalized-CLT rate experiments.

pub mod error;
pub mod gclt;
pub mod ou_stein;
pub mod quad;
pub mod rate;
pub mod rng;
pub mod sampler;
pub mod sphere;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
pub use spectral::{AcDensity, AtomPair, CantorSpec, SpectralMeasure, SpectralSpec, StableLaw};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
