//! Ornstein–Uhlenbeck-type semigroup, Stein-equation solutions and the
//! fractional generator.

pub mod functions;
pub mod laplacian;
pub mod regularity;
pub mod stein;

pub use functions::{suite_function, FnRef, SmoothFunction, SUITE};
pub use laplacian::{frac_laplacian, generator_apply, Evaluated, FracLaplacian, LaplacianQuadrature};
pub use regularity::{regularity_report, RegularityOptions, RegularityReport};
pub use stein::{
    heat_equation_residual, ou_marginal_sample, semigroup_apply, semigroup_apply_bank, stein_identity, Estimate,
    HeatResidual, SteinBank, SteinSolution, SteinSolverConfig, VecEstimate, YBank,
};
