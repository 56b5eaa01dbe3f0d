//! Generalized CLT: source laws, triangular arrays, the Wasserstein bound
//! and rate experiments.

pub mod array;
pub mod bound;
pub mod experiment;
pub mod source;

pub use array::{log_modified_an, TriangularArray};
pub use bound::{
    default_cutoff, moment_terms, remainder, remainder_closed_form, remainder_quadrature, theoretical_bound, MomentTerms,
    PredictedRate, Remainder, TheoreticalBound,
};
pub use experiment::{
    ordering_experiment, rate_experiment, read_rate_table, write_rate_table, Estimator, OrderingConfig, OrderingResult, OrderingRow, RateExperiment,
    RateExperimentConfig, RateLevel, RateRow,
};
pub use source::{log_modified_radius, SourceKind, SourceLaw, TailProfile};
