//! Singular value decomposition and principal component analysis by
//! classically simulating adiabatic quantum annealing.
//!
//! The largest eigenvector of `G = AᵀA` is the ground state of `-G`, so it
//! can be prepared by slowly interpolating `H(t) = -(t/T) G + (1 - t/T) H0`
//! from the known ground state of a diagonal `H0`. Later components follow
//! by deflating `A`.

pub mod anneal;
pub mod cli;
pub mod error;
pub mod image;
pub mod matrix;
pub mod oracle;
pub mod series;
pub mod spectrum;
pub mod two_level;
mod vecops;

pub use anneal::{
    evolve, evolve_with_reference, fidelity, hamiltonian_apply, initial_state, rayleigh_quotient,
    AnnealSchedule, AnnealTrace, InitialHamiltonian, Integrator, StateVector, StepPolicy,
};
pub use error::{Error, Result};
pub use matrix::{
    deflate, gram, gram_apply, left_vector, normalize_columns, reconstruct, DataMatrix, GramMode,
    GramOperator, PrincipalComponent,
};
pub use oracle::{full_diagonalize, power_iteration, EigenDecomposition, EigenPair};
pub use series::{series_sum, series_terms, SeriesExpansion};
pub use spectrum::{
    fidelity_against, oracle_top_k, residual, top_component, top_k, PipelineConfig, ScaleMode,
    SpectrumResult,
};
pub use two_level::{
    coefficients, energy_branches, min_gap, reduced_gap_oracle, time_scale, TwoLevelParams,
};
