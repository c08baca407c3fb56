//! Finite ontological models of small quantum systems and the machinery to
//! test macro-realist assumptions against them: exact witness states, an
//! LP-based exclusion of eigenstate-supported models, a zoo of reference
//! models and Leggett–Garg correlators.

pub mod error;
pub mod exclusion;
pub mod lgi;
pub mod lp;
pub mod ontomodel;
pub mod properties;
pub mod qcore;
pub mod random;
pub mod witness;
pub mod zoo;

pub use error::{Error, Result};
pub use lp::{solve_lp, LinearProgram, LpOutcome, LpStatus};
pub use ontomodel::{
    asymmetric_overlap, classify, validate, Bindings, Classification, FiniteOntModel, MacroRealism, QuantumFragment,
    StochasticMap, Target,
};
pub use qcore::{apply, born, ProjMeasurement, StateVector, UnitaryMap};
pub use witness::{build_witness, WitnessBundle, WitnessParams};
