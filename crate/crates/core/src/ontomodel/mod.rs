//! Finite ontological models over an ontic space `{0, …, N−1}`.

mod classify;
mod fragment;
mod json;
mod model;
mod overlap;
mod validate;

pub use classify::{
    classify, mixture_residual, nnls, Classification, DeterminismViolation, MacroRealism, MixtureViolation,
    SupportViolation, DETERMINISM_TOL, MIXTURE_TOL,
};
pub use fragment::QuantumFragment;
pub use json::DENSE_MAP_LIMIT;
pub use model::{predict_with, Bindings, FiniteOntModel, StochasticMap, SUM_TOL};
pub use overlap::{asymmetric_overlap, kernel_set, overlap_with, support, OverlapReport, Target, KERNEL_EPS, SUPPORT_EPS};
pub use validate::{validate, ValidationReport, ValidationRow};
