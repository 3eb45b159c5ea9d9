//! Classifiers: one-class SVM, PU learning and two-class nu-SVC, plus the
//! grid search that tunes them.

pub mod grid;
pub mod kernel;
pub mod model;
pub mod platt;
pub mod pu;
pub mod qp;
pub mod solver;
pub mod svm;

#[cfg(test)]
mod tests;

use thiserror::Error;

pub use grid::{grid_search, stratified_folds, GridPoint, GridResult, GridSpec, Objective};
pub use kernel::{rbf, CachedQ, Gram, GramQ, KernelSpec, Points};
pub use model::{load_model, save_model, ClassifierKind, Model, Prediction, TrainedModel};
pub use platt::Sigmoid;
pub use pu::{train_pu, train_pu_points, PuModel, PuOptions};
pub use svm::{
    max_feasible_nu, solve_csvc, solve_nusvc, solve_ocsvm, train_ocsvm, train_ocsvm_points, train_ssvm, train_ssvm_points,
    KernelExpansion, OcsvmModel, SolverOptions, SsvmModel,
};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("need at least {need} training point(s) per class, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("nu = {nu} is infeasible for these class sizes (max {max})")]
    InfeasibleNu { nu: f64, max: f64 },
    #[error("all training vectors are identical")]
    DegenerateTraining,
    #[error("validation split is empty")]
    EmptyValidation,
    #[error("calibration collapsed (c = {c})")]
    CollapsedCalibration { c: f64 },
    #[error("solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("no grid point could be trained")]
    GridExhausted,
    #[error("vocabulary mismatch: model uses {expected}, vector uses {found}")]
    VocabMismatch { expected: String, found: String },
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LearnError {
    /// Solver or calibration failures, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            LearnError::NoConvergence { .. }
                | LearnError::Numeric(_)
                | LearnError::CollapsedCalibration { .. }
                | LearnError::GridExhausted
        )
    }
}
