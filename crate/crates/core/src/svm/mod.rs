//! Soft-margin SVM: dual solver and trained model.

mod model;
mod smo;

pub use model::{SupportVector, SvmModel, TrainingMeta};
pub use smo::{check_gram, dual_objective, primal_objective, solve_dual, DualSolution, SolverOptions};
