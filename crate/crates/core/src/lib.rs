//! Reduction of singular linear-quadratic optimal control problems by
//! Hamiltonian constraint analysis with partial feedback.

pub mod classification;
pub mod constraint;
pub mod error;
pub mod experiments;
pub mod hcapf;
pub mod linalg;
pub mod lq_model;
pub mod oracle;

pub use classification::{ClassificationMode, ClassifiedConstraints, PoissonMatrix};
pub use constraint::ConstraintMatrix;
pub use error::{Error, Result, ValidationError};
pub use experiments::{Alpha, ExperimentRecord, Family};
pub use hcapf::{reduce, reduce_with, IterationRecord, ReduceOptions, ReductionResult};
pub use linalg::{Matrix, Tolerance};
pub use lq_model::{ExtendedPoint, InitialMatrices, LqProblem};
pub use oracle::{compare_final_subspaces, recursive_reduce, OracleResult};
