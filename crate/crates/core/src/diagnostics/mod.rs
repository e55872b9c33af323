//! Measurable counterparts of the reflection theory: Skorokhod residuals,
//! comparison checks, a priori ratios, barrier crossing times and
//! penalization convergence studies.

mod apriori;
mod comparison;
mod convergence;
mod crossing;
mod skorokhod;

pub use apriori::{apriori_ratio, AprioriReport};
pub use comparison::{comparison_check, ComparisonReport, COMPARISON_TOL};
pub use convergence::{
    convergence_study, convergence_study_with, ConvergenceReport, ConvergenceRow, STIFFNESS_TARGET,
};
pub use crossing::{crossing_indices, crossing_times, CrossingTrace, DEFAULT_L_MAX};
pub use skorokhod::skorokhod_residual;
