//! Illness-death multistate model for progression-free survival (PFS) and
//! overall survival (OS).
//!
//! States are 0 (alive without progression), 1 (progressed) and 2 (dead).
//! PFS is the waiting time in state 0 and OS the time until absorption in 2.
//! The crate covers transition probabilities, the joint law of (PFS, OS),
//! Pearson correlation, exact trajectory simulation, counting-process
//! maximum likelihood, Nelson–Aalen / Aalen–Johansen estimation and
//! bootstrap inference.

pub mod dependence;
pub mod error;
pub mod inference;
pub mod joint;
pub mod model;
pub mod parallel;
pub mod quadrature;
pub mod simulate;
pub mod transition;

pub use error::{IdmError, Result};
pub use model::{
    cumulative_hazard, hazard_value, validate_params, ClockConvention, Family, HazardSpec, IdmParams,
    Transition, Violation,
};
pub use quadrature::QuadratureConfig;
pub use transition::{p00, p01, p11, transition_matrix, TransitionMatrix};
pub use dependence::{correlation, correlation_mc, Marginal, MomentMethod, MomentSet};
pub use inference::bootstrap::{bootstrap_ci, BootstrapConfig, BootstrapMethod, BootstrapResult, ParamKind, Statistic};
pub use inference::counting::{build_counting_data, CountingData};
pub use inference::fit::{fit_mle, Estimator, FitOptions, FitResult, ModelFamily};
pub use inference::likelihood::log_likelihood;
pub use inference::nonparametric::{aalen_johansen, nelson_aalen, StepFunction};
pub use inference::records::{OsStatus, PdStatus, SubjectRecord};
pub use joint::{joint_cdf, joint_survival, s_os, s_pfs, survival_of_product};
pub use simulate::{run_scenario_study, sample_cohort, sample_trajectory, CensoringSpec, ScenarioStudy, StudyResult, Trajectory};
