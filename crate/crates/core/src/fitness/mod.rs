//! Coverage objectives and how close an episode came to each of them.

pub mod novelty;
pub mod objectives;
pub mod robustness;
pub mod suite;

pub use novelty::BehaviorArchive;
pub use objectives::{normalise, CoverageObjective, ObjectiveId, ObjectiveKind, ObjectiveSet};
pub use robustness::{robust_coverage, robustness_check, SeedStream};
pub use suite::{update_suite_on_coverage, DynamicTestSuite, SuiteEntry};
