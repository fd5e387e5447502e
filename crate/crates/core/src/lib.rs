//! Many-objective neuroevolution test generation for small instrumented games.
//!
//! A test case is a NEAT network that plays a game through discrete key
//! presses. The engine covers statements and branch outcomes of the game
//! program and keeps robust covering networks in a [`DynamicTestSuite`].
//! Four search strategies are available: an iterative single-target NEAT
//! baseline, a MOSA variant, a MIO variant and a NEWS/D variant.

pub mod error;
pub mod experiment;
pub mod fitness;
pub mod genome;
pub mod hexfloat;
pub mod mio;
pub mod mosa;
pub mod neatest;
pub mod newsd;
pub mod preference;
pub mod search;
pub mod stats;
pub mod vm;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use fitness::suite::DynamicTestSuite;
pub use genome::{Genome, InnovationRegistry};
pub use vm::{GameSpec, builtin_games};
pub use preference::SecondaryCriterion;
pub use search::{run, Algorithm, RunConfig, RunOutcome};
