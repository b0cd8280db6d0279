//! Monte Carlo experiments and the `bondperc` command line, built on
//! `bondperc-core`.
//!
//! Replicate `i` of an experiment always draws its configuration from the
//! stream `(derive_seed(seed, domain), i)`, and every reduction walks the
//! replicates in index order, so results do not depend on the worker count.

pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod output;
pub mod parallel;
pub mod scans;
pub mod stats;
pub mod theorem;
pub mod verify;

pub use error::LabError;
pub use parallel::Workers;
pub use stats::{EstimateSummary, SampleMoments};
