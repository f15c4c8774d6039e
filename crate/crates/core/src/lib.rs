//! Kernel-MMD outlier hypothesis testing for multiple data sequences.
//!
//! Scores every candidate outlier set by how far its complement is from
//! homogeneous, then runs fixed-length, sequential or two-phase tests on
//! those scores. Also exposes closed-form exponent lower bounds and a
//! seeded Monte-Carlo harness.

pub mod detectors;
pub mod error;
pub mod exponents;
pub mod kernel;
pub mod mmd;
pub mod scoring;
pub mod simulation;

pub use detectors::{
    Decision, FixedLengthConfig, SequentialConfig, StopReason, StoppedDecision, TwoPhaseConfig,
};
pub use error::{Error, Result};
pub use exponents::{ExponentReport, ProblemParams};
pub use kernel::{KernelKind, KernelSpec};
pub use mmd::{mmd2_population_gaussian, mmd2_unbiased, PairMmdState, Sample};
pub use scoring::{CandidateSet, KernelSums, ObservationSet, ScoreTable};
pub use simulation::{GaussianSpec, GroundTruth};
