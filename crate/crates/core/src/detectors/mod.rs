//! Fixed-length, sequential and two-phase outlier tests for the
//! at-most-one-outlier and unknown-number-of-outliers settings, the
//! known-count variant, and a per-sequence baseline.
//!
//! Every test reduces to the same two rules applied to score tables:
//! [`estimate_num_outliers`] picks a candidate-set size from the
//! second-smallest scores `h_t`, and [`stop_predicate`] decides whether a
//! sequential or two-phase test may stop. The single-outlier tests are the
//! `T = 1` instances of the multi-outlier ones.

mod baseline;
mod fixed;
mod sequential;
mod two_phase;

pub use baseline::baseline_per_sequence;
pub use fixed::{fixed_length_known_s, fixed_length_multi, fixed_length_single};
pub use sequential::{sequential_multi, sequential_single, ObservationStream, ReplayStream};
pub use two_phase::{two_phase_multi, two_phase_single};

use std::fmt;

use crate::error::{Error, Result};
use crate::scoring::{max_outliers, CandidateSet, ScoreTable};

/// Output of a test: a set of claimed outliers, or the null verdict.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Decision {
    Outliers(CandidateSet),
    NoOutlier,
}

impl Decision {
    pub fn outliers(&self) -> Option<&CandidateSet> {
        match self {
            Decision::Outliers(b) => Some(b),
            Decision::NoOutlier => None,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Outliers(b) => write!(f, "outliers {b}"),
            Decision::NoOutlier => f.write_str("no outlier"),
        }
    }
}

fn check_threshold(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedLengthConfig {
    pub lambda: f64,
}

impl FixedLengthConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        check_threshold("lambda", lambda)?;
        Ok(Self { lambda })
    }
}

/// Default hard cap on a sequential run, as a multiple of `N`.
pub const DEFAULT_HORIZON_FACTOR: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialConfig {
    /// Upper threshold `λ₁`; also the decision threshold at the stop.
    pub lambda1: f64,
    /// Lower threshold `λ₂`.
    pub lambda2: f64,
    /// `N`: the first check happens at `n = N - 1`.
    pub min_len: usize,
    /// Hard cap on the number of samples per sequence.
    pub horizon: usize,
}

impl SequentialConfig {
    /// Validated config with the default horizon `100·N`.
    pub fn new(lambda1: f64, lambda2: f64, min_len: usize) -> Result<Self> {
        let cfg = Self {
            lambda1,
            lambda2,
            min_len,
            horizon: DEFAULT_HORIZON_FACTOR * min_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        self.horizon = horizon;
        self.check_structure()?;
        Ok(self)
    }

    /// Full invariants, including `λ₁ > λ₂` (otherwise the stopping time is
    /// always `N - 1`).
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        if self.lambda1 <= self.lambda2 {
            return Err(Error::InvalidConfig(format!(
                "lambda1 ({}) must exceed lambda2 ({})",
                self.lambda1, self.lambda2
            )));
        }
        Ok(())
    }

    /// What the detectors need to run at all. Degenerate threshold orders are
    /// accepted here so the reduction to the fixed-length test can be run.
    pub fn check_structure(&self) -> Result<()> {
        check_threshold("lambda1", self.lambda1)?;
        check_threshold("lambda2", self.lambda2)?;
        if self.min_len < 3 {
            return Err(Error::InvalidConfig(format!("N must be at least 3, got {}", self.min_len)));
        }
        if self.horizon < self.min_len - 1 {
            return Err(Error::InvalidConfig(format!(
                "horizon {} is shorter than N - 1 = {}",
                self.horizon,
                self.min_len - 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Threshold of the second-phase fixed-length test.
    pub lambda3: f64,
    /// Second-phase length multiplier `K`.
    pub k: usize,
    /// First-phase length `n`.
    pub n: usize,
}

impl TwoPhaseConfig {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64, k: usize, n: usize) -> Result<Self> {
        let cfg = Self { lambda1, lambda2, lambda3, k, n };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        if self.lambda1 <= self.lambda2 {
            return Err(Error::InvalidConfig(format!(
                "lambda1 ({}) must exceed lambda2 ({})",
                self.lambda1, self.lambda2
            )));
        }
        Ok(())
    }

    pub fn check_structure(&self) -> Result<()> {
        check_threshold("lambda1", self.lambda1)?;
        check_threshold("lambda2", self.lambda2)?;
        check_threshold("lambda3", self.lambda3)?;
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be at least 2, got {}", self.n)));
        }
        Ok(())
    }

    /// Second-phase length `K·n`.
    pub fn full_len(&self) -> usize {
        self.k * self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    /// The stopping predicate fired (sequential) or the first phase decided.
    Threshold,
    /// Two-phase test went on to `K·n` samples.
    SecondPhase,
    /// Sequential test reached its horizon without the predicate firing.
    Horizon,
    /// The stream ran dry before the predicate fired.
    StreamEnd,
}

/// A decision together with the number of samples per sequence it used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppedDecision {
    pub decision: Decision,
    pub tau: usize,
    pub reason: StopReason,
}

impl StoppedDecision {
    pub fn stopped_by_horizon(&self) -> bool {
        matches!(self.reason, StopReason::Horizon | StopReason::StreamEnd)
    }
}

/// Checks `1 ≤ t_max ≤ ⌈M/2⌉ - 1`.
pub fn check_t_max(m: usize, t_max: usize) -> Result<()> {
    let cap = max_outliers(m);
    if t_max == 0 || t_max > cap {
        return Err(Error::InvalidConfig(format!(
            "maximum number of outliers must lie in 1..={cap} for M={m}, got {t_max}"
        )));
    }
    Ok(())
}

/// Second-smallest scores `(h_1, …, h_T)`.
pub fn second_bests(tables: &[ScoreTable]) -> Vec<f64> {
    tables.iter().map(ScoreTable::second_best).collect()
}

/// Number of outliers `ŝ` from `h = (h_1, …, h_T)`.
///
/// `ŝ = t` when `h_t > λ_hi` and every later `h_t̃ < λ_lo`; `0` when no `t`
/// qualifies. The scan runs from `T` down and keeps the first match, so with
/// `λ_hi ≥ λ_lo` (where at most one `t` can qualify) this is the unique
/// solution. With a single threshold it is `max{t : h_t > λ}` except when a
/// later `h_t̃` equals `λ` exactly.
pub fn estimate_num_outliers(h: &[f64], lambda_hi: f64, lambda_lo: f64) -> usize {
    // all_below: every h_t̃ with t̃ > t is strictly below λ_lo.
    let mut all_below = true;
    for t in (1..=h.len()).rev() {
        let ht = h[t - 1];
        if all_below && ht > lambda_hi {
            return t;
        }
        all_below &= ht < lambda_lo;
    }
    0
}

/// Stopping predicate shared by the sequential and two-phase tests: some `t`
/// has `h_t > λ₁` with all later `h` below `λ₂`, or every `h_t < λ₂`.
pub fn stop_predicate(h: &[f64], lambda1: f64, lambda2: f64) -> bool {
    estimate_num_outliers(h, lambda1, lambda2) > 0 || h.iter().all(|&v| v < lambda2)
}

/// `𝓘_ŝ*` for `ŝ = estimate_num_outliers(h, λ_hi, λ_lo)`, or the null verdict.
pub fn decide(tables: &[ScoreTable], lambda_hi: f64, lambda_lo: f64) -> Decision {
    match estimate_num_outliers(&second_bests(tables), lambda_hi, lambda_lo) {
        0 => Decision::NoOutlier,
        s => Decision::Outliers(tables[s - 1].best_set().clone()),
    }
}

/// The single-outlier rule: `i*` when `h > λ`, else the null verdict.
pub fn decide_single(table: &ScoreTable, lambda: f64) -> Decision {
    decide(std::slice::from_ref(table), lambda, lambda)
}
