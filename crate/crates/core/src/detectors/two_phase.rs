use crate::detectors::{
    check_t_max, decide, second_bests, stop_predicate, StopReason, StoppedDecision,
    TwoPhaseConfig,
};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::scoring::{KernelSums, ObservationSet};

/// Two-phase test for at most one outlier. Reads the first `n` samples;
/// stops there if `h > λ₁` or `h < λ₂`, otherwise runs the fixed-length
/// test with `λ₃` on all `K·n` samples.
pub fn two_phase_single(
    spec: &KernelSpec,
    obs: &ObservationSet,
    cfg: &TwoPhaseConfig,
) -> Result<StoppedDecision> {
    run(spec, obs, cfg, 1)
}

/// Two-phase test for an unknown number of outliers, at most `t_max`.
pub fn two_phase_multi(
    spec: &KernelSpec,
    obs: &ObservationSet,
    cfg: &TwoPhaseConfig,
    t_max: usize,
) -> Result<StoppedDecision> {
    check_t_max(obs.num_sequences(), t_max)?;
    run(spec, obs, cfg, t_max)
}

fn run(
    spec: &KernelSpec,
    obs: &ObservationSet,
    cfg: &TwoPhaseConfig,
    t_max: usize,
) -> Result<StoppedDecision> {
    cfg.check_structure()?;
    let full = cfg.full_len();
    if obs.len() < full {
        return Err(Error::LengthMismatch { expected: full, got: obs.len() });
    }
    let mut sums = KernelSums::new(*spec, obs.num_sequences())?;
    for t in 0..cfg.n {
        sums.push_column(&obs.column(t))?;
    }
    let tables = sums.score_tables(t_max)?;
    if stop_predicate(&second_bests(&tables), cfg.lambda1, cfg.lambda2) {
        return Ok(StoppedDecision {
            decision: decide(&tables, cfg.lambda1, cfg.lambda2),
            tau: cfg.n,
            reason: StopReason::Threshold,
        });
    }
    for t in cfg.n..full {
        sums.push_column(&obs.column(t))?;
    }
    let tables = sums.score_tables(t_max)?;
    Ok(StoppedDecision {
        decision: decide(&tables, cfg.lambda3, cfg.lambda3),
        tau: full,
        reason: StopReason::SecondPhase,
    })
}
