use crate::detectors::{
    check_t_max, decide, second_bests, stop_predicate, SequentialConfig, StopReason,
    StoppedDecision,
};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::scoring::{KernelSums, ObservationSet};

/// A source delivering one new sample of every sequence per time step.
pub trait ObservationStream {
    fn num_sequences(&self) -> usize;

    /// The next sample of each sequence, or `None` once exhausted.
    fn next_column(&mut self) -> Option<Vec<f64>>;
}

/// Replays a fixed observation set column by column.
#[derive(Debug, Clone)]
pub struct ReplayStream<'a> {
    obs: &'a ObservationSet,
    pos: usize,
}

impl<'a> ReplayStream<'a> {
    pub fn new(obs: &'a ObservationSet) -> Self {
        Self { obs, pos: 0 }
    }
}

impl ObservationStream for ReplayStream<'_> {
    fn num_sequences(&self) -> usize {
        self.obs.num_sequences()
    }

    fn next_column(&mut self) -> Option<Vec<f64>> {
        if self.pos >= self.obs.len() {
            return None;
        }
        let col = self.obs.column(self.pos);
        self.pos += 1;
        Some(col)
    }
}

/// Sequential test for at most one outlier.
///
/// Checks `h > λ₁ or h < λ₂` at every `n ≥ N - 1` and, at the stop, claims
/// `i*` when `h > λ₁`.
pub fn sequential_single<S: ObservationStream + ?Sized>(
    spec: &KernelSpec,
    stream: &mut S,
    cfg: &SequentialConfig,
) -> Result<StoppedDecision> {
    run(spec, stream, cfg, 1)
}

/// Sequential test for an unknown number of outliers, at most `t_max`.
pub fn sequential_multi<S: ObservationStream + ?Sized>(
    spec: &KernelSpec,
    stream: &mut S,
    cfg: &SequentialConfig,
    t_max: usize,
) -> Result<StoppedDecision> {
    check_t_max(stream.num_sequences(), t_max)?;
    run(spec, stream, cfg, t_max)
}

fn run<S: ObservationStream + ?Sized>(
    spec: &KernelSpec,
    stream: &mut S,
    cfg: &SequentialConfig,
    t_max: usize,
) -> Result<StoppedDecision> {
    cfg.check_structure()?;
    let mut sums = KernelSums::new(*spec, stream.num_sequences())?;
    let start = cfg.min_len - 1;
    while sums.len() < start {
        let col = stream
            .next_column()
            .ok_or(Error::StreamExhausted { available: sums.len(), needed: start })?;
        sums.push_column(&col)?;
    }
    loop {
        let tables = sums.score_tables(t_max)?;
        let h = second_bests(&tables);
        let reason = if stop_predicate(&h, cfg.lambda1, cfg.lambda2) {
            Some(StopReason::Threshold)
        } else if sums.len() >= cfg.horizon {
            Some(StopReason::Horizon)
        } else {
            match stream.next_column() {
                Some(col) => {
                    sums.push_column(&col)?;
                    None
                }
                None => Some(StopReason::StreamEnd),
            }
        };
        if let Some(reason) = reason {
            return Ok(StoppedDecision {
                decision: decide(&tables, cfg.lambda1, cfg.lambda2),
                tau: sums.len(),
                reason,
            });
        }
    }
}
