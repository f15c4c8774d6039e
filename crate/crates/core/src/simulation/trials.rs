use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::detectors::{
    baseline_per_sequence, check_t_max, fixed_length_known_s, fixed_length_multi,
    fixed_length_single, sequential_multi, sequential_single, two_phase_multi, two_phase_single,
    Decision, FixedLengthConfig, SequentialConfig, StoppedDecision, TwoPhaseConfig,
};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::simulation::{gen_observations, GeneratedStream, GroundTruth};

/// Two-sided 95% standard-normal quantile.
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeClass {
    Correct,
    Misclassification,
    FalseReject,
    FalseAlarm,
}

pub fn classify_outcome(decision: &Decision, truth: &GroundTruth) -> OutcomeClass {
    match (decision, truth.is_null()) {
        (Decision::NoOutlier, true) => OutcomeClass::Correct,
        (Decision::Outliers(_), true) => OutcomeClass::FalseAlarm,
        (Decision::NoOutlier, false) => OutcomeClass::FalseReject,
        (Decision::Outliers(b), false) if b.indices() == truth.outliers() => OutcomeClass::Correct,
        (Decision::Outliers(_), false) => OutcomeClass::Misclassification,
    }
}

/// A detector and everything it needs apart from the data. A `t_max` of 1
/// selects the single-outlier variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    FixedLength { lambda: f64, n: usize, t_max: usize },
    KnownS { lambda: f64, n: usize, s: usize },
    Sequential { cfg: SequentialConfig, t_max: usize },
    TwoPhase { cfg: TwoPhaseConfig, t_max: usize },
    Baseline { lambda: f64, n: usize },
}

impl Detector {
    pub fn name(&self) -> &'static str {
        match self {
            Detector::FixedLength { .. } => "fixed_length",
            Detector::KnownS { .. } => "known_s",
            Detector::Sequential { .. } => "sequential",
            Detector::TwoPhase { .. } => "two_phase",
            Detector::Baseline { .. } => "baseline",
        }
    }

    /// The length parameter a sweep varies: `n`, or `N` for the sequential
    /// test.
    pub fn length_param(&self) -> (&'static str, usize) {
        match self {
            Detector::FixedLength { n, .. }
            | Detector::KnownS { n, .. }
            | Detector::Baseline { n, .. } => ("n", *n),
            Detector::TwoPhase { cfg, .. } => ("n", cfg.n),
            Detector::Sequential { cfg, .. } => ("N", cfg.min_len),
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let check_n = |n: usize| {
            if n < 2 {
                Err(Error::InvalidConfig(format!("n must be at least 2, got {n}")))
            } else {
                Ok(())
            }
        };
        match *self {
            Detector::FixedLength { lambda, n, t_max } => {
                FixedLengthConfig::new(lambda)?;
                check_n(n)?;
                check_t_max(m, t_max)
            }
            Detector::KnownS { lambda, n, s } => {
                FixedLengthConfig::new(lambda)?;
                check_n(n)?;
                check_t_max(m, s)
            }
            Detector::Sequential { cfg, t_max } => {
                cfg.check_structure()?;
                check_t_max(m, t_max)
            }
            Detector::TwoPhase { cfg, t_max } => {
                cfg.check_structure()?;
                check_t_max(m, t_max)
            }
            Detector::Baseline { lambda, n } => {
                FixedLengthConfig::new(lambda)?;
                check_n(n)
            }
        }
    }
}

/// One experimental condition: kernel, number of sequences, truth and test.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSetup {
    pub kernel: KernelSpec,
    pub m: usize,
    pub truth: GroundTruth,
    pub detector: Detector,
}

impl TrialSetup {
    pub fn validate(&self) -> Result<()> {
        self.truth.validate(self.m)?;
        self.detector.validate(self.m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub decision: Decision,
    pub tau: usize,
    pub class: OutcomeClass,
    /// Test computation only; data generation is excluded.
    pub wall_time: Duration,
    pub horizon_stop: bool,
}

/// SplitMix64 finaliser applied to `base_seed + index`. A bijection on
/// `u64`, so trial seeds within a run never collide.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(index).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed()))
}

pub fn run_trial(setup: &TrialSetup, seed: u64) -> Result<TrialOutcome> {
    let (kernel, m, truth) = (&setup.kernel, setup.m, &setup.truth);
    let fixed = |n: usize| gen_observations(seed, m, n, truth);
    let (stopped, wall_time) = match setup.detector {
        Detector::FixedLength { lambda, n, t_max } => {
            let obs = fixed(n)?;
            let cfg = FixedLengthConfig::new(lambda)?;
            timed(|| {
                let decision = if t_max == 1 {
                    fixed_length_single(kernel, &obs, &cfg)?
                } else {
                    fixed_length_multi(kernel, &obs, &cfg, t_max)?
                };
                Ok(at_length(decision, n))
            })?
        }
        Detector::KnownS { lambda, n, s } => {
            let obs = fixed(n)?;
            let cfg = FixedLengthConfig::new(lambda)?;
            timed(|| Ok(at_length(fixed_length_known_s(kernel, &obs, &cfg, s)?, n)))?
        }
        Detector::Baseline { lambda, n } => {
            let obs = fixed(n)?;
            let cfg = FixedLengthConfig::new(lambda)?;
            timed(|| Ok(at_length(baseline_per_sequence(kernel, &obs, &cfg)?, n)))?
        }
        Detector::TwoPhase { cfg, t_max } => {
            let obs = fixed(cfg.full_len())?;
            timed(|| {
                if t_max == 1 {
                    two_phase_single(kernel, &obs, &cfg)
                } else {
                    two_phase_multi(kernel, &obs, &cfg, t_max)
                }
            })?
        }
        Detector::Sequential { cfg, t_max } => {
            let mut stream = GeneratedStream::new(seed, m, truth)?;
            let (stopped, total) = timed(|| {
                if t_max == 1 {
                    sequential_single(kernel, &mut stream, &cfg)
                } else {
                    sequential_multi(kernel, &mut stream, &cfg, t_max)
                }
            })?;
            (stopped, total.saturating_sub(stream.generation_time()))
        }
    };
    Ok(TrialOutcome {
        class: classify_outcome(&stopped.decision, truth),
        horizon_stop: stopped.stopped_by_horizon(),
        decision: stopped.decision,
        tau: stopped.tau,
        wall_time,
    })
}

fn at_length(decision: Decision, n: usize) -> StoppedDecision {
    StoppedDecision { decision, tau: n, reason: crate::detectors::StopReason::Threshold }
}

/// Half-width of the Wilson score 95% interval for `k` successes in `n`.
pub fn wilson_half_width(k: usize, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let (n, p) = (n as f64, k as f64 / n as f64);
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub count: usize,
    pub rate: f64,
    pub ci_half_width: f64,
}

impl RateEstimate {
    fn new(count: usize, n: usize) -> Self {
        let rate = if n == 0 { f64::NAN } else { count as f64 / n as f64 };
        Self { count, rate, ci_half_width: wilson_half_width(count, n) }
    }
}

/// Aggregate over the trials that completed. `error` is `β̂ + ζ̂` under a
/// non-null truth and `P̂_FA` under the null.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub trials: usize,
    pub failures: usize,
    pub correct: RateEstimate,
    pub misclassification: RateEstimate,
    pub false_reject: RateEstimate,
    pub false_alarm: RateEstimate,
    pub error: RateEstimate,
    pub mean_tau: f64,
    pub tau_std: f64,
    pub mean_wall_ms: f64,
    pub horizon_stops: usize,
    pub taus: Vec<usize>,
    pub wall_ms: Vec<f64>,
}

impl ErrorSummary {
    /// Order-preserving reduction of per-trial results.
    pub fn from_outcomes(outcomes: &[Result<TrialOutcome>]) -> Self {
        let done: Vec<&TrialOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
        let n = done.len();
        let count = |c: OutcomeClass| done.iter().filter(|o| o.class == c).count();
        let (mis, fr, fa) = (
            count(OutcomeClass::Misclassification),
            count(OutcomeClass::FalseReject),
            count(OutcomeClass::FalseAlarm),
        );
        let taus: Vec<usize> = done.iter().map(|o| o.tau).collect();
        let wall_ms: Vec<f64> = done.iter().map(|o| o.wall_time.as_secs_f64() * 1e3).collect();
        let mean = |xs: &mut dyn Iterator<Item = f64>| -> f64 {
            if n == 0 {
                f64::NAN
            } else {
                xs.sum::<f64>() / n as f64
            }
        };
        let mean_tau = mean(&mut taus.iter().map(|&t| t as f64));
        let tau_std = if n > 1 {
            (taus.iter().map(|&t| (t as f64 - mean_tau).powi(2)).sum::<f64>() / (n - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        Self {
            trials: outcomes.len(),
            failures: outcomes.len() - n,
            correct: RateEstimate::new(count(OutcomeClass::Correct), n),
            misclassification: RateEstimate::new(mis, n),
            false_reject: RateEstimate::new(fr, n),
            false_alarm: RateEstimate::new(fa, n),
            error: RateEstimate::new(mis + fr + fa, n),
            mean_tau,
            tau_std,
            mean_wall_ms: mean(&mut wall_ms.iter().copied()),
            horizon_stops: done.iter().filter(|o| o.horizon_stop).count(),
            taus,
            wall_ms,
        }
    }
}

/// Runs `trials` independent trials in parallel. Trial `i` uses
/// `trial_seed(base_seed, i)`; per-trial errors are counted as failures.
pub fn run_trials(setup: &TrialSetup, trials: usize, base_seed: u64) -> Result<ErrorSummary> {
    if trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    setup.validate()?;
    let outcomes: Vec<Result<TrialOutcome>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(setup, trial_seed(base_seed, i)))
        .collect();
    Ok(ErrorSummary::from_outcomes(&outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::CandidateSet;
    use crate::simulation::GaussianSpec;

    fn truth(b: Vec<usize>) -> GroundTruth {
        GroundTruth::new(b, GaussianSpec::new(0.0, 1.0).unwrap(), GaussianSpec::new(1.5, 1.0).unwrap())
    }

    fn setup(detector: Detector, b: Vec<usize>) -> TrialSetup {
        TrialSetup { kernel: KernelSpec::gaussian(1.0).unwrap(), m: 10, truth: truth(b), detector }
    }

    fn outliers(b: Vec<usize>) -> Decision {
        Decision::Outliers(CandidateSet::new(b, 10).unwrap())
    }

    #[test]
    fn classification() {
        let t = truth(vec![2]);
        assert_eq!(classify_outcome(&outliers(vec![2]), &t), OutcomeClass::Correct);
        assert_eq!(classify_outcome(&outliers(vec![3]), &t), OutcomeClass::Misclassification);
        assert_eq!(classify_outcome(&outliers(vec![2, 3]), &t), OutcomeClass::Misclassification);
        assert_eq!(classify_outcome(&Decision::NoOutlier, &t), OutcomeClass::FalseReject);
        let null = truth(vec![]);
        assert_eq!(classify_outcome(&outliers(vec![1]), &null), OutcomeClass::FalseAlarm);
        assert_eq!(classify_outcome(&Decision::NoOutlier, &null), OutcomeClass::Correct);
    }

    #[test]
    fn seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| trial_seed(7, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(trial_seed(7, 1), trial_seed(8, 0).wrapping_add(1));
    }

    #[test]
    fn wilson_matches_reference() {
        // 10 of 100: reference interval (0.0552, 0.1744).
        let hw = wilson_half_width(10, 100);
        assert!((hw - (0.174_366 - 0.055_229) / 2.0).abs() < 1e-5, "{hw}");
        assert!(wilson_half_width(0, 50) > 0.0);
        assert!(wilson_half_width(3, 0).is_nan());
    }

    #[test]
    fn single_trial_summary() {
        let s = setup(Detector::FixedLength { lambda: 0.18, n: 20, t_max: 1 }, vec![4]);
        let one = run_trial(&s, trial_seed(3, 0)).unwrap();
        let sum = run_trials(&s, 1, 3).unwrap();
        let rate = |c: OutcomeClass| if one.class == c { 1.0 } else { 0.0 };
        assert_eq!(sum.correct.rate, rate(OutcomeClass::Correct));
        assert_eq!(sum.misclassification.rate, rate(OutcomeClass::Misclassification));
        assert_eq!(sum.false_reject.rate, rate(OutcomeClass::FalseReject));
        assert_eq!(sum.taus, vec![20]);
        assert_eq!(sum.tau_std, 0.0);
    }

    #[test]
    fn deterministic_rates() {
        let cfg = SequentialConfig::new(0.29, 0.036, 10).unwrap();
        let s = setup(Detector::Sequential { cfg, t_max: 1 }, vec![0]);
        let a = run_trials(&s, 200, 11).unwrap();
        let b = run_trials(&s, 200, 11).unwrap();
        assert_eq!(a.error, b.error);
        assert_eq!(a.taus, b.taus);
        assert_eq!(a.mean_tau.to_bits(), b.mean_tau.to_bits());
    }

    #[test]
    fn rates_partition_trials() {
        let s = setup(Detector::FixedLength { lambda: 0.1, n: 8, t_max: 4 }, vec![1, 5]);
        let sum = run_trials(&s, 300, 2).unwrap();
        let total = sum.correct.count + sum.misclassification.count + sum.false_reject.count;
        assert_eq!(total, 300);
        assert_eq!(sum.false_alarm.count, 0);
        assert_eq!(sum.failures, 0);
    }

    #[test]
    fn failures_are_counted() {
        let bad: Result<TrialOutcome> = Err(Error::InvalidConfig("x".into()));
        let good = Ok(TrialOutcome {
            decision: Decision::NoOutlier,
            tau: 5,
            class: OutcomeClass::Correct,
            wall_time: Duration::from_millis(2),
            horizon_stop: false,
        });
        let sum = ErrorSummary::from_outcomes(&[bad, good]);
        assert_eq!((sum.trials, sum.failures, sum.correct.count), (2, 1, 1));
        assert_eq!(sum.mean_tau, 5.0);
    }

    #[test]
    fn invalid_setup_rejected() {
        let s = setup(Detector::FixedLength { lambda: 0.1, n: 8, t_max: 5 }, vec![]);
        assert!(run_trials(&s, 10, 0).is_err());
        let ok = setup(Detector::Baseline { lambda: 0.1, n: 8 }, vec![]);
        assert!(run_trials(&ok, 0, 0).is_err());
    }
}
