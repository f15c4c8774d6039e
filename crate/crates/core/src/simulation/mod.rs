//! Seeded data generation and Monte-Carlo evaluation of the detectors.
//!
//! Sequence `i` of a trial is drawn from its own ChaCha8 stream (stream id
//! `i`) seeded by the trial seed, one standard-normal variate per sample via
//! the ziggurat sampler of `rand_distr`. Generating longer data with the
//! same seed therefore extends every sequence instead of redrawing it.

mod sweep;
mod trials;

pub use sweep::{interpolate_at_tau, sweep, SweepRecord};
pub use trials::{
    classify_outcome, run_trial, run_trials, trial_seed, wilson_half_width, Detector,
    ErrorSummary, OutcomeClass, RateEstimate, TrialOutcome, TrialSetup,
};

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rayon::prelude::*;

use crate::detectors::ObservationStream;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::mmd::{mmd2_unbiased, Sample};
use crate::scoring::{max_outliers, ObservationSet, MIN_SEQUENCES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    mean: f64,
    variance: f64,
}

impl GaussianSpec {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::NonFinite(mean));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidConfig(format!("variance must be positive, got {variance}")));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.variance.sqrt() * z
    }
}

/// Which sequences are outliers, and the two generating distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    outliers: Vec<usize>,
    pub nominal: GaussianSpec,
    pub anomalous: GaussianSpec,
}

impl GroundTruth {
    pub fn new(mut outliers: Vec<usize>, nominal: GaussianSpec, anomalous: GaussianSpec) -> Self {
        outliers.sort_unstable();
        outliers.dedup();
        Self { outliers, nominal, anomalous }
    }

    pub fn null(nominal: GaussianSpec, anomalous: GaussianSpec) -> Self {
        Self::new(Vec::new(), nominal, anomalous)
    }

    /// Sorted outlier indices.
    pub fn outliers(&self) -> &[usize] {
        &self.outliers
    }

    pub fn is_null(&self) -> bool {
        self.outliers.is_empty()
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if m < MIN_SEQUENCES {
            return Err(Error::InvalidConfig(format!("need M >= {MIN_SEQUENCES}, got {m}")));
        }
        if let Some(&i) = self.outliers.iter().find(|&&i| i >= m) {
            return Err(Error::InvalidConfig(format!("outlier index {i} out of range for M={m}")));
        }
        if self.outliers.len() > max_outliers(m) {
            return Err(Error::InvalidConfig(format!(
                "{} outliers exceed the maximum {} for M={m}",
                self.outliers.len(),
                max_outliers(m)
            )));
        }
        Ok(())
    }

    fn dist(&self, i: usize) -> &GaussianSpec {
        if self.outliers.binary_search(&i).is_ok() {
            &self.anomalous
        } else {
            &self.nominal
        }
    }
}

fn sequence_rngs(seed: u64, m: usize) -> Vec<ChaCha8Rng> {
    (0..m)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            rng
        })
        .collect()
}

/// `M` sequences of length `n`; sequence `i` follows `f_A` when `i` is an
/// outlier and `f_N` otherwise.
pub fn gen_observations(seed: u64, m: usize, n: usize, truth: &GroundTruth) -> Result<ObservationSet> {
    truth.validate(m)?;
    let seqs = sequence_rngs(seed, m)
        .into_iter()
        .enumerate()
        .map(|(i, mut rng)| {
            let d = truth.dist(i);
            (0..n).map(|_| d.draw(&mut rng)).collect()
        })
        .collect();
    ObservationSet::new(seqs)
}

/// Unbounded stream producing the same data as [`gen_observations`] column
/// by column, timing its own generation work.
#[derive(Debug, Clone)]
pub struct GeneratedStream {
    truth: GroundTruth,
    rngs: Vec<ChaCha8Rng>,
    gen_time: Duration,
    emitted: usize,
}

impl GeneratedStream {
    pub fn new(seed: u64, m: usize, truth: &GroundTruth) -> Result<Self> {
        truth.validate(m)?;
        Ok(Self {
            truth: truth.clone(),
            rngs: sequence_rngs(seed, m),
            gen_time: Duration::ZERO,
            emitted: 0,
        })
    }

    /// Time spent drawing samples so far.
    pub fn generation_time(&self) -> Duration {
        self.gen_time
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }
}

impl ObservationStream for GeneratedStream {
    fn num_sequences(&self) -> usize {
        self.rngs.len()
    }

    fn next_column(&mut self) -> Option<Vec<f64>> {
        let start = Instant::now();
        let truth = &self.truth;
        let col = self
            .rngs
            .iter_mut()
            .enumerate()
            .map(|(i, rng)| truth.dist(i).draw(rng))
            .collect();
        self.gen_time += start.elapsed();
        self.emitted += 1;
        Some(col)
    }
}

/// Two samples of length `n`, from `f1` on stream 0 and `f2` on stream 1.
pub fn sample_pair(seed: u64, n: usize, f1: &GaussianSpec, f2: &GaussianSpec) -> Result<(Sample, Sample)> {
    let mut rngs = sequence_rngs(seed, 2);
    let x = (0..n).map(|_| f1.draw(&mut rngs[0])).collect();
    let y = (0..n).map(|_| f2.draw(&mut rngs[1])).collect();
    Ok((Sample::new(x)?, Sample::new(y)?))
}

/// `trials` independent unbiased `MMD²` estimates at sample size `n`, trial
/// `i` seeded with `trial_seed(base_seed, i)`.
pub fn mmd2_estimates(
    spec: &KernelSpec,
    f1: &GaussianSpec,
    f2: &GaussianSpec,
    n: usize,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<f64>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let (x, y) = sample_pair(trial_seed(base_seed, i), n, f1, f2)?;
            mmd2_unbiased(spec, &x, &y)
        })
        .collect()
}
