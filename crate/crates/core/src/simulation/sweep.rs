use serde::Serialize;

use crate::error::Result;
use crate::simulation::{run_trials, ErrorSummary, TrialSetup};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub detector: &'static str,
    pub param_name: &'static str,
    pub param_value: usize,
    pub seed: u64,
    pub summary: ErrorSummary,
}

/// Runs every grid point with the same base seed, so points of one curve
/// share their trial data up to length.
pub fn sweep(plan: &[TrialSetup], trials: usize, base_seed: u64) -> Result<Vec<SweepRecord>> {
    for setup in plan {
        setup.validate()?;
    }
    plan.iter()
        .map(|setup| {
            let (param_name, param_value) = setup.detector.length_param();
            Ok(SweepRecord {
                detector: setup.detector.name(),
                param_name,
                param_value,
                seed: base_seed,
                summary: run_trials(setup, trials, base_seed)?,
            })
        })
        .collect()
}

/// Linear interpolation of `(error rate, CI half-width)` at mean stopping
/// time `tau` along one detector's records. `None` outside the covered range.
pub fn interpolate_at_tau(records: &[&SweepRecord], tau: f64) -> Option<(f64, f64)> {
    let mut pts: Vec<(f64, f64, f64)> = records
        .iter()
        .map(|r| (r.summary.mean_tau, r.summary.error.rate, r.summary.error.ci_half_width))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(2).find_map(|w| {
        let ((t0, e0, c0), (t1, e1, c1)) = (w[0], w[1]);
        if tau < t0 || tau > t1 {
            return None;
        }
        let a = if t1 > t0 { (tau - t0) / (t1 - t0) } else { 0.0 };
        Some((e0 + a * (e1 - e0), c0 + a * (c1 - c0)))
    })
}
