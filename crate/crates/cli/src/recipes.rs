//! Figure recipes and their resolution into runnable experiment plans.
//!
//! Every recipe uses `M = 10`, `f_N = N(0,1)`, `f_A = N(1.5,1)` and a
//! Gaussian kernel with bandwidth 1 unless overridden.

use anyhow::{bail, Result};
use log::info;
use mmd_outlier::simulation::{Detector, TrialSetup};
use mmd_outlier::{
    mmd2_population_gaussian, GaussianSpec, GroundTruth, KernelSpec, SequentialConfig,
    TwoPhaseConfig,
};
use serde::Serialize;

use crate::config::{parse_gaussian, Settings, Threshold};

pub const RECIPES: [&str; 7] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

const DESK_LENGTHS: &str = "3,4,5,6,8,10,12,15,20,25,30,35,40,45,50";

fn paper_lengths() -> String {
    (3..=50).map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

/// Default settings of a recipe; `paper_scale` switches to 15000 trials and
/// the full length grid.
pub fn defaults(recipe: &str, paper_scale: bool) -> Result<Settings> {
    let mut s = Settings::default();
    for (k, v) in [
        ("m", "10"),
        ("sigma", "1"),
        ("fn", "0,1"),
        ("fa", "1.5,1"),
        ("seed", "7"),
        ("trials", if paper_scale { "15000" } else { "2000" }),
        ("k", "4"),
        ("max-failure-rate", "0.01"),
    ] {
        s.set(k, v);
    }
    let lengths = if paper_scale { paper_lengths() } else { DESK_LENGTHS.to_string() };
    match recipe {
        "fig1" => {
            s.set("kind", "mmd_vs_length");
            s.set("fa", "1,1");
            s.set("lengths", "10,20,50,100,200,500,1000");
            s.set("trials", if paper_scale { "1000" } else { "200" });
        }
        "fig2" => {
            s.set("kind", "mmd_vs_gap");
            s.set("lengths", "6000");
            s.set("gaps", "0,0.5,1,1.5,2");
            s.set("trials", "5");
        }
        "fig3" | "fig4" | "fig5" => {
            s.set("kind", "detectors");
            s.set("s", "1");
            s.set("t-max", "1");
            s.set("lambda", "0.5*mmd2");
            s.set("lambda1", "0.8*mmd2");
            s.set("lambda2", "0.1*mmd2");
            s.set("lambda3", "0.5*mmd2");
            s.set("baseline-lambda", "0.5*mmd2");
            if recipe == "fig5" {
                s.set("detectors", "fixed_length,sequential,two_phase");
                s.set("lengths", "20");
                s.set("trials", "300");
            } else {
                s.set("detectors", "sequential,two_phase,fixed_length,baseline");
                s.set("lengths", &lengths);
            }
        }
        "fig6" | "fig7" => {
            s.set("kind", "detectors");
            s.set("s", "2");
            s.set("t-max", "4");
            s.set("lambda", "0.3*mmd2");
            s.set("lengths", &lengths);
            if recipe == "fig6" {
                s.set("detectors", "two_phase,fixed_length,baseline");
                s.set("lambda1", "0.8*limit");
                s.set("lambda2", "0.1*limit");
                s.set("lambda3", "0.3*mmd2");
                s.set("baseline-lambda", "0.3*mmd2");
            } else {
                s.set("detectors", "known_s,unknown_s");
            }
        }
        other => bail!("unknown recipe `{other}` (expected one of {})", RECIPES.join(", ")),
    }
    s.set("recipe", recipe);
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedThreshold {
    pub expr: Threshold,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Detectors,
    MmdVsLength,
    MmdVsGap,
}

/// Fully resolved experiment, written verbatim to the JSON sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub recipe: String,
    pub kind: Kind,
    pub m: usize,
    pub s: usize,
    pub t_max: usize,
    pub k: usize,
    pub sigma: f64,
    pub nominal: (f64, f64),
    pub anomalous: (f64, f64),
    pub lengths: Vec<usize>,
    pub gaps: Vec<f64>,
    pub detectors: Vec<String>,
    pub mmd2: f64,
    pub limit: f64,
    pub lambda: Option<ResolvedThreshold>,
    pub lambda1: Option<ResolvedThreshold>,
    pub lambda2: Option<ResolvedThreshold>,
    pub lambda3: Option<ResolvedThreshold>,
    pub baseline_lambda: Option<ResolvedThreshold>,
    pub trials: usize,
    pub seed: u64,
    pub max_failure_rate: f64,
}

const DETECTORS: [&str; 6] =
    ["fixed_length", "unknown_s", "known_s", "sequential", "two_phase", "baseline"];

impl ExperimentConfig {
    pub fn resolve(s: &Settings) -> Result<Self> {
        let kind = match s.require("kind")? {
            "detectors" => Kind::Detectors,
            "mmd_vs_length" => Kind::MmdVsLength,
            "mmd_vs_gap" => Kind::MmdVsGap,
            other => bail!("unknown experiment kind `{other}`"),
        };
        let m: usize = s.parse("m")?;
        let sigma: f64 = s.parse("sigma")?;
        let nominal = parse_gaussian(s.require("fn")?)?;
        let anomalous = parse_gaussian(s.require("fa")?)?;
        let kernel = KernelSpec::gaussian(sigma)?;
        let (f_n, f_a) = (gaussian(nominal)?, gaussian(anomalous)?);
        let mmd2 = mmd2_population_gaussian(&kernel, &f_n, &f_a)?;
        let num = |key: &str, default: usize| -> Result<usize> {
            if s.get(key).is_some() {
                s.parse(key)
            } else {
                Ok(default)
            }
        };
        let sc = num("s", 0)?;
        let t_max = num("t-max", sc.max(1))?;
        let limit = if sc <= 1 || m <= sc + 1 {
            mmd2
        } else {
            let r = 1.0 - sc as f64 / (m - sc - 1) as f64;
            r * r * mmd2
        };
        let threshold = |key: &str| -> Result<Option<ResolvedThreshold>> {
            let Some(raw) = s.get(key) else { return Ok(None) };
            let expr: Threshold = raw.parse().map_err(anyhow::Error::msg)?;
            let value = expr.resolve(mmd2, limit);
            info!("{key} = {expr} resolves to {value:.6}");
            Ok(Some(ResolvedThreshold { expr, value }))
        };
        let detectors: Vec<String> = if kind == Kind::Detectors { s.list("detectors")? } else { Vec::new() };
        if let Some(d) = detectors.iter().find(|d| !DETECTORS.contains(&d.as_str())) {
            bail!("unknown detector `{d}` (expected one of {})", DETECTORS.join(", "));
        }
        let cfg = Self {
            recipe: s.get("recipe").unwrap_or("custom").to_string(),
            kind,
            m,
            s: sc,
            t_max,
            k: s.parse("k")?,
            sigma,
            nominal,
            anomalous,
            lengths: s.list("lengths")?,
            gaps: if kind == Kind::MmdVsGap { s.list("gaps")? } else { Vec::new() },
            detectors,
            mmd2,
            limit,
            lambda: threshold("lambda")?,
            lambda1: threshold("lambda1")?,
            lambda2: threshold("lambda2")?,
            lambda3: threshold("lambda3")?,
            baseline_lambda: threshold("baseline-lambda")?,
            trials: s.parse("trials")?,
            seed: s.parse("seed")?,
            max_failure_rate: s.parse("max-failure-rate")?,
        };
        info!("population mmd2 = {mmd2:.6}, limit = {limit:.6}");
        if cfg.trials == 0 {
            bail!("trials must be at least 1");
        }
        if cfg.lengths.is_empty() {
            bail!("lengths must not be empty");
        }
        if cfg.kind == Kind::Detectors {
            // Building the plan runs every detector and truth validation.
            let plan = cfg.plan()?;
            for (_, setup) in &plan {
                setup.validate()?;
            }
        }
        Ok(cfg)
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        Ok(KernelSpec::gaussian(self.sigma)?)
    }

    pub fn nominal_spec(&self) -> Result<GaussianSpec> {
        gaussian(self.nominal)
    }

    pub fn anomalous_spec(&self) -> Result<GaussianSpec> {
        gaussian(self.anomalous)
    }

    fn need(&self, t: Option<ResolvedThreshold>, key: &str, det: &str) -> Result<f64> {
        match t {
            Some(t) => Ok(t.value),
            None => bail!("detector `{det}` needs `{key}`"),
        }
    }

    /// `(label, setup)` for every detector and length, detector-major.
    pub fn plan(&self) -> Result<Vec<(String, TrialSetup)>> {
        let truth = GroundTruth::new((0..self.s).collect(), self.nominal_spec()?, self.anomalous_spec()?);
        let kernel = self.kernel()?;
        let mut out = Vec::new();
        for det in &self.detectors {
            for &len in &self.lengths {
                let detector = match det.as_str() {
                    "fixed_length" | "unknown_s" => Detector::FixedLength {
                        lambda: self.need(self.lambda, "lambda", det)?,
                        n: len,
                        t_max: self.t_max,
                    },
                    "known_s" => Detector::KnownS {
                        lambda: self.need(self.lambda, "lambda", det)?,
                        n: len,
                        s: self.s,
                    },
                    "sequential" => Detector::Sequential {
                        cfg: SequentialConfig::new(
                            self.need(self.lambda1, "lambda1", det)?,
                            self.need(self.lambda2, "lambda2", det)?,
                            len,
                        )?,
                        t_max: self.t_max,
                    },
                    "two_phase" => Detector::TwoPhase {
                        cfg: TwoPhaseConfig::new(
                            self.need(self.lambda1, "lambda1", det)?,
                            self.need(self.lambda2, "lambda2", det)?,
                            self.need(self.lambda3, "lambda3", det)?,
                            self.k,
                            len,
                        )?,
                        t_max: self.t_max,
                    },
                    "baseline" => Detector::Baseline {
                        lambda: self.need(self.baseline_lambda, "baseline-lambda", det)?,
                        n: len,
                    },
                    other => bail!("unknown detector `{other}`"),
                };
                out.push((
                    det.clone(),
                    TrialSetup { kernel, m: self.m, truth: truth.clone(), detector },
                ));
            }
        }
        Ok(out)
    }
}

fn gaussian((mean, var): (f64, f64)) -> Result<GaussianSpec> {
    Ok(GaussianSpec::new(mean, var)?)
}
