use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use mmd_outlier::exponents::{
    bounds_fixed_multi, bounds_fixed_single, bounds_known_s, bounds_seq_multi, bounds_seq_single,
    bounds_twophase_multi, bounds_twophase_single, table1, table2, ExponentReport, ProblemParams,
};
use mmd_outlier::simulation::{mmd2_estimates, sweep};
use mmd_outlier::{mmd2_population_gaussian, mmd2_unbiased, Error, GaussianSpec, KernelSpec, Sample};
use serde::Serialize;

mod config;
mod output;
mod recipes;

use config::{parse_gaussian, Settings, Threshold};
use output::{emit, DetectorRow, Format, MmdRow};
use recipes::{ExperimentConfig, Kind};

const EXIT_CONFIG: u8 = 2;
const EXIT_TRIAL_FAILURES: u8 = 3;
const EXIT_INPUT: u8 = 4;

/// A failure carrying its process exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn config_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_CONFIG, err: err.into() }
}

fn input_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_INPUT, err: err.into() }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "mmdout", version, about = "MMD-based outlier hypothesis testing experiments")]
struct Cli {
    /// Worker threads for Monte-Carlo trials (0 = all cores).
    #[arg(long, global = true, env = "MMDOUT_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unbiased or population MMD².
    Mmd {
        #[command(subcommand)]
        cmd: MmdCmd,
    },
    /// Exponent lower bounds for one test, or the Bayesian-exponent tables.
    Exponents(ExponentArgs),
    /// Monte-Carlo experiments, by figure recipe or custom settings.
    Simulate(Box<SimulateArgs>),
}

#[derive(Subcommand)]
enum MmdCmd {
    /// Closed-form population MMD² between two Gaussians.
    Pop {
        /// Nominal distribution as `mean,variance`.
        #[arg(long = "fn", default_value = "0,1")]
        f_n: String,
        /// Anomalous distribution as `mean,variance`.
        #[arg(long = "fa", default_value = "1.5,1")]
        f_a: String,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Unbiased estimate between two files of one number per line.
    Sample {
        x: PathBuf,
        y: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TestKind {
    Fixed,
    Sequential,
    TwoPhase,
    KnownS,
}

#[derive(Args)]
struct ExponentArgs {
    #[arg(long, value_enum, default_value = "fixed")]
    test: TestKind,
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Maximum number of outliers; 1 selects the single-outlier bounds.
    #[arg(long, default_value_t = 1)]
    t_max: usize,
    /// True number of outliers.
    #[arg(long, default_value_t = 1)]
    s: usize,
    #[arg(long, default_value_t = 1.0)]
    k0: f64,
    /// Population MMD²; computed from --fn/--fa/--sigma when absent.
    #[arg(long)]
    mmd2: Option<f64>,
    #[arg(long = "fn", default_value = "0,1")]
    f_n: String,
    #[arg(long = "fa", default_value = "1.5,1")]
    f_a: String,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Thresholds: absolute, `c*mmd2` or `c*limit`.
    #[arg(long, default_value = "0.5*mmd2")]
    lambda: Threshold,
    #[arg(long, default_value = "0.8*mmd2")]
    lambda1: Threshold,
    #[arg(long, default_value = "0.1*mmd2")]
    lambda2: Threshold,
    #[arg(long, default_value = "0.5*mmd2")]
    lambda3: Threshold,
    #[arg(long, default_value_t = 4.0)]
    k: f64,
    /// Print the single-outlier Bayesian-exponent table at --eps.
    #[arg(long)]
    table1: bool,
    /// Print the multi-outlier Bayesian-exponent table at --eps (needs s > 1).
    #[arg(long)]
    table2: bool,
    #[arg(long, default_value = "0.01")]
    eps: Threshold,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    recipe: Option<String>,
    /// Flat `key = value` file using the flag names; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// 15000 trials and the full length grid.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Write zero wall times so repeated runs produce identical files.
    #[arg(long)]
    no_wall_time: bool,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "fn")]
    f_n: Option<String>,
    #[arg(long = "fa")]
    f_a: Option<String>,
    /// Comma-separated n (or N) grid.
    #[arg(long)]
    lengths: Option<String>,
    #[arg(long)]
    gaps: Option<String>,
    /// Comma-separated subset of fixed_length, unknown_s, known_s,
    /// sequential, two_phase, baseline.
    #[arg(long)]
    detectors: Option<String>,
    #[arg(long)]
    lambda: Option<Threshold>,
    #[arg(long)]
    lambda1: Option<Threshold>,
    #[arg(long)]
    lambda2: Option<Threshold>,
    #[arg(long)]
    lambda3: Option<Threshold>,
    #[arg(long)]
    baseline_lambda: Option<Threshold>,
    /// Fraction of failed trials above which the run exits with code 3.
    #[arg(long)]
    max_failure_rate: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            warn!("could not size thread pool: {e}");
        }
    }
    let res = match cli.cmd {
        Command::Mmd { cmd } => cmd_mmd(cmd),
        Command::Exponents(args) => cmd_exponents(&args),
        Command::Simulate(args) => cmd_simulate(&args),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn gaussian(s: &str) -> Result<GaussianSpec, Failure> {
    let (m, v) = parse_gaussian(s).map_err(config_err)?;
    GaussianSpec::new(m, v).map_err(config_err)
}

fn read_sample(path: &Path) -> Result<Sample, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input_err)?;
    let values = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("{}:{}: `{}`: {e}", path.display(), i + 1, l.trim()))
        })
        .collect::<anyhow::Result<Vec<f64>>>()
        .map_err(input_err)?;
    Sample::new(values)
        .with_context(|| format!("in {}", path.display()))
        .map_err(input_err)
}

fn cmd_mmd(cmd: MmdCmd) -> CmdResult {
    match cmd {
        MmdCmd::Pop { f_n, f_a, sigma } => {
            let k = KernelSpec::gaussian(sigma).map_err(config_err)?;
            let v = mmd2_population_gaussian(&k, &gaussian(&f_n)?, &gaussian(&f_a)?)
                .map_err(config_err)?;
            println!("{v:.6}");
        }
        MmdCmd::Sample { x, y, sigma } => {
            let k = KernelSpec::gaussian(sigma).map_err(config_err)?;
            let (x, y) = (read_sample(&x)?, read_sample(&y)?);
            let v = mmd2_unbiased(&k, &x, &y).map_err(|e| match e {
                Error::InsufficientSamples { .. } => input_err(e),
                other => config_err(other),
            })?;
            println!("{v:.12}");
        }
    }
    Ok(())
}

fn print_report(name: &str, r: &ExponentReport) {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
    println!(
        "{:<12} {:>14} {:>14} {:>14} {:>14} {:>6}",
        "test", "misclass", "false_reject", "false_alarm", "bayesian", "valid"
    );
    println!(
        "{:<12} {:>14} {:>14} {:>14.6e} {:>14.6e} {:>6}",
        name,
        opt(r.misclassification),
        opt(r.false_reject),
        r.false_alarm,
        r.bayesian,
        r.valid
    );
}

fn cmd_exponents(a: &ExponentArgs) -> CmdResult {
    let mmd2 = match a.mmd2 {
        Some(v) => v,
        None => {
            let k = KernelSpec::gaussian(a.sigma).map_err(config_err)?;
            mmd2_population_gaussian(&k, &gaussian(&a.f_n)?, &gaussian(&a.f_a)?).map_err(config_err)?
        }
    };
    let p = ProblemParams::new(a.m, a.t_max, a.s, a.k0, mmd2).map_err(config_err)?;
    let limit = p.limit();
    let r = |t: &Threshold| t.resolve(mmd2, limit);
    info!("mmd2 = {mmd2:.6}, limit = {limit:.6}");

    if a.table1 || a.table2 {
        let eps = r(&a.eps);
        let (label, t) = if a.table1 {
            ("table1", table1(eps, a.k, &ProblemParams::single(a.m, 1, a.k0, mmd2).map_err(config_err)?))
        } else {
            ("table2", table2(eps, a.k, &p))
        };
        let t = t.map_err(config_err)?;
        println!("{label} eps={eps:.6} K={}", a.k);
        println!("{:<14} {:>14}", "test", "bayesian");
        for (name, v) in [("fixed_length", t.fixed), ("sequential", t.sequential), ("two_phase", t.two_phase)] {
            println!("{name:<14} {v:>14.6e}");
        }
        return Ok(());
    }

    let single = a.t_max == 1;
    let (l, l1, l2, l3) = (r(&a.lambda), r(&a.lambda1), r(&a.lambda2), r(&a.lambda3));
    let (name, report) = match a.test {
        TestKind::Fixed if single => ("fixed", bounds_fixed_single(l, &p)),
        TestKind::Fixed => ("fixed", bounds_fixed_multi(l, &p)),
        TestKind::Sequential if single => ("sequential", bounds_seq_single(l1, l2, &p)),
        TestKind::Sequential => ("sequential", bounds_seq_multi(l1, l2, &p)),
        TestKind::TwoPhase if single => ("two_phase", bounds_twophase_single(l1, l2, l3, a.k, &p)),
        TestKind::TwoPhase => ("two_phase", bounds_twophase_multi(l1, l2, l3, a.k, &p)),
        TestKind::KnownS => ("known_s", bounds_known_s(l, &p)),
    };
    print_report(name, &report.map_err(config_err)?);
    Ok(())
}

fn settings_from(a: &SimulateArgs) -> anyhow::Result<Settings> {
    let mut file = match &a.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let mut flags = Settings::default();
    flags.set_opt("recipe", a.recipe.as_ref());
    let recipe = flags
        .get("recipe")
        .or(file.get("recipe"))
        .ok_or_else(|| anyhow!("no recipe given (use --recipe or `recipe =` in --config)"))?
        .to_string();
    let paper = a.paper_scale || file.get("paper-scale").is_some_and(|v| v == "true");
    let mut s = recipes::defaults(&recipe, paper)?;
    file.set("recipe", &recipe);
    s.merge(&file);
    flags.set_opt("trials", a.trials);
    flags.set_opt("seed", a.seed);
    flags.set_opt("m", a.m);
    flags.set_opt("s", a.s);
    flags.set_opt("t-max", a.t_max);
    flags.set_opt("k", a.k);
    flags.set_opt("sigma", a.sigma);
    flags.set_opt("fn", a.f_n.as_ref());
    flags.set_opt("fa", a.f_a.as_ref());
    flags.set_opt("lengths", a.lengths.as_ref());
    flags.set_opt("gaps", a.gaps.as_ref());
    flags.set_opt("detectors", a.detectors.as_ref());
    flags.set_opt("lambda", a.lambda);
    flags.set_opt("lambda1", a.lambda1);
    flags.set_opt("lambda2", a.lambda2);
    flags.set_opt("lambda3", a.lambda3);
    flags.set_opt("baseline-lambda", a.baseline_lambda);
    flags.set_opt("max-failure-rate", a.max_failure_rate);
    s.merge(&flags);
    Ok(s)
}

#[derive(Serialize)]
struct Empty {}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let settings = settings_from(a).map_err(config_err)?;
    let cfg = ExperimentConfig::resolve(&settings).map_err(config_err)?;
    let format = match a.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let out = a.out.as_deref();
    let internal = |e: anyhow::Error| Failure { code: 1, err: e };
    match cfg.kind {
        Kind::Detectors => {
            let plan = cfg.plan().map_err(config_err)?;
            let setups: Vec<_> = plan.iter().map(|(_, s)| s.clone()).collect();
            info!("running {} grid points x {} trials", setups.len(), cfg.trials);
            let mut records = sweep(&setups, cfg.trials, cfg.seed).map_err(config_err)?;
            if a.no_wall_time {
                for r in &mut records {
                    r.summary.mean_wall_ms = 0.0;
                    r.summary.wall_ms.iter_mut().for_each(|w| *w = 0.0);
                }
            }
            let rows: Vec<DetectorRow> =
                plan.iter().zip(&records).map(|((label, _), r)| DetectorRow::new(label, r)).collect();
            emit(out, format, &cfg, &rows, &records).map_err(internal)?;
            let failures: usize = records.iter().map(|r| r.summary.failures).sum();
            let total: usize = records.iter().map(|r| r.summary.trials).sum();
            if failures as f64 > cfg.max_failure_rate * total as f64 {
                return Err(Failure {
                    code: EXIT_TRIAL_FAILURES,
                    err: anyhow!("{failures} of {total} trials failed (threshold {})", cfg.max_failure_rate),
                });
            }
        }
        Kind::MmdVsLength | Kind::MmdVsGap => {
            let k = cfg.kernel().map_err(config_err)?;
            let f_n = cfg.nominal_spec().map_err(config_err)?;
            let points: Vec<(&str, f64, usize, GaussianSpec)> = if cfg.kind == Kind::MmdVsLength {
                let f_a = cfg.anomalous_spec().map_err(config_err)?;
                cfg.lengths.iter().map(|&n| ("n", n as f64, n, f_a)).collect()
            } else {
                let n = cfg.lengths[0];
                cfg.gaps
                    .iter()
                    .map(|&g| {
                        let f = GaussianSpec::new(cfg.nominal.0 + g, cfg.anomalous.1).map_err(config_err)?;
                        Ok(("mean_gap", g, n, f))
                    })
                    .collect::<Result<_, Failure>>()?
            };
            let mut rows = Vec::new();
            for (name, value, n, f_a) in points {
                let est = mmd2_estimates(&k, &f_n, &f_a, n, cfg.trials, cfg.seed).map_err(config_err)?;
                let mean = est.iter().sum::<f64>() / est.len() as f64;
                let var = if est.len() > 1 {
                    est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (est.len() - 1) as f64
                } else {
                    0.0
                };
                rows.push(MmdRow {
                    recipe: cfg.recipe.clone(),
                    param_name: name.to_string(),
                    param_value: value,
                    mmd2_mean: mean,
                    mmd2_std: var.sqrt(),
                    population: mmd2_population_gaussian(&k, &f_n, &f_a).map_err(config_err)?,
                    trials: cfg.trials,
                    seed: cfg.seed,
                });
            }
            emit(out, format, &cfg, &rows, Empty {}).map_err(internal)?;
        }
    }
    if let Some(path) = out {
        info!("wrote {}", path.display());
    }
    Ok(())
}

