//! Lower bounds on the misclassification, false-reject and false-alarm
//! exponents of each test.
//!
//! All bounds share the form `numerator / (32 K₀² (1 + 1/d))`. Reports for
//! thresholds outside a theorem's valid region carry `valid = false` and
//! either the stated fallback or zero.

use crate::error::{Error, Result};
use crate::scoring::{max_outliers, MIN_SEQUENCES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub m: usize,
    pub t_max: usize,
    pub s: usize,
    pub k0: f64,
    pub mmd2: f64,
}

impl ProblemParams {
    pub fn new(m: usize, t_max: usize, s: usize, k0: f64, mmd2: f64) -> Result<Self> {
        if m < MIN_SEQUENCES {
            return Err(Error::InvalidConfig(format!("need M >= {MIN_SEQUENCES}, got {m}")));
        }
        if t_max > max_outliers(m) || s > t_max {
            return Err(Error::InvalidConfig(format!(
                "need s <= T <= {}, got s={s}, T={t_max}",
                max_outliers(m)
            )));
        }
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::InvalidConfig(format!("K0 must be positive, got {k0}")));
        }
        if !(mmd2.is_finite() && mmd2 >= 0.0) {
            return Err(Error::InvalidConfig(format!("mmd2 must be nonnegative, got {mmd2}")));
        }
        Ok(Self { m, t_max, s, k0, mmd2 })
    }

    /// The single-outlier setting: `T = 1`.
    pub fn single(m: usize, s: usize, k0: f64, mmd2: f64) -> Result<Self> {
        Self::new(m, 1, s, k0, mmd2)
    }

    fn denom(&self, d: usize) -> f64 {
        32.0 * self.k0 * self.k0 * (1.0 + 1.0 / d as f64)
    }

    /// `32 K₀² (1 + 1/(M-2))`.
    pub fn denom_single(&self) -> f64 {
        self.denom(self.m - 2)
    }

    /// Limiting second-best score with `s` outliers:
    /// `(1 - s/(M-s-1))² MMD²`, or `MMD²` itself when `s ≤ 1`.
    pub fn limit(&self) -> f64 {
        if self.s <= 1 {
            self.mmd2
        } else {
            let r = 1.0 - self.s as f64 / (self.m - self.s - 1) as f64;
            r * r * self.mmd2
        }
    }

    fn shrunk_mmd2(&self) -> f64 {
        let r = 1.0 - self.s as f64 / (self.m - self.s - 1) as f64;
        r * r * self.mmd2
    }
}

/// Bounds for one test. The misclassification and false-reject entries are
/// absent when the truth has no outliers (`s = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentReport {
    pub misclassification: Option<f64>,
    pub false_reject: Option<f64>,
    pub false_alarm: f64,
    pub valid: bool,
    pub bayesian: f64,
}

impl ExponentReport {
    fn new(params: &ProblemParams, mis: f64, fr: f64, fa: f64, valid: bool) -> Self {
        let (misclassification, false_reject) =
            if params.s == 0 { (None, None) } else { (Some(mis), Some(fr)) };
        let bayesian = misclassification
            .into_iter()
            .chain(false_reject)
            .fold(fa, f64::min);
        Self { misclassification, false_reject, false_alarm: fa, valid, bayesian }
    }
}

fn check_lambda(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be nonnegative, got {v}")))
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("K must be >= 1, got {k}")))
    }
}

fn indicator(c: bool) -> f64 {
    if c {
        1.0
    } else {
        0.0
    }
}

/// `λ² / (32 K₀² (1 + 1/(M-T-1)))`.
pub fn g1(lambda: f64, p: &ProblemParams) -> Result<f64> {
    check_lambda("lambda", lambda)?;
    if p.m <= p.t_max + 1 {
        return Err(Error::InvalidConfig("M - T - 1 must be positive".into()));
    }
    Ok(lambda * lambda / p.denom(p.m - p.t_max - 1))
}

/// `((1 - s/(M-s-1))² MMD² - λ)² / (32 K₀² (1 + 1/(M-s-1)))`.
pub fn g2(lambda: f64, p: &ProblemParams) -> Result<f64> {
    check_lambda("lambda", lambda)?;
    if p.s == 0 {
        return Err(Error::InvalidConfig("g2 needs s >= 1".into()));
    }
    if p.m <= p.s + 1 {
        return Err(Error::InvalidConfig("M - s - 1 must be positive".into()));
    }
    let d = p.shrunk_mmd2() - lambda;
    Ok(d * d / p.denom(p.m - p.s - 1))
}

fn gap_single(lambda: f64, p: &ProblemParams) -> f64 {
    let d = p.mmd2 - lambda;
    d * d / p.denom_single() * indicator(lambda < p.mmd2)
}

/// Fixed-length test, at most one outlier.
pub fn bounds_fixed_single(lambda: f64, p: &ProblemParams) -> Result<ExponentReport> {
    check_lambda("lambda", lambda)?;
    let e = lambda * lambda / p.denom_single();
    Ok(ExponentReport::new(p, e, gap_single(lambda, p), e, lambda < p.mmd2))
}

/// Sequential test, at most one outlier. Outside `λ₁ < MMD²` the expected
/// stopping time is unbounded under outliers and no outlier-side bound
/// holds.
pub fn bounds_seq_single(lambda1: f64, lambda2: f64, p: &ProblemParams) -> Result<ExponentReport> {
    check_lambda("lambda1", lambda1)?;
    check_lambda("lambda2", lambda2)?;
    let d = p.denom_single();
    let fa = lambda1 * lambda1 / d;
    let valid = lambda1 < p.mmd2;
    if !valid {
        return Ok(ExponentReport::new(p, 0.0, 0.0, fa, false));
    }
    let fr = (p.mmd2 - lambda2).powi(2) / d;
    Ok(ExponentReport::new(p, fa, fr, fa, true))
}

/// Two-phase test, at most one outlier.
pub fn bounds_twophase_single(
    lambda1: f64,
    lambda2: f64,
    lambda3: f64,
    k: f64,
    p: &ProblemParams,
) -> Result<ExponentReport> {
    check_lambda("lambda1", lambda1)?;
    check_lambda("lambda2", lambda2)?;
    check_lambda("lambda3", lambda3)?;
    check_k(k)?;
    let d = p.denom_single();
    let fa = (lambda1 * lambda1).min(k * lambda3 * lambda3) / d;
    if lambda1 >= p.mmd2 {
        let fixed = bounds_fixed_single(lambda3, p)?;
        return Ok(ExponentReport::new(
            p,
            fixed.misclassification.unwrap_or(0.0),
            fixed.false_reject.unwrap_or(0.0),
            fa,
            false,
        ));
    }
    let fr = (p.mmd2 - lambda2)
        .powi(2)
        .min(k * (p.mmd2 - lambda3).powi(2) * indicator(lambda3 < p.mmd2))
        / d;
    Ok(ExponentReport::new(p, fa, fr, fa, true))
}

/// Fixed-length test, unknown number of outliers.
pub fn bounds_fixed_multi(lambda: f64, p: &ProblemParams) -> Result<ExponentReport> {
    let fa = g1(lambda, p)?;
    match p.s {
        0 => Ok(ExponentReport::new(p, 0.0, 0.0, fa, true)),
        1 => {
            let valid = lambda < p.mmd2;
            let fr = if valid { (p.mmd2 - lambda).powi(2) / p.denom_single() } else { 0.0 };
            Ok(ExponentReport::new(p, if valid { fa } else { 0.0 }, fr, fa, valid))
        }
        _ => {
            if lambda >= p.limit() {
                return Ok(ExponentReport::new(p, 0.0, 0.0, fa, false));
            }
            let fr = g2(lambda, p)?;
            Ok(ExponentReport::new(p, fa.min(fr), fr, fa, true))
        }
    }
}

/// Sequential test, unknown number of outliers.
pub fn bounds_seq_multi(lambda1: f64, lambda2: f64, p: &ProblemParams) -> Result<ExponentReport> {
    check_lambda("lambda2", lambda2)?;
    let fa = g1(lambda1, p)?;
    match p.s {
        0 => Ok(ExponentReport::new(p, 0.0, 0.0, fa, true)),
        _ if lambda1 >= p.limit() => Ok(ExponentReport::new(p, 0.0, 0.0, fa, false)),
        1 => {
            let fr = (p.mmd2 - lambda2).powi(2) / p.denom_single();
            Ok(ExponentReport::new(p, fa, fr, fa, true))
        }
        _ => {
            let fr = g2(lambda2, p)?;
            Ok(ExponentReport::new(p, fa.min(fr), fr, fa, true))
        }
    }
}

/// Two-phase test, unknown number of outliers.
pub fn bounds_twophase_multi(
    lambda1: f64,
    lambda2: f64,
    lambda3: f64,
    k: f64,
    p: &ProblemParams,
) -> Result<ExponentReport> {
    check_lambda("lambda2", lambda2)?;
    check_k(k)?;
    let fa = g1(lambda1, p)?.min(k * g1(lambda3, p)?);
    if p.s == 0 {
        return Ok(ExponentReport::new(p, 0.0, 0.0, fa, true));
    }
    let limit = p.limit();
    if lambda1 >= limit {
        let fixed = bounds_fixed_multi(lambda3, p)?;
        return Ok(ExponentReport::new(
            p,
            fixed.misclassification.unwrap_or(0.0),
            fixed.false_reject.unwrap_or(0.0),
            fa,
            false,
        ));
    }
    if lambda3 >= limit {
        return Ok(ExponentReport::new(p, 0.0, 0.0, fa, false));
    }
    if p.s == 1 {
        let d = p.denom_single();
        let fr = ((p.mmd2 - lambda2).powi(2) / d).min(k * (p.mmd2 - lambda3).powi(2) / d);
        return Ok(ExponentReport::new(p, fa, fr, fa, true));
    }
    let fr = g2(lambda2, p)?.min(k * g2(lambda3, p)?);
    Ok(ExponentReport::new(p, fa.min(fr), fr, fa, true))
}

/// Fixed-length test when the number of outliers `s ≥ 1` is known.
pub fn bounds_known_s(lambda: f64, p: &ProblemParams) -> Result<ExponentReport> {
    check_lambda("lambda", lambda)?;
    if p.s == 0 || p.m <= p.s + 1 {
        return Err(Error::InvalidConfig("known-s bounds need 1 <= s < M - 1".into()));
    }
    let e = lambda * lambda / p.denom(p.m - p.s - 1);
    let valid = lambda < p.limit();
    let fr = if valid { g2(lambda, p)? } else { 0.0 };
    Ok(ExponentReport::new(p, e, fr, e, valid))
}

fn check_eps(eps: f64, limit: f64) -> Result<()> {
    if eps > 0.0 && eps < limit {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("epsilon must lie in (0, {limit}), got {eps}")))
    }
}

/// Best achievable Bayesian exponent per test, at most one outlier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesianTable {
    pub fixed: f64,
    pub sequential: f64,
    pub two_phase: f64,
}

/// At most one outlier. The fixed-length optimum sits at `λ = MMD²/2`,
/// giving `(MMD²)² / (4 D)`; the two-phase second-phase term is likewise
/// `K (MMD²)² / (4 D)`.
pub fn table1(eps: f64, k: f64, p: &ProblemParams) -> Result<BayesianTable> {
    check_eps(eps, p.mmd2)?;
    check_k(k)?;
    let d = p.denom_single();
    let sq = p.mmd2 * p.mmd2;
    let seq = (p.mmd2 - eps).powi(2) / d;
    Ok(BayesianTable { fixed: sq / (4.0 * d), sequential: seq, two_phase: seq.min(k * sq / (4.0 * d)) })
}

/// Unknown number of outliers, `s > 1`. With `L` the limit and `a`, `b` the
/// `g₁`, `g₂` denominators, `min{g₁, g₂}` peaks where the two cross, at
/// `L² / (√a + √b)²`.
pub fn table2(eps: f64, k: f64, p: &ProblemParams) -> Result<BayesianTable> {
    if p.s < 2 {
        return Err(Error::InvalidConfig("table2 needs s > 1".into()));
    }
    let limit = p.limit();
    check_eps(eps, limit)?;
    check_k(k)?;
    let a = p.denom(p.m - p.t_max - 1);
    let b = p.denom(p.m - p.s - 1);
    let fixed = limit * limit / (a.sqrt() + b.sqrt()).powi(2);
    let seq = (limit - eps).powi(2) / a;
    Ok(BayesianTable { fixed, sequential: seq, two_phase: seq.min(k * fixed) })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MMD2: f64 = 0.3610;

    fn single() -> ProblemParams {
        ProblemParams::single(10, 1, 1.0, MMD2).unwrap()
    }

    fn multi(s: usize) -> ProblemParams {
        ProblemParams::new(10, 4, s, 1.0, MMD2).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(2, 0, 0, 1.0, 0.1).is_err());
        assert!(ProblemParams::new(10, 5, 1, 1.0, 0.1).is_err());
        assert!(ProblemParams::new(10, 2, 3, 1.0, 0.1).is_err());
        assert!(ProblemParams::new(10, 2, 1, 0.0, 0.1).is_err());
        assert!(ProblemParams::new(10, 2, 1, 1.0, -0.1).is_err());
    }

    #[test]
    fn g1_values() {
        assert_eq!(g1(0.0, &multi(2)).unwrap(), 0.0);
        assert!(rel(g1(0.2, &multi(2)).unwrap(), 0.04 / 38.4) < 1e-12);
        assert!(rel(g1(0.2, &multi(2)).unwrap(), 1.0417e-3) < 1e-4);
        let (a, b) = (g1(0.13, &multi(1)).unwrap(), g1(0.26, &multi(1)).unwrap());
        assert_eq!(4.0 * a, b);
    }

    #[test]
    fn g2_values() {
        let p = multi(2);
        assert_eq!(g2(p.limit(), &p).unwrap(), 0.0);
        assert!(rel(p.limit(), 0.18418) < 1e-4);
        assert!(rel(g2(0.1, &p).unwrap(), 1.9386e-4) < 1e-3);
        let v: Vec<f64> = (1..=3).map(|s| g2(0.05, &multi(s)).unwrap()).collect();
        assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
        assert!(g2(0.1, &multi(0)).is_err());
    }

    #[test]
    fn fixed_single_values() {
        let p = single();
        let r = bounds_fixed_single(MMD2 / 2.0, &p).unwrap();
        let e = 0.1805f64.powi(2) / 36.0;
        assert!(rel(r.false_alarm, e) < 1e-12);
        assert_eq!(r.misclassification, Some(r.false_alarm));
        assert!(rel(r.false_reject.unwrap(), e) < 1e-12);
        assert!(rel(r.bayesian, 9.050e-4) < 1e-3);
        assert_eq!(bounds_fixed_single(MMD2, &p).unwrap().false_reject, Some(0.0));
        assert_eq!(bounds_fixed_single(0.5, &p).unwrap().false_reject, Some(0.0));

        let q = ProblemParams::single(10, 1, 2.0, MMD2).unwrap();
        let r2 = bounds_fixed_single(0.1, &q).unwrap();
        let r1 = bounds_fixed_single(0.1, &p).unwrap();
        assert!(rel(4.0 * r2.false_alarm, r1.false_alarm) < 1e-12);
        assert!(rel(4.0 * r2.false_reject.unwrap(), r1.false_reject.unwrap()) < 1e-12);
    }

    #[test]
    fn null_truth_has_only_false_alarm() {
        let p = ProblemParams::single(10, 0, 1.0, MMD2).unwrap();
        let r = bounds_fixed_single(0.1, &p).unwrap();
        assert_eq!((r.misclassification, r.false_reject), (None, None));
        assert_eq!(r.bayesian, r.false_alarm);
    }

    #[test]
    fn sequential_dominates_fixed() {
        let p = single();
        for i in 1..100 {
            let lambda = MMD2 * i as f64 / 100.0;
            let f = bounds_fixed_single(lambda, &p).unwrap();
            let s = bounds_seq_single(lambda, 1e-9, &p).unwrap();
            assert_eq!(s.misclassification, f.misclassification);
            assert_eq!(s.false_alarm, f.false_alarm);
            assert!(s.false_reject.unwrap() >= f.false_reject.unwrap());
        }
        let edge = bounds_seq_single(0.2, 0.0, &p).unwrap();
        assert!(rel(edge.false_reject.unwrap(), MMD2 * MMD2 / 36.0) < 1e-12);
        assert!(!bounds_seq_single(0.4, 0.1, &p).unwrap().valid);
    }

    #[test]
    fn two_phase_bridges() {
        let p = single();
        let (l1, l2, l3) = (0.3, 0.05, 0.2);
        let tp = bounds_twophase_single(l1, l2, l3, 1e6, &p).unwrap();
        let seq = bounds_seq_single(l1, l2, &p).unwrap();
        assert_eq!(tp, seq);
        let low = bounds_twophase_single(l1, l1, l1, 1.0, &p).unwrap();
        let fixed = bounds_fixed_single(l1, &p).unwrap();
        assert_eq!(low.false_alarm, fixed.false_alarm);
        assert_eq!(low.false_reject, fixed.false_reject);
        let fb = bounds_twophase_single(0.5, 0.1, 0.2, 4.0, &p).unwrap();
        let f3 = bounds_fixed_single(0.2, &p).unwrap();
        assert!(!fb.valid);
        assert_eq!((fb.misclassification, fb.false_reject), (f3.misclassification, f3.false_reject));
    }

    #[test]
    fn multi_branches() {
        let p = multi(2);
        let r = bounds_fixed_multi(0.1, &p).unwrap();
        let (a, b) = (g1(0.1, &p).unwrap(), g2(0.1, &p).unwrap());
        assert_eq!(r.misclassification, Some(a.min(b)));
        assert_eq!(r.false_reject, Some(b));
        assert_eq!(r.false_alarm, a);
        assert!(!bounds_fixed_multi(0.2, &p).unwrap().valid);

        let one = multi(1);
        let r1 = bounds_fixed_multi(0.1, &one).unwrap();
        assert_eq!(r1.misclassification, Some(g1(0.1, &one).unwrap()));
        assert!(rel(r1.false_reject.unwrap(), (MMD2 - 0.1f64).powi(2) / 36.0) < 1e-12);

        let z = bounds_fixed_multi(0.0, &p).unwrap();
        assert_eq!((z.false_alarm, z.misclassification), (0.0, Some(0.0)));

        let s = bounds_seq_multi(0.15, 0.02, &p).unwrap();
        assert_eq!(s.false_reject, Some(g2(0.02, &p).unwrap()));
        let tp = bounds_twophase_multi(0.15, 0.02, 0.09, 1e6, &p).unwrap();
        assert_eq!(tp, s);
    }

    #[test]
    fn t1_multi_matches_single() {
        let p = single();
        for lambda in [0.05, 0.1, 0.2, 0.3] {
            let a = bounds_fixed_multi(lambda, &p).unwrap();
            let b = bounds_fixed_single(lambda, &p).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn known_s_beats_unknown() {
        for s in 2..=4 {
            let p = multi(s);
            for i in 1..200 {
                let lambda = p.limit() * i as f64 / 200.0;
                let k = bounds_known_s(lambda, &p).unwrap();
                let u = bounds_fixed_multi(lambda, &p).unwrap();
                assert!(k.misclassification >= u.misclassification);
                assert!(k.false_reject >= u.false_reject);
                assert!(k.false_alarm >= u.false_alarm);
            }
        }
        let p = multi(2);
        assert!(rel(bounds_known_s(0.1, &p).unwrap().false_alarm, 2.7344e-4) < 1e-4);
        let one = single();
        assert_eq!(
            bounds_known_s(0.1, &one).unwrap().false_alarm,
            bounds_fixed_single(0.1, &one).unwrap().false_alarm
        );
    }

    #[test]
    fn tables_match_grid_search() {
        let p = single();
        let grid = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| {
            (1..10_000)
                .map(|i| f(lo + (hi - lo) * i as f64 / 10_000.0))
                .fold(f64::MIN, f64::max)
        };
        let t1 = table1(0.01, 2.0, &p).unwrap();
        let fixed = grid(0.0, MMD2, &|l| bounds_fixed_single(l, &p).unwrap().bayesian);
        assert!(rel(fixed, t1.fixed) < 1e-3);

        let q = multi(2);
        let t2 = table2(0.01, 2.0, &q).unwrap();
        let fixed2 = grid(0.0, q.limit(), &|l| bounds_fixed_multi(l, &q).unwrap().bayesian);
        assert!(rel(fixed2, t2.fixed) < 1e-3, "{fixed2} vs {}", t2.fixed);
    }
}
