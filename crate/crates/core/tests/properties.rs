use mmd_outlier::detectors::{
    fixed_length_multi, fixed_length_single, sequential_multi, sequential_single, two_phase_single,
    ReplayStream,
};
use mmd_outlier::exponents::{bounds_fixed_single, bounds_known_s, bounds_fixed_multi, table1, table2};
use mmd_outlier::simulation::{gen_observations, run_trials, trial_seed, Detector, TrialSetup};
use mmd_outlier::{
    Decision, FixedLengthConfig, GaussianSpec, GroundTruth, KernelSpec, ProblemParams,
    SequentialConfig, StopReason, TwoPhaseConfig,
};
use proptest::prelude::*;

const MMD2: f64 = 0.3610;

fn gauss() -> KernelSpec {
    KernelSpec::gaussian(1.0).unwrap()
}

fn truth(outliers: Vec<usize>) -> GroundTruth {
    GroundTruth::new(
        outliers,
        GaussianSpec::new(0.0, 1.0).unwrap(),
        GaussianSpec::new(1.5, 1.0).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sequential_tau_and_decision_shape(seed in any::<u64>(), big_n in 3usize..12, m in 3usize..8) {
        let obs = gen_observations(seed, m, 400, &truth(vec![0])).unwrap();
        let cfg = SequentialConfig::new(0.3, 0.05, big_n).unwrap().with_horizon(400).unwrap();
        let out = sequential_single(&gauss(), &mut ReplayStream::new(&obs), &cfg).unwrap();
        prop_assert!(out.tau >= big_n - 1);
        if out.stopped_by_horizon() {
            prop_assert_eq!(out.tau, 400);
        }
        if let Decision::Outliers(b) = &out.decision {
            prop_assert_eq!(b.indices().len(), 1);
        }
    }

    #[test]
    fn two_phase_tau_is_n_or_kn(seed in any::<u64>(), n in 2usize..10, k in 1usize..5) {
        let obs = gen_observations(seed, 6, n * k, &truth(vec![2])).unwrap();
        let cfg = TwoPhaseConfig::new(0.3, 0.05, 0.15, k, n).unwrap();
        let out = two_phase_single(&gauss(), &obs, &cfg).unwrap();
        prop_assert!(out.tau == n || out.tau == n * k);
        if out.reason == StopReason::SecondPhase {
            prop_assert_eq!(out.tau, n * k);
        }
    }

    #[test]
    fn multi_with_t1_matches_single(seed in any::<u64>(), lambda in 0.01f64..0.6) {
        let obs = gen_observations(seed, 7, 12, &truth(vec![4])).unwrap();
        let fcfg = FixedLengthConfig::new(lambda).unwrap();
        prop_assert_eq!(
            fixed_length_single(&gauss(), &obs, &fcfg).unwrap(),
            fixed_length_multi(&gauss(), &obs, &fcfg, 1).unwrap()
        );
        let scfg = SequentialConfig::new(lambda, lambda / 4.0, 4).unwrap().with_horizon(12).unwrap();
        prop_assert_eq!(
            sequential_single(&gauss(), &mut ReplayStream::new(&obs), &scfg).unwrap(),
            sequential_multi(&gauss(), &mut ReplayStream::new(&obs), &scfg, 1).unwrap()
        );
    }

    #[test]
    fn multi_decision_never_exceeds_t_max(seed in any::<u64>(), t_max in 1usize..4) {
        let obs = gen_observations(seed, 9, 10, &truth(vec![1, 5])).unwrap();
        let d = fixed_length_multi(&gauss(), &obs, &FixedLengthConfig::new(0.1).unwrap(), t_max).unwrap();
        if let Decision::Outliers(b) = d {
            prop_assert!(!b.indices().is_empty() && b.indices().len() <= t_max);
        }
    }

    #[test]
    fn bounds_nonnegative_and_scale_with_k0(lambda in 0.0f64..1.0, k0 in 0.5f64..3.0) {
        let p = ProblemParams::single(10, 1, k0, MMD2).unwrap();
        let p2 = ProblemParams::single(10, 1, 2.0 * k0, MMD2).unwrap();
        let (a, b) = (bounds_fixed_single(lambda, &p).unwrap(), bounds_fixed_single(lambda, &p2).unwrap());
        prop_assert!(a.false_alarm >= 0.0 && a.bayesian >= 0.0);
        prop_assert!((a.false_alarm - 4.0 * b.false_alarm).abs() <= 1e-12 * a.false_alarm.max(1.0));
    }

    #[test]
    fn known_s_dominates_unknown(lambda in 0.001f64..0.18, s in 1usize..4) {
        let p = ProblemParams::new(10, 4, s, 1.0, MMD2).unwrap();
        let known = bounds_known_s(lambda, &p).unwrap();
        let unknown = bounds_fixed_multi(lambda, &p).unwrap();
        prop_assert!(known.misclassification.unwrap() >= unknown.misclassification.unwrap() - 1e-15);
        prop_assert!(known.false_alarm >= unknown.false_alarm);
    }

    #[test]
    fn tables_order_sequential_over_fixed(eps in 0.001f64..0.05, k in 1.0f64..50.0) {
        let p = ProblemParams::single(10, 1, 1.0, MMD2).unwrap();
        let t = table1(eps, k, &p).unwrap();
        prop_assert!(t.sequential >= t.two_phase && t.two_phase >= t.fixed.min(t.two_phase));
        let p = ProblemParams::new(10, 4, 2, 1.0, MMD2).unwrap();
        let t = table2(eps, k, &p).unwrap();
        prop_assert!(t.sequential >= t.two_phase);
    }

    #[test]
    fn trial_seeds_are_distinct(base in any::<u64>()) {
        let seeds: std::collections::HashSet<u64> = (0..64).map(|i| trial_seed(base, i)).collect();
        prop_assert_eq!(seeds.len(), 64);
    }
}

#[test]
fn run_trials_is_deterministic_and_sane() {
    let setup = TrialSetup {
        kernel: gauss(),
        m: 6,
        truth: truth(vec![3]),
        detector: Detector::FixedLength { lambda: 0.5 * MMD2, n: 20, t_max: 1 },
    };
    let a = run_trials(&setup, 200, 5).unwrap();
    let b = run_trials(&setup, 200, 5).unwrap();
    assert_eq!(a.taus, b.taus);
    assert_eq!(a.error.count, b.error.count);
    assert_eq!(a.trials, 200);
    assert_eq!(a.failures, 0);
    assert!(a.error.rate < 0.2, "{}", a.error.rate);
    assert!(a.taus.iter().all(|&t| t == 20));
}

#[test]
fn null_truth_only_false_alarms() {
    let setup = TrialSetup {
        kernel: gauss(),
        m: 6,
        truth: GroundTruth::null(GaussianSpec::new(0.0, 1.0).unwrap(), GaussianSpec::new(1.5, 1.0).unwrap()),
        detector: Detector::FixedLength { lambda: 0.5 * MMD2, n: 10, t_max: 1 },
    };
    let s = run_trials(&setup, 200, 1).unwrap();
    assert_eq!(s.misclassification.count + s.false_reject.count, 0);
    assert_eq!(s.false_alarm.count, s.error.count);
}
