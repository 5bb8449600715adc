use super::*;
use crate::seqstat::Symbol;
use alloc::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn test_chain() -> SourceModel {
    SourceModel::two_state(0.1, 0.2).unwrap()
}

fn seed(n: u64) -> SeedSpec {
    SeedSpec::new(n, 0)
}

fn small_paths(paths: usize, n: usize, ks: Vec<usize>) -> PathCheckConfig {
    PathCheckConfig {
        paths,
        path_length: n,
        ks,
        seed: seed(11),
        ..PathCheckConfig::default()
    }
}

#[test]
fn rho_rule() {
    let r = RhoRule::default();
    assert_eq!(r.rho(1).unwrap(), 1.0);
    assert_eq!(r.rho(4).unwrap(), 1.0 / 16.0);
    assert!(r.rho(0).is_err());
    let t = RhoRule::Table(vec![(2, 0.5), (3, 0.0)]);
    assert_eq!(t.rho(2).unwrap(), 0.5);
    assert!(t.rho(3).is_err());
    assert!(t.rho(4).is_err());
    // partial sums stay below pi^2 / 6
    let s: f64 = (1..10_000).map(|k| r.rho(k).unwrap()).sum();
    assert!(s < core::f64::consts::PI * core::f64::consts::PI / 6.0);
}

#[test]
fn verdict_combination() {
    use Verdict::*;
    assert_eq!(Pass.and(Pass), Pass);
    assert_eq!(Pass.and(Inconclusive), Inconclusive);
    assert_eq!(Inconclusive.and(Fail), Fail);
    assert_eq!(Fail.name(), "fail");
}

#[test]
fn kac_single_symbol() {
    let r = verify_kac(&SourceModel::fair_coin(), &[0], 2000, seed(1), 0.0).unwrap();
    assert_eq!(r.theoretical["inverse_probability"], 2.0);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn kac_fair_coin_000() {
    let r = verify_kac(&SourceModel::fair_coin(), &[0, 0, 0], 100_000, seed(2), 0.0).unwrap();
    let p = SourceModel::fair_coin().block_probability(&[0, 0, 0]).unwrap();
    assert_eq!(r.theoretical["inverse_probability"], 1.0 / p);
    assert!((r.theoretical["inverse_probability"] - 8.0).abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    assert!(r.se["mean_recurrence"] > 0.0);
    assert_eq!(r.params["trials"], "100000");
}

#[test]
fn kac_markov_01() {
    let r = verify_kac(&test_chain(), &[0, 1], 100_000, seed(3), 0.0).unwrap();
    assert!((r.theoretical["inverse_probability"] - 15.0).abs() < 1e-9);
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
}

#[test]
fn kac_negative_control() {
    let r = verify_kac(&test_chain(), &[0, 1], 100_000, seed(3), -0.1).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
    let r = verify_kac(&SourceModel::fair_coin(), &[0, 0, 0], 100_000, seed(2), -0.1).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
}

#[test]
fn kac_is_reproducible() {
    let a = verify_kac(&test_chain(), &[1, 1], 500, seed(4), 0.0).unwrap();
    let b = verify_kac(&test_chain(), &[1, 1], 500, seed(4), 0.0).unwrap();
    assert_eq!(a, b);
    let c = verify_kac(&test_chain(), &[1, 1], 500, seed(5), 0.0).unwrap();
    assert_ne!(a.empirical, c.empirical);
}

#[test]
fn kac_rejects_impossible_block() {
    let cycle = SourceModel::cycle(3);
    assert_eq!(
        verify_kac(&cycle, &[0, 0], 10, seed(0), 0.0).unwrap_err(),
        VerifyError::ZeroProbabilityBlock
    );
}

#[test]
fn kac_on_cycle_is_exact() {
    let r = verify_kac(&SourceModel::cycle(3), &[1, 2], 50, seed(0), 0.0).unwrap();
    assert_eq!(r.empirical["mean_recurrence"], 3.0);
    assert_eq!(r.se["mean_recurrence"], 0.0);
    assert_eq!(r.verdict, Verdict::Pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn kac_theoretical_is_inverse_probability(a in 0.05f64..0.95, b in 0.05f64..0.95, bits in 0u32..16, k in 1usize..5) {
        let m = SourceModel::two_state(a, b).unwrap();
        let block: Vec<Symbol> = (0..k).map(|i| (bits >> i) & 1).collect();
        let r = verify_kac(&m, &block, 2, seed(9), 0.0).unwrap();
        prop_assert_eq!(r.theoretical["inverse_probability"], 1.0 / m.block_probability(&block).unwrap());
    }
}

#[test]
fn modal_blocks() {
    assert_eq!(modal_block(&test_chain(), 3).unwrap(), vec![0, 0, 0]);
    assert_eq!(modal_block(&SourceModel::fair_coin(), 2).unwrap(), vec![0, 0]);
}

#[test]
fn kontoyiannis_fair_coin() {
    for k in [2, 4, 8] {
        let r = verify_kontoyiannis(&SourceModel::fair_coin(), k, 100_000, seed(k as u64), 0.0).unwrap();
        let bound = 1.0 + k as f64 * core::f64::consts::LN_2;
        assert!((r.theoretical["bound"] - bound).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!(r.empirical["mean_statistic_shift1"] <= r.empirical["mean_statistic"]);
    }
}

#[test]
fn kontoyiannis_uniform_quaternary() {
    let r = verify_kontoyiannis(&SourceModel::uniform(4), 1, 20_000, seed(6), 0.0).unwrap();
    assert!((r.theoretical["bound"] - (1.0 + ln(4.0))).abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn kontoyiannis_cycle_statistic() {
    // the future fixes the block, and the block recurs after one period
    let r = verify_kontoyiannis(&SourceModel::cycle(5), 3, 100, seed(0), 0.0).unwrap();
    assert!((r.empirical["mean_statistic"] - 0.2).abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn kontoyiannis_markov_and_control() {
    let r = verify_kontoyiannis(&test_chain(), 4, 20_000, seed(7), 0.0).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    // the bound is loose: only a large cut makes it fail
    let r = verify_kontoyiannis(&SourceModel::fair_coin(), 4, 20_000, seed(7), -0.9).unwrap();
    assert_eq!(r.verdict, Verdict::Fail, "{r:?}");
}

#[test]
fn kontoyiannis_unsupported() {
    let hmm = SourceModel::hmm(&[vec![0.9, 0.1], vec![0.2, 0.8]], &[vec![0.7, 0.3], vec![0.1, 0.9]]).unwrap();
    assert!(matches!(
        verify_kontoyiannis(&hmm, 2, 10, seed(0), 0.0),
        Err(VerifyError::Source(SourceError::Unsupported { .. }))
    ));
}

#[test]
fn point_process() {
    let p = RecurrencePointProcess::from_path(&[0, 1, 0, 1, 0, 0, 1], &[0, 1], 0);
    assert_eq!(p.positions, vec![0, 2, 5]);
    assert_eq!(p.gaps(), vec![2, 3]);
    let overlapping = RecurrencePointProcess::from_path(&[0, 0, 0, 0], &[0, 0], 1);
    assert_eq!(overlapping.positions, vec![1, 2]);
    assert_eq!(overlapping.gaps(), vec![1]);
    assert!(RecurrencePointProcess::from_path(&[0], &[0, 0], 0).positions.is_empty());
}

proptest! {
    #[test]
    fn point_process_invariants(path in proptest::collection::vec(0u32..2, 0..200), block in proptest::collection::vec(0u32..2, 1..4)) {
        let p = RecurrencePointProcess::from_path(&path, &block, 0);
        prop_assert!(p.positions.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(p.gaps().iter().all(|&g| g >= 1));
        let rebuilt: Vec<u64> = p.gaps().iter().scan(p.positions.first().copied().unwrap_or(0), |s, g| { *s += g; Some(*s) }).collect();
        prop_assert_eq!(&rebuilt[..], &p.positions[p.positions.len().min(1)..]);
    }
}

#[test]
fn chen_moy_fair_coin() {
    let r = verify_chen_moy(&SourceModel::fair_coin(), &[0, 1], 200_000, seed(1), 0.0).unwrap();
    assert_eq!(r.theoretical["inverse_probability"], 4.0);
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
}

#[test]
fn chen_moy_constant() {
    let r = verify_chen_moy(&SourceModel::constant(), &[0, 0], 5000, seed(1), 0.0).unwrap();
    assert_eq!(r.empirical["mean_w1"], 1.0);
    assert_eq!(r.empirical["mean_w2"], 1.0);
    assert_eq!(r.empirical["welch_z"], 0.0);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn chen_moy_markov() {
    let m = test_chain();
    let r = verify_chen_moy(&m, &[0, 0], 100_000, seed(2), 0.0).unwrap();
    assert!(r.empirical["gaps"] >= 10_000.0);
    assert!((r.theoretical["inverse_probability"] - 1.0 / 0.6).abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    let r = verify_chen_moy(&m, &[0, 0], 100_000, seed(2), -0.1).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
}

#[test]
fn chen_moy_short_path() {
    let r = verify_chen_moy(&test_chain(), &[0, 1], 5000, seed(2), 0.0).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(verify_chen_moy(&SourceModel::cycle(2), &[1, 1], 5000, seed(2), 0.0).is_err());
}

#[test]
fn prop1_fair_coin_and_chain() {
    let cfg = small_paths(10, 200_000, vec![1, 2, 4, 8, 16]);
    for m in [SourceModel::fair_coin(), test_chain()] {
        let r = check_prop1(&m, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!(!r.params.contains_key("lower_side"));
    }
}

#[test]
fn prop1_cycle_and_hmm() {
    let cfg = small_paths(3, 1000, vec![2, 4, 8, 16]);
    let r = check_prop1(&SourceModel::cycle(4), &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(r.empirical["violations"], 0.0);
    let hmm = SourceModel::hmm(&[vec![0.9, 0.1], vec![0.2, 0.8]], &[vec![0.7, 0.3], vec![0.1, 0.9]]).unwrap();
    let r = check_prop1(&hmm, &small_paths(3, 20_000, vec![2, 4, 8])).unwrap();
    assert_eq!(r.params["lower_side"], "skipped");
}

#[test]
fn prop1_negative_control() {
    let cfg = PathCheckConfig {
        perturbation: -0.5,
        ..small_paths(10, 200_000, vec![8, 12, 16])
    };
    assert_eq!(
        check_prop1(&SourceModel::fair_coin(), &cfg).unwrap().verdict,
        Verdict::Fail
    );
}

#[test]
fn prop2_cases() {
    let cfg = small_paths(10, 200_000, vec![2, 4, 8, 16]);
    let r = check_prop2(&SourceModel::fair_coin(), &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    let b8 = 8.0 * core::f64::consts::LN_2 + 2.0 * ln(8.0);
    assert!((r.theoretical["bound_k8"] - b8).abs() < 1e-9);
    assert_eq!(check_prop2(&test_chain(), &cfg).unwrap().verdict, Verdict::Pass);
    let r = check_prop2(&SourceModel::constant(), &small_paths(2, 100, vec![2, 4, 8])).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    let bad = PathCheckConfig {
        perturbation: -0.9,
        ..cfg
    };
    assert_eq!(
        check_prop2(&SourceModel::fair_coin(), &bad).unwrap().verdict,
        Verdict::Fail
    );
}

#[test]
fn prop3_cases() {
    // at k = 8 the bound only excludes R2 = 1, which has probability 2^-8
    let cfg = small_paths(20, 100_000, vec![2, 4, 8, 16]);
    let r = check_prop3(&SourceModel::fair_coin(), &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    let b8 = (8.0 * core::f64::consts::LN_2 - 2.0 * ln(8.0)) / 3.0;
    assert!((r.theoretical["bound_k8_lo"] - b8).abs() < 1e-9);
    assert!((r.theoretical["bound_k8_hi"] - b8).abs() < 1e-9);
    assert_eq!(check_prop3(&test_chain(), &cfg).unwrap().verdict, Verdict::Pass);
    let bad = PathCheckConfig {
        perturbation: -9.0,
        ..cfg
    };
    assert_eq!(
        check_prop3(&SourceModel::fair_coin(), &bad).unwrap().verdict,
        Verdict::Fail
    );
}

#[test]
fn path_checks_reject_bad_grids() {
    let cfg = small_paths(1, 10, vec![0]);
    assert!(check_prop2(&SourceModel::fair_coin(), &cfg).is_err());
    let cfg = small_paths(1, 10, vec![10]);
    assert!(check_prop2(&SourceModel::fair_coin(), &cfg).is_err());
}

#[test]
fn censored_points_are_undecided() {
    assert_eq!(below(3.0, true, 5.0), Side::Undecided);
    assert_eq!(below(6.0, true, 5.0), Side::Violated);
    assert_eq!(above(6.0, true, 1.0, 5.0), Side::Holds);
    assert_eq!(above(0.5, true, 1.0, 5.0), Side::Undecided);
    assert_eq!(above(0.5, false, 1.0, 5.0), Side::Violated);
    assert_eq!(above(3.0, false, 1.0, 5.0), Side::Undecided);
}

#[test]
fn prop4_uniform_binary() {
    let m = SourceModel::fair_coin();
    let ks: Vec<usize> = (1..=8).collect();
    let r = check_prop4(&m, &ks, DEFAULT_TRUNCATION, DEFAULT_ENUMERATION_LIMIT, 0.0).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    assert_eq!(r.empirical["context_length_k4"], 16.0);
    assert!((r.empirical["weighted_lo_k4"] - 4.0 * core::f64::consts::LN_2).abs() < 1e-9);
    assert!((r.theoretical["weighted_lower_k4"] - (ln(16.0) - ln(2.0))).abs() < 1e-12);
    assert!((r.theoretical["weighted_upper_k4"] - (3.0 * ln(16.0) + 1.0 / 16.0)).abs() < 1e-12);
    // boundary equality on the right of the context-length pair
    assert!((r.empirical["h_inf_context_k4"] - r.theoretical["context_upper_k4"]).abs() < 1e-9);
    let again = check_prop4(&m, &ks, DEFAULT_TRUNCATION, DEFAULT_ENUMERATION_LIMIT, 0.0).unwrap();
    assert_eq!(r, again);
    let bad = check_prop4(&m, &ks, DEFAULT_TRUNCATION, DEFAULT_ENUMERATION_LIMIT, -0.1).unwrap();
    assert_eq!(bad.verdict, Verdict::Fail);
}

#[test]
fn prop4_random_chains() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let ks: Vec<usize> = (1..=12).collect();
    for _ in 0..20 {
        let (a, b) = (rng.random_range(0.01..0.99), rng.random_range(0.01..0.99));
        let m = SourceModel::two_state(a, b).unwrap();
        let r = check_prop4(&m, &ks, DEFAULT_TRUNCATION, DEFAULT_ENUMERATION_LIMIT, 0.0).unwrap();
        assert_eq!(r.empirical["violations"], 0.0, "{a} {b} {r:?}");
        assert_eq!(r.verdict, Verdict::Pass);
    }
}

fn theorem_cfg(paths: usize, n: usize) -> TheoremConfig {
    TheoremConfig {
        paths,
        path_length: n,
        seed: seed(21),
        ..TheoremConfig::default()
    }
}

#[test]
fn theorems_fair_coin() {
    let m = SourceModel::fair_coin();
    let r = theorem_report(&m, &theorem_cfg(25, 1_000_000)).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    for layer in ["hinf_context", "log_ik", "log_r2", "hinf"] {
        let e = r.empirical[&format!("repetition.{layer}")];
        assert!((e - 1.0).abs() <= 0.1, "{layer} {e}");
    }
    assert!(r.empirical["repetition.equivalence_gap"] < 1e-9);
    assert!(!r.informational);
}

#[test]
fn theorems_constant_source() {
    let r = theorem_report(&SourceModel::constant(), &theorem_cfg(2, 2000)).unwrap();
    for (key, e) in &r.empirical {
        if key.starts_with("recurrence.") || key.starts_with("repetition.") {
            assert_eq!(*e, 0.0, "{key}");
        }
    }
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
}

#[test]
fn theorems_copy_source_is_exploratory() {
    let m = SourceModel::copy_source(vec![0.25; 4], 0.3, 40).unwrap();
    let r = theorem_report(&m, &theorem_cfg(2, 100_000)).unwrap();
    assert!(r.informational);
    assert!(!r.is_decisive());
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(r.notes.iter().any(|n| n.contains("layer ordering")));
    assert!(r.empirical.contains_key("repetition.log_r2"));
}
