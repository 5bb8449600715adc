use super::*;
use alloc::vec;
use proptest::prelude::*;

const LIMIT: u64 = DEFAULT_ENUMERATION_LIMIT;
const TEST_CHAIN: (f64, f64) = (0.1, 0.2); // P(1|0), P(0|1)

fn test_chain() -> SourceModel {
    SourceModel::two_state(TEST_CHAIN.0, TEST_CHAIN.1).unwrap()
}

fn test_hmm() -> SourceModel {
    SourceModel::hmm(&[vec![0.8, 0.2], vec![0.3, 0.7]], &[vec![0.9, 0.1], vec![0.25, 0.75]]).unwrap()
}

fn order(g: f64) -> Order {
    Order::new(g).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Joint law of (X_1..X_k, X_{k+1}..X_{k+i}) from block probabilities alone.
fn brute_joint(model: &SourceModel, k: usize, i: usize) -> Joint2 {
    let d = model.alphabet_size();
    let (nx, ny) = (d.pow(k as u32), d.pow(i as u32));
    let mut p = vec![0.0; nx * ny];
    let mut block = vec![0 as Symbol; k + i];
    for code in 0..nx * ny {
        let mut c = code;
        for s in block.iter_mut().rev() {
            *s = (c % d) as Symbol;
            c /= d;
        }
        p[code] = model.block_probability(&block).unwrap();
    }
    // renormalise rounding before validation
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Joint2::new(nx, ny, p).unwrap()
}

fn brute_conditional(model: &SourceModel, k: usize, i: usize, g: Order) -> f64 {
    conditional_renyi(&brute_joint(model, k, i), g).lo
}

#[test]
fn order_validation() {
    assert!(Order::new(1.0).is_ok());
    assert!(Order::new(0.0).is_ok());
    assert!(Order::new(f64::INFINITY).is_ok());
    assert!(Order::new(1.0 + 1e-7).is_err());
    assert!(Order::new(1.0 - 5e-7).is_err());
    assert!(Order::new(-0.5).is_err());
    assert!(Order::new(f64::NAN).is_err());
    assert_eq!(order(3.0).threshold_factor().unwrap(), 1.5);
    assert!(order(0.5).threshold_factor().is_err());
}

#[test]
fn renyi_examples() {
    for d in [2usize, 3, 7] {
        let u = vec![1.0 / d as f64; d];
        for g in [0.0, 0.5, 1.0, 2.0, 7.5, f64::INFINITY] {
            assert!(close(renyi_entropy(&u, order(g)).unwrap().lo, ln(d as f64), 1e-12));
        }
    }
    let b = [0.75, 0.25];
    let h2 = renyi_entropy(&b, Order::COLLISION).unwrap();
    assert!(h2.is_exact());
    assert!(close(h2.lo, -ln(0.625), 1e-12));
    assert!(close(h2.lo, 0.4700, 1e-4));
    assert!(close(renyi_entropy(&b, Order::MIN).unwrap().lo, 0.2877, 1e-4));
    assert!(close(renyi_entropy(&b, Order::HARTLEY).unwrap().lo, ln(2.0), 1e-12));
    assert!(close(renyi_entropy(&[1.0, 0.0], Order::HARTLEY).unwrap().lo, 0.0, 0.0));
    assert!(renyi_entropy(&[0.5, 0.4], Order::SHANNON).is_err());
    assert!(renyi_entropy(&[1.5, -0.5], Order::SHANNON).is_err());
    assert!(renyi_entropy(&[], Order::SHANNON).is_err());
}

#[test]
fn large_finite_order_approaches_min_entropy() {
    let p = [0.5, 0.3, 0.2];
    let h = renyi_entropy(&p, order(1e4)).unwrap().lo;
    assert!(h.is_finite());
    assert!(close(h, -ln(0.5), 1e-3));
}

#[test]
fn conditional_examples() {
    let copy = Joint2::new(3, 3, vec![0.2, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.3]).unwrap();
    for g in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
        assert!(close(conditional_renyi(&copy, order(g)).lo, 0.0, 1e-12));
    }
    let px = [0.6, 0.3, 0.1];
    let py = [0.5, 0.5];
    let indep: Vec<f64> = px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect();
    let j = Joint2::new(3, 2, indep).unwrap();
    assert_eq!(j.marginal_x().len(), 3);
    for g in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
        let h = conditional_renyi(&j, order(g)).lo;
        assert!(close(h, renyi_entropy(&px, order(g)).unwrap().lo, 1e-12), "g={g}");
    }
    assert!(Joint2::new(2, 2, vec![0.5, 0.5]).is_err());
}

fn random_dist(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn min_entropy_limit_on_random_joints(raw in proptest::collection::vec(0.01f64..1.0, 9)) {
        let p = random_dist(&raw);
        let j = Joint2::new(3, 3, p.clone()).unwrap();
        let direct: f64 = -ln((0..3).map(|y| (0..3).map(|x| p[x * 3 + y]).fold(0.0, f64::max)).sum::<f64>());
        prop_assert!(close(conditional_renyi(&j, Order::MIN).lo, direct, 1e-12));
        // the finite orders approach it from above
        let h50 = conditional_renyi(&j, order(50.0)).lo;
        let h500 = conditional_renyi(&j, order(500.0)).lo;
        prop_assert!(h50 >= h500 - 1e-12 && h500 >= direct - 1e-12);
        prop_assert!(h500 - direct < 0.01);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn order_monotonicity(raw in proptest::collection::vec(0.0f64..1.0, 2..8), zero in 0usize..8) {
        let mut raw = raw;
        let n = raw.len();
        raw[zero % n] = 0.0;
        prop_assume!(raw.iter().sum::<f64>() > 0.0);
        let p = random_dist(&raw);
        let orders = [0.0, 0.3, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0, 10.0, f64::INFINITY];
        let hs: Vec<f64> = orders.iter().map(|&g| renyi_entropy(&p, order(g)).unwrap().lo).collect();
        for w in hs.windows(2) {
            prop_assert!(w[0] >= w[1] - 1e-9, "{:?}", hs);
        }
        let hmin = hs[hs.len() - 1];
        for (&g, &h) in orders.iter().zip(&hs) {
            if g > 1.0 && g.is_finite() {
                prop_assert!(h <= g / (g - 1.0) * hmin + 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chain_rule_on_random_joints(raw in proptest::collection::vec(0.0f64..1.0, 16)) {
        prop_assume!(raw.iter().sum::<f64>() > 0.0);
        let j = MultiJoint::new(vec![2, 2, 2, 2], random_dist(&raw)).unwrap();
        for g in [0.5, 2.0, f64::INFINITY] {
            let c = check_chain_rule(&j, order(g)).unwrap();
            prop_assert!(c.holds, "{:?}", c);
        }
    }

    #[test]
    fn conditional_multi_joint_matches_joint2(raw in proptest::collection::vec(0.0f64..1.0, 8)) {
        prop_assume!(raw.iter().sum::<f64>() > 0.0);
        let p = random_dist(&raw);
        // (A, B, C) with dims 2; H(A | B, C) via the flattened 2 x 4 table
        let j = MultiJoint::new(vec![2, 2, 2], p.clone()).unwrap();
        let flat = Joint2::new(2, 4, p).unwrap();
        for g in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            let a = j.conditional(&[0], &[1, 2], order(g)).lo;
            let b = conditional_renyi(&flat, order(g)).lo;
            prop_assert!(close(a, b, 1e-12));
        }
    }
}

#[test]
fn chain_rule_tight_cases() {
    // U constant: H(U,X|Y) = H(X|Y)
    let xyz = random_dist(&[0.3, 0.1, 0.7, 0.2, 0.4, 0.9, 0.05, 0.6]);
    let mut p = xyz.clone();
    p.extend(vec![0.0; 8]);
    let j = MultiJoint::new(vec![2, 2, 2, 2], p).unwrap();
    for g in [0.5, 2.0, f64::INFINITY] {
        let c = check_chain_rule(&j, order(g)).unwrap();
        assert!(c.holds);
        assert!(close(c.x_given_y, c.ux_given_y, 1e-12));
    }
    // Z independent of (U, X, Y): H(X|Y,Z) = H(X|Y)
    let uxy = random_dist(&[0.3, 0.1, 0.7, 0.2, 0.4, 0.9, 0.05, 0.6]);
    let pz = [0.35, 0.65];
    let p: Vec<f64> = uxy.iter().flat_map(|a| pz.iter().map(move |b| a * b)).collect();
    let j = MultiJoint::new(vec![2, 2, 2, 2], p).unwrap();
    for g in [0.5, 2.0, f64::INFINITY] {
        let c = check_chain_rule(&j, order(g)).unwrap();
        assert!(c.holds);
        assert!(close(c.x_given_yz, c.x_given_y, 1e-12));
    }
    assert!(check_chain_rule(&MultiJoint::new(vec![2, 2], vec![0.25; 4]).unwrap(), Order::MIN).is_err());
}

#[test]
fn block_min_entropy_examples() {
    let coin = SourceModel::fair_coin();
    for k in [1, 5, 40] {
        let b = block_min_entropy(&coin, k, LIMIT).unwrap();
        assert!(close(b.entropy.lo, k as f64 * ln(2.0), 1e-12));
        assert_eq!(b.modal_block, vec![0; k]);
    }
    let m = test_chain();
    let b = block_min_entropy(&m, 3, LIMIT).unwrap();
    assert_eq!(b.modal_block, vec![0, 0, 0]);
    assert!(close(b.entropy.lo, -ln(2.0 / 3.0 * 0.81), 1e-12));
    for d in [2, 3, 5] {
        let c = SourceModel::cycle(d);
        for k in [1, 4, 17] {
            assert!(close(
                block_min_entropy(&c, k, LIMIT).unwrap().entropy.lo,
                ln(d as f64),
                1e-12
            ));
        }
    }
}

#[test]
fn block_min_entropy_matches_enumeration() {
    let models = [
        test_chain(),
        SourceModel::markov(&[vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.3, 0.3, 0.4]]).unwrap(),
        test_hmm(),
    ];
    for m in &models {
        for k in 1..=7 {
            let mut best = f64::NEG_INFINITY;
            m.for_each_block(k, |_, lp, _| best = best.max(lp)).unwrap();
            let b = block_min_entropy(m, k, LIMIT).unwrap();
            assert!(close(b.entropy.lo, -best, 1e-10), "k={k}");
            assert!(close(m.block_log_probability(&b.modal_block).unwrap(), best, 1e-10));
        }
    }
    // ties resolve to the lexicographically smallest block
    let b = block_min_entropy(&SourceModel::two_state(0.5, 0.5).unwrap(), 4, LIMIT).unwrap();
    assert_eq!(b.modal_block, vec![0; 4]);
    assert!(matches!(
        block_min_entropy(&test_hmm(), 30, 1 << 10),
        Err(EntropyError::EnumerationLimit { .. })
    ));
}

#[test]
fn conditional_min_entropy_examples() {
    let iid = SourceModel::iid(vec![0.5, 0.3, 0.2]).unwrap();
    for i in [0, 1, 3] {
        assert!(close(
            conditional_min_entropy(&iid, 4, i, LIMIT).unwrap().lo,
            -4.0 * ln(0.5),
            1e-12
        ));
    }
    let m = test_chain();
    for k in [1, 3, 6] {
        let h1 = conditional_min_entropy(&m, k, 1, LIMIT).unwrap().lo;
        let h5 = conditional_min_entropy(&m, k, 5, LIMIT).unwrap().lo;
        assert_eq!(h1, h5);
        for i in [1, 2, 5] {
            if k + i <= 16 {
                assert!(close(brute_conditional(&m, k, i, Order::MIN), h1, 1e-10), "k={k} i={i}");
            }
        }
    }
    let stuck = SourceModel::markov(&[vec![1.0]]).unwrap();
    assert!(close(
        conditional_min_entropy(&stuck, 5, 3, LIMIT).unwrap().lo,
        0.0,
        0.0
    ));
    assert!(SourceModel::markov_allow_periodic(&[vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
    let c = SourceModel::cycle(3);
    for (k, i) in [(1, 1), (4, 2), (9, 5)] {
        assert!(close(conditional_min_entropy(&c, k, i, LIMIT).unwrap().lo, 0.0, 1e-12));
    }
}

#[test]
fn hmm_conditionals_match_enumeration() {
    let h = test_hmm();
    for (k, i) in [(1, 1), (2, 3), (3, 2), (4, 4)] {
        for g in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            let fast = conditional_block_entropy(&h, k, i, order(g), LIMIT).unwrap().lo;
            assert!(
                close(fast, brute_conditional(&h, k, i, order(g)), 1e-10),
                "k={k} i={i} g={g}"
            );
        }
    }
    let m = SourceModel::markov(&[vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.3, 0.3, 0.4]]).unwrap();
    for (k, i) in [(1, 1), (2, 3), (3, 2)] {
        for g in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            let fast = conditional_block_entropy(&m, k, i, order(g), LIMIT).unwrap().lo;
            assert!(
                close(fast, brute_conditional(&m, k, i, order(g)), 1e-10),
                "k={k} i={i} g={g}"
            );
        }
    }
}

#[test]
fn block_entropy_closed_forms_match_enumeration() {
    let m = test_chain();
    for k in 1..=8 {
        let closed = block_entropy(&m, k, Order::SHANNON, LIMIT).unwrap().lo;
        let mut h = 0.0;
        m.for_each_block(k, |_, lp, _| h -= exp(lp) * lp).unwrap();
        assert!(close(closed, h, 1e-10));
    }
    let iid = SourceModel::iid(vec![0.7, 0.2, 0.1]).unwrap();
    for g in [0.0, 0.5, 2.0] {
        let closed = block_entropy(&iid, 5, order(g), LIMIT).unwrap().lo;
        assert!(close(closed, brute_conditional(&iid, 5, 0, order(g)), 1e-10));
    }
}

fn linear_scan(model: &SourceModel, k: usize, g: Order) -> u64 {
    let c = g.threshold_factor().unwrap();
    (1u64..)
        .find(|&i| c * ln(i as f64) >= conditional_block_entropy(model, k, i as usize, g, LIMIT).unwrap().lo - 1e-9)
        .unwrap()
}

#[test]
fn context_length_examples() {
    let coin = SourceModel::fair_coin();
    assert_eq!(context_length(&coin, 4, Order::MIN, LIMIT).unwrap().value, 16);
    assert_eq!(context_length(&coin, 1, Order::MIN, LIMIT).unwrap().value, 2);
    for (a, b) in [TEST_CHAIN, (0.3, 0.3), (0.05, 0.6), (0.5, 0.5)] {
        let m = SourceModel::two_state(a, b).unwrap();
        for k in 1..=10 {
            for g in [Order::MIN, order(2.0), order(4.0)] {
                let fast = context_length(&m, k, g, LIMIT).unwrap();
                assert_eq!(fast.value, linear_scan(&m, k, g), "a={a} b={b} k={k}");
                assert!(fast.value <= 1 << k);
            }
        }
    }
    let h = test_hmm();
    for k in 1..=3 {
        assert_eq!(
            context_length(&h, k, Order::MIN, LIMIT).unwrap().value,
            linear_scan(&h, k, Order::MIN)
        );
    }
}

#[test]
fn context_length_bound_and_monotone_entropy() {
    let models = [
        SourceModel::fair_coin(),
        test_chain(),
        SourceModel::cycle(3),
        test_hmm(),
    ];
    for m in &models {
        let d = m.alphabet_size() as u64;
        for k in 1..=3 {
            let c = context_length(m, k, Order::MIN, LIMIT).unwrap();
            assert!(c.value >= 1 && c.value <= d.pow(k as u32));
            let longer = conditional_min_entropy(m, k, c.value as usize + 1, LIMIT).unwrap();
            assert!(c.entropy.lo >= longer.lo - 1e-9);
        }
    }
}

#[test]
fn weighted_entropy_examples() {
    let m = test_chain();
    for k in [1, 4, 9] {
        let w = weighted_conditional_entropy(&m, k, DEFAULT_TRUNCATION, LIMIT).unwrap();
        let h1 = conditional_min_entropy(&m, k, 1, LIMIT).unwrap().lo;
        assert!(close(w.lo, h1, 1e-12) && close(w.hi, h1, 1e-12));
        // telescoping: the truncated sum plus its exact tail reproduces e^{-H}
        let partial: f64 = (1..=2000u64).map(|i| exp(-h1) / (i * (i + 1)) as f64).sum();
        assert!(close(-ln(partial + exp(-h1) / 2001.0), h1, 1e-12));
        // the weighted entropy dominates conditioning on any finite window
        assert!(w.hi >= conditional_min_entropy(&m, k, 50, LIMIT).unwrap().lo - 1e-9);
    }
    let iid = SourceModel::iid(vec![0.6, 0.4]).unwrap();
    let w = weighted_conditional_entropy(&iid, 5, 10, LIMIT).unwrap();
    assert!(close(w.lo, -5.0 * ln(0.6), 1e-12));

    let h = test_hmm();
    let limit = 1 << 12;
    let narrow = weighted_conditional_entropy(&h, 2, 1000, limit).unwrap();
    let wide = weighted_conditional_entropy(&h, 2, 4, limit).unwrap();
    assert!(narrow.lo <= narrow.hi);
    assert!(narrow.hi - narrow.lo < wide.hi - wide.lo);
    assert_eq!(narrow.truncation, 10);
    let exact_terms: f64 = (1..=10u64)
        .map(|i| exp(-brute_conditional(&h, 2, i as usize, Order::MIN)) / (i * (i + 1)) as f64)
        .sum();
    assert!(-ln(exact_terms) >= narrow.hi - 1e-9);
    assert!(weighted_conditional_entropy(&h, 2, 0, limit).is_err());
}

#[test]
fn entropy_rate_examples() {
    for d in [2, 3, 6] {
        let u = SourceModel::uniform(d);
        for g in [Order::SHANNON, Order::COLLISION] {
            assert!(close(entropy_rate(&u, g).unwrap().lo, ln(d as f64), 1e-12));
        }
    }
    let b = SourceModel::iid(vec![0.75, 0.25]).unwrap();
    assert!(close(entropy_rate(&b, Order::COLLISION).unwrap().lo, -ln(0.625), 1e-12));
    assert!(entropy_rate(&test_hmm(), Order::SHANNON).is_err());
    assert!(entropy_rate(&b, Order::MIN).is_err());

    for (a, bb) in [TEST_CHAIN, (0.3, 0.6), (0.4, 0.5), (0.05, 0.05)] {
        let m = SourceModel::two_state(a, bb).unwrap();
        let h2 = entropy_rate(&m, Order::COLLISION).unwrap().lo;
        let h2_block = |k: usize| block_entropy(&m, k, Order::COLLISION, LIMIT).unwrap().lo;
        for k in 1..=10 {
            assert!(close(h2_block(k), brute_conditional(&m, k, 0, Order::COLLISION), 1e-10));
        }
        // H_2(X_1..X_k) = k h_2 + c + o(1), so the per-symbol gap decays like c / k
        let gaps: Vec<f64> = (1..=200).map(|k| (h2 - h2_block(k) / k as f64).abs()).collect();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{gaps:?}");
        }
        assert!(close(h2_block(201) - h2_block(200), h2, 1e-9));
        let c = h2_block(200) - 200.0 * h2;
        assert!(close(gaps[199] * 200.0, c.abs(), 1e-6));
        if (a, bb) == (0.3, 0.6) || (a, bb) == (0.4, 0.5) {
            assert!(gaps[9] < 0.01, "{gaps:?}");
        }
        // Shannon rate from the conditional entropy of one step
        let h1 = entropy_rate(&m, Order::SHANNON).unwrap().lo;
        let hb = block_entropy(&m, 6, Order::SHANNON, LIMIT).unwrap().lo
            - block_entropy(&m, 5, Order::SHANNON, LIMIT).unwrap().lo;
        assert!(close(h1, hb, 1e-10));
    }
    // deterministic cycle: both rates vanish
    assert!(close(
        entropy_rate(&SourceModel::cycle(4), Order::COLLISION).unwrap().lo,
        0.0,
        1e-12
    ));
}

#[test]
fn varentropy_examples() {
    let seed = SeedSpec::new(3, 0);
    for k in [1, 6, 30] {
        let v = varentropy(&SourceModel::uniform(3), k, LIMIT, 100, seed).unwrap();
        assert!(close(v.variance.hi, 0.0, 1e-9));
    }
    for p in [0.1, 0.3, 0.75] {
        let m = SourceModel::iid(vec![p, 1.0 - p]).unwrap();
        for k in 1..=12 {
            let closed = k as f64 * p * (1.0 - p) * ln(p / (1.0 - p)).powi(2);
            let v = varentropy(&m, k, LIMIT, 0, seed).unwrap();
            assert_eq!(v.method, VarentropyMethod::Enumeration);
            assert!(close(v.variance.lo, closed, 1e-9));
        }
        let big = varentropy(&m, 100, LIMIT, 0, seed).unwrap();
        assert_eq!(big.method, VarentropyMethod::ClosedForm);
        assert!(close(
            big.variance.lo,
            100.0 * p * (1.0 - p) * ln(p / (1.0 - p)).powi(2),
            1e-9
        ));
    }
}

#[test]
fn varentropy_monte_carlo_agrees_with_enumeration() {
    let m = test_chain();
    let exact = varentropy(&m, 8, LIMIT, 0, SeedSpec::new(1, 0)).unwrap();
    let mc = varentropy(&m, 8, 1, 100_000, SeedSpec::new(1, 0)).unwrap();
    assert_eq!(mc.method, VarentropyMethod::MonteCarlo { samples: 100_000 });
    assert!(
        mc.variance.contains(exact.variance.lo, 0.0),
        "{:?} vs {:?}",
        mc.variance,
        exact.variance
    );
    assert!(close(exact.shannon.lo, mc.shannon.lo, 1e-10));
    assert!(exact.ratio > 0.0 && exact.ratio < 1.0);
}

#[test]
fn plug_in_examples() {
    let seq = crate::sources::sample_path(&SourceModel::fair_coin(), 1_000_000, SeedSpec::new(11, 0));
    let h = plug_in_entropy(&seq, 2, Order::SHANNON).unwrap();
    assert!(close(h.value.lo, 2.0 * ln(2.0), 0.01));
    assert_eq!(h.distinct, 4);
    assert!(!h.undersampled);

    let flat = SymbolSeq::new(vec![1; 50], 2).unwrap();
    for k in [1, 7, 50] {
        for g in [0.0, 1.0, 2.0, f64::INFINITY] {
            assert_eq!(plug_in_entropy(&flat, k, order(g)).unwrap().value.lo, 0.0);
        }
    }
    let (aabb, _) = SymbolSeq::from_tokens("aabb".chars());
    assert!(close(
        plug_in_entropy(&aabb, 1, Order::SHANNON).unwrap().value.lo,
        ln(2.0),
        1e-12
    ));
    assert!(plug_in_entropy(&aabb, 3, Order::SHANNON).unwrap().undersampled);
    assert!(plug_in_entropy(&aabb, 5, Order::SHANNON).is_err());
    assert!(plug_in_entropy(&aabb, 0, Order::SHANNON).is_err());

    // long blocks overflow the integer coding and fall back to slices
    let wide = SymbolSeq::new((0..200).map(|i| (i % 7) as Symbol).collect(), 1000).unwrap();
    let h = plug_in_entropy(&wide, 8, Order::SHANNON).unwrap();
    assert_eq!(h.distinct, 7);
}

#[test]
fn pmi_examples() {
    let iid = SourceModel::iid(vec![0.2, 0.5, 0.3]).unwrap();
    let p = pmi_bound_estimate(&iid, 3, 3, LIMIT).unwrap();
    assert!(close(p.ratio, 1.0, 1e-12));

    let m = test_chain();
    let p = pmi_bound_estimate(&m, 1, 1, LIMIT).unwrap();
    let pi = [2.0 / 3.0, 1.0 / 3.0];
    let t = [[0.9, 0.1], [0.2, 0.8]];
    let expected = (0..4).map(|c| t[c / 2][c % 2] / pi[c % 2]).fold(0.0, f64::max);
    assert!(close(p.ratio, expected, 1e-12));
    assert!(close(p.ratio, 2.4, 1e-12));

    let c = SourceModel::cycle(4);
    let mut last = 0.0;
    for w in 1..=4 {
        let p = pmi_bound_estimate(&c, w, w, LIMIT).unwrap();
        assert!(p.ratio >= last - 1e-12);
        last = p.ratio;
    }
    assert!(close(pmi_bound_estimate(&c, 1, 1, LIMIT).unwrap().ratio, 4.0, 1e-12));
    assert!(pmi_bound_estimate(&m, 20, 20, 1 << 20).is_err());
}

#[test]
fn table_is_consistent_and_contains_exact_values() {
    let orders = [order(0.0), order(0.5), Order::SHANNON, Order::COLLISION, Order::MIN];
    for m in [test_chain(), test_hmm(), SourceModel::iid(vec![0.7, 0.3]).unwrap()] {
        let t = EntropyTable::build(&m, &orders, &[1, 2, 4], &[0, 1, 2, 3], 100, 1 << 12).unwrap();
        assert!(t.is_consistent());
        for k in [1usize, 2, 4] {
            for i in [0usize, 1, 2, 3] {
                for &g in &orders {
                    let v = t.get(g, k, i as u64).unwrap();
                    assert!(v.contains(brute_conditional(&m, k, i, g), 1e-9));
                }
            }
        }
        assert!(t.rows.iter().any(|r| r.kind == RowKind::Weighted));
        assert!(t.rows.iter().any(|r| r.kind == RowKind::ContextLength));
    }
    // enumeration overflow drops cells instead of failing
    let t = EntropyTable::build(&test_hmm(), &[Order::MIN], &[30], &[0], 10, 1 << 10).unwrap();
    assert!(t.rows.is_empty());
}

#[test]
fn smb_concentration() {
    let m = test_chain();
    let h1 = entropy_rate(&m, Order::SHANNON).unwrap().lo;
    let k = 64;
    let values: Vec<f64> = (0..2000)
        .map(|j| {
            let path = crate::sources::sample_path(&m, k, SeedSpec::new(5, j));
            -m.block_log_probability(path.symbols()).unwrap() / k as f64
        })
        .collect();
    let (mean, var) = mean_var(&values);
    let expected = block_entropy(&m, k, Order::SHANNON, LIMIT).unwrap().lo / k as f64;
    let se = sqrt(var / values.len() as f64);
    assert!(
        (mean - expected).abs() <= 3.0 * se,
        "mean {mean} expected {expected} se {se}"
    );
    assert!((expected - h1).abs() < 0.01);
}

#[test]
fn copy_source_is_rejected() {
    let c = SourceModel::copy_source(vec![0.5, 0.5], 0.3, 4).unwrap();
    assert!(matches!(block_min_entropy(&c, 2, LIMIT), Err(EntropyError::Source(_))));
    assert!(entropy_rate(&c, Order::SHANNON).is_err());
}
