use proptest::prelude::*;
use qcc_core::analytic::{
    classical_expected, classical_limit, click_prob_minus, click_prob_plus, correct_prob, correct_prob_m1,
    efficiency, quantum_samples, success_prob,
};
use qcc_core::model::{CouponInstance, PulseSign};
use qcc_core::ChannelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Draws that keep every probability away from underflow, so relative
/// comparisons are meaningful.
fn random_point(rng: &mut ChaCha8Rng) -> (ChannelParams, f64, u64, u64) {
    let eta = rng.random_range(0.05..1.0);
    let dark = 10f64.powf(rng.random_range(-10.0..-4.0));
    let vis = 1.0 - 10f64.powf(rng.random_range(-6.0..-1.5));
    let intensity = 10f64.powf(rng.random_range(-1.5..1.0));
    let m = rng.random_range(1..=5);
    let k = rng.random_range(1..=3000);
    (ChannelParams::new(eta, dark, vis).unwrap(), intensity, m, k)
}

#[test]
fn success_factorises_over_ten_thousand_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for _ in 0..10_000 {
        let (p, i, m, k) = random_point(&mut rng);
        let e = efficiency(&p, i, m, k).unwrap();
        if e < 1e-250 {
            continue;
        }
        let c = correct_prob(&p, i, m, k).unwrap();
        let s = success_prob(&p, i, m, k).unwrap();
        let a = click_prob_plus(&p, i);
        let b = click_prob_minus(&p, i);
        let direct = b.powi(m as i32) * (1.0 - a).powf(k as f64);
        assert!(rel(e * c, s) < 1e-12, "{p:?} I={i} m={m} k={k}");
        assert!(rel(s, direct) < 1e-12, "{p:?} I={i} m={m} k={k}: {s} vs {direct}");
        checked += 1;
    }
    assert!(checked > 9_900);
}

#[test]
fn single_missing_formula_is_the_general_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let (p, i, _, k) = random_point(&mut rng);
        let n = k + 1;
        if efficiency(&p, i, 1, k).unwrap() < 1e-250 {
            continue;
        }
        let general = correct_prob(&p, i, 1, k).unwrap();
        let single = correct_prob_m1(&p, i, n).unwrap();
        assert!(rel(general, single) < 1e-12, "{p:?} I={i} n={n}: {general} vs {single}");
    }
}

#[test]
fn classical_expectation_dominates_limit() {
    for k in 1..5_000 {
        assert!(classical_expected(k) >= classical_limit(k), "k={k}");
    }
}

#[test]
fn success_rises_then_falls_and_cost_diverges_with_light() {
    let p = ChannelParams::reference();
    let (n, m) = (4000, 1);
    let grid: Vec<f64> = (0..200).map(|j| 10f64.powf(-3.0 + 5.0 * j as f64 / 199.0)).collect();
    let s: Vec<f64> = grid.iter().map(|&i| success_prob(&p, i, m, n - m).unwrap()).collect();
    let (best, _) = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert!(best > 0 && best < grid.len() - 1);
    assert!(s[..=best].windows(2).all(|w| w[0] <= w[1]));
    assert!(s[best..].windows(2).all(|w| w[0] >= w[1]));

    // too much light: false clicks swamp the set
    let r = |i: f64| quantum_samples(&p, i, n, m).unwrap();
    assert!(r(100.0) > 1e6 * r(1.0));
    // too little light: P_{−α} ≈ 2Iη, so R levels off at n/(2η) until dark
    // counts take over and R falls towards 0
    let floor = n as f64 / (2.0 * p.eta());
    assert!((r(1e-3) / floor - 1.0).abs() < 2e-3);
    assert!(r(1e-12) < 0.5 * floor);
}

proptest! {
    #[test]
    fn plus_never_exceeds_minus(
        eta in 0.0f64..=1.0,
        dark in 0.0f64..=0.1,
        vis in 0.0f64..=1.0,
        i in 0.0f64..50.0,
    ) {
        let p = ChannelParams::new(eta, dark, vis).unwrap();
        prop_assert!(click_prob_plus(&p, i) <= click_prob_minus(&p, i));
        prop_assert!((0.0..=1.0).contains(&click_prob_minus(&p, i)));
    }

    #[test]
    fn encode_marks_exactly_the_missing_bins(
        n in 2usize..400,
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..6),
        i in 0.0f64..10.0,
    ) {
        let mut missing: Vec<usize> = picks.iter().map(|ix| ix.index(n) + 1).collect();
        missing.sort_unstable();
        missing.dedup();
        prop_assume!(missing.len() < n);
        let inst = CouponInstance::from_missing(n, missing.iter().copied()).unwrap();
        let train = inst.encode(i).unwrap();
        prop_assert_eq!(train.minus_count(), inst.m());
        for (j, s) in train.signs().iter().enumerate() {
            prop_assert_eq!(*s == PulseSign::Minus, !inst.contains(j + 1));
        }
    }

    #[test]
    fn complement_round_trips(n in 2usize..300, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..n);
        let missing = rand::seq::index::sample(&mut rng, n, m).into_iter().map(|j| j + 1);
        let inst = CouponInstance::from_missing(n, missing).unwrap();
        let flipped = CouponInstance::new(n, inst.missing().iter().copied()).unwrap();
        prop_assert_eq!(flipped.missing(), inst.members());
        prop_assert_eq!(flipped.complement(), inst.members().to_vec());
    }
}

#[test]
fn encode_exhaustive_small_sizes() {
    for n in 2..=12usize {
        for mask in 1u32..(1 << n) - 1 {
            let missing = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| b + 1);
            let inst = CouponInstance::from_missing(n, missing).unwrap();
            assert_eq!(inst.encode(1.0).unwrap().minus_count(), mask.count_ones() as usize);
        }
    }
}
