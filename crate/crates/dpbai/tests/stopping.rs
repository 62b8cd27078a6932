use dpbai::divergences::PrivacyParams;
use dpbai::stopping::{glr_stop, lucb_stop, modified_glr_stop, recommend, threshold_c, ThresholdMode, Thresholds};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn thresholds(eps: f64, delta: f64, eta: f64, k: usize) -> Thresholds {
    Thresholds::new(PrivacyParams::new(eps, delta, eta, 0.5).unwrap(), k, 2.0, ThresholdMode::Exact).unwrap()
}

/// Solves `y − ln y = x` on `y ≥ 1` by bisection.
fn w_bar(x: f64) -> f64 {
    let (mut lo, mut hi) = (1.0, 2.0 * x + 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - mid.ln() < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c_pair_ref(n: f64, eps: f64, delta: f64, eta: f64, k_arms: f64) -> (f64, f64) {
    let k = 1.0 + n.ln() / (1.0 + eta).ln();
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    let ln2 = std::f64::consts::LN_2;
    let c1 = w_bar((k_arms * zeta2 / delta).ln() + 2.0 * k.ln() + 3.0 - ln2) - 3.0 + ln2;
    let c2 = k * ((1.0 + 2.0 * eps * n / k).ln() + 1.0);
    (c1, c2)
}

#[test]
fn thresholds_match_an_independent_evaluation() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let n = r.random_range(1.0f64..1e7).floor();
        let eps = 10f64.powf(r.random_range(-3.0..3.0));
        let delta = 10f64.powf(r.random_range(-10.0..-0.1));
        let eta = r.random_range(0.1..3.0);
        let k = r.random_range(2..20);
        let p = PrivacyParams::new(eps, delta, eta, 0.5).unwrap();
        let (c1, c2) = threshold_c(n, &p, 2.0, k).unwrap();
        let (r1, r2) = c_pair_ref(n, eps, delta, eta, k as f64);
        assert!((c1 - r1).abs() < 1e-9 * r1.max(1.0), "c1 {c1} vs {r1}");
        assert!((c2 - r2).abs() < 1e-9 * r2.max(1.0), "c2 {c2} vs {r2}");
    }
    assert!(threshold_c(0.5, &PrivacyParams::new(1.0, 0.1, 1.0, 0.5).unwrap(), 2.0, 5).is_err());
}

#[test]
fn c1_is_monotone_on_a_grid() {
    for delta in [0.5, 0.1, 1e-3, 1e-6, 1e-12] {
        let t = thresholds(1.0, delta, 1.0, 5);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..60 {
            let c1 = t.parts(1.5f64.powi(i)).unwrap().0;
            assert!(c1 >= prev);
            prev = c1;
        }
    }
    for n in [1.0, 10.0, 1e3, 1e6] {
        let mut prev = f64::NEG_INFINITY;
        for e in 1..30 {
            let c1 = thresholds(1.0, 10f64.powi(-e), 1.0, 5).parts(n).unwrap().0;
            assert!(c1 > prev);
            prev = c1;
        }
    }
}

#[test]
fn c2_vanishing_budget_leaves_k() {
    let t = thresholds(1e-300, 0.1, 1.0, 5);
    let (_, c2) = t.parts(1024.0).unwrap();
    assert!((c2 - 11.0).abs() < 1e-9);
}

#[test]
fn glr_examples() {
    assert!(glr_stop(&thresholds(1.0, 0.01, 1.0, 2), &[0.9, 0.1], &[10_000, 10_000]).unwrap().stop);
    let d = glr_stop(&thresholds(1.0, 0.1, 1.0, 3), &[0.8, 0.8, 0.2], &[500, 9000, 9000]).unwrap();
    assert!(!d.stop);
    assert_eq!(d.statistic, 0.0);
    assert_eq!(d.binding_challenger, Some(1));
}

#[test]
fn glr_reports_the_minimal_margin_pair() {
    let t = thresholds(1.0, 0.05, 1.0, 4);
    let d = glr_stop(&t, &[0.9, 0.2, 0.85, 0.1], &[4096, 4096, 4096, 4096]).unwrap();
    assert_eq!(d.recommendation, 0);
    assert_eq!(d.binding_challenger, Some(2));
    assert!(!d.stop && d.statistic < d.threshold);
}

proptest! {
    #[test]
    fn single_samples_never_stop(
        m in proptest::collection::vec(-2.0f64..3.0, 2..6),
        eps in 1e-3f64..1e3,
        delta in 1e-9f64..0.1,
        eta in 0.05f64..4.0,
    ) {
        let t = thresholds(eps, delta, eta, m.len());
        let n = vec![1; m.len()];
        let d = glr_stop(&t, &m, &n).unwrap();
        prop_assert!(!d.stop);
        prop_assert!(d.threshold > 2.0);
    }

    #[test]
    fn a_tie_at_the_top_never_stops(
        top in 0.1f64..1.5,
        rest in proptest::collection::vec(-0.5f64..0.05, 1..4),
        big in 1u64..1_000_000,
    ) {
        let mut m = vec![top, top];
        m.extend(rest);
        let n = vec![big; m.len()];
        let t = thresholds(1.0, 0.1, 1.0, m.len());
        prop_assert!(!glr_stop(&t, &m, &n).unwrap().stop);
        let k = vec![1 + (big as f64).log2() as u32; m.len()];
        prop_assert!(!modified_glr_stop(&t, &m, &n, &k).unwrap().stop);
    }

    #[test]
    fn stop_implies_every_challenger_clears_its_threshold(
        m in proptest::collection::vec(0.0f64..1.0, 2..6),
        logn in proptest::collection::vec(0u32..20, 6),
    ) {
        let k = m.len();
        let n: Vec<u64> = logn[..k].iter().map(|&j| 1u64 << j).collect();
        let t = thresholds(0.5, 0.1, 1.0, k);
        let d = glr_stop(&t, &m, &n).unwrap();
        if d.stop {
            let b = d.recommendation;
            for a in (0..k).filter(|&a| a != b) {
                let single = glr_stop(&thresholds(0.5, 0.1, 1.0, k), &[m[b], m[a]], &[n[b], n[a]]).unwrap();
                prop_assert!(single.statistic > t.total(n[b] as f64).unwrap() + t.total(n[a] as f64).unwrap());
            }
        }
    }
}

#[test]
fn modified_rule_stops_whenever_the_glr_rule_does() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut both = 0;
    for _ in 0..3000 {
        let k = r.random_range(2..5);
        let eps = 10f64.powf(r.random_range(-2.0..1.0));
        let t = thresholds(eps, 0.1, 1.0, k);
        let m: Vec<f64> = (0..k).map(|_| r.random_range(-0.1..1.1)).collect();
        let phases: Vec<u32> = (0..k).map(|_| r.random_range(1..25)).collect();
        let n: Vec<u64> = phases.iter().map(|&j| 1u64 << (j - 1)).collect();
        let glr = glr_stop(&t, &m, &n).unwrap();
        let modified = modified_glr_stop(&t, &m, &n, &phases).unwrap();
        if glr.stop {
            assert!(modified.stop, "{m:?} {n:?} eps {eps}");
            both += 1;
        }
    }
    assert!(both > 100);
}

#[test]
fn lucb_examples() {
    assert!(!lucb_stop(1.0, &[0.6, 0.6], &[50, 50], 100, 0, 1).unwrap().stop);
    assert!(lucb_stop(1.0, &[0.9, 0.1], &[10_000, 10_000], 20_000, 0, 1).unwrap().stop);
    assert!(lucb_stop(1.0, &[0.6, 0.6], &[5, 5], 100, 0, 0).is_err());
}

#[test]
fn lucb_stop_is_monotone_in_counts() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let m = [r.random_range(0.3..1.0), r.random_range(0.0..0.6)];
        let eps = 10f64.powf(r.random_range(-1.0..1.0));
        let mut stopped = false;
        for j in 1..22 {
            let c = 1u64 << j;
            let s = lucb_stop(eps, &m, &[c, c], 2 * c, 0, 1).unwrap().stop;
            assert!(!(stopped && !s), "{m:?} eps {eps} at {c}");
            stopped |= s;
        }
    }
}

#[test]
fn recommendation_is_the_largest_clipped_mean() {
    assert_eq!(recommend(&[0.2, 0.9, 0.5]), 1);
    assert_eq!(recommend(&[1.3, 1.1, 0.2]), 0);
    assert_eq!(recommend(&[-0.4, -0.1]), 0);
    assert_eq!(recommend(&[0.1, 0.3, 1.7]), 2);
}
