mod common;

use std::collections::HashSet;

use common::*;
use dpbai::oracle::low_privacy_check;
use dpbai::transport::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tuple(rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64, f64) {
    let eps = 10f64.powf(rng.random_range(-2.5..1.5));
    let a = rng.random_range(0.0..1.0);
    let b = rng.random_range(0.0..1.0);
    let (mu_a, mu_b) = if a > b { (a, b) } else { (b, a) };
    let w_a = 10f64.powf(rng.random_range(-2.0..2.0));
    let w_b = 10f64.powf(rng.random_range(-2.0..2.0));
    (eps, mu_a, mu_b, w_a, w_b)
}

#[test]
fn closed_form_matches_nested_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut cases = HashSet::new();
    for _ in 0..2000 {
        let (eps, mu_a, mu_b, w_a, w_b) = random_tuple(&mut rng);
        let r = transport_cost(eps, mu_a, mu_b, w_a, w_b).unwrap();
        cases.insert(r.case_tag);
        let want = transport_ref(eps, mu_a, mu_b, w_a, w_b);
        assert!((r.value - want).abs() <= 1e-9 * (1.0 + want), "{eps} {mu_a} {mu_b} {w_a} {w_b}: {r:?} vs {want}");
        let at_u = transport_objective(eps, mu_a, mu_b, w_a, w_b, r.minimizer_u);
        assert!((r.value - at_u).abs() <= 1e-10);
        assert!(r.minimizer_u >= mu_b && r.minimizer_u <= mu_a);
    }
    use TransportCase::*;
    for c in
        [LowPrivacyMean, MixedMean, PrivacyInterior, MixedLowerRoot, PrivacyLowerRoot, MixedUpperRoot, PrivacyUpperRoot]
    {
        assert!(cases.contains(&c), "{c:?} never reached");
    }
}

#[test]
fn grid_oracle_examples() {
    let e = transport_cost(0.05, 0.7, 0.3, 2.0, 1.0).unwrap();
    let g = transport_cost_grid(0.05, 0.7, 0.3, 2.0, 1.0, 100_000).unwrap();
    assert!((e.value - g.value).abs() < 1e-6);
    let g = transport_cost_grid(10.0, 0.7, 0.3, 1.0, 1.0, 100).unwrap();
    assert!((g.value - 0.164565).abs() < 1e-6);
    assert_eq!(transport_cost_grid(1.0, 0.7, 0.3, 0.0, 1.0, 1000).unwrap().value, 0.0);
    assert!(transport_cost_grid(1.0, 0.7, 0.3, 1.0, 1.0, 50).is_err());
}

#[test]
fn boundary_means() {
    for &(a, b) in &[(1.0, 0.0), (1.0, 0.4), (0.6, 0.0), (1.3, -0.2)] {
        for &eps in &[0.01, 0.5, 5.0] {
            let r = transport_cost(eps, a, b, 2.0, 0.7).unwrap();
            let want = transport_ref(eps, a, b, 2.0, 0.7);
            assert!((r.value - want).abs() < 1e-9, "{a} {b} {eps}");
        }
    }
}

#[test]
fn continuous_across_case_boundaries() {
    let (mu_a, mu_b, w_a, w_b) = (0.8, 0.35, 1.7, 0.6);
    let n = 20_000;
    let mut prev: Option<(f64, TransportCase)> = None;
    let mut switches = 0;
    for i in 0..=n {
        let eps = 10f64.powf(-3.0 + 4.0 * i as f64 / n as f64);
        let r = transport_cost(eps, mu_a, mu_b, w_a, w_b).unwrap();
        if let Some((v, c)) = prev {
            // dW/dε ≤ w_a + w_b in absolute value, and ε moves by at most 0.05% per step
            assert!((r.value - v).abs() <= (w_a + w_b) * eps * 5e-4 + 1e-12, "eps {eps}");
            switches += (c != r.case_tag) as usize;
        }
        prev = Some((r.value, r.case_tag));
    }
    assert!(switches >= 2);
}

#[test]
fn two_dimensional_rewriting() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let eps_d = |e: f64, l: f64, u: f64| dpbai::divergences::d_minus(e, l, u).unwrap().0;
    let eps_p = |e: f64, l: f64, u: f64| dpbai::divergences::d_plus(e, l, u).unwrap().0;
    for _ in 0..20 {
        let (eps, mu_a, mu_b, w_a, w_b) = random_tuple(&mut rng);
        let n = 300;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let u1 = i as f64 / n as f64;
            let left = w_a * eps_d(eps, mu_a, u1);
            for j in i..=n {
                let u2 = j as f64 / n as f64;
                best = best.min(left + w_b * eps_p(eps, mu_b, u2));
            }
        }
        let w = transport_cost(eps, mu_a, mu_b, w_a, w_b).unwrap().value;
        assert!(w <= best + 1e-12);
        assert!(best - w <= 0.02 * (w_a + w_b) * (1.0 + eps), "{best} {w}");
    }
}

#[test]
fn low_privacy_collapse() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut hits = 0;
    while hits < 500 {
        let (eps, mu_a, mu_b, w_a, w_b) = random_tuple(&mut rng);
        if !(mu_a > mu_b && mu_b > 0.0 && mu_a < 1.0) {
            continue;
        }
        let inst = dpbai::oracle::BanditInstance::new(vec![mu_a, mu_b]).unwrap();
        if !low_privacy_check(eps, &inst, &[w_a, w_b], 0, 1).unwrap() {
            continue;
        }
        hits += 1;
        let w = transport_cost(eps, mu_a, mu_b, w_a, w_b).unwrap().value;
        assert!((w - transport_kl(mu_a, mu_b, w_a, w_b)).abs() <= 1e-10);
    }
}

#[test]
fn modified_cost_matches_nested_search() {
    let (eps, eta, mu_a, mu_b, w_a, w_b) = (0.5, 1.0, 0.7, 0.3, 16.0, 4.0);
    let r = transport_cost_modified(eps, eta, mu_a, mu_b, w_a, w_b).unwrap();
    assert!((r.value - transport_modified_ref(eps, eta, mu_a, mu_b, w_a, w_b)).abs() < 1e-5);

    let (eps, w) = (1.0, 8.0);
    let r = transport_cost_modified(eps, 1.0, 0.7, 0.3, w, w).unwrap();
    let ratio = w / k_eta(1.0, w);
    let at_lo = w * d_tilde_minus_ref(eps, 0.7, 0.3 + 1e-9, ratio);
    let at_hi = w * d_tilde_plus_ref(eps, 0.3, 0.7 - 1e-9, ratio);
    assert!(r.value <= at_lo && r.value <= at_hi);

    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..40 {
        let eps = 10f64.powf(rng.random_range(-1.5..1.0));
        let (a, b) = (rng.random_range(0.02..0.98), rng.random_range(-0.1..1.1));
        let (wa, wb) = (rng.random_range(1.0..500.0), rng.random_range(1.0..500.0));
        let r = transport_cost_modified(eps, 0.5, a, b, wa, wb).unwrap();
        let want = transport_modified_ref(eps, 0.5, a, b, wa, wb);
        assert!((r.value - want).abs() <= 1e-7 * (1.0 + want), "{eps} {a} {b} {wa} {wb}: {} vs {want}", r.value);
    }
}

proptest! {
    #[test]
    fn monotone_in_each_weight(eps in 0.01..10.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64,
                               w in 0.01..50.0f64, x in 0.01..50.0f64, y in 0.01..50.0f64) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let t = |wa: f64, wb: f64| transport_cost(eps, a, b, wa, wb).unwrap().value;
        prop_assert!(t(lo, w) <= t(hi, w) + 1e-12);
        prop_assert!(t(w, lo) <= t(w, hi) + 1e-12);
    }

    #[test]
    fn concave_in_weights(eps in 0.01..10.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64,
                          w1 in 0.0..50.0f64, w2 in 0.0..50.0f64, v1 in 0.0..50.0f64, v2 in 0.0..50.0f64) {
        let t = |wa: f64, wb: f64| transport_cost(eps, a, b, wa, wb).unwrap().value;
        let mid = t(0.5 * (w1 + v1), 0.5 * (w2 + v2));
        prop_assert!(mid + 1e-10 * (1.0 + mid) >= 0.5 * (t(w1, w2) + t(v1, v2)));
    }

    #[test]
    fn homogeneous_of_degree_one(eps in 0.01..10.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64,
                                 wa in 0.01..50.0f64, wb in 0.01..50.0f64, s in 0.1..10.0f64) {
        let t = |x: f64, y: f64| transport_cost(eps, a, b, x, y).unwrap().value;
        let (u, v) = (t(s * wa, s * wb), s * t(wa, wb));
        prop_assert!((u - v).abs() <= 1e-9 * (1.0 + v));
    }
}
