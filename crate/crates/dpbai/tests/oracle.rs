mod common;

use common::*;
use dpbai::oracle::*;
use dpbai::transport::transport_cost;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mu1() -> BanditInstance {
    BanditInstance::new(vec![0.95, 0.9, 0.9, 0.9, 0.5]).unwrap()
}

fn mu2() -> BanditInstance {
    BanditInstance::new(vec![0.75, 0.7, 0.7, 0.7, 0.7]).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> BanditInstance {
    let k = rng.random_range(2..6);
    BanditInstance::new((0..k).map(|_| rng.random_range(0.02..0.98)).collect()).unwrap()
}

fn balance_residual(eps: f64, inst: &BanditInstance, s: &OracleSolution) -> f64 {
    let m = inst.means();
    let b = inst.best_arm();
    (0..m.len())
        .filter(|&a| a != b)
        .map(|a| {
            let w = transport_cost(eps, m[b], m[a], s.w_star[b], s.w_star[a]).unwrap().value;
            (w * s.t_star - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn two_arm_matches_simplex_grid() {
    let inst = BanditInstance::new(vec![0.7, 0.3]).unwrap();
    let s = characteristic_time(10.0, &inst).unwrap();
    let n = 1000;
    let best = (1..n)
        .map(|i| {
            let w = i as f64 / n as f64;
            transport_kl(0.7, 0.3, w, 1.0 - w)
        })
        .fold(0.0, f64::max);
    assert!((s.t_star * best - 1.0).abs() < 5e-3, "{} {}", s.t_star, 1.0 / best);
}

#[test]
fn private_two_arm_matches_simplex_grid() {
    let inst = BanditInstance::new(vec![0.8, 0.45]).unwrap();
    for &eps in &[0.05, 0.5] {
        let s = characteristic_time(eps, &inst).unwrap();
        let n = 1000;
        let best = (1..n)
            .map(|i| {
                let w = i as f64 / n as f64;
                transport_ref(eps, 0.8, 0.45, w, 1.0 - w)
            })
            .fold(0.0, f64::max);
        assert!((s.t_star * best - 1.0).abs() < 5e-3);
    }
}

#[test]
fn information_balance() {
    let s = characteristic_time(1.0, &mu2()).unwrap();
    assert!(balance_residual(1.0, &mu2(), &s) <= 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..30 {
        let inst = random_instance(&mut rng);
        let eps = 10f64.powf(rng.random_range(-2.0..1.5));
        let s = characteristic_time(eps, &inst).unwrap();
        assert!(balance_residual(eps, &inst, &s) <= 1e-8, "{inst:?} {eps}");
        assert!((s.w_star.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.w_star.iter().all(|&w| w > 0.0));
        assert!(s.t_star >= lower_bound_time(eps, &inst).unwrap() * (1.0 - 1e-12));
    }
}

#[test]
fn fixed_point_map_shape() {
    for eps in [0.1, 1.0, 10.0] {
        let inst = mu1();
        assert_eq!(fixed_point_map(eps, &inst, 0.0).unwrap(), 0.0);
        let top = inst.means()[0];
        let ceiling = inst.means()[1..].iter().map(|&m| d_minus_ref(eps, top, m)).fold(f64::INFINITY, f64::min);
        let mut prev = 0.0;
        for i in 1..200 {
            let f = fixed_point_map(eps, &inst, ceiling * i as f64 / 200.0).unwrap();
            assert!(f > prev);
            prev = f;
        }
        assert!(fixed_point_map(eps, &inst, ceiling * (1.0 - 1e-9)).unwrap() > 1.0);
        assert!(fixed_point_map(eps, &inst, ceiling * 1.01).is_err());
    }
}

#[test]
fn beta_variant() {
    for inst in [mu1(), mu2()] {
        for eps in [0.1, 1.0, 10.0] {
            let s = characteristic_time(eps, &inst).unwrap();
            let b = beta_characteristic_time(eps, &inst, s.w_star[inst.best_arm()]).unwrap();
            assert!((b.t_star / s.t_star - 1.0).abs() < 1e-8);
            for (x, y) in b.w_star.iter().zip(&s.w_star) {
                assert!((x - y).abs() < 1e-8);
            }
            let half = beta_characteristic_time(eps, &inst, 0.5).unwrap();
            assert!(half.t_star <= 2.0 * s.t_star);
            assert!(half.t_star >= s.t_star * (1.0 - 1e-10));
            assert_eq!(half.w_star[inst.best_arm()], 0.5);
            assert!((half.w_star.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn lower_bound_examples() {
    let inst = BanditInstance::new(vec![0.6, 0.4]).unwrap();
    let eps = 0.3;
    let want = 1.0 / d_minus_ref(eps, 0.6, 0.4) + 1.0 / d_plus_ref(eps, 0.4, 0.6);
    assert!((lower_bound_time(eps, &inst).unwrap() - want).abs() < 1e-6 * want);
    let lb = lower_bound_time(1e-4, &mu2()).unwrap();
    assert!((1e-4 * lb / 100.0 - 1.0).abs() < 0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..30 {
        let inst = random_instance(&mut rng);
        let eps = 10f64.powf(rng.random_range(-3.0..2.0));
        let t = characteristic_time(eps, &inst).unwrap().t_star;
        assert!(lower_bound_time(eps, &inst).unwrap() <= t * (1.0 + 1e-12));
    }
}

#[test]
fn monotone_in_privacy_and_plateau() {
    for inst in [mu1(), mu2()] {
        let mut prev = f64::INFINITY;
        for i in 0..=30 {
            let eps = 10f64.powf(-3.0 + 5.0 * i as f64 / 30.0);
            let t = characteristic_time(eps, &inst).unwrap().t_star;
            assert!(t <= prev * (1.0 + 1e-9));
            prev = t;
        }
        let non_private = characteristic_time(1e3, &inst).unwrap().t_star;
        let boundary = regime_boundary(&inst).max_boundary;
        for eps in [boundary * 1.01, 10.0, 100.0] {
            let t = characteristic_time(eps, &inst).unwrap().t_star;
            assert!((t / non_private - 1.0).abs() < 1e-6, "{eps}");
        }
    }
}

#[test]
fn uniqueness_of_the_allocation() {
    let inst = mu1();
    let s = characteristic_time(0.5, &inst).unwrap();
    // A perturbed instance converges back as the perturbation vanishes.
    let shifted = BanditInstance::new(inst.means().iter().map(|m| m * (1.0 - 1e-12)).collect()).unwrap();
    let t = characteristic_time(0.5, &shifted).unwrap();
    for (a, b) in s.w_star.iter().zip(&t.w_star) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn regime_boundary_implies_low_privacy() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..200 {
        let inst = random_instance(&mut rng);
        let rb = regime_boundary(&inst);
        let b = inst.best_arm();
        let w: Vec<f64> = (0..inst.k()).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        for a in (0..inst.k()).filter(|&a| a != b && inst.means()[a] < inst.means()[b]) {
            let eps = rb.eps_ab[b][a] * rng.random_range(1.0..3.0);
            assert!(low_privacy_check(eps, &inst, &w, b, a).unwrap());
        }
    }
}

#[test]
fn degenerate_instances_are_rejected() {
    assert!(matches!(BanditInstance::new(vec![0.5, 0.5]), Err(dpbai::DomainError::DegenerateInstance(_))));
}
