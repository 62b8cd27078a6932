//! Brute-force reference implementations used as independent oracles.
//!
//! Everything here minimizes the defining objectives directly and never
//! calls the closed forms under test.
#![allow(dead_code)]

pub fn kl(p: f64, q: f64) -> f64 {
    let t = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    t(p, q) + t(1.0 - p, 1.0 - q)
}

pub fn h(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let s = (1.0 + x * x).sqrt();
    x * x / (s + 1.0) + (2.0 / (s + 1.0)).ln()
}

pub fn clip(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Minimum of a convex function on `[lo, hi]`.
pub fn golden<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..120 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) <= f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let x = 0.5 * (lo + hi);
    let ends = [(lo, f(lo)), (x, f(x)), (hi, f(hi))];
    ends.into_iter().fold((x, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
}

/// Uniform grid plus a golden refinement around the best node.
pub fn grid_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let step = (hi - lo) / (n - 1) as f64;
    let (mut bi, mut bv) = (0, f64::INFINITY);
    for i in 0..n {
        let v = f(lo + i as f64 * step);
        if v < bv {
            bv = v;
            bi = i;
        }
    }
    let a = lo + bi.saturating_sub(1) as f64 * step;
    let b = (lo + (bi + 1) as f64 * step).min(hi);
    bv.min(golden(&f, a, b).1)
}

/// `inf_{z ∈ [[λ], µ]} kl(z, µ) + ε(z − [λ])`, zero when `µ ≤ [λ]`.
pub fn d_plus_ref(eps: f64, lam: f64, mu: f64) -> f64 {
    let l = clip(lam);
    if mu <= l {
        return 0.0;
    }
    golden(|z| kl(z, mu) + eps * (z - l), l, mu).1
}

pub fn d_plus_grid(eps: f64, lam: f64, mu: f64, n: usize) -> f64 {
    let l = clip(lam);
    if mu <= l {
        return 0.0;
    }
    grid_min(|z| kl(z, mu) + eps * (z - l), l, mu, n)
}

pub fn d_minus_ref(eps: f64, lam: f64, mu: f64) -> f64 {
    d_plus_ref(eps, 1.0 - lam, 1.0 - mu)
}

/// `inf_z kl(z, µ) + ε|λ − z|` over `[0, 1]`.
pub fn d_unsigned_grid(eps: f64, lam: f64, mu: f64, n: usize) -> f64 {
    grid_min(|z| kl(z, mu) + eps * (lam - z).abs(), 0.0, 1.0, n)
}

pub fn d_tilde_plus_ref(eps: f64, lam: f64, mu: f64, r: f64) -> f64 {
    let l = clip(lam);
    if mu <= l {
        return 0.0;
    }
    golden(|z| kl(z, mu) + h(r * eps * (z - lam)) / r, l, mu).1
}

pub fn d_tilde_plus_grid(eps: f64, lam: f64, mu: f64, r: f64, n: usize) -> f64 {
    let l = clip(lam);
    if mu <= l {
        return 0.0;
    }
    grid_min(|z| kl(z, mu) + h(r * eps * (z - lam)) / r, l, mu, n)
}

pub fn d_tilde_minus_ref(eps: f64, lam: f64, mu: f64, r: f64) -> f64 {
    d_tilde_plus_ref(eps, 1.0 - lam, 1.0 - mu, r)
}

/// Transportation cost by nested golden-section search.
pub fn transport_ref(eps: f64, mu_a: f64, mu_b: f64, w_a: f64, w_b: f64) -> f64 {
    let (hi, lo) = (clip(mu_a), clip(mu_b));
    if hi <= lo {
        return 0.0;
    }
    let phi = |u: f64| w_a * d_minus_ref(eps, mu_a, u) + w_b * d_plus_ref(eps, mu_b, u);
    golden(phi, 0.0, 1.0).1
}

/// `k_η(x) = 1 + ln x / ln(1 + η)`.
pub fn k_eta(eta: f64, x: f64) -> f64 {
    1.0 + x.ln() / (1.0 + eta).ln()
}

/// Modified transportation cost by nested search.
pub fn transport_modified_ref(eps: f64, eta: f64, mu_a: f64, mu_b: f64, w_a: f64, w_b: f64) -> f64 {
    let (hi, lo) = (clip(mu_a), clip(mu_b));
    if hi <= lo {
        return 0.0;
    }
    let (ra, rb) = (w_a / k_eta(eta, w_a), w_b / k_eta(eta, w_b));
    let phi = |u: f64| w_a * d_tilde_minus_ref(eps, mu_a, u, ra) + w_b * d_tilde_plus_ref(eps, mu_b, u, rb);
    golden(phi, lo + 1e-12, hi - 1e-12).1
}

/// Non-private Bernoulli cost at the weighted mean.
pub fn transport_kl(mu_a: f64, mu_b: f64, w_a: f64, w_b: f64) -> f64 {
    let m = (w_a * mu_a + w_b * mu_b) / (w_a + w_b);
    w_a * kl(mu_a, m) + w_b * kl(mu_b, m)
}
