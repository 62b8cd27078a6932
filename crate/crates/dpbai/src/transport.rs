//! Pairwise transportation costs.
//!
//! ```text
//! W_ε,a,b(µ, w) = 1[µ_a > µ_b] inf_u  w_a d⁻_ε(µ_a, u) + w_b d⁺_ε(µ_b, u)
//! ```
//!
//! [`transport_cost`] dispatches on the seven closed-form cases,
//! [`transport_cost_grid`] minimizes the same objective by brute force and
//! [`transport_cost_modified`] computes `W̃` with the modified divergences.

use crate::divergences::{clip01, d_tilde_plus_argmin, Budget};
use crate::error::{ensure, Result};
use crate::scalar::{bisect_increasing, r_ratio};

const MODIFIED_REL_TOL: f64 = 1e-13;
const MODIFIED_CAP: usize = 200;
const BRACKET_SHRINK: f64 = 1e-14;
const GOLDEN_ITERS: usize = 200;

/// Branch of the closed form that produced a [`TransportResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransportCase {
    /// The clipped means are not in the right order.
    Zero,
    /// One weight vanishes so the infimum is attained at a mean.
    ZeroWeight,
    /// Both divergences stay in their kl branch on `[µ_b, µ_a]`.
    LowPrivacyMean,
    /// Both divergences are kl at the weighted mean.
    MixedMean,
    /// Both divergences are in their privacy branch at the optimum.
    PrivacyInterior,
    /// Lower quadratic root, reached from the weighted-mean side.
    MixedLowerRoot,
    /// Lower quadratic root, reached from the privacy side.
    PrivacyLowerRoot,
    /// Upper quadratic root, reached from the weighted-mean side.
    MixedUpperRoot,
    /// Upper quadratic root, reached from the privacy side.
    PrivacyUpperRoot,
    /// Direct numerical minimization.
    Numerical,
}

/// Value and minimizer of a transportation cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportResult {
    pub value: f64,
    pub minimizer_u: f64,
    pub case_tag: TransportCase,
}

impl TransportResult {
    fn zero(u: f64, case_tag: TransportCase) -> Self {
        Self { value: 0.0, minimizer_u: u, case_tag }
    }
}

fn check(eps: f64, w_a: f64, w_b: f64) -> Result<()> {
    ensure!(eps > 0.0, "eps = {eps} must be positive");
    ensure!(w_a >= 0.0 && w_a.is_finite(), "w_a = {w_a} must be nonnegative");
    ensure!(w_b >= 0.0 && w_b.is_finite(), "w_b = {w_b} must be nonnegative");
    Ok(())
}

/// `w_a d⁻_ε(µ_a, u) + w_b d⁺_ε(µ_b, u)`.
pub fn transport_objective(eps: f64, mu_a: f64, mu_b: f64, w_a: f64, w_b: f64, u: f64) -> f64 {
    objective(&Budget::new(eps), mu_a, mu_b, w_a, w_b, u)
}

#[inline]
fn objective(b: &Budget, mu_a: f64, mu_b: f64, w_a: f64, w_b: f64, u: f64) -> f64 {
    let u = clip01(u);
    let left = if w_a > 0.0 { w_a * b.dm(mu_a, u).0 } else { 0.0 };
    let right = if w_b > 0.0 { w_b * b.dp(mu_b, u).0 } else { 0.0 };
    left + right
}

/// Positive root of `a x² + b x − c` for `a > 0`, `c ≥ 0`.
#[inline]
fn pos_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b + 4.0 * a * c).sqrt();
    if b >= 0.0 {
        if disc + b > 0.0 {
            2.0 * c / (disc + b)
        } else {
            0.0
        }
    } else {
        (disc - b) / (2.0 * a)
    }
}

/// Closed-form `W_ε,a,b(µ, w)`.
pub fn transport_cost(eps: f64, mu_a: f64, mu_b: f64, w_a: f64, w_b: f64) -> Result<TransportResult> {
    check(eps, w_a, w_b)?;
    ensure!(!mu_a.is_nan() && !mu_b.is_nan(), "means must not be NaN");
    Ok(transport_unchecked(eps, mu_a, mu_b, w_a, w_b))
}

pub(crate) fn transport_unchecked(eps: f64, mu_a: f64, mu_b: f64, w1: f64, w2: f64) -> TransportResult {
    transport_with(&Budget::new(eps), mu_a, mu_b, w1, w2)
}

/// [`transport_unchecked`] with the exponentials of `ε` precomputed.
#[inline]
pub(crate) fn transport_with(b: &Budget, mu_a: f64, mu_b: f64, w1: f64, w2: f64) -> TransportResult {
    let lam = clip01(mu_a);
    let mu = clip01(mu_b);
    if lam <= mu {
        return TransportResult::zero(mu, TransportCase::Zero);
    }
    if w1 == 0.0 {
        return TransportResult::zero(mu, TransportCase::ZeroWeight);
    }
    if w2 == 0.0 {
        return TransportResult::zero(lam, TransportCase::ZeroWeight);
    }
    let (u, case_tag) = closed_form_minimizer(b, lam, mu, w1, w2);
    let u = u.clamp(mu, lam);
    TransportResult { value: objective(b, lam, mu, w1, w2, u), minimizer_u: u, case_tag }
}

/// `x ln x + (1 − x) ln(1 − x)` with `0 ln 0 = 0`.
#[inline]
fn neg_entropy(x: f64) -> f64 {
    let a = if x > 0.0 { x * x.ln() } else { 0.0 };
    let b = if x < 1.0 { (1.0 - x) * (-x).ln_1p() } else { 0.0 };
    a + b
}

/// Clipped mean of one arm with its negative entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ArmTerms {
    pub clipped: f64,
    pub neg_entropy: f64,
}

impl ArmTerms {
    pub fn new(mu: f64) -> Self {
        let clipped = clip01(mu);
        Self { clipped, neg_entropy: neg_entropy(clipped) }
    }
}

/// `W_ε` from precomputed arm terms.
///
/// Each closed-form case fixes the branch of both divergences at the
/// minimizer, so with `φ(x) = x ln x + (1 − x) ln(1 − x)` cached per arm
///
/// ```text
/// kl(x, u) = φ(x) − x ln u − (1 − x) ln(1 − u)
/// ```
///
/// and the weighted-mean cases reduce to `w_a φ(λ) + w_b φ(µ) − (w_a + w_b) φ(m)`.
#[inline]
pub(crate) fn transport_terms(b: &Budget, a: &ArmTerms, c: &ArmTerms, w1: f64, w2: f64) -> f64 {
    use TransportCase::*;
    let (lam, mu) = (a.clipped, c.clipped);
    if lam <= mu || w1 == 0.0 || w2 == 0.0 {
        return 0.0;
    }
    if mu <= 0.0 || lam >= 1.0 {
        return transport_with(b, lam, mu, w1, w2).value;
    }
    let (u, case) = closed_form_minimizer(b, lam, mu, w1, w2);
    let u = u.clamp(mu, lam);
    let kl = |x: f64, phi: f64| (phi - x * u.ln() - (1.0 - x) * (-u).ln_1p()).max(0.0);
    let eps = b.eps;
    let priv_left = || (-(u + (1.0 - u) * b.e).ln() - eps * (1.0 - lam)).max(0.0);
    let priv_right = || (-((1.0 - u) + u * b.e).ln() - eps * mu).max(0.0);
    match case {
        LowPrivacyMean | MixedMean => (w1 * a.neg_entropy + w2 * c.neg_entropy - (w1 + w2) * neg_entropy(u)).max(0.0),
        MixedLowerRoot | PrivacyLowerRoot => w1 * priv_left() + w2 * kl(mu, c.neg_entropy),
        MixedUpperRoot | PrivacyUpperRoot => w1 * kl(lam, a.neg_entropy) + w2 * priv_right(),
        PrivacyInterior => w1 * priv_left() + w2 * priv_right(),
        Zero | ZeroWeight | Numerical => transport_with(b, lam, mu, w1, w2).value,
    }
}

#[inline]
fn closed_form_minimizer(b: &Budget, lam: f64, mu: f64, w1: f64, w2: f64) -> (f64, TransportCase) {
    use TransportCase::*;
    let gm = b.g_minus(mu);
    let gp = b.g_plus(lam);
    let ws = w1 + w2;
    let m = (w1 * lam + w2 * mu) / ws;
    if gm >= lam {
        return (m, LowPrivacyMean);
    }
    // 1 / (e^ε − 1)
    let a_inv = b.e / b.one_minus_e;
    let lower = || pos_root(ws, w2 * a_inv - (w2 * mu + w1), w2 * mu * a_inv);
    let upper = || {
        let l1 = 1.0 - lam;
        1.0 - pos_root(ws, w1 * a_inv - (w1 * l1 + w2), w1 * l1 * a_inv)
    };
    if gp <= gm {
        if m < gp {
            (lower(), MixedLowerRoot)
        } else if m > gm {
            (upper(), MixedUpperRoot)
        } else {
            (m, MixedMean)
        }
    } else {
        let u3 = (w1 - w2 * b.e) / (ws * b.one_minus_e);
        if u3 < gm {
            (lower(), PrivacyLowerRoot)
        } else if u3 > gp {
            (upper(), PrivacyUpperRoot)
        } else {
            (u3, PrivacyInterior)
        }
    }
}

/// Brute-force `W_ε` over a uniform `u`-grid refined by golden-section search.
pub fn transport_cost_grid(
    eps: f64,
    mu_a: f64,
    mu_b: f64,
    w_a: f64,
    w_b: f64,
    grid_points: usize,
) -> Result<TransportResult> {
    check(eps, w_a, w_b)?;
    ensure!(grid_points >= 100, "grid_points = {grid_points} is below 100");
    if clip01(mu_a) <= clip01(mu_b) {
        return Ok(TransportResult::zero(clip01(mu_b), TransportCase::Zero));
    }
    let phi = |u: f64| transport_objective(eps, mu_a, mu_b, w_a, w_b, u);
    let step = 1.0 / (grid_points - 1) as f64;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..grid_points {
        let v = phi(i as f64 * step);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let lo = best_i.saturating_sub(1) as f64 * step;
    let hi = ((best_i + 1).min(grid_points - 1) as f64 * step).min(1.0);
    let (u, v) = golden_section(phi, lo, hi, GOLDEN_ITERS);
    let (u, v) = if v <= best { (u, v) } else { (best_i as f64 * step, best) };
    Ok(TransportResult { value: v, minimizer_u: u, case_tag: TransportCase::Numerical })
}

/// Minimum of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if hi - lo <= 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `∂/∂u d̃⁺_ε(λ, u, r) = (u − z*) / (u(1 − u))`.
fn d_tilde_plus_du(eps: f64, lam: f64, u: f64, r: f64) -> Result<f64> {
    let (_, z) = d_tilde_plus_argmin(eps, lam, u, r)?;
    Ok((u - z) / (u * (1.0 - u)))
}

/// Modified cost `W̃_ε` with per-arm ratios `r = r_ratio(η, w)`.
///
/// Weights are counts and must be at least 1.
pub fn transport_cost_modified(
    eps: f64,
    eta: f64,
    mu_a: f64,
    mu_b: f64,
    w_a: f64,
    w_b: f64,
) -> Result<TransportResult> {
    check(eps, w_a, w_b)?;
    ensure!(eta > 0.0, "eta = {eta} must be positive");
    ensure!(w_a >= 1.0 && w_b >= 1.0, "weights ({w_a}, {w_b}) must be at least 1");
    ensure!(!mu_a.is_nan() && !mu_b.is_nan(), "means must not be NaN");
    let (hi, lo) = (clip01(mu_a), clip01(mu_b));
    if hi <= lo {
        return Ok(TransportResult::zero(lo, TransportCase::Zero));
    }
    let (ra, rb) = (r_ratio(eta, w_a)?, r_ratio(eta, w_b)?);
    let value_at = |u: f64| -> Result<f64> {
        let left = d_tilde_plus_argmin(eps, 1.0 - mu_a, 1.0 - u, ra)?.0;
        let right = d_tilde_plus_argmin(eps, mu_b, u, rb)?.0;
        Ok(w_a * left + w_b * right)
    };
    let (a, b) = (lo + BRACKET_SHRINK, hi - BRACKET_SHRINK);
    let u = if a >= b {
        0.5 * (lo + hi)
    } else {
        let mut err = None;
        let u = bisect_increasing(
            |u| {
                let slope = d_tilde_plus_du(eps, 1.0 - mu_a, 1.0 - u, ra)
                    .and_then(|l| d_tilde_plus_du(eps, mu_b, u, rb).map(|r| -w_a * l + w_b * r));
                match slope {
                    Ok(s) => s,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            },
            a,
            b,
            MODIFIED_REL_TOL,
            0.0,
            MODIFIED_CAP,
            "transport_cost_modified",
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        u
    };
    Ok(TransportResult { value: value_at(u)?, minimizer_u: u, case_tag: TransportCase::Numerical })
}
