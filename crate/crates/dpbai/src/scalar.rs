//! Scalar special functions: Bernoulli relative entropy, the privacy warp
//! maps, the Laplace rate function `h`, the tail envelope `f`, the
//! Lambert-type inverse `W̄₋₁` and the geometric grid helpers.
//!
//! All logarithms are natural.

use crate::error::{ensure, DomainError, Result};

/// Inputs this close to a closed domain boundary are snapped onto it.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `ln 2`.
pub const LN_2: f64 = std::f64::consts::LN_2;

const SCALAR_REL_TOL: f64 = 1e-12;
const SCALAR_CAP: usize = 200;

fn snap_unit(x: f64, what: &str) -> Result<f64> {
    ensure!(x.is_finite() && (-BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(&x), "{what} = {x} is outside [0, 1]");
    Ok(x.clamp(0.0, 1.0))
}

/// Root of an increasing function on `[lo, hi]` by plain bisection.
///
/// The endpoints are never evaluated, so the function may diverge there.
/// Stops when the bracket is below `rel_tol` relative (or `abs_tol`
/// absolute) width, or when floating point can no longer split it.
pub(crate) fn bisect_increasing<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    abs_tol: f64,
    cap: usize,
    what: &str,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..cap {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid);
        if v > 0.0 {
            hi = mid;
        } else if v < 0.0 {
            lo = mid;
        } else {
            return Ok(mid);
        }
        let width = hi - lo;
        if width <= abs_tol || width <= rel_tol * lo.abs().max(hi.abs()) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(DomainError::Nonconvergence(format!("{what}: bisection cap of {cap} iterations reached on [{lo}, {hi}]")))
}

/// Bernoulli relative entropy `kl(p, q)`.
pub fn kl(p: f64, q: f64) -> Result<f64> {
    ensure!(p > 0.0 && p < 1.0, "kl: p = {p} is outside (0, 1)");
    ensure!(q > 0.0 && q < 1.0, "kl: q = {q} is outside (0, 1)");
    Ok(kl_ext(p, q))
}

/// `kl` extended to `[0, 1]²` with `0 ln 0 = 0`; may return `+∞`.
#[inline]
pub(crate) fn kl_ext(p: f64, q: f64) -> f64 {
    let a = if p > 0.0 { p * (p / q).ln() } else { 0.0 };
    let b = if p < 1.0 { (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln() } else { 0.0 };
    (a + b).max(0.0)
}

/// `g⁻_ε(x) = x e^ε / (x(e^ε − 1) + 1)`.
pub fn g_eps_minus(eps: f64, x: f64) -> Result<f64> {
    ensure!(eps > 0.0, "eps = {eps} must be positive");
    let x = snap_unit(x, "x")?;
    Ok(g_minus(eps, x))
}

/// `g⁺_ε(x) = 1 − g⁻_ε(1 − x)`, the inverse map of [`g_eps_minus`].
pub fn g_eps_plus(eps: f64, x: f64) -> Result<f64> {
    ensure!(eps > 0.0, "eps = {eps} must be positive");
    let x = snap_unit(x, "x")?;
    Ok(g_plus(eps, x))
}

#[inline]
pub(crate) fn g_minus(eps: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x / (x + (1.0 - x) * (-eps).exp())
}

#[inline]
pub(crate) fn g_plus(eps: f64, x: f64) -> f64 {
    if x >= 1.0 {
        return 1.0;
    }
    let e = (-eps).exp();
    x * e / ((1.0 - x) + x * e)
}

/// Laplace rate function `h(x) = √(1+x²) − 1 + ln(2(√(1+x²) − 1)/x²)`.
pub fn h_rate(x: f64) -> Result<f64> {
    ensure!(x > 0.0 && x.is_finite(), "h_rate: x = {x} must be positive");
    Ok(h(x))
}

/// `h` on `[0, ∞)` with `h(0) = 0`, evaluated without cancellation near 0.
#[inline]
pub(crate) fn h(x: f64) -> f64 {
    let s = (1.0 + x * x).sqrt();
    let t = x * x / (s + 1.0);
    t + (-t / (s + 1.0)).ln_1p()
}

/// `h'(x) = x / (√(1+x²) + 1)`.
#[inline]
pub(crate) fn h_prime(x: f64) -> f64 {
    x / ((1.0 + x * x).sqrt() + 1.0)
}

/// Positive preimage of `y` under [`h_rate`].
pub fn h_inv(y: f64) -> Result<f64> {
    ensure!(y > 0.0 && y.is_finite(), "h_inv: y = {y} must be positive");
    let mut hi = 2.0 * y.sqrt().max(y);
    let mut guard = 0;
    while h(hi) < y {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(DomainError::Nonconvergence(format!("h_inv: no bracket for {y}")));
        }
    }
    bisect_increasing(|x| h(x) - y, 0.0, hi, SCALAR_REL_TOL, 0.0, SCALAR_CAP, "h_inv")
}

/// `W̄₋₁(x)`: the unique `W ≥ 1` with `W − ln W = x`.
pub fn lambert_bar(x: f64) -> Result<f64> {
    ensure!(x.is_finite() && x >= 1.0 - BOUNDARY_TOL, "lambert_bar: x = {x} is below 1");
    if x <= 1.0 {
        return Ok(1.0);
    }
    let lo = x;
    let hi = x + x.ln() + 1.0;
    bisect_increasing(|w| w - w.ln() - x, lo, hi, SCALAR_REL_TOL, 0.0, SCALAR_CAP, "lambert_bar")
}

/// Tail envelope `f(x) = (x + 3 − ln 2) e^(−x)`.
pub fn f_envelope(x: f64) -> f64 {
    (x + 3.0 - LN_2) * (-x).exp()
}

/// Smallest `x ≥ 0` with `f_envelope(x) ≤ delta`.
pub fn f_envelope_level(delta: f64) -> Result<f64> {
    ensure!(delta > 0.0 && delta < 1.0, "delta = {delta} is outside (0, 1)");
    Ok(lambert_bar((1.0 / delta).ln() + 3.0 - LN_2)? - 3.0 + LN_2)
}

/// `k_η(x) = 1 + ln x / ln(1 + η)`.
pub fn k_eta(eta: f64, x: f64) -> Result<f64> {
    ensure!(eta > 0.0, "eta = {eta} must be positive");
    ensure!(x >= 1.0 - BOUNDARY_TOL, "k_eta: x = {x} is below 1");
    Ok(k_eta_raw(eta, x.max(1.0)))
}

#[inline]
pub(crate) fn k_eta_raw(eta: f64, x: f64) -> f64 {
    1.0 + x.ln() / eta.ln_1p()
}

/// `r(x) = x / k_η(x)`.
pub fn r_ratio(eta: f64, x: f64) -> Result<f64> {
    let x = x.max(1.0);
    Ok(x / k_eta(eta, x)?)
}

/// Riemann zeta on `s > 1`.
pub fn zeta(s: f64) -> Result<f64> {
    ensure!(s > 1.0, "zeta: s = {s} must exceed 1");
    if s == 2.0 {
        return Ok(std::f64::consts::PI.powi(2) / 6.0);
    }
    // Euler–Maclaurin tail after n = 100.
    let n = 100.0_f64;
    let mut sum = 0.0;
    for i in 1..100 {
        sum += (i as f64).powf(-s);
    }
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    Ok(sum)
}
