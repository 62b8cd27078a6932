//! Signed private divergences `d⁺_ε`, `d⁻_ε` and their modified
//! counterparts `d̃⁺_ε`, `d̃⁻_ε`.
//!
//! ```text
//! d⁺_ε(λ, µ) = 1[µ > [λ]] inf_{z ∈ [[λ], µ]} kl(z, µ) + ε (z − [λ])
//! d̃⁺_ε(λ, µ, r) = 1[µ > [λ]] inf_{z ∈ ([λ], µ)} kl(z, µ) + h(rε(z − λ)) / r
//! d⁻(λ, µ) = d⁺(1 − λ, 1 − µ)
//! ```
//!
//! where `[λ]` clips to `[0, 1]`.

use crate::error::{ensure, DomainError, Result};
use crate::scalar::{bisect_increasing, g_plus, h, h_prime, kl_ext, BOUNDARY_TOL};

const TILDE_REL_TOL: f64 = 1e-12;
const TILDE_CAP: usize = 200;
const BRACKET_SHRINK: f64 = 1e-14;

/// Which branch of the closed form produced a divergence value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DivergenceRegime {
    Zero,
    Kl,
    Privacy,
}

/// Side of a signed divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

/// Privacy budget, risk, grid parameter and leader target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub beta: f64,
}

impl PrivacyParams {
    pub fn new(eps: f64, delta: f64, eta: f64, beta: f64) -> Result<Self> {
        ensure!(eps > 0.0, "eps = {eps} must be positive");
        ensure!(delta > 0.0 && delta < 1.0, "delta = {delta} is outside (0, 1)");
        ensure!(eta > 0.0, "eta = {eta} must be positive");
        ensure!(beta > 0.0 && beta < 1.0, "beta = {beta} is outside (0, 1)");
        Ok(Self { eps, delta, eta, beta })
    }
}

#[inline]
pub(crate) fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn check_eps_mu(eps: f64, mu: f64) -> Result<f64> {
    ensure!(eps > 0.0, "eps = {eps} must be positive");
    ensure!(mu.is_finite() && (-BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(&mu), "mu = {mu} is outside [0, 1]");
    Ok(clip01(mu))
}

/// `d⁺_ε(λ, µ)` with the branch that produced it.
pub fn d_plus(eps: f64, lam: f64, mu: f64) -> Result<(f64, DivergenceRegime)> {
    let mu = check_eps_mu(eps, mu)?;
    ensure!(!lam.is_nan(), "lam is NaN");
    Ok(dp(eps, lam, mu))
}

/// `d⁻_ε(λ, µ) = d⁺_ε(1 − λ, 1 − µ)`.
pub fn d_minus(eps: f64, lam: f64, mu: f64) -> Result<(f64, DivergenceRegime)> {
    let mu = check_eps_mu(eps, mu)?;
    ensure!(!lam.is_nan(), "lam is NaN");
    Ok(dm(eps, lam, mu))
}

/// `ε` with `e^(−ε)` and `1 − e^(−ε)` computed once, for hot loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Budget {
    pub eps: f64,
    pub e: f64,
    pub one_minus_e: f64,
}

impl Budget {
    #[inline]
    pub fn new(eps: f64) -> Self {
        Self { eps, e: (-eps).exp(), one_minus_e: -(-eps).exp_m1() }
    }

    #[inline]
    pub fn g_minus(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        x / (x + (1.0 - x) * self.e)
    }

    #[inline]
    pub fn g_plus(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 1.0;
        }
        x * self.e / ((1.0 - x) + x * self.e)
    }

    #[inline]
    fn kl_branch(&self, lam: f64, l: f64, mu: f64) -> bool {
        lam > 0.0 && lam < 1.0 && mu < 1.0 && mu <= self.g_minus(l) + BOUNDARY_TOL
    }

    /// Unchecked `d⁺`; `mu` must lie in `[0, 1]`.
    #[inline]
    pub fn dp(&self, lam: f64, mu: f64) -> (f64, DivergenceRegime) {
        let l = clip01(lam);
        if mu <= l {
            return (0.0, DivergenceRegime::Zero);
        }
        if self.kl_branch(lam, l, mu) {
            return (kl_ext(lam, mu), DivergenceRegime::Kl);
        }
        // 1 − µ(1 − e^(−ε)) written as a sum of nonnegative terms
        let s = (1.0 - mu) + mu * self.e;
        let v = if s > 0.0 { -s.ln() } else { self.eps };
        ((v - self.eps * l).max(0.0), DivergenceRegime::Privacy)
    }

    /// Unchecked `d⁻`; `mu` must lie in `[0, 1]`.
    #[inline]
    pub fn dm(&self, lam: f64, mu: f64) -> (f64, DivergenceRegime) {
        self.dp(1.0 - lam, 1.0 - mu)
    }
}

/// Unchecked `d⁺`; `mu` must lie in `[0, 1]`.
#[inline]
pub(crate) fn dp(eps: f64, lam: f64, mu: f64) -> (f64, DivergenceRegime) {
    Budget::new(eps).dp(lam, mu)
}

/// Unchecked `d⁻`; `mu` must lie in `[0, 1]`.
#[inline]
pub(crate) fn dm(eps: f64, lam: f64, mu: f64) -> (f64, DivergenceRegime) {
    dp(eps, 1.0 - lam, 1.0 - mu)
}

/// Unsigned divergence `d_ε(λ, µ) = inf_z kl(z, µ) + ε|λ − z|` on `(0, 1)²`.
pub fn d_eps_unsigned(eps: f64, lam: f64, mu: f64) -> Result<f64> {
    ensure!(eps > 0.0, "eps = {eps} must be positive");
    ensure!(lam > 0.0 && lam < 1.0, "lam = {lam} is outside (0, 1)");
    ensure!(mu > 0.0 && mu < 1.0, "mu = {mu} is outside (0, 1)");
    Ok(if mu < lam {
        dm(eps, lam, mu).0
    } else if mu > lam {
        dp(eps, lam, mu).0
    } else {
        0.0
    })
}

/// `∂d⁺_ε/∂µ` for `µ > [λ]`.
pub fn d_plus_dmu(eps: f64, lam: f64, mu: f64) -> Result<f64> {
    let mu = check_eps_mu(eps, mu)?;
    let l = clip01(lam);
    ensure!(mu > l, "d_plus_dmu: mu = {mu} must exceed the clipped lam = {l}");
    Ok(dp_dmu(eps, lam, mu))
}

#[inline]
pub(crate) fn dp_dmu(eps: f64, lam: f64, mu: f64) -> f64 {
    let l = clip01(lam);
    if mu <= l {
        return 0.0;
    }
    let b = Budget::new(eps);
    if b.kl_branch(lam, l, mu) {
        (mu - lam) / (mu * (1.0 - mu))
    } else {
        b.one_minus_e / ((1.0 - mu) + mu * b.e)
    }
}

fn check_tilde(eps: f64, mu: f64, r: f64) -> Result<()> {
    ensure!(eps > 0.0, "eps = {eps} must be positive");
    ensure!(r > 0.0 && r.is_finite(), "r = {r} must be positive");
    ensure!(mu > 0.0 && mu < 1.0, "mu = {mu} is outside (0, 1)");
    Ok(())
}

/// Modified divergence `d̃⁺_ε(λ, µ, r)`.
pub fn d_tilde_plus(eps: f64, lam: f64, mu: f64, r: f64) -> Result<f64> {
    check_tilde(eps, mu, r)?;
    ensure!(!lam.is_nan(), "lam is NaN");
    Ok(d_tilde_plus_argmin(eps, lam, mu, r)?.0)
}

/// Modified divergence `d̃⁻_ε(λ, µ, r) = d̃⁺_ε(1 − λ, 1 − µ, r)`.
pub fn d_tilde_minus(eps: f64, lam: f64, mu: f64, r: f64) -> Result<f64> {
    check_tilde(eps, mu, r)?;
    ensure!(!lam.is_nan(), "lam is NaN");
    Ok(d_tilde_plus_argmin(eps, 1.0 - lam, 1.0 - mu, r)?.0)
}

/// Value and inner minimizer `z*` of `d̃⁺`. Returns `z* = µ` on the zero branch.
///
/// The stationarity condition
/// `ln(z(1 − µ) / ((1 − z)µ)) + ε h'(rε(z − λ)) = 0`
/// has a unique root in `(max([λ], g⁺_ε(µ)), µ)`.
pub(crate) fn d_tilde_plus_argmin(eps: f64, lam: f64, mu: f64, r: f64) -> Result<(f64, f64)> {
    let l = clip01(lam);
    if mu <= l {
        return Ok((0.0, mu));
    }
    let lo = l.max(g_plus(eps, mu));
    let (a, b) = (lo + BRACKET_SHRINK, mu - BRACKET_SHRINK);
    let z = if a >= b {
        0.5 * (lo + mu)
    } else {
        let re = r * eps;
        bisect_increasing(
            |z| (z / mu).ln() + ((1.0 - mu) / (1.0 - z)).ln() + eps * h_prime(re * (z - lam)),
            a,
            b,
            TILDE_REL_TOL,
            0.0,
            TILDE_CAP,
            "d_tilde",
        )?
    };
    let v = kl_ext(z, mu) + h(r * eps * (z - lam)) / r;
    Ok((v.max(0.0), z))
}

/// Solves `d̃⁺_ε(µ − x, µ, r) = c` (side plus) or `d̃⁻_ε(µ + x, µ, r) = c`
/// (side minus) for `x > 0`.
pub fn invert_d_tilde(eps: f64, mu: f64, r: f64, c: f64, side: Side) -> Result<f64> {
    check_tilde(eps, mu, r)?;
    ensure!(c > 0.0 && c.is_finite(), "c = {c} must be positive");
    let m = match side {
        Side::Plus => mu,
        Side::Minus => 1.0 - mu,
    };
    let g = |x: f64| d_tilde_plus_argmin(eps, m - x, m, r).map(|v| v.0);
    let mut hi = m.max(1e-3);
    let mut guard = 0;
    while g(hi)? < c {
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return Err(DomainError::Nonconvergence(format!("invert_d_tilde: level {c} is never reached")));
        }
    }
    let mut err = None;
    let x = bisect_increasing(
        |x| match g(x) {
            Ok(v) => v - c,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        0.0,
        hi,
        TILDE_REL_TOL,
        0.0,
        TILDE_CAP,
        "invert_d_tilde",
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(x),
    }
}

/// Upper bound on `d⁺ − d̃⁺` for clipped `λ`.
pub fn tilde_gap_upper(eps: f64, r: f64) -> f64 {
    ((1.0 + 2.0 * eps * r).ln() + 1.0) / r
}

/// Upper bound on `d̃⁺ − d⁺` for clipped `λ`.
pub fn tilde_gap_lower(r: f64) -> f64 {
    4.0_f64.ln() / r
}
