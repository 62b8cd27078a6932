//! Characteristic time `T*_ε` and optimal allocation `w*_ε`.
//!
//! For each suboptimal arm `a` the map
//! `G_a(x) = inf_u d⁻_ε(µ*, u) + x d⁺_ε(µ_a, u)` increases from 0 to
//! `d⁻_ε(µ*, µ_a)`. Writing `x_a(y)` for its inverse, the optimal ratios
//! `w_a / w_a*` are `x_a(y*)` where `y*` solves
//!
//! ```text
//! F(y) = Σ_{a≠a*} d⁻_ε(µ*, u_a) / d⁺_ε(µ_a, u_a) = 1
//! ```
//!
//! with `u_a` the minimizer inside `G_a(x_a(y))`.

use crate::divergences::{dm, dp};
use crate::error::{ensure, DomainError, Result};
use crate::scalar::{bisect_increasing, g_minus};
use crate::transport::transport_unchecked;

const ORACLE_REL_TOL: f64 = 1e-10;
const ORACLE_CAP: usize = 200;
const ENDPOINT_SHRINK: f64 = 1e-12;
const NEAR_DEGENERATE_WEIGHT: f64 = 1e-6;

/// Bernoulli bandit with a unique best arm.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    means: Vec<f64>,
    best: usize,
}

impl BanditInstance {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        ensure!(means.len() >= 2, "an instance needs at least two arms, got {}", means.len());
        for (a, &m) in means.iter().enumerate() {
            ensure!(m > 0.0 && m < 1.0, "mean of arm {a} is {m}, outside (0, 1)");
        }
        let top = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..means.len()).filter(|&a| means[a] == top).collect();
        if winners.len() > 1 {
            return Err(DomainError::DegenerateInstance(format!("arms {winners:?} share the best mean {top}")));
        }
        Ok(Self { best: winners[0], means })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// Index of the unique best arm.
    pub fn best_arm(&self) -> usize {
        self.best
    }

    fn others(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k()).filter(move |&a| a != self.best)
    }
}

/// Output of the characteristic-time solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub t_star: f64,
    pub w_star: Vec<f64>,
    /// Common value of `G_a(x_a)` at the solution.
    pub y_star: f64,
    /// Ratios `w_a / w_a*`, with 1 at the best arm.
    pub per_arm_x: Vec<f64>,
    pub best_arm: usize,
}

impl OracleSolution {
    /// Some weight is below `10⁻⁶`, so the allocation is numerically fragile.
    pub fn is_near_degenerate(&self) -> bool {
        self.w_star.iter().any(|&w| w < NEAR_DEGENERATE_WEIGHT)
    }
}

/// Inverse of `G_a` and the minimizer at the solution.
fn invert_g(eps: f64, top: f64, mu: f64, y: f64) -> Result<(f64, f64)> {
    let g = |x: f64| transport_unchecked(eps, top, mu, 1.0, x);
    if y <= 0.0 {
        return Ok((0.0, top));
    }
    let mut hi = 1.0;
    let mut guard = 0;
    while g(hi).value < y {
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return Err(DomainError::Nonconvergence(format!("level {y} is above the reach of G for mean {mu}")));
        }
    }
    let x = bisect_increasing(|x| g(x).value - y, 0.0, hi, ORACLE_REL_TOL, 0.0, ORACLE_CAP, "x_a(y)")?;
    Ok((x, g(x).minimizer_u))
}

fn ceilings(eps: f64, inst: &BanditInstance) -> f64 {
    let top = inst.means[inst.best];
    inst.others().map(|a| dm(eps, top, inst.means[a]).0).fold(f64::INFINITY, f64::min)
}

/// Per-arm ratios `x_a(y)` and `F(y)`.
fn ratios_at(eps: f64, inst: &BanditInstance, y: f64) -> Result<(Vec<f64>, f64)> {
    let top = inst.means[inst.best];
    let mut x = vec![1.0; inst.k()];
    let mut f = 0.0;
    for a in inst.others() {
        let (xa, u) = invert_g(eps, top, inst.means[a], y)?;
        x[a] = xa;
        let den = dp(eps, inst.means[a], u).0;
        f += if den > 0.0 { dm(eps, top, u).0 / den } else { f64::INFINITY };
    }
    Ok((x, f))
}

/// `F(y)` on `[0, min_a d⁻_ε(µ*, µ_a))`.
pub fn fixed_point_map(eps: f64, instance: &BanditInstance, y: f64) -> Result<f64> {
    check_eps(eps)?;
    ensure!(y >= 0.0 && y < ceilings(eps, instance), "y = {y} is outside the domain of F");
    Ok(ratios_at(eps, instance, y)?.1)
}

fn check_eps(eps: f64) -> Result<()> {
    ensure!(eps > 0.0 && eps.is_finite(), "eps = {eps} must be positive");
    Ok(())
}

/// Solves for `T*_ε` and `w*_ε`.
pub fn characteristic_time(eps: f64, instance: &BanditInstance) -> Result<OracleSolution> {
    check_eps(eps)?;
    let y_max = ceilings(eps, instance) * (1.0 - ENDPOINT_SHRINK);
    let mut err = None;
    let y = bisect_increasing(
        |y| match ratios_at(eps, instance, y) {
            Ok((_, f)) => f - 1.0,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        0.0,
        y_max,
        ORACLE_REL_TOL,
        0.0,
        ORACLE_CAP,
        "characteristic_time",
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let (x, _) = ratios_at(eps, instance, y)?;
    let total: f64 = x.iter().sum();
    let w_best = 1.0 / total;
    Ok(OracleSolution {
        t_star: total / y,
        w_star: x.iter().map(|&xa| xa * w_best).collect(),
        y_star: y,
        per_arm_x: x,
        best_arm: instance.best,
    })
}

/// `T*_ε,β` and `w*_ε,β`, the optimum with the best arm's weight fixed at `β`.
pub fn beta_characteristic_time(eps: f64, instance: &BanditInstance, beta: f64) -> Result<OracleSolution> {
    check_eps(eps)?;
    ensure!(beta > 0.0 && beta < 1.0, "beta = {beta} is outside (0, 1)");
    let z_max = ceilings(eps, instance) * (1.0 - ENDPOINT_SHRINK);
    let target = (1.0 - beta) / beta;
    let sum_x = |z: f64| ratios_at(eps, instance, z).map(|(x, _)| x.iter().sum::<f64>() - 1.0);
    let mut err = None;
    let z = bisect_increasing(
        |z| match sum_x(z) {
            Ok(s) => s - target,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        0.0,
        z_max,
        ORACLE_REL_TOL,
        0.0,
        ORACLE_CAP,
        "beta_characteristic_time",
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let (x, _) = ratios_at(eps, instance, z)?;
    let mut w: Vec<f64> = x.iter().map(|&xa| beta * xa).collect();
    w[instance.best] = beta;
    Ok(OracleSolution { t_star: 1.0 / (beta * z), w_star: w, y_star: z, per_arm_x: x, best_arm: instance.best })
}

/// Explicit lower bound `1/Δ_a* + Σ_{a≠a*} 1/Δ_a` on `T*_ε`.
pub fn lower_bound_time(eps: f64, instance: &BanditInstance) -> Result<f64> {
    check_eps(eps)?;
    let top = instance.means[instance.best];
    let mut sum = 1.0 / ceilings(eps, instance);
    for a in instance.others() {
        sum += 1.0 / dp(eps, instance.means[a], top).0;
    }
    Ok(sum)
}

/// Pairwise privacy levels `ε_a,b = ln(µ_a(1 − µ_b) / (µ_b(1 − µ_a)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeBoundary {
    /// Full antisymmetric matrix indexed by `[a][b]`.
    pub eps_ab: Vec<Vec<f64>>,
    /// `ε_a*,a` per arm, 0 at the best arm.
    pub versus_best: Vec<f64>,
    /// Largest `ε_a*,a`; above it `T*_ε` equals the non-private value.
    pub max_boundary: f64,
}

/// Allocation-independent boundary between the two privacy regimes.
pub fn regime_boundary(instance: &BanditInstance) -> RegimeBoundary {
    let m = instance.means();
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let eps_ab: Vec<Vec<f64>> = m.iter().map(|&a| m.iter().map(|&b| logit(a) - logit(b)).collect()).collect();
    let versus_best = eps_ab[instance.best].clone();
    let max_boundary = versus_best.iter().cloned().fold(0.0, f64::max);
    RegimeBoundary { eps_ab, versus_best, max_boundary }
}

/// Allocation-dependent sufficient condition for `W_ε,a,b = W_a,b`.
pub fn low_privacy_check(eps: f64, instance: &BanditInstance, w: &[f64], a: usize, b: usize) -> Result<bool> {
    check_eps(eps)?;
    let m = instance.means();
    ensure!(w.len() == m.len(), "weight vector has {} entries for {} arms", w.len(), m.len());
    ensure!(a < m.len() && b < m.len(), "arm index out of range");
    let (ma, mb, wa, wb) = (m[a], m[b], w[a], w[b]);
    ensure!(ma > mb, "mu_a = {ma} must exceed mu_b = {mb}");
    ensure!(wa > 0.0 && wb > 0.0, "weights must be positive");
    let left = (1.0 + wa / wb) * ma * g_minus(eps, 1.0 - ma);
    let right = (1.0 + wb / wa) * (1.0 - mb) * g_minus(eps, mb);
    Ok(ma - mb <= -(-eps).exp_m1() * left.min(right))
}
