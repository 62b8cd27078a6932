//! Thresholds and stopping tests.
//!
//! ```text
//! c₁(n, δ) = W̄₋₁(ln(Kζ(s)/δ) + s ln k_η(n) + 3 − ln 2) − 3 + ln 2
//! c₂(n, ε) = k_η(n) (ln(1 + 2εn / k_η(n)) + 1)
//! ```
//!
//! The GLR rule stops at the first time every challenger `a` of the
//! recommendation `ã` satisfies `W_ε,ã,a(µ̃, Ñ) > c(Ñ_ã) + c(Ñ_a)`.

use crate::divergences::{clip01, Budget, PrivacyParams};
use crate::error::{ensure, Result};
use crate::policies::{lcb_index, ucb_index};
use crate::scalar::{k_eta_raw, lambert_bar, zeta, LN_2};
use crate::transport::{transport_cost_modified, transport_unchecked, transport_with};

/// Hard cap on the number of pulls in one run.
pub const DEFAULT_PULL_CAP: u64 = 10_000_000;

/// Threshold family used by the GLR rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ThresholdMode {
    /// The calibrated `c₁ + c₂`.
    #[default]
    Exact,
    /// `ln((1 + ln n)K/δ) + c₂`, for exploratory runs.
    Heuristic,
}

impl std::str::FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(Self::Exact),
            "heuristic" => Ok(Self::Heuristic),
            other => Err(format!("unknown threshold mode '{other}' (expected exact or heuristic)")),
        }
    }
}

impl std::fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Heuristic => "heuristic",
        })
    }
}

/// Per-arm thresholds for a fixed `(ε, δ, η, K, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub params: PrivacyParams,
    pub num_arms: usize,
    pub s: f64,
    pub mode: ThresholdMode,
    log_base: f64,
}

impl Thresholds {
    pub fn new(params: PrivacyParams, num_arms: usize, s: f64, mode: ThresholdMode) -> Result<Self> {
        ensure!(num_arms >= 1, "num_arms must be positive");
        let z = zeta(s)?;
        let log_base = (num_arms as f64 * z / params.delta).ln();
        Ok(Self { params, num_arms, s, mode, log_base })
    }

    /// `(c₁, c₂)` at count `n`.
    pub fn parts(&self, n: f64) -> Result<(f64, f64)> {
        ensure!(n >= 1.0, "threshold count n = {n} is below 1");
        let k = k_eta_raw(self.params.eta, n);
        let c1 = match self.mode {
            ThresholdMode::Exact => self.c_tilde_raw(k)?,
            ThresholdMode::Heuristic => ((1.0 + n.ln()) * self.num_arms as f64 / self.params.delta).ln(),
        };
        let c2 = k * ((2.0 * self.params.eps * n / k).ln_1p() + 1.0);
        Ok((c1, c2))
    }

    /// `c(n) = c₁(n) + c₂(n)`.
    pub fn total(&self, n: f64) -> Result<f64> {
        let (a, b) = self.parts(n)?;
        Ok(a + b)
    }

    /// `c̃(k)`, the threshold of the modified rule at phase `k`.
    pub fn c_tilde(&self, k: f64) -> Result<f64> {
        ensure!(k >= 1.0, "phase index k = {k} is below 1");
        self.c_tilde_raw(k)
    }

    fn c_tilde_raw(&self, k: f64) -> Result<f64> {
        Ok(lambert_bar(self.log_base + self.s * k.ln() + 3.0 - LN_2)? - 3.0 + LN_2)
    }
}

/// `(c₁, c₂)` with exact constants.
pub fn threshold_c(n: f64, params: &PrivacyParams, s: f64, num_arms: usize) -> Result<(f64, f64)> {
    Thresholds::new(*params, num_arms, s, ThresholdMode::Exact)?.parts(n)
}

/// Outcome of a stopping test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopDecision {
    pub stop: bool,
    pub recommendation: usize,
    /// Challenger with the smallest margin.
    pub binding_challenger: Option<usize>,
    pub statistic: f64,
    pub threshold: f64,
}

/// Largest clipped noisy mean, lowest index on ties.
pub fn recommend(mu_tilde: &[f64]) -> usize {
    let mut best = 0;
    for a in 1..mu_tilde.len() {
        if clip01(mu_tilde[a]) > clip01(mu_tilde[best]) {
            best = a;
        }
    }
    best
}

fn pairwise<S, T>(mu_tilde: &[f64], mut stat: S, mut threshold: T) -> Result<StopDecision>
where
    S: FnMut(usize, usize) -> Result<f64>,
    T: FnMut(usize) -> Result<f64>,
{
    ensure!(mu_tilde.len() >= 2, "stopping needs at least two arms");
    let rec = recommend(mu_tilde);
    let c_rec = threshold(rec)?;
    let mut worst: Option<(f64, usize, f64, f64)> = None;
    for a in (0..mu_tilde.len()).filter(|&a| a != rec) {
        let w = stat(rec, a)?;
        let c = c_rec + threshold(a)?;
        let margin = w - c;
        if worst.map_or(true, |(m, ..)| margin < m) {
            worst = Some((margin, a, w, c));
        }
    }
    let (margin, a, w, c) = worst.expect("at least one challenger");
    Ok(StopDecision {
        stop: margin > 0.0,
        recommendation: rec,
        binding_challenger: Some(a),
        statistic: w,
        threshold: c,
    })
}

/// GLR test on noisy means and phase-start counts `Ñ`.
pub fn glr_stop(thresholds: &Thresholds, mu_tilde: &[f64], n_tilde: &[u64]) -> Result<StopDecision> {
    ensure!(mu_tilde.len() == n_tilde.len(), "means and counts differ in length");
    let eps = thresholds.params.eps;
    pairwise(
        mu_tilde,
        |b, a| Ok(transport_unchecked(eps, mu_tilde[b], mu_tilde[a], n_tilde[b] as f64, n_tilde[a] as f64).value),
        |a| thresholds.total(n_tilde[a] as f64),
    )
}

/// GLR test with precomputed per-arm thresholds `c(Ñ_a)`.
pub(crate) fn glr_stop_cached(eps: f64, mu_tilde: &[f64], n_tilde: &[u64], c: &[f64]) -> StopDecision {
    let budget = Budget::new(eps);
    pairwise(
        mu_tilde,
        |b, a| Ok(transport_with(&budget, mu_tilde[b], mu_tilde[a], n_tilde[b] as f64, n_tilde[a] as f64).value),
        |a| Ok(c[a]),
    )
    .expect("infallible statistic")
}

/// Modified GLR test: `W̃` against `c̃(k_ã) + c̃(k_a)`.
pub fn modified_glr_stop(
    thresholds: &Thresholds,
    mu_tilde: &[f64],
    n_tilde: &[u64],
    k: &[u32],
) -> Result<StopDecision> {
    ensure!(mu_tilde.len() == n_tilde.len() && k.len() == n_tilde.len(), "snapshot vectors differ in length");
    let p = thresholds.params;
    pairwise(
        mu_tilde,
        |b, a| {
            transport_cost_modified(p.eps, p.eta, mu_tilde[b], mu_tilde[a], n_tilde[b] as f64, n_tilde[a] as f64)
                .map(|r| r.value)
        },
        |a| thresholds.c_tilde(k[a] as f64),
    )
}

/// LUCB test: the leader's lower index clears the challenger's upper index.
pub fn lucb_stop(
    eps: f64,
    mu_tilde: &[f64],
    counts: &[u64],
    n: u64,
    leader: usize,
    challenger: usize,
) -> Result<StopDecision> {
    ensure!(leader != challenger, "leader and challenger coincide");
    let lower = lcb_index(eps, mu_tilde[leader], counts[leader], n)?;
    let upper = ucb_index(eps, mu_tilde[challenger], counts[challenger], n)?;
    Ok(StopDecision {
        stop: lower > upper,
        recommendation: leader,
        binding_challenger: Some(challenger),
        statistic: lower,
        threshold: upper,
    })
}
