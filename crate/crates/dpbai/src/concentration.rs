//! Monte Carlo checks of the tail bounds behind the stopping thresholds.
//!
//! Each check estimates an exceedance frequency and compares it with the
//! analytic bound. A report passes when the frequency stays below the bound
//! plus three binomial standard errors; deep-tail bounds use an exact
//! one-sided Clopper–Pearson interval instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::divergences::d_tilde_plus_argmin;
use crate::error::{ensure, Result};
use crate::gpe::laplace;
use crate::scalar::{f_envelope, h, lambert_bar, zeta, LN_2};

/// Version tag of [`validation_manifest`].
pub const MANIFEST_VERSION: &str = "v1";

const CHUNK: u64 = 20_000;
/// One-sided level matching three standard errors.
const CP_LEVEL: f64 = 0.001_35;

/// Outcome of one tail check.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub lemma_id: String,
    pub trials: u64,
    pub violations: u64,
    /// Analytic upper bound on the exceedance probability.
    pub bound: f64,
    /// Largest frequency compatible with the bound.
    pub allowed: f64,
    /// `allowed − violations / trials`; nonnegative for a passing report.
    pub bound_margin: f64,
}

impl TailReport {
    fn new(lemma_id: &str, trials: u64, violations: u64, bound: f64) -> Self {
        let freq = violations as f64 / trials as f64;
        let allowed = allowed_frequency(bound, trials, violations);
        Self { lemma_id: lemma_id.to_string(), trials, violations, bound, allowed, bound_margin: allowed - freq }
    }

    pub fn frequency(&self) -> f64 {
        self.violations as f64 / self.trials as f64
    }

    pub fn passed(&self) -> bool {
        self.bound_margin >= 0.0
    }
}

/// Largest empirical frequency that is still consistent with `bound`.
fn allowed_frequency(bound: f64, trials: u64, violations: u64) -> f64 {
    if bound >= 1.0 {
        return 1.0;
    }
    let n = trials as f64;
    if n * bound * (1.0 - bound) >= 9.0 {
        return bound + 3.0 * (bound * (1.0 - bound) / n).sqrt();
    }
    // the exact lower confidence limit must stay below the bound
    let freq = violations as f64 / n;
    if violations == 0 || clopper_pearson_lower(violations, trials) <= bound {
        freq.max(bound)
    } else {
        bound
    }
}

/// One-sided Clopper–Pearson lower limit at level [`CP_LEVEL`].
pub fn clopper_pearson_lower(successes: u64, trials: u64) -> f64 {
    if successes == 0 {
        return 0.0;
    }
    let b = Beta::new(successes as f64, (trials - successes + 1) as f64).expect("valid beta parameters");
    b.inverse_cdf(CP_LEVEL)
}

/// Counts exceedances over `trials` split into fixed chunks with their own streams.
fn count_parallel<F>(trials: u64, seed: u64, f: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let len = CHUNK.min(trials - c * CHUNK);
            (0..len).filter(|_| f(&mut rng)).count() as u64
        })
        .sum()
}

fn laplace_sum<R: Rng>(rng: &mut R, n: u64, scale: f64) -> f64 {
    (0..n).map(|_| laplace(rng, scale)).sum()
}

/// `P(S_t ≥ tx) ≤ exp(−t h(εx))` for a sum of `t` draws of `Lap(1/ε)`;
/// `lower` checks the mirrored tail.
pub fn laplace_tail_check(eps: f64, t: u64, x: f64, trials: u64, lower: bool, seed: u64) -> Result<TailReport> {
    ensure!(eps > 0.0 && x > 0.0 && t >= 1, "need eps > 0, x > 0 and t ≥ 1");
    ensure!(trials >= 100_000, "trials = {trials} is below 10⁵");
    let bound = (-(t as f64) * h(eps * x)).exp();
    let level = t as f64 * x;
    let v = count_parallel(trials, seed, |rng| {
        let s = laplace_sum(rng, t, 1.0 / eps);
        if lower {
            s <= -level
        } else {
            s >= level
        }
    });
    let id = if lower { "laplace-lower" } else { "laplace-upper" };
    Ok(TailReport::new(id, trials, v, bound))
}

/// `P(Z_t + S_t ≥ t(µ + x)) ≤ f(t d̃⁻_ε(µ + x, µ, t/n_t))` for `Z_t` a sum of
/// `t` Bernoulli(µ) and `S_t` a sum of `n_t` draws of `Lap(1/ε)`; `lower`
/// checks `≤ t(µ − x)` against `d̃⁺_ε`.
#[allow(clippy::too_many_arguments)]
pub fn convolution_tail_check(
    eps: f64,
    mu: f64,
    t: u64,
    n_t: u64,
    x: f64,
    trials: u64,
    lower: bool,
    seed: u64,
) -> Result<TailReport> {
    ensure!(eps > 0.0 && x > 0.0, "need eps > 0 and x > 0");
    ensure!(mu > 0.0 && mu < 1.0, "mu = {mu} is outside (0, 1)");
    ensure!(n_t >= 1 && n_t <= t, "need 1 ≤ n_t ≤ t");
    ensure!(trials >= 100_000, "trials = {trials} is below 10⁵");
    let r = t as f64 / n_t as f64;
    let tf = t as f64;
    let div = if lower {
        d_tilde_plus_argmin(eps, mu - x, mu, r)?.0
    } else {
        d_tilde_plus_argmin(eps, 1.0 - (mu + x), 1.0 - mu, r)?.0
    };
    let bound = f_envelope(tf * div);
    let binom = Binomial::new(t, mu).expect("valid binomial");
    let v = count_parallel(trials, seed, |rng| {
        let total = binom.sample(rng) as f64 + laplace_sum(rng, n_t, 1.0 / eps);
        if lower {
            total <= tf * (mu - x)
        } else {
            total >= tf * (mu + x)
        }
    });
    let id = if lower { "convolution-lower" } else { "convolution-upper" };
    Ok(TailReport::new(id, trials, v, bound))
}

/// `c̃(k, δ)` for one arm.
fn single_arm_threshold(delta: f64, s: f64, k: f64) -> Result<f64> {
    Ok(lambert_bar((zeta(s)? / delta).ln() + s * k.ln() + 3.0 - LN_2)? - 3.0 + LN_2)
}

/// Result of [`geometric_grid_uniform_check`]: one report per tail.
#[derive(Debug, Clone, PartialEq)]
pub struct GridReports {
    pub upper: TailReport,
    pub lower: TailReport,
    /// Statistic evaluations per trial, one per phase start.
    pub evaluations_per_trial: u64,
}

/// Time-uniform deviation of a single-arm private estimator, tested only at
/// phase starts: the event that `Ñ d̃⁻_ε(µ̃, µ, Ñ/k) > c̃(k, δ)` ever happens
/// before `horizon` (and its `d̃⁺_ε` twin) has frequency at most `δ`.
#[allow(clippy::too_many_arguments)]
pub fn geometric_grid_uniform_check(
    eps: f64,
    eta: f64,
    mu: f64,
    horizon: u64,
    trials: u64,
    s: f64,
    delta: f64,
    seed: u64,
) -> Result<GridReports> {
    ensure!(eps > 0.0 && eta > 0.0, "need eps > 0 and eta > 0");
    ensure!(mu > 0.0 && mu < 1.0, "mu = {mu} is outside (0, 1)");
    ensure!(trials >= 1000, "trials = {trials} is below 10³");
    ensure!(horizon >= 1, "horizon must be positive");
    let growth = 1.0 + eta;
    // phase starts (k, Ñ) of the estimator up to the horizon
    let mut starts = vec![(1u32, 1u64)];
    let (mut k, mut n) = (1u32, 1u64);
    loop {
        let next = (n + 1).max(growth.powi(k as i32).ceil() as u64);
        if next > horizon {
            break;
        }
        n = next;
        k += 1;
        starts.push((k, n));
    }
    let thresholds: Vec<f64> =
        starts.iter().map(|&(k, _)| single_arm_threshold(delta, s, k as f64)).collect::<Result<_>>()?;
    let chunks = trials.div_ceil(CHUNK);
    let scale = 1.0 / eps;
    let counts: Result<Vec<(u64, u64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let len = CHUNK.min(trials - c * CHUNK);
            let (mut up, mut down) = (0, 0);
            for _ in 0..len {
                let (mut hit_up, mut hit_down) = (false, false);
                let mut sum = 0.0;
                let mut prev = 0u64;
                for (i, &(k, nt)) in starts.iter().enumerate() {
                    let fresh = nt - prev;
                    if fresh > 0 {
                        sum += Binomial::new(fresh, mu).expect("valid binomial").sample(&mut rng) as f64;
                    }
                    sum += laplace(&mut rng, scale);
                    prev = nt;
                    let m = sum / nt as f64;
                    let r = nt as f64 / k as f64;
                    let ntf = nt as f64;
                    if !hit_up && m > mu {
                        hit_up = ntf * d_tilde_plus_argmin(eps, 1.0 - m, 1.0 - mu, r)?.0 > thresholds[i];
                    }
                    if !hit_down && m < mu {
                        hit_down = ntf * d_tilde_plus_argmin(eps, m, mu, r)?.0 > thresholds[i];
                    }
                }
                up += hit_up as u64;
                down += hit_down as u64;
            }
            Ok((up, down))
        })
        .collect();
    let (up, down) = counts?.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(GridReports {
        upper: TailReport::new("grid-upper", trials, up, delta),
        lower: TailReport::new("grid-lower", trials, down, delta),
        evaluations_per_trial: starts.len() as u64,
    })
}

/// One row of the validation manifest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValidationCase {
    Laplace { eps: f64, t: u64, x: f64, trials: u64 },
    Convolution { eps: f64, mu: f64, t: u64, n_t: u64, x: f64, trials: u64 },
    Grid { eps: f64, eta: f64, mu: f64, horizon: u64, trials: u64, s: f64, delta: f64 },
}

impl ValidationCase {
    /// Family name: `laplace`, `convolution` or `grid`.
    pub fn family(&self) -> &'static str {
        match self {
            Self::Laplace { .. } => "laplace",
            Self::Convolution { .. } => "convolution",
            Self::Grid { .. } => "grid",
        }
    }

    /// Runs both tails of the case.
    pub fn run(&self, seed: u64) -> Result<Vec<TailReport>> {
        Ok(match *self {
            Self::Laplace { eps, t, x, trials } => vec![
                laplace_tail_check(eps, t, x, trials, false, seed)?,
                laplace_tail_check(eps, t, x, trials, true, seed ^ 1)?,
            ],
            Self::Convolution { eps, mu, t, n_t, x, trials } => vec![
                convolution_tail_check(eps, mu, t, n_t, x, trials, false, seed)?,
                convolution_tail_check(eps, mu, t, n_t, x, trials, true, seed ^ 1)?,
            ],
            Self::Grid { eps, eta, mu, horizon, trials, s, delta } => {
                let g = geometric_grid_uniform_check(eps, eta, mu, horizon, trials, s, delta, seed)?;
                vec![g.upper, g.lower]
            }
        })
    }

    /// Parameters as `key=value` pairs separated by spaces.
    pub fn describe(&self) -> String {
        match *self {
            Self::Laplace { eps, t, x, trials } => format!("eps={eps} t={t} x={x} trials={trials}"),
            Self::Convolution { eps, mu, t, n_t, x, trials } => {
                format!("eps={eps} mu={mu} t={t} n_t={n_t} x={x} trials={trials}")
            }
            Self::Grid { eps, eta, mu, horizon, trials, s, delta } => {
                format!("eps={eps} eta={eta} mu={mu} horizon={horizon} trials={trials} s={s} delta={delta}")
            }
        }
    }
}

/// Fixed parameter grid run by the `validate` command.
pub fn validation_manifest() -> Vec<ValidationCase> {
    use ValidationCase::*;
    vec![
        Laplace { eps: 1.0, t: 10, x: 0.5, trials: 1_000_000 },
        Laplace { eps: 0.2, t: 4, x: 5.0, trials: 1_000_000 },
        Convolution { eps: 1.0, mu: 0.5, t: 64, n_t: 7, x: 0.15, trials: 1_000_000 },
        Convolution { eps: 1.0, mu: 0.5, t: 64, n_t: 64, x: 0.4, trials: 1_000_000 },
        Convolution { eps: 0.5, mu: 0.3, t: 100, n_t: 10, x: 0.2, trials: 1_000_000 },
        Grid { eps: 1.0, eta: 1.0, mu: 0.5, horizon: 10_000, trials: 2000, s: 2.0, delta: 0.1 },
        Grid { eps: 1e6, eta: 1.0, mu: 0.5, horizon: 10_000, trials: 2000, s: 2.0, delta: 0.1 },
    ]
}
