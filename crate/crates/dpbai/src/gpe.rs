//! Geometric private estimator.
//!
//! Each arm runs phases of geometrically growing length. When the raw count
//! `N` of an arm reaches `(1 + η)^k` the phase index `k` moves on, the
//! observations collected since the last switch are added to the running
//! sum together with one fresh `Lap(1/ε)` draw, and the noisy mean becomes
//! `µ̃ = S̃ / Ñ` with `Ñ = N` at the switch. Nothing is forgotten across
//! phases, and noisy values only move at switches.

use rand::distr::Open01;
use rand::Rng;

use crate::divergences::PrivacyParams;
use crate::error::{ensure, Result};

/// One draw of `Lap(scale)` by inversion of a uniform in `(0, 1)`.
#[inline]
pub fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    let c = u - 0.5;
    -scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

/// Read-only copy of the private statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub mu_tilde: Vec<f64>,
    pub n_tilde: Vec<u64>,
    pub k: Vec<u32>,
    pub n: Vec<u64>,
}

/// Per-arm state of the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Gpe {
    eps: f64,
    growth: f64,
    noise_on: bool,
    k: Vec<u32>,
    n: Vec<u64>,
    n_tilde: Vec<u64>,
    s_tilde: Vec<f64>,
    mu_tilde: Vec<f64>,
    pending: Vec<u64>,
    trigger: Vec<f64>,
    phase_sums: Vec<Vec<u64>>,
    noise_draws: Vec<u32>,
    version: u64,
}

impl Gpe {
    /// Starts every arm from one raw observation, `k = N = Ñ = 1`.
    pub fn init<R: Rng + ?Sized>(params: &PrivacyParams, first: &[u8], noise: &mut R) -> Result<Self> {
        Self::build(params, first, noise, true)
    }

    /// As [`Gpe::init`] but never adds noise; a non-private baseline.
    pub fn init_noiseless<R: Rng + ?Sized>(params: &PrivacyParams, first: &[u8], noise: &mut R) -> Result<Self> {
        Self::build(params, first, noise, false)
    }

    fn build<R: Rng + ?Sized>(params: &PrivacyParams, first: &[u8], noise: &mut R, noise_on: bool) -> Result<Self> {
        let k = first.len();
        ensure!(k >= 2, "the estimator needs at least two arms, got {k}");
        for (a, &x) in first.iter().enumerate() {
            ensure!(x <= 1, "reward {x} of arm {a} is not in {{0, 1}}");
        }
        let growth = 1.0 + params.eta;
        let mut g = Self {
            eps: params.eps,
            growth,
            noise_on,
            k: vec![1; k],
            n: vec![1; k],
            n_tilde: vec![1; k],
            s_tilde: vec![0.0; k],
            mu_tilde: vec![0.0; k],
            pending: vec![0; k],
            trigger: vec![growth; k],
            phase_sums: first.iter().map(|&x| vec![x as u64]).collect(),
            noise_draws: vec![0; k],
            version: 0,
        };
        for a in 0..k {
            let y = g.draw(a, noise);
            g.s_tilde[a] = first[a] as f64 + y;
            g.mu_tilde[a] = g.s_tilde[a];
        }
        Ok(g)
    }

    #[inline]
    fn draw<R: Rng + ?Sized>(&mut self, arm: usize, noise: &mut R) -> f64 {
        if !self.noise_on {
            return 0.0;
        }
        self.noise_draws[arm] += 1;
        laplace(noise, 1.0 / self.eps)
    }

    pub fn num_arms(&self) -> usize {
        self.k.len()
    }

    /// Stores a raw reward without touching the private statistics.
    #[inline]
    pub fn record(&mut self, arm: usize, reward: u8) -> Result<()> {
        ensure!(arm < self.num_arms(), "arm {arm} is out of range");
        ensure!(reward <= 1, "reward {reward} is not in {{0, 1}}");
        self.n[arm] += 1;
        self.pending[arm] += reward as u64;
        Ok(())
    }

    /// Closes the current phase of `arm` if its count reached `(1 + η)^k`.
    #[inline]
    pub fn maybe_advance<R: Rng + ?Sized>(&mut self, arm: usize, noise: &mut R) -> bool {
        if (self.n[arm] as f64) < self.trigger[arm] {
            return false;
        }
        self.k[arm] += 1;
        self.trigger[arm] = self.growth.powi(self.k[arm] as i32);
        self.n_tilde[arm] = self.n[arm];
        let sum = self.pending[arm];
        self.pending[arm] = 0;
        self.phase_sums[arm].push(sum);
        let y = self.draw(arm, noise);
        self.s_tilde[arm] += sum as f64 + y;
        self.mu_tilde[arm] = self.s_tilde[arm] / self.n_tilde[arm] as f64;
        self.version += 1;
        true
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            mu_tilde: self.mu_tilde.clone(),
            n_tilde: self.n_tilde.clone(),
            k: self.k.clone(),
            n: self.n.clone(),
        }
    }

    /// Noisy means `µ̃`, unclipped.
    #[inline]
    pub fn mu_tilde(&self) -> &[f64] {
        &self.mu_tilde
    }

    /// Raw counts at the last phase switch, `Ñ`.
    #[inline]
    pub fn n_tilde(&self) -> &[u64] {
        &self.n_tilde
    }

    /// Raw counts `N`.
    #[inline]
    pub fn counts(&self) -> &[u64] {
        &self.n
    }

    /// Phase indices `k`.
    #[inline]
    pub fn phases(&self) -> &[u32] {
        &self.k
    }

    /// Accumulated noisy sums `S̃`.
    pub fn noisy_sums(&self) -> &[f64] {
        &self.s_tilde
    }

    /// Raw reward sums since the last switch.
    pub fn pending(&self) -> &[u64] {
        &self.pending
    }

    /// Raw reward sum of each closed phase of `arm`, oldest first.
    pub fn phase_sums(&self, arm: usize) -> &[u64] {
        &self.phase_sums[arm]
    }

    /// Laplace draws consumed by `arm` so far.
    pub fn noise_draws(&self, arm: usize) -> u32 {
        self.noise_draws[arm]
    }

    /// Increments whenever any arm switches phase.
    #[inline]
    pub fn version(&self) -> u64 {
        self.version
    }
}
