//! Sampling rules.
//!
//! Top Two rules pick a leader and a challenger and pull one of them:
//! DP-TT uses the empirical-best leader, the TCI challenger
//! `argmin_{a≠B} W_ε,B,a(µ̃, N) + ln N_a` and per-leader β-tracking.
//! Variants swap the leader (UCB, IMED), the challenger (TC) or the
//! target (IDS, BOLD). Track-and-Stop and LUCB are also provided.
//!
//! Every tie-break draws from the run's policy stream in the order
//! leader, challenger, target.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::divergences::{clip01, dm, dp, Budget};
use crate::error::{ensure, DomainError, Result};
use crate::oracle::{characteristic_time, BanditInstance};
use crate::scalar::bisect_increasing;
use crate::transport::{transport_terms, transport_unchecked, ArmTerms};

const INDEX_REL_TOL: f64 = 1e-15;
const INDEX_CAP: usize = 200;

/// Sampling rule selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PolicyKind {
    #[default]
    DpTt,
    DpTtTc,
    DpTtUcbLeader,
    DpTtImedLeader,
    DpTtIds,
    DpTtBold,
    Tas,
    Lucb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        Self::DpTt,
        Self::DpTtTc,
        Self::DpTtUcbLeader,
        Self::DpTtImedLeader,
        Self::DpTtIds,
        Self::DpTtBold,
        Self::Tas,
        Self::Lucb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::DpTt => "dp-tt",
            Self::DpTtTc => "dp-tt-tc",
            Self::DpTtUcbLeader => "dp-tt-ucb-leader",
            Self::DpTtImedLeader => "dp-tt-imed-leader",
            Self::DpTtIds => "dp-tt-ids",
            Self::DpTtBold => "dp-tt-bold",
            Self::Tas => "tas",
            Self::Lucb => "lucb",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown policy '{s}'"))
    }
}

/// What a sampling rule decided at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyChoice {
    pub leader: usize,
    pub challenger: usize,
    pub pulled: usize,
    /// Second arm pulled in the same round (LUCB only).
    pub also_pulled: Option<usize>,
    /// Random draws spent on ties and randomized targets.
    pub rng_events: u32,
}

/// Index of the optimal score; exact ties are broken uniformly by
/// reservoir sampling.
fn pick<R, F>(k: usize, skip: Option<usize>, mut score: F, maximize: bool, rng: &mut R, events: &mut u32) -> usize
where
    R: Rng + ?Sized,
    F: FnMut(usize) -> f64,
{
    let mut best = f64::NAN;
    let mut chosen = usize::MAX;
    let mut ties = 0u32;
    for a in (0..k).filter(|&a| Some(a) != skip) {
        let v = score(a);
        let better = if maximize { v > best } else { v < best };
        if chosen == usize::MAX || better {
            best = v;
            chosen = a;
            ties = 1;
        } else if v == best {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                chosen = a;
            }
        }
    }
    if ties > 1 {
        *events += 1;
    }
    chosen
}

/// Argmax of clipped noisy means, ties uniform.
pub fn eb_leader<R: Rng + ?Sized>(mu_tilde: &[f64], rng: &mut R) -> usize {
    let mut events = 0;
    pick(mu_tilde.len(), None, |a| clip01(mu_tilde[a]), true, rng, &mut events)
}

fn eb_leader_counted<R: Rng + ?Sized>(mu_tilde: &[f64], rng: &mut R, events: &mut u32) -> usize {
    pick(mu_tilde.len(), None, |a| clip01(mu_tilde[a]), true, rng, events)
}

/// TCI challenger; `penalized = false` gives the TC challenger.
pub fn tci_challenger<R: Rng + ?Sized>(
    eps: f64,
    mu_tilde: &[f64],
    counts: &[u64],
    leader: usize,
    penalized: bool,
    rng: &mut R,
) -> usize {
    let mut events = 0;
    let mut cache = ChallengerCache::default();
    challenger_counted(eps, mu_tilde, counts, leader, penalized, &mut cache, rng, &mut events)
}

/// Per-arm terms reused by the challenger while the means stay fixed.
#[derive(Debug, Clone, Default, PartialEq)]
struct ChallengerCache {
    budget: Option<Budget>,
    means: Vec<f64>,
    terms: Vec<ArmTerms>,
    counts: Vec<u64>,
    ln_counts: Vec<f64>,
    /// Transport cost of each arm against `(leader, N_leader, N_a)`.
    costs: Vec<Option<((usize, u64, u64), f64)>>,
}

impl ChallengerCache {
    fn refresh(&mut self, eps: f64, mu_tilde: &[f64], counts: &[u64]) -> Budget {
        let budget = match self.budget {
            Some(b) if b.eps == eps => b,
            _ => {
                self.costs.clear();
                *self.budget.insert(Budget::new(eps))
            }
        };
        if self.means != mu_tilde || self.costs.len() != mu_tilde.len() {
            self.means = mu_tilde.to_vec();
            self.terms = mu_tilde.iter().map(|&m| ArmTerms::new(m)).collect();
            self.costs = vec![None; mu_tilde.len()];
        }
        if self.counts.len() != counts.len() {
            self.counts = vec![0; counts.len()];
            self.ln_counts = vec![0.0; counts.len()];
        }
        for (a, &n) in counts.iter().enumerate() {
            if self.counts[a] != n {
                self.counts[a] = n;
                self.ln_counts[a] = (n as f64).ln();
            }
        }
        budget
    }
}

#[allow(clippy::too_many_arguments)]
fn challenger_counted<R: Rng + ?Sized>(
    eps: f64,
    mu_tilde: &[f64],
    counts: &[u64],
    leader: usize,
    penalized: bool,
    cache: &mut ChallengerCache,
    rng: &mut R,
    events: &mut u32,
) -> usize {
    let budget = cache.refresh(eps, mu_tilde, counts);
    let nb = counts[leader];
    let ChallengerCache { terms, ln_counts, costs, .. } = cache;
    pick(
        mu_tilde.len(),
        Some(leader),
        |a| {
            let key = (leader, nb, counts[a]);
            let w = match costs[a] {
                Some((k, w)) if k == key => w,
                _ => {
                    let w = transport_terms(&budget, &terms[leader], &terms[a], nb as f64, counts[a] as f64);
                    costs[a] = Some((key, w));
                    w
                }
            };
            if penalized {
                w + ln_counts[a]
            } else {
                w
            }
        },
        false,
        rng,
        events,
    )
}

/// Leader and self-pull counters of the β-tracking procedures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackingState {
    pub leader_count: Vec<u64>,
    pub self_count: Vec<u64>,
}

impl TrackingState {
    pub fn new(k: usize) -> Self {
        Self { leader_count: vec![0; k], self_count: vec![0; k] }
    }

    /// `N_self − β L` for `arm`.
    pub fn discrepancy(&self, arm: usize, beta: f64) -> f64 {
        self.self_count[arm] as f64 - beta * self.leader_count[arm] as f64
    }

    /// Pulls the leader iff `N_self ≤ β L` after counting this step.
    #[inline]
    pub fn beta_track(&mut self, beta: f64, leader: usize, challenger: usize) -> usize {
        self.leader_count[leader] += 1;
        let pulled = if self.self_count[leader] as f64 <= beta * self.leader_count[leader] as f64 {
            self.self_count[leader] += 1;
            leader
        } else {
            challenger
        };
        debug_assert!({
            let d = self.discrepancy(leader, beta);
            (-0.5 - 1e-9..=1.0 + 1e-9).contains(&d)
        });
        pulled
    }
}

/// Probability of pulling the leader under the IDS target.
///
/// Falls back to `beta` when the transport cost vanishes.
pub fn ids_target(eps: f64, mu_tilde: &[f64], counts: &[u64], leader: usize, challenger: usize, beta: f64) -> f64 {
    let nl = counts[leader] as f64;
    let t = transport_unchecked(eps, mu_tilde[leader], mu_tilde[challenger], nl, counts[challenger] as f64);
    if t.value <= 0.0 {
        return beta;
    }
    (nl * dm(eps, clip01(mu_tilde[leader]), t.minimizer_u).0 / t.value).clamp(0.0, 1.0)
}

/// `Σ_{a≠B} d⁻_ε(µ̃_B, u_a) / d⁺_ε(µ̃_a, u_a)` at the pairwise minimizers.
///
/// A vanishing denominator counts as `+∞`.
pub fn bold_ratio_sum(eps: f64, mu_tilde: &[f64], counts: &[u64], leader: usize) -> f64 {
    let (mb, nb) = (clip01(mu_tilde[leader]), counts[leader] as f64);
    let mut sum = 0.0;
    for a in (0..mu_tilde.len()).filter(|&a| a != leader) {
        let ma = clip01(mu_tilde[a]);
        let u = transport_unchecked(eps, mb, ma, nb, counts[a] as f64).minimizer_u;
        let den = dp(eps, ma, u).0;
        if den <= 0.0 {
            return f64::INFINITY;
        }
        sum += dm(eps, mb, u).0 / den;
    }
    sum
}

/// BOLD: pull the leader iff [`bold_ratio_sum`] exceeds 1, else the TCI challenger.
pub fn bold_choose<R: Rng + ?Sized>(eps: f64, mu_tilde: &[f64], counts: &[u64], leader: usize, rng: &mut R) -> usize {
    if bold_ratio_sum(eps, mu_tilde, counts, leader) > 1.0 {
        leader
    } else {
        tci_challenger(eps, mu_tilde, counts, leader, true, rng)
    }
}

fn check_index(count: u64, n: u64) -> Result<()> {
    ensure!(count >= 1, "index needs at least one sample");
    ensure!(n >= 1, "index needs n ≥ 1");
    Ok(())
}

/// `U = max{u ∈ [m, 1] : N d⁺_ε(m, u) ≤ ln n}` with `m = [µ̃]₀¹`.
pub fn ucb_index(eps: f64, mu_tilde: f64, count: u64, n: u64) -> Result<f64> {
    check_index(count, n)?;
    ucb_with_budget(eps, mu_tilde, count, (n as f64).ln())
}

/// [`ucb_index`] with an explicit budget in place of `ln n`.
pub fn ucb_with_budget(eps: f64, mu_tilde: f64, count: u64, budget: f64) -> Result<f64> {
    let m = clip01(mu_tilde);
    let nf = count as f64;
    if budget <= 0.0 || m >= 1.0 {
        return Ok(m);
    }
    if nf * dp(eps, m, 1.0).0 <= budget {
        return Ok(1.0);
    }
    bisect_increasing(|u| nf * dp(eps, m, u).0 - budget, m, 1.0, INDEX_REL_TOL, 0.0, INDEX_CAP, "ucb_index")
}

/// `L̃ = min{u ∈ [0, m] : N d⁻_ε(m, u) ≤ ln n}`, the lower root.
pub fn lcb_index(eps: f64, mu_tilde: f64, count: u64, n: u64) -> Result<f64> {
    check_index(count, n)?;
    lcb_with_budget(eps, mu_tilde, count, (n as f64).ln())
}

/// [`lcb_index`] with an explicit budget in place of `ln n`.
pub fn lcb_with_budget(eps: f64, mu_tilde: f64, count: u64, budget: f64) -> Result<f64> {
    let m = clip01(mu_tilde);
    let nf = count as f64;
    if budget <= 0.0 || m <= 0.0 {
        return Ok(m);
    }
    if nf * dm(eps, m, 0.0).0 <= budget {
        return Ok(0.0);
    }
    bisect_increasing(|u| budget - nf * dm(eps, m, u).0, 0.0, m, INDEX_REL_TOL, 1e-300, INDEX_CAP, "lcb_index")
}

/// Argmax of UCB indices, ties uniform.
pub fn ucb_leader<R: Rng + ?Sized>(eps: f64, mu_tilde: &[f64], counts: &[u64], n: u64, rng: &mut R) -> Result<usize> {
    let mut events = 0;
    ucb_leader_counted(eps, mu_tilde, counts, n, None, rng, &mut events)
}

fn ucb_leader_counted<R: Rng + ?Sized>(
    eps: f64,
    mu_tilde: &[f64],
    counts: &[u64],
    n: u64,
    skip: Option<usize>,
    rng: &mut R,
    events: &mut u32,
) -> Result<usize> {
    let mut idx = vec![0.0; mu_tilde.len()];
    for a in 0..mu_tilde.len() {
        idx[a] = ucb_index(eps, mu_tilde[a], counts[a], n)?;
    }
    Ok(pick(mu_tilde.len(), skip, |a| idx[a], true, rng, events))
}

/// IMED index `N_a d⁺_ε([µ̃_a], µ̃*) + ln N_a` with `µ̃*` the top clipped mean.
pub fn imed_index(eps: f64, mu_tilde: &[f64], counts: &[u64], arm: usize) -> f64 {
    let top = mu_tilde.iter().map(|&m| clip01(m)).fold(0.0, f64::max);
    let na = counts[arm] as f64;
    na * dp(eps, clip01(mu_tilde[arm]), top).0 + na.ln()
}

fn imed_leader_counted<R: Rng + ?Sized>(
    eps: f64,
    mu_tilde: &[f64],
    counts: &[u64],
    rng: &mut R,
    events: &mut u32,
) -> usize {
    pick(mu_tilde.len(), None, |a| imed_index(eps, mu_tilde, counts, a), false, rng, events)
}

/// Sup-norm projection of `w` onto the simplex with every entry at least `floor`.
pub fn project_with_floor(w: &[f64], floor: f64) -> Result<Vec<f64>> {
    let k = w.len() as f64;
    ensure!(floor >= 0.0 && floor * k <= 1.0, "floor {floor} is infeasible for {k} arms");
    let mass = |t: f64| w.iter().map(|&x| (x - t).max(floor)).sum::<f64>();
    let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = hi - 1.0 - k;
    let t = bisect_increasing(|t| 1.0 - mass(t), lo, hi, 1e-15, 1e-16, 400, "projection")?;
    let mut out: Vec<f64> = w.iter().map(|&x| (x - t).max(floor)).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    Ok(out)
}

/// `ε_n = (K² + n)^(−1/2) / 2`.
pub fn forced_exploration_floor(k: usize, n: u64) -> f64 {
    0.5 / ((k * k) as f64 + n as f64).sqrt()
}

/// Optimal allocation of the empirical instance, uniform when it is invalid.
pub fn empirical_allocation(eps: f64, mu_tilde: &[f64]) -> Vec<f64> {
    let k = mu_tilde.len();
    let uniform = || vec![1.0 / k as f64; k];
    if mu_tilde.iter().any(|&m| !(m > 0.0 && m < 1.0)) {
        return uniform();
    }
    BanditInstance::new(mu_tilde.to_vec())
        .and_then(|inst| characteristic_time(eps, &inst))
        .map(|s| s.w_star)
        .unwrap_or_else(|_| uniform())
}

/// C-tracking state of Track-and-Stop.
#[derive(Debug, Clone, PartialEq)]
pub struct TasState {
    pub cumulative: Vec<f64>,
    cached_version: Option<u64>,
    cached_w: Vec<f64>,
}

impl TasState {
    /// Cumulative targets start at one per arm, matching the initial pulls.
    pub fn new(k: usize) -> Self {
        Self { cumulative: vec![1.0; k], cached_version: None, cached_w: vec![1.0 / k as f64; k] }
    }

    /// Pulls `argmax_a Σ_t w'_t,a − N_a` after adding this step's projected target.
    ///
    /// `version` identifies the snapshot; the allocation is recomputed only
    /// when it changes.
    pub fn choose<R: Rng + ?Sized>(
        &mut self,
        eps: f64,
        mu_tilde: &[f64],
        counts: &[u64],
        n: u64,
        version: u64,
        rng: &mut R,
    ) -> Result<usize> {
        let mut events = 0;
        self.choose_counted(eps, mu_tilde, counts, n, version, rng, &mut events)
    }

    #[allow(clippy::too_many_arguments)]
    fn choose_counted<R: Rng + ?Sized>(
        &mut self,
        eps: f64,
        mu_tilde: &[f64],
        counts: &[u64],
        n: u64,
        version: u64,
        rng: &mut R,
        events: &mut u32,
    ) -> Result<usize> {
        let k = mu_tilde.len();
        if self.cached_version != Some(version) {
            self.cached_w = empirical_allocation(eps, mu_tilde);
            self.cached_version = Some(version);
        }
        let w = project_with_floor(&self.cached_w, forced_exploration_floor(k, n))?;
        for (c, x) in self.cumulative.iter_mut().zip(&w) {
            *c += x;
        }
        let cum = &self.cumulative;
        Ok(pick(k, None, |a| cum[a] - counts[a] as f64, true, rng, events))
    }
}

/// Inputs a sampling rule sees at one step.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput<'a> {
    pub eps: f64,
    pub beta: f64,
    pub mu_tilde: &'a [f64],
    pub counts: &'a [u64],
    /// Total pulls so far.
    pub n: u64,
    /// Snapshot version of the estimator.
    pub version: u64,
}

/// Per-run state of a sampling rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    pub tracking: TrackingState,
    tas: Option<TasState>,
    cache: ChallengerCache,
}

impl Policy {
    pub fn new(kind: PolicyKind, k: usize) -> Self {
        let tas = (kind == PolicyKind::Tas).then(|| TasState::new(k));
        Self { kind, tracking: TrackingState::new(k), tas, cache: ChallengerCache::default() }
    }

    /// Chooses the next arm (two arms for LUCB).
    pub fn choose<R: Rng + ?Sized>(&mut self, input: &PolicyInput<'_>, rng: &mut R) -> Result<PolicyChoice> {
        use PolicyKind::*;
        let PolicyInput { eps, beta, mu_tilde, counts, n, version } = *input;
        let mut ev = 0;
        if mu_tilde.len() != counts.len() || mu_tilde.len() < 2 {
            return Err(DomainError::OutOfDomain("policy needs at least two arms".into()));
        }
        let choice = match self.kind {
            DpTt | DpTtTc | DpTtUcbLeader | DpTtImedLeader | DpTtIds => {
                let leader = match self.kind {
                    DpTtUcbLeader => ucb_leader_counted(eps, mu_tilde, counts, n, None, rng, &mut ev)?,
                    DpTtImedLeader => imed_leader_counted(eps, mu_tilde, counts, rng, &mut ev),
                    _ => eb_leader_counted(mu_tilde, rng, &mut ev),
                };
                let challenger = challenger_counted(
                    eps,
                    mu_tilde,
                    counts,
                    leader,
                    self.kind != DpTtTc,
                    &mut self.cache,
                    rng,
                    &mut ev,
                );
                let pulled = if self.kind == DpTtIds {
                    ev += 1;
                    let p = ids_target(eps, mu_tilde, counts, leader, challenger, beta);
                    if rng.random::<f64>() < p {
                        leader
                    } else {
                        challenger
                    }
                } else {
                    self.tracking.beta_track(beta, leader, challenger)
                };
                PolicyChoice { leader, challenger, pulled, also_pulled: None, rng_events: ev }
            }
            DpTtBold => {
                let leader = eb_leader_counted(mu_tilde, rng, &mut ev);
                let challenger = challenger_counted(eps, mu_tilde, counts, leader, true, &mut self.cache, rng, &mut ev);
                let pulled = if bold_ratio_sum(eps, mu_tilde, counts, leader) > 1.0 { leader } else { challenger };
                PolicyChoice { leader, challenger, pulled, also_pulled: None, rng_events: ev }
            }
            Tas => {
                let tas = self.tas.get_or_insert_with(|| TasState::new(mu_tilde.len()));
                let pulled = tas.choose_counted(eps, mu_tilde, counts, n, version, rng, &mut ev)?;
                let leader = crate::stopping::recommend(mu_tilde);
                let challenger = if pulled != leader { pulled } else { (leader + 1) % mu_tilde.len() };
                PolicyChoice { leader, challenger, pulled, also_pulled: None, rng_events: ev }
            }
            Lucb => {
                let leader = eb_leader_counted(mu_tilde, rng, &mut ev);
                let challenger = ucb_leader_counted(eps, mu_tilde, counts, n, Some(leader), rng, &mut ev)?;
                PolicyChoice { leader, challenger, pulled: leader, also_pulled: Some(challenger), rng_events: ev }
            }
        };
        Ok(choice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn names_round_trip() {
        for p in PolicyKind::ALL {
            assert_eq!(p.name().parse::<PolicyKind>().unwrap(), p);
        }
        assert!("ts".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn leader_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(eb_leader(&[0.9, 0.2, 0.5], &mut rng), 0);
        assert_eq!(eb_leader(&[1.3, 0.8], &mut rng), 0);
        let hits = (0..10_000).filter(|_| eb_leader(&[1.3, 1.1], &mut rng) == 0).count();
        assert!((hits as f64 / 1e4 - 0.5).abs() < 0.05);
    }

    #[test]
    fn tracking_trace() {
        let mut t = TrackingState::new(2);
        assert_eq!(t.beta_track(0.5, 0, 1), 0);
        assert_eq!(t.beta_track(0.5, 0, 1), 0);
        assert_eq!(t.beta_track(0.5, 0, 1), 1);
    }

    #[test]
    fn projection_floor() {
        let w = project_with_floor(&[0.97, 0.01, 0.02], 0.05).unwrap();
        assert!(w.iter().all(|&x| x >= 0.05 - 1e-12));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((w[0] - 0.9).abs() < 1e-9);
    }

    #[test]
    fn index_budget_zero() {
        assert_eq!(ucb_with_budget(1.0, 0.4, 10, 0.0).unwrap(), 0.4);
        assert_eq!(lcb_with_budget(1.0, 0.4, 10, 0.0).unwrap(), 0.4);
    }
}
