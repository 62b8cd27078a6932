//! Bernoulli environment and the single-run loop.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gpe::Gpe;
use crate::harness::config::ExperimentConfig;
use crate::oracle::BanditInstance;
use crate::policies::{Policy, PolicyChoice, PolicyInput, PolicyKind};
use crate::stopping::{glr_stop_cached, lucb_stop, recommend, Thresholds};

/// Stream index of the reward draws within a run.
pub const ENV_STREAM: u64 = 0;
/// Stream index of the Laplace draws.
pub const NOISE_STREAM: u64 = 1;
/// Stream index of the policy's tie-breaks and randomized targets.
pub const POLICY_STREAM: u64 = 2;

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub seed: u64,
    pub stopping_time: u64,
    pub recommendation: usize,
    pub correct: bool,
    pub phases_per_arm: Vec<u32>,
    pub timed_out: bool,
}

/// Bernoulli arms driven by their own random stream.
#[derive(Debug, Clone)]
pub struct BernoulliEnv {
    means: Vec<f64>,
    rng: ChaCha8Rng,
}

impl BernoulliEnv {
    pub fn new(instance: &BanditInstance, rng: ChaCha8Rng) -> Self {
        Self { means: instance.means().to_vec(), rng }
    }

    #[inline]
    pub fn pull(&mut self, arm: usize) -> u8 {
        (self.rng.random::<f64>() < self.means[arm]) as u8
    }
}

/// Seed of run `index` under master seed `master`.
pub fn run_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Independent generator `stream` of the run seeded by `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// State visible to an observer after each round.
pub struct StepView<'a> {
    pub n: u64,
    pub choice: &'a PolicyChoice,
    pub estimator: &'a Gpe,
    pub policy: &'a Policy,
}

/// Runs one episode to stopping or to the pull cap.
pub fn run_episode(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    run_episode_observed(cfg, seed, |_| {})
}

/// [`run_episode`] with a callback after every round.
pub fn run_episode_observed<F>(cfg: &ExperimentConfig, seed: u64, mut observe: F) -> Result<RunRecord>
where
    F: FnMut(&StepView<'_>),
{
    let instance = cfg.instance.instance();
    let k = instance.k();
    let params = cfg.params();
    let thresholds = Thresholds::new(params, k, cfg.s, cfg.threshold_mode)?;
    let mut env = BernoulliEnv::new(&instance, substream(seed, ENV_STREAM));
    let mut noise = substream(seed, NOISE_STREAM);
    let mut prng = substream(seed, POLICY_STREAM);

    let first: Vec<u8> = (0..k).map(|a| env.pull(a)).collect();
    let mut gpe = if cfg.noise {
        Gpe::init(&params, &first, &mut noise)?
    } else {
        Gpe::init_noiseless(&params, &first, &mut noise)?
    };
    let mut policy = Policy::new(cfg.policy, k);
    let mut n = k as u64;
    let mut c = vec![0.0; k];
    let mut checked = None;

    let finish = |gpe: &Gpe, n: u64, rec: usize, timed_out: bool| RunRecord {
        seed,
        stopping_time: n,
        recommendation: rec,
        correct: rec == instance.best_arm(),
        phases_per_arm: gpe.phases().to_vec(),
        timed_out,
    };

    loop {
        if cfg.policy != PolicyKind::Lucb && checked != Some(gpe.version()) {
            checked = Some(gpe.version());
            for (ca, &nt) in c.iter_mut().zip(gpe.n_tilde()) {
                *ca = thresholds.total(nt as f64)?;
            }
            let d = glr_stop_cached(params.eps, gpe.mu_tilde(), gpe.n_tilde(), &c);
            if d.stop {
                return Ok(finish(&gpe, n, d.recommendation, false));
            }
        }
        if n >= cfg.pull_cap {
            return Ok(finish(&gpe, n, recommend(gpe.mu_tilde()), true));
        }

        let input = PolicyInput {
            eps: params.eps,
            beta: params.beta,
            mu_tilde: gpe.mu_tilde(),
            counts: gpe.counts(),
            n,
            version: gpe.version(),
        };
        let choice = policy.choose(&input, &mut prng)?;
        if cfg.policy == PolicyKind::Lucb {
            let d = lucb_stop(params.eps, gpe.mu_tilde(), gpe.counts(), n, choice.leader, choice.challenger)?;
            if d.stop {
                return Ok(finish(&gpe, n, d.recommendation, false));
            }
        }

        for arm in std::iter::once(choice.pulled).chain(choice.also_pulled) {
            let x = env.pull(arm);
            gpe.record(arm, x)?;
            gpe.maybe_advance(arm, &mut noise);
            n += 1;
        }
        observe(&StepView { n, choice: &choice, estimator: &gpe, policy: &policy });
    }
}
