//! Rollout collection and the generic PPO loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::algo::{ppo_update, Learner, PpoConfig, RolloutBuffer, RunningStat, UpdateStats, OBS_CLIP};
use super::env::{Env, EpisodeEnd, Step, VecEnv};
use super::nn::{MlpCache, Real};
use super::policy::{gaussian_log_prob, sample_gaussian, ActorCritic, PolicyInit};
use crate::error::TrainError;

/// Policy, critic and both normalizers.
#[derive(Clone, Debug, PartialEq)]
pub struct Agent<T> {
    pub learner: Learner<T>,
    pub obs_stat: RunningStat,
}

impl<T: Real> Agent<T> {
    pub fn new(obs_dim: usize, act_dim: usize, cfg: &PpoConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let init = PolicyInit { log_std: cfg.init_log_std, ..Default::default() };
        let ac = ActorCritic::new(obs_dim, act_dim, &cfg.hidden, &init, &mut rng);
        Self { learner: Learner::new(ac, cfg.learning_rate), obs_stat: RunningStat::new(obs_dim) }
    }

    pub fn ac(&self) -> &ActorCritic<T> {
        &self.learner.ac
    }

    pub fn normalize(&self, raw: &[f64], out: &mut Vec<T>) {
        out.clear();
        out.resize(raw.len(), T::ZERO);
        self.obs_stat.normalize_into(raw, OBS_CLIP, out);
    }

    /// Mean actions `tanh(mu)` for raw observations.
    pub fn act_deterministic(&self, raw_obs: &[f64], batch: usize) -> Vec<f64> {
        let mut x = Vec::new();
        self.normalize(raw_obs, &mut x);
        self.ac().policy_forward(&x, batch).0
    }

    /// Raw-scale state values.
    pub fn values(&self, norm_obs: &[T], batch: usize, cache: &mut MlpCache<T>) -> Vec<f64> {
        self.ac()
            .critic_forward(norm_obs, batch, cache)
            .iter()
            .map(|v| self.learner.denormalize_value(v.to_f64()))
            .collect()
    }
}

/// Fills `buf` with one rollout and returns the episodes finished in it.
/// The raw observations the policy acted on are appended to `raw_obs`.
pub fn collect_rollout<E: Env, T: Real>(
    venv: &mut VecEnv<E>,
    agent: &Agent<T>,
    buf: &mut RolloutBuffer<T>,
    rng: &mut ChaCha8Rng,
    gamma: f64,
    lambda: f64,
    raw_obs: &mut Vec<f64>,
) -> Result<Vec<EpisodeEnd>, TrainError> {
    let (n, od, ad) = (venv.len(), buf.obs_dim, buf.act_dim);
    let mut cache = MlpCache::default();
    let mut x = Vec::new();
    let mut u = vec![0.0; n * ad];
    let mut a = vec![0.0; n * ad];
    let mut steps = vec![Step::default(); n];
    let mut episodes = Vec::new();
    let log_std: Vec<f64> = agent.ac().log_std().iter().map(|v| v.to_f64()).collect();
    buf.log_std.clone_from(&log_std);
    for t in 0..buf.horizon {
        raw_obs.extend_from_slice(&venv.obs);
        agent.normalize(&venv.obs, &mut x);
        let mu: Vec<f64> = agent.ac().actor_forward(&x, n, &mut cache).iter().map(|v| v.to_f64()).collect();
        let values = agent.values(&x, n, &mut cache);
        for e in 0..n {
            let row = e * ad..(e + 1) * ad;
            sample_gaussian(&mu[row.clone()], &log_std, rng, &mut u[row.clone()]);
            let i = t * n + e;
            buf.log_probs[i] = gaussian_log_prob(&u[row.clone()], &mu[row.clone()], &log_std);
            for k in row {
                a[k] = u[k].tanh();
            }
        }
        let base = t * n;
        buf.obs[base * od..(base + n) * od].copy_from_slice(&x);
        buf.actions[base * ad..(base + n) * ad].copy_from_slice(&u);
        buf.means[base * ad..(base + n) * ad].copy_from_slice(&mu);
        buf.values[base..base + n].copy_from_slice(&values);
        venv.step(&a, &mut steps).map_err(|(env, source)| TrainError::Sim { env, source })?;
        for (e, s) in steps.iter().enumerate() {
            buf.rewards[base + e] = s.reward;
            buf.dones[base + e] = s.done;
            if let Some(ep) = s.episode {
                episodes.push(ep);
            }
        }
    }
    agent.normalize(&venv.obs, &mut x);
    let last = agent.values(&x, n, &mut cache);
    buf.finish(&last, gamma, lambda);
    Ok(episodes)
}

/// What the per-update hook wants next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Per-update record handed to the hook.
#[derive(Clone, Debug)]
pub struct UpdateRecord<'a> {
    pub update: usize,
    pub stats: UpdateStats,
    /// Mean reward per environment step.
    pub mean_reward: f64,
    pub episodes: &'a [EpisodeEnd],
}

/// Runs up to `cfg.max_updates` PPO updates. `hook` sees every update and
/// may mutate the environments (curriculum) or stop early.
pub fn run_ppo<E, T, F>(venv: &mut VecEnv<E>, agent: &mut Agent<T>, cfg: &PpoConfig, mut hook: F) -> Result<usize, TrainError>
where
    E: Env,
    T: Real,
    F: FnMut(&mut VecEnv<E>, &Agent<T>, &UpdateRecord) -> Result<Flow, TrainError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_ac7104);
    venv.reset_all().map_err(|(env, source)| TrainError::Sim { env, source })?;
    let mut buf = RolloutBuffer::new(venv.len(), cfg.horizon, venv.obs_dim(), venv.act_dim());
    let mut raw_obs = Vec::with_capacity(venv.len() * venv.obs_dim() * cfg.horizon);
    for update in 0..cfg.max_updates {
        raw_obs.clear();
        let episodes = collect_rollout(venv, agent, &mut buf, &mut rng, cfg.gamma, cfg.lambda, &mut raw_obs)?;
        let stats = ppo_update(&mut agent.learner, &buf, cfg, &mut rng)?;
        agent.obs_stat.update(&raw_obs, venv.obs_dim());
        let mean_reward = buf.rewards.iter().sum::<f64>() / buf.len() as f64;
        let rec = UpdateRecord { update, stats, mean_reward, episodes: &episodes };
        if hook(venv, agent, &rec)? == Flow::Stop {
            return Ok(update + 1);
        }
    }
    Ok(cfg.max_updates)
}

#[cfg(test)]
mod tests {
    use super::super::toy::{Bandit, PointMassJump};
    use super::*;

    fn small(seed: u64) -> PpoConfig {
        PpoConfig {
            horizon: 8,
            num_envs: 32,
            hidden: vec![16, 16],
            max_updates: 200,
            seed,
            init_log_std: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn bandit_prefers_rewarding_action() {
        let cfg = small(1);
        let mut venv = VecEnv::new(vec![Bandit; cfg.num_envs], cfg.seed, false);
        let mut agent = Agent::<f32>::new(1, 1, &cfg);
        run_ppo(&mut venv, &mut agent, &cfg, |_, _, _| Ok(Flow::Continue)).unwrap();
        // P(u > 0) under the Gaussian
        let mut x = Vec::new();
        agent.normalize(&[1.0], &mut x);
        let mu = agent.ac().actor_forward(&x, 1, &mut MlpCache::default())[0] as f64;
        let sd = (agent.ac().log_std()[0] as f64).exp();
        let p = 0.5 * (1.0 + erf(mu / (sd * std::f64::consts::SQRT_2)));
        assert!(p > 0.9, "p = {p}");
    }

    // Abramowitz-Stegun 7.1.26
    fn erf(x: f64) -> f64 {
        let t = 1.0 / (1.0 + 0.327_591_1 * x.abs());
        let y = 1.0
            - (((((1.061_405_429 * t - 1.453_152_027) * t) + 1.421_413_741) * t - 0.284_496_736) * t + 0.254_829_592)
                * t
                * (-x * x).exp();
        y.copysign(x)
    }

    #[test]
    fn point_mass_reaches_commanded_heights() {
        let cfg = PpoConfig { max_updates: 300, ..small(2) };
        let mut venv = VecEnv::new(vec![PointMassJump::default(); cfg.num_envs], cfg.seed, false);
        let mut agent = Agent::<f32>::new(1, 1, &cfg);
        run_ppo(&mut venv, &mut agent, &cfg, |_, _, _| Ok(Flow::Continue)).unwrap();
        let env = PointMassJump::default();
        let targets: Vec<f64> = (0..50).map(|i| 0.2 + 0.8 * i as f64 / 49.0).collect();
        let acts = agent.act_deterministic(&targets, targets.len());
        let ok = targets.iter().zip(&acts).filter(|(t, a)| (env.apex(**a) - **t).abs() < 0.1).count();
        assert!(ok as f64 / 50.0 >= 0.9, "{ok}/50");
    }

    #[test]
    fn parallel_and_serial_rollouts_agree() {
        let cfg = PpoConfig { max_updates: 5, ..small(3) };
        let run = |parallel| {
            let mut venv = VecEnv::new(vec![PointMassJump::default(); cfg.num_envs], cfg.seed, parallel);
            let mut agent = Agent::<f32>::new(1, 1, &cfg);
            run_ppo(&mut venv, &mut agent, &cfg, |_, _, _| Ok(Flow::Continue)).unwrap();
            agent.learner.ac.params
        };
        assert_eq!(run(false), run(true));
    }
}
