//! Clipped-surrogate PPO update with a separate critic, return
//! normalization and a KL-adaptive learning rate.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gae::{compute_gae, normalize};
use super::nn::{MlpCache, Real};
use super::policy::{gaussian_entropy, Adam, ActorCritic};
use crate::error::TrainError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub clip: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Control steps per environment per rollout.
    pub horizon: usize,
    pub num_envs: usize,
    pub max_updates: usize,
    pub seed: u64,
    pub max_grad_norm: f64,
    /// KL target of the adaptive learning rate; 0 keeps it fixed.
    pub kl_target: f64,
    pub lr_bounds: (f64, f64),
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
    /// Penalty on pre-squash means beyond `±bound_limit`.
    pub bound_coef: f64,
    pub bound_limit: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            clip: 0.2,
            gamma: 0.99,
            lambda: 0.95,
            epochs: 4,
            minibatches: 4,
            entropy_coef: 0.003,
            value_coef: 1.0,
            horizon: 48,
            num_envs: 256,
            max_updates: 1500,
            seed: 0,
            max_grad_norm: 1.0,
            kl_target: 0.008,
            lr_bounds: (1e-5, 1e-2),
            hidden: vec![256, 128, 128],
            init_log_std: -0.7,
            bound_coef: 0.01,
            bound_limit: 2.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), (String, String)> {
        let err = |f: &str, r: &str| Err((format!("ppo.{f}"), r.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return err("gamma", "must be in (0, 1]");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return err("lambda", "must be in (0, 1]");
        }
        if !(self.clip > 0.0) {
            return err("clip", "must be > 0");
        }
        if !(self.learning_rate >= 0.0) {
            return err("learning_rate", "must be >= 0");
        }
        if self.epochs == 0 || self.minibatches == 0 || self.horizon == 0 || self.num_envs == 0 {
            return err("epochs", "epochs, minibatches, horizon and num_envs must be >= 1");
        }
        if self.minibatches > self.horizon * self.num_envs {
            return err("minibatches", "more minibatches than samples");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return err("hidden", "layer widths must be >= 1");
        }
        if !(self.lr_bounds.0 > 0.0 && self.lr_bounds.0 <= self.lr_bounds.1) {
            return err("lr_bounds", "need 0 < low <= high");
        }
        Ok(())
    }
}

/// Running mean and variance (parallel Welford merge).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningStat {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
}

impl RunningStat {
    pub fn new(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], var: vec![1.0; dim], count: 1e-4 }
    }

    /// Folds in `rows × dim` samples.
    pub fn update(&mut self, data: &[f64], dim: usize) {
        let n = data.len() / dim;
        if n == 0 {
            return;
        }
        let nf = n as f64;
        for k in 0..dim {
            let mean = (0..n).map(|r| data[r * dim + k]).sum::<f64>() / nf;
            let var = (0..n).map(|r| (data[r * dim + k] - mean).powi(2)).sum::<f64>() / nf;
            let total = self.count + nf;
            let delta = mean - self.mean[k];
            let m2 = self.var[k] * self.count + var * nf + delta * delta * self.count * nf / total;
            self.mean[k] += delta * nf / total;
            self.var[k] = m2 / total;
        }
        self.count += nf;
    }

    pub fn std(&self, k: usize) -> f64 {
        self.var[k].sqrt().max(1e-6)
    }

    /// `clamp((x - mean) / std, -clip, clip)`
    pub fn normalize_into<T: Real>(&self, x: &[f64], clip: f64, out: &mut [T]) {
        let d = self.mean.len();
        for (i, (v, o)) in x.iter().zip(out.iter_mut()).enumerate() {
            let k = i % d;
            *o = T::from_f64(((v - self.mean[k]) / self.std(k)).clamp(-clip, clip));
        }
    }
}

pub const OBS_CLIP: f64 = 5.0;

/// One rollout, laid out `t * num_envs + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutBuffer<T> {
    pub num_envs: usize,
    pub horizon: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
    /// Normalized observations.
    pub obs: Vec<T>,
    /// Pre-squash actions.
    pub actions: Vec<f64>,
    /// Pre-squash means at collection time.
    pub means: Vec<f64>,
    /// Gaussian log-probabilities of `actions`.
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    /// Log-std at collection time.
    pub log_std: Vec<f64>,
}

impl<T: Real> RolloutBuffer<T> {
    pub fn new(num_envs: usize, horizon: usize, obs_dim: usize, act_dim: usize) -> Self {
        let n = num_envs * horizon;
        Self {
            num_envs,
            horizon,
            obs_dim,
            act_dim,
            obs: vec![T::ZERO; n * obs_dim],
            actions: vec![0.0; n * act_dim],
            means: vec![0.0; n * act_dim],
            log_probs: vec![0.0; n],
            rewards: vec![0.0; n],
            values: vec![0.0; n],
            dones: vec![false; n],
            advantages: vec![0.0; n],
            returns: vec![0.0; n],
            log_std: vec![0.0; act_dim],
        }
    }

    pub fn len(&self) -> usize {
        self.num_envs * self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn finish(&mut self, last_values: &[f64], gamma: f64, lambda: f64) {
        let (a, r) = compute_gae(&self.rewards, &self.values, &self.dones, last_values, gamma, lambda);
        self.advantages = a;
        self.returns = r;
    }
}

/// One minibatch, already gathered.
#[derive(Clone, Debug, Default)]
pub struct Minibatch<T> {
    pub obs: Vec<T>,
    pub actions: Vec<f64>,
    pub old_means: Vec<f64>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    /// Normalized value targets.
    pub targets: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub bound: f64,
    pub total: f64,
    /// Mean KL(old || new).
    pub kl: f64,
    pub clip_fraction: f64,
}

/// Scratch space of [`loss_and_grad`].
#[derive(Clone, Debug, Default)]
pub struct Workspace<T> {
    actor: MlpCache<T>,
    critic: MlpCache<T>,
    dmu: Vec<T>,
    dv: Vec<T>,
}

/// PPO loss on a minibatch and its gradient (overwritten into `grad`).
pub fn loss_and_grad<T: Real>(
    ac: &ActorCritic<T>,
    mb: &Minibatch<T>,
    old_log_std: &[f64],
    cfg: &PpoConfig,
    ws: &mut Workspace<T>,
    grad: &mut [T],
) -> LossParts {
    let b = mb.advantages.len();
    let a = ac.act_dim();
    let bf = b as f64;
    grad.fill(T::ZERO);
    let log_std: Vec<f64> = ac.log_std().iter().map(|v| v.to_f64()).collect();
    let inv_var: Vec<f64> = log_std.iter().map(|l| (-2.0 * l).exp()).collect();
    let mu: Vec<f64> = ac.actor_forward(&mb.obs, b, &mut ws.actor).iter().map(|v| v.to_f64()).collect();
    let mut parts = LossParts::default();
    ws.dmu.clear();
    ws.dmu.resize(b * a, T::ZERO);
    let mut dls = vec![0.0; a];
    let (lo, hi) = (1.0 - cfg.clip, 1.0 + cfg.clip);
    for i in 0..b {
        let row = i * a..(i + 1) * a;
        let (u, m, mo) = (&mb.actions[row.clone()], &mu[row.clone()], &mb.old_means[row.clone()]);
        let logp: f64 = (0..a)
            .map(|k| -0.5 * (u[k] - m[k]).powi(2) * inv_var[k] - log_std[k] - 0.918_938_533_204_672_8)
            .sum();
        let ratio = (logp - mb.old_log_probs[i]).exp();
        let adv = mb.advantages[i];
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(lo, hi) * adv;
        parts.policy -= unclipped.min(clipped) / bf;
        let active = unclipped <= clipped || (lo..=hi).contains(&ratio);
        if !(lo..=hi).contains(&ratio) {
            parts.clip_fraction += 1.0 / bf;
        }
        // d loss / d logp
        let g = if active { -adv * ratio / bf } else { 0.0 };
        for k in 0..a {
            let d = u[k] - m[k];
            let mut dm = g * d * inv_var[k];
            dls[k] += g * (d * d * inv_var[k] - 1.0);
            // soft bound on the pre-squash mean
            let excess = m[k].abs() - cfg.bound_limit;
            if excess > 0.0 {
                parts.bound += cfg.bound_coef * excess * excess / bf;
                dm += cfg.bound_coef * 2.0 * excess * m[k].signum() / bf;
            }
            ws.dmu[i * a + k] = T::from_f64(dm);
            // KL of diagonal Gaussians
            let lo_k = old_log_std[k];
            parts.kl += (log_std[k] - lo_k + ((2.0 * lo_k).exp() + (mo[k] - m[k]).powi(2)) * 0.5 * inv_var[k] - 0.5) / bf;
        }
    }
    parts.entropy = gaussian_entropy(&log_std);
    let ar = ac.actor_range();
    ac.actor.backward(&ac.params[ar.clone()], &mut ws.actor, &ws.dmu, b, &mut grad[ar]);
    for (k, i) in ac.log_std_range().enumerate() {
        grad[i] = T::from_f64(dls[k] - cfg.entropy_coef);
    }

    let v: Vec<f64> = ac.critic_forward(&mb.obs, b, &mut ws.critic).iter().map(|v| v.to_f64()).collect();
    ws.dv.clear();
    for i in 0..b {
        let e = v[i] - mb.targets[i];
        parts.value += 0.5 * e * e / bf;
        ws.dv.push(T::from_f64(cfg.value_coef * e / bf));
    }
    let cr = ac.critic_range();
    ac.critic.backward(&ac.params[cr.clone()], &mut ws.critic, &ws.dv, b, &mut grad[cr]);
    parts.total = parts.policy + cfg.value_coef * parts.value - cfg.entropy_coef * parts.entropy + parts.bound;
    parts
}

/// Scales `grad` to norm at most `max_norm`; returns the original norm.
pub fn clip_grad_norm<T: Real>(grad: &mut [T], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g.to_f64().powi(2)).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let s = T::from_f64(max_norm / norm);
        for g in grad.iter_mut() {
            *g *= s;
        }
    }
    norm
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub learning_rate: f64,
}

/// Learner state carried across updates.
#[derive(Clone, Debug, PartialEq)]
pub struct Learner<T> {
    pub ac: ActorCritic<T>,
    pub adam: Adam,
    pub lr: f64,
    pub value_stat: RunningStat,
    pub updates: usize,
}

impl<T: Real> Learner<T> {
    pub fn new(ac: ActorCritic<T>, lr: f64) -> Self {
        let adam = Adam::new(ac.params.len(), Default::default());
        Self { ac, adam, lr, value_stat: RunningStat::new(1), updates: 0 }
    }

    pub fn denormalize_value(&self, v: f64) -> f64 {
        v * self.value_stat.std(0) + self.value_stat.mean[0]
    }

    pub fn normalize_value(&self, v: f64) -> f64 {
        (v - self.value_stat.mean[0]) / self.value_stat.std(0)
    }
}

/// Runs the PPO epochs on a finished buffer.
pub fn ppo_update<T: Real, R: Rng + ?Sized>(
    learner: &mut Learner<T>,
    buf: &RolloutBuffer<T>,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats, TrainError> {
    let n = buf.len();
    let (od, ad) = (buf.obs_dim, buf.act_dim);
    learner.value_stat.update(&buf.returns, 1);
    let targets: Vec<f64> = buf.returns.iter().map(|r| learner.normalize_value(*r)).collect();
    let mut adv = buf.advantages.clone();
    normalize(&mut adv);

    let mut idx: Vec<usize> = (0..n).collect();
    let mb_size = n / cfg.minibatches;
    let mut grad = vec![T::ZERO; learner.ac.params.len()];
    let mut ws = Workspace::default();
    let mut mb = Minibatch::default();
    let mut stats = UpdateStats::default();
    let mut count = 0.0;
    for _ in 0..cfg.epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(mb_size).take(cfg.minibatches) {
            mb.obs.clear();
            mb.actions.clear();
            mb.old_means.clear();
            mb.old_log_probs.clear();
            mb.advantages.clear();
            mb.targets.clear();
            for &i in chunk {
                mb.obs.extend_from_slice(&buf.obs[i * od..(i + 1) * od]);
                mb.actions.extend_from_slice(&buf.actions[i * ad..(i + 1) * ad]);
                mb.old_means.extend_from_slice(&buf.means[i * ad..(i + 1) * ad]);
                mb.old_log_probs.push(buf.log_probs[i]);
                mb.advantages.push(adv[i]);
                mb.targets.push(targets[i]);
            }
            let parts = loss_and_grad(&learner.ac, &mb, &buf.log_std, cfg, &mut ws, &mut grad);
            if !parts.total.is_finite() {
                return Err(TrainError::Divergence {
                    update: learner.updates,
                    what: format!(
                        "non-finite loss: policy {} value {} entropy {}",
                        parts.policy, parts.value, parts.entropy
                    ),
                });
            }
            let gn = clip_grad_norm(&mut grad, cfg.max_grad_norm);
            learner.adam.step(&mut learner.ac.params, &grad, learner.lr);
            learner.ac.clamp_log_std();
            if cfg.kl_target > 0.0 && learner.lr > 0.0 {
                if parts.kl > 2.0 * cfg.kl_target {
                    learner.lr = (learner.lr / 1.5).max(cfg.lr_bounds.0);
                } else if parts.kl < 0.5 * cfg.kl_target {
                    learner.lr = (learner.lr * 1.5).min(cfg.lr_bounds.1);
                }
            }
            stats.policy_loss += parts.policy;
            stats.value_loss += parts.value;
            stats.entropy += parts.entropy;
            stats.kl += parts.kl;
            stats.clip_fraction += parts.clip_fraction;
            stats.grad_norm += gn;
            count += 1.0;
        }
    }
    if !learner.ac.all_finite() {
        return Err(TrainError::Divergence {
            update: learner.updates,
            what: "non-finite parameters after update".into(),
        });
    }
    for v in [
        &mut stats.policy_loss,
        &mut stats.value_loss,
        &mut stats.entropy,
        &mut stats.kl,
        &mut stats.clip_fraction,
        &mut stats.grad_norm,
    ] {
        *v /= count;
    }
    stats.learning_rate = learner.lr;
    learner.updates += 1;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::super::policy::{gaussian_log_prob, PolicyInit};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> (ActorCritic<f64>, Minibatch<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ac = ActorCritic::<f64>::new(2, 1, &[2], &PolicyInit { log_std: -0.3, actor_output_gain: 1.0, critic_output_gain: 1.0 }, &mut rng);
        let b = 6;
        let obs: Vec<f64> = (0..b * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (mu, ls, _) = {
            let mut c = MlpCache::default();
            let m = ac.actor_forward(&obs, b, &mut c).to_vec();
            (m, ac.log_std().to_vec(), ())
        };
        let old_ls: Vec<f64> = ls.iter().map(|l| l + 0.05).collect();
        let mut mb = Minibatch { obs, ..Default::default() };
        for i in 0..b {
            let u = mu[i] + rng.gen_range(-0.6..0.6);
            let old_mu = mu[i] + rng.gen_range(-0.05..0.05);
            mb.actions.push(u);
            mb.old_means.push(old_mu);
            // old log-probs close to the current ones keep ratios in band
            mb.old_log_probs.push(gaussian_log_prob(&[u], &[old_mu], &old_ls) + rng.gen_range(-0.05..0.05));
            mb.advantages.push(rng.gen_range(-1.0..1.0));
            mb.targets.push(rng.gen_range(-1.0..1.0));
        }
        (ac, mb, old_ls)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (ac, mb, old_ls) = toy();
        let cfg = PpoConfig { bound_limit: 0.1, ..Default::default() };
        assert!(ac.params.len() >= 10);
        let mut ws = Workspace::default();
        let mut grad = vec![0.0; ac.params.len()];
        let parts = loss_and_grad(&ac, &mb, &old_ls, &cfg, &mut ws, &mut grad);
        assert!(parts.value > 0.0 && parts.entropy != 0.0);
        let h = 1e-6;
        for k in 0..ac.params.len() {
            let f = |d: f64| {
                let mut p = ac.clone();
                p.params[k] += d;
                let mut g = vec![0.0; p.params.len()];
                loss_and_grad(&p, &mb, &old_ls, &cfg, &mut Workspace::default(), &mut g).total
            };
            let fd = (f(h) - f(-h)) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-6);
            assert!(rel < 1e-4, "param {k}: fd {fd} analytic {}", grad[k]);
        }
    }

    #[test]
    fn in_band_surrogate_equals_unclipped() {
        let (ac, mut mb, old_ls) = toy();
        // make every ratio exactly 1
        let mut c = MlpCache::default();
        let mu = ac.actor_forward(&mb.obs, 6, &mut c).to_vec();
        let ls: Vec<f64> = ac.log_std().to_vec();
        for i in 0..6 {
            mb.old_log_probs[i] = gaussian_log_prob(&[mb.actions[i]], &[mu[i]], &ls);
        }
        let parts = loss_and_grad(&ac, &mb, &old_ls, &PpoConfig::default(), &mut Workspace::default(), &mut vec![0.0; ac.params.len()]);
        let unclipped = -mb.advantages.iter().sum::<f64>() / 6.0;
        assert!((parts.policy - unclipped).abs() < 1e-12);
        assert_eq!(parts.clip_fraction, 0.0);
    }

    #[test]
    fn running_stat_matches_batch_moments() {
        let mut s = RunningStat::new(2);
        let data: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin() * if i % 2 == 0 { 1.0 } else { 3.0 }).collect();
        s.update(&data[..80], 2);
        s.update(&data[80..], 2);
        for k in 0..2 {
            let col: Vec<f64> = data.iter().skip(k).step_by(2).copied().collect();
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / col.len() as f64;
            assert!((s.mean[k] - m).abs() < 1e-5);
            assert!((s.var[k] - v).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ac = ActorCritic::<f32>::new(3, 2, &[8, 8], &PolicyInit::default(), &mut rng);
        let mut buf = RolloutBuffer::<f32>::new(4, 8, 3, 2);
        for v in buf.obs.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        for v in buf.actions.iter_mut().chain(buf.rewards.iter_mut()) {
            *v = rng.gen_range(-1.0..1.0);
        }
        buf.finish(&[0.0; 4], 0.99, 0.95);
        let mut learner = Learner::new(ac.clone(), 0.0);
        let cfg = PpoConfig { minibatches: 2, ..Default::default() };
        ppo_update(&mut learner, &buf, &cfg, &mut rng).unwrap();
        assert_eq!(learner.ac.params, ac.params);
    }
}
