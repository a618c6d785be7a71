//! Tanh-squashed Gaussian actor, separate critic, Adam.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::nn::{Mlp, MlpCache, Real};

pub const LOG_STD_BOUNDS: (f64, f64) = (-5.0, 1.0);
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Actor and critic with all parameters in one flat vector:
/// `[actor | log_std | critic]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorCritic<T> {
    pub actor: Mlp,
    pub critic: Mlp,
    pub params: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyInit {
    pub log_std: f64,
    pub actor_output_gain: f64,
    pub critic_output_gain: f64,
}

impl Default for PolicyInit {
    fn default() -> Self {
        Self { log_std: -0.7, actor_output_gain: 0.01, critic_output_gain: 1.0 }
    }
}

impl<T: Real> ActorCritic<T> {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, hidden: &[usize], init: &PolicyInit, rng: &mut R) -> Self {
        let sizes = |out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let actor = Mlp::new(&sizes(act_dim));
        let critic = Mlp::new(&sizes(1));
        let mut ac = Self { params: vec![T::ZERO; actor.n_params() + act_dim + critic.n_params()], actor, critic };
        let (a, rest) = ac.params.split_at_mut(ac.actor.n_params());
        let (ls, c) = rest.split_at_mut(act_dim);
        ac.actor.init(a, init.actor_output_gain, rng);
        ls.fill(T::from_f64(init.log_std));
        ac.critic.init(c, init.critic_output_gain, rng);
        ac
    }

    /// All-zero parameters.
    pub fn zeros(obs_dim: usize, act_dim: usize, hidden: &[usize]) -> Self {
        let mut s = vec![obs_dim];
        s.extend_from_slice(hidden);
        let mut sa = s.clone();
        sa.push(act_dim);
        s.push(1);
        let (actor, critic) = (Mlp::new(&sa), Mlp::new(&s));
        Self { params: vec![T::ZERO; actor.n_params() + act_dim + critic.n_params()], actor, critic }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn actor_range(&self) -> std::ops::Range<usize> {
        0..self.actor.n_params()
    }

    pub fn log_std_range(&self) -> std::ops::Range<usize> {
        let a = self.actor.n_params();
        a..a + self.act_dim()
    }

    pub fn critic_range(&self) -> std::ops::Range<usize> {
        let s = self.log_std_range().end;
        s..s + self.critic.n_params()
    }

    pub fn log_std(&self) -> &[T] {
        &self.params[self.log_std_range()]
    }

    pub fn clamp_log_std(&mut self) {
        let r = self.log_std_range();
        let (lo, hi) = (T::from_f64(LOG_STD_BOUNDS.0), T::from_f64(LOG_STD_BOUNDS.1));
        for v in &mut self.params[r] {
            if *v < lo {
                *v = lo;
            } else if *v > hi {
                *v = hi;
            }
        }
    }

    /// Pre-squash means, `batch × act_dim`.
    pub fn actor_forward<'c>(&self, obs: &[T], batch: usize, cache: &'c mut MlpCache<T>) -> &'c [T] {
        self.actor.forward(&self.params[self.actor_range()], obs, batch, cache)
    }

    pub fn critic_forward<'c>(&self, obs: &[T], batch: usize, cache: &'c mut MlpCache<T>) -> &'c [T] {
        self.critic.forward(&self.params[self.critic_range()], obs, batch, cache)
    }

    /// Action means `tanh(mu)`, pre-squash `log_std` and values.
    pub fn policy_forward(&self, obs: &[T], batch: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut c = MlpCache::default();
        let mean = self.actor_forward(obs, batch, &mut c).iter().map(|m| m.to_f64().tanh()).collect();
        let value = self.critic_forward(obs, batch, &mut c).iter().map(|v| v.to_f64()).collect();
        (mean, self.log_std().iter().map(|v| v.to_f64()).collect(), value)
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

/// Gaussian log-density of pre-squash sample `u`.
pub fn gaussian_log_prob(u: &[f64], mu: &[f64], log_std: &[f64]) -> f64 {
    u.iter()
        .zip(mu)
        .zip(log_std)
        .map(|((u, m), ls)| {
            let z = (u - m) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

/// `log(1 - tanh(u)^2)` summed, computed stably.
pub fn tanh_log_det(u: &[f64]) -> f64 {
    u.iter().map(|u| 2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))).sum()
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Log-density of the squashed action `tanh(u)`.
pub fn squashed_log_prob(u: &[f64], mu: &[f64], log_std: &[f64]) -> f64 {
    gaussian_log_prob(u, mu, log_std) - tanh_log_det(u)
}

/// Entropy of the pre-squash Gaussian.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| 0.5 + HALF_LN_2PI + ls).sum()
}

/// Draws pre-squash `u` into `out`.
pub fn sample_gaussian<R: Rng + ?Sized>(mu: &[f64], log_std: &[f64], rng: &mut R, out: &mut [f64]) {
    for ((o, m), ls) in out.iter_mut().zip(mu).zip(log_std) {
        let z: f64 = rng.sample(StandardNormal);
        *o = m + ls.exp() * z;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub hp: AdamParams,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, hp: AdamParams) -> Self {
        Self { hp, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step<T: Real>(&mut self, params: &mut [T], grad: &[T], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        if lr == 0.0 {
            return;
        }
        let AdamParams { beta1, beta2, eps } = self.hp;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let step = lr * c2.sqrt() / c1;
        for i in 0..params.len() {
            let g = grad[i].to_f64();
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let p = params[i].to_f64() - step * self.m[i] / (self.v[i].sqrt() + eps);
            params[i] = T::from_f64(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs() {
        let ac = ActorCritic::<f64>::zeros(5, 3, &[8, 8]);
        let (mean, _, value) = ac.policy_forward(&[0.3; 10], 2);
        assert!(mean.iter().all(|m| *m == 0.0));
        assert!(value.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identical_rows_give_identical_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ac = ActorCritic::<f32>::new(4, 2, &[16, 16], &PolicyInit::default(), &mut rng);
        let row = [0.1f32, -0.5, 2.0, 0.7];
        let obs: Vec<f32> = row.iter().cycle().take(4 * 6).copied().collect();
        let (mean, _, value) = ac.policy_forward(&obs, 6);
        for r in 1..6 {
            assert_eq!(mean[2 * r..2 * r + 2], mean[..2]);
            assert_eq!(value[r], value[0]);
        }
        assert!(mean.iter().all(|m| m.abs() <= 1.0));
    }

    #[test]
    fn log_prob_matches_density_formula() {
        let u = [0.3f64, -1.2];
        let mu = [0.1f64, -1.0];
        let ls = [-0.5f64, 0.2];
        let mut want = 0.0;
        for k in 0..2 {
            let s = ls[k].exp();
            want += (-(u[k] - mu[k]).powi(2) / (2.0 * s * s)).exp().ln() - (s * (2.0 * std::f64::consts::PI).sqrt()).ln();
        }
        assert!((gaussian_log_prob(&u, &mu, &ls) - want).abs() < 1e-12);
        let det: f64 = u.iter().map(|x: &f64| (1.0 - x.tanh().powi(2)).ln()).sum();
        assert!((tanh_log_det(&u) - det).abs() < 1e-12);
    }

    #[test]
    fn adam_with_zero_lr_keeps_parameters() {
        let mut p = vec![0.5f32, -0.25, 3.0];
        let before = p.clone();
        let mut adam = Adam::new(3, AdamParams::default());
        adam.step(&mut p, &[1.0, -2.0, 0.5], 0.0);
        assert_eq!(p, before);
    }

    #[test]
    fn adam_descends_a_quadratic() {
        let mut p = vec![3.0f64, -2.0];
        let mut adam = Adam::new(2, AdamParams::default());
        for _ in 0..2000 {
            let g = vec![2.0 * p[0], 2.0 * p[1]];
            adam.step(&mut p, &g, 0.01);
        }
        assert!(p.iter().all(|v| v.abs() < 1e-2), "{p:?}");
    }
}
