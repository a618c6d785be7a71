//! Tiny environments that gate the learner before the full jumping task.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::env::{Env, EpisodeEnd, Step};
use crate::error::SimError;

/// One-step bandit: action `a > 0` pays 1, otherwise 0.
#[derive(Clone, Debug, Default)]
pub struct Bandit;

impl Env for Bandit {
    fn obs_dim(&self) -> usize {
        1
    }

    fn act_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, _rng: &mut ChaCha8Rng, obs: &mut [f64]) -> Result<(), SimError> {
        obs[0] = 1.0;
        Ok(())
    }

    fn step(&mut self, action: &[f64], _rng: &mut ChaCha8Rng, obs: &mut [f64]) -> Result<Step, SimError> {
        let win = action[0] > 0.0;
        let reward = if win { 1.0 } else { 0.0 };
        obs[0] = 1.0;
        Ok(Step {
            reward,
            done: true,
            episode: Some(EpisodeEnd { reward, length: 1, success: Some(win), error: None, terminated_by: None }),
        })
    }
}

/// 1-D point mass on the ground. One push sets the takeoff speed
/// `v = v_max * (a + 1) / 2`; the episode scores the apex against a
/// commanded height drawn per episode.
#[derive(Clone, Debug)]
pub struct PointMassJump {
    pub v_max: f64,
    pub gravity: f64,
    pub target_range: (f64, f64),
    pub tolerance: f64,
    target: f64,
}

impl Default for PointMassJump {
    fn default() -> Self {
        Self { v_max: 5.0, gravity: 9.81, target_range: (0.2, 1.0), tolerance: 0.1, target: 0.5 }
    }
}

impl PointMassJump {
    pub fn apex(&self, action: f64) -> f64 {
        let v = self.v_max * 0.5 * (action.clamp(-1.0, 1.0) + 1.0);
        v * v / (2.0 * self.gravity)
    }
}

impl Env for PointMassJump {
    fn obs_dim(&self) -> usize {
        1
    }

    fn act_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng, obs: &mut [f64]) -> Result<(), SimError> {
        self.target = rng.gen_range(self.target_range.0..=self.target_range.1);
        obs[0] = self.target;
        Ok(())
    }

    fn step(&mut self, action: &[f64], rng: &mut ChaCha8Rng, obs: &mut [f64]) -> Result<Step, SimError> {
        let err = self.apex(action[0]) - self.target;
        let reward = (-(err / 0.1).powi(2)).exp();
        let end = EpisodeEnd {
            reward,
            length: 1,
            success: Some(err.abs() < self.tolerance),
            error: Some(err),
            terminated_by: None,
        };
        self.reset(rng, obs)?;
        Ok(Step { reward, done: true, episode: Some(end) })
    }
}
