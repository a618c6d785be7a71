//! Versioned JSON policy checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::algo::{Learner, RunningStat};
use super::policy::ActorCritic;
use super::rollout::Agent;
use crate::error::CheckpointError;
use crate::rewards::JumpMode;

pub const CHECKPOINT_FORMAT: &str = "quadjump-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub mode: JumpMode,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: Vec<usize>,
    pub update: usize,
    pub learning_rate: f64,
    /// `[actor | log_std | critic]`, row-major weights then biases per layer.
    pub params: Vec<f32>,
    pub obs_norm: RunningStat,
    pub value_norm: RunningStat,
}

impl Checkpoint {
    pub fn of(agent: &Agent<f32>, mode: JumpMode, hidden: &[usize]) -> Self {
        let ac = agent.ac();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            mode,
            obs_dim: ac.obs_dim(),
            act_dim: ac.act_dim(),
            hidden: hidden.to_vec(),
            update: agent.learner.updates,
            learning_rate: agent.learner.lr,
            params: ac.params.clone(),
            obs_norm: agent.obs_stat.clone(),
            value_norm: agent.learner.value_stat.clone(),
        }
    }

    /// Rebuilds the agent; optimizer moments start from zero.
    pub fn agent(&self) -> Result<Agent<f32>, CheckpointError> {
        let mut ac = ActorCritic::<f32>::zeros(self.obs_dim, self.act_dim, &self.hidden);
        if ac.params.len() != self.params.len() {
            return Err(CheckpointError::Mismatch(format!(
                "layout {}x{:?}x{} needs {} parameters, file has {}",
                self.obs_dim,
                self.hidden,
                self.act_dim,
                ac.params.len(),
                self.params.len()
            )));
        }
        if self.obs_norm.mean.len() != self.obs_dim || self.value_norm.mean.len() != 1 {
            return Err(CheckpointError::Mismatch("normalizer dimensions".into()));
        }
        ac.params.clone_from(&self.params);
        let mut learner = Learner::new(ac, self.learning_rate);
        learner.value_stat = self.value_norm.clone();
        learner.updates = self.update;
        Ok(Agent { learner, obs_stat: self.obs_norm.clone() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CheckpointError> {
        let c: Checkpoint = serde_json::from_str(s).map_err(|e| CheckpointError::Format(e.to_string()))?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(CheckpointError::Format(format!("unknown format `{}`", c.format)));
        }
        if c.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Format(format!("unsupported version {}", c.version)));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let s = std::fs::read_to_string(path)
            .map_err(|source| CheckpointError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::super::algo::PpoConfig;
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let cfg = PpoConfig { hidden: vec![8, 4], ..Default::default() };
        let mut agent = Agent::<f32>::new(20, 4, &cfg);
        agent.obs_stat.update(&(0..40).map(|i| i as f64 * 0.1).collect::<Vec<_>>(), 20);
        let c = Checkpoint::of(&agent, JumpMode::Vertical, &cfg.hidden);
        let back = Checkpoint::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.agent().unwrap().learner.ac.params, agent.learner.ac.params);
    }

    #[test]
    fn layout_mismatch_is_reported() {
        let cfg = PpoConfig { hidden: vec![8], ..Default::default() };
        let mut c = Checkpoint::of(&Agent::<f32>::new(3, 2, &cfg), JumpMode::Vertical, &cfg.hidden);
        c.hidden = vec![9];
        assert!(matches!(c.agent(), Err(CheckpointError::Mismatch(_))));
        let mut bad = c.clone();
        bad.version = 99;
        assert!(Checkpoint::from_json(&bad.to_json()).is_err());
    }
}
