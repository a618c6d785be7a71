//! Training and evaluation of the jumping policies.

use serde::{Deserialize, Serialize};

use super::algo::PpoConfig;
use super::checkpoint::Checkpoint;
use super::env::VecEnv;
use super::rollout::{run_ppo, Agent, Flow};
use crate::curriculum::{update_curriculum, CurriculumChange, CurriculumState, CurriculumTraceRow};
use crate::env::{JumpEnv, JumpEnvConfig};
use crate::error::{ConfigError, TrainError};
use crate::rewards::{JumpCommand, JumpMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Updates between evaluations; 0 disables them.
    pub every: usize,
    /// Commands across the capped range.
    pub grid_points: usize,
    pub episodes_per_command: usize,
    /// Stop once the evaluation success rate reaches this.
    pub stop_success: Option<f64>,
    /// Stop once the evaluation mean absolute error drops to this, m.
    pub stop_mean_abs_error: Option<f64>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { every: 10, grid_points: 9, episodes_per_command: 4, stop_success: None, stop_mean_abs_error: None }
    }
}

impl EvalSettings {
    pub fn satisfied(&self, r: &EvalReport) -> bool {
        let any = self.stop_success.is_some() || self.stop_mean_abs_error.is_some();
        any && self.stop_success.map_or(true, |s| r.success_rate >= s)
            && self.stop_mean_abs_error.map_or(true, |e| r.mean_abs_error <= e)
    }
}

#[derive(Clone, Debug)]
pub struct TrainSettings {
    pub env: JumpEnvConfig,
    pub ppo: PpoConfig,
    pub eval: EvalSettings,
    /// Step environments on the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

pub const CURVES_CSV_VERSION: u32 = 1;
pub const EVAL_CSV_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub update: usize,
    pub env_steps: u64,
    pub mean_reward: f64,
    pub episodes: usize,
    /// Success rate of standing starts finished in this rollout.
    pub train_success: Option<f64>,
    pub vertical: (f64, f64),
    pub forward: (f64, f64),
    pub policy_loss: f64,
    pub value_loss: f64,
    pub kl: f64,
    pub entropy: f64,
    pub learning_rate: f64,
    pub eval_success: Option<f64>,
    pub eval_mean_abs_error: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut s = format!("# quadjump curves v{CURVES_CSV_VERSION}\n");
    s.push_str("update,env_steps,mean_reward,episodes,train_success,vertical_lo,vertical_hi,forward_lo,forward_hi,policy_loss,value_loss,kl,entropy,learning_rate,eval_success,eval_mean_abs_error\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.update,
            r.env_steps,
            r.mean_reward,
            r.episodes,
            opt(r.train_success),
            r.vertical.0,
            r.vertical.1,
            r.forward.0,
            r.forward.1,
            r.policy_loss,
            r.value_loss,
            r.kl,
            r.entropy,
            r.learning_rate,
            opt(r.eval_success),
            opt(r.eval_mean_abs_error)
        ));
    }
    s
}

/// One evaluated jump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalRow {
    pub index: usize,
    pub command: JumpCommand,
    /// Commanded apex height or forward distance.
    pub target: f64,
    /// Realized apex height or forward distance.
    pub achieved: Option<f64>,
    pub error: Option<f64>,
    pub success: bool,
    pub out_of_distribution: bool,
    pub termination: Option<&'static str>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub success_rate: f64,
    /// Over all rows; a jump without a measurement counts with its full target.
    pub mean_abs_error: f64,
}

impl EvalReport {
    pub fn csv(&self) -> String {
        let mut s = format!("# quadjump eval v{EVAL_CSV_VERSION}\n");
        s.push_str("index,mode,target,achieved,error,success,out_of_distribution,termination\n");
        for r in &self.rows {
            let mode = match r.command.mode {
                JumpMode::Vertical => "vertical",
                JumpMode::Horizontal => "horizontal",
            };
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.index,
                mode,
                r.target,
                opt(r.achieved),
                opt(r.error),
                r.success as u8,
                r.out_of_distribution as u8,
                r.termination.unwrap_or("")
            ));
        }
        s
    }

    /// Rows grouped by target: `(target, success rate, mean achieved)`.
    pub fn per_target(&self) -> Vec<(f64, f64, Option<f64>)> {
        let mut targets: Vec<f64> = self.rows.iter().map(|r| r.target).collect();
        targets.sort_by(f64::total_cmp);
        targets.dedup();
        targets
            .into_iter()
            .map(|t| {
                let rows: Vec<&EvalRow> = self.rows.iter().filter(|r| r.target == t).collect();
                let ok = rows.iter().filter(|r| r.success).count() as f64 / rows.len() as f64;
                let got: Vec<f64> = rows.iter().filter_map(|r| r.achieved).collect();
                let mean = (!got.is_empty()).then(|| got.iter().sum::<f64>() / got.len() as f64);
                (t, ok, mean)
            })
            .collect()
    }
}

/// `n` commands evenly spaced over `range`.
pub fn command_grid(mode: JumpMode, range: (f64, f64), n: usize) -> Vec<JumpCommand> {
    (0..n)
        .map(|i| {
            let t = if n > 1 { range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64 } else { 0.5 * (range.0 + range.1) };
            match mode {
                JumpMode::Vertical => JumpCommand::vertical(t),
                JumpMode::Horizontal => JumpCommand::horizontal(t, 0.0),
            }
        })
        .collect()
}

/// Runs `episodes` standing-start jumps per command with the mean action.
/// `cfg` is used as given; pass [`JumpEnvConfig::evaluation`] for the
/// noise-free setting.
pub fn evaluate(
    agent: &Agent<f32>,
    cfg: &JumpEnvConfig,
    commands: &[JumpCommand],
    episodes: usize,
    seed: u64,
    parallel: bool,
) -> Result<EvalReport, TrainError> {
    if commands.is_empty() || episodes == 0 {
        return Err(ConfigError::invalid("eval.grid", "no commands to evaluate").into());
    }
    let mut cfg = cfg.clone();
    cfg.curriculum.mixture = crate::curriculum::StageMixture::standing_only();
    let cur = CurriculumState::at_caps(&cfg.curriculum);
    let caps = match cfg.mode {
        JumpMode::Vertical => cfg.curriculum.vertical_caps,
        JumpMode::Horizontal => cfg.curriculum.forward_caps,
    };
    let mut envs = Vec::with_capacity(commands.len() * episodes);
    for cmd in commands {
        for _ in 0..episodes {
            let mut e = JumpEnv::new(cfg.clone(), &cur).map_err(|source| TrainError::Sim { env: envs.len(), source })?;
            e.fixed_command = Some(*cmd);
            envs.push(e);
        }
    }
    let n = envs.len();
    let mut venv = VecEnv::new(envs, seed, parallel);
    venv.reset_all().map_err(|(env, source)| TrainError::Sim { env, source })?;
    let ad = venv.act_dim();
    let mut done = vec![None; n];
    let mut steps = vec![Default::default(); n];
    let max_steps = (cfg.max_episode_time * cfg.rates.policy_hz).ceil() as usize + 2;
    for _ in 0..max_steps {
        let mut actions = agent.act_deterministic(&venv.obs, n);
        // finished rows hold still
        for (i, d) in done.iter().enumerate() {
            if d.is_some() {
                actions[i * ad..(i + 1) * ad].fill(0.0);
            }
        }
        venv.step(&actions, &mut steps).map_err(|(env, source)| TrainError::Sim { env, source })?;
        for (i, e) in venv.envs.iter().enumerate() {
            if done[i].is_none() && steps[i].episode.is_some() {
                done[i] = e.last_episode;
            }
        }
        if done.iter().all(Option::is_some) {
            break;
        }
    }
    let rows: Vec<EvalRow> = done
        .iter()
        .enumerate()
        .map(|(i, ep)| {
            let ep = ep.expect("episodes end within the time cap");
            let (target, achieved) = match ep.command.mode {
                JumpMode::Vertical => (ep.command.h_star, ep.h_max),
                JumpMode::Horizontal => (ep.command.p_star[0], ep.landing_distance),
            };
            EvalRow {
                index: i,
                command: ep.command,
                target,
                achieved,
                error: ep.error,
                success: ep.success,
                out_of_distribution: target < caps.0 - 1e-9 || target > caps.1 + 1e-9,
                termination: ep.termination,
            }
        })
        .collect();
    let m = rows.len() as f64;
    let success_rate = rows.iter().filter(|r| r.success).count() as f64 / m;
    let mean_abs_error = rows.iter().map(|r| r.error.map_or(r.target.abs(), f64::abs)).sum::<f64>() / m;
    Ok(EvalReport { rows, success_rate, mean_abs_error })
}

pub struct TrainSummary {
    pub updates: usize,
    pub agent: Agent<f32>,
    pub checkpoint: Checkpoint,
    pub curves: Vec<CurveRow>,
    pub curriculum: Vec<CurriculumTraceRow>,
    pub last_eval: Option<EvalReport>,
    pub stopped_early: bool,
}

/// Trains a policy for `settings.env.mode`. `on_update` sees every curve row.
pub fn train(settings: &TrainSettings, mut on_update: impl FnMut(&CurveRow)) -> Result<TrainSummary, TrainError> {
    let TrainSettings { env: env_cfg, ppo, eval, parallel } = settings;
    let mut cur = CurriculumState::new(&env_cfg.curriculum);
    let envs = (0..ppo.num_envs)
        .map(|i| JumpEnv::new(env_cfg.clone(), &cur).map_err(|source| TrainError::Sim { env: i, source }))
        .collect::<Result<Vec<_>, _>>()?;
    let mut venv = VecEnv::new(envs, ppo.seed, *parallel);
    let mut agent = Agent::<f32>::new(venv.obs_dim(), venv.act_dim(), ppo);
    let caps = match env_cfg.mode {
        JumpMode::Vertical => env_cfg.curriculum.vertical_caps,
        JumpMode::Horizontal => env_cfg.curriculum.forward_caps,
    };
    let grid = command_grid(env_cfg.mode, caps, eval.grid_points);
    let eval_cfg = env_cfg.evaluation();
    let mut curves = Vec::new();
    let mut trace = vec![CurriculumTraceRow::of(0, &cur)];
    let mut last_eval = None;
    let mut stopped_early = false;
    let steps_per_update = (ppo.num_envs * ppo.horizon) as u64;
    let updates = run_ppo(&mut venv, &mut agent, ppo, |venv, agent, rec| {
        let outcomes: Vec<bool> = rec.episodes.iter().filter_map(|e| e.success).collect();
        let (next, change) = update_curriculum(&cur, &env_cfg.curriculum, &outcomes);
        cur = next;
        if change != CurriculumChange::Unchanged {
            for e in venv.envs.iter_mut() {
                e.set_curriculum(&cur);
            }
            trace.push(CurriculumTraceRow::of(rec.update as u64 + 1, &cur));
        }
        let last = rec.update + 1 == ppo.max_updates;
        let report = if eval.every > 0 && ((rec.update + 1) % eval.every == 0 || last) {
            Some(evaluate(agent, &eval_cfg, &grid, eval.episodes_per_command, ppo.seed ^ 0xe7a1, *parallel)?)
        } else {
            None
        };
        let row = CurveRow {
            update: rec.update,
            env_steps: steps_per_update * (rec.update as u64 + 1),
            mean_reward: rec.mean_reward,
            episodes: rec.episodes.len(),
            train_success: (!outcomes.is_empty())
                .then(|| outcomes.iter().filter(|s| **s).count() as f64 / outcomes.len() as f64),
            vertical: cur.vertical,
            forward: cur.forward,
            policy_loss: rec.stats.policy_loss,
            value_loss: rec.stats.value_loss,
            kl: rec.stats.kl,
            entropy: rec.stats.entropy,
            learning_rate: rec.stats.learning_rate,
            eval_success: report.as_ref().map(|r| r.success_rate),
            eval_mean_abs_error: report.as_ref().map(|r| r.mean_abs_error),
        };
        on_update(&row);
        curves.push(row);
        let mut flow = Flow::Continue;
        if let Some(r) = report {
            if eval.satisfied(&r) {
                stopped_early = true;
                flow = Flow::Stop;
            }
            last_eval = Some(r);
        }
        Ok(flow)
    })?;
    let checkpoint = Checkpoint::of(&agent, env_cfg.mode, &ppo.hidden);
    Ok(TrainSummary { updates, agent, checkpoint, curves, curriculum: trace, last_eval, stopped_early })
}
