//! The jumping task as a policy environment: RSI resets, randomized
//! physics, delayed actions, shaped rewards and terminations.

use rand_chacha::ChaCha8Rng;

use crate::actuator::FilterParams;
use crate::ballistic::{estimate_apex, estimate_landing, BallisticState};
use crate::control::{jumping_scaling, Controller, IntervalReport, Rates};
use crate::curriculum::{sample_command, sample_initial_state, CurriculumConfig, CurriculumState, RsiStage};
use crate::error::SimError;
use crate::observations::{
    build_observation, randomize_domain, DelayLine, ObsCommand, ObsContext, ObsMode, ObservationNoise,
    ObservationSpec, RandomizationProfile, RandomizationRanges, WrenchSchedule,
};
use crate::ppo::env::{Env, EpisodeEnd, Step};
use crate::rewards::{
    common_jump_rewards, horizontal_jump_rewards, regularization_rewards, termination_check, vertical_jump_rewards,
    ApexDetector, EpisodeStatus, JumpCommand, JumpInput, JumpMode, JumpProgress, RegularizationInput, RewardBreakdown,
    RewardConfig, TerminationConfig,
};
use crate::sim::{JumpPhase, OutcomeTracker, SimParams, SimState, Simulator, N_ACT};

#[derive(Clone, Debug)]
pub struct JumpEnvConfig {
    pub mode: JumpMode,
    pub sim: SimParams,
    pub rates: Rates,
    pub filter: FilterParams,
    pub rewards: RewardConfig,
    pub termination: TerminationConfig,
    pub curriculum: CurriculumConfig,
    pub noise: ObservationNoise,
    pub randomization: RandomizationRanges,
    /// Seconds simulated after touchdown.
    pub landed_duration: f64,
    pub max_episode_time: f64,
    /// Landing x is read this long after touchdown.
    pub settle_window: f64,
}

impl JumpEnvConfig {
    pub fn new(mode: JumpMode) -> Self {
        let sim = SimParams::default();
        Self {
            mode,
            filter: FilterParams { sum_bounds: sim.geometry.transversal_sum_bounds, ..Default::default() },
            sim,
            rates: Rates::default(),
            rewards: RewardConfig::default(),
            termination: TerminationConfig::default(),
            curriculum: CurriculumConfig::default(),
            noise: ObservationNoise::default(),
            randomization: RandomizationRanges::profile(RandomizationProfile::Jumping),
            landed_duration: 0.5,
            max_episode_time: 4.0,
            settle_window: 0.3,
        }
    }

    /// Same task with noise, randomization and RSI off.
    pub fn evaluation(&self) -> Self {
        let mut c = self.clone();
        c.noise = ObservationNoise::off();
        c.randomization = RandomizationRanges::profile(RandomizationProfile::Off);
        c.curriculum.mixture = crate::curriculum::StageMixture::standing_only();
        c
    }

    pub fn obs_mode(&self) -> ObsMode {
        match self.mode {
            JumpMode::Vertical => ObsMode::VerticalJump,
            JumpMode::Horizontal => ObsMode::HorizontalJump,
        }
    }
}

/// Outcome of a finished jumping episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEpisode {
    pub command: JumpCommand,
    pub stage: RsiStage,
    /// Realized apex, if the apex was observed.
    pub h_max: Option<f64>,
    /// Base displacement along x at the settle time, if landed.
    pub landing_distance: Option<f64>,
    /// Signed task error: `h_max - h*` or `x* - distance`.
    pub error: Option<f64>,
    pub success: bool,
    pub termination: Option<&'static str>,
    pub reward: f64,
    pub length: usize,
}

pub struct JumpEnv {
    pub cfg: JumpEnvConfig,
    spec: ObservationSpec,
    sim: Simulator,
    ctl: Controller,
    cur: CurriculumState,
    default_joints: [f64; N_ACT],
    /// Command used for every reset instead of a curriculum draw.
    pub fixed_command: Option<JumpCommand>,
    state: SimState,
    cmd: JumpCommand,
    stage: RsiStage,
    k: u64,
    t0: f64,
    start_x: f64,
    prev_action: [f64; N_ACT],
    prev_torques: [f64; N_ACT],
    delay: DelayLine<[f64; N_ACT]>,
    wrench: WrenchSchedule,
    apex: ApexDetector,
    apex_height: Option<f64>,
    tracker: OutcomeTracker,
    jumped: bool,
    landing_decel: f64,
    ep_reward: f64,
    ep_len: usize,
    /// Reward terms of the latest step.
    pub last_rewards: RewardBreakdown,
    pub last_episode: Option<JumpEpisode>,
}

impl JumpEnv {
    pub fn new(cfg: JumpEnvConfig, cur: &CurriculumState) -> Result<Self, SimError> {
        let sim = Simulator::new(cfg.sim)?;
        let ctl = Controller::new(&cfg.sim.geometry, jumping_scaling(), cfg.filter, cfg.rates);
        let mid = 0.5 * (cfg.curriculum.deep_squat.0 + cfg.curriculum.deep_squat.1);
        let state = sim.standing_state(mid, 0.0)?;
        let default_joints = state.joint_positions();
        Ok(Self {
            spec: ObservationSpec::new(cfg.obs_mode()),
            sim,
            ctl,
            cur: cur.clone(),
            default_joints,
            fixed_command: None,
            state,
            cmd: JumpCommand::vertical(0.5),
            stage: RsiStage::StandingSquatting,
            k: 0,
            t0: 0.0,
            start_x: 0.0,
            prev_action: [0.0; N_ACT],
            prev_torques: [0.0; N_ACT],
            delay: DelayLine::new(0, [0.0; N_ACT]),
            wrench: WrenchSchedule::new(cfg.randomization.wrench_interval),
            apex: ApexDetector::default(),
            apex_height: None,
            tracker: OutcomeTracker::new(cfg.settle_window, cfg.rewards.landing_window),
            jumped: false,
            landing_decel: 0.0,
            ep_reward: 0.0,
            ep_len: 0,
            last_rewards: RewardBreakdown::default(),
            last_episode: None,
            cfg,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn command(&self) -> &JumpCommand {
        &self.cmd
    }

    pub fn stage(&self) -> RsiStage {
        self.stage
    }

    /// Joint angles the observation reports relative to.
    pub fn reference_pose(&self) -> [f64; N_ACT] {
        self.default_joints
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn set_curriculum(&mut self, cur: &CurriculumState) {
        self.cur.vertical = cur.vertical;
        self.cur.forward = cur.forward;
        self.cur.lateral = cur.lateral;
        self.cur.breadth = cur.breadth;
    }

    fn elapsed(&self) -> f64 {
        self.state.time - self.t0
    }

    fn since_touchdown(&self) -> Option<f64> {
        (self.state.phase == JumpPhase::Landed).then(|| self.state.time - self.state.phase_entry_time)
    }

    fn ballistic(&self) -> BallisticState {
        let s = &self.state;
        BallisticState::new(s.base_pos[0], s.base_pos[1], s.base_vel[0], s.base_vel[1], self.sim.params().body.gravity)
    }

    /// `x* - (x - x0)` along the forward axis.
    fn tracking_error(&self, x: f64) -> f64 {
        self.cmd.p_star[0] - (x - self.start_x)
    }

    fn observe(&self, rng: &mut ChaCha8Rng, obs: &mut [f64]) {
        let command = match self.cmd.mode {
            JumpMode::Vertical => ObsCommand::Vertical { h_star: self.cmd.h_star, c: self.cmd.c },
            JumpMode::Horizontal => ObsCommand::Horizontal { error: [self.tracking_error(self.state.base_pos[0]), 0.0] },
        };
        let ctx = ObsContext {
            state: &self.state,
            joint_pos: self.ctl.measured_positions(&self.state),
            default_joints: &self.default_joints,
            prev_action: &self.prev_action,
            command,
            gravity: self.sim.params().body.gravity,
            ground_height: self.sim.params().ground_height,
        };
        build_observation(&self.spec, &ctx, &self.cfg.noise, rng, obs);
    }

    /// Resets with an explicit command and start stage.
    pub fn reset_with(
        &mut self,
        cmd: JumpCommand,
        stage: RsiStage,
        rng: &mut ChaCha8Rng,
        obs: &mut [f64],
    ) -> Result<(), SimError> {
        let ep = randomize_domain(&self.cfg.sim, &self.cfg.randomization, self.cfg.rates.policy_dt(), rng);
        self.sim.set_params(ep.sim)?;
        self.ctl.joint_offsets = ep.joint_offsets;
        let sample = sample_initial_state(stage, &cmd, &self.sim, &self.cfg.curriculum, &self.cur, rng);
        self.state = sample.state;
        self.stage = sample.stage;
        self.cmd = cmd;
        self.cmd.c = 1.0;
        self.k = 0;
        self.t0 = self.state.time;
        self.start_x = if self.stage == RsiStage::StandingSquatting { self.state.base_pos[0] } else { 0.0 };
        let q = self.ctl.measured_positions(&self.state);
        let scale = &self.ctl.scaling;
        self.prev_action = std::array::from_fn(|j| ((q[j] - scale.defaults[j]) / scale.scales[j]).clamp(-1.0, 1.0));
        self.prev_torques = [0.0; N_ACT];
        self.delay = DelayLine::new(ep.delay_steps, self.prev_action);
        self.wrench = WrenchSchedule::new(self.cfg.randomization.wrench_interval);
        self.sim.set_external_wrench([0.0; 2], 0.0);
        self.apex.reset();
        self.apex_height = None;
        self.tracker = OutcomeTracker::new(self.cfg.settle_window, self.cfg.rewards.landing_window);
        self.jumped = self.stage != RsiStage::StandingSquatting;
        if self.jumped {
            self.tracker.mark_executed();
        }
        if sample.apex_passed || self.state.phase == JumpPhase::Landed {
            self.apex.mark_fired();
        }
        if self.state.phase == JumpPhase::Landed {
            self.cmd.c = 0.0;
        }
        self.tracker.observe(&self.state);
        self.landing_decel = 0.0;
        self.ep_reward = 0.0;
        self.ep_len = 0;
        self.observe(rng, obs);
        Ok(())
    }

    fn rewards(&self, action: &[f64; N_ACT], report: &IntervalReport, progress: &JumpProgress) -> RewardBreakdown {
        let s = &self.state;
        let q = s.joint_positions();
        let qd = s.joint_velocities();
        let mut b = regularization_rewards(
            &RegularizationInput {
                raw_targets: &report.raw_targets,
                safe_targets: &report.safe_targets,
                torques: &report.torques,
                prev_torques: &self.prev_torques,
                joint_acc: &report.joint_acc,
                actions: action,
                prev_actions: &self.prev_action,
            },
            &self.cfg.rewards.weights,
        );
        let gf = s.ground_force.iter().fold([0.0; 2], |a, f| [a[0] + f[0], a[1] + f[1]]);
        let input = JumpInput {
            phase: s.phase,
            since_touchdown: self.since_touchdown(),
            base_pos: s.base_pos,
            base_vel: s.base_vel,
            base_acc: report.mean_base_acc,
            pitch: s.pitch,
            pitch_rate: s.pitch_rate,
            transversal: &q,
            transversal_vel: &qd,
            lateral_rel: &[],
            left_right_diff: &[],
            ground_force: gf,
        };
        match self.cmd.mode {
            JumpMode::Vertical => b.extend(vertical_jump_rewards(&input, progress, &self.cmd, &self.cfg.rewards)),
            JumpMode::Horizontal => {
                let e = [self.tracking_error(s.base_pos[0]), 0.0];
                b.extend(horizontal_jump_rewards(&input, e, progress, &self.cfg.rewards));
            }
        }
        b.extend(common_jump_rewards(&input, &self.cfg.rewards));
        b
    }

    fn joint_crash(&self) -> bool {
        let m = self.sim.params().stops.margin;
        let q = self.state.joint_positions();
        self.ctl.limits().iter().zip(q).any(|((lo, hi), q)| q < lo - m || q > hi + m)
    }

    fn finish(&mut self, termination: Option<&'static str>) -> JumpEpisode {
        let outcome = self.tracker.finish().ok();
        let (h_max, landing_distance, error) = match self.cmd.mode {
            JumpMode::Vertical => {
                let h = self.apex_height;
                (h, None, h.map(|h| h - self.cmd.h_star))
            }
            JumpMode::Horizontal => {
                let d = outcome.filter(|o| o.landing_time.is_some()).map(|o| o.landing_x - self.start_x);
                (outcome.map(|o| o.h_max), d, d.map(|d| self.cmd.p_star[0] - d))
            }
        };
        let success = error.is_some_and(|e| e.abs() < self.cfg.curriculum.success_error);
        JumpEpisode {
            command: self.cmd,
            stage: self.stage,
            h_max,
            landing_distance,
            error,
            success,
            termination,
            reward: self.ep_reward,
            length: self.ep_len,
        }
    }

    fn draw_command(&self, rng: &mut ChaCha8Rng) -> JumpCommand {
        self.fixed_command.unwrap_or_else(|| sample_command(self.cfg.mode, &self.cur, rng))
    }
}

impl Env for JumpEnv {
    fn obs_dim(&self) -> usize {
        self.spec.dim()
    }

    fn act_dim(&self) -> usize {
        N_ACT
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng, obs: &mut [f64]) -> Result<(), SimError> {
        let cmd = self.draw_command(rng);
        let stage = self.cfg.curriculum.mixture.sample(rng);
        self.reset_with(cmd, stage, rng, obs)
    }

    fn step(&mut self, action: &[f64], rng: &mut ChaCha8Rng, obs: &mut [f64]) -> Result<Step, SimError> {
        let a: [f64; N_ACT] = std::array::from_fn(|j| action[j].clamp(-1.0, 1.0));
        let applied = self.delay.push(a);
        if let Some((f, t)) = self.wrench.poll(self.elapsed(), &self.cfg.randomization, rng) {
            self.sim.set_external_wrench(f, t);
        }
        let report = self.ctl.run_interval(&self.sim, &mut self.state, &applied, self.k)?;
        self.k += 1;
        self.ep_len += 1;
        let s = self.state;
        self.tracker.observe(&s);
        self.jumped |= s.phase != JumpPhase::Stance;
        if s.phase == JumpPhase::Landed {
            self.cmd.c = 0.0;
        }

        let fired = self.apex.observe(s.phase, s.base_vel[1]);
        if fired {
            self.apex_height = Some(s.max_height);
        }
        let b = self.ballistic();
        let est_apex = self.apex.before_apex(s.phase).then(|| estimate_apex(&b));
        let est_landing = (s.phase == JumpPhase::InFlight)
            .then(|| estimate_landing(&b, self.sim.landing_height(&s)).ok())
            .flatten()
            .map(|(x, _)| self.tracking_error(x));
        let progress = JumpProgress {
            apex_event: fired.then_some(s.max_height),
            est_apex,
            est_landing_error: est_landing.map(|e| [e, 0.0]),
        };
        let rewards = self.rewards(&a, &report, &progress);
        let reward = rewards.total;
        self.last_rewards = rewards;
        self.prev_action = a;
        self.prev_torques = report.torques;
        self.ep_reward += reward;

        let since = self.since_touchdown();
        if since.is_some_and(|t| t <= self.cfg.rewards.landing_window) {
            self.landing_decel = self.landing_decel.max(report.peak_base_acc);
        }
        let (predicted_error, measured_error) = match self.cmd.mode {
            JumpMode::Vertical => (est_apex.map(|h| h - self.cmd.h_star), self.apex_height.map(|h| h - self.cmd.h_star)),
            JumpMode::Horizontal => (est_landing, since.map(|_| self.tracking_error(s.base_pos[0]))),
        };
        let status = EpisodeStatus {
            time: self.elapsed(),
            phase: s.phase,
            jumped: self.jumped,
            base_z: s.base_pos[1] - self.sim.params().ground_height,
            travel: (s.base_pos[0] - self.start_x).abs(),
            predicted_error,
            measured_error,
            landing_decel: since.map(|_| self.landing_decel),
            joint_crash: self.joint_crash(),
        };
        let termination = termination_check(&status, &self.cfg.termination).map(|r| r.as_str());
        let done = termination.is_some()
            || since.is_some_and(|t| t >= self.cfg.landed_duration - 1e-9)
            || self.elapsed() >= self.cfg.max_episode_time - 1e-9;
        if !done {
            self.observe(rng, obs);
            return Ok(Step { reward, done, episode: None });
        }
        let ep = self.finish(termination);
        self.last_episode = Some(ep);
        let counts = ep.stage == RsiStage::StandingSquatting;
        let end = EpisodeEnd {
            reward: ep.reward,
            length: ep.length,
            success: counts.then_some(ep.success),
            error: ep.error,
            terminated_by: termination,
        };
        self.reset(rng, obs)?;
        Ok(Step { reward, done, episode: Some(end) })
    }
}
