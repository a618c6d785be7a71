//! Reward library: kernels, regularization, walking, jumping and
//! termination checks.
//!
//! Every term reports its raw value; the weight (negative for penalties)
//! lives in [`RewardWeights`].

use serde::{Deserialize, Serialize};

use crate::sim::JumpPhase;

/// `exp(-x^2 / sigma^2)`
#[inline]
pub fn kernel_exp(x: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    (-(x * x) / (sigma * sigma)).exp()
}

/// `exp(-|x| / sigma)`
#[inline]
pub fn kernel_laplace(x: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    (-x.abs() / sigma).exp()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Population variance.
pub fn variance(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Kernel widths, in the unit of the argument each one wraps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sigmas {
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub sigma_3: f64,
    pub sigma_4: f64,
    pub sigma_5: f64,
    pub sigma_6: f64,
    pub sigma_7: f64,
    pub sigma_8: f64,
    pub sigma_9: f64,
    pub sigma_10: f64,
    pub sigma_11: f64,
    pub sigma_12: f64,
    pub sigma_13: f64,
    pub sigma_14: f64,
    pub sigma_15: f64,
    pub sigma_16: f64,
    pub sigma_17: f64,
    pub sigma_18: f64,
}

impl Default for Sigmas {
    fn default() -> Self {
        Self {
            sigma_1: 0.25,
            sigma_2: 0.25,
            sigma_3: 0.5,
            sigma_4: 0.1,
            sigma_5: 0.01,
            sigma_6: 0.1,
            sigma_7: 0.1,
            sigma_8: 0.1,
            sigma_9: 0.1,
            sigma_10: 0.05,
            sigma_11: 0.5,
            sigma_12: 0.25,
            sigma_13: 0.1,
            sigma_14: 0.05,
            sigma_15: 0.2,
            sigma_16: 2.0,
            sigma_17: 0.1,
            sigma_18: 0.6,
        }
    }
}

impl Sigmas {
    pub fn as_array(&self) -> [f64; 18] {
        [
            self.sigma_1, self.sigma_2, self.sigma_3, self.sigma_4, self.sigma_5, self.sigma_6,
            self.sigma_7, self.sigma_8, self.sigma_9, self.sigma_10, self.sigma_11, self.sigma_12,
            self.sigma_13, self.sigma_14, self.sigma_15, self.sigma_16, self.sigma_17, self.sigma_18,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub action_clip: f64,
    pub motor_torque: f64,
    pub joint_acceleration: f64,
    pub action_rate: f64,
    pub jerk: f64,
    pub linear_velocity_tracking: f64,
    pub yaw_rate_tracking: f64,
    pub vertical_velocity: f64,
    pub lateral_stability: f64,
    pub flat: f64,
    pub stand: f64,
    pub lateral_position: f64,
    pub transversal_position: f64,
    pub jump_height: f64,
    pub est_jump_height: f64,
    pub vertical_symmetry: f64,
    pub tracking: f64,
    pub est_tracking: f64,
    pub horizontal_symmetry: f64,
    pub angular_velocity: f64,
    pub orientation: f64,
    pub desired_joint_pos: f64,
    pub ground_force: f64,
    pub soft_impact: f64,
    pub catch_landing: f64,
    pub damp_landing: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            action_clip: -0.01,
            motor_torque: -2e-5,
            joint_acceleration: -1e-8,
            action_rate: -0.01,
            jerk: -0.005,
            linear_velocity_tracking: 1.0,
            yaw_rate_tracking: 0.5,
            vertical_velocity: -2.0,
            lateral_stability: -0.05,
            flat: -2.0,
            stand: 0.5,
            lateral_position: 0.5,
            transversal_position: 0.5,
            jump_height: 20.0,
            est_jump_height: 0.5,
            vertical_symmetry: 0.05,
            tracking: 1.0,
            est_tracking: 1.0,
            horizontal_symmetry: 0.05,
            angular_velocity: 0.05,
            orientation: 0.05,
            desired_joint_pos: 0.1,
            ground_force: -1e-7,
            soft_impact: 0.05,
            catch_landing: 0.1,
            damp_landing: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub sigma: Sigmas,
    pub weights: RewardWeights,
    /// m/s²
    pub a_max: f64,
    /// Seconds after touchdown during which the landing terms apply.
    pub landing_window: f64,
    /// Transversal targets while airborne, radians.
    pub flight_joint_targets: Vec<f64>,
    /// Transversal targets after landing, radians.
    pub landed_joint_targets: Vec<f64>,
    /// Walking joint targets, standing and moving, radians.
    pub walk_stand_transversal: Vec<f64>,
    pub walk_move_transversal: Vec<f64>,
    pub walk_lateral: Vec<f64>,
    /// Command speed below which walking uses the standing targets.
    pub walk_stand_speed: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        let deg = |d: f64| d.to_radians();
        Self {
            sigma: Sigmas::default(),
            weights: RewardWeights::default(),
            a_max: 50.0,
            landing_window: 0.3,
            flight_joint_targets: vec![deg(50.0); 4],
            landed_joint_targets: vec![deg(60.0); 4],
            walk_stand_transversal: vec![deg(60.0); 4],
            walk_move_transversal: vec![deg(55.0); 4],
            walk_lateral: vec![0.0; 2],
            walk_stand_speed: 0.1,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), (String, String)> {
        for (i, s) in self.sigma.as_array().iter().enumerate() {
            if !(*s > 0.0) {
                return Err((format!("rewards.sigma.sigma_{}", i + 1), format!("must be > 0, got {s}")));
            }
        }
        if !(self.landing_window > 0.0) {
            return Err(("rewards.landing_window".into(), "must be > 0".into()));
        }
        if !(self.a_max > 0.0) {
            return Err(("rewards.a_max".into(), "must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub name: &'static str,
    pub raw: f64,
    pub weighted: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RewardBreakdown {
    pub terms: Vec<Term>,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn push(&mut self, name: &'static str, raw: f64, weight: f64) {
        let weighted = raw * weight;
        self.terms.push(Term { name, raw, weighted });
        self.total += weighted;
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn raw(&self, name: &str) -> f64 {
        self.get(name).map_or(0.0, |t| t.raw)
    }

    pub fn extend(&mut self, other: RewardBreakdown) {
        self.total += other.total;
        self.terms.extend(other.terms);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpMode {
    Vertical,
    Horizontal,
}

impl std::str::FromStr for JumpMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vertical" => Ok(JumpMode::Vertical),
            "horizontal" => Ok(JumpMode::Horizontal),
            other => Err(format!("unknown task `{other}` (vertical|horizontal)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpCommand {
    pub mode: JumpMode,
    /// Target apex height, m (vertical).
    pub h_star: f64,
    /// Target landing point relative to the start, m (horizontal).
    pub p_star: [f64; 2],
    /// Jump trigger.
    pub c: f64,
}

impl JumpCommand {
    pub fn vertical(h_star: f64) -> Self {
        Self { mode: JumpMode::Vertical, h_star, p_star: [0.0; 2], c: 1.0 }
    }

    pub fn horizontal(x: f64, y: f64) -> Self {
        Self { mode: JumpMode::Horizontal, h_star: 0.0, p_star: [x, y], c: 1.0 }
    }

    pub fn is_valid(&self) -> bool {
        match self.mode {
            JumpMode::Vertical => self.h_star > 0.0,
            JumpMode::Horizontal => self.p_star.iter().all(|v| v.is_finite()),
        }
    }
}

/// Inputs of the regularization terms. Joint vectors cover the actuated joints.
#[derive(Clone, Copy, Debug)]
pub struct RegularizationInput<'a> {
    pub raw_targets: &'a [f64],
    pub safe_targets: &'a [f64],
    pub torques: &'a [f64],
    pub prev_torques: &'a [f64],
    pub joint_acc: &'a [f64],
    pub actions: &'a [f64],
    pub prev_actions: &'a [f64],
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

pub fn regularization_rewards(r: &RegularizationInput, w: &RewardWeights) -> RewardBreakdown {
    let mut b = RewardBreakdown::default();
    b.push("action_clip", sq_diff(r.raw_targets, r.safe_targets), w.action_clip);
    b.push("motor_torque", r.torques.iter().map(|t| t * t).sum(), w.motor_torque);
    b.push("joint_acceleration", r.joint_acc.iter().map(|a| a * a).sum(), w.joint_acceleration);
    b.push("action_rate", sq_diff(r.actions, r.prev_actions), w.action_rate);
    let flips = r.torques.iter().zip(r.prev_torques).filter(|(a, b)| sign(**a) != sign(**b)).count();
    b.push("jerk", flips as f64, w.jerk);
    b
}

/// Walking inputs in the body frame.
#[derive(Clone, Copy, Debug)]
pub struct WalkingInput<'a> {
    /// `(v_x, v_y, v_z)`
    pub lin_vel: [f64; 3],
    /// `(w_x, w_y, w_z)`
    pub ang_vel: [f64; 3],
    /// Projected gravity `(g_x, g_y, g_z)`.
    pub gravity: [f64; 3],
    pub transversal: &'a [f64],
    pub lateral: &'a [f64],
}

/// Command `(v_x*, v_y*, w_z*)`.
pub fn walking_rewards(s: &WalkingInput, cmd: [f64; 3], cfg: &RewardConfig) -> RewardBreakdown {
    let (sg, w) = (&cfg.sigma, &cfg.weights);
    let mut b = RewardBreakdown::default();
    let ev = ((s.lin_vel[0] - cmd[0]).powi(2) + (s.lin_vel[1] - cmd[1]).powi(2)).sqrt();
    b.push("linear_velocity_tracking", kernel_exp(ev, sg.sigma_1), w.linear_velocity_tracking);
    b.push("yaw_rate_tracking", kernel_exp(s.ang_vel[2] - cmd[2], sg.sigma_2), w.yaw_rate_tracking);
    b.push("vertical_velocity", s.lin_vel[2] * s.lin_vel[2], w.vertical_velocity);
    b.push("lateral_stability", s.ang_vel[0].powi(2) + s.ang_vel[1].powi(2), w.lateral_stability);
    b.push("flat", s.gravity[0].powi(2) + s.gravity[1].powi(2), w.flat);
    let standing = (cmd[0].powi(2) + cmd[1].powi(2)).sqrt() < cfg.walk_stand_speed && cmd[2].abs() < cfg.walk_stand_speed;
    let t_star = if standing { &cfg.walk_stand_transversal } else { &cfg.walk_move_transversal };
    let et = diff_norm(s.transversal, t_star);
    let el = diff_norm(s.lateral, &cfg.walk_lateral);
    b.push("stand", kernel_exp(et, sg.sigma_3), w.stand);
    b.push("lateral_position", kernel_exp(et.powi(4), sg.sigma_4) - 1.0, w.lateral_position);
    b.push("transversal_position", kernel_exp(el.powi(10), sg.sigma_5) - 1.0, w.transversal_position);
    b
}

/// Per-step jump signals, planar model.
#[derive(Clone, Copy, Debug)]
pub struct JumpInput<'a> {
    pub phase: JumpPhase,
    /// Seconds since touchdown, when landed.
    pub since_touchdown: Option<f64>,
    pub base_pos: [f64; 2],
    pub base_vel: [f64; 2],
    pub base_acc: [f64; 2],
    pub pitch: f64,
    pub pitch_rate: f64,
    /// Actuated transversal angles and rates.
    pub transversal: &'a [f64],
    pub transversal_vel: &'a [f64],
    /// Lateral angles relative to their defaults.
    pub lateral_rel: &'a [f64],
    /// Left minus right transversal angles; empty in the lumped model.
    pub left_right_diff: &'a [f64],
    /// Total ground reaction force.
    pub ground_force: [f64; 2],
}

/// Outcome information made available to the vertical terms this step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JumpProgress {
    /// Realized apex, set only on the step it is handed out.
    pub apex_event: Option<f64>,
    /// Ballistic apex estimate, set while in flight before the apex.
    pub est_apex: Option<f64>,
    /// Ballistic landing-error estimate, set while in flight.
    pub est_landing_error: Option<[f64; 2]>,
}

pub fn vertical_jump_rewards(s: &JumpInput, p: &JumpProgress, cmd: &JumpCommand, cfg: &RewardConfig) -> RewardBreakdown {
    let (sg, w) = (&cfg.sigma, &cfg.weights);
    let mut b = RewardBreakdown::default();
    let height = |e: f64, s_exp: f64, s_lap: f64| kernel_exp(e, s_exp) + 3.0 * kernel_laplace(e, s_lap);
    let jh = p.apex_event.map_or(0.0, |h| height(h - cmd.h_star, sg.sigma_6, sg.sigma_7));
    b.push("jump_height", jh, w.jump_height);
    let est = match (s.phase, p.est_apex) {
        (JumpPhase::InFlight, Some(h)) => height(h - cmd.h_star, sg.sigma_8, sg.sigma_9),
        _ => 0.0,
    };
    b.push("est_jump_height", est, w.est_jump_height);
    let sym = if s.phase == JumpPhase::Landed {
        0.0
    } else {
        kernel_exp(variance(s.transversal), sg.sigma_10) * kernel_exp(norm(s.lateral_rel), sg.sigma_11)
    };
    b.push("vertical_symmetry", sym, w.vertical_symmetry);
    b
}

/// `e` is the current tracking error `p* - p`.
pub fn horizontal_jump_rewards(
    s: &JumpInput,
    e: [f64; 2],
    p: &JumpProgress,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let (sg, w) = (&cfg.sigma, &cfg.weights);
    let mut b = RewardBreakdown::default();
    b.push("tracking", kernel_exp(norm(&e), sg.sigma_12), w.tracking);
    let est = match (s.phase, p.est_landing_error) {
        (JumpPhase::InFlight, Some(eh)) => {
            let n = norm(&eh);
            kernel_exp(n, sg.sigma_13) + 0.1 * kernel_exp(n, sg.sigma_14)
        }
        _ => 0.0,
    };
    b.push("est_tracking", est, w.est_tracking);
    b.push("horizontal_symmetry", kernel_exp(norm(s.left_right_diff), sg.sigma_15), w.horizontal_symmetry);
    b
}

/// `max(0, 1 - |min(0, (a / a_max) . v_hat)|)`, with `v_hat` the unit
/// velocity (zero below 1e-6 m/s).
pub fn soft_impact(acc: [f64; 2], vel: [f64; 2], a_max: f64) -> f64 {
    let speed = norm(&vel);
    if speed < 1e-6 {
        return 1.0;
    }
    let proj = (acc[0] * vel[0] + acc[1] * vel[1]) / (speed * a_max);
    (1.0 - proj.min(0.0).abs()).max(0.0)
}

pub fn common_jump_rewards(s: &JumpInput, cfg: &RewardConfig) -> RewardBreakdown {
    let (sg, w) = (&cfg.sigma, &cfg.weights);
    let mut b = RewardBreakdown::default();
    b.push("angular_velocity", kernel_exp(s.pitch_rate.abs(), sg.sigma_16), w.angular_velocity);
    b.push("orientation", kernel_exp(s.pitch * s.pitch, sg.sigma_17), w.orientation);
    let target = match s.phase {
        JumpPhase::InFlight => Some(&cfg.flight_joint_targets),
        JumpPhase::Landed => Some(&cfg.landed_joint_targets),
        JumpPhase::Stance => None,
    };
    let djp = target.map_or(0.0, |t| kernel_exp(diff_norm(s.transversal, t), sg.sigma_18));
    b.push("desired_joint_pos", djp, w.desired_joint_pos);
    b.push("ground_force", s.ground_force[0].powi(2) + s.ground_force[1].powi(2), w.ground_force);
    b.push("soft_impact", soft_impact(s.base_acc, s.base_vel, cfg.a_max), w.soft_impact);
    let in_window = s.phase == JumpPhase::Landed && s.since_touchdown.is_some_and(|t| t <= cfg.landing_window);
    let (catch, damp) = if in_window {
        let n = s.transversal_vel.len().max(1) as f64;
        let mean = s.transversal_vel.iter().sum::<f64>() / n;
        ((-s.base_vel[1]).clamp(0.0, 1.0), mean.clamp(0.0, 1.0))
    } else {
        (0.0, 0.0)
    };
    b.push("catch_landing", catch, w.catch_landing);
    b.push("damp_landing", damp, w.damp_landing);
    b
}

/// Hands out the realized apex exactly once per jump: on the first step in
/// flight where `v_z` turns from positive to non-positive, or at touchdown
/// if no apex step was seen.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ApexDetector {
    prev_vz: Option<f64>,
    fired: bool,
}

impl ApexDetector {
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    pub fn fired(&self) -> bool {
        self.fired
    }

    /// For episodes that start past the apex.
    pub fn mark_fired(&mut self) {
        self.fired = true;
    }

    /// Returns whether the apex is handed out on this control step.
    pub fn observe(&mut self, phase: JumpPhase, vz: f64) -> bool {
        let prev = self.prev_vz.replace(vz);
        if self.fired {
            return false;
        }
        let fire = match phase {
            JumpPhase::InFlight => prev.is_some_and(|p| p > 0.0) && vz <= 0.0,
            JumpPhase::Landed => true,
            JumpPhase::Stance => false,
        };
        self.fired |= fire;
        fire
    }

    /// Still ascending in flight, i.e. the estimate term applies.
    pub fn before_apex(&self, phase: JumpPhase) -> bool {
        phase == JumpPhase::InFlight && !self.fired
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminationConfig {
    /// Seconds without takeoff before the episode ends.
    pub no_jump_timeout: f64,
    /// Bound on the in-flight predicted error, m.
    pub max_predicted_error: f64,
    /// Bound on the realized error, m.
    pub max_measured_error: f64,
    /// Base height below which a collision is assumed, m.
    pub min_base_height: f64,
    /// Landing deceleration bound, m/s².
    pub max_landing_decel: f64,
    /// Horizontal travel allowed before takeoff, m.
    pub drift_distance: f64,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        Self {
            no_jump_timeout: 2.0,
            max_predicted_error: 0.5,
            max_measured_error: 0.4,
            min_base_height: 0.12,
            max_landing_decel: 300.0,
            drift_distance: 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    NoJumpTimeout,
    PredictedPerformanceBelowThreshold,
    MeasuredPerformanceBelowThreshold,
    CollisionProxy,
    ExcessiveDeceleration,
    DriftedWithoutJump,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::NoJumpTimeout => "no_jump_timeout",
            TerminationReason::PredictedPerformanceBelowThreshold => "predicted_performance",
            TerminationReason::MeasuredPerformanceBelowThreshold => "measured_performance",
            TerminationReason::CollisionProxy => "collision",
            TerminationReason::ExcessiveDeceleration => "excessive_deceleration",
            TerminationReason::DriftedWithoutJump => "drifted_without_jump",
        }
    }
}

/// Episode facts the termination rules look at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeStatus {
    pub time: f64,
    pub phase: JumpPhase,
    pub jumped: bool,
    pub base_z: f64,
    /// Horizontal distance from the start position, m.
    pub travel: f64,
    pub predicted_error: Option<f64>,
    pub measured_error: Option<f64>,
    /// Peak base acceleration since touchdown, within the landing window.
    pub landing_decel: Option<f64>,
    /// A joint sits on its mechanical stop.
    pub joint_crash: bool,
}

pub fn termination_check(s: &EpisodeStatus, cfg: &TerminationConfig) -> Option<TerminationReason> {
    use TerminationReason::*;
    if !s.jumped && s.time >= cfg.no_jump_timeout {
        return Some(NoJumpTimeout);
    }
    if s.predicted_error.is_some_and(|e| e.abs() > cfg.max_predicted_error) {
        return Some(PredictedPerformanceBelowThreshold);
    }
    if s.measured_error.is_some_and(|e| e.abs() > cfg.max_measured_error) {
        return Some(MeasuredPerformanceBelowThreshold);
    }
    if s.base_z < cfg.min_base_height || s.joint_crash {
        return Some(CollisionProxy);
    }
    if s.landing_decel.is_some_and(|a| a > cfg.max_landing_decel) {
        return Some(ExcessiveDeceleration);
    }
    if !s.jumped && s.travel > cfg.drift_distance {
        return Some(DriftedWithoutJump);
    }
    None
}

pub const REWARD_CSV_VERSION: u32 = 1;

/// Long-format breakdown: one row per step and term.
pub fn reward_breakdown_csv(steps: &[RewardBreakdown]) -> String {
    use std::fmt::Write;
    let mut out = format!("# quadjump rewards v{REWARD_CSV_VERSION}\nstep,term,raw,weighted\n");
    for (i, b) in steps.iter().enumerate() {
        for t in &b.terms {
            let _ = writeln!(out, "{i},{},{:e},{:e}", t.name, t.raw, t.weighted);
        }
        let _ = writeln!(out, "{i},total,,{:e}", b.total);
    }
    out
}
