//! Reference state initialization and the command-range curriculum.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ballistic::{estimate_apex, BallisticState};
use crate::kinematics::{batch_ik, IkOptions, IkRequest, Vec2, N_LEGS};
use crate::rewards::{JumpCommand, JumpMode};
use crate::sim::{JumpPhase, SimState, Simulator, Takeoff};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RsiStage {
    StandingSquatting,
    InFlight,
    Touchdown,
    LandedNearGoal,
}

impl RsiStage {
    pub const ALL: [RsiStage; 4] =
        [RsiStage::StandingSquatting, RsiStage::InFlight, RsiStage::Touchdown, RsiStage::LandedNearGoal];

    pub fn as_str(self) -> &'static str {
        match self {
            RsiStage::StandingSquatting => "standing",
            RsiStage::InFlight => "in_flight",
            RsiStage::Touchdown => "touchdown",
            RsiStage::LandedNearGoal => "landed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageMixture {
    pub standing: f64,
    pub in_flight: f64,
    pub touchdown: f64,
    pub landed: f64,
}

impl Default for StageMixture {
    fn default() -> Self {
        Self { standing: 0.55, in_flight: 0.2, touchdown: 0.15, landed: 0.1 }
    }
}

impl StageMixture {
    pub fn standing_only() -> Self {
        Self { standing: 1.0, in_flight: 0.0, touchdown: 0.0, landed: 0.0 }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.standing, self.in_flight, self.touchdown, self.landed]
    }

    pub fn validate(&self) -> Result<(), String> {
        let w = self.as_array();
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(format!("weights must be >= 0, got {w:?}"));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(format!("weights must sum to 1, got {s}"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RsiStage {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (stage, w) in RsiStage::ALL.iter().zip(self.as_array()) {
            acc += w;
            if u < acc {
                return *stage;
            }
        }
        // rounding slack lands on the last stage with positive weight
        RsiStage::ALL.into_iter().zip(self.as_array()).rev().find(|(_, w)| *w > 0.0).map_or(RsiStage::StandingSquatting, |(s, _)| s)
    }
}

/// Curriculum settings. Angles in degrees, lengths in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    pub vertical_initial: (f64, f64),
    pub vertical_caps: (f64, f64),
    pub forward_initial: (f64, f64),
    pub forward_caps: (f64, f64),
    pub lateral_initial: (f64, f64),
    pub lateral_caps: (f64, f64),
    /// Range change per promotion or demotion.
    pub step: f64,
    /// Standing-breadth gain per promotion.
    pub breadth_step: f64,
    pub promote_threshold: f64,
    pub demote_threshold: f64,
    /// Episodes per success-rate window.
    pub window: usize,
    /// Error below which a jump counts as a success.
    pub success_error: f64,
    pub mixture: StageMixture,
    /// Base heights of the deep-squat band.
    pub deep_squat: (f64, f64),
    /// Full standing-height range reached at breadth 1.
    pub standing_heights: (f64, f64),
    pub stance_pitch_deg: f64,
    /// Extra pitch for horizontal starts; negative is nose-down.
    pub forward_pitch_deg: f64,
    /// Random paw shift along x in stance.
    pub paw_jitter: f64,
    /// Body-x paw shift before a horizontal touchdown.
    pub paw_forward: f64,
    /// Paw depth below the hips while airborne.
    pub flight_leg_depth: (f64, f64),
    pub flight_pitch_deg: f64,
    pub flight_pitch_rate: f64,
    pub flight_joint_speed: f64,
    /// Base height above the landing height covered by touchdown starts.
    pub touchdown_band: f64,
    /// Base height at takeoff on constructed horizontal arcs.
    pub takeoff_height: f64,
    /// Apex heights of constructed horizontal arcs.
    pub horizontal_apex: (f64, f64),
    pub landed_radius: f64,
    pub ik_retries: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            vertical_initial: (0.5, 0.6),
            vertical_caps: (0.4, 0.8),
            forward_initial: (0.4, 0.5),
            forward_caps: (0.3, 0.7),
            lateral_initial: (0.0, 0.0),
            lateral_caps: (0.0, 0.0),
            step: 0.05,
            breadth_step: 0.1,
            promote_threshold: 0.8,
            demote_threshold: 0.3,
            window: 200,
            success_error: 0.1,
            mixture: StageMixture::default(),
            deep_squat: (0.295, 0.32),
            standing_heights: (0.295, 0.37),
            stance_pitch_deg: 2.0,
            forward_pitch_deg: -5.0,
            paw_jitter: 0.02,
            paw_forward: 0.04,
            flight_leg_depth: (0.30, 0.38),
            flight_pitch_deg: 4.0,
            flight_pitch_rate: 0.5,
            flight_joint_speed: 1.0,
            touchdown_band: 0.05,
            takeoff_height: 0.42,
            horizontal_apex: (0.5, 0.65),
            landed_radius: 0.05,
            ik_retries: 8,
        }
    }
}

impl CurriculumConfig {
    /// Command ranges used for the full-scale robot.
    pub fn paper_ranges() -> Self {
        Self {
            vertical_initial: (0.6, 0.7),
            vertical_caps: (0.6, 1.1),
            forward_initial: (0.4, 0.5),
            forward_caps: (0.4, 1.0),
            lateral_initial: (0.0, 0.0),
            lateral_caps: (-0.3, 0.3),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), (String, String)> {
        let err = |f: &str, r: String| Err((format!("curriculum.{f}"), r));
        for (name, init, caps) in [
            ("vertical", self.vertical_initial, self.vertical_caps),
            ("forward", self.forward_initial, self.forward_caps),
            ("lateral", self.lateral_initial, self.lateral_caps),
        ] {
            if !(init.0 <= init.1 && caps.0 <= caps.1) {
                return err(&format!("{name}_initial"), "ranges need low <= high".into());
            }
            if init.0 < caps.0 || init.1 > caps.1 {
                return err(&format!("{name}_initial"), format!("{init:?} is outside the caps {caps:?}"));
            }
        }
        if self.vertical_caps.0 <= 0.0 {
            return err("vertical_caps", "heights must be > 0".into());
        }
        if !(self.step >= 0.0 && self.breadth_step >= 0.0) {
            return err("step", "must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.demote_threshold)
            || !(0.0..=1.0).contains(&self.promote_threshold)
            || self.demote_threshold >= self.promote_threshold
        {
            return err("promote_threshold", "need 0 <= demote < promote <= 1".into());
        }
        if self.window == 0 {
            return err("window", "must be >= 1".into());
        }
        if !(self.success_error > 0.0) {
            return err("success_error", "must be > 0".into());
        }
        if let Err(e) = self.mixture.validate() {
            return err("mixture", e);
        }
        if !(self.deep_squat.0 <= self.deep_squat.1 && self.standing_heights.0 <= self.standing_heights.1)
            || self.deep_squat.0 <= 0.0
        {
            return err("deep_squat", "heights need 0 < low <= high".into());
        }
        if !(self.flight_leg_depth.0 > 0.0 && self.flight_leg_depth.0 <= self.flight_leg_depth.1) {
            return err("flight_leg_depth", "need 0 < low <= high".into());
        }
        if !(self.horizontal_apex.0 > self.takeoff_height && self.horizontal_apex.0 <= self.horizontal_apex.1) {
            return err("horizontal_apex", "apex range must lie above the takeoff height".into());
        }
        if !(self.touchdown_band > 0.0) {
            return err("touchdown_band", "must be > 0".into());
        }
        Ok(())
    }
}

/// Current command ranges, standing breadth and the success window.
#[derive(Clone, Debug, PartialEq)]
pub struct CurriculumState {
    pub vertical: (f64, f64),
    pub forward: (f64, f64),
    pub lateral: (f64, f64),
    /// 0 keeps stance starts in the deep-squat band, 1 spans all heights.
    pub breadth: f64,
    pub window: VecDeque<bool>,
    pub updates: u64,
    /// Success rate of the last evaluated window.
    pub last_rate: Option<f64>,
}

impl CurriculumState {
    pub fn new(cfg: &CurriculumConfig) -> Self {
        Self {
            vertical: cfg.vertical_initial,
            forward: cfg.forward_initial,
            lateral: cfg.lateral_initial,
            breadth: 0.0,
            window: VecDeque::new(),
            updates: 0,
            last_rate: None,
        }
    }

    /// Fully expanded state.
    pub fn at_caps(cfg: &CurriculumConfig) -> Self {
        Self {
            vertical: cfg.vertical_caps,
            forward: cfg.forward_caps,
            lateral: cfg.lateral_caps,
            breadth: 1.0,
            ..Self::new(cfg)
        }
    }

    pub fn success_rate(&self) -> Option<f64> {
        (!self.window.is_empty()).then(|| self.window.iter().filter(|s| **s).count() as f64 / self.window.len() as f64)
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

pub fn sample_command<R: Rng + ?Sized>(mode: JumpMode, state: &CurriculumState, rng: &mut R) -> JumpCommand {
    match mode {
        JumpMode::Vertical => JumpCommand::vertical(uniform(rng, state.vertical)),
        JumpMode::Horizontal => {
            let x = uniform(rng, state.forward);
            let y = uniform(rng, state.lateral);
            JumpCommand::horizontal(x, y)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurriculumChange {
    Promoted,
    Demoted,
    Unchanged,
}

fn grow(r: (f64, f64), step: f64, caps: (f64, f64)) -> (f64, f64) {
    ((r.0 - step).max(caps.0), (r.1 + step).min(caps.1))
}

fn shrink(r: (f64, f64), step: f64, init: (f64, f64)) -> (f64, f64) {
    ((r.0 + step).min(init.0), (r.1 - step).max(init.1))
}

/// Appends episode successes to the window. Once the window is full its
/// success rate promotes or demotes the ranges, then the window restarts.
pub fn update_curriculum(
    state: &CurriculumState,
    cfg: &CurriculumConfig,
    outcomes: &[bool],
) -> (CurriculumState, CurriculumChange) {
    let mut next = state.clone();
    next.window.extend(outcomes);
    while next.window.len() > cfg.window {
        next.window.pop_front();
    }
    if next.window.len() < cfg.window {
        return (next, CurriculumChange::Unchanged);
    }
    let rate = next.success_rate().unwrap_or(0.0);
    next.last_rate = Some(rate);
    let change = if rate >= cfg.promote_threshold {
        next.vertical = grow(next.vertical, cfg.step, cfg.vertical_caps);
        next.forward = grow(next.forward, cfg.step, cfg.forward_caps);
        next.lateral = grow(next.lateral, cfg.step, cfg.lateral_caps);
        next.breadth = (next.breadth + cfg.breadth_step).min(1.0);
        CurriculumChange::Promoted
    } else if rate <= cfg.demote_threshold {
        next.vertical = shrink(next.vertical, cfg.step, cfg.vertical_initial);
        next.forward = shrink(next.forward, cfg.step, cfg.forward_initial);
        next.lateral = shrink(next.lateral, cfg.step, cfg.lateral_initial);
        CurriculumChange::Demoted
    } else {
        CurriculumChange::Unchanged
    };
    next.window.clear();
    next.updates += 1;
    (next, change)
}

/// A sampled episode start.
#[derive(Clone, Debug, PartialEq)]
pub struct RsiSample {
    pub stage: RsiStage,
    pub state: SimState,
    /// Constructing arc at the sampled instant, for airborne stages.
    pub arc: Option<BallisticState>,
    /// The arc apex lies in the past.
    pub apex_passed: bool,
    /// The sampler gave up and returned the default stance.
    pub fallback: bool,
}

/// Arc for a horizontal command: takeoff at `(x0, z0)`, given apex, descending
/// through the landing height `lh` at `x*`.
fn horizontal_arc(x_star: f64, x0: f64, z0: f64, apex: f64, lh: f64, g: f64) -> (BallisticState, f64) {
    let vz = (2.0 * g * (apex - z0)).sqrt();
    let t_flight = (vz + (vz * vz + 2.0 * g * (z0 - lh)).sqrt()) / g;
    let vx = (x_star - x0) / t_flight;
    (BallisticState::new(x0, z0, vx, vz, g), t_flight)
}

fn airborne_state(mut s: SimState, b: &BallisticState, pitch_rate: f64, joint_vel: [[f64; 2]; N_LEGS]) -> SimState {
    s.base_pos = b.position;
    s.base_vel = b.velocity;
    s.pitch_rate = pitch_rate;
    s.joint_vel = joint_vel;
    s.contact = [false; N_LEGS];
    s.anchors = [None; N_LEGS];
    s.ground_force = [[0.0; 2]; N_LEGS];
    s.phase = JumpPhase::InFlight;
    s.phase_entry_time = 0.0;
    s.airborne_steps = 2;
    s
}

fn within_limits(sim: &Simulator, s: &SimState) -> bool {
    let geo = &sim.params().geometry;
    let (sl, su) = geo.transversal_sum_bounds;
    s.legs.iter().all(|l| {
        let sum = l.theta_it + l.theta_ot;
        l.theta_it >= geo.joint_limits_min[1]
            && l.theta_it <= geo.joint_limits_max[1]
            && l.theta_ot >= geo.joint_limits_min[2]
            && l.theta_ot <= geo.joint_limits_max[2]
            && sum >= sl
            && sum <= su
    })
}

/// Airborne leg pose: paws at a random depth below the hips, shifted by
/// `paw_shift` along body x. Passive joints closed by the IK.
fn flight_pose<R: Rng + ?Sized>(
    sim: &Simulator,
    cfg: &CurriculumConfig,
    max_depth: f64,
    pitch: f64,
    paw_shift: f64,
    rng: &mut R,
) -> Option<SimState> {
    let hi = cfg.flight_leg_depth.1.min(max_depth);
    let lo = cfg.flight_leg_depth.0.min(hi);
    let layout = sim.layout();
    let targets: [Vec2; N_LEGS] = std::array::from_fn(|i| {
        let depth = uniform(rng, (lo, hi));
        let dx = paw_shift + uniform(rng, (-cfg.paw_jitter, cfg.paw_jitter));
        layout.hips[i] + Vec2::new(dx, -depth)
    });
    let mut guess = sim.standing_state(0.3, 0.0).ok()?.configuration();
    guess.base_pitch = pitch;
    let opts = IkOptions { bend: sim.params().bend, ..Default::default() };
    let sol = batch_ik(&sim.params().geometry, layout, &[IkRequest { targets, guess }], &opts).pop()?.ok()?;
    let s = SimState::from_configuration(&sol.config);
    within_limits(sim, &s).then_some(s)
}

fn stage_sample<R: Rng + ?Sized>(
    stage: RsiStage,
    cmd: &JumpCommand,
    sim: &Simulator,
    cfg: &CurriculumConfig,
    cur: &CurriculumState,
    rng: &mut R,
) -> Option<RsiSample> {
    let g = sim.params().body.gravity;
    let ground = sim.params().ground_height;
    let horizontal = cmd.mode == JumpMode::Horizontal;
    let base_pitch = if horizontal { cfg.forward_pitch_deg.to_radians() } else { 0.0 };
    let done = |state: SimState, arc: Option<BallisticState>, apex_passed: bool| RsiSample {
        stage,
        state,
        arc,
        apex_passed,
        fallback: false,
    };
    match stage {
        RsiStage::StandingSquatting | RsiStage::LandedNearGoal => {
            let (lo, hi) = if stage == RsiStage::StandingSquatting {
                let top = cfg.deep_squat.1 + cur.breadth * (cfg.standing_heights.1 - cfg.deep_squat.1);
                (cfg.deep_squat.0, top.max(cfg.deep_squat.0))
            } else {
                cfg.standing_heights
            };
            let height = uniform(rng, (lo, hi));
            let p = cfg.stance_pitch_deg.to_radians();
            let pitch = uniform(rng, (-p, p)) + if stage == RsiStage::StandingSquatting { base_pitch } else { 0.0 };
            let offsets = std::array::from_fn(|_| uniform(rng, (-cfg.paw_jitter, cfg.paw_jitter)));
            let mut s = sim.stance_state(height, pitch, offsets).ok()?;
            if !within_limits(sim, &s) {
                return None;
            }
            if stage == RsiStage::LandedNearGoal {
                let r = cfg.landed_radius;
                let goal = if horizontal { cmd.p_star[0] } else { 0.0 };
                let dx = goal + uniform(rng, (-r, r));
                s.base_pos[0] += dx;
                for a in s.anchors.iter_mut().flatten() {
                    *a += dx;
                }
                s.phase = JumpPhase::Landed;
                s.phase_entry_time = -uniform(rng, (0.0, 0.3));
                s.takeoff = Some(Takeoff { time: -0.5, position: [0.0, cfg.takeoff_height], velocity: [0.0; 2] });
                s.max_height = if horizontal { s.base_pos[1] } else { cmd.h_star };
                return Some(done(s, None, true));
            }
            Some(done(s, None, false))
        }
        RsiStage::InFlight | RsiStage::Touchdown => {
            let p = cfg.flight_pitch_deg.to_radians();
            let pitch = uniform(rng, (-p, p));
            let w = uniform(rng, (-cfg.flight_pitch_rate, cfg.flight_pitch_rate));
            let js = cfg.flight_joint_speed;
            let jv = std::array::from_fn(|_| [uniform(rng, (-js, js)), uniform(rng, (-js, js))]);
            let shift = if horizontal && stage == RsiStage::Touchdown { cfg.paw_forward } else { 0.0 };
            let top = if horizontal { cfg.horizontal_apex.1 } else { cmd.h_star };
            let mut pose = flight_pose(sim, cfg, top - ground - 0.03, pitch, shift, rng)?;
            pose.base_pos = [0.0, 0.0];
            let lh = sim.landing_height(&pose);
            let (b, apex_passed) = if horizontal {
                let apex = uniform(rng, cfg.horizontal_apex);
                let x0 = uniform(rng, (0.0, 0.05));
                let (arc, t_flight) = horizontal_arc(cmd.p_star[0], x0, cfg.takeoff_height, apex, lh, g);
                let vz0 = arc.velocity[1];
                // descending time at which z reaches `z`
                let t_at = |z: f64| (vz0 + (vz0 * vz0 - 2.0 * g * (z - cfg.takeoff_height)).max(0.0).sqrt()) / g;
                let t = if stage == RsiStage::InFlight {
                    let t_end = t_at(lh + 0.01);
                    let t = uniform(rng, ((t_flight * 0.05).min(t_end), t_end));
                    // the ascending part must clear the ground as well
                    if arc.advance(t).position[1] < lh + 0.005 {
                        return None;
                    }
                    t
                } else {
                    let z = uniform(rng, (lh, (lh + cfg.touchdown_band).min(apex)));
                    t_at(z)
                };
                let at = arc.advance(t);
                (at, at.velocity[1] <= 0.0)
            } else {
                let h = cmd.h_star;
                if stage == RsiStage::InFlight {
                    // ascending branch; touchdown starts cover the descent
                    let z = uniform(rng, ((lh + 0.005).min(h), h));
                    let vz = (2.0 * g * (h - z)).max(0.0).sqrt();
                    (BallisticState::new(0.0, z, 0.0, vz, g), false)
                } else {
                    let z_hi = (lh + cfg.touchdown_band).min(h - 1e-3).max(lh);
                    let z = uniform(rng, (lh, z_hi));
                    let vz = -(2.0 * g * (h - z).max(1e-4)).sqrt();
                    (BallisticState::new(0.0, z, 0.0, vz, g), true)
                }
            };
            let mut s = airborne_state(pose, &b, w, jv);
            s.takeoff = Some(Takeoff { time: 0.0, position: b.position, velocity: b.velocity });
            s.max_height = if apex_passed { estimate_apex(&b).max(b.position[1]) } else { b.position[1] };
            if !horizontal && apex_passed {
                s.max_height = cmd.h_star;
            }
            Some(done(s, Some(b), apex_passed))
        }
    }
}

/// Samples an episode start for `stage`. Poses are resampled up to
/// `cfg.ik_retries` times; after that the default stance is returned.
pub fn sample_initial_state<R: Rng + ?Sized>(
    stage: RsiStage,
    cmd: &JumpCommand,
    sim: &Simulator,
    cfg: &CurriculumConfig,
    cur: &CurriculumState,
    rng: &mut R,
) -> RsiSample {
    for _ in 0..cfg.ik_retries.max(1) {
        if let Some(s) = stage_sample(stage, cmd, sim, cfg, cur, rng) {
            return s;
        }
    }
    let state = sim
        .standing_state(0.5 * (cfg.deep_squat.0 + cfg.deep_squat.1), 0.0)
        .expect("default stance must be reachable");
    RsiSample { stage: RsiStage::StandingSquatting, state, arc: None, apex_passed: false, fallback: true }
}

pub const CURRICULUM_CSV_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurriculumTraceRow {
    pub update: u64,
    pub success_rate: Option<f64>,
    pub vertical: (f64, f64),
    pub forward: (f64, f64),
    pub lateral: (f64, f64),
    pub breadth: f64,
}

impl CurriculumTraceRow {
    pub fn of(update: u64, s: &CurriculumState) -> Self {
        Self {
            update,
            success_rate: s.last_rate,
            vertical: s.vertical,
            forward: s.forward,
            lateral: s.lateral,
            breadth: s.breadth,
        }
    }
}

pub fn curriculum_csv(rows: &[CurriculumTraceRow]) -> String {
    use std::fmt::Write;
    let mut out = format!("# quadjump curriculum v{CURRICULUM_CSV_VERSION}\n");
    out.push_str("update,success_rate,h_min,h_max,x_min,x_max,y_min,y_max,breadth\n");
    for r in rows {
        let rate = r.success_rate.map_or(String::new(), |v| format!("{v:.4}"));
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.update, rate, r.vertical.0, r.vertical.1, r.forward.0, r.forward.1, r.lateral.0, r.lateral.1, r.breadth
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballistic::estimate_landing;
    use crate::kinematics::ckc_residual;
    use crate::sim::SimParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sim() -> Simulator {
        Simulator::new(SimParams::default()).unwrap()
    }

    #[test]
    fn full_curriculum_command_ranges() {
        let cfg = CurriculumConfig::paper_ranges();
        let cur = CurriculumState::at_caps(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..2000 {
            let c = sample_command(JumpMode::Vertical, &cur, &mut rng);
            assert!((0.6..=1.1).contains(&c.h_star));
            lo = lo.min(c.h_star);
            hi = hi.max(c.h_star);
            let c = sample_command(JumpMode::Horizontal, &cur, &mut rng);
            assert!((0.4..=1.0).contains(&c.p_star[0]));
            assert!((-0.3..=0.3).contains(&c.p_star[1]));
        }
        assert!(lo < 0.62 && hi > 1.08);
    }

    #[test]
    fn degenerate_range_gives_constant_command() {
        let mut cur = CurriculumState::new(&CurriculumConfig::default());
        cur.vertical = (0.7, 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((0..20).all(|_| sample_command(JumpMode::Vertical, &cur, &mut rng).h_star == 0.7));
    }

    #[test]
    fn mixture_frequencies() {
        let m = StageMixture::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let s = m.sample(&mut rng);
            counts[RsiStage::ALL.iter().position(|x| *x == s).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(m.as_array()) {
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!(((*c as f64 / n as f64) - p).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn promotion_demotion_rules() {
        let cfg = CurriculumConfig { window: 20, ..Default::default() };
        let cur = CurriculumState::new(&cfg);
        let mut outcomes = vec![true; 19];
        outcomes.push(false);
        let (next, ch) = update_curriculum(&cur, &cfg, &outcomes);
        assert_eq!(ch, CurriculumChange::Promoted);
        assert!((next.vertical.0 - 0.45).abs() < 1e-12 && (next.vertical.1 - 0.65).abs() < 1e-12);
        assert!(next.breadth > cur.breadth);
        // between thresholds
        let mixed: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let (same, ch) = update_curriculum(&next, &cfg, &mixed);
        assert_eq!(ch, CurriculumChange::Unchanged);
        assert_eq!(same.vertical, next.vertical);
        // not enough data yet
        let (same, ch) = update_curriculum(&cur, &cfg, &[true; 5]);
        assert_eq!(ch, CurriculumChange::Unchanged);
        assert_eq!(same.vertical, cur.vertical);
        // saturation
        let top = CurriculumState::at_caps(&cfg);
        let (same, ch) = update_curriculum(&top, &cfg, &[true; 20]);
        assert_eq!(ch, CurriculumChange::Promoted);
        assert_eq!(same.vertical, cfg.vertical_caps);
        // demotion never goes below the initial range
        let (down, ch) = update_curriculum(&cur, &cfg, &[false; 20]);
        assert_eq!(ch, CurriculumChange::Demoted);
        assert_eq!(down.vertical, cfg.vertical_initial);
    }

    #[test]
    fn stance_samples_are_closed_and_in_band() {
        let s = sim();
        let cfg = CurriculumConfig::default();
        let cur = CurriculumState::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let r = sample_initial_state(RsiStage::StandingSquatting, &JumpCommand::vertical(0.6), &s, &cfg, &cur, &mut rng);
            assert!(!r.fallback);
            assert!(r.state.contact.iter().all(|c| *c));
            for leg in &r.state.legs {
                assert!(ckc_residual(&s.params().geometry, leg).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn vertical_flight_sample_hits_the_commanded_apex() {
        let s = sim();
        let cfg = CurriculumConfig::default();
        let cur = CurriculumState::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cmd = JumpCommand::vertical(0.8);
        for _ in 0..100 {
            let r = sample_initial_state(RsiStage::InFlight, &cmd, &s, &cfg, &cur, &mut rng);
            assert!(!r.fallback);
            let st = &r.state;
            let b = BallisticState::new(st.base_pos[0], st.base_pos[1], st.base_vel[0], st.base_vel[1], 9.81);
            assert!((estimate_apex(&b) - 0.8).abs() < 1e-6);
            assert!(st.base_pos[1] > s.landing_height(st));
            assert_eq!(st.phase, JumpPhase::InFlight);
        }
    }

    #[test]
    fn touchdown_samples_sit_in_the_band() {
        let s = sim();
        let cfg = CurriculumConfig::default();
        let cur = CurriculumState::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for cmd in [JumpCommand::vertical(0.7), JumpCommand::horizontal(0.5, 0.0)] {
            for _ in 0..100 {
                let r = sample_initial_state(RsiStage::Touchdown, &cmd, &s, &cfg, &cur, &mut rng);
                assert!(!r.fallback);
                let lh = s.landing_height(&r.state);
                let z = r.state.base_pos[1];
                assert!(z >= lh - 1e-9 && z <= lh + 0.05 + 1e-9, "z {z} lh {lh}");
                assert!(r.state.base_vel[1] < 0.0);
            }
        }
    }

    #[test]
    fn horizontal_arcs_land_on_target() {
        let s = sim();
        let cfg = CurriculumConfig::default();
        let cur = CurriculumState::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cmd = JumpCommand::horizontal(0.6, 0.0);
        for _ in 0..100 {
            let r = sample_initial_state(RsiStage::InFlight, &cmd, &s, &cfg, &cur, &mut rng);
            assert!(!r.fallback);
            let (x, _) = estimate_landing(&r.arc.unwrap(), s.landing_height(&r.state)).unwrap();
            assert!((x - 0.6).abs() < 1e-9);
        }
    }

    #[test]
    fn landed_samples_rest_near_goal() {
        let s = sim();
        let cfg = CurriculumConfig::default();
        let cur = CurriculumState::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cmd = JumpCommand::horizontal(0.55, 0.0);
        for _ in 0..30 {
            let r = sample_initial_state(RsiStage::LandedNearGoal, &cmd, &s, &cfg, &cur, &mut rng);
            assert!((r.state.base_pos[0] - 0.55).abs() <= 0.05 + 1e-12);
            assert_eq!(r.state.base_vel, [0.0, 0.0]);
            assert_eq!(r.state.phase, JumpPhase::Landed);
        }
    }

    #[test]
    fn trace_csv_layout() {
        let cfg = CurriculumConfig::default();
        let cur = CurriculumState::new(&cfg);
        let csv = curriculum_csv(&[CurriculumTraceRow::of(0, &cur), CurriculumTraceRow::of(1, &cur)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# quadjump curriculum v1"));
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2].split(',').count(), 9);
    }
}
