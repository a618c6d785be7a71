//! Policy observations, sensor noise, domain randomization and latency.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::sim::{SimParams, SimState, N_ACT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsMode {
    Walking,
    VerticalJump,
    HorizontalJump,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub name: &'static str,
    pub dim: usize,
}

/// Ordered observation layout of a mode.
///
/// Planar reduction per segment: `lin_vel` is the body-frame `(v_x, v_z)`,
/// `ang_vel` the pitch rate, `gravity` the body-frame unit down vector
/// `(g_x, g_z)`, `error` the target offset `(e_x, e_y)` with `e_y = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSpec {
    pub mode: ObsMode,
    pub segments: Vec<Segment>,
}

const fn seg(name: &'static str, dim: usize) -> Segment {
    Segment { name, dim }
}

const PROPRIO: [Segment; 6] = [
    seg("lin_vel", 2),
    seg("ang_vel", 1),
    seg("gravity", 2),
    seg("joint_pos", N_ACT),
    seg("joint_vel", N_ACT),
    seg("prev_action", N_ACT),
];

impl ObservationSpec {
    pub fn new(mode: ObsMode) -> Self {
        let head: Vec<Segment> = match mode {
            ObsMode::Walking => vec![],
            ObsMode::VerticalJump => vec![seg("h_star", 1), seg("c", 1), seg("height", 1)],
            ObsMode::HorizontalJump => vec![seg("error", 2), seg("height", 1)],
        };
        let mut segments = head;
        segments.extend_from_slice(&PROPRIO);
        if mode == ObsMode::Walking {
            // o = [v, w, g, c, theta_rel, theta_dot, a]
            segments.insert(3, seg("command", 3));
        }
        Self { mode, segments }
    }

    pub fn dim(&self) -> usize {
        self.segments.iter().map(|s| s.dim).sum()
    }

    /// Start index and width of segment `name`.
    pub fn range(&self, name: &str) -> Option<std::ops::Range<usize>> {
        let mut at = 0;
        for s in &self.segments {
            if s.name == name {
                return Some(at..at + s.dim);
            }
            at += s.dim;
        }
        None
    }
}

/// Gaussian observation noise standard deviations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationNoise {
    /// m/s
    pub lin_vel: f64,
    /// rad/s
    pub ang_vel: f64,
    /// m/s², applied to the unit vector after division by g.
    pub gravity: f64,
    pub joint_pos_deg: f64,
    /// deg/s
    pub joint_vel_deg: f64,
}

impl Default for ObservationNoise {
    fn default() -> Self {
        Self { lin_vel: 0.1, ang_vel: 0.1, gravity: 0.5, joint_pos_deg: 3.0, joint_vel_deg: 10.0 }
    }
}

impl ObservationNoise {
    pub fn off() -> Self {
        Self { lin_vel: 0.0, ang_vel: 0.0, gravity: 0.0, joint_pos_deg: 0.0, joint_vel_deg: 0.0 }
    }

    /// Per-segment standard deviation in observation units.
    pub fn std_of(&self, segment: &str, g: f64) -> f64 {
        match segment {
            "lin_vel" => self.lin_vel,
            "ang_vel" => self.ang_vel,
            "gravity" => self.gravity / g,
            "joint_pos" => self.joint_pos_deg.to_radians(),
            "joint_vel" => self.joint_vel_deg.to_radians(),
            _ => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObsCommand {
    /// `(v_x*, v_y*, w_z*)`
    Walk([f64; 3]),
    Vertical { h_star: f64, c: f64 },
    /// Target minus current base position, yaw frame.
    Horizontal { error: [f64; 2] },
}

#[derive(Clone, Copy, Debug)]
pub struct ObsContext<'a> {
    pub state: &'a SimState,
    /// Measured joint angles, encoder offsets included.
    pub joint_pos: [f64; N_ACT],
    pub default_joints: &'a [f64; N_ACT],
    pub prev_action: &'a [f64; N_ACT],
    pub command: ObsCommand,
    pub gravity: f64,
    pub ground_height: f64,
}

/// Writes the observation of `ctx` into `out` (length `spec.dim()`).
pub fn build_observation<R: Rng + ?Sized>(
    spec: &ObservationSpec,
    ctx: &ObsContext,
    noise: &ObservationNoise,
    rng: &mut R,
    out: &mut [f64],
) {
    assert_eq!(out.len(), spec.dim(), "observation buffer size");
    let s = ctx.state;
    let (sn, cs) = s.pitch.sin_cos();
    // world -> body: R^T
    let to_body = |v: [f64; 2]| [cs * v[0] + sn * v[1], -sn * v[0] + cs * v[1]];
    let vel = to_body(s.base_vel);
    let grav = to_body([0.0, -1.0]);
    let qd = s.joint_velocities();
    let mut at = 0;
    for segment in &spec.segments {
        let dst = &mut out[at..at + segment.dim];
        match segment.name {
            "h_star" | "c" => {
                if let ObsCommand::Vertical { h_star, c } = ctx.command {
                    dst[0] = if segment.name == "h_star" { h_star } else { c };
                } else {
                    dst[0] = 0.0;
                }
            }
            "error" => {
                let e = if let ObsCommand::Horizontal { error } = ctx.command { error } else { [0.0; 2] };
                dst.copy_from_slice(&e);
            }
            "command" => {
                let c = if let ObsCommand::Walk(c) = ctx.command { c } else { [0.0; 3] };
                dst.copy_from_slice(&c);
            }
            "height" => dst[0] = s.base_pos[1] - ctx.ground_height,
            "lin_vel" => dst.copy_from_slice(&vel),
            "ang_vel" => dst[0] = s.pitch_rate,
            "gravity" => dst.copy_from_slice(&grav),
            "joint_pos" => {
                for j in 0..N_ACT {
                    dst[j] = ctx.joint_pos[j] - ctx.default_joints[j];
                }
            }
            "joint_vel" => dst.copy_from_slice(&qd),
            "prev_action" => dst.copy_from_slice(ctx.prev_action),
            other => unreachable!("unknown segment {other}"),
        }
        let sd = noise.std_of(segment.name, ctx.gravity);
        if sd > 0.0 {
            for v in dst.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += sd * z;
            }
        }
        at += segment.dim;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomizationProfile {
    Walking,
    Jumping,
    Off,
}

/// One `(low, high)` interval per randomized quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizationRanges {
    pub static_friction: (f64, f64),
    pub dynamic_friction: (f64, f64),
    /// kg added to the base.
    pub base_mass: (f64, f64),
    /// Scale on the leg mass; acts on the base pitch inertia.
    pub link_mass: (f64, f64),
    /// m, along body x.
    pub com_shift: (f64, f64),
    /// Scale on both PD gains.
    pub actuator_gains: (f64, f64),
    pub no_load_speed: (f64, f64),
    pub cutoff_speed: (f64, f64),
    /// N·m·s
    pub motor_friction: (f64, f64),
    pub motor_armature: (f64, f64),
    pub joint_offsets_deg: (f64, f64),
    pub latency_ms: (f64, f64),
    /// N, per world axis.
    pub external_force: (f64, f64),
    /// N·m about the pitch axis.
    pub external_torque: (f64, f64),
    /// Seconds between external wrench draws.
    pub wrench_interval: f64,
}

impl RandomizationRanges {
    pub fn profile(p: RandomizationProfile) -> Self {
        match p {
            RandomizationProfile::Jumping => Self {
                static_friction: (0.9, 1.2),
                dynamic_friction: (0.8, 0.9),
                base_mass: (-1.0, 2.0),
                link_mass: (0.8, 1.2),
                com_shift: (-0.03, 0.03),
                actuator_gains: (0.6, 1.4),
                no_load_speed: (0.8, 1.2),
                cutoff_speed: (0.8, 1.4),
                motor_friction: (0.005, 0.04),
                motor_armature: (0.6, 1.4),
                joint_offsets_deg: (-2.0, 2.0),
                latency_ms: (0.0, 16.0),
                external_force: (-5.0, 5.0),
                external_torque: (-3.0, 3.0),
                wrench_interval: 1.0,
            },
            RandomizationProfile::Walking => Self {
                static_friction: (0.8, 0.95),
                dynamic_friction: (0.7, 0.8),
                no_load_speed: (0.6, 1.2),
                cutoff_speed: (0.6, 1.4),
                motor_friction: (0.0, 0.04),
                latency_ms: (0.0, 32.0),
                external_force: (-10.0, 10.0),
                ..Self::profile(RandomizationProfile::Jumping)
            },
            RandomizationProfile::Off => Self {
                static_friction: (f64::NAN, f64::NAN),
                dynamic_friction: (f64::NAN, f64::NAN),
                base_mass: (0.0, 0.0),
                link_mass: (1.0, 1.0),
                com_shift: (0.0, 0.0),
                actuator_gains: (1.0, 1.0),
                no_load_speed: (1.0, 1.0),
                cutoff_speed: (1.0, 1.0),
                motor_friction: (f64::NAN, f64::NAN),
                motor_armature: (1.0, 1.0),
                joint_offsets_deg: (0.0, 0.0),
                latency_ms: (0.0, 0.0),
                external_force: (0.0, 0.0),
                external_torque: (0.0, 0.0),
                wrench_interval: 1.0,
            },
        }
    }

    /// Named rows, one per randomized quantity.
    pub fn rows(&self) -> [(&'static str, (f64, f64)); 14] {
        [
            ("static_friction", self.static_friction),
            ("dynamic_friction", self.dynamic_friction),
            ("base_mass", self.base_mass),
            ("link_mass", self.link_mass),
            ("com_shift", self.com_shift),
            ("actuator_gains", self.actuator_gains),
            ("no_load_speed", self.no_load_speed),
            ("cutoff_speed", self.cutoff_speed),
            ("motor_friction", self.motor_friction),
            ("motor_armature", self.motor_armature),
            ("joint_offsets_deg", self.joint_offsets_deg),
            ("latency_ms", self.latency_ms),
            ("external_force", self.external_force),
            ("external_torque", self.external_torque),
        ]
    }

    pub fn validate(&self) -> Result<(), (String, String)> {
        for (name, (lo, hi)) in self.rows() {
            // NaN pairs keep the nominal value
            if lo.is_nan() && hi.is_nan() {
                continue;
            }
            if !(lo <= hi) {
                return Err((format!("randomization.{name}"), format!("need low <= high, got ({lo}, {hi})")));
            }
        }
        if !(self.wrench_interval > 0.0) {
            return Err(("randomization.wrench_interval".into(), "must be > 0".into()));
        }
        Ok(())
    }
}

/// Uniform draw; a NaN interval keeps `nominal`.
fn draw<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64), nominal: f64) -> f64 {
    if lo.is_nan() {
        nominal
    } else if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Per-episode physical parameters and sensing disturbances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeParams {
    pub sim: SimParams,
    pub joint_offsets: [f64; N_ACT],
    /// Seconds.
    pub latency: f64,
    pub delay_steps: usize,
}

/// Leg share of the pitch inertia scaled by the link-mass draw.
const LEG_INERTIA_SHARE: f64 = 0.2;

pub fn randomize_domain<R: Rng + ?Sized>(
    nominal: &SimParams,
    ranges: &RandomizationRanges,
    control_dt: f64,
    rng: &mut R,
) -> EpisodeParams {
    let mut p = *nominal;
    let c = &mut p.contact;
    c.static_friction = draw(rng, ranges.static_friction, c.static_friction);
    c.dynamic_friction = draw(rng, ranges.dynamic_friction, c.dynamic_friction).min(c.static_friction);
    let b = &mut p.body;
    b.mass += draw(rng, ranges.base_mass, 0.0);
    let link = draw(rng, ranges.link_mass, 1.0);
    b.pitch_inertia *= 1.0 - LEG_INERTIA_SHARE + LEG_INERTIA_SHARE * link;
    b.com_offset_x += draw(rng, ranges.com_shift, 0.0);
    let a = &mut p.actuator;
    let gains = draw(rng, ranges.actuator_gains, 1.0);
    a.kp *= gains;
    a.kd *= gains;
    a.no_load_speed *= draw(rng, ranges.no_load_speed, 1.0);
    a.cutoff_speed *= draw(rng, ranges.cutoff_speed, 1.0);
    a.viscous_friction = draw(rng, ranges.motor_friction, a.viscous_friction);
    a.armature *= draw(rng, ranges.motor_armature, 1.0);
    let joint_offsets = std::array::from_fn(|_| draw(rng, ranges.joint_offsets_deg, 0.0).to_radians());
    let latency = draw(rng, ranges.latency_ms, 0.0) * 1e-3;
    p.external_force = [0.0; 2];
    p.external_torque = 0.0;
    EpisodeParams { sim: p, joint_offsets, latency, delay_steps: delay_steps(latency, control_dt) }
}

/// `ceil(latency / dt)` control steps.
pub fn delay_steps(latency: f64, control_dt: f64) -> usize {
    if latency <= 0.0 {
        0
    } else {
        (latency / control_dt - 1e-9).ceil() as usize
    }
}

/// Draws a new external wrench every `interval` seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WrenchSchedule {
    pub interval: f64,
    next_draw: f64,
}

impl WrenchSchedule {
    pub fn new(interval: f64) -> Self {
        Self { interval, next_draw: 0.0 }
    }

    /// Returns a fresh `(force, torque)` when one is due at time `t`.
    pub fn poll<R: Rng + ?Sized>(&mut self, t: f64, ranges: &RandomizationRanges, rng: &mut R) -> Option<([f64; 2], f64)> {
        if t + 1e-12 < self.next_draw {
            return None;
        }
        self.next_draw = t + self.interval;
        let f = [draw(rng, ranges.external_force, 0.0), draw(rng, ranges.external_force, 0.0)];
        Some((f, draw(rng, ranges.external_torque, 0.0)))
    }
}

/// Fixed-length FIFO; the first outputs are the fill value.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayLine<T> {
    queue: VecDeque<T>,
}

impl<T: Clone> DelayLine<T> {
    pub fn new(delay: usize, fill: T) -> Self {
        Self { queue: std::iter::repeat(fill).take(delay).collect() }
    }

    pub fn delay(&self) -> usize {
        self.queue.len()
    }

    /// Pushes `x` and returns the value from `delay` steps ago.
    pub fn push(&mut self, x: T) -> T {
        if self.queue.is_empty() {
            return x;
        }
        self.queue.push_back(x);
        self.queue.pop_front().expect("non-empty")
    }
}

/// Delays a whole stream by `delay` steps, padding with zero actions.
pub fn apply_latency(stream: &[[f64; N_ACT]], delay: usize) -> Vec<[f64; N_ACT]> {
    let mut line = DelayLine::new(delay, [0.0; N_ACT]);
    stream.iter().map(|a| line.push(*a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Simulator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stance() -> (Simulator, SimState) {
        let sim = Simulator::new(SimParams::default()).unwrap();
        let s = sim.standing_state(0.35, 0.0).unwrap();
        (sim, s)
    }

    fn obs(spec: &ObservationSpec, s: &SimState, cmd: ObsCommand, noise: &ObservationNoise, seed: u64) -> Vec<f64> {
        let def = s.joint_positions();
        let ctx = ObsContext {
            state: s,
            joint_pos: s.joint_positions(),
            default_joints: &def,
            prev_action: &[0.1, 0.2, 0.3, 0.4],
            command: cmd,
            gravity: 9.81,
            ground_height: 0.0,
        };
        let mut out = vec![0.0; spec.dim()];
        build_observation(spec, &ctx, noise, &mut ChaCha8Rng::seed_from_u64(seed), &mut out);
        out
    }

    #[test]
    fn layouts() {
        assert_eq!(ObservationSpec::new(ObsMode::VerticalJump).dim(), 20);
        assert_eq!(ObservationSpec::new(ObsMode::HorizontalJump).dim(), 20);
        assert_eq!(ObservationSpec::new(ObsMode::Walking).dim(), 20);
        let w = ObservationSpec::new(ObsMode::Walking);
        let names: Vec<&str> = w.segments.iter().map(|s| s.name).collect();
        assert_eq!(names, ["lin_vel", "ang_vel", "gravity", "command", "joint_pos", "joint_vel", "prev_action"]);
    }

    #[test]
    fn reference_pose_observation() {
        let (_, s) = stance();
        let spec = ObservationSpec::new(ObsMode::VerticalJump);
        let o = obs(&spec, &s, ObsCommand::Vertical { h_star: 0.8, c: 1.0 }, &ObservationNoise::off(), 0);
        assert_eq!(&o[..2], &[0.8, 1.0]);
        assert!(o[spec.range("joint_pos").unwrap()].iter().all(|v| *v == 0.0));
        assert_eq!(&o[spec.range("gravity").unwrap()], &[0.0, -1.0]);
        assert_eq!(&o[spec.range("prev_action").unwrap()], &[0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn horizontal_error_segment() {
        let (_, s) = stance();
        let spec = ObservationSpec::new(ObsMode::HorizontalJump);
        let o = obs(&spec, &s, ObsCommand::Horizontal { error: [0.45, 0.0] }, &ObservationNoise::off(), 0);
        assert_eq!(&o[spec.range("error").unwrap()], &[0.45, 0.0]);
    }

    #[test]
    fn pitched_gravity_and_velocity() {
        let (_, mut s) = stance();
        s.pitch = 0.3;
        s.base_vel = [1.0, 0.0];
        let spec = ObservationSpec::new(ObsMode::VerticalJump);
        let o = obs(&spec, &s, ObsCommand::Vertical { h_star: 0.5, c: 0.0 }, &ObservationNoise::off(), 0);
        let g = &o[spec.range("gravity").unwrap()];
        // nose up: gravity points toward the tail in the body frame
        assert!((g[0] + 0.3f64.sin()).abs() < 1e-12 && (g[1] + 0.3f64.cos()).abs() < 1e-12);
        let v = &o[spec.range("lin_vel").unwrap()];
        assert!((v[0] - 0.3f64.cos()).abs() < 1e-12 && (v[1] + 0.3f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let (_, s) = stance();
        let spec = ObservationSpec::new(ObsMode::VerticalJump);
        let n = ObservationNoise::default();
        let a = obs(&spec, &s, ObsCommand::Vertical { h_star: 0.5, c: 1.0 }, &n, 9);
        let b = obs(&spec, &s, ObsCommand::Vertical { h_star: 0.5, c: 1.0 }, &n, 9);
        let c = obs(&spec, &s, ObsCommand::Vertical { h_star: 0.5, c: 1.0 }, &n, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_statistics_match_table() {
        let (_, s) = stance();
        let spec = ObservationSpec::new(ObsMode::VerticalJump);
        let noise = ObservationNoise::default();
        let clean = obs(&spec, &s, ObsCommand::Vertical { h_star: 0.5, c: 1.0 }, &ObservationNoise::off(), 0);
        let def = s.joint_positions();
        let ctx = ObsContext {
            state: &s,
            joint_pos: s.joint_positions(),
            default_joints: &def,
            prev_action: &[0.1, 0.2, 0.3, 0.4],
            command: ObsCommand::Vertical { h_star: 0.5, c: 1.0 },
            gravity: 9.81,
            ground_height: 0.0,
        };
        let n = 100_000;
        let mut sum_sq = vec![0.0; spec.dim()];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut out = vec![0.0; spec.dim()];
        for _ in 0..n {
            build_observation(&spec, &ctx, &noise, &mut rng, &mut out);
            for i in 0..out.len() {
                sum_sq[i] += (out[i] - clean[i]).powi(2);
            }
        }
        let expect = [
            ("lin_vel", 0.1),
            ("ang_vel", 0.1),
            ("gravity", 0.5 / 9.81),
            ("joint_pos", 3f64.to_radians()),
            ("joint_vel", 10f64.to_radians()),
        ];
        for (name, sd) in expect {
            for i in spec.range(name).unwrap() {
                let emp = (sum_sq[i] / n as f64).sqrt();
                assert!((emp / sd - 1.0).abs() < 0.03, "{name}: {emp} vs {sd}");
            }
        }
        for name in ["h_star", "c", "height", "prev_action"] {
            for i in spec.range(name).unwrap() {
                assert_eq!(sum_sq[i], 0.0);
            }
        }
    }

    #[test]
    fn jumping_ranges_are_respected() {
        let nominal = SimParams::default();
        let r = RandomizationRanges::profile(RandomizationProfile::Jumping);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let e = randomize_domain(&nominal, &r, 1.0 / 60.0, &mut rng);
            let c = e.sim.contact;
            assert!((0.9..=1.2).contains(&c.static_friction));
            assert!((0.8..=0.9).contains(&c.dynamic_friction));
            assert!(c.dynamic_friction <= c.static_friction);
            assert!((13.5..=16.5).contains(&e.sim.body.mass));
            assert!(e.latency <= 0.016 && e.delay_steps <= 1);
            assert!(e.joint_offsets.iter().all(|o| o.abs() <= 2f64.to_radians() + 1e-15));
            let gain = e.sim.actuator.kp / nominal.actuator.kp;
            assert!((0.6..=1.4).contains(&gain));
            assert!((e.sim.actuator.kd / nominal.actuator.kd - gain).abs() < 1e-12);
        }
    }

    /// Each row moves exactly its own parameter.
    #[test]
    fn every_row_maps_to_one_parameter() {
        let nominal = SimParams::default();
        let off = RandomizationRanges::profile(RandomizationProfile::Off);
        let full = RandomizationRanges::profile(RandomizationProfile::Jumping);
        let base = randomize_domain(&nominal, &off, 1.0 / 60.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(base.sim, nominal);
        let fingerprint = |e: &EpisodeParams| -> Vec<f64> {
            let s = &e.sim;
            vec![
                s.contact.static_friction,
                s.contact.dynamic_friction,
                s.body.mass,
                s.body.pitch_inertia,
                s.body.com_offset_x,
                s.actuator.kp,
                s.actuator.no_load_speed,
                s.actuator.cutoff_speed,
                s.actuator.viscous_friction,
                s.actuator.armature,
                e.joint_offsets[0],
                e.latency,
            ]
        };
        let rows = full.rows();
        let mut covered = 0;
        for (i, (name, range)) in rows.iter().enumerate() {
            let mut r = off;
            let set = |f: &mut (f64, f64)| *f = *range;
            match i {
                0 => set(&mut r.static_friction),
                1 => set(&mut r.dynamic_friction),
                2 => set(&mut r.base_mass),
                3 => set(&mut r.link_mass),
                4 => set(&mut r.com_shift),
                5 => set(&mut r.actuator_gains),
                6 => set(&mut r.no_load_speed),
                7 => set(&mut r.cutoff_speed),
                8 => set(&mut r.motor_friction),
                9 => set(&mut r.motor_armature),
                10 => set(&mut r.joint_offsets_deg),
                11 => set(&mut r.latency_ms),
                12 | 13 => {
                    set(if i == 12 { &mut r.external_force } else { &mut r.external_torque });
                    let mut w = WrenchSchedule::new(r.wrench_interval);
                    let (f, t) = w.poll(0.0, &r, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
                    let moved = if i == 12 { f != [0.0; 2] && t == 0.0 } else { f == [0.0; 2] && t != 0.0 };
                    assert!(moved, "{name}");
                    covered += 1;
                    continue;
                }
                _ => unreachable!(),
            }
            let e = randomize_domain(&nominal, &r, 1.0 / 60.0, &mut ChaCha8Rng::seed_from_u64(1));
            let (a, b) = (fingerprint(&base), fingerprint(&e));
            let changed: Vec<usize> = (0..a.len()).filter(|k| a[*k] != b[*k]).collect();
            assert_eq!(changed, vec![i], "{name}");
            covered += 1;
        }
        assert_eq!(covered, rows.len());
    }

    #[test]
    fn wrench_is_resampled_on_schedule() {
        let r = RandomizationRanges::profile(RandomizationProfile::Jumping);
        let mut w = WrenchSchedule::new(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<bool> = (0..250).map(|k| w.poll(k as f64 * 0.01, &r, &mut rng).is_some()).collect();
        let at: Vec<usize> = draws.iter().enumerate().filter(|(_, d)| **d).map(|(k, _)| k).collect();
        assert_eq!(at, vec![0, 100, 200]);
    }

    #[test]
    fn latency_delay_arithmetic() {
        let dt = 1.0 / 60.0;
        assert_eq!(delay_steps(0.0, dt), 0);
        assert_eq!(delay_steps(0.016, dt), 1);
        assert_eq!(delay_steps(0.032, dt), 2);
        assert_eq!(delay_steps(dt, dt), 1);
    }

    #[test]
    fn delay_line_behaviour() {
        let stream: Vec<[f64; N_ACT]> = (0..6).map(|k| [k as f64; N_ACT]).collect();
        assert_eq!(apply_latency(&stream, 0), stream);
        let d = apply_latency(&stream, 2);
        assert_eq!(d[0], [0.0; N_ACT]);
        assert_eq!(d[1], [0.0; N_ACT]);
        assert_eq!(&d[2..], &stream[..4]);
        let constant = vec![[0.7; N_ACT]; 5];
        assert!(apply_latency(&constant, 3)[3..].iter().all(|a| *a == [0.7; N_ACT]));
    }
}
