//! Sagittal-plane rigid-body simulation of the jumper.
//!
//! The legs are massless force transmitters. All mass sits in the base; each
//! actuated joint carries its reflected rotor inertia. Left and right legs are
//! lumped, so every sagittal paw stands for two real paws.

use nalgebra::{Matrix2, Vector2};

use crate::actuator::ActuatorParams;
use crate::error::{MeasureError, SimError};
use crate::kinematics::{
    closed_leg, closed_paw_jacobian, forward_points, weighted_ik, BodyLayout, IkOptions, KneeBend,
    LegGeometry, LegJointState, RobotConfiguration, N_LEGS,
};

type Vec2 = Vector2<f64>;

/// Real paws represented by one lumped sagittal paw.
pub const PAWS_PER_LEG: f64 = 2.0;
/// Actuated sagittal joints: `[front_it, front_ot, back_it, back_ot]`.
pub const N_ACT: usize = 2 * N_LEGS;
/// Consecutive contact-free physics steps before takeoff is declared.
pub const TAKEOFF_DEBOUNCE: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyParams {
    pub mass: f64,
    pub pitch_inertia: f64,
    pub body_length: f64,
    pub nominal_height: f64,
    /// Magnitude, acting along -z.
    pub gravity: f64,
    /// CoM shift along body x, moves the hips relative to the CoM.
    pub com_offset_x: f64,
}

impl Default for BodyParams {
    fn default() -> Self {
        Self {
            mass: 14.5,
            pitch_inertia: 0.35,
            body_length: 0.67,
            nominal_height: 0.35,
            gravity: 9.81,
            com_offset_x: 0.0,
        }
    }
}

impl BodyParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field, reason: &str| Err(SimError::InvalidParams { field, reason: reason.into() });
        if !(self.mass > 0.0) {
            return bad("mass", "must be > 0");
        }
        if !(self.pitch_inertia > 0.0) {
            return bad("pitch_inertia", "must be > 0");
        }
        if !(self.gravity > 0.0) {
            return bad("gravity", "must be > 0");
        }
        if !(self.body_length > 0.0) {
            return bad("body_length", "must be > 0");
        }
        if !(self.nominal_height > 0.0) {
            return bad("nominal_height", "must be > 0");
        }
        Ok(())
    }

    pub fn layout(&self) -> BodyLayout {
        BodyLayout::from_body_length(self.body_length, self.com_offset_x)
    }
}

/// Penalty contact, per real paw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactParams {
    /// N/m, used for both the normal and the tangential (stick) spring.
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
    pub static_friction: f64,
    pub dynamic_friction: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self { stiffness: 2e4, damping: 300.0, static_friction: 1.0, dynamic_friction: 0.85 }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.stiffness > 0.0 && self.damping > 0.0) {
            return Err(SimError::InvalidParams {
                field: "contact",
                reason: "stiffness and damping must be > 0".into(),
            });
        }
        if !(self.dynamic_friction > 0.0 && self.dynamic_friction <= self.static_friction) {
            return Err(SimError::InvalidParams {
                field: "friction",
                reason: format!(
                    "need 0 < dynamic <= static, got {} / {}",
                    self.dynamic_friction, self.static_friction
                ),
            });
        }
        Ok(())
    }
}

/// Hard stops a little past the joint and sum limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopParams {
    pub margin: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for StopParams {
    fn default() -> Self {
        Self { margin: 5f64.to_radians(), stiffness: 2000.0, damping: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams {
    pub geometry: LegGeometry,
    pub body: BodyParams,
    pub contact: ContactParams,
    pub actuator: ActuatorParams,
    pub stops: StopParams,
    pub bend: KneeBend,
    pub ground_height: f64,
    /// Persistent disturbance on the base, world frame.
    pub external_force: [f64; 2],
    pub external_torque: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            geometry: LegGeometry::default(),
            body: BodyParams::default(),
            contact: ContactParams::default(),
            actuator: ActuatorParams::default(),
            stops: StopParams::default(),
            bend: KneeBend::Outward,
            ground_height: 0.0,
            external_force: [0.0; 2],
            external_torque: 0.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        self.geometry.validate()?;
        self.body.validate()?;
        self.contact.validate()?;
        self.actuator
            .validate()
            .map_err(|reason| SimError::InvalidParams { field: "actuator", reason })?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum JumpPhase {
    #[default]
    Stance,
    InFlight,
    Landed,
}

impl JumpPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            JumpPhase::Stance => "stance",
            JumpPhase::InFlight => "flight",
            JumpPhase::Landed => "landed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Takeoff {
    pub time: f64,
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimState {
    pub time: f64,
    /// Base CoM `(x, z)`, world frame.
    pub base_pos: [f64; 2],
    /// Nose-up positive.
    pub pitch: f64,
    pub base_vel: [f64; 2],
    pub pitch_rate: f64,
    pub legs: [LegJointState; N_LEGS],
    /// `[it, ot]` rates per leg.
    pub joint_vel: [[f64; 2]; N_LEGS],
    pub contact: [bool; N_LEGS],
    /// Total force on each lumped paw pair, world frame.
    pub ground_force: [[f64; 2]; N_LEGS],
    /// Friction anchors (world x) of the sticking paws.
    pub anchors: [Option<f64>; N_LEGS],
    pub base_acc: [f64; 2],
    pub joint_acc: [f64; N_ACT],
    pub phase: JumpPhase,
    pub phase_entry_time: f64,
    /// Highest base z seen since takeoff.
    pub max_height: f64,
    pub takeoff: Option<Takeoff>,
    pub airborne_steps: u32,
}

impl SimState {
    pub fn from_configuration(config: &RobotConfiguration) -> Self {
        Self {
            time: 0.0,
            base_pos: [config.base_x, config.base_z],
            pitch: config.base_pitch,
            base_vel: [0.0; 2],
            pitch_rate: 0.0,
            legs: config.legs,
            joint_vel: [[0.0; 2]; N_LEGS],
            contact: [false; N_LEGS],
            ground_force: [[0.0; 2]; N_LEGS],
            anchors: [None; N_LEGS],
            base_acc: [0.0; 2],
            joint_acc: [0.0; N_ACT],
            phase: JumpPhase::Stance,
            phase_entry_time: 0.0,
            max_height: config.base_z,
            takeoff: None,
            airborne_steps: 0,
        }
    }

    pub fn configuration(&self) -> RobotConfiguration {
        RobotConfiguration {
            base_x: self.base_pos[0],
            base_z: self.base_pos[1],
            base_pitch: self.pitch,
            legs: self.legs,
        }
    }

    pub fn joint_positions(&self) -> [f64; N_ACT] {
        let [f, b] = &self.legs;
        [f.theta_it, f.theta_ot, b.theta_it, b.theta_ot]
    }

    pub fn joint_velocities(&self) -> [f64; N_ACT] {
        let [f, b] = self.joint_vel;
        [f[0], f[1], b[0], b[1]]
    }

    pub fn is_finite(&self) -> bool {
        self.base_pos.iter().chain(&self.base_vel).all(|v| v.is_finite())
            && self.pitch.is_finite()
            && self.pitch_rate.is_finite()
            && self.legs.iter().all(|l| l.is_finite())
            && self.joint_vel.iter().flatten().all(|v| v.is_finite())
    }

    /// Re-enters stance after a landing so a new jump can be tracked.
    pub fn rearm(&mut self) {
        if self.phase == JumpPhase::Landed {
            self.phase = JumpPhase::Stance;
            self.phase_entry_time = self.time;
            self.takeoff = None;
            self.max_height = self.base_pos[1];
            self.airborne_steps = 0;
        }
    }

    pub fn total_normal_force(&self) -> f64 {
        self.ground_force.iter().map(|f| f[1]).sum()
    }
}

#[inline]
fn rot(pitch: f64) -> Matrix2<f64> {
    let (s, c) = pitch.sin_cos();
    Matrix2::new(c, -s, s, c)
}

#[inline]
fn cross(r: &Vec2, f: &Vec2) -> f64 {
    r.x * f.y - r.y * f.x
}

/// Advances the jump phase from the contact flags of the latest step.
pub fn update_jump_phase(state: &mut SimState) {
    let airborne = state.contact.iter().all(|c| !c);
    match state.phase {
        JumpPhase::Stance => {
            state.airborne_steps = if airborne { state.airborne_steps + 1 } else { 0 };
            if state.airborne_steps >= TAKEOFF_DEBOUNCE {
                state.phase = JumpPhase::InFlight;
                state.phase_entry_time = state.time;
                state.takeoff =
                    Some(Takeoff { time: state.time, position: state.base_pos, velocity: state.base_vel });
                state.max_height = state.base_pos[1];
            }
        }
        JumpPhase::InFlight => {
            if airborne {
                state.max_height = state.max_height.max(state.base_pos[1]);
            } else {
                state.phase = JumpPhase::Landed;
                state.phase_entry_time = state.time;
            }
        }
        JumpPhase::Landed => {}
    }
}

struct PawContact {
    force: Vec2,
    contact: bool,
    anchor: Option<f64>,
    /// d(force)/d(paw velocity), diagonal `(tangential, normal)`.
    damping: Vec2,
    slipping: bool,
}

#[derive(Clone, Debug)]
pub struct Simulator {
    params: SimParams,
    layout: BodyLayout,
}

impl Simulator {
    pub fn new(params: SimParams) -> Result<Self, SimError> {
        params.validate()?;
        Ok(Self { layout: params.body.layout(), params })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn layout(&self) -> &BodyLayout {
        &self.layout
    }

    /// Swaps in new parameters, e.g. freshly randomized ones.
    pub fn set_params(&mut self, params: SimParams) -> Result<(), SimError> {
        params.validate()?;
        self.layout = params.body.layout();
        self.params = params;
        Ok(())
    }

    pub fn set_external_wrench(&mut self, force: [f64; 2], torque: f64) {
        self.params.external_force = force;
        self.params.external_torque = torque;
    }

    /// Paw position in the world frame and relative to the CoM.
    pub fn paw_world(&self, state: &SimState, leg: usize) -> (Vec2, Vec2) {
        let r = rot(state.pitch) * (self.layout.hips[leg] + forward_points(&self.params.geometry, &state.legs[leg]).paw);
        (Vec2::new(state.base_pos[0], state.base_pos[1]) + r, r)
    }

    /// Base height at which the lowest paw touches the ground, for the
    /// current joints and pitch.
    pub fn landing_height(&self, state: &SimState) -> f64 {
        let lowest = (0..N_LEGS).map(|leg| self.paw_world(state, leg).1.y).fold(f64::INFINITY, f64::min);
        self.params.ground_height - lowest
    }

    fn paw_contact(&self, pos: &Vec2, vel: &Vec2, anchor: Option<f64>) -> PawContact {
        let c = &self.params.contact;
        let pen = self.params.ground_height - pos.y;
        if pen <= 0.0 {
            return PawContact {
                force: Vec2::zeros(),
                contact: false,
                anchor: None,
                damping: Vec2::zeros(),
                slipping: false,
            };
        }
        let raw_n = c.stiffness * pen - c.damping * vel.y;
        let normal = raw_n.max(0.0);
        let d_n = if raw_n > 0.0 { c.damping } else { 0.0 };
        let anchor_x = anchor.unwrap_or(pos.x);
        let trial = -c.stiffness * (pos.x - anchor_x) - c.damping * vel.x;
        let (ft, new_anchor, d_t) = if trial.abs() <= c.static_friction * normal {
            (trial, anchor_x, c.damping)
        } else {
            let ft = -c.dynamic_friction * normal * trial.signum();
            (ft, pos.x + ft / c.stiffness, 0.0)
        };
        PawContact {
            force: Vec2::new(ft, normal),
            contact: true,
            anchor: Some(new_anchor),
            damping: Vec2::new(d_t, d_n),
            slipping: d_t == 0.0,
        }
    }

    /// Spring torque of a mechanical stop and its damping coefficient,
    /// nonzero only while the joint moves further into the stop.
    fn stop(&self, q: f64, qd: f64, lo: f64, hi: f64) -> (f64, f64) {
        let s = &self.params.stops;
        let (lo, hi) = (lo - s.margin, hi + s.margin);
        if q > hi {
            (-s.stiffness * (q - hi), if qd > 0.0 { s.damping } else { 0.0 })
        } else if q < lo {
            (s.stiffness * (lo - q), if qd < 0.0 { s.damping } else { 0.0 })
        } else {
            (0.0, 0.0)
        }
    }

    /// One physics step of `dt` seconds with joint torques held constant.
    /// `torques` follow the `[front_it, front_ot, back_it, back_ot]` order.
    pub fn step(&self, state: &SimState, torques: &[f64; N_ACT], dt: f64) -> Result<SimState, SimError> {
        debug_assert!(dt > 0.0 && dt <= 5e-3);
        let p = &self.params;
        let geo = &p.geometry;
        let rmat = rot(state.pitch);
        let base_v = Vec2::new(state.base_vel[0], state.base_vel[1]);

        let mut next = *state;
        let mut net_force = Vec2::new(p.external_force[0], p.external_force[1] - p.body.mass * p.body.gravity);
        let mut net_torque = p.external_torque;

        for leg in 0..N_LEGS {
            let joints = &state.legs[leg];
            let qd = Vec2::new(state.joint_vel[leg][0], state.joint_vel[leg][1]);
            let local = forward_points(geo, joints).paw;
            let r = rmat * (self.layout.hips[leg] + local);
            let pos = Vec2::new(state.base_pos[0], state.base_pos[1]) + r;
            let jw = rmat * closed_paw_jacobian(geo, joints);
            let vel = base_v + state.pitch_rate * Vec2::new(-r.y, r.x) + jw * qd;
            let pc = self.paw_contact(&pos, &vel, state.anchors[leg]);

            // joint-side torques
            let (q_it, q_ot) = (joints.theta_it, joints.theta_ot);
            let sum = q_it + q_ot;
            let (sl, su) = geo.transversal_sum_bounds;
            let (k_sum, c_sum) = self.stop(sum, qd[0] + qd[1], sl, su);
            let (k_it, c_it) = self.stop(q_it, qd[0], geo.joint_limits_min[1], geo.joint_limits_max[1]);
            let (k_ot, c_ot) = self.stop(q_ot, qd[1], geo.joint_limits_min[2], geo.joint_limits_max[2]);
            let stop_damp = Matrix2::new(c_it + c_sum, c_sum, c_sum, c_ot + c_sum);
            let tau = Vector2::new(torques[2 * leg] + k_it + k_sum, torques[2 * leg + 1] + k_ot + k_sum) - stop_damp * qd;
            // contact and stop damping are implicit on the joint side
            let ia = p.actuator.armature;
            let damp = Matrix2::from_diagonal(&pc.damping);
            let m = Matrix2::identity() * ia + dt * (jw.transpose() * damp * jw + stop_damp);
            let rhs = dt * (tau + jw.transpose() * pc.force);
            let dqd = m.try_inverse().map(|mi| mi * rhs).unwrap_or(rhs / ia);
            let mut force = pc.force - damp * (jw * dqd);
            force.y = force.y.max(0.0);
            let c = &p.contact;
            force.x = if pc.slipping {
                c.dynamic_friction * force.y * pc.force.x.signum()
            } else {
                force.x.clamp(-c.static_friction * force.y, c.static_friction * force.y)
            };

            let qd_new = qd + dqd;
            let it = q_it + qd_new[0] * dt;
            let ot = q_ot + qd_new[1] * dt;
            next.legs[leg] = closed_leg(geo, joints.theta_l, it, ot, p.bend)?;
            next.joint_vel[leg] = [qd_new[0], qd_new[1]];
            next.joint_acc[2 * leg] = dqd[0] / dt;
            next.joint_acc[2 * leg + 1] = dqd[1] / dt;

            let total = PAWS_PER_LEG * force;
            net_force += total;
            net_torque += cross(&r, &total);
            next.contact[leg] = pc.contact;
            next.anchors[leg] = pc.anchor;
            next.ground_force[leg] = [total.x, total.y];
        }

        let acc = net_force / p.body.mass;
        let alpha = net_torque / p.body.pitch_inertia;
        for k in 0..2 {
            next.base_pos[k] = state.base_pos[k] + state.base_vel[k] * dt + 0.5 * acc[k] * dt * dt;
            next.base_vel[k] = state.base_vel[k] + acc[k] * dt;
        }
        next.pitch = state.pitch + state.pitch_rate * dt + 0.5 * alpha * dt * dt;
        next.pitch_rate = state.pitch_rate + alpha * dt;
        next.base_acc = [acc.x, acc.y];
        next.time = state.time + dt;

        let fast = |v: f64| !(v.abs() <= 100.0);
        if !next.is_finite()
            || next.base_vel.iter().any(|&v| fast(v))
            || fast(next.pitch_rate / 10.0)
            || next.joint_vel.iter().flatten().any(|&v| fast(v / 10.0))
        {
            return Err(SimError::NumericalBlowup {
                time: next.time,
                what: format!(
                    "base_vel {:?}, pitch_rate {:.3}, joint_vel {:?}",
                    next.base_vel, next.pitch_rate, next.joint_vel
                ),
            });
        }
        update_jump_phase(&mut next);
        Ok(next)
    }

    /// Static stance at base height `height` with the paws under the hips,
    /// resting on the ground with the contact springs preloaded.
    pub fn standing_state(&self, height: f64, pitch: f64) -> Result<SimState, SimError> {
        self.stance_state(height, pitch, [0.0; N_LEGS])
    }

    /// Like [`Simulator::standing_state`], with each paw shifted by
    /// `paw_offsets[leg]` along world x.
    pub fn stance_state(&self, height: f64, pitch: f64, paw_offsets: [f64; N_LEGS]) -> Result<SimState, SimError> {
        let p = &self.params;
        let mut guess = RobotConfiguration { base_x: 0.0, base_z: height, base_pitch: pitch, ..Default::default() };
        for leg in guess.legs.iter_mut() {
            *leg = closed_leg(&p.geometry, 45f64.to_radians(), 1.05, 1.05, p.bend)?;
        }
        let (s, c) = pitch.sin_cos();
        // paws under the hips in the world, expressed in the body frame
        let targets: [Vec2; N_LEGS] = std::array::from_fn(|i| {
            let hip = self.layout.hips[i];
            let hip_w = Vec2::new(c * hip.x - s * hip.y, s * hip.x + c * hip.y);
            let paw_w = Vec2::new(hip_w.x + paw_offsets[i], -height);
            Vec2::new(c * paw_w.x + s * paw_w.y, -s * paw_w.x + c * paw_w.y)
        });
        let opts = IkOptions { bend: p.bend, ..Default::default() };
        let sol = weighted_ik(&p.geometry, &self.layout, &targets, &guess, &opts).map_err(|e| SimError::InvalidParams {
            field: "standing_height",
            reason: e.to_string(),
        })?;
        let mut state = SimState::from_configuration(&sol.config);
        let loads = self.static_paw_loads(&state);
        // sink by the mean static spring deflection
        let pen = 0.5 * (loads[0] + loads[1]) / p.contact.stiffness;
        state.base_pos[1] = height + p.ground_height - pen;
        state.max_height = state.base_pos[1];
        for leg in 0..N_LEGS {
            let (pos, _) = self.paw_world(&state, leg);
            state.anchors[leg] = Some(pos.x);
            state.contact[leg] = true;
            state.ground_force[leg] = [0.0, PAWS_PER_LEG * loads[leg]];
        }
        Ok(state)
    }

    /// Vertical load per real paw that balances weight and pitch moment.
    pub fn static_paw_loads(&self, state: &SimState) -> [f64; N_LEGS] {
        let w = self.params.body.mass * self.params.body.gravity / PAWS_PER_LEG;
        let xf = self.paw_world(state, 0).1.x;
        let xb = self.paw_world(state, 1).1.x;
        if (xf - xb).abs() < 1e-9 {
            return [0.5 * w, 0.5 * w];
        }
        // f + b = w, f xf + b xb = 0
        let f = -w * xb / (xf - xb);
        [f, w - f]
    }

    /// PD targets whose steady-state torque holds `state` against gravity.
    pub fn gravity_compensating_targets(&self, state: &SimState) -> [f64; N_ACT] {
        let loads = self.static_paw_loads(state);
        let rmat = rot(state.pitch);
        let mut out = [0.0; N_ACT];
        for leg in 0..N_LEGS {
            let jw = rmat * closed_paw_jacobian(&self.params.geometry, &state.legs[leg]);
            let tau = -(jw.transpose() * Vec2::new(0.0, loads[leg]));
            out[2 * leg] = state.legs[leg].theta_it + tau[0] / self.params.actuator.kp;
            out[2 * leg + 1] = state.legs[leg].theta_ot + tau[1] / self.params.actuator.kp;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpOutcome {
    pub h_max: f64,
    pub landing_x: f64,
    pub landing_time: Option<f64>,
    pub decel_peak: f64,
    pub executed: bool,
}

/// Incremental form of [`measure_episode`], fed one state at a time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeTracker {
    pub settle_window: f64,
    pub decel_window: f64,
    h_max: f64,
    landing_x: f64,
    touchdown: Option<f64>,
    decel_peak: f64,
    executed: bool,
    seen: bool,
}

impl OutcomeTracker {
    pub fn new(settle_window: f64, decel_window: f64) -> Self {
        Self {
            settle_window,
            decel_window,
            h_max: f64::NEG_INFINITY,
            landing_x: 0.0,
            touchdown: None,
            decel_peak: 0.0,
            executed: false,
            seen: false,
        }
    }

    pub fn observe(&mut self, s: &SimState) {
        self.seen = true;
        match s.phase {
            JumpPhase::Stance => {
                if !self.executed {
                    self.landing_x = s.base_pos[0];
                }
            }
            JumpPhase::InFlight => {
                self.executed = true;
                self.h_max = self.h_max.max(s.base_pos[1]);
                self.landing_x = s.base_pos[0];
            }
            JumpPhase::Landed => {
                self.executed = true;
                let t0 = *self.touchdown.get_or_insert(s.phase_entry_time);
                let since = s.time - t0;
                if since <= self.settle_window + 1e-12 {
                    self.landing_x = s.base_pos[0];
                }
                if since <= self.decel_window + 1e-12 {
                    let a = (s.base_acc[0].powi(2) + s.base_acc[1].powi(2)).sqrt();
                    self.decel_peak = self.decel_peak.max(a);
                }
            }
        }
    }

    /// Folds in a flight state reached outside simulation (e.g. an
    /// initial state sampled mid-air).
    pub fn mark_executed(&mut self) {
        self.executed = true;
    }

    pub fn landed(&self) -> bool {
        self.touchdown.is_some()
    }

    pub fn h_max(&self) -> Option<f64> {
        (self.h_max.is_finite()).then_some(self.h_max)
    }

    pub fn finish(&self) -> Result<JumpOutcome, MeasureError> {
        if !self.seen {
            return Err(MeasureError::Empty);
        }
        if !self.executed {
            return Err(MeasureError::NoJump);
        }
        Ok(JumpOutcome {
            h_max: self.h_max,
            landing_x: self.landing_x,
            landing_time: self.touchdown,
            decel_peak: self.decel_peak,
            executed: true,
        })
    }
}

/// Jump outcome of a finished episode: apex height while in flight, base x
/// `settle_window` seconds after touchdown (or at the last state) and the
/// peak base acceleration within `decel_window` of touchdown.
pub fn measure_episode(
    history: &[SimState],
    settle_window: f64,
    decel_window: f64,
) -> Result<JumpOutcome, MeasureError> {
    let mut t = OutcomeTracker::new(settle_window, decel_window);
    for s in history {
        t.observe(s);
    }
    t.finish()
}

pub const TRAJECTORY_CSV_VERSION: u32 = 1;

/// One row of the trajectory export.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub state: SimState,
    pub torques: [f64; N_ACT],
}

pub fn write_trajectory_csv<W: std::io::Write>(out: &mut W, rows: &[TrajectoryRow]) -> std::io::Result<()> {
    writeln!(out, "# quadjump trajectory v{TRAJECTORY_CSV_VERSION}")?;
    writeln!(
        out,
        "time,base_x,base_z,pitch,vel_x,vel_z,pitch_rate,\
         front_it,front_ot,back_it,back_ot,\
         tau_front_it,tau_front_ot,tau_back_it,tau_back_ot,\
         contact_front,contact_back,phase"
    )?;
    for r in rows {
        let s = &r.state;
        let q = s.joint_positions();
        write!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            s.time, s.base_pos[0], s.base_pos[1], s.pitch, s.base_vel[0], s.base_vel[1], s.pitch_rate
        )?;
        for v in q.iter().chain(&r.torques) {
            write!(out, ",{v:.6}")?;
        }
        writeln!(out, ",{},{},{}", s.contact[0] as u8, s.contact[1] as u8, s.phase.as_str())?;
    }
    Ok(())
}

/// CSV text of a trajectory.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, rows).expect("writing to memory");
    let mut s = String::from_utf8(buf).expect("ascii");
    s.shrink_to_fit();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::pd_torque;

    fn sim() -> Simulator {
        Simulator::new(SimParams::default()).unwrap()
    }

    fn airborne(sim: &Simulator, z: f64, vx: f64, vz: f64) -> SimState {
        let mut s = sim.standing_state(0.35, 0.0).unwrap();
        s.base_pos = [0.0, z];
        s.base_vel = [vx, vz];
        s.contact = [false; 2];
        s.anchors = [None; 2];
        s.ground_force = [[0.0; 2]; 2];
        s
    }

    #[test]
    fn free_flight_matches_closed_form() {
        let sim = sim();
        let (z0, vz) = (1.0, 0.7);
        let mut s = airborne(&sim, z0, 0.3, vz);
        let dt = 1e-3;
        let mut worst: f64 = 0.0;
        for k in 1..=200 {
            s = sim.step(&s, &[0.0; N_ACT], dt).unwrap();
            let t = k as f64 * dt;
            let z = z0 + vz * t - 0.5 * 9.81 * t * t;
            worst = worst.max((s.base_pos[1] - z).abs());
            assert!(!s.contact[0] && !s.contact[1]);
            assert!((s.base_vel[0] - 0.3).abs() < 1e-12);
        }
        assert!(worst < 1e-4, "ballistic error {worst}");
    }

    fn hold_standing(sim: &Simulator, seconds: f64) -> (SimState, SimState) {
        let s0 = sim.standing_state(0.35, 0.0).unwrap();
        let targets = sim.gravity_compensating_targets(&s0);
        let mut s = s0;
        let mut tau = [0.0; N_ACT];
        let n = (seconds / 1e-3).round() as usize;
        for k in 0..n {
            if k % 2 == 0 {
                let q = s.joint_positions();
                let qd = s.joint_velocities();
                for j in 0..N_ACT {
                    tau[j] = pd_torque(targets[j], q[j], qd[j], &sim.params().actuator);
                }
            }
            s = sim.step(&s, &tau, 1e-3).unwrap();
        }
        (s0, s)
    }

    #[test]
    fn gravity_compensated_stance_holds_height() {
        let sim = sim();
        let (s0, s) = hold_standing(&sim, 1.0);
        let drift = (s.base_pos[1] - s0.base_pos[1]).abs();
        assert!(drift < 1e-3, "drift {drift}");
        assert_eq!(s.phase, JumpPhase::Stance);
    }

    #[test]
    fn static_normal_force_carries_the_weight() {
        let sim = sim();
        let (_, s) = hold_standing(&sim, 1.0);
        let w = 14.5 * 9.81;
        let n = s.total_normal_force();
        assert!((n - w).abs() < 0.02 * w, "normal {n} vs weight {w}");
    }

    #[test]
    fn step_is_deterministic() {
        let sim = sim();
        let s0 = sim.standing_state(0.3, 0.02).unwrap();
        let tau = [3.0, -2.0, 1.0, 4.0];
        let a = sim.step(&s0, &tau, 1e-3).unwrap();
        let b = sim.step(&s0, &tau, 1e-3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn contact_force_is_consistent_with_flags() {
        let sim = sim();
        let mut s = sim.standing_state(0.33, 0.0).unwrap();
        let tau = [10.0, 10.0, 10.0, 10.0];
        for _ in 0..400 {
            s = sim.step(&s, &tau, 1e-3).unwrap();
            for leg in 0..N_LEGS {
                assert!(s.ground_force[leg][1] >= 0.0);
                if s.ground_force[leg] != [0.0, 0.0] {
                    assert!(s.contact[leg]);
                }
                let mu = sim.params().contact.static_friction;
                assert!(s.ground_force[leg][0].abs() <= mu * s.ground_force[leg][1] + 1e-6);
            }
        }
    }

    #[test]
    fn slipping_paw_sees_dynamic_friction() {
        let sim = sim();
        let mut s = sim.standing_state(0.35, 0.0).unwrap();
        // fast sideways slide
        s.base_vel = [2.0, 0.0];
        s.anchors = [Some(-0.5), Some(-0.5)];
        let n = sim.step(&s, &[0.0; N_ACT], 1e-3).unwrap();
        let c = sim.params().contact;
        for leg in 0..N_LEGS {
            let f = n.ground_force[leg];
            assert!(((f[0].abs() / f[1]) - c.dynamic_friction).abs() < 1e-9, "{f:?}");
        }
    }

    #[test]
    fn blowup_is_reported() {
        let sim = sim();
        let mut s = airborne(&sim, 1.0, 0.0, 0.0);
        s.base_vel = [150.0, 0.0];
        assert!(matches!(sim.step(&s, &[0.0; N_ACT], 1e-3), Err(SimError::NumericalBlowup { .. })));
    }

    fn scripted(contacts: &[bool]) -> Vec<SimState> {
        let mut s = SimState::from_configuration(&RobotConfiguration { base_z: 0.35, ..Default::default() });
        let mut out = Vec::new();
        for (k, &c) in contacts.iter().enumerate() {
            s.time = (k + 1) as f64 * 1e-3;
            s.contact = [c, c];
            update_jump_phase(&mut s);
            out.push(s);
        }
        out
    }

    #[test]
    fn phase_stays_in_stance_with_contact() {
        assert!(scripted(&[true; 50]).iter().all(|s| s.phase == JumpPhase::Stance));
    }

    #[test]
    fn single_step_gap_is_debounced() {
        let mut c = vec![true; 10];
        c[4] = false;
        assert!(scripted(&c).iter().all(|s| s.phase == JumpPhase::Stance));
    }

    #[test]
    fn flight_then_touch_lands_at_touch_time() {
        let mut c = vec![true; 5];
        c.extend([false; 10]);
        c.extend([true; 3]);
        let h = scripted(&c);
        assert_eq!(h[5].phase, JumpPhase::Stance);
        assert_eq!(h[6].phase, JumpPhase::InFlight);
        assert_eq!(h[6].takeoff.unwrap().time, h[6].time);
        assert_eq!(h[15].phase, JumpPhase::Landed);
        assert_eq!(h[15].phase_entry_time, h[15].time);
        assert_eq!(h[17].phase, JumpPhase::Landed);
    }

    #[test]
    fn rearm_returns_to_stance() {
        let mut c = vec![false; 4];
        c.push(true);
        let mut s = *scripted(&c).last().unwrap();
        assert_eq!(s.phase, JumpPhase::Landed);
        s.rearm();
        assert_eq!(s.phase, JumpPhase::Stance);
    }

    /// Ballistic arc written state by state, apex `apex` at `t_apex`.
    fn arc_history(apex: f64, vx: f64) -> Vec<SimState> {
        let g = 9.81;
        let z0 = 0.45;
        let vz0 = (2.0 * g * (apex - z0)).sqrt();
        let mut s = SimState::from_configuration(&RobotConfiguration { base_z: z0, ..Default::default() });
        let mut out = vec![s];
        let dt = 1e-3;
        let mut k = 0;
        loop {
            k += 1;
            let t = k as f64 * dt;
            let z = z0 + vz0 * t - 0.5 * g * t * t;
            s.time = t;
            s.base_pos = [vx * t, z.max(z0)];
            s.base_vel = [vx, vz0 - g * t];
            s.contact = [z <= z0, z <= z0];
            update_jump_phase(&mut s);
            out.push(s);
            if z <= z0 && k > 10 {
                break;
            }
        }
        out
    }

    #[test]
    fn measured_apex_of_scripted_arc() {
        let out = measure_episode(&arc_history(0.8, 1.0), 0.2, 0.3).unwrap();
        assert!((out.h_max - 0.8).abs() < 1e-3, "{}", out.h_max);
        assert!(out.executed);
    }

    #[test]
    fn no_takeoff_is_no_jump() {
        let h = scripted(&[true; 20]);
        assert_eq!(measure_episode(&h, 0.2, 0.3), Err(MeasureError::NoJump));
        assert_eq!(measure_episode(&[], 0.2, 0.3), Err(MeasureError::Empty));
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let sim = sim();
        let s = sim.standing_state(0.35, 0.0).unwrap();
        let text = trajectory_csv(&[TrajectoryRow { state: s, torques: [0.0; N_ACT] }; 3]);
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].starts_with("# quadjump trajectory v1"));
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1].split(',').count(), lines[2].split(',').count());
    }
}
