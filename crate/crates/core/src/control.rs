//! Fixed-rate control stack: policy targets are filtered and tracked by the
//! PD loop, which itself runs on a decimated physics clock.

use crate::actuator::{pd_torque, predictive_filter, rescale_actions, ActionScaling, FilterParams, JointKind, TaskPreset};
use crate::error::SimError;
use crate::kinematics::{LegGeometry, ACT_INNER, ACT_OUTER};
use crate::sim::{SimState, Simulator, N_ACT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rates {
    pub physics_dt: f64,
    /// Physics steps per PD update.
    pub pd_decimation: u32,
    pub policy_hz: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Self { physics_dt: 1e-3, pd_decimation: 2, policy_hz: 60.0 }
    }
}

impl Rates {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.physics_dt > 0.0 && self.physics_dt <= 5e-3) {
            return Err(format!("physics_dt must be in (0, 5 ms], got {}", self.physics_dt));
        }
        if self.pd_decimation == 0 {
            return Err("pd_decimation must be >= 1".into());
        }
        if !(self.policy_hz > 0.0 && 1.0 / self.policy_hz >= self.physics_dt) {
            return Err("policy period must cover at least one physics step".into());
        }
        Ok(())
    }

    pub fn policy_dt(&self) -> f64 {
        1.0 / self.policy_hz
    }

    /// Physics steps in policy interval `k`, spreading the fractional
    /// remainder so that the long-run rate is exact.
    pub fn physics_steps(&self, k: u64) -> u32 {
        let per = 1.0 / (self.policy_hz * self.physics_dt);
        let end = ((k + 1) as f64 * per + 1e-9).floor() as u64;
        let start = (k as f64 * per + 1e-9).floor() as u64;
        (end - start) as u32
    }
}

/// Per-joint limit table and transversal pairs in the sagittal ordering.
pub fn sagittal_limits(geometry: &LegGeometry) -> [(f64, f64); N_ACT] {
    let it = (geometry.joint_limits_min[ACT_INNER], geometry.joint_limits_max[ACT_INNER]);
    let ot = (geometry.joint_limits_min[ACT_OUTER], geometry.joint_limits_max[ACT_OUTER]);
    [it, ot, it, ot]
}

pub const SAGITTAL_PAIRS: [(usize, usize); 2] = [(0, 1), (2, 3)];

pub fn jumping_scaling() -> ActionScaling {
    ActionScaling::preset(TaskPreset::Jumping, &[JointKind::Transversal; N_ACT])
}

/// Summary of one policy interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalReport {
    pub raw_targets: [f64; N_ACT],
    /// Safe targets of the last PD update.
    pub safe_targets: [f64; N_ACT],
    /// Torques of the last PD update.
    pub torques: [f64; N_ACT],
    /// Mean base acceleration over the interval.
    pub mean_base_acc: [f64; 2],
    /// Largest instantaneous base acceleration magnitude.
    pub peak_base_acc: f64,
    /// Mean joint acceleration over the interval.
    pub joint_acc: [f64; N_ACT],
    pub clamped_actions: usize,
}

#[derive(Clone, Debug)]
pub struct Controller {
    pub scaling: ActionScaling,
    pub filter: FilterParams,
    pub rates: Rates,
    /// Encoder offsets added to the measured joint angles.
    pub joint_offsets: [f64; N_ACT],
    limits: [(f64, f64); N_ACT],
}

impl Controller {
    pub fn new(geometry: &LegGeometry, scaling: ActionScaling, filter: FilterParams, rates: Rates) -> Self {
        Self { scaling, filter, rates, joint_offsets: [0.0; N_ACT], limits: sagittal_limits(geometry) }
    }

    pub fn limits(&self) -> &[(f64, f64); N_ACT] {
        &self.limits
    }

    pub fn measured_positions(&self, state: &SimState) -> [f64; N_ACT] {
        let mut q = state.joint_positions();
        for (q, o) in q.iter_mut().zip(&self.joint_offsets) {
            *q += o;
        }
        q
    }

    /// Filtered targets and PD torques for the current measured state.
    pub fn pd_update(&self, sim: &Simulator, state: &SimState, raw: &[f64; N_ACT]) -> ([f64; N_ACT], [f64; N_ACT]) {
        let q = self.measured_positions(state);
        let qd = state.joint_velocities();
        let mut safe = [0.0; N_ACT];
        predictive_filter(raw, &q, &qd, &self.limits, &SAGITTAL_PAIRS, &self.filter, &mut safe);
        let mut tau = [0.0; N_ACT];
        for j in 0..N_ACT {
            tau[j] = pd_torque(safe[j], q[j], qd[j], &sim.params().actuator);
        }
        (safe, tau)
    }

    /// Runs policy interval `k` with actions in `[-1, 1]`.
    pub fn run_interval(
        &self,
        sim: &Simulator,
        state: &mut SimState,
        actions: &[f64; N_ACT],
        k: u64,
    ) -> Result<IntervalReport, SimError> {
        let mut raw = [0.0; N_ACT];
        let clamped = rescale_actions(actions, &self.scaling, &mut raw);
        self.run_targets(sim, state, &raw, k, clamped)
    }

    /// Runs policy interval `k` tracking raw joint targets.
    pub fn run_targets(
        &self,
        sim: &Simulator,
        state: &mut SimState,
        raw: &[f64; N_ACT],
        k: u64,
        clamped: usize,
    ) -> Result<IntervalReport, SimError> {
        let n = self.rates.physics_steps(k);
        let dt = self.rates.physics_dt;
        let v0 = state.base_vel;
        let qd0 = state.joint_velocities();
        let mut safe = [0.0; N_ACT];
        let mut tau = [0.0; N_ACT];
        let mut peak: f64 = 0.0;
        for i in 0..n {
            if i % self.rates.pd_decimation == 0 {
                (safe, tau) = self.pd_update(sim, state, raw);
            }
            *state = sim.step(state, &tau, dt)?;
            peak = peak.max(state.base_acc[0].hypot(state.base_acc[1]));
        }
        let span = n as f64 * dt;
        let qd1 = state.joint_velocities();
        Ok(IntervalReport {
            raw_targets: *raw,
            safe_targets: safe,
            torques: tau,
            mean_base_acc: [(state.base_vel[0] - v0[0]) / span, (state.base_vel[1] - v0[1]) / span],
            peak_base_acc: peak,
            joint_acc: std::array::from_fn(|j| (qd1[j] - qd0[j]) / span),
            clamped_actions: clamped,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_hertz_on_a_millisecond_clock() {
        let r = Rates::default();
        let steps: Vec<u32> = (0..3).map(|k| r.physics_steps(k)).collect();
        assert_eq!(steps, vec![16, 17, 17]);
        let total: u32 = (0..60).map(|k| r.physics_steps(k)).sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn exact_divisor_rates() {
        let r = Rates { physics_dt: 2e-3, pd_decimation: 1, policy_hz: 50.0 };
        assert!((0..100).all(|k| r.physics_steps(k) == 10));
    }
}
