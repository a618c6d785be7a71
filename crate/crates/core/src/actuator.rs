//! Action rescaling, the predictive motor-command filter and the PD actuator
//! with a trapezoidal torque-speed envelope.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActuatorParams {
    /// N·m/rad
    pub kp: f64,
    /// N·m·s/rad
    pub kd: f64,
    pub peak_torque: f64,
    /// Speed at which the driving torque reaches zero, rad/s.
    pub no_load_speed: f64,
    /// Speed up to which the full peak torque is available, rad/s.
    pub cutoff_speed: f64,
    /// N·m·s/rad
    pub viscous_friction: f64,
    /// Reflected rotor inertia, kg·m².
    pub armature: f64,
}

impl Default for ActuatorParams {
    fn default() -> Self {
        Self {
            kp: 30.0,
            kd: 0.8,
            peak_torque: 18.0,
            no_load_speed: 40.0,
            cutoff_speed: 20.0,
            viscous_friction: 0.02,
            armature: 0.01,
        }
    }
}

impl ActuatorParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.cutoff_speed > 0.0 && self.cutoff_speed < self.no_load_speed) {
            return Err(format!(
                "need 0 < cutoff_speed < no_load_speed, got {} / {}",
                self.cutoff_speed, self.no_load_speed
            ));
        }
        if !(self.peak_torque > 0.0) {
            return Err("peak_torque must be > 0".into());
        }
        if !(self.kp >= 0.0 && self.kd >= 0.0) {
            return Err("kp and kd must be >= 0".into());
        }
        if !(self.armature > 0.0) {
            return Err("armature must be > 0".into());
        }
        if !(self.viscous_friction >= 0.0) {
            return Err("viscous_friction must be >= 0".into());
        }
        Ok(())
    }

    /// Largest torque magnitude available in the direction of motion at `speed`.
    pub fn drive_envelope(&self, speed: f64) -> f64 {
        let s = speed.abs();
        if s <= self.cutoff_speed {
            self.peak_torque
        } else {
            let frac = (self.no_load_speed - s) / (self.no_load_speed - self.cutoff_speed);
            self.peak_torque * frac.clamp(0.0, 1.0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    Lateral,
    Transversal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskPreset {
    Walking,
    Jumping,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionScaling {
    pub scales: Vec<f64>,
    pub defaults: Vec<f64>,
}

impl ActionScaling {
    /// Walking uses 60° everywhere; jumping 15° lateral and 90° transversal.
    /// Defaults are 45° lateral and 0° transversal.
    pub fn preset(preset: TaskPreset, joints: &[JointKind]) -> Self {
        let scale = |k: &JointKind| match (preset, k) {
            (TaskPreset::Walking, _) => 60f64.to_radians(),
            (TaskPreset::Jumping, JointKind::Lateral) => 15f64.to_radians(),
            (TaskPreset::Jumping, JointKind::Transversal) => 90f64.to_radians(),
        };
        let default = |k: &JointKind| match k {
            JointKind::Lateral => 45f64.to_radians(),
            JointKind::Transversal => 0.0,
        };
        Self { scales: joints.iter().map(scale).collect(), defaults: joints.iter().map(default).collect() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.scales.len() != self.defaults.len() {
            return Err("scales and defaults differ in length".into());
        }
        if self.scales.iter().any(|s| !(*s > 0.0)) {
            return Err("action scales must be > 0".into());
        }
        Ok(())
    }
}

/// `target = clamp(a, -1, 1) * scale + default`, written into `out`.
/// Returns how many actions had to be clamped.
pub fn rescale_actions(actions: &[f64], scaling: &ActionScaling, out: &mut [f64]) -> usize {
    debug_assert_eq!(actions.len(), scaling.scales.len());
    let mut clamped = 0;
    for i in 0..actions.len() {
        let a = actions[i];
        let c = a.clamp(-1.0, 1.0);
        if c != a {
            clamped += 1;
        }
        out[i] = c * scaling.scales[i] + scaling.defaults[i];
    }
    clamped
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    /// Seconds.
    pub prediction_horizon: f64,
    /// Radians a target may sit past a limit when the joint is far from it.
    pub max_overshoot: f64,
    /// Bounds on the transversal sum `theta_it + theta_ot`.
    pub sum_bounds: (f64, f64),
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            prediction_horizon: 0.1,
            max_overshoot: 30f64.to_radians(),
            sum_bounds: ((-20f64).to_radians(), 150f64.to_radians()),
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.prediction_horizon > 0.0) {
            return Err("prediction_horizon must be > 0".into());
        }
        if !(self.max_overshoot >= 0.0) {
            return Err("max_overshoot must be >= 0".into());
        }
        if !(self.sum_bounds.0 < self.sum_bounds.1) {
            return Err("sum_bounds need l < u".into());
        }
        Ok(())
    }
}

/// Time until the joint reaches a limit `distance` away while closing at
/// `speed`: zero at or past the limit, `+inf` when not closing.
pub fn time_to_violation(distance: f64, speed: f64) -> f64 {
    if distance <= 0.0 {
        0.0
    } else if speed > 0.0 {
        distance.max(0.0) / speed
    } else {
        f64::INFINITY
    }
}

/// Overshoot allowance past a limit: `max_overshoot * clamp(t_v / horizon, 0, 1)`.
pub fn allowed_overshoot(distance: f64, speed: f64, params: &FilterParams) -> f64 {
    let tv = time_to_violation(distance, speed);
    params.max_overshoot * (tv / params.prediction_horizon).clamp(0.0, 1.0)
}

/// Offset of the clamp bound from a limit. Beyond the overshoot allowance,
/// a joint closing inside the horizon gets the bound pulled back by its
/// remaining travel over the horizon so the PD pull turns into braking.
fn bound_offset(distance: f64, speed: f64, params: &FilterParams) -> f64 {
    let r = (time_to_violation(distance, speed) / params.prediction_horizon).clamp(0.0, 1.0);
    params.max_overshoot * r - (1.0 - r) * speed.max(0.0) * params.prediction_horizon
}

/// Clamp interval for one joint given its limits and current motion.
pub fn joint_clamp_bounds(
    position: f64,
    velocity: f64,
    limits: (f64, f64),
    params: &FilterParams,
) -> (f64, f64) {
    let (min, max) = limits;
    let hi = max + bound_offset(max - position, velocity, params);
    let lo = min - bound_offset(position - min, -velocity, params);
    // The braking pull-back never crosses the opposite bound.
    if hi < lo {
        if velocity > 0.0 {
            (lo, lo)
        } else {
            (hi, hi)
        }
    } else {
        (lo, hi)
    }
}

/// Moves `(a, b)` along `(1, 1)` until `l <= a + b <= u` holds exactly in
/// floating point, then pushes any box violation onto the partner joint.
fn project_pair_sum(a: &mut f64, b: &mut f64, (l, u): (f64, f64), box_a: (f64, f64), box_b: (f64, f64)) {
    let s = *a + *b;
    let bound = if s > u {
        u
    } else if s < l {
        l
    } else {
        return;
    };
    *a -= 0.5 * (s - bound);
    // keep a within its box if the partner can absorb the difference
    let alt_a = a.clamp(box_a.0, box_a.1);
    let alt_b = bound - alt_a;
    if alt_b >= box_b.0 && alt_b <= box_b.1 {
        *a = alt_a;
    }
    *b = bound - *a;
    while *a + *b > u {
        *b = b.next_down();
    }
    while *a + *b < l {
        *b = b.next_up();
    }
}

/// Filters raw position targets into safe ones.
///
/// `limits[i]` are the `(min, max)` position limits of joint `i`; `pairs`
/// lists `(inner, outer)` transversal index pairs subject to the sum bound.
/// Per-joint clamping is applied first, the sum projection second.
pub fn predictive_filter(
    targets: &[f64],
    positions: &[f64],
    velocities: &[f64],
    limits: &[(f64, f64)],
    pairs: &[(usize, usize)],
    params: &FilterParams,
    out: &mut [f64],
) {
    let n = targets.len();
    debug_assert!(positions.len() == n && velocities.len() == n && limits.len() == n && out.len() == n);
    let mut boxes = [(0.0, 0.0); 16];
    let mut boxes_vec;
    let boxes: &mut [(f64, f64)] = if n <= 16 {
        &mut boxes[..n]
    } else {
        boxes_vec = vec![(0.0, 0.0); n];
        &mut boxes_vec
    };
    for i in 0..n {
        let b = joint_clamp_bounds(positions[i], velocities[i], limits[i], params);
        boxes[i] = b;
        out[i] = targets[i].clamp(b.0, b.1);
    }
    for &(a, b) in pairs {
        let (mut ta, mut tb) = (out[a], out[b]);
        project_pair_sum(&mut ta, &mut tb, params.sum_bounds, boxes[a], boxes[b]);
        out[a] = ta;
        out[b] = tb;
    }
}

/// PD law with the torque-speed envelope and viscous friction:
/// `clamp(kp (target - q) - kd qd, envelope) - friction qd`.
pub fn pd_torque(safe_target: f64, position: f64, velocity: f64, params: &ActuatorParams) -> f64 {
    let raw = params.kp * (safe_target - position) - params.kd * velocity;
    let limit = if raw * velocity > 0.0 { params.drive_envelope(velocity) } else { params.peak_torque };
    raw.clamp(-limit, limit) - params.viscous_friction * velocity
}
