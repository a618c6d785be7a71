//! Planar five-bar leg: forward points, closure residual and its Jacobian,
//! and analytic passive-joint closure.
//!
//! Frame conventions (motor-housing frame `M`, x forward, z up):
//! * both transversal thighs hang straight down at angle zero;
//! * the inner thigh rotates towards `+x` for positive `theta_it`, the outer
//!   thigh towards `-x` for positive `theta_ot`, so `theta_it + theta_ot` is
//!   the spread between the thighs and equal angles are mirror-symmetric;
//! * knee angles are measured relative to their thigh, positive values bend
//!   the shank back towards the symmetry axis.

use nalgebra::{Matrix2, SMatrix, Vector2};

use crate::error::KinematicsError;

pub type Vec2 = Vector2<f64>;

/// Column layout of all per-leg Jacobians.
pub const COL_LATERAL: usize = 0;
pub const COL_INNER_THIGH: usize = 1;
pub const COL_OUTER_THIGH: usize = 2;
pub const COL_INNER_KNEE: usize = 3;
pub const COL_OUTER_KNEE: usize = 4;
pub const LEG_JOINTS: usize = 5;

/// Index of each actuated joint inside the per-leg limit arrays.
pub const ACT_LATERAL: usize = 0;
pub const ACT_INNER: usize = 1;
pub const ACT_OUTER: usize = 2;

pub type LegJacobian = SMatrix<f64, 2, LEG_JOINTS>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegGeometry {
    pub thigh_length: f64,
    pub shank_length: f64,
    /// Separation between the inner and outer transversal motor axes along body x.
    pub hip_axis_offset: f64,
    /// Paw distance beyond the ankle along the outer shank.
    pub paw_extension: f64,
    /// Per actuated joint, ordered `[lateral, inner, outer]`.
    pub joint_limits_min: [f64; 3],
    pub joint_limits_max: [f64; 3],
    /// Bounds on `theta_it + theta_ot`.
    pub transversal_sum_bounds: (f64, f64),
}

impl Default for LegGeometry {
    fn default() -> Self {
        Self {
            thigh_length: 0.175,
            shank_length: 0.3,
            hip_axis_offset: 0.0,
            paw_extension: 0.0,
            joint_limits_min: [0.0, (-60.0f64).to_radians(), (-60.0f64).to_radians()],
            joint_limits_max: [
                90.0f64.to_radians(),
                135.0f64.to_radians(),
                135.0f64.to_radians(),
            ],
            transversal_sum_bounds: ((-20.0f64).to_radians(), 150.0f64.to_radians()),
        }
    }
}

impl LegGeometry {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |field: &'static str, reason: String| KinematicsError::InvalidGeometry { field, reason };
        if !(self.thigh_length > 0.0) {
            return Err(bad("thigh_length", format!("must be > 0, got {}", self.thigh_length)));
        }
        if !(self.shank_length > 0.0) {
            return Err(bad("shank_length", format!("must be > 0, got {}", self.shank_length)));
        }
        if !(self.hip_axis_offset >= 0.0) {
            return Err(bad("hip_axis_offset", "must be >= 0".into()));
        }
        if !(self.paw_extension >= 0.0) {
            return Err(bad("paw_extension", "must be >= 0".into()));
        }
        for j in 0..3 {
            if !(self.joint_limits_min[j] < self.joint_limits_max[j]) {
                return Err(bad("joint_limits", format!("min must be < max for joint {j}")));
            }
        }
        let (l, u) = self.transversal_sum_bounds;
        if !(l < u) {
            return Err(bad("transversal_sum_bounds", format!("need l < u, got ({l}, {u})")));
        }
        Ok(())
    }

    pub fn max_reach(&self) -> f64 {
        self.thigh_length + self.shank_length
    }

    pub fn min_reach(&self) -> f64 {
        (self.thigh_length - self.shank_length).abs()
    }

    pub fn inner_hip(&self) -> Vec2 {
        Vec2::new(0.5 * self.hip_axis_offset, 0.0)
    }

    pub fn outer_hip(&self) -> Vec2 {
        Vec2::new(-0.5 * self.hip_axis_offset, 0.0)
    }

    pub fn inner_knee(&self, theta_it: f64) -> Vec2 {
        self.inner_hip() + self.thigh_length * Vec2::new(theta_it.sin(), -theta_it.cos())
    }

    pub fn outer_knee(&self, theta_ot: f64) -> Vec2 {
        self.outer_hip() + self.thigh_length * Vec2::new(-theta_ot.sin(), -theta_ot.cos())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LegJointState {
    pub theta_l: f64,
    pub theta_it: f64,
    pub theta_ot: f64,
    pub theta_ik: f64,
    pub theta_ok: f64,
}

impl LegJointState {
    pub fn is_finite(&self) -> bool {
        [self.theta_l, self.theta_it, self.theta_ot, self.theta_ik, self.theta_ok]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn as_array(&self) -> [f64; LEG_JOINTS] {
        [self.theta_l, self.theta_it, self.theta_ot, self.theta_ik, self.theta_ok]
    }

    pub fn from_array(q: [f64; LEG_JOINTS]) -> Self {
        Self { theta_l: q[0], theta_it: q[1], theta_ot: q[2], theta_ik: q[3], theta_ok: q[4] }
    }
}

/// Which of the two circle intersections closes the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KneeBend {
    /// Knees point away from the leg axis; ankle on the far side of the knee line (diamond).
    #[default]
    Outward,
    /// Inverted linkage; ankle between the knee line and the hips.
    Inward,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegPoints {
    pub inner_ankle: Vec2,
    pub outer_ankle: Vec2,
    pub paw: Vec2,
}

#[inline]
fn inner_shank_angle(j: &LegJointState) -> f64 {
    j.theta_it - j.theta_ik
}

#[inline]
fn outer_shank_angle(j: &LegJointState) -> f64 {
    j.theta_ot - j.theta_ok
}

pub fn forward_points(geometry: &LegGeometry, joints: &LegJointState) -> LegPoints {
    debug_assert!(joints.is_finite(), "non-finite joint angles");
    let phi_i = inner_shank_angle(joints);
    let phi_o = outer_shank_angle(joints);
    let inner_ankle =
        geometry.inner_knee(joints.theta_it) + geometry.shank_length * Vec2::new(phi_i.sin(), -phi_i.cos());
    let outer_dir = Vec2::new(-phi_o.sin(), -phi_o.cos());
    let outer_ankle = geometry.outer_knee(joints.theta_ot) + geometry.shank_length * outer_dir;
    let paw = outer_ankle + geometry.paw_extension * outer_dir;
    LegPoints { inner_ankle, outer_ankle, paw }
}

/// `p_ia - p_oa` in the motor-housing frame (the out-of-plane row vanishes identically).
pub fn ckc_residual(geometry: &LegGeometry, joints: &LegJointState) -> Vec2 {
    let p = forward_points(geometry, joints);
    p.inner_ankle - p.outer_ankle
}

/// Derivative of the inner ankle with respect to the leg joints.
fn inner_ankle_jacobian(geometry: &LegGeometry, j: &LegJointState) -> LegJacobian {
    let phi_i = inner_shank_angle(j);
    let lt = geometry.thigh_length;
    let ls = geometry.shank_length;
    let mut jac = LegJacobian::zeros();
    jac[(0, COL_INNER_THIGH)] = lt * j.theta_it.cos() + ls * phi_i.cos();
    jac[(1, COL_INNER_THIGH)] = lt * j.theta_it.sin() + ls * phi_i.sin();
    jac[(0, COL_INNER_KNEE)] = -ls * phi_i.cos();
    jac[(1, COL_INNER_KNEE)] = -ls * phi_i.sin();
    jac
}

/// Derivative of a point at distance `along` from the outer knee on the outer shank.
fn outer_point_jacobian(geometry: &LegGeometry, j: &LegJointState, along: f64) -> LegJacobian {
    let phi_o = outer_shank_angle(j);
    let lt = geometry.thigh_length;
    let mut jac = LegJacobian::zeros();
    jac[(0, COL_OUTER_THIGH)] = -lt * j.theta_ot.cos() - along * phi_o.cos();
    jac[(1, COL_OUTER_THIGH)] = lt * j.theta_ot.sin() + along * phi_o.sin();
    jac[(0, COL_OUTER_KNEE)] = along * phi_o.cos();
    jac[(1, COL_OUTER_KNEE)] = -along * phi_o.sin();
    jac
}

/// Partial derivatives of [`ckc_residual`] with respect to
/// `[theta_l, theta_it, theta_ot, theta_ik, theta_ok]`. The lateral column is
/// zero since that joint moves the leg out of the sagittal plane.
pub fn ckc_jacobian(geometry: &LegGeometry, joints: &LegJointState) -> LegJacobian {
    inner_ankle_jacobian(geometry, joints) - outer_point_jacobian(geometry, joints, geometry.shank_length)
}

/// Open-chain paw Jacobian in the housing frame, same column layout as [`ckc_jacobian`].
pub fn paw_jacobian(geometry: &LegGeometry, joints: &LegJointState) -> LegJacobian {
    outer_point_jacobian(geometry, joints, geometry.shank_length + geometry.paw_extension)
}

/// Paw Jacobian with respect to the two transversal motors, passive joints
/// eliminated through the closure constraint. Near the straight-leg
/// singularity the passive block is regularized with a small Tikhonov term.
pub fn closed_paw_jacobian(geometry: &LegGeometry, joints: &LegJointState) -> Matrix2<f64> {
    let c = ckc_jacobian(geometry, joints);
    let p = paw_jacobian(geometry, joints);
    let c_act = Matrix2::new(
        c[(0, COL_INNER_THIGH)],
        c[(0, COL_OUTER_THIGH)],
        c[(1, COL_INNER_THIGH)],
        c[(1, COL_OUTER_THIGH)],
    );
    let c_pas = Matrix2::new(
        c[(0, COL_INNER_KNEE)],
        c[(0, COL_OUTER_KNEE)],
        c[(1, COL_INNER_KNEE)],
        c[(1, COL_OUTER_KNEE)],
    );
    let p_act = Matrix2::new(
        p[(0, COL_INNER_THIGH)],
        p[(0, COL_OUTER_THIGH)],
        p[(1, COL_INNER_THIGH)],
        p[(1, COL_OUTER_THIGH)],
    );
    let p_pas = Matrix2::new(
        p[(0, COL_INNER_KNEE)],
        p[(0, COL_OUTER_KNEE)],
        p[(1, COL_INNER_KNEE)],
        p[(1, COL_OUTER_KNEE)],
    );
    // d(passive)/d(actuated) = -C_pas^-1 C_act
    let scale = geometry.shank_length * geometry.shank_length;
    let dpas = match c_pas.try_inverse() {
        Some(inv) if c_pas.determinant().abs() > 1e-6 * scale => -inv * c_act,
        _ => {
            let reg = c_pas.transpose() * c_pas + Matrix2::identity() * (1e-6 * scale);
            -(reg.try_inverse().unwrap_or_else(Matrix2::zeros) * c_pas.transpose() * c_act)
        }
    };
    p_act + p_pas * dpas
}

#[inline]
fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a % two_pi;
    if w > std::f64::consts::PI {
        w -= two_pi;
    } else if w <= -std::f64::consts::PI {
        w += two_pi;
    }
    w
}

/// Closes the chain for given thigh angles by intersecting the two shank
/// circles centred at the knees. Returns `(theta_ik, theta_ok)`.
pub fn solve_passive_joints(
    geometry: &LegGeometry,
    theta_it: f64,
    theta_ot: f64,
    bend: KneeBend,
) -> Result<(f64, f64), KinematicsError> {
    if !(theta_it.is_finite() && theta_ot.is_finite()) {
        return Err(KinematicsError::NonFinite);
    }
    let ls = geometry.shank_length;
    let ki = geometry.inner_knee(theta_it);
    let ko = geometry.outer_knee(theta_ot);
    let hip_mid = 0.5 * (geometry.inner_hip() + geometry.outer_hip());
    let delta = ki - ko;
    let d = delta.norm();
    if d > 2.0 * ls {
        return Err(KinematicsError::Unreachable { knee_separation: d, limit: 2.0 * ls });
    }
    let mid = 0.5 * (ki + ko);
    let ankle = if d < 1e-12 {
        // Coincident knees: straight continuation of the thighs.
        let axis = mid - hip_mid;
        let dir = if axis.norm() > 1e-12 { axis.normalize() } else { Vec2::new(0.0, -1.0) };
        match bend {
            KneeBend::Outward => mid + ls * dir,
            KneeBend::Inward => mid - ls * dir,
        }
    } else {
        let h = (ls * ls - 0.25 * d * d).max(0.0).sqrt();
        let n = Vec2::new(-delta.y, delta.x) / d;
        let to_hip = n.dot(&(hip_mid - mid));
        let away = if to_hip > 0.0 {
            -n
        } else if to_hip < 0.0 {
            n
        } else if (mid + h * n - hip_mid).norm() >= (mid - h * n - hip_mid).norm() {
            n
        } else {
            -n
        };
        match bend {
            KneeBend::Outward => mid + h * away,
            KneeBend::Inward => mid - h * away,
        }
    };
    let ai = ankle - ki;
    let ao = ankle - ko;
    let phi_i = ai.x.atan2(-ai.y);
    let phi_o = (-ao.x).atan2(-ao.y);
    Ok((wrap_angle(theta_it - phi_i), wrap_angle(theta_ot - phi_o)))
}

/// Builds a closed leg state from the actuated angles.
pub fn closed_leg(
    geometry: &LegGeometry,
    theta_l: f64,
    theta_it: f64,
    theta_ot: f64,
    bend: KneeBend,
) -> Result<LegJointState, KinematicsError> {
    let (theta_ik, theta_ok) = solve_passive_joints(geometry, theta_it, theta_ot, bend)?;
    Ok(LegJointState { theta_l, theta_it, theta_ot, theta_ik, theta_ok })
}
