//! Stacked closure + paw-position constraint and a damped least-squares
//! solver over it, scalar and batched.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;

use super::leg::*;
use crate::error::IkError;

pub const N_LEGS: usize = 2;
pub const FRONT: usize = 0;
pub const BACK: usize = 1;

/// Hip (motor-housing origin) positions in the body frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyLayout {
    pub hips: [Vec2; N_LEGS],
}

impl BodyLayout {
    /// Hips at the body ends, shifted by the CoM offset along body x.
    pub fn from_body_length(body_length: f64, com_offset_x: f64) -> Self {
        let h = 0.5 * body_length;
        Self { hips: [Vec2::new(h - com_offset_x, 0.0), Vec2::new(-h - com_offset_x, 0.0)] }
    }
}

impl Default for BodyLayout {
    fn default() -> Self {
        Self::from_body_length(0.67, 0.0)
    }
}

/// Planar robot configuration. Left/right legs are lumped into one
/// front and one back sagittal leg.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RobotConfiguration {
    pub base_x: f64,
    pub base_z: f64,
    pub base_pitch: f64,
    pub legs: [LegJointState; N_LEGS],
}

impl RobotConfiguration {
    /// Body-frame paw positions.
    pub fn paws(&self, geometry: &LegGeometry, layout: &BodyLayout) -> [Vec2; N_LEGS] {
        std::array::from_fn(|i| layout.hips[i] + forward_points(geometry, &self.legs[i]).paw)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintResidual {
    /// Per-leg closure residual, housing frame.
    pub ckc: [Vec2; N_LEGS],
    /// Per-leg paw position error, body frame.
    pub paw: [Vec2; N_LEGS],
}

impl ConstraintResidual {
    pub fn evaluate(
        geometry: &LegGeometry,
        layout: &BodyLayout,
        config: &RobotConfiguration,
        targets: &[Vec2; N_LEGS],
    ) -> Self {
        let mut ckc = [Vec2::zeros(); N_LEGS];
        let mut paw = [Vec2::zeros(); N_LEGS];
        for i in 0..N_LEGS {
            let p = forward_points(geometry, &config.legs[i]);
            ckc[i] = p.inner_ankle - p.outer_ankle;
            paw[i] = layout.hips[i] + p.paw - targets[i];
        }
        Self { ckc, paw }
    }

    pub fn leg_norm_squared(&self, leg: usize) -> f64 {
        self.ckc[leg].norm_squared() + self.paw[leg].norm_squared()
    }

    pub fn norm(&self) -> f64 {
        (0..N_LEGS).map(|i| self.leg_norm_squared(i)).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkWeights {
    pub closure: f64,
    pub paw: f64,
}

impl Default for IkWeights {
    fn default() -> Self {
        Self { closure: 1.0, paw: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkOptions {
    pub weights: IkWeights,
    /// Levenberg damping.
    pub damping: f64,
    pub max_iters: usize,
    /// Stacked residual norm, meters.
    pub tol: f64,
    /// Clearance kept from the reach annulus boundaries.
    pub workspace_margin: f64,
    pub bend: KneeBend,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            weights: IkWeights::default(),
            damping: 1e-4,
            max_iters: 100,
            tol: 1e-6,
            workspace_margin: 1e-3,
            bend: KneeBend::Outward,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IkSolution {
    pub config: RobotConfiguration,
    pub residual: f64,
    pub iterations: usize,
}

fn check_workspace(
    geometry: &LegGeometry,
    layout: &BodyLayout,
    targets: &[Vec2; N_LEGS],
    margin: f64,
) -> Result<(), IkError> {
    let hip_mid = 0.5 * (geometry.inner_hip() + geometry.outer_hip());
    for (leg, target) in targets.iter().enumerate() {
        let radius = (target - layout.hips[leg] - hip_mid).norm();
        let min = geometry.min_reach() + margin;
        let max = geometry.max_reach() - margin;
        if !(radius >= min && radius <= max) {
            return Err(IkError::OutOfWorkspace { leg, radius, min, max });
        }
    }
    Ok(())
}

/// Weighted residual and Jacobian for one leg over `[it, ot, ik, ok]`.
fn leg_system(
    geometry: &LegGeometry,
    hip: &Vec2,
    joints: &LegJointState,
    target: &Vec2,
    w: &IkWeights,
) -> (SVector<f64, 4>, SMatrix<f64, 4, 4>) {
    let p = forward_points(geometry, joints);
    let rc = (p.inner_ankle - p.outer_ankle) * w.closure;
    let rp = (hip + p.paw - target) * w.paw;
    let jc = ckc_jacobian(geometry, joints) * w.closure;
    let jp = paw_jacobian(geometry, joints) * w.paw;
    let r = SVector::<f64, 4>::new(rc.x, rc.y, rp.x, rp.y);
    let mut j = SMatrix::<f64, 4, 4>::zeros();
    for c in 0..4 {
        j[(0, c)] = jc[(0, c + 1)];
        j[(1, c)] = jc[(1, c + 1)];
        j[(2, c)] = jp[(0, c + 1)];
        j[(3, c)] = jp[(1, c + 1)];
    }
    (r, j)
}

struct LegSolve {
    joints: LegJointState,
    err_sq: f64,
    iterations: usize,
}

/// Damped least-squares iterations for one leg from `start`.
fn solve_leg(
    geometry: &LegGeometry,
    hip: &Vec2,
    start: LegJointState,
    target: &Vec2,
    opts: &IkOptions,
    tol_sq: f64,
) -> LegSolve {
    let mut joints = start;
    let (r0, _) = leg_system(geometry, hip, &joints, target, &opts.weights);
    let mut err_sq = r0.norm_squared();
    let mut iterations = 0;
    while iterations < opts.max_iters && err_sq > tol_sq {
        iterations += 1;
        let (r, j) = leg_system(geometry, hip, &joints, target, &opts.weights);
        let jt = j.transpose();
        let normal = jt * j + SMatrix::<f64, 4, 4>::identity() * opts.damping;
        let Some(step) = normal.cholesky().map(|ch| -ch.solve(&(jt * r))) else {
            break;
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let it = joints.theta_it + alpha * step[0];
            let ot = joints.theta_ot + alpha * step[1];
            if let Ok(candidate) = closed_leg(geometry, joints.theta_l, it, ot, opts.bend) {
                let (rn, _) = leg_system(geometry, hip, &candidate, target, &opts.weights);
                let e = rn.norm_squared();
                if e < err_sq {
                    joints = candidate;
                    err_sq = e;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    LegSolve { joints, err_sq, iterations }
}

/// Starting point that points a symmetric leg at `target` (housing frame).
/// Exact for coaxial hips.
pub fn symmetric_seed(geometry: &LegGeometry, theta_l: f64, target: &Vec2, bend: KneeBend) -> LegJointState {
    let hip_mid = 0.5 * (geometry.inner_hip() + geometry.outer_hip());
    let rel = target - hip_mid;
    let r = rel.norm();
    let heading = rel.x.atan2(-rel.y);
    let (lt, ls) = (geometry.thigh_length, geometry.shank_length);
    let depth = |half: f64| {
        let a = lt * half.sin();
        lt * half.cos() + (ls * ls - a * a).max(0.0).sqrt()
    };
    // depth is decreasing in the half spread on [0, pi]
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if depth(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let half = 0.5 * (lo + hi);
    let (it, ot) = (half + heading, half - heading);
    closed_leg(geometry, theta_l, it, ot, bend)
        .unwrap_or(LegJointState { theta_l, theta_it: it, theta_ot: ot, theta_ik: 0.0, theta_ok: 0.0 })
}

/// Drives the stacked constraint (closure residuals and body-frame paw
/// errors) below `opts.tol` with damped least squares, re-closing the passive
/// joints after every step. A leg that stalls from the guess is restarted
/// once from [`symmetric_seed`]. The returned configuration keeps the base
/// pose and lateral angles of `guess`.
pub fn weighted_ik(
    geometry: &LegGeometry,
    layout: &BodyLayout,
    targets: &[Vec2; N_LEGS],
    guess: &RobotConfiguration,
    opts: &IkOptions,
) -> Result<IkSolution, IkError> {
    check_workspace(geometry, layout, targets, opts.workspace_margin)?;

    let mut config = *guess;
    let residual = ConstraintResidual::evaluate(geometry, layout, &config, targets).norm();
    if residual <= opts.tol {
        return Ok(IkSolution { config, residual, iterations: 0 });
    }

    // each leg gets half of the squared budget
    let tol_sq = 0.5 * opts.tol * opts.tol;
    let mut iterations = 0;
    for leg in 0..N_LEGS {
        let hip = layout.hips[leg];
        let mut best = solve_leg(geometry, &hip, guess.legs[leg], &targets[leg], opts, tol_sq);
        if best.err_sq > tol_sq {
            let seed = symmetric_seed(geometry, guess.legs[leg].theta_l, &(targets[leg] - hip), opts.bend);
            let retry = solve_leg(geometry, &hip, seed, &targets[leg], opts, tol_sq);
            let used = best.iterations + retry.iterations;
            if retry.err_sq < best.err_sq {
                best = retry;
            }
            best.iterations = used;
        }
        config.legs[leg] = best.joints;
        iterations = iterations.max(best.iterations);
    }
    let residual = ConstraintResidual::evaluate(geometry, layout, &config, targets).norm();
    if residual <= opts.tol {
        Ok(IkSolution { config, residual, iterations })
    } else {
        Err(IkError::NoConvergence { iterations, residual, best: Box::new(config) })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IkRequest {
    pub targets: [Vec2; N_LEGS],
    pub guess: RobotConfiguration,
}

/// Element-wise [`weighted_ik`]; items fail independently and output order
/// follows input order regardless of scheduling.
pub fn batch_ik(
    geometry: &LegGeometry,
    layout: &BodyLayout,
    requests: &[IkRequest],
    opts: &IkOptions,
) -> Vec<Result<IkSolution, IkError>> {
    requests
        .par_iter()
        .map(|r| weighted_ik(geometry, layout, &r.targets, &r.guess, opts))
        .collect()
}
