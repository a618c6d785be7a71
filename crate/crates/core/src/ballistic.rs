//! Single-rigid-body projectile predictions of apex height and landing point.

use crate::error::BallisticError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallisticState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub gravity: f64,
}

impl BallisticState {
    pub fn new(x: f64, z: f64, vx: f64, vz: f64, gravity: f64) -> Self {
        debug_assert!(gravity > 0.0);
        Self { position: [x, z], velocity: [vx, vz], gravity }
    }

    /// Exact contact-free state after `t` seconds.
    pub fn advance(&self, t: f64) -> Self {
        let [x, z] = self.position;
        let [vx, vz] = self.velocity;
        Self {
            position: [x + vx * t, z + vz * t - 0.5 * self.gravity * t * t],
            velocity: [vx, vz - self.gravity * t],
            gravity: self.gravity,
        }
    }
}

/// `z + max(0, v_z)^2 / 2g`.
pub fn estimate_apex(b: &BallisticState) -> f64 {
    let vz = b.velocity[1].max(0.0);
    b.position[1] + vz * vz / (2.0 * b.gravity)
}

/// Landing point and time for the descending crossing of `landing_height`.
/// A body already below the landing height lands immediately.
pub fn estimate_landing(b: &BallisticState, landing_height: f64) -> Result<(f64, f64), BallisticError> {
    let [x, z] = b.position;
    let [vx, vz] = b.velocity;
    let g = b.gravity;
    let disc = vz * vz + 2.0 * g * (z - landing_height);
    if disc < 0.0 {
        return Err(BallisticError::NeverReaches { apex: estimate_apex(b), landing_height });
    }
    let t = ((vz + disc.sqrt()) / g).max(0.0);
    Ok((x + vx * t, t))
}
