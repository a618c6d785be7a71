//! Five-bar leg kinematics and the weighted IK scheme built on it.

mod ik;
mod leg;

pub use ik::*;
pub use leg::*;
