//! Curriculum reinforcement learning for precise jumping of a five-bar-leg
//! quadruped, reduced to the sagittal plane.

pub mod error;
pub mod actuator;
pub mod ballistic;
pub mod kinematics;
pub mod control;
pub mod sim;
pub mod rewards;
pub mod curriculum;
pub mod observations;
pub mod ppo;
pub mod env;
pub mod config;
pub mod check;
pub mod io;
