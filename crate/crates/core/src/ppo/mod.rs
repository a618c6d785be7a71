//! Proximal policy optimization for the jumping tasks.

pub mod algo;
pub mod gae;
pub mod nn;
pub mod policy;
pub mod env;
pub mod rollout;
pub mod toy;
pub mod checkpoint;
pub mod train;
