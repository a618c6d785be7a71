use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("shank circles do not intersect: knee separation {knee_separation:.6} m exceeds {limit:.6} m")]
    Unreachable { knee_separation: f64, limit: f64 },
    #[error("non-finite joint angle")]
    NonFinite,
    #[error("invalid geometry field `{field}`: {reason}")]
    InvalidGeometry { field: &'static str, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IkError {
    #[error("leg {leg} target at {radius:.4} m is outside the reachable annulus [{min:.4}, {max:.4}] m")]
    OutOfWorkspace { leg: usize, radius: f64, min: f64, max: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e} m)")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Box<crate::kinematics::RobotConfiguration>,
    },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("numerical blow-up at t = {time:.4} s: {what}")]
    NumericalBlowup { time: f64, what: String },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("the robot never left stance")]
    NoJump,
    #[error("empty episode history")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BallisticError {
    #[error("arc apex {apex:.4} m never reaches landing height {landing_height:.4} m")]
    NeverReaches { apex: f64, landing_height: f64 },
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged at update {update}: {what}")]
    Divergence { update: usize, what: String },
    #[error("simulation failed in env {env}: {source}")]
    Sim {
        env: usize,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot read checkpoint {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint layout mismatch: {0}")]
    Mismatch(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), reason: reason.into() }
    }
}
