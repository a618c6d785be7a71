//! Run configuration: one TOML file, angles in degrees, lengths in meters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuator::{ActuatorParams, FilterParams};
use crate::control::Rates;
use crate::curriculum::CurriculumConfig;
use crate::env::JumpEnvConfig;
use crate::error::ConfigError;
use crate::kinematics::{KneeBend, LegGeometry};
use crate::observations::{ObservationNoise, RandomizationProfile, RandomizationRanges};
use crate::ppo::algo::PpoConfig;
use crate::ppo::train::{EvalSettings, TrainSettings};
use crate::rewards::{JumpMode, RewardConfig, RewardWeights, Sigmas, TerminationConfig};
use crate::sim::{BodyParams, ContactParams, SimParams, StopParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub thigh_length: f64,
    pub shank_length: f64,
    pub hip_axis_offset: f64,
    pub paw_extension: f64,
    /// `[min, max]` per joint, degrees.
    pub lateral_limits_deg: [f64; 2],
    pub inner_limits_deg: [f64; 2],
    pub outer_limits_deg: [f64; 2],
    /// `[l, u]` on `theta_it + theta_ot`, degrees.
    pub sum_bounds_deg: [f64; 2],
    /// "outward" or "inward".
    pub knee_bend: KneeBendName,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KneeBendName {
    #[default]
    Outward,
    Inward,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self::from_params(&LegGeometry::default(), KneeBend::default())
    }
}

impl GeometryConfig {
    pub fn from_params(g: &LegGeometry, bend: KneeBend) -> Self {
        let d = |i: usize| [deg(g.joint_limits_min[i]), deg(g.joint_limits_max[i])];
        Self {
            thigh_length: g.thigh_length,
            shank_length: g.shank_length,
            hip_axis_offset: g.hip_axis_offset,
            paw_extension: g.paw_extension,
            lateral_limits_deg: d(0),
            inner_limits_deg: d(1),
            outer_limits_deg: d(2),
            sum_bounds_deg: [deg(g.transversal_sum_bounds.0), deg(g.transversal_sum_bounds.1)],
            knee_bend: match bend {
                KneeBend::Outward => KneeBendName::Outward,
                KneeBend::Inward => KneeBendName::Inward,
            },
        }
    }

    pub fn params(&self) -> (LegGeometry, KneeBend) {
        let r = |v: [f64; 2]| (v[0].to_radians(), v[1].to_radians());
        let (l, i, o) = (r(self.lateral_limits_deg), r(self.inner_limits_deg), r(self.outer_limits_deg));
        let g = LegGeometry {
            thigh_length: self.thigh_length,
            shank_length: self.shank_length,
            hip_axis_offset: self.hip_axis_offset,
            paw_extension: self.paw_extension,
            joint_limits_min: [l.0, i.0, o.0],
            joint_limits_max: [l.1, i.1, o.1],
            transversal_sum_bounds: r(self.sum_bounds_deg),
        };
        let bend = match self.knee_bend {
            KneeBendName::Outward => KneeBend::Outward,
            KneeBendName::Inward => KneeBend::Inward,
        };
        (g, bend)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodyConfig {
    /// kg
    pub mass: f64,
    /// kg·m²
    pub pitch_inertia: f64,
    pub body_length: f64,
    pub nominal_height: f64,
    /// m/s²
    pub gravity: f64,
    pub com_offset_x: f64,
    pub ground_height: f64,
}

impl Default for BodyConfig {
    fn default() -> Self {
        let b = BodyParams::default();
        Self {
            mass: b.mass,
            pitch_inertia: b.pitch_inertia,
            body_length: b.body_length,
            nominal_height: b.nominal_height,
            gravity: b.gravity,
            com_offset_x: b.com_offset_x,
            ground_height: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
    pub static_friction: f64,
    pub dynamic_friction: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        let c = ContactParams::default();
        Self {
            stiffness: c.stiffness,
            damping: c.damping,
            static_friction: c.static_friction,
            dynamic_friction: c.dynamic_friction,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorConfig {
    /// N·m/rad
    pub kp: f64,
    /// N·m·s/rad
    pub kd: f64,
    /// N·m
    pub peak_torque: f64,
    /// rad/s
    pub no_load_speed: f64,
    /// rad/s
    pub cutoff_speed: f64,
    /// N·m·s/rad
    pub viscous_friction: f64,
    /// kg·m²
    pub armature: f64,
    /// Mechanical stops past each limit.
    pub stop_margin_deg: f64,
    /// N·m/rad
    pub stop_stiffness: f64,
    /// N·m·s/rad
    pub stop_damping: f64,
}

impl Default for ActuatorConfig {
    fn default() -> Self {
        let a = ActuatorParams::default();
        let s = StopParams::default();
        Self {
            kp: a.kp,
            kd: a.kd,
            peak_torque: a.peak_torque,
            no_load_speed: a.no_load_speed,
            cutoff_speed: a.cutoff_speed,
            viscous_friction: a.viscous_friction,
            armature: a.armature,
            stop_margin_deg: deg(s.margin),
            stop_stiffness: s.stiffness,
            stop_damping: s.damping,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    /// s
    pub physics_dt: f64,
    /// Physics steps per PD update.
    pub pd_decimation: u32,
    pub policy_hz: f64,
    /// Filter look-ahead, s.
    pub prediction_horizon: f64,
    pub max_overshoot_deg: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        let r = Rates::default();
        let f = FilterParams::default();
        Self {
            physics_dt: r.physics_dt,
            pd_decimation: r.pd_decimation,
            policy_hz: r.policy_hz,
            prediction_horizon: f.prediction_horizon,
            max_overshoot_deg: deg(f.max_overshoot),
        }
    }
}

/// Reward settings with joint targets in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardsConfig {
    /// All eighteen widths are required when the table is present.
    pub sigma: Sigmas,
    pub weights: RewardWeights,
    /// m/s²
    pub a_max: f64,
    /// s
    pub landing_window: f64,
    pub flight_joint_targets_deg: Vec<f64>,
    pub landed_joint_targets_deg: Vec<f64>,
    pub walk_stand_transversal_deg: Vec<f64>,
    pub walk_move_transversal_deg: Vec<f64>,
    pub walk_lateral_deg: Vec<f64>,
    /// m/s
    pub walk_stand_speed: f64,
}

/// Degrees rounded to 1e-9 so defaults written from radians read cleanly.
fn deg(rad: f64) -> f64 {
    (rad.to_degrees() * 1e9).round() / 1e9
}

fn degs(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| deg(*x)).collect()
}

fn rads(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.to_radians()).collect()
}

impl Default for RewardsConfig {
    fn default() -> Self {
        let r = RewardConfig::default();
        Self {
            sigma: r.sigma,
            weights: r.weights,
            a_max: r.a_max,
            landing_window: r.landing_window,
            flight_joint_targets_deg: degs(&r.flight_joint_targets),
            landed_joint_targets_deg: degs(&r.landed_joint_targets),
            walk_stand_transversal_deg: degs(&r.walk_stand_transversal),
            walk_move_transversal_deg: degs(&r.walk_move_transversal),
            walk_lateral_deg: degs(&r.walk_lateral),
            walk_stand_speed: r.walk_stand_speed,
        }
    }
}

impl RewardsConfig {
    pub fn params(&self) -> RewardConfig {
        RewardConfig {
            sigma: self.sigma,
            weights: self.weights,
            a_max: self.a_max,
            landing_window: self.landing_window,
            flight_joint_targets: rads(&self.flight_joint_targets_deg),
            landed_joint_targets: rads(&self.landed_joint_targets_deg),
            walk_stand_transversal: rads(&self.walk_stand_transversal_deg),
            walk_move_transversal: rads(&self.walk_move_transversal_deg),
            walk_lateral: rads(&self.walk_lateral_deg),
            walk_stand_speed: self.walk_stand_speed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    /// Seconds simulated after touchdown.
    pub landed_duration: f64,
    /// s
    pub max_episode_time: f64,
    /// Landing x is read this long after touchdown, s.
    pub settle_window: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { landed_duration: 0.5, max_episode_time: 4.0, settle_window: 0.3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationConfig {
    pub profile: RandomizationProfile,
    /// Explicit ranges; replace the profile when given.
    pub ranges: Option<RandomizationRanges>,
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        Self { profile: RandomizationProfile::Jumping, ranges: None }
    }
}

impl RandomizationConfig {
    pub fn ranges(&self) -> RandomizationRanges {
        self.ranges.unwrap_or_else(|| RandomizationRanges::profile(self.profile))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// "vertical" or "horizontal".
    pub task: JumpMode,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Single-threaded environment stepping.
    pub deterministic: bool,
    pub geometry: GeometryConfig,
    pub body: BodyConfig,
    pub contact: ContactConfig,
    pub actuator: ActuatorConfig,
    pub control: ControlConfig,
    pub rewards: RewardsConfig,
    pub termination: TerminationConfig,
    pub curriculum: CurriculumConfig,
    pub noise: ObservationNoise,
    pub randomization: RandomizationConfig,
    pub episode: EpisodeConfig,
    pub ppo: PpoConfig,
    pub eval: EvalSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: JumpMode::Vertical,
            seed: 0,
            output_dir: PathBuf::from("runs/default"),
            deterministic: false,
            geometry: GeometryConfig::default(),
            body: BodyConfig::default(),
            contact: ContactConfig::default(),
            actuator: ActuatorConfig::default(),
            control: ControlConfig::default(),
            rewards: RewardsConfig::default(),
            termination: TerminationConfig::default(),
            curriculum: CurriculumConfig::default(),
            noise: ObservationNoise::default(),
            randomization: RandomizationConfig::default(),
            episode: EpisodeConfig::default(),
            ppo: PpoConfig::default(),
            eval: EvalSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    pub fn sim_params(&self) -> SimParams {
        let (geometry, bend) = self.geometry.params();
        let b = &self.body;
        let a = &self.actuator;
        SimParams {
            geometry,
            body: BodyParams {
                mass: b.mass,
                pitch_inertia: b.pitch_inertia,
                body_length: b.body_length,
                nominal_height: b.nominal_height,
                gravity: b.gravity,
                com_offset_x: b.com_offset_x,
            },
            contact: ContactParams {
                stiffness: self.contact.stiffness,
                damping: self.contact.damping,
                static_friction: self.contact.static_friction,
                dynamic_friction: self.contact.dynamic_friction,
            },
            actuator: ActuatorParams {
                kp: a.kp,
                kd: a.kd,
                peak_torque: a.peak_torque,
                no_load_speed: a.no_load_speed,
                cutoff_speed: a.cutoff_speed,
                viscous_friction: a.viscous_friction,
                armature: a.armature,
            },
            stops: StopParams { margin: a.stop_margin_deg.to_radians(), stiffness: a.stop_stiffness, damping: a.stop_damping },
            bend,
            ground_height: b.ground_height,
            external_force: [0.0; 2],
            external_torque: 0.0,
        }
    }

    pub fn rates(&self) -> Rates {
        Rates { physics_dt: self.control.physics_dt, pd_decimation: self.control.pd_decimation, policy_hz: self.control.policy_hz }
    }

    pub fn filter(&self) -> FilterParams {
        let (g, _) = self.geometry.params();
        FilterParams {
            prediction_horizon: self.control.prediction_horizon,
            max_overshoot: self.control.max_overshoot_deg.to_radians(),
            sum_bounds: g.transversal_sum_bounds,
        }
    }

    pub fn env_config(&self) -> JumpEnvConfig {
        JumpEnvConfig {
            mode: self.task,
            sim: self.sim_params(),
            rates: self.rates(),
            filter: self.filter(),
            rewards: self.rewards.params(),
            termination: self.termination,
            curriculum: self.curriculum.clone(),
            noise: self.noise,
            randomization: self.randomization.ranges(),
            landed_duration: self.episode.landed_duration,
            max_episode_time: self.episode.max_episode_time,
            settle_window: self.episode.settle_window,
        }
    }

    pub fn train_settings(&self) -> TrainSettings {
        TrainSettings {
            env: self.env_config(),
            ppo: PpoConfig { seed: self.seed, ..self.ppo.clone() },
            eval: self.eval.clone(),
            parallel: !self.deterministic,
        }
    }

    /// Checks every section; the error names the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let (g, _) = self.geometry.params();
        g.validate().map_err(|e| ConfigError::invalid("geometry", e.to_string()))?;
        let sim = self.sim_params();
        sim.body.validate().map_err(|e| ConfigError::invalid("body", e.to_string()))?;
        sim.contact.validate().map_err(|e| ConfigError::invalid("contact", e.to_string()))?;
        sim.actuator.validate().map_err(|e| ConfigError::invalid("actuator", e))?;
        if !(self.actuator.stop_margin_deg >= 0.0 && self.actuator.stop_stiffness > 0.0 && self.actuator.stop_damping >= 0.0) {
            return Err(ConfigError::invalid("actuator.stop_stiffness", "stops need margin >= 0, stiffness > 0, damping >= 0"));
        }
        self.rates().validate().map_err(|e| ConfigError::invalid("control", e))?;
        self.filter().validate().map_err(|e| ConfigError::invalid("control", e))?;
        let r = self.rewards.params();
        r.validate().map_err(|(f, e)| ConfigError::invalid(f, e))?;
        for (name, v) in [
            ("rewards.flight_joint_targets_deg", &self.rewards.flight_joint_targets_deg),
            ("rewards.landed_joint_targets_deg", &self.rewards.landed_joint_targets_deg),
        ] {
            if v.len() != crate::sim::N_ACT {
                return Err(ConfigError::invalid(name, format!("need {} values, got {}", crate::sim::N_ACT, v.len())));
            }
        }
        let t = &self.termination;
        if !(t.no_jump_timeout > 0.0 && t.min_base_height >= 0.0 && t.max_landing_decel > 0.0) {
            return Err(ConfigError::invalid("termination", "thresholds must be positive"));
        }
        self.curriculum.validate().map_err(|(f, e)| ConfigError::invalid(f, e))?;
        for (name, v) in [
            ("noise.lin_vel", self.noise.lin_vel),
            ("noise.ang_vel", self.noise.ang_vel),
            ("noise.gravity", self.noise.gravity),
            ("noise.joint_pos_deg", self.noise.joint_pos_deg),
            ("noise.joint_vel_deg", self.noise.joint_vel_deg),
        ] {
            if !(v >= 0.0) {
                return Err(ConfigError::invalid(name, "must be >= 0"));
            }
        }
        self.randomization.ranges().validate().map_err(|(f, e)| ConfigError::invalid(f, e))?;
        let e = &self.episode;
        if !(e.landed_duration > 0.0 && e.max_episode_time > e.landed_duration && e.settle_window >= 0.0) {
            return Err(ConfigError::invalid("episode", "need landed_duration > 0 and max_episode_time > landed_duration"));
        }
        self.ppo.validate().map_err(|(f, e)| ConfigError::invalid(f, e))?;
        if self.eval.grid_points == 0 || self.eval.episodes_per_command == 0 {
            return Err(ConfigError::invalid("eval.grid_points", "must be >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let c = RunConfig::from_toml("task = \"horizontal\"\nseed = 7\n").unwrap();
        assert_eq!(c.task, JumpMode::Horizontal);
        assert_eq!(c.seed, 7);
        assert_eq!(c.ppo, PpoConfig::default());
    }

    #[test]
    fn degrees_in_file_radians_inside() {
        let c = RunConfig::from_toml("[geometry]\nsum_bounds_deg = [-10.0, 140.0]\n").unwrap();
        let g = c.sim_params().geometry;
        assert!((g.transversal_sum_bounds.0 - (-10f64).to_radians()).abs() < 1e-15);
        assert!((c.filter().sum_bounds.1 - 140f64.to_radians()).abs() < 1e-15);
        let r = c.env_config().rewards;
        assert!((r.flight_joint_targets[0] - 50f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn missing_sigma_names_the_field() {
        let mut text = String::from("[rewards.sigma]\n");
        for (i, s) in Sigmas::default().as_array().iter().enumerate() {
            if i != 5 {
                text.push_str(&format!("sigma_{} = {}\n", i + 1, s));
            }
        }
        let err = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("sigma_6"), "{err}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = RunConfig::from_toml("[geometry]\nshank_length = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("geometry"), "{err}");
        let err = RunConfig::from_toml("[ppo]\ngamma = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("ppo.gamma"), "{err}");
        let err = RunConfig::from_toml("[rewards.sigma]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
    }
}
