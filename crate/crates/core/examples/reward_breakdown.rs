//! Starts a vertical episode on an ascending RSI arc, holds the default pose
//! through apex and landing, and writes the per-step reward breakdown as CSV.
//!
//! cargo run --release --example reward_breakdown > rewards.csv

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quadjump::curriculum::{CurriculumConfig, CurriculumState, RsiStage};
use quadjump::env::{JumpEnv, JumpEnvConfig};
use quadjump::ppo::env::Env;
use quadjump::rewards::{reward_breakdown_csv, JumpCommand, JumpMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = JumpEnvConfig::new(JumpMode::Vertical).evaluation();
    let mut env = JumpEnv::new(cfg, &CurriculumState::at_caps(&CurriculumConfig::default()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut obs = vec![0.0; env.obs_dim()];
    loop {
        env.reset_with(JumpCommand::vertical(0.6), RsiStage::InFlight, &mut rng, &mut obs)?;
        if env.stage() == RsiStage::InFlight && env.state().base_vel[1] > 0.5 {
            break;
        }
    }
    let mut steps = Vec::new();
    loop {
        let s = env.step(&[0.0; 4], &mut rng, &mut obs)?;
        steps.push(env.last_rewards.clone());
        if s.done {
            let ep = env.last_episode.expect("episode recorded");
            eprintln!(
                "{} steps, apex {}, termination {}, return {:.3}",
                ep.length,
                ep.h_max.map_or("-".into(), |h| format!("{h:.3} m")),
                ep.termination.unwrap_or("none"),
                ep.reward
            );
            break;
        }
    }
    print!("{}", reward_breakdown_csv(&steps));
    Ok(())
}
