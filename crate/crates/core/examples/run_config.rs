//! Loads a TOML run configuration (or the defaults), applies it and prints
//! the resolved values a training run would use.
//!
//! cargo run --release --example run_config -- my_run.toml

use quadjump::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => RunConfig::load(std::path::Path::new(&path))?,
        None => {
            let text = r#"
task = "horizontal"
seed = 7

[ppo]
num_envs = 64

[curriculum]
forward_caps = [0.3, 0.8]
"#;
            RunConfig::from_toml(text)?
        }
    };
    cfg.validate()?;
    let env = cfg.env_config();
    let ppo = cfg.train_settings().ppo;
    println!("task {:?}, seed {}, {} envs, {} updates max", cfg.task, cfg.seed, ppo.num_envs, ppo.max_updates);
    println!("forward caps {:?}, vertical caps {:?}", env.curriculum.forward_caps, env.curriculum.vertical_caps);
    println!("physics dt {} s, policy {} Hz", env.rates.physics_dt, env.rates.policy_hz);
    println!("\nfull configuration:\n{}", cfg.to_toml());
    Ok(())
}
