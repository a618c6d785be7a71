//! Evaluates a saved checkpoint on a grid of targets with mean actions and
//! writes the per-jump CSV.
//!
//! cargo run --release --example evaluate_policy -- runs/default/checkpoint.json 0.3 0.7

use std::path::Path;

use quadjump::env::JumpEnvConfig;
use quadjump::ppo::checkpoint::Checkpoint;
use quadjump::ppo::train::{command_grid, evaluate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().ok_or("usage: evaluate_policy <checkpoint.json> [lo hi]")?;
    let ck = Checkpoint::load(Path::new(path))?;
    let agent = ck.agent()?;
    let cfg = JumpEnvConfig::new(ck.mode).evaluation();
    let lo = args.get(1).map_or(Ok(0.3), |s| s.parse())?;
    let hi = args.get(2).map_or(Ok(0.7), |s| s.parse())?;
    let grid = command_grid(ck.mode, (lo, hi), 9);
    let report = evaluate(&agent, &cfg, &grid, 8, 1, true)?;
    println!("target  success  mean achieved");
    for (t, ok, got) in report.per_target() {
        println!("{t:6.3}  {ok:7.3}  {}", got.map_or("-".into(), |g| format!("{g:.4}")));
    }
    println!(
        "{} jumps, success {:.3}, mean |error| {:.4} m",
        report.rows.len(),
        report.success_rate,
        report.mean_abs_error
    );
    std::fs::write("eval.csv", report.csv())?;
    println!("wrote eval.csv");
    Ok(())
}
