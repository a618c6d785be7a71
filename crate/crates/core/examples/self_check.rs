//! Runs the oracle self-checks on the default robot.
//!
//! cargo run --release --example self_check -- full

use quadjump::check::{run_checks, CheckSizes};
use quadjump::config::RunConfig;

fn main() {
    let full = std::env::args().nth(1).is_some_and(|a| a == "full");
    let cfg = RunConfig::default();
    let sizes = if full { CheckSizes::full() } else { CheckSizes::quick() };
    let results = run_checks(&cfg.sim_params(), &cfg.filter(), &sizes, cfg.seed);
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
