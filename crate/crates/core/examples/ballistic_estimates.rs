//! Apex and landing estimates along a free-flight arc stay constant, which
//! is what makes them usable as dense in-flight rewards.
//!
//! cargo run --release --example ballistic_estimates -- 1.2 2.6

use quadjump::ballistic::{estimate_apex, estimate_landing, BallisticState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let vx = args.first().copied().unwrap_or(1.2);
    let vz = args.get(1).copied().unwrap_or(2.6);
    let landing_height = 0.3;
    let takeoff = BallisticState::new(0.0, 0.35, vx, vz, 9.81);
    println!("  t s      x m      z m    apex m   landing x m");
    for k in 0..=10 {
        let s = takeoff.advance(0.05 * k as f64);
        // the apex estimate only holds on the way up
        let apex = if s.velocity[1] > 0.0 { format!("{:.4}", estimate_apex(&s)) } else { "-".into() };
        let land = estimate_landing(&s, landing_height).map_or("-".to_string(), |(x, _)| format!("{x:.4}"));
        println!(
            "{:5.2}  {:7.4}  {:7.4}  {apex:>8}  {land:>12}",
            0.05 * k as f64,
            s.position[0],
            s.position[1],
        );
    }
    Ok(())
}
