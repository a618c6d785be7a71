//! Draws per-episode physical parameters under the jumping profile and builds
//! a noisy observation for a standing robot.
//!
//! cargo run --release --example domain_randomization

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quadjump::observations::{
    build_observation, randomize_domain, ObsCommand, ObsContext, ObsMode, ObservationNoise, ObservationSpec,
    RandomizationProfile, RandomizationRanges,
};
use quadjump::sim::{SimParams, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nominal = SimParams::default();
    let ranges = RandomizationRanges::profile(RandomizationProfile::Jumping);
    println!("randomized quantities:");
    for (name, (lo, hi)) in ranges.rows() {
        println!("  {name:18} [{lo}, {hi}]");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("\n  mass kg  inertia  kp      friction  latency ms  delay steps");
    for _ in 0..5 {
        let ep = randomize_domain(&nominal, &ranges, 1.0 / 60.0, &mut rng);
        println!(
            "  {:7.3}  {:7.4}  {:6.2}  {:8.3}  {:10.2}  {}",
            ep.sim.body.mass,
            ep.sim.body.pitch_inertia,
            ep.sim.actuator.kp,
            ep.sim.contact.static_friction,
            ep.latency * 1e3,
            ep.delay_steps
        );
    }

    let sim = Simulator::new(nominal)?;
    let state = sim.standing_state(0.31, 0.0)?;
    let spec = ObservationSpec::new(ObsMode::VerticalJump);
    let joints = [0.0; 4];
    let ctx = ObsContext {
        state: &state,
        joint_pos: state.joint_positions(),
        default_joints: &state.joint_positions(),
        prev_action: &joints,
        command: ObsCommand::Vertical { h_star: 0.6, c: 1.0 },
        gravity: nominal.body.gravity,
        ground_height: nominal.ground_height,
    };
    let mut clean = vec![0.0; spec.dim()];
    let mut noisy = vec![0.0; spec.dim()];
    build_observation(&spec, &ctx, &ObservationNoise::off(), &mut rng, &mut clean);
    build_observation(&spec, &ctx, &ObservationNoise::default(), &mut rng, &mut noisy);
    println!("\nobservation ({} values), clean vs noisy:", spec.dim());
    for seg in &spec.segments {
        let r = spec.range(seg.name).expect("segment");
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:7.3}")).collect::<Vec<_>>().join(" ");
        println!("  {:12} {}\n  {:12} {}", seg.name, fmt(&clean[r.clone()]), "", fmt(&noisy[r]));
    }
    Ok(())
}
