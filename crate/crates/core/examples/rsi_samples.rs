//! Samples reference start states for each RSI stage of a horizontal command,
//! then walks the curriculum up and down with scripted outcome streams.
//!
//! cargo run --release --example rsi_samples -- 0.6

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quadjump::ballistic::estimate_landing;
use quadjump::curriculum::{sample_initial_state, update_curriculum, CurriculumConfig, CurriculumState, RsiStage};
use quadjump::kinematics::ckc_residual;
use quadjump::rewards::JumpCommand;
use quadjump::sim::{SimParams, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x_star: f64 = std::env::args().nth(1).map_or(Ok(0.6), |s| s.parse())?;
    let sim = Simulator::new(SimParams::default())?;
    let cfg = CurriculumConfig::default();
    let cur = CurriculumState::at_caps(&cfg);
    let cmd = JumpCommand::horizontal(x_star, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    println!("stage              x m     z m    vx m/s  vz m/s  pitch deg  closure  predicted landing x");
    for stage in RsiStage::ALL {
        for _ in 0..3 {
            let s = sample_initial_state(stage, &cmd, &sim, &cfg, &cur, &mut rng);
            let st = &s.state;
            let closure = st.legs.iter().map(|l| ckc_residual(&sim.params().geometry, l).norm()).fold(0.0, f64::max);
            let landing = s
                .arc
                .and_then(|a| estimate_landing(&a, sim.landing_height(st)).ok())
                .map_or("-".into(), |(x, _)| format!("{x:.4}"));
            println!(
                "{:17}  {:6.3}  {:6.3}  {:6.3}  {:6.3}  {:9.2}  {closure:7.1e}  {landing}",
                format!("{stage:?}"),
                st.base_pos[0],
                st.base_pos[1],
                st.base_vel[0],
                st.base_vel[1],
                st.pitch.to_degrees()
            );
        }
    }

    println!("\nscripted curriculum, window {}", cfg.window);
    let mut state = CurriculumState::new(&cfg);
    for (label, ok) in [("success", true); 5].into_iter().chain([("failure", false); 5]) {
        let (next, change) = update_curriculum(&state, &cfg, &vec![ok; cfg.window]);
        state = next;
        println!(
            "{label}: {change:?}, forward ({:.2}, {:.2}), vertical ({:.2}, {:.2}), breadth {:.1}",
            state.forward.0, state.forward.1, state.vertical.0, state.vertical.1, state.breadth
        );
    }
    Ok(())
}
