//! Squats, then pushes with saturated position targets through the PD loop
//! and motor filter, and reports takeoff speed and apex.
//!
//! cargo run --release --example open_loop_jump -- -1.0

use quadjump::actuator::FilterParams;
use quadjump::control::{jumping_scaling, Controller, Rates};
use quadjump::sim::{JumpPhase, SimParams, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let push: f64 = std::env::args().nth(1).map_or(Ok(-1.0), |s| s.parse())?;
    let params = SimParams::default();
    let sim = Simulator::new(params)?;
    let filter = FilterParams { sum_bounds: params.geometry.transversal_sum_bounds, ..Default::default() };
    let ctl = Controller::new(&sim.params().geometry, jumping_scaling(), filter, Rates::default());
    let mut state = sim.standing_state(0.30, 0.0)?;
    let mut takeoff = None;
    for k in 0..90 {
        let a = if k < 20 {
            [1.0; 4]
        } else if state.phase == JumpPhase::Stance {
            [push; 4]
        } else {
            [0.3; 4]
        };
        ctl.run_interval(&sim, &mut state, &a, k)?;
        if k == 19 {
            state.rearm();
            println!("squat height {:.3} m", state.base_pos[1]);
        }
        if takeoff.is_none() {
            takeoff = state.takeoff;
        }
    }
    match takeoff {
        Some(t) => println!(
            "takeoff at {:.3} s with v = ({:.3}, {:.3}) m/s, apex {:.3} m",
            t.time, t.velocity[0], t.velocity[1], state.max_height
        ),
        None => println!("no takeoff"),
    }
    Ok(())
}
