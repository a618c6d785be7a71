//! Solves the weighted IK for paws straight below the hips at several crouch
//! depths and prints the closed-chain joint angles.
//!
//! cargo run --release --example inverse_kinematics

use quadjump::kinematics::{
    ckc_residual, closed_leg, weighted_ik, IkOptions, RobotConfiguration, Vec2, N_LEGS,
};
use quadjump::sim::SimParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SimParams::default();
    let (g, layout) = (&p.geometry, p.body.layout());
    let opts = IkOptions { bend: p.bend, ..Default::default() };
    let stance = closed_leg(g, 45f64.to_radians(), 1.05, 1.05, p.bend)?;
    let guess = RobotConfiguration { base_x: 0.0, base_z: 0.3, base_pitch: 0.0, legs: [stance; N_LEGS] };
    let home = guess.paws(g, &layout);
    println!("  dz m   iters  residual   theta_it  theta_ot  theta_ik  theta_ok  closure");
    // raise (crouch) or lower (extend) the paws relative to the body
    for dz in [0.06, 0.03, 0.0, -0.03, -0.06] {
        let targets: [Vec2; N_LEGS] = std::array::from_fn(|i| home[i] + Vec2::new(0.0, dz));
        let sol = weighted_ik(g, &layout, &targets, &guess, &opts)?;
        let leg = &sol.config.legs[0];
        println!(
            "{dz:6.2}  {:5}  {:9.1e}  {:8.2}  {:8.2}  {:8.2}  {:8.2}  {:7.1e}",
            sol.iterations,
            sol.residual,
            leg.theta_it.to_degrees(),
            leg.theta_ot.to_degrees(),
            leg.theta_ik.to_degrees(),
            leg.theta_ok.to_degrees(),
            ckc_residual(g, leg).norm()
        );
    }
    Ok(())
}
