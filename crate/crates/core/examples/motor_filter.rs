//! Drives one transversal pair toward targets beyond its limits and prints
//! raw and filtered targets with the resulting joint motion.
//!
//! cargo run --release --example motor_filter

use quadjump::actuator::{pd_torque, predictive_filter, ActuatorParams, FilterParams};
use quadjump::control::{sagittal_limits, Rates, SAGITTAL_PAIRS};
use quadjump::sim::{SimParams, N_ACT};

fn main() {
    let p = SimParams::default();
    let limits = sagittal_limits(&p.geometry);
    let filter = FilterParams { sum_bounds: p.geometry.transversal_sum_bounds, ..Default::default() };
    let act = ActuatorParams::default();
    let rates = Rates::default();
    let dt = rates.physics_dt;
    let mut q = [1.0; N_ACT];
    let mut qd = [0.0; N_ACT];
    let mut safe = [0.0; N_ACT];
    let mut tau = [0.0; N_ACT];
    println!("joint 0 limits [{:.1}, {:.1}] deg", limits[0].0.to_degrees(), limits[0].1.to_degrees());
    println!("  t ms    raw deg   safe deg   q deg    qd rad/s");
    // swing far past the upper limit, then far past the lower one
    for (k, raw0) in [(0, 200.0f64), (150, -150.0)] {
        let raw = [raw0.to_radians(), 0.5, raw0.to_radians(), 0.5];
        for i in 0..150 {
            if i % rates.pd_decimation == 0 {
                predictive_filter(&raw, &q, &qd, &limits, &SAGITTAL_PAIRS, &filter, &mut safe);
                for j in 0..N_ACT {
                    tau[j] = pd_torque(safe[j], q[j], qd[j], &act);
                }
            }
            for j in 0..N_ACT {
                qd[j] += tau[j] / act.armature * dt;
                q[j] += qd[j] * dt;
            }
            if i % 15 == 0 {
                println!(
                    "{:6}  {:9.1}  {:9.2}  {:7.2}  {:9.2}",
                    k + i,
                    raw[0].to_degrees(),
                    safe[0].to_degrees(),
                    q[0].to_degrees(),
                    qd[0]
                );
            }
        }
    }
}
