//! Fast self-checks against independent oracles: finite differences,
//! closed-form ballistics, brute-force sums and scripted outcome streams.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::actuator::{pd_torque, predictive_filter, ActuatorParams, FilterParams};
use crate::ballistic::{estimate_apex, estimate_landing, BallisticState};
use crate::control::{sagittal_limits, Rates, SAGITTAL_PAIRS};
use crate::curriculum::{
    sample_initial_state, update_curriculum, CurriculumConfig, CurriculumState, RsiStage,
};
use crate::kinematics::{
    ckc_jacobian, ckc_residual, closed_leg, forward_points, weighted_ik, BodyLayout, IkOptions, KneeBend,
    LegGeometry, LegJacobian, LegJointState, RobotConfiguration, Vec2, LEG_JOINTS, N_LEGS,
};
use crate::ppo::algo::{loss_and_grad, Minibatch, PpoConfig, Workspace};
use crate::ppo::gae::compute_gae;
use crate::ppo::nn::MlpCache;
use crate::ppo::policy::{gaussian_log_prob, ActorCritic, PolicyInit};
use crate::rewards::{kernel_exp, kernel_laplace, soft_impact, JumpCommand, JumpMode};
use crate::sim::{SimParams, SimState, Simulator, N_ACT};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Sample counts for each check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckSizes {
    pub ik_targets: usize,
    pub jacobian_configs: usize,
    pub fuzz_steps: usize,
    pub ballistic_arcs: usize,
    pub rsi_samples: usize,
    pub gae_sequences: usize,
}

impl CheckSizes {
    pub fn quick() -> Self {
        Self {
            ik_targets: 200,
            jacobian_configs: 100,
            fuzz_steps: 20_000,
            ballistic_arcs: 5,
            rsi_samples: 500,
            gae_sequences: 200,
        }
    }

    pub fn full() -> Self {
        Self {
            ik_targets: 1000,
            jacobian_configs: 100,
            fuzz_steps: 100_000,
            ballistic_arcs: 20,
            rsi_samples: 10_000,
            gae_sequences: 1000,
        }
    }
}

/// Runs every check on `params` and returns one result each.
pub fn run_checks(params: &SimParams, filter: &FilterParams, sizes: &CheckSizes, seed: u64) -> Vec<CheckResult> {
    let g = &params.geometry;
    vec![
        ik_round_trip(g, &params.body.layout(), params.bend, sizes.ik_targets, seed),
        jacobian_finite_differences(g, params.bend, sizes.jacobian_configs, seed),
        filter_fuzz(g, filter, &params.actuator, &Rates::default(), sizes.fuzz_steps, seed),
        filter_pass_through(filter, seed),
        ballistic_oracle(params, sizes.ballistic_arcs, seed),
        kernel_identities(),
        rsi_consistency(params, &CurriculumConfig::default(), sizes.rsi_samples, seed),
        gae_brute_force(sizes.gae_sequences, seed),
        ppo_gradient(seed),
        curriculum_scripted(&CurriculumConfig::default()),
    ]
}

fn random_closed_leg<R: Rng>(g: &LegGeometry, bend: KneeBend, rng: &mut R, margin: f64) -> LegJointState {
    loop {
        let it = rng.gen_range(g.joint_limits_min[1]..g.joint_limits_max[1]);
        let ot = rng.gen_range(g.joint_limits_min[2]..g.joint_limits_max[2]);
        let s = it + ot;
        if s < g.transversal_sum_bounds.0 || s > g.transversal_sum_bounds.1 {
            continue;
        }
        let Ok(leg) = closed_leg(g, 45f64.to_radians(), it, ot, bend) else { continue };
        let reach = forward_points(g, &leg).paw.norm();
        if reach > g.min_reach() + margin && reach < g.max_reach() - margin {
            return leg;
        }
    }
}

/// Weighted IK on paw targets of random reachable configurations.
pub fn ik_round_trip(g: &LegGeometry, layout: &BodyLayout, bend: KneeBend, n: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stance = closed_leg(g, 45f64.to_radians(), 1.05, 1.05, bend).expect("stance guess closes");
    let guess = RobotConfiguration { base_x: 0.0, base_z: 0.35, base_pitch: 0.0, legs: [stance; N_LEGS] };
    let opts = IkOptions { bend, ..Default::default() };
    let t0 = Instant::now();
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let mut c = guess;
        for leg in c.legs.iter_mut() {
            *leg = random_closed_leg(g, bend, &mut rng, 2.0 * opts.workspace_margin);
        }
        let targets = c.paws(g, layout);
        if let Ok(sol) = weighted_ik(g, layout, &targets, &guess, &opts) {
            // recompute the stacked residual from scratch
            let paws = sol.config.paws(g, layout);
            let r: f64 = (0..N_LEGS)
                .map(|i| (paws[i] - targets[i]).norm_squared() + ckc_residual(g, &sol.config.legs[i]).norm_squared())
                .sum::<f64>()
                .sqrt();
            if r <= 1e-6 {
                ok += 1;
                worst = worst.max(r);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let rate = ok as f64 / n.max(1) as f64;
    CheckResult::new(
        "ik_round_trip",
        rate >= 0.99 && secs < 5.0,
        format!("{ok}/{n} converged ({:.1}%), worst residual {worst:.1e} m, {secs:.2} s", 100.0 * rate),
    )
}

/// Central differences of the closure residual, step 1e-6.
pub fn fd_ckc_jacobian(g: &LegGeometry, j: &LegJointState) -> LegJacobian {
    let h = 1e-6;
    let mut out = LegJacobian::zeros();
    for k in 0..LEG_JOINTS {
        let bump = |d: f64| {
            let mut q = j.as_array();
            q[k] += d;
            ckc_residual(g, &LegJointState::from_array(q))
        };
        let col: Vec2 = (bump(h) - bump(-h)) / (2.0 * h);
        out.set_column(k, &col);
    }
    out
}

pub fn jacobian_finite_differences(g: &LegGeometry, bend: KneeBend, n: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1ac0);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let j = random_closed_leg(g, bend, &mut rng, 0.0);
        worst = worst.max((ckc_jacobian(g, &j) - fd_ckc_jacobian(g, &j)).amax());
    }
    CheckResult::new("jacobian_fd", worst < 1e-5, format!("max elementwise error {worst:.2e} over {n} configurations"))
}

/// Closed-loop fuzz: random targets held for one policy interval, filtered
/// and tracked by PD on independent single-joint integrators with the
/// armature inertia. Counts physics steps.
pub fn filter_fuzz(
    g: &LegGeometry,
    filter: &FilterParams,
    act: &ActuatorParams,
    rates: &Rates,
    steps: usize,
    seed: u64,
) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf1f1);
    let limits = sagittal_limits(g);
    let dt = rates.physics_dt;
    let mut q = [0.0; N_ACT];
    let mut qd = [0.0; N_ACT];
    let mut raw = [0.0; N_ACT];
    let mut safe = [0.0; N_ACT];
    let mut tau = [0.0; N_ACT];
    let mut worst: f64 = 0.0;
    let mut sum_violations = 0usize;
    let mut done = 0usize;
    let mut interval = 0u64;
    let mut sequences = 0usize;
    while done < steps {
        // a fresh random sequence every 30 intervals, from rest inside the limits
        if interval % 30 == 0 {
            sequences += 1;
            loop {
                for j in 0..N_ACT {
                    q[j] = rng.gen_range(limits[j].0..limits[j].1);
                }
                if SAGITTAL_PAIRS.iter().all(|&(a, b)| {
                    let s = q[a] + q[b];
                    s >= filter.sum_bounds.0 && s <= filter.sum_bounds.1
                }) {
                    break;
                }
            }
            qd = [0.0; N_ACT];
        }
        for r in raw.iter_mut() {
            // well past both limits
            *r = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        }
        for k in 0..rates.physics_steps(interval) {
            if k % rates.pd_decimation == 0 {
                predictive_filter(&raw, &q, &qd, &limits, &SAGITTAL_PAIRS, filter, &mut safe);
                for &(a, b) in &SAGITTAL_PAIRS {
                    let s = safe[a] + safe[b];
                    if s < filter.sum_bounds.0 || s > filter.sum_bounds.1 {
                        sum_violations += 1;
                    }
                }
                for j in 0..N_ACT {
                    tau[j] = pd_torque(safe[j], q[j], qd[j], act);
                }
            }
            for j in 0..N_ACT {
                qd[j] += tau[j] / act.armature * dt;
                q[j] += qd[j] * dt;
                let over = (q[j] - limits[j].1).max(limits[j].0 - q[j]).max(0.0);
                worst = worst.max(over);
            }
            done += 1;
        }
        interval += 1;
    }
    let worst_deg = worst.to_degrees();
    CheckResult::new(
        "filter_fuzz",
        worst_deg <= 0.5 && sum_violations == 0,
        format!("{done} steps in {sequences} sequences, worst limit excess {worst_deg:.3} deg, {sum_violations} sum violations"),
    )
}

/// Far from the limits the filter returns the raw target unchanged.
pub fn filter_pass_through(filter: &FilterParams, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9a55);
    let lim = ((-60f64).to_radians(), 135f64.to_radians());
    let mut checked = 0;
    let mut changed = 0;
    for _ in 0..20_000 {
        let q: f64 = rng.gen_range(lim.0..lim.1);
        let v: f64 = rng.gen_range(-5.0..5.0);
        let t: f64 = rng.gen_range(lim.0..lim.1);
        let margin = filter.max_overshoot + v.abs() * filter.prediction_horizon;
        if q - lim.0 <= margin || lim.1 - q <= margin {
            continue;
        }
        let mut out = [0.0];
        predictive_filter(&[t], &[q], &[v], &[lim], &[], filter, &mut out);
        checked += 1;
        if out[0] != t {
            changed += 1;
        }
    }
    CheckResult::new("filter_pass_through", changed == 0 && checked > 0, format!("{changed}/{checked} targets altered"))
}

fn airborne(sim: &Simulator, z: f64, vel: [f64; 2]) -> SimState {
    let mut s = sim.standing_state(0.3, 0.0).expect("default stance");
    s.base_pos = [0.0, z];
    s.base_vel = vel;
    s.contact = [false; N_LEGS];
    s.anchors = [None; N_LEGS];
    s.ground_force = [[0.0; 2]; N_LEGS];
    s
}

/// Free flight against `z0 + vz t - g t^2 / 2`, estimator invariance along
/// the arc, and estimates against the realized apex and touchdown.
pub fn ballistic_oracle(params: &SimParams, arcs: usize, seed: u64) -> CheckResult {
    let sim = match Simulator::new(SimParams { external_force: [0.0; 2], external_torque: 0.0, ..params.clone() }) {
        Ok(s) => s,
        Err(e) => return CheckResult::new("ballistic_oracle", false, format!("invalid simulator parameters: {e}")),
    };
    let g = sim.params().body.gravity;
    let dt = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xba11);
    let (mut closed_form, mut drift_apex, mut drift_land, mut apex_err, mut land_err): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..arcs {
        let z0 = rng.gen_range(0.5..0.9);
        let v = [rng.gen_range(-0.5..1.5), rng.gen_range(0.5..3.0)];
        let s0 = airborne(&sim, z0, v);
        let lh = sim.landing_height(&s0);
        let b0 = BallisticState::new(0.0, z0, v[0], v[1], g);
        let apex0 = estimate_apex(&b0);
        let land0 = match estimate_landing(&b0, lh) {
            Ok((x, _)) => x,
            Err(e) => return CheckResult::new("ballistic_oracle", false, format!("landing estimate failed: {e}")),
        };
        let mut s = s0;
        let mut peak = z0;
        let mut touchdown = None;
        for k in 1..=5000 {
            let next = match sim.step(&s, &[0.0; N_ACT], dt) {
                Ok(n) => n,
                Err(e) => return CheckResult::new("ballistic_oracle", false, e.to_string()),
            };
            if next.contact.iter().any(|c| *c) {
                // interpolate the crossing of the landing height
                let (za, zb) = (s.base_pos[1] - lh, next.base_pos[1] - lh);
                let f = if za != zb { za / (za - zb) } else { 1.0 };
                touchdown = Some(s.base_pos[0] + f * (next.base_pos[0] - s.base_pos[0]));
                break;
            }
            s = next;
            let t = k as f64 * dt;
            if t <= 0.2 + 1e-12 {
                closed_form = closed_form.max((s.base_pos[1] - (z0 + v[1] * t - 0.5 * g * t * t)).abs());
            }
            peak = peak.max(s.base_pos[1]);
            let b = BallisticState::new(s.base_pos[0], s.base_pos[1], s.base_vel[0], s.base_vel[1], g);
            if s.base_vel[1] > 0.0 {
                // the apex estimate is defined up to the peak
                drift_apex = drift_apex.max((estimate_apex(&b) - apex0).abs());
            }
            let lh_now = sim.landing_height(&s);
            // past the crossing the body is no longer on the contact-free arc
            if s.base_pos[1] >= lh_now {
                if let Ok((x, _)) = estimate_landing(&b, lh_now) {
                    drift_land = drift_land.max((x - land0).abs());
                }
            }
        }
        apex_err = apex_err.max((peak - apex0).abs());
        match touchdown {
            Some(x) => land_err = land_err.max((x - land0).abs()),
            None => return CheckResult::new("ballistic_oracle", false, "arc never touched down".into()),
        }
    }
    CheckResult::new(
        "ballistic_oracle",
        closed_form <= 1e-4 && drift_apex <= 1e-3 && drift_land <= 1e-3 && apex_err <= 5e-3 && land_err <= 5e-3,
        format!(
            "{arcs} arcs: z(t) error {closed_form:.1e} m, estimate drift apex {drift_apex:.1e} / landing {drift_land:.1e} m, \
             realized apex {apex_err:.1e} / touchdown {land_err:.1e} m"
        ),
    )
}

/// Kernel values against hand-evaluated constants.
pub fn kernel_identities() -> CheckResult {
    let e = std::f64::consts::E;
    let cases = [
        (kernel_exp(0.0, 0.3), 1.0),
        (kernel_exp(0.3, 0.3), 1.0 / e),
        (kernel_exp(-0.6, 0.3), 1.0 / e.powi(4)),
        (kernel_laplace(0.0, 0.2), 1.0),
        (kernel_laplace(-0.2, 0.2), 1.0 / e),
        (kernel_laplace(0.5, 0.25), 1.0 / (e * e)),
        (soft_impact([0.0, 50.0], [0.0, -1.0], 100.0), 0.5),
        (soft_impact([0.0, -50.0], [0.0, -1.0], 100.0), 1.0),
        (soft_impact([0.0, 300.0], [0.0, -2.0], 100.0), 0.0),
    ];
    let worst = cases.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    CheckResult::new("kernel_identities", worst < 1e-12, format!("{} values, worst error {worst:.1e}", cases.len()))
}

/// InFlight and Touchdown starts: CKC closure, agreement of a contact-free
/// re-simulation with the sampled arc, and the arc reaching the command.
pub fn rsi_consistency(params: &SimParams, cfg: &CurriculumConfig, n: usize, seed: u64) -> CheckResult {
    let sim = match Simulator::new(params.clone()) {
        Ok(s) => s,
        Err(e) => return CheckResult::new("rsi_consistency", false, e.to_string()),
    };
    let cur = CurriculumState::at_caps(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4517);
    let (mut closure, mut resim, mut command_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut fallbacks = 0;
    for i in 0..n {
        let stage = if i % 2 == 0 { RsiStage::InFlight } else { RsiStage::Touchdown };
        let cmd = if (i / 2) % 2 == 0 {
            JumpCommand::vertical(rng.gen_range(cur.vertical.0..=cur.vertical.1))
        } else {
            JumpCommand::horizontal(rng.gen_range(cur.forward.0..=cur.forward.1), 0.0)
        };
        let r = sample_initial_state(stage, &cmd, &sim, cfg, &cur, &mut rng);
        if r.fallback {
            fallbacks += 1;
            continue;
        }
        for leg in &r.state.legs {
            closure = closure.max(ckc_residual(&sim.params().geometry, leg).norm());
        }
        let Some(arc) = r.arc else {
            fallbacks += 1;
            continue;
        };
        let s0 = &r.state;
        let pos_gap = (s0.base_pos[0] - arc.position[0]).abs().max((s0.base_pos[1] - arc.position[1]).abs());
        let vel_gap = (s0.base_vel[0] - arc.velocity[0]).abs().max((s0.base_vel[1] - arc.velocity[1]).abs());
        resim = resim.max(pos_gap).max(vel_gap);
        match cmd.mode {
            JumpMode::Vertical => {
                // energy height, valid on either branch
                let peak = arc.position[1] + arc.velocity[1].powi(2) / (2.0 * arc.gravity);
                command_err = command_err.max((peak - cmd.h_star).abs());
            }
            JumpMode::Horizontal => {
                // the arc was built to land on the goal at the sampled pose
                let lh = sim.landing_height(s0);
                if let Ok((x, _)) = estimate_landing(&arc, lh) {
                    command_err = command_err.max((x - cmd.p_star[0]).abs());
                }
            }
        }
        // contact-free forward simulation with joints frozen
        let mut s = *s0;
        s.joint_vel = [[0.0; 2]; N_LEGS];
        let dt = 1e-3;
        for k in 1..=100 {
            let Ok(next) = sim.step(&s, &[0.0; N_ACT], dt) else { break };
            if next.contact.iter().any(|c| *c) {
                break;
            }
            s = next;
            let want = arc.advance(k as f64 * dt);
            resim = resim.max((s.base_pos[0] - want.position[0]).abs()).max((s.base_pos[1] - want.position[1]).abs());
        }
    }
    let ok = closure <= 1e-8 && resim <= 1e-3 && command_err <= 1e-3 && fallbacks * 100 <= n;
    CheckResult::new(
        "rsi_consistency",
        ok,
        format!(
            "{n} samples, closure {closure:.1e}, re-simulation {resim:.1e} m, command {command_err:.1e} m, {fallbacks} fallbacks"
        ),
    )
}

/// GAE against the explicit discounted sum of TD errors.
pub fn gae_brute_force(n: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6ae);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let h = 5;
        let r: Vec<f64> = (0..h).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..h).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let d: Vec<bool> = (0..h).map(|_| rng.gen_bool(0.25)).collect();
        let last: f64 = rng.gen_range(-2.0..2.0);
        let (gamma, lambda) = (rng.gen_range(0.5..1.0), rng.gen_range(0.0..1.0));
        let (adv, _) = compute_gae(&r, &v, &d, &[last], gamma, lambda);
        for t in 0..h {
            let mut total = 0.0;
            let mut w = 1.0;
            for k in t..h {
                let next = if d[k] {
                    0.0
                } else if k + 1 < h {
                    v[k + 1]
                } else {
                    last
                };
                total += w * (r[k] + gamma * next - v[k]);
                if d[k] {
                    break;
                }
                w *= gamma * lambda;
            }
            worst = worst.max((adv[t] - total).abs());
        }
    }
    CheckResult::new("gae_brute_force", worst <= 1e-12, format!("{n} sequences of 5 steps, worst error {worst:.1e}"))
}

/// Analytic PPO loss gradient against central differences, every
/// parameter of a small f64 actor-critic.
pub fn ppo_gradient(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9d);
    let (od, ad, b) = (3, 2, 8);
    let init = PolicyInit { log_std: -0.4, actor_output_gain: 1.0, critic_output_gain: 1.0 };
    let ac = ActorCritic::<f64>::new(od, ad, &[6, 5], &init, &mut rng);
    let obs: Vec<f64> = (0..b * od).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mu = ac.actor_forward(&obs, b, &mut MlpCache::default()).to_vec();
    let ls = ac.log_std().to_vec();
    let old_ls: Vec<f64> = ls.iter().map(|l| l + 0.05).collect();
    let mut mb = Minibatch { obs, ..Default::default() };
    for i in 0..b {
        let row = &mu[i * ad..(i + 1) * ad];
        let u: Vec<f64> = row.iter().map(|m| m + rng.gen_range(-0.6..0.6)).collect();
        mb.old_log_probs.push(gaussian_log_prob(&u, row, &ls) + rng.gen_range(-0.05..0.05));
        mb.actions.extend(&u);
        mb.old_means.extend(row.iter().map(|m| m + rng.gen_range(-0.05..0.05)));
        mb.advantages.push(rng.gen_range(-1.0..1.0));
        mb.targets.push(rng.gen_range(-1.0..1.0));
    }
    // small limit so the bound penalty is active too
    let cfg = PpoConfig { bound_limit: 0.1, ..Default::default() };
    let mut grad = vec![0.0; ac.params.len()];
    loss_and_grad(&ac, &mb, &old_ls, &cfg, &mut Workspace::default(), &mut grad);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..ac.params.len() {
        let f = |d: f64| {
            let mut p = ac.clone();
            p.params[k] += d;
            let mut g = vec![0.0; p.params.len()];
            loss_and_grad(&p, &mb, &old_ls, &cfg, &mut Workspace::default(), &mut g).total
        };
        let fd = (f(h) - f(-h)) / (2.0 * h);
        worst = worst.max((fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-6));
    }
    CheckResult::new(
        "ppo_gradient",
        worst <= 1e-4,
        format!("{} parameters, worst relative error {worst:.1e}", ac.params.len()),
    )
}

/// Always-success streams expand monotonically to the caps; always-failure
/// streams contract to the initial ranges and stay there.
pub fn curriculum_scripted(cfg: &CurriculumConfig) -> CheckResult {
    let window = cfg.window.max(1);
    let mut s = CurriculumState::new(cfg);
    let mut monotone = true;
    let mut rounds = 0;
    let caps = CurriculumState::at_caps(cfg);
    while (s.vertical != caps.vertical || s.forward != caps.forward || s.lateral != caps.lateral) && rounds < 10_000 {
        let (next, _) = update_curriculum(&s, cfg, &vec![true; window]);
        let widened = |a: (f64, f64), b: (f64, f64)| b.0 <= a.0 && b.1 >= a.1;
        monotone &= widened(s.vertical, next.vertical) && widened(s.forward, next.forward) && widened(s.lateral, next.lateral);
        s = next;
        rounds += 1;
    }
    let reached = rounds < 10_000;
    let init = CurriculumState::new(cfg);
    let mut floor_ok = true;
    let mut down = 0;
    for _ in 0..10_000 {
        let (next, _) = update_curriculum(&s, cfg, &vec![false; window]);
        let inside = |r: (f64, f64), i: (f64, f64)| r.0 <= i.0 && r.1 >= i.1;
        floor_ok &= inside(next.vertical, init.vertical) && inside(next.forward, init.forward);
        s = next;
        down += 1;
        if s.vertical == init.vertical && s.forward == init.forward && s.lateral == init.lateral {
            break;
        }
    }
    let (held, _) = update_curriculum(&s, cfg, &vec![false; window]);
    let contracted = s.vertical == init.vertical && s.forward == init.forward && held.vertical == init.vertical;
    CheckResult::new(
        "curriculum_scripted",
        monotone && reached && floor_ok && contracted,
        format!(
            "caps reached after {rounds} promotions (monotone {monotone}), initial range after {down} demotions (floor held {})",
            floor_ok && contracted
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes_on_defaults() {
        let results = run_checks(&SimParams::default(), &FilterParams::default(), &CheckSizes::quick(), 1);
        for r in &results {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn fuzz_is_reproducible() {
        let a = filter_fuzz(&LegGeometry::default(), &FilterParams::default(), &ActuatorParams::default(), &Rates::default(), 5000, 3);
        let b = filter_fuzz(&LegGeometry::default(), &FilterParams::default(), &ActuatorParams::default(), &Rates::default(), 5000, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn fuzz_detects_an_unfiltered_overshoot() {
        // a look-ahead far shorter than one PD period leaves no room to brake
        let loose = FilterParams { prediction_horizon: 1e-4, ..Default::default() };
        let r = filter_fuzz(&LegGeometry::default(), &loose, &ActuatorParams::default(), &Rates::default(), 20_000, 3);
        assert!(!r.passed, "{r}");
    }
}
