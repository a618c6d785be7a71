//! Acceptance criteria 1 to 10, one PASS/FAIL line each. Runs without the
//! libtest harness so the lines print in order and uncaptured.

use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quadjump::check::{
    ballistic_oracle, curriculum_scripted, filter_fuzz, filter_pass_through, gae_brute_force, ik_round_trip,
    jacobian_finite_differences, ppo_gradient, rsi_consistency, CheckSizes,
};
use quadjump::config::RunConfig;
use quadjump::control::Rates;
use quadjump::curriculum::{CurriculumConfig, CurriculumState, RsiStage};
use quadjump::env::JumpEnv;
use quadjump::ppo::env::Env;
use quadjump::ppo::train::{command_grid, evaluate, train, EvalReport};
use quadjump::rewards::{
    common_jump_rewards, horizontal_jump_rewards, regularization_rewards, soft_impact, termination_check,
    vertical_jump_rewards, walking_rewards, ApexDetector, EpisodeStatus, JumpCommand, JumpInput, JumpMode,
    JumpProgress, RegularizationInput, RewardBreakdown, RewardConfig, TerminationConfig, TerminationReason,
    WalkingInput,
};
use quadjump::sim::{JumpPhase, SimParams};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn all(parts: &[quadjump::check::CheckResult]) -> Outcome {
    let passed = parts.iter().all(|r| r.passed);
    let detail = parts.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("; ");
    outcome(passed, detail)
}

const SEED: u64 = 2024;

fn c1_ik() -> Outcome {
    let p = SimParams::default();
    all(&[ik_round_trip(&p.geometry, &p.body.layout(), p.bend, CheckSizes::full().ik_targets, SEED)])
}

fn c2_jacobian() -> Outcome {
    let p = SimParams::default();
    all(&[jacobian_finite_differences(&p.geometry, p.bend, CheckSizes::full().jacobian_configs, SEED)])
}

fn c3_filter() -> Outcome {
    let cfg = RunConfig::default();
    let p = cfg.sim_params();
    let f = cfg.filter();
    all(&[
        filter_fuzz(&p.geometry, &f, &p.actuator, &Rates::default(), CheckSizes::full().fuzz_steps, SEED),
        filter_pass_through(&f, SEED),
    ])
}

fn c4_ballistic() -> Outcome {
    all(&[ballistic_oracle(&SimParams::default(), CheckSizes::full().ballistic_arcs, SEED)])
}

// Hand evaluations use literal arithmetic, not the library kernels.
fn gauss(x: f64, s: f64) -> f64 {
    (-(x * x) / (s * s)).exp()
}

fn laplace(x: f64, s: f64) -> f64 {
    (-x.abs() / s).exp()
}

struct Tally {
    checked: usize,
    failures: Vec<String>,
}

impl Tally {
    fn term(&mut self, b: &RewardBreakdown, name: &str, expected: f64, weight: f64) {
        self.checked += 1;
        let Some(t) = b.get(name) else {
            self.failures.push(format!("{name} missing"));
            return;
        };
        let tol = 1e-12 * expected.abs().max(1.0);
        if (t.raw - expected).abs() > tol || (t.weighted - expected * weight).abs() > tol * weight.abs().max(1.0) {
            self.failures.push(format!("{name}: got {} expected {expected}", t.raw));
        }
    }

    fn truth(&mut self, what: &str, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failures.push(what.to_string());
        }
    }
}

fn jump_input<'a>(phase: JumpPhase, t: &'a [f64], tv: &'a [f64], lat: &'a [f64], lr: &'a [f64]) -> JumpInput<'a> {
    JumpInput {
        phase,
        since_touchdown: None,
        base_pos: [0.0, 0.3],
        base_vel: [0.0, 0.0],
        base_acc: [0.0, 0.0],
        pitch: 0.0,
        pitch_rate: 0.0,
        transversal: t,
        transversal_vel: tv,
        lateral_rel: lat,
        left_right_diff: lr,
        ground_force: [0.0, 0.0],
    }
}

fn reward_formulas(t: &mut Tally) {
    let cfg = RewardConfig::default();
    let (s, w) = (&cfg.sigma, &cfg.weights);

    // regularization
    let points: [([f64; 4], [f64; 4], [f64; 4], [f64; 4], [f64; 4], [f64; 4], [f64; 4]); 3] = [
        ([0.1, 0.2, 0.3, 0.4], [0.1, 0.1, 0.3, 0.2], [1.0, -2.0, 3.0, 0.0], [1.0, 2.0, -1.0, 0.5], [10.0, 0.0, -5.0, 2.0], [0.5, 0.5, 0.5, 0.5], [0.0, 0.5, 1.0, 0.5]),
        ([0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4]),
        ([1.5, -1.5, 0.0, 2.0], [1.0, -1.0, 0.0, 1.0], [-4.0, -4.0, 4.0, 4.0], [4.0, -4.0, -4.0, 4.0], [100.0, 200.0, 0.0, 0.0], [-1.0, 1.0, -1.0, 1.0], [1.0, 1.0, -1.0, -1.0]),
    ];
    let expected = [
        // (clip, torque, acc, rate, jerk)
        (0.01 + 0.04, 1.0 + 4.0 + 9.0, 100.0 + 25.0 + 4.0, 0.25 + 0.0 + 0.25 + 0.0, 3.0),
        (0.0, 0.0, 0.0, 0.0, 0.0),
        (0.25 + 0.25 + 0.0 + 1.0, 64.0, 50_000.0, 4.0 + 0.0 + 0.0 + 4.0, 2.0),
    ];
    for ((raw, safe, tau, ptau, acc, a, pa), (ec, et, ea, er, ej)) in points.iter().zip(expected) {
        let b = regularization_rewards(
            &RegularizationInput {
                raw_targets: raw,
                safe_targets: safe,
                torques: tau,
                prev_torques: ptau,
                joint_acc: acc,
                actions: a,
                prev_actions: pa,
            },
            w,
        );
        t.term(&b, "action_clip", ec, w.action_clip);
        t.term(&b, "motor_torque", et, w.motor_torque);
        t.term(&b, "joint_acceleration", ea, w.joint_acceleration);
        t.term(&b, "action_rate", er, w.action_rate);
        t.term(&b, "jerk", ej, w.jerk);
    }

    // walking
    let stand = cfg.walk_stand_transversal.clone();
    let lat0 = cfg.walk_lateral.clone();
    for (k, (v, om, g, cmd, dt, dl)) in [
        ([0.3, 0.1, 0.05], [0.1, -0.2, 0.4], [0.1, 0.05, -0.99], [0.5, 0.0, 0.2], 0.1, 0.05),
        ([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 0.0, 0.0], 0.0, 0.0),
        ([-0.4, 0.2, -0.1], [0.3, 0.3, -0.5], [-0.2, 0.0, -0.98], [-0.5, 0.3, -0.8], 0.3, 0.9),
    ]
    .into_iter()
    .enumerate()
    {
        let standing = k == 1;
        let targets = if standing { stand.clone() } else { cfg.walk_move_transversal.clone() };
        // shift one joint of each group by the chosen error
        let mut tr = targets.clone();
        tr[0] += dt;
        let mut la = lat0.clone();
        la[1] -= dl;
        let b = walking_rewards(&WalkingInput { lin_vel: v, ang_vel: om, gravity: g, transversal: &tr, lateral: &la }, cmd, &cfg);
        let ev = ((v[0] - cmd[0]).powi(2) + (v[1] - cmd[1]).powi(2)).sqrt();
        t.term(&b, "linear_velocity_tracking", gauss(ev, s.sigma_1), w.linear_velocity_tracking);
        t.term(&b, "yaw_rate_tracking", gauss(om[2] - cmd[2], s.sigma_2), w.yaw_rate_tracking);
        t.term(&b, "vertical_velocity", v[2] * v[2], w.vertical_velocity);
        t.term(&b, "lateral_stability", om[0] * om[0] + om[1] * om[1], w.lateral_stability);
        t.term(&b, "flat", g[0] * g[0] + g[1] * g[1], w.flat);
        t.term(&b, "stand", gauss(dt, s.sigma_3), w.stand);
        t.term(&b, "lateral_position", gauss(dt.powi(4), s.sigma_4) - 1.0, w.lateral_position);
        t.term(&b, "transversal_position", gauss(dl.powi(10), s.sigma_5) - 1.0, w.transversal_position);
    }

    // vertical jump
    let h_star = 0.6;
    let cmd = JumpCommand::vertical(h_star);
    for (h, est, tr) in [
        (0.62, 0.55, [1.0, 1.1, 0.9, 1.0]),
        (0.6, 0.6, [1.0; 4]),
        (0.3, 0.95, [0.5, 1.5, 0.8, 1.2]),
    ] {
        let lat = [0.05, -0.02];
        let mean = tr.iter().sum::<f64>() / 4.0;
        let var = tr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        let ln = (0.05f64 * 0.05 + 0.02 * 0.02).sqrt();
        let inp = jump_input(JumpPhase::InFlight, &tr, &[0.0; 4], &lat, &[]);
        let p = JumpProgress { apex_event: Some(h), est_apex: Some(est), est_landing_error: None };
        let b = vertical_jump_rewards(&inp, &p, &cmd, &cfg);
        t.term(&b, "jump_height", gauss(h - h_star, s.sigma_6) + 3.0 * laplace(h - h_star, s.sigma_7), w.jump_height);
        t.term(&b, "est_jump_height", gauss(est - h_star, s.sigma_8) + 3.0 * laplace(est - h_star, s.sigma_9), w.est_jump_height);
        t.term(&b, "vertical_symmetry", gauss(var, s.sigma_10) * gauss(ln, s.sigma_11), w.vertical_symmetry);
    }

    // horizontal jump
    for (e, eh, lr) in [(0.1, 0.05, [0.1, 0.0]), (0.0, 0.0, [0.0, 0.0]), (-0.4, 0.3, [0.3, -0.4])] {
        let inp = jump_input(JumpPhase::InFlight, &[1.0; 4], &[0.0; 4], &[], &lr);
        let p = JumpProgress { est_landing_error: Some([eh, 0.0]), ..Default::default() };
        let b = horizontal_jump_rewards(&inp, [e, 0.0], &p, &cfg);
        let lrn = (lr[0] * lr[0] + lr[1] * lr[1]).sqrt();
        t.term(&b, "tracking", gauss(e, s.sigma_12), w.tracking);
        t.term(&b, "est_tracking", gauss(eh, s.sigma_13) + 0.1 * gauss(eh, s.sigma_14), w.est_tracking);
        t.term(&b, "horizontal_symmetry", gauss(lrn, s.sigma_15), w.horizontal_symmetry);
    }

    // common terms, in flight
    let targets = cfg.flight_joint_targets.clone();
    for (omega, pitch, dq, f, acc, vel) in [
        (1.0, 0.05, 0.1, [3.0, 40.0], [0.0, 20.0], [0.0, -2.0]),
        (0.0, 0.0, 0.0, [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]),
        (-4.0, -0.2, 0.5, [-10.0, 150.0], [-100.0, 0.0], [1.0, 0.0]),
    ] {
        let mut tr = targets.clone();
        tr[2] += dq;
        let mut inp = jump_input(JumpPhase::InFlight, &tr, &[0.0; 4], &[], &[]);
        inp.pitch_rate = omega;
        inp.pitch = pitch;
        inp.ground_force = f;
        inp.base_acc = acc;
        inp.base_vel = vel;
        let b = common_jump_rewards(&inp, &cfg);
        let speed = (vel[0] * vel[0] + vel[1] * vel[1]).sqrt();
        let soft = if speed < 1e-6 {
            1.0
        } else {
            let proj = (acc[0] * vel[0] + acc[1] * vel[1]) / (speed * cfg.a_max);
            (1.0 - proj.min(0.0).abs()).max(0.0)
        };
        t.term(&b, "angular_velocity", gauss(omega, s.sigma_16), w.angular_velocity);
        t.term(&b, "orientation", gauss(pitch * pitch, s.sigma_17), w.orientation);
        t.term(&b, "desired_joint_pos", gauss(dq, s.sigma_18), w.desired_joint_pos);
        t.term(&b, "ground_force", f[0] * f[0] + f[1] * f[1], w.ground_force);
        t.term(&b, "soft_impact", soft, w.soft_impact);
        t.term(&b, "catch_landing", 0.0, w.catch_landing);
        t.term(&b, "damp_landing", 0.0, w.damp_landing);
    }
    // quoted soft impact form at three points
    t.truth("soft impact braking half of a_max", (soft_impact([0.0, 25.0], [0.0, -1.0], 50.0) - 0.5).abs() < 1e-15);
    t.truth("soft impact accelerating", soft_impact([0.0, -25.0], [0.0, -1.0], 50.0) == 1.0);
    t.truth("soft impact saturates", soft_impact([0.0, 80.0], [0.0, -3.0], 50.0) == 0.0);

    // landing terms inside and outside the window
    for (since, vz, rates) in [(0.1, -0.5, [0.4, 0.2, 0.0, 0.2]), (0.3, -2.0, [2.0; 4]), (0.31, -1.0, [1.0; 4])] {
        let mut inp = jump_input(JumpPhase::Landed, &[1.0; 4], &rates, &[], &[]);
        inp.since_touchdown = Some(since);
        inp.base_vel = [0.0, vz];
        let b = common_jump_rewards(&inp, &cfg);
        let on = since <= cfg.landing_window;
        let mean = rates.iter().sum::<f64>() / 4.0;
        t.term(&b, "catch_landing", if on { (-vz).clamp(0.0, 1.0) } else { 0.0 }, w.catch_landing);
        t.term(&b, "damp_landing", if on { mean.clamp(0.0, 1.0) } else { 0.0 }, w.damp_landing);
    }
}

fn phase_gating(t: &mut Tally) {
    let cfg = RewardConfig::default();
    // desired joint positions only airborne or landed
    let tr = cfg.flight_joint_targets.clone();
    let stance = common_jump_rewards(&jump_input(JumpPhase::Stance, &tr, &[0.0; 4], &[], &[]), &cfg);
    t.truth("desired joint pos silent in stance", stance.raw("desired_joint_pos") == 0.0);
    // est tracking only in flight
    let p = JumpProgress { est_landing_error: Some([0.0, 0.0]), ..Default::default() };
    let b = horizontal_jump_rewards(&jump_input(JumpPhase::Stance, &tr, &[0.0; 4], &[], &[]), [0.0, 0.0], &p, &cfg);
    t.truth("est tracking silent in stance", b.raw("est_tracking") == 0.0);

    // apex handed out once on a scripted flight
    let mut d = ApexDetector::default();
    let script: Vec<(JumpPhase, f64)> = [(JumpPhase::Stance, 0.0), (JumpPhase::Stance, 1.0)]
        .into_iter()
        .chain((0..30).map(|k| (JumpPhase::InFlight, 2.0 - 0.15 * k as f64)))
        .chain((0..10).map(|_| (JumpPhase::Landed, 0.0)))
        .collect();
    let fires: Vec<usize> = script.iter().enumerate().filter(|(_, (ph, vz))| d.observe(*ph, *vz)).map(|(i, _)| i).collect();
    t.truth(&format!("scripted apex fired at {fires:?}"), fires == vec![2 + 14]);

    // full environment episodes from ascending flight starts
    let mut run = RunConfig::default();
    run.task = JumpMode::Vertical;
    let env_cfg = run.env_config().evaluation();
    let window = env_cfg.rewards.landing_window;
    let dt = env_cfg.rates.policy_dt();
    let mut episodes = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut env = JumpEnv::new(env_cfg, &CurriculumState::at_caps(&CurriculumConfig::default())).expect("env");
    let mut obs = vec![0.0; env.obs_dim()];
    let mut attempts = 0;
    while episodes < 5 && attempts < 200 {
        attempts += 1;
        env.reset_with(JumpCommand::vertical(0.6), RsiStage::InFlight, &mut rng, &mut obs).expect("reset");
        if env.stage() != RsiStage::InFlight || env.state().base_vel[1] <= 0.0 {
            continue;
        }
        episodes += 1;
        let mut fired = 0;
        let mut landing_ok = true;
        let mut landing_seen = false;
        let hold = vec![0.0; env.act_dim()];
        loop {
            let step = env.step(&hold, &mut rng, &mut obs).expect("step");
            let r = &env.last_rewards;
            if r.raw("jump_height") != 0.0 {
                fired += 1;
            }
            if step.done {
                // the env has already reset
                break;
            }
            let active = r.raw("catch_landing") != 0.0 || r.raw("damp_landing") != 0.0;
            let s = env.state();
            let since = (s.phase == JumpPhase::Landed).then(|| s.time - s.phase_entry_time);
            if active {
                landing_seen = true;
                landing_ok &= since.is_some_and(|x| x <= window + dt);
            }
        }
        t.truth(&format!("episode {episodes}: jump height fired {fired} times"), fired == 1);
        t.truth(&format!("episode {episodes}: landing terms outside window"), landing_ok);
        t.truth(&format!("episode {episodes}: landing terms never active"), landing_seen);
    }
    t.truth("enough ascending flight starts", episodes == 5);

    // termination order and thresholds
    let tc = TerminationConfig::default();
    let base = EpisodeStatus {
        time: 0.5,
        phase: JumpPhase::Stance,
        jumped: false,
        base_z: 0.3,
        travel: 0.0,
        predicted_error: None,
        measured_error: None,
        landing_decel: None,
        joint_crash: false,
    };
    t.truth("healthy stance continues", termination_check(&base, &tc).is_none());
    let late = EpisodeStatus { time: tc.no_jump_timeout, ..base };
    t.truth("no jump timeout", termination_check(&late, &tc) == Some(TerminationReason::NoJumpTimeout));
    let drift = EpisodeStatus { travel: tc.drift_distance + 0.01, ..base };
    t.truth("drift without jump", termination_check(&drift, &tc) == Some(TerminationReason::DriftedWithoutJump));
    let hard = EpisodeStatus { jumped: true, phase: JumpPhase::Landed, landing_decel: Some(tc.max_landing_decel + 1.0), ..base };
    t.truth("excessive deceleration", termination_check(&hard, &tc) == Some(TerminationReason::ExcessiveDeceleration));
}

fn c5_rewards() -> Outcome {
    let mut t = Tally { checked: 0, failures: Vec::new() };
    reward_formulas(&mut t);
    phase_gating(&mut t);
    let passed = t.failures.is_empty();
    let detail = if passed {
        format!("{} hand evaluations and gating checks agree", t.checked)
    } else {
        format!("{} of {} failed: {}", t.failures.len(), t.checked, t.failures.join("; "))
    };
    outcome(passed, detail)
}

fn c6_rsi() -> Outcome {
    all(&[rsi_consistency(&SimParams::default(), &CurriculumConfig::default(), CheckSizes::full().rsi_samples, SEED)])
}

fn c7_trainer() -> Outcome {
    all(&[ppo_gradient(SEED), gae_brute_force(CheckSizes::full().gae_sequences, SEED)])
}

const UPDATE_BUDGET: usize = 1500;
const MINUTES_ON_EIGHT_CORES: f64 = 45.0;

fn final_eval(cfg: &RunConfig, agent: &quadjump::ppo::rollout::Agent<f32>, range: (f64, f64)) -> EvalReport {
    let env = cfg.env_config().evaluation();
    let grid = command_grid(cfg.task, range, 9);
    evaluate(agent, &env, &grid, 10, SEED ^ 0xacce, !cfg.deterministic).expect("evaluation")
}

fn learn(task: JumpMode, range: (f64, f64)) -> (bool, String) {
    let mut cfg = RunConfig::default();
    cfg.task = task;
    cfg.ppo.max_updates = UPDATE_BUDGET;
    let mut settings = cfg.train_settings();
    settings.eval.grid_points = 9;
    settings.eval.episodes_per_command = 10;
    // stop with some margin over the criterion; the final evaluation decides
    match task {
        JumpMode::Vertical => settings.eval.stop_success = Some(0.9),
        JumpMode::Horizontal => settings.eval.stop_mean_abs_error = Some(0.04),
    }
    let t0 = Instant::now();
    let summary = match train(&settings, |_| {}) {
        Ok(s) => s,
        Err(e) => return (false, format!("training failed: {e}")),
    };
    let minutes = t0.elapsed().as_secs_f64() / 60.0;
    let report = final_eval(&cfg, &summary.agent, range);
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    // the wall-clock bound is stated for eight cores
    let in_time = cores < 8 || minutes <= MINUTES_ON_EIGHT_CORES;
    let (ok, metric) = match task {
        JumpMode::Vertical => (report.success_rate >= 0.8, format!("success {:.3} (need >= 0.8)", report.success_rate)),
        JumpMode::Horizontal => {
            (report.mean_abs_error <= 0.05, format!("mean |error| {:.4} m (need <= 0.05)", report.mean_abs_error))
        }
    };
    let name = match task {
        JumpMode::Vertical => "vertical",
        JumpMode::Horizontal => "horizontal",
    };
    (
        ok && in_time && summary.updates <= UPDATE_BUDGET,
        format!(
            "{name}: {metric} over [{}, {}] from {} jumps after {} updates, {minutes:.1} min on {cores} core(s)",
            range.0,
            range.1,
            report.rows.len(),
            summary.updates
        ),
    )
}

fn c8_learning() -> Outcome {
    let (v_ok, v) = learn(JumpMode::Vertical, (0.4, 0.8));
    println!("  {v}");
    let (h_ok, h) = learn(JumpMode::Horizontal, (0.3, 0.7));
    println!("  {h}");
    outcome(v_ok && h_ok, format!("{v}; {h}"))
}

fn short_run(dir: &std::path::Path) -> (String, String) {
    let mut cfg = RunConfig::default();
    cfg.task = JumpMode::Horizontal;
    cfg.seed = 17;
    cfg.deterministic = true;
    cfg.ppo.num_envs = 8;
    cfg.ppo.max_updates = 3;
    cfg.ppo.hidden = vec![32, 32];
    cfg.eval.every = 3;
    cfg.eval.grid_points = 3;
    cfg.eval.episodes_per_command = 2;
    cfg.output_dir = dir.to_path_buf();
    let summary = train(&cfg.train_settings(), |_| {}).expect("training");
    quadjump::io::write_training_outputs(dir, &cfg, &summary).expect("outputs");
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).expect("run file");
    (read(quadjump::io::CHECKPOINT_FILE), read(quadjump::io::EVAL_FILE))
}

fn c10_determinism() -> Outcome {
    let a = tempfile::tempdir().expect("tempdir");
    let b = tempfile::tempdir().expect("tempdir");
    let (ck_a, ev_a) = short_run(a.path());
    let (ck_b, ev_b) = short_run(b.path());
    let same_ck = ck_a == ck_b;
    let same_ev = ev_a == ev_b;
    outcome(
        same_ck && same_ev,
        format!(
            "checkpoint {} bytes identical {same_ck}, eval csv {} rows identical {same_ev}",
            ck_a.len(),
            ev_a.lines().count().saturating_sub(2)
        ),
    )
}

fn c9_curriculum() -> Outcome {
    all(&[curriculum_scripted(&CurriculumConfig::default())])
}

fn main() -> ExitCode {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 ik round trip", c1_ik),
        ("2 jacobian", c2_jacobian),
        ("3 filter safety", c3_filter),
        ("4 ballistic oracle", c4_ballistic),
        ("5 reward suite", c5_rewards),
        ("6 rsi consistency", c6_rsi),
        ("7 trainer gradient and gae", c7_trainer),
        ("8 desk-scale learning", c8_learning),
        ("9 curriculum", c9_curriculum),
        ("10 determinism", c10_determinism),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, f) in criteria {
        if filter.as_deref().is_some_and(|p| !name.contains(p)) {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        let o = f();
        println!(
            "{} criterion {name}: {} [{:.1}s]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
