use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quadjump::check::{run_checks, CheckSizes};
use quadjump::config::RunConfig;
use quadjump::io::{self, CHECKPOINT_FILE, CURVES_FILE, EVAL_FILE};
use quadjump::ppo::checkpoint::Checkpoint;
use quadjump::ppo::train::{command_grid, evaluate, train};
use quadjump::rewards::JumpMode;

#[derive(Parser)]
#[command(name = "quadjump", about = "Train and evaluate planar quadruped jumping policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write the run directory.
    Train {
        #[command(flatten)]
        common: Common,
        /// Override ppo.max_updates.
        #[arg(long)]
        updates: Option<usize>,
    },
    /// Evaluate a checkpoint on a command grid.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Defaults to <out>/checkpoint.json.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Target range "lo,hi"; defaults to the curriculum caps.
        #[arg(long, value_parser = parse_range)]
        range: Option<(f64, f64)>,
        /// Grid points across the range.
        #[arg(long)]
        points: Option<usize>,
        /// Total jumps, spread evenly over the grid.
        #[arg(long)]
        jumps: Option<usize>,
    },
    /// Run the fast self-check suite.
    Check {
        #[command(flatten)]
        common: Common,
        /// Use the full sample counts.
        #[arg(long)]
        full: bool,
    },
    /// Render eval.svg and curves.svg from a run directory.
    Plot {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel environments.
    #[arg(long)]
    envs: Option<usize>,
    /// Step environments on one thread.
    #[arg(long)]
    deterministic: bool,
    #[arg(long, value_parser = parse_task)]
    task: Option<JumpMode>,
}

fn parse_task(s: &str) -> Result<JumpMode, String> {
    s.parse()
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo <= hi) {
        return Err("need lo <= hi".into());
    }
    Ok((lo, hi))
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load_config(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(n) = c.envs {
        cfg.ppo.num_envs = n;
    }
    if let Some(t) = c.task {
        cfg.task = t;
    }
    cfg.deterministic |= c.deterministic;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn mode_name(m: JumpMode) -> &'static str {
    match m {
        JumpMode::Vertical => "vertical",
        JumpMode::Horizontal => "horizontal",
    }
}

fn cmd_train(mut cfg: RunConfig, updates: Option<usize>) -> Result<(), Failure> {
    if let Some(u) = updates {
        cfg.ppo.max_updates = u;
        cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    }
    let settings = cfg.train_settings();
    println!(
        "training {} with {} envs for up to {} updates, seed {}",
        mode_name(cfg.task),
        cfg.ppo.num_envs,
        cfg.ppo.max_updates,
        cfg.seed
    );
    let t0 = std::time::Instant::now();
    let summary = train(&settings, |r| {
        if let Some(s) = r.eval_success {
            println!(
                "update {:5}  {:7.1}s  reward {:.4}  eval success {:.3}  mean |error| {:.4} m",
                r.update + 1,
                t0.elapsed().as_secs_f64(),
                r.mean_reward,
                s,
                r.eval_mean_abs_error.unwrap_or(f64::NAN)
            );
        }
    })
    .map_err(runtime)?;
    let files = io::write_training_outputs(&cfg.output_dir, &cfg, &summary).map_err(runtime)?;
    println!("{} updates{}", summary.updates, if summary.stopped_early { " (stopped early)" } else { "" });
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_eval(
    cfg: RunConfig,
    checkpoint: Option<PathBuf>,
    range: Option<(f64, f64)>,
    points: Option<usize>,
    jumps: Option<usize>,
) -> Result<(), Failure> {
    let path = checkpoint.unwrap_or_else(|| cfg.output_dir.join(CHECKPOINT_FILE));
    let ck = Checkpoint::load(&path).map_err(runtime)?;
    if ck.mode != cfg.task {
        return Err(Failure::Config(format!(
            "checkpoint is for the {} task but the config selects {}",
            mode_name(ck.mode),
            mode_name(cfg.task)
        )));
    }
    let agent = ck.agent().map_err(runtime)?;
    let env = cfg.env_config();
    let caps = match cfg.task {
        JumpMode::Vertical => env.curriculum.vertical_caps,
        JumpMode::Horizontal => env.curriculum.forward_caps,
    };
    let points = points.unwrap_or(cfg.eval.grid_points).max(1);
    let per = jumps.map_or(cfg.eval.episodes_per_command, |j| j.div_ceil(points)).max(1);
    let grid = command_grid(cfg.task, range.unwrap_or(caps), points);
    let report = evaluate(&agent, &env.evaluation(), &grid, per, cfg.seed, !cfg.deterministic).map_err(runtime)?;
    println!("target    success  mean achieved");
    for (t, ok, got) in report.per_target() {
        let flag = if t < caps.0 - 1e-9 || t > caps.1 + 1e-9 { "  (outside training range)" } else { "" };
        println!("{t:6.3}    {ok:6.3}   {}{flag}", got.map_or("     -".into(), |g| format!("{g:7.4}")));
    }
    println!(
        "{} jumps: success {:.3}, mean |error| {:.4} m",
        report.rows.len(),
        report.success_rate,
        report.mean_abs_error
    );
    let out = cfg.output_dir.join(EVAL_FILE);
    io::write_atomic(&out, report.csv().as_bytes()).map_err(runtime)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_check(cfg: RunConfig, full: bool) -> Result<(), Failure> {
    let sizes = if full { CheckSizes::full() } else { CheckSizes::quick() };
    let results = run_checks(&cfg.sim_params(), &cfg.filter(), &sizes, cfg.seed);
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} checks failed", results.len())));
    }
    println!("all {} checks passed", results.len());
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))
}

fn cmd_plot(cfg: RunConfig) -> Result<(), Failure> {
    let dir = &cfg.output_dir;
    let mut any = false;
    let eval = dir.join(EVAL_FILE);
    if eval.exists() {
        let pts = io::read_eval_csv(&read(&eval)?).map_err(|e| Failure::Runtime(format!("{}: {e}", eval.display())))?;
        let out = dir.join("eval.svg");
        io::write_atomic(&out, io::eval_svg(&pts).as_bytes()).map_err(runtime)?;
        println!("wrote {}", out.display());
        any = true;
    }
    let curves = dir.join(CURVES_FILE);
    if curves.exists() {
        let pts = io::read_curves_csv(&read(&curves)?).map_err(|e| Failure::Runtime(format!("{}: {e}", curves.display())))?;
        let out = dir.join("curves.svg");
        io::write_atomic(&out, io::curves_svg(&pts).as_bytes()).map_err(runtime)?;
        println!("wrote {}", out.display());
        any = true;
    }
    if !any {
        return Err(Failure::Runtime(format!("no {EVAL_FILE} or {CURVES_FILE} in {}", dir.display())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { common, updates } => load_config(&common).and_then(|c| cmd_train(c, updates)),
        Command::Eval { common, checkpoint, range, points, jumps } => {
            load_config(&common).and_then(|c| cmd_eval(c, checkpoint, range, points, jumps))
        }
        Command::Check { common, full } => load_config(&common).and_then(|c| cmd_check(c, full)),
        Command::Plot { common } => load_config(&common).and_then(cmd_plot),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(m) | Failure::Runtime(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
