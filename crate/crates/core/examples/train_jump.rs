//! Trains a jumping policy and prints the training curve.
//!
//! cargo run --release --example train_jump -- vertical 300 256

use quadjump::env::JumpEnvConfig;
use quadjump::ppo::algo::PpoConfig;
use quadjump::ppo::train::{train, EvalSettings, TrainSettings};
use quadjump::rewards::JumpMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode: JumpMode = args.first().map_or("vertical", String::as_str).parse()?;
    let updates = args.get(1).map_or(Ok(300), |s| s.parse())?;
    let envs = args.get(2).map_or(Ok(256), |s| s.parse())?;
    let settings = TrainSettings {
        env: JumpEnvConfig::new(mode),
        ppo: PpoConfig { max_updates: updates, num_envs: envs, ..Default::default() },
        eval: EvalSettings::default(),
        parallel: true,
    };
    let t0 = std::time::Instant::now();
    let summary = train(&settings, |r| {
        let eval = r.eval_success.map_or(String::new(), |s| {
            format!("  eval success {:.2} mae {:.3}", s, r.eval_mean_abs_error.unwrap_or(f64::NAN))
        });
        println!(
            "{:5} {:7.1}s reward {:8.4} eps {:4} train {:5} range ({:.2}, {:.2}) kl {:.4} lr {:.1e} ent {:.2}{}",
            r.update,
            t0.elapsed().as_secs_f64(),
            r.mean_reward,
            r.episodes,
            r.train_success.map_or("-".into(), |s| format!("{s:.2}")),
            if mode == JumpMode::Vertical { r.vertical.0 } else { r.forward.0 },
            if mode == JumpMode::Vertical { r.vertical.1 } else { r.forward.1 },
            r.kl,
            r.learning_rate,
            r.entropy,
            eval
        );
    })?;
    if let Some(e) = &summary.last_eval {
        for (t, ok, got) in e.per_target() {
            println!("target {t:.2}: success {ok:.2} achieved {}", got.map_or("-".into(), |g| format!("{g:.3}")));
        }
    }
    Ok(())
}
