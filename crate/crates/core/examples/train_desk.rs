//! Trains desk-profile agents with and without the curriculum and prints
//! their evaluation summaries.
//!
//! `cargo run --release --example train_desk -- [seed] [overlay.toml]`

use std::path::PathBuf;

use beamguard::harness::{evaluate, ExperimentConfig, Profile, TrainOptions};

fn main() -> beamguard::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map_or(0, |s| s.parse().expect("seed"));
    let profile = if std::env::var("BG_PROFILE").as_deref() == Ok("paper") {
        Profile::Paper
    } else {
        Profile::Desk
    };
    let mut base = match args.get(2) {
        Some(p) => beamguard::harness::load_config(&PathBuf::from(p), Some(profile))?,
        None => ExperimentConfig::desk(),
    };
    base.seed = seed;

    for curriculum in [true, false] {
        let mut cfg = base.clone();
        cfg.curriculum.enabled = curriculum;
        let start = std::time::Instant::now();
        let out = beamguard::harness::train(&cfg, &TrainOptions::default())?;
        let secs = start.elapsed().as_secs_f64();
        for greedy in [false, true] {
            let r = evaluate(&out.model, &cfg, greedy)?.report;
            println!(
                "seed {seed} curriculum {curriculum:<5} greedy {greedy:<5} | detection {:.3} (median {:.2}, episodes {:.2}) | SINR {:.1} dB | effort near {:.2} far {:.2} | reward {:.0} | train {secs:.0}s",
                r.detection_rate.mean,
                r.detection_rate.median,
                r.episode_detection_fraction,
                r.mean_sinr_db.mean,
                r.mean_effort_near,
                r.mean_effort_far,
                r.reward.mean,
            );
        }
    }
    Ok(())
}
