//! The power-delay-profile baseline on the evaluation scenarios, under each
//! attacker activity model.
//!
//! `cargo run --release --example secbeam_baseline -- [episodes]`

use beamguard::baseline::{run_baseline, AttackActivity, BaselineConfig, BaselineSetup};
use beamguard::harness::eval::eval_scenario_ids;
use beamguard::harness::ExperimentConfig;

fn main() -> beamguard::Result<()> {
    let episodes: usize = std::env::args()
        .nth(1)
        .map_or(200, |s| s.parse().expect("episode count"));
    let cfg = ExperimentConfig::desk();
    let ids = eval_scenario_ids(episodes);
    for activity in [
        AttackActivity::Never,
        AttackActivity::Always,
        AttackActivity::WithinRange { range_m: 80.0 },
    ] {
        let config = BaselineConfig {
            attack_activity: activity,
            ..cfg.baseline
        };
        let setup = BaselineSetup {
            env: &cfg.env,
            array: &cfg.array,
            budget: &cfg.budget,
            config: &config,
            seed: cfg.seed,
        };
        let runs = run_baseline(&setup, &ids)?;
        let n = runs.len() as f64;
        let det = runs.iter().map(|r| r.metrics.detection_rate).sum::<f64>() / n;
        let sinr = runs.iter().map(|r| r.metrics.mean_sinr_db).sum::<f64>() / n;
        println!("{activity:?}: detection {det:.3}, mean SINR {sinr:.2} dB over {episodes} episodes");
    }
    Ok(())
}
