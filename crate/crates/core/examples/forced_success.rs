//! One phase-1 curriculum episode with a uniformly random policy: the five
//! planned steps are overridden with the forced-success payload.
//!
//! `cargo run --example forced_success -- [seed]`

use beamguard::curriculum::{forced_action, plan_episode, should_override, Phase};
use beamguard::environment::{Action, ObsMode};
use beamguard::harness::rollout::build_environment;
use beamguard::harness::ExperimentConfig;
use beamguard::seeding::{stream, Purpose};
use rand::Rng;

fn main() -> beamguard::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let cfg = ExperimentConfig::desk();
    let mut env = build_environment(&cfg, ObsMode::Train)?;
    let mut rng = stream(seed, Purpose::EnvNoise, 0);
    let mut plan_rng = stream(seed, Purpose::Curriculum, 0);
    env.reset(&mut rng)?;
    let plan = plan_episode(Phase::Phase1, cfg.env.episode_length, &cfg.curriculum, &mut plan_rng)?;
    println!("forced steps: {:?}", plan.forced_steps);

    let mut total = 0.0;
    let mut detections = 0;
    for t in 0..cfg.env.episode_length {
        let action = Action::ALL[rng.random_range(0..Action::ALL.len())];
        let forced = should_override(&plan, t, &cfg.curriculum, &mut plan_rng)
            .then(|| forced_action(env.state().expect("episode running")));
        let out = env.step(action, forced.as_ref(), &mut rng)?;
        total += out.reward;
        detections += out.info.detected as usize;
        if out.info.overridden || out.info.detected {
            println!(
                "step {t:>2} {:<10} conf {:.3} effort {:.2} reward {:>6.1}",
                if out.info.overridden { "forced" } else { "organic" },
                out.info.confidence,
                out.info.effort,
                out.reward
            );
        }
    }
    println!(
        "episode reward {total:.1}, detections {detections}/{}",
        cfg.env.episode_length
    );
    Ok(())
}
