//! Detection rate and SINR of hand-written policies: a uniformly random
//! policy, a user-tracking policy that never probes, and a scripted hunter
//! that slews toward the estimated attacker azimuth and then maxes effort.
//!
//! `cargo run --release --example scripted_policies -- [alpha] [beta] [paper|attenuated]`

use beamguard::environment::{Action, EnvConfig, Environment, ObsMode, Observation};
use beamguard::harness::ExperimentConfig;
use beamguard::seeding::{stream, Purpose};
use beamguard::sensing::ModelVariant;
use rand::Rng;

fn hunter(obs: &Observation, effort: f64, env: &EnvConfig) -> Action {
    let diff = beamguard::channel::angle_difference(obs.est_attacker_azimuth_deg, obs.beam_azimuth_deg);
    if diff.abs() > env.beam_step_deg / 2.0 {
        if diff > 0.0 {
            Action::BeamRight
        } else {
            Action::BeamLeft
        }
    } else if effort < 1.0 {
        Action::EffortUp
    } else {
        Action::Hold
    }
}

fn main() -> beamguard::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = ExperimentConfig::desk();
    if let Some(a) = args.get(1) {
        cfg.sensing.alpha = a.parse().expect("alpha");
    }
    if let Some(b) = args.get(2) {
        cfg.sensing.beta = b.parse().expect("beta");
    }
    if let Some(v) = args.get(3) {
        cfg.sensing.model_variant = if v == "paper" {
            ModelVariant::Paper
        } else {
            ModelVariant::Attenuated
        };
    }
    let episodes = 400u64;
    for name in ["random", "hold", "hunter"] {
        let mut env = Environment::new(cfg.env, cfg.array, cfg.budget, cfg.sensing, cfg.reward, ObsMode::Eval)?;
        let (mut det, mut sinr, mut steps, mut reward) = (0usize, 0.0, 0usize, 0.0);
        for k in 0..episodes {
            let mut scen = stream(cfg.seed, Purpose::Scenario, k);
            let mut noise = stream(cfg.seed, Purpose::EnvNoise, k);
            let mut pol = stream(cfg.seed, Purpose::Policy, k);
            let g = beamguard::environment::sample_geometry(&cfg.env, &mut scen);
            let mut obs = env.reset_to(g, &mut noise)?;
            while !env.is_done() {
                let effort = env.state().map_or(0.0, |s| s.effort);
                let a = match name {
                    "random" => Action::ALL[pol.random_range(0..5)],
                    "hold" => Action::Hold,
                    _ => hunter(&obs, effort, &cfg.env),
                };
                let out = env.step(a, None, &mut noise)?;
                det += out.info.detected as usize;
                sinr += out.info.sinr_db;
                reward += out.reward;
                steps += 1;
                obs = out.observation;
            }
        }
        println!(
            "{name:>7}: detection {:.3}  mean SINR {:.1} dB  reward/episode {:.0}",
            det as f64 / steps as f64,
            sinr / steps as f64,
            reward / episodes as f64
        );
    }
    Ok(())
}
