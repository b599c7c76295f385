//! One episode of agent interaction, shared by training and evaluation.

use crate::agent::{greedy_action, sample_action, ActorCritic, Transition};
use crate::curriculum::{self, OverrideMode, Phase};
use crate::environment::{self, Action, Environment, ObsMode, StepOutcome};
use crate::error::Result;
use crate::metrics::EpisodeMetrics;
use crate::seeding::{stream, Purpose};

use super::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyMode {
    Sample,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeSpec {
    /// Row index in the metrics output.
    pub episode: usize,
    /// Index of the RNG streams the episode draws from.
    pub scenario_id: u64,
    pub phase: Phase,
    pub policy: PolicyMode,
    pub obs_mode: ObsMode,
}

#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub metrics: EpisodeMetrics,
    pub transitions: Vec<Transition>,
    pub outcomes: Vec<StepOutcome>,
}

pub fn build_environment(cfg: &ExperimentConfig, mode: ObsMode) -> Result<Environment> {
    Environment::new(cfg.env, cfg.array, cfg.budget, cfg.sensing, cfg.reward, mode)
}

/// Plays one episode with `model` as a frozen policy.
///
/// The scenario geometry is the first draw of the scenario stream, which is
/// also what the baseline uses, so agent and baseline runs with the same
/// `scenario_id` face the same user and attacker.
pub fn run_episode(cfg: &ExperimentConfig, model: &ActorCritic, spec: &EpisodeSpec) -> Result<EpisodeRun> {
    let seed = cfg.seed;
    let id = spec.scenario_id;
    let mut scenario_rng = stream(seed, Purpose::Scenario, id);
    let mut noise_rng = stream(seed, Purpose::EnvNoise, id);
    let mut policy_rng = stream(seed, Purpose::Policy, id);
    let mut curriculum_rng = stream(seed, Purpose::Curriculum, id);

    let mut env = build_environment(cfg, spec.obs_mode)?;
    let nominal = environment::sample_geometry(&cfg.env, &mut scenario_rng);
    let mut observation = env.reset_to(nominal, &mut noise_rng)?;
    let plan = curriculum::plan_episode(spec.phase, cfg.env.episode_length, &cfg.curriculum, &mut curriculum_rng)?;

    let len = cfg.env.episode_length;
    let mut transitions = Vec::with_capacity(len);
    let mut outcomes = Vec::with_capacity(len);
    for step in 0..len {
        let features = observation.features(&cfg.env.scale);
        let probs = model.policy(&features)?;
        let (index, log_prob) = match spec.policy {
            PolicyMode::Sample => sample_action(&probs, &mut policy_rng)?,
            PolicyMode::Greedy => greedy_action(&probs),
        };
        let value = model.value(&features)?;
        let action = Action::try_from(index)?;
        let state = *env.state().expect("episode in progress");
        let forced = curriculum::should_override(&plan, step, &cfg.curriculum, &mut curriculum_rng)
            .then(|| curriculum::forced_action(&state));
        let outcome = env.step(action, forced.as_ref(), &mut noise_rng)?;
        let (recorded, recorded_log_prob, on_policy) = match (&forced, cfg.curriculum.override_mode) {
            (None, _) | (Some(_), OverrideMode::TreatAsOnPolicy) => (index, log_prob, true),
            (Some(_), OverrideMode::Exclude) => (index, log_prob, false),
            (Some(f), OverrideMode::ProxyAction) => {
                let proxy = curriculum::proxy_action(&state, f, cfg.env.beam_step_deg).index();
                (proxy, probs[proxy].ln(), true)
            }
        };
        transitions.push(Transition {
            observation: features,
            action: recorded,
            log_prob: recorded_log_prob,
            reward: outcome.reward * cfg.ppo.reward_scale,
            value,
            done: outcome.done,
            on_policy,
        });
        observation = outcome.observation;
        outcomes.push(outcome);
    }

    let n = outcomes.len() as f64;
    let metrics = EpisodeMetrics {
        episode: spec.episode,
        scenario_id: id,
        phase: spec.phase.label().to_owned(),
        reward: Some(outcomes.iter().map(|o| o.reward).sum()),
        detection_rate: environment::episode_detection_rate(&outcomes)?,
        mean_sinr_db: outcomes.iter().map(|o| o.info.sinr_db).sum::<f64>() / n,
        mean_effort: outcomes.iter().map(|o| o.info.effort).sum::<f64>() / n,
        override_count: outcomes.iter().filter(|o| o.info.overridden).count(),
    };
    Ok(EpisodeRun {
        metrics,
        transitions,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::EVAL_INDEX_OFFSET;
    use rand::SeedableRng;

    fn spec(phase: Phase) -> EpisodeSpec {
        EpisodeSpec {
            episode: 0,
            scenario_id: 3,
            phase,
            policy: PolicyMode::Sample,
            obs_mode: ObsMode::Train,
        }
    }

    fn model(cfg: &ExperimentConfig) -> ActorCritic {
        ActorCritic::new(&cfg.ppo.hidden_sizes, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn phase1_episode_has_five_forced_detections() {
        let cfg = ExperimentConfig::desk();
        let run = run_episode(&cfg, &model(&cfg), &spec(Phase::Phase1)).unwrap();
        assert_eq!(run.outcomes.len(), 50);
        assert_eq!(run.metrics.override_count, 5);
        let forced: Vec<_> = run.outcomes.iter().filter(|o| o.info.overridden).collect();
        assert!(forced.iter().all(|o| o.info.detected && o.reward >= 150.0));
        assert_eq!(run.transitions.iter().filter(|t| !t.on_policy).count(), 5);
        assert!(run.transitions.last().unwrap().done);
        assert!(run.transitions[..49].iter().all(|t| !t.done));
    }

    #[test]
    fn off_phase_never_overrides() {
        let cfg = ExperimentConfig::desk();
        let m = model(&cfg);
        for id in 0..20 {
            let s = EpisodeSpec {
                scenario_id: id,
                ..spec(Phase::Off)
            };
            let run = run_episode(&cfg, &m, &s).unwrap();
            assert_eq!(run.metrics.override_count, 0);
            assert!(run.transitions.iter().all(|t| t.on_policy));
        }
    }

    #[test]
    fn treat_as_on_policy_keeps_forced_steps_in_the_ratio() {
        let mut cfg = ExperimentConfig::desk();
        cfg.curriculum.override_mode = OverrideMode::TreatAsOnPolicy;
        let run = run_episode(&cfg, &model(&cfg), &spec(Phase::Phase1)).unwrap();
        assert!(run.transitions.iter().all(|t| t.on_policy));
    }

    #[test]
    fn episodes_are_reproducible_and_scenario_keyed() {
        let cfg = ExperimentConfig::desk();
        let m = model(&cfg);
        let a = run_episode(&cfg, &m, &spec(Phase::Phase2)).unwrap();
        let b = run_episode(&cfg, &m, &spec(Phase::Phase2)).unwrap();
        assert_eq!(a.metrics, b.metrics);
        let c = run_episode(
            &cfg,
            &m,
            &EpisodeSpec {
                scenario_id: EVAL_INDEX_OFFSET + 3,
                ..spec(Phase::Phase2)
            },
        )
        .unwrap();
        assert_ne!(a.metrics.mean_sinr_db, c.metrics.mean_sinr_db);
    }
}
