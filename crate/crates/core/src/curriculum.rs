//! Two-phase forced-success curriculum.
//!
//! Phase 1 overrides the agent at a fixed number of distinct random steps
//! per episode with the forced-success action (beam on the attacker's true
//! azimuth, full effort, detection guaranteed). Phase 2 replays the same
//! action with a small independent probability at every step.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::angle_difference;
use crate::environment::{Action, ForcedAction, ScenarioState};
use crate::error::{Error, Result};

/// How overridden steps enter the policy-gradient term of the PPO loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverrideMode {
    /// Override steps train the critic only.
    Exclude,
    /// The action the policy sampled (but did not execute) is kept in the
    /// ratio as if it had been executed.
    TreatAsOnPolicy,
    /// The step is credited to the discrete action that moves the state
    /// toward the forced payload (see [`proxy_action`]) and kept in the ratio.
    ProxyAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumConfig {
    pub enabled: bool,
    pub phase1_episodes: usize,
    pub forced_steps_per_episode: usize,
    pub phase2_override_prob: f64,
    pub override_mode: OverrideMode,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            phase1_episodes: 1500,
            forced_steps_per_episode: 5,
            phase2_override_prob: 0.10,
            override_mode: OverrideMode::Exclude,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self, episode_length: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.phase2_override_prob) {
            return Err(Error::Config(
                "curriculum.phase2_override_prob must lie in [0, 1]".into(),
            ));
        }
        if self.enabled && self.forced_steps_per_episode > episode_length {
            return Err(Error::Config(format!(
                "curriculum.forced_steps_per_episode ({}) exceeds env.episode_length ({episode_length})",
                self.forced_steps_per_episode
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Phase1,
    Phase2,
    Off,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Phase1 => "phase1",
            Phase::Phase2 => "phase2",
            Phase::Off => "off",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverridePlan {
    pub phase: Phase,
    pub forced_steps: BTreeSet<usize>,
}

pub fn phase_of(episode_index: usize, config: &CurriculumConfig) -> Phase {
    if !config.enabled {
        Phase::Off
    } else if episode_index < config.phase1_episodes {
        Phase::Phase1
    } else {
        Phase::Phase2
    }
}

/// Picks the forced steps of one episode: distinct indices drawn uniformly
/// without replacement in phase 1, none otherwise.
pub fn plan_episode<R: Rng + ?Sized>(
    phase: Phase,
    episode_length: usize,
    config: &CurriculumConfig,
    rng: &mut R,
) -> Result<OverridePlan> {
    let k = config.forced_steps_per_episode;
    let forced_steps = match phase {
        Phase::Phase1 => {
            if episode_length < k {
                return Err(Error::Config(format!(
                    "episode length {episode_length} cannot hold {k} forced steps"
                )));
            }
            rand::seq::index::sample(rng, episode_length, k).into_iter().collect()
        }
        Phase::Phase2 | Phase::Off => BTreeSet::new(),
    };
    Ok(OverridePlan { phase, forced_steps })
}

pub fn should_override<R: Rng + ?Sized>(
    plan: &OverridePlan,
    step_index: usize,
    config: &CurriculumConfig,
    rng: &mut R,
) -> bool {
    match plan.phase {
        Phase::Phase1 => plan.forced_steps.contains(&step_index),
        Phase::Phase2 => rng.random_bool(config.phase2_override_prob),
        Phase::Off => false,
    }
}

/// Beam on the attacker's true azimuth with full effort and a guaranteed
/// detection.
pub fn forced_action(scenario: &ScenarioState) -> ForcedAction {
    ForcedAction {
        beam_azimuth_deg: scenario.current.attacker_azimuth_deg,
        effort: 1.0,
        force_detection: true,
    }
}

/// The discrete action closest to executing `forced` from `scenario`: a
/// beam step toward the forced azimuth while it is more than half a step
/// away, then effort up until it reaches the forced level, then hold.
pub fn proxy_action(scenario: &ScenarioState, forced: &ForcedAction, beam_step_deg: f64) -> Action {
    let diff = angle_difference(forced.beam_azimuth_deg, scenario.beam_azimuth_deg);
    if diff.abs() > beam_step_deg / 2.0 {
        if diff > 0.0 {
            Action::BeamRight
        } else {
            Action::BeamLeft
        }
    } else if scenario.effort < forced.effort {
        Action::EffortUp
    } else {
        Action::Hold
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Geometry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phase_boundaries() {
        let c = CurriculumConfig::default();
        assert_eq!(phase_of(0, &c), Phase::Phase1);
        assert_eq!(phase_of(1499, &c), Phase::Phase1);
        assert_eq!(phase_of(1500, &c), Phase::Phase2);
        let off = CurriculumConfig { enabled: false, ..c };
        assert!((0..3000).all(|i| phase_of(i, &off) == Phase::Off));
    }

    #[test]
    fn phase1_plans_are_distinct_and_in_range() {
        let c = CurriculumConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = plan_episode(Phase::Phase1, 50, &c, &mut rng).unwrap();
            assert_eq!(p.forced_steps.len(), 5);
            assert!(p.forced_steps.iter().all(|&i| i < 50));
        }
        assert!(plan_episode(Phase::Phase2, 50, &c, &mut rng)
            .unwrap()
            .forced_steps
            .is_empty());
        assert!(plan_episode(Phase::Off, 50, &c, &mut rng)
            .unwrap()
            .forced_steps
            .is_empty());
        assert!(matches!(
            plan_episode(Phase::Phase1, 4, &c, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn phase1_indices_cover_uniformly() {
        let c = CurriculumConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 50];
        let plans = 10_000;
        for _ in 0..plans {
            for i in plan_episode(Phase::Phase1, 50, &c, &mut rng).unwrap().forced_steps {
                counts[i] += 1;
            }
        }
        // Each index is picked with probability 5/50.
        let expected = plans as f64 * 5.0 / 50.0;
        let chi2: f64 = counts.iter().map(|&n| (n as f64 - expected).powi(2) / expected).sum();
        // 49 degrees of freedom; 99.9th percentile is about 85.4.
        assert!(chi2 < 85.4, "chi2 {chi2}");
        for n in counts {
            assert!((n as f64 / expected - 1.0).abs() < 0.10, "{n}");
        }
    }

    #[test]
    fn override_decisions() {
        let c = CurriculumConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let plan = OverridePlan {
            phase: Phase::Phase1,
            forced_steps: [2, 9].into_iter().collect(),
        };
        assert!(should_override(&plan, 9, &c, &mut rng));
        assert!(!should_override(&plan, 3, &c, &mut rng));
        let off = OverridePlan {
            phase: Phase::Off,
            forced_steps: BTreeSet::new(),
        };
        assert!((0..1000).all(|i| !should_override(&off, i % 50, &c, &mut rng)));
        let p2 = OverridePlan {
            phase: Phase::Phase2,
            forced_steps: BTreeSet::new(),
        };
        let hits = (0..100_000)
            .filter(|&i| should_override(&p2, i % 50, &c, &mut rng))
            .count();
        assert!((hits as f64 / 1e5 - 0.10).abs() < 0.01);
    }

    #[test]
    fn proxy_action_points_toward_the_payload() {
        let g = Geometry {
            user_range_m: 40.0,
            user_azimuth_deg: 0.0,
            attacker_range_m: 60.0,
            attacker_azimuth_deg: -20.0,
        };
        let mut s = ScenarioState::from_geometry(g, 0.5);
        let f = forced_action(&s);
        assert_eq!(proxy_action(&s, &f, 5.0), Action::BeamLeft);
        s.beam_azimuth_deg = -40.0;
        assert_eq!(proxy_action(&s, &f, 5.0), Action::BeamRight);
        s.beam_azimuth_deg = -22.0;
        assert_eq!(proxy_action(&s, &f, 5.0), Action::EffortUp);
        s.effort = 1.0;
        assert_eq!(proxy_action(&s, &f, 5.0), Action::Hold);
        s.beam_azimuth_deg = 175.0;
        let wrap = ForcedAction {
            beam_azimuth_deg: -175.0,
            ..f
        };
        assert_eq!(proxy_action(&s, &wrap, 5.0), Action::BeamRight);
    }

    #[test]
    fn forced_payload_tracks_attacker() {
        let g = Geometry {
            user_range_m: 40.0,
            user_azimuth_deg: 0.0,
            attacker_range_m: 60.0,
            attacker_azimuth_deg: 37.0,
        };
        let f = forced_action(&ScenarioState::from_geometry(g, 0.5));
        assert_eq!(f.beam_azimuth_deg, 37.0);
        assert_eq!(f.effort, 1.0);
        assert!(f.force_detection);
    }
}
