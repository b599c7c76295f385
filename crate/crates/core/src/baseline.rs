//! Power-delay-profile baseline in the spirit of SecBeam: a legitimate
//! line-of-sight path should be both the earliest and the strongest
//! arrival, so a later tap that is stronger than the first one is taken as
//! evidence of an amplify-and-relay attacker.
//!
//! Only the threshold rule is modeled, on synthetic two-tap profiles. The
//! beam stays on the user for the whole episode and the relay is active
//! according to [`AttackActivity`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ArrayConfig, LinkBudget, SPEED_OF_LIGHT};
use crate::environment::{self, EnvConfig, Geometry, ScenarioState};
use crate::error::{Error, Result};
use crate::metrics::EpisodeMetrics;
use crate::seeding::{self, Purpose};
use crate::sensing;

/// One arrival of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay_ns: f64,
    /// Power relative to the strongest tap (dB, ≤ 0).
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDelayProfile {
    taps: Vec<Tap>,
}

impl PowerDelayProfile {
    /// Builds a profile from absolute tap powers, normalizing so the
    /// strongest tap sits at 0 dB.
    pub fn from_absolute(mut taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidInput("power delay profile needs at least one tap".into()));
        }
        if taps.windows(2).any(|w| !(w[0].delay_ns < w[1].delay_ns)) {
            return Err(Error::InvalidInput("tap delays must be strictly increasing".into()));
        }
        let peak = taps.iter().map(|t| t.power_db).fold(f64::NEG_INFINITY, f64::max);
        for t in &mut taps {
            t.power_db -= peak;
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }
}

/// When the attacker actually relays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackActivity {
    Always,
    Never,
    /// The relay only operates while the attacker is closer than `range_m`.
    WithinRange {
        range_m: f64,
    },
}

impl AttackActivity {
    pub fn is_active(&self, attacker_range_m: f64) -> bool {
        match *self {
            AttackActivity::Always => true,
            AttackActivity::Never => false,
            AttackActivity::WithinRange { range_m } => attacker_range_m < range_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    /// Extra delay of the relayed path (ns).
    pub relay_delay_excess_ns: f64,
    /// Power of the relayed copy relative to the legitimate path (dB).
    pub relay_gain_db: f64,
    /// A later tap must exceed the first by more than this to alarm (dB).
    pub alarm_margin_db: f64,
    /// Std of the Gaussian jitter added to each tap power (dB).
    pub power_jitter_db: f64,
    pub attack_activity: AttackActivity,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            relay_delay_excess_ns: 50.0,
            relay_gain_db: 3.0,
            alarm_margin_db: 0.0,
            power_jitter_db: 1.0,
            attack_activity: AttackActivity::WithinRange { range_m: 80.0 },
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relay_delay_excess_ns > 0.0) {
            return Err(Error::Config("baseline.relay_delay_excess_ns must be > 0".into()));
        }
        if !(self.power_jitter_db >= 0.0) {
            return Err(Error::Config("baseline.power_jitter_db must be >= 0".into()));
        }
        Ok(())
    }
}

/// Synthesizes the profile seen by the user for the current geometry.
pub fn synth_pdp<R: Rng + ?Sized>(
    geometry: &Geometry,
    attack_active: bool,
    config: &BaselineConfig,
    array: &ArrayConfig,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<PowerDelayProfile> {
    let delay_ns = geometry.user_range_m / SPEED_OF_LIGHT * 1e9;
    let legit_dbm = budget.tx_power_dbm - channel::path_loss(geometry.user_range_m, array.carrier_frequency);
    let mut taps = vec![Tap {
        delay_ns,
        power_db: legit_dbm + sensing::gaussian(config.power_jitter_db, rng),
    }];
    if attack_active {
        taps.push(Tap {
            delay_ns: delay_ns + config.relay_delay_excess_ns,
            power_db: legit_dbm + config.relay_gain_db + sensing::gaussian(config.power_jitter_db, rng),
        });
    }
    PowerDelayProfile::from_absolute(taps)
}

/// Alarm iff some later tap exceeds the first arrival by more than the margin.
pub fn secbeam_detect(pdp: &PowerDelayProfile, config: &BaselineConfig) -> Result<bool> {
    let (first, rest) = pdp
        .taps
        .split_first()
        .ok_or_else(|| Error::InvalidInput("empty power delay profile".into()))?;
    Ok(rest
        .iter()
        .any(|t| t.power_db > first.power_db + config.alarm_margin_db))
}

/// Everything the baseline needs to replay the agent's scenarios.
#[derive(Debug, Clone, Copy)]
pub struct BaselineSetup<'a> {
    pub env: &'a EnvConfig,
    pub array: &'a ArrayConfig,
    pub budget: &'a LinkBudget,
    pub config: &'a BaselineConfig,
    pub seed: u64,
}

/// Per-episode record of a baseline run.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineEpisode {
    pub metrics: EpisodeMetrics,
    pub step_sinr_db: Vec<f64>,
}

/// Runs one episode on the scenario drawn from stream `scenario_id`.
pub fn run_baseline_episode(setup: &BaselineSetup<'_>, episode: usize, scenario_id: u64) -> Result<BaselineEpisode> {
    let mut scenario_rng = seeding::stream(setup.seed, Purpose::Scenario, scenario_id);
    let mut rng = seeding::stream(setup.seed, Purpose::Baseline, scenario_id);
    let nominal = environment::sample_geometry(setup.env, &mut scenario_rng);
    let state = ScenarioState::from_geometry(nominal, 0.0);
    let noise = setup.budget.noise_power_watts()?;
    let w = channel::beam_weights(state.beam_azimuth_deg, setup.array);

    let mut alarms = Vec::with_capacity(setup.env.episode_length);
    let mut sinrs = Vec::with_capacity(setup.env.episode_length);
    for _ in 0..setup.env.episode_length {
        let g = environment::jitter(&nominal, setup.env, &mut rng);
        let h = channel::channel_vector(g.user_range_m, g.user_azimuth_deg, 0.0, setup.array, setup.budget)?;
        sinrs.push(channel::sinr(&h, &w, noise)?);
        let active = setup.config.attack_activity.is_active(g.attacker_range_m);
        let pdp = synth_pdp(&g, active, setup.config, setup.array, setup.budget, &mut rng)?;
        alarms.push(secbeam_detect(&pdp, setup.config)?);
    }
    let metrics = EpisodeMetrics {
        episode,
        scenario_id,
        phase: "off".into(),
        reward: None,
        detection_rate: environment::detection_rate(alarms)?,
        mean_sinr_db: sinrs.iter().sum::<f64>() / sinrs.len() as f64,
        mean_effort: 0.0,
        override_count: 0,
    };
    Ok(BaselineEpisode {
        metrics,
        step_sinr_db: sinrs,
    })
}

/// Runs the baseline over `scenario_ids`, one episode each.
pub fn run_baseline(setup: &BaselineSetup<'_>, scenario_ids: &[u64]) -> Result<Vec<BaselineEpisode>> {
    setup.config.validate()?;
    scenario_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| run_baseline_episode(setup, i, id))
        .collect()
}
