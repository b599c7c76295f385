//! The episodic decision process the agent acts in.
//!
//! One episode places a legitimate user and a beam-stealing attacker around
//! the base station. Each step the agent nudges the beam azimuth or the ISAC
//! effort; the environment then perturbs both positions, recomputes the
//! user SINR and the sensing confidence, and scores the step with the
//! weighted indicator reward.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, wrap_degrees, ArrayConfig, LinkBudget};
use crate::error::{Error, Result};
use crate::sensing::{self, Confidence, Measurement, SensingParams};

/// Number of entries in [`Observation::features`].
pub const OBS_DIM: usize = 7;
/// Number of discrete actions.
pub const NUM_ACTIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub w_det: f64,
    pub w_pro: f64,
    pub w_unaware: f64,
    pub w_com: f64,
    pub conf_threshold: f64,
    pub near_threshold_m: f64,
    pub effort_threshold: f64,
    pub sinr_threshold_db: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_det: 150.0,
            w_pro: 25.0,
            w_unaware: 5.0,
            w_com: 0.5,
            conf_threshold: 0.7,
            near_threshold_m: 80.0,
            effort_threshold: 0.8,
            sinr_threshold_db: 5.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_det", self.w_det),
            ("w_pro", self.w_pro),
            ("w_unaware", self.w_unaware),
            ("w_com", self.w_com),
        ] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Config(format!("reward.{name} must be a finite value >= 0")));
            }
        }
        Ok(())
    }
}

/// Affine map `x ↦ (x − lo)/(hi − lo)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        y * (self.hi - self.lo) + self.lo
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Config(format!(
                "{name}: need finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Fixed min-max constants applied to the observation before it enters the
/// networks. Values outside the bounds map outside `[0, 1]` (no clipping).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationScale {
    pub sinr_db: Bounds,
    pub azimuth_deg: Bounds,
    pub range_m: Bounds,
}

impl Default for ObservationScale {
    fn default() -> Self {
        Self {
            sinr_db: Bounds::new(-30.0, 60.0),
            azimuth_deg: Bounds::new(-90.0, 90.0),
            range_m: Bounds::new(0.0, 200.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub episode_length: usize,
    pub user_range_m: Bounds,
    pub user_azimuth_deg: Bounds,
    pub attacker_range_m: Bounds,
    /// Magnitude of the attacker's angular offset from the user; the sign
    /// is drawn uniformly.
    pub attacker_offset_deg: Bounds,
    pub initial_effort: f64,
    pub beam_step_deg: f64,
    pub effort_step: f64,
    /// Per-step positional perturbation around the nominal scenario.
    pub jitter_range_m: f64,
    pub jitter_azimuth_deg: f64,
    pub scale: ObservationScale,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            episode_length: 50,
            user_range_m: Bounds::new(30.0, 120.0),
            user_azimuth_deg: Bounds::new(-60.0, 60.0),
            attacker_range_m: Bounds::new(20.0, 150.0),
            attacker_offset_deg: Bounds::new(15.0, 60.0),
            initial_effort: 0.5,
            beam_step_deg: 5.0,
            effort_step: 0.25,
            jitter_range_m: 0.5,
            jitter_azimuth_deg: 0.5,
            scale: ObservationScale::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episode_length == 0 {
            return Err(Error::Config("env.episode_length must be > 0".into()));
        }
        self.user_range_m.validate("env.user_range_m")?;
        self.user_azimuth_deg.validate("env.user_azimuth_deg")?;
        self.attacker_range_m.validate("env.attacker_range_m")?;
        self.attacker_offset_deg.validate("env.attacker_offset_deg")?;
        self.scale.sinr_db.validate("env.scale.sinr_db")?;
        self.scale.azimuth_deg.validate("env.scale.azimuth_deg")?;
        self.scale.range_m.validate("env.scale.range_m")?;
        if self.user_range_m.lo <= 0.0 || self.attacker_range_m.lo <= 0.0 {
            return Err(Error::Config("env ranges must be > 0".into()));
        }
        if self.attacker_offset_deg.lo < 0.0 {
            return Err(Error::Config("env.attacker_offset_deg must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.initial_effort) {
            return Err(Error::Config("env.initial_effort must lie in [0, 1]".into()));
        }
        if !(self.jitter_range_m >= 0.0) || !(self.jitter_azimuth_deg >= 0.0) {
            return Err(Error::Config("env jitter std must be >= 0".into()));
        }
        if !(self.beam_step_deg > 0.0) || !(self.effort_step > 0.0) {
            return Err(Error::Config("env action steps must be > 0".into()));
        }
        Ok(())
    }
}

/// Polar positions of user and attacker relative to the base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub user_range_m: f64,
    pub user_azimuth_deg: f64,
    pub attacker_range_m: f64,
    pub attacker_azimuth_deg: f64,
}

/// Ground truth of one episode at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioState {
    /// Positions drawn at reset; jitter is applied around these.
    pub nominal: Geometry,
    /// Positions at the current step.
    pub current: Geometry,
    pub beam_azimuth_deg: f64,
    pub effort: f64,
    pub step_index: usize,
}

impl ScenarioState {
    pub fn from_geometry(geometry: Geometry, initial_effort: f64) -> Self {
        Self {
            nominal: geometry,
            current: geometry,
            beam_azimuth_deg: wrap_degrees(geometry.user_azimuth_deg),
            effort: initial_effort.clamp(0.0, 1.0),
            step_index: 0,
        }
    }
}

/// Draws the nominal geometry of an episode.
pub fn sample_geometry<R: Rng + ?Sized>(cfg: &EnvConfig, rng: &mut R) -> Geometry {
    let uniform = |b: Bounds, rng: &mut R| {
        if b.lo == b.hi {
            b.lo
        } else {
            rng.random_range(b.lo..b.hi)
        }
    };
    let user_range_m = uniform(cfg.user_range_m, rng);
    let user_azimuth_deg = uniform(cfg.user_azimuth_deg, rng);
    let attacker_range_m = uniform(cfg.attacker_range_m, rng);
    let offset = uniform(cfg.attacker_offset_deg, rng);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    Geometry {
        user_range_m,
        user_azimuth_deg,
        attacker_range_m,
        attacker_azimuth_deg: wrap_degrees(user_azimuth_deg + sign * offset),
    }
}

/// Perturbs the nominal positions with independent zero-mean Gaussian noise.
pub fn jitter<R: Rng + ?Sized>(nominal: &Geometry, cfg: &EnvConfig, rng: &mut R) -> Geometry {
    let r = cfg.jitter_range_m;
    let a = cfg.jitter_azimuth_deg;
    Geometry {
        user_range_m: (nominal.user_range_m + sensing::gaussian(r, rng)).max(1.0),
        user_azimuth_deg: wrap_degrees(nominal.user_azimuth_deg + sensing::gaussian(a, rng)),
        attacker_range_m: (nominal.attacker_range_m + sensing::gaussian(r, rng)).max(1.0),
        attacker_azimuth_deg: wrap_degrees(nominal.attacker_azimuth_deg + sensing::gaussian(a, rng)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    BeamLeft = 0,
    BeamRight = 1,
    EffortUp = 2,
    EffortDown = 3,
    Hold = 4,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::BeamLeft,
        Action::BeamRight,
        Action::EffortUp,
        Action::EffortDown,
        Action::Hold,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<usize> for Action {
    type Error = Error;

    fn try_from(index: usize) -> Result<Self> {
        Action::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("action index {index} out of range 0..{NUM_ACTIONS}")))
    }
}

/// Environment-level bypass that replaces the agent's action for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcedAction {
    /// Absolute beam azimuth to set.
    pub beam_azimuth_deg: f64,
    pub effort: f64,
    /// Whether the step counts as a detection regardless of confidence.
    pub force_detection: bool,
}

/// Applies a discrete action and advances the step counter.
pub fn apply_action(state: &ScenarioState, action: Action, cfg: &EnvConfig) -> ScenarioState {
    let mut next = *state;
    match action {
        Action::BeamLeft => next.beam_azimuth_deg -= cfg.beam_step_deg,
        Action::BeamRight => next.beam_azimuth_deg += cfg.beam_step_deg,
        Action::EffortUp => next.effort += cfg.effort_step,
        Action::EffortDown => next.effort -= cfg.effort_step,
        Action::Hold => {}
    }
    next.beam_azimuth_deg = wrap_degrees(next.beam_azimuth_deg);
    next.effort = next.effort.clamp(0.0, 1.0);
    next.step_index += 1;
    next
}

pub fn apply_override(state: &ScenarioState, forced: &ForcedAction) -> ScenarioState {
    ScenarioState {
        beam_azimuth_deg: wrap_degrees(forced.beam_azimuth_deg),
        effort: forced.effort.clamp(0.0, 1.0),
        step_index: state.step_index + 1,
        ..*state
    }
}

/// Weighted indicator reward. All comparisons are strict, so a confidence
/// of exactly the threshold earns neither the detection bonus nor the
/// unawareness penalty.
pub fn compute_reward(conf: f64, true_range_m: f64, effort: f64, sinr_db: f64, cfg: &RewardConfig) -> f64 {
    let near = true_range_m < cfg.near_threshold_m;
    let mut r = 0.0;
    if conf > cfg.conf_threshold {
        r += cfg.w_det;
    }
    if near && effort > cfg.effort_threshold {
        r += cfg.w_pro;
    }
    if near && conf < cfg.conf_threshold {
        r -= cfg.w_unaware;
    }
    if sinr_db > cfg.sinr_threshold_db {
        r += cfg.w_com;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsMode {
    /// Ground-truth attacker position is part of the state.
    Train,
    /// Ground-truth slots carry the estimates instead.
    Eval,
}

/// The agent's view of one step, in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub sinr_db: f64,
    pub beam_azimuth_deg: f64,
    pub est_attacker_azimuth_deg: f64,
    pub est_attacker_range_m: f64,
    pub confidence: f64,
    pub true_attacker_azimuth_deg: f64,
    pub true_attacker_range_m: f64,
}

impl Observation {
    /// Normalized feature vector fed to the networks.
    pub fn features(&self, scale: &ObservationScale) -> [f64; OBS_DIM] {
        [
            scale.sinr_db.normalize(self.sinr_db),
            scale.azimuth_deg.normalize(self.beam_azimuth_deg),
            scale.azimuth_deg.normalize(self.est_attacker_azimuth_deg),
            scale.range_m.normalize(self.est_attacker_range_m),
            self.confidence,
            scale.azimuth_deg.normalize(self.true_attacker_azimuth_deg),
            scale.range_m.normalize(self.true_attacker_range_m),
        ]
    }

    pub fn from_features(f: &[f64; OBS_DIM], scale: &ObservationScale) -> Self {
        Self {
            sinr_db: scale.sinr_db.denormalize(f[0]),
            beam_azimuth_deg: scale.azimuth_deg.denormalize(f[1]),
            est_attacker_azimuth_deg: scale.azimuth_deg.denormalize(f[2]),
            est_attacker_range_m: scale.range_m.denormalize(f[3]),
            confidence: f[4],
            true_attacker_azimuth_deg: scale.azimuth_deg.denormalize(f[5]),
            true_attacker_range_m: scale.range_m.denormalize(f[6]),
        }
    }
}

pub fn assemble_state(
    state: &ScenarioState,
    measurement: &Measurement,
    conf: Confidence,
    sinr_db: f64,
    mode: ObsMode,
) -> Observation {
    let (true_az, true_range) = match mode {
        ObsMode::Train => (state.current.attacker_azimuth_deg, state.current.attacker_range_m),
        ObsMode::Eval => (measurement.est_azimuth_deg, measurement.est_range_m),
    };
    Observation {
        sinr_db,
        beam_azimuth_deg: state.beam_azimuth_deg,
        est_attacker_azimuth_deg: measurement.est_azimuth_deg,
        est_attacker_range_m: measurement.est_range_m,
        confidence: conf.value(),
        true_attacker_azimuth_deg: true_az,
        true_attacker_range_m: true_range,
    }
}

/// Diagnostics attached to every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step_index: usize,
    /// Action chosen by the agent (executed unless `overridden`).
    pub action: Action,
    pub detected: bool,
    pub overridden: bool,
    pub sinr_db: f64,
    pub confidence: f64,
    pub effort: f64,
    pub attacker_range_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// A single-threaded environment instance.
#[derive(Debug, Clone)]
pub struct Environment {
    pub env: EnvConfig,
    pub array: ArrayConfig,
    pub budget: LinkBudget,
    pub sensing: SensingParams,
    pub reward: RewardConfig,
    pub mode: ObsMode,
    noise_watts: f64,
    state: Option<ScenarioState>,
    done: bool,
}

impl Environment {
    pub fn new(
        env: EnvConfig,
        array: ArrayConfig,
        budget: LinkBudget,
        sensing: SensingParams,
        reward: RewardConfig,
        mode: ObsMode,
    ) -> Result<Self> {
        env.validate()?;
        array.validate()?;
        budget.validate()?;
        sensing.validate()?;
        reward.validate()?;
        Ok(Self {
            env,
            array,
            budget,
            sensing,
            reward,
            mode,
            noise_watts: budget.noise_power_watts()?,
            state: None,
            done: true,
        })
    }

    pub fn state(&self) -> Option<&ScenarioState> {
        self.state.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn noise_watts(&self) -> f64 {
        self.noise_watts
    }

    /// Starts an episode from a freshly sampled scenario.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Observation> {
        let geometry = sample_geometry(&self.env, rng);
        self.reset_to(geometry, rng)
    }

    /// Starts an episode from the given nominal geometry. `rng` is used only
    /// for the initial measurement.
    pub fn reset_to<R: Rng + ?Sized>(&mut self, geometry: Geometry, rng: &mut R) -> Result<Observation> {
        let state = ScenarioState::from_geometry(geometry, self.env.initial_effort);
        let sinr_db = self.user_sinr(&state)?;
        let m = sensing::measure(
            state.current.attacker_range_m,
            state.current.attacker_azimuth_deg,
            &self.sensing,
            rng,
        );
        let conf = self.confidence_of(&state);
        self.state = Some(state);
        self.done = false;
        Ok(assemble_state(&state, &m, conf, sinr_db, self.mode))
    }

    /// SINR of the user for the state's beam and current positions.
    pub fn user_sinr(&self, state: &ScenarioState) -> Result<f64> {
        let h = channel::channel_vector(
            state.current.user_range_m,
            state.current.user_azimuth_deg,
            0.0,
            &self.array,
            &self.budget,
        )?;
        let w = channel::beam_weights(state.beam_azimuth_deg, &self.array);
        channel::sinr(&h, &w, self.noise_watts)
    }

    fn confidence_of(&self, state: &ScenarioState) -> Confidence {
        sensing::confidence(
            state.effort,
            state.current.attacker_range_m,
            state.beam_azimuth_deg,
            state.current.attacker_azimuth_deg,
            &self.sensing,
        )
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        action: Action,
        forced: Option<&ForcedAction>,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage(
                "step called on a finished or unstarted episode; call reset".into(),
            ));
        }
        let state = self.state.as_ref().expect("state present while not done");
        let mut next = match forced {
            Some(f) => apply_override(state, f),
            None => apply_action(state, action, &self.env),
        };
        next.current = jitter(&next.nominal, &self.env, rng);

        let sinr_db = self.user_sinr(&next)?;
        let m = sensing::measure(
            next.current.attacker_range_m,
            next.current.attacker_azimuth_deg,
            &self.sensing,
            rng,
        );
        let forced_detection = forced.is_some_and(|f| f.force_detection);
        let conf = if forced_detection {
            Confidence::new(1.0)
        } else {
            self.confidence_of(&next)
        };
        let detected = forced_detection || conf.value() > self.reward.conf_threshold;
        let reward = compute_reward(
            conf.value(),
            next.current.attacker_range_m,
            next.effort,
            sinr_db,
            &self.reward,
        );
        let done = next.step_index >= self.env.episode_length;
        let observation = assemble_state(&next, &m, conf, sinr_db, self.mode);
        let info = StepInfo {
            step_index: next.step_index - 1,
            action,
            detected,
            overridden: forced.is_some(),
            sinr_db,
            confidence: conf.value(),
            effort: next.effort,
            attacker_range_m: next.current.attacker_range_m,
        };
        self.state = Some(next);
        self.done = done;
        Ok(StepOutcome {
            observation,
            reward,
            done,
            info,
        })
    }
}

/// Fraction of steps in an episode that were detections.
pub fn episode_detection_rate(outcomes: &[StepOutcome]) -> Result<f64> {
    detection_rate(outcomes.iter().map(|o| o.info.detected))
}

pub fn detection_rate(flags: impl IntoIterator<Item = bool>) -> Result<f64> {
    let (mut hits, mut n) = (0usize, 0usize);
    for f in flags {
        n += 1;
        hits += f as usize;
    }
    if n == 0 {
        return Err(Error::InvalidInput("detection rate of an empty episode".into()));
    }
    Ok(hits as f64 / n as f64)
}

/// One line of a JSONL episode trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step_index: usize,
    pub action: usize,
    #[serde(rename = "override")]
    pub overridden: bool,
    pub sinr_db: f64,
    pub conf: f64,
    pub reward: f64,
    pub detection: bool,
}

impl From<&StepOutcome> for TraceRecord {
    fn from(o: &StepOutcome) -> Self {
        Self {
            step_index: o.info.step_index,
            action: o.info.action.index(),
            overridden: o.info.overridden,
            sinr_db: o.info.sinr_db,
            conf: o.info.confidence,
            reward: o.reward,
            detection: o.info.detected,
        }
    }
}

pub fn write_trace<W: Write>(mut out: W, outcomes: &[StepOutcome]) -> Result<()> {
    for o in outcomes {
        serde_json::to_writer(&mut out, &TraceRecord::from(o))?;
        out.write_all(b"\n").map_err(|e| Error::io("<trace>", e))?;
    }
    Ok(())
}
