//! From-scratch PPO actor-critic.
//!
//! Both networks are plain ReLU MLPs over the 7-entry normalized
//! observation; the actor ends in a 5-way softmax, the critic in a single
//! linear unit. Gradients are computed by hand (see [`mlp`]) and applied
//! with Adam.

pub mod adam;
pub mod buffer;
pub mod checkpoint;
pub mod gae;
pub mod mlp;
pub mod ppo;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{NUM_ACTIONS, OBS_DIM};
use crate::error::{Error, Result};

pub use buffer::{Batch, RolloutBuffer, Transition};
pub use gae::gae;
pub use mlp::Mlp;
pub use ppo::{PpoTrainer, UpdateStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpoConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub normalize_advantages: bool,
    /// Global gradient-norm clip per network; `0` disables clipping.
    pub max_grad_norm: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub hidden_sizes: Vec<usize>,
    /// Multiplier applied to environment rewards before they enter the
    /// rollout buffer. Reported metrics always use unscaled rewards.
    pub reward_scale: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs: 40,
            batch_size: 4096,
            minibatch_size: 256,
            entropy_coef: 0.01,
            normalize_advantages: true,
            max_grad_norm: 0.5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            hidden_sizes: vec![256, 128],
            reward_scale: 1.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("ppo.{m}")));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if !(self.clip_epsilon > 0.0) {
            return bad("clip_epsilon must be > 0");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be > 0");
        }
        if self.epochs == 0 || self.batch_size == 0 || self.minibatch_size == 0 {
            return bad("epochs, batch_size and minibatch_size must be > 0");
        }
        if self.minibatch_size > self.batch_size {
            return bad("minibatch_size must not exceed batch_size");
        }
        if !(self.entropy_coef >= 0.0) || !(self.max_grad_norm >= 0.0) {
            return bad("entropy_coef and max_grad_norm must be >= 0");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be a positive finite number");
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return bad("hidden_sizes must be a non-empty list of positive widths");
        }
        Ok(())
    }
}

/// Actor and critic parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
}

impl ActorCritic {
    /// Orthogonal initialization: hidden gain √2, actor head 0.01, critic head 1.
    pub fn new<R: Rng + ?Sized>(hidden: &[usize], rng: &mut R) -> Self {
        let sizes = |out: usize| {
            let mut s = vec![OBS_DIM];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        Self {
            actor: Mlp::orthogonal(&sizes(NUM_ACTIONS), 0.01, rng),
            critic: Mlp::orthogonal(&sizes(1), 1.0, rng),
        }
    }

    pub fn zeros(hidden: &[usize]) -> Self {
        let sizes = |out: usize| {
            let mut s = vec![OBS_DIM];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        Self {
            actor: Mlp::zeros(&sizes(NUM_ACTIONS)),
            critic: Mlp::zeros(&sizes(1)),
        }
    }

    pub fn policy(&self, observation: &[f64; OBS_DIM]) -> Result<[f64; NUM_ACTIONS]> {
        policy_forward(&self.actor, observation)
    }

    pub fn value(&self, observation: &[f64; OBS_DIM]) -> Result<f64> {
        value_forward(&self.critic, observation)
    }
}

fn as_row(observation: &[f64]) -> Result<ArrayView2<'_, f64>> {
    if observation.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observation"));
    }
    Ok(ArrayView1::from(observation).insert_axis(Axis(0)))
}

/// Row-wise log-softmax.
pub fn log_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// Action distribution of the actor for one normalized observation.
pub fn policy_forward(actor: &Mlp, observation: &[f64; OBS_DIM]) -> Result<[f64; NUM_ACTIONS]> {
    let logits = actor.forward(as_row(observation)?);
    let logp = log_softmax(&logits);
    let mut p = [0.0; NUM_ACTIONS];
    for (dst, lp) in p.iter_mut().zip(logp.row(0)) {
        *dst = lp.exp();
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("policy output"));
    }
    Ok(p)
}

pub fn value_forward(critic: &Mlp, observation: &[f64; OBS_DIM]) -> Result<f64> {
    let v = critic.forward(as_row(observation)?)[[0, 0]];
    if !v.is_finite() {
        return Err(Error::NonFinite("value output"));
    }
    Ok(v)
}

/// Samples an index by inverse CDF and returns it with its log-probability.
pub fn sample_action<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> Result<(usize, f64)> {
    let total: f64 = probabilities.iter().sum();
    if probabilities.is_empty()
        || probabilities.iter().any(|p| !p.is_finite() || *p < 0.0)
        || (total - 1.0).abs() > 1e-6
    {
        return Err(Error::InvalidInput(format!(
            "not a probability distribution: {probabilities:?}"
        )));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > 0.0 {
            chosen = Some(i);
            acc += p;
            if u < acc {
                break;
            }
        }
    }
    let i = chosen.expect("a positive entry exists when the total is 1");
    Ok((i, probabilities[i].ln()))
}

/// Index of the most probable action (lowest index on ties).
pub fn greedy_action(probabilities: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = i;
        }
    }
    (best, probabilities[best].ln())
}
