//! Clipped-surrogate PPO losses and the update loop.
//!
//! Actor loss over a minibatch of `B` samples, `M` of which are on-policy:
//!
//! ```text
//! L_actor = −(1/M) Σ_on-policy min(ρ·Â, clip(ρ, 1−ε, 1+ε)·Â) − c_H · (1/B) Σ H(π(·|s))
//! ```
//!
//! with `ρ = π_new(a|s)/π_old(a|s)`. Critic loss is the mean squared error
//! to the GAE returns.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::environment::NUM_ACTIONS;
use crate::error::{Error, Result};

use super::adam::Adam;
use super::buffer::Batch;
use super::mlp::Mlp;
use super::{log_softmax, ActorCritic, PpoConfig};

/// Diagnostics of one actor-loss evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActorStats {
    pub surrogate: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Per-sample clipped surrogate `min(ρA, clip(ρ)A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    unclipped.min(clipped)
}

/// Actor loss and its gradient with respect to the actor parameters.
#[allow(clippy::too_many_arguments)]
pub fn actor_loss_and_grad(
    actor: &Mlp,
    observations: ArrayView2<'_, f64>,
    actions: &[usize],
    old_log_probs: &[f64],
    advantages: &[f64],
    on_policy: &[bool],
    clip_epsilon: f64,
    entropy_coef: f64,
) -> (f64, Mlp, ActorStats) {
    let b = actions.len();
    let (logits, cache) = actor.forward_cached(observations);
    let logp = log_softmax(&logits);
    let probs = logp.mapv(f64::exp);
    let m = on_policy.iter().filter(|&&x| x).count();

    let mut grad = Array2::<f64>::zeros((b, NUM_ACTIONS));
    let mut stats = ActorStats::default();
    let mut surrogate_sum = 0.0;
    let mut entropy_sum = 0.0;
    let mut clipped = 0usize;
    for i in 0..b {
        let row_p = probs.row(i);
        let row_lp = logp.row(i);
        let h: f64 = -row_p.iter().zip(row_lp).map(|(p, lp)| p * lp).sum::<f64>();
        entropy_sum += h;
        if entropy_coef > 0.0 {
            for k in 0..NUM_ACTIONS {
                grad[[i, k]] += entropy_coef / b as f64 * row_p[k] * (row_lp[k] + h);
            }
        }
        if !on_policy[i] {
            continue;
        }
        let a = actions[i];
        let log_ratio = row_lp[a] - old_log_probs[i];
        let ratio = log_ratio.exp();
        let adv = advantages[i];
        let unclipped = ratio * adv;
        let surr = clipped_surrogate(ratio, adv, clip_epsilon);
        surrogate_sum += surr;
        stats.approx_kl += -log_ratio;
        if (ratio - 1.0).abs() > clip_epsilon {
            clipped += 1;
        }
        // Gradient flows only through the unclipped branch when it is the min.
        if unclipped <= surr {
            let coeff = -unclipped / m as f64;
            for k in 0..NUM_ACTIONS {
                let indicator = if k == a { 1.0 } else { 0.0 };
                grad[[i, k]] += coeff * (indicator - row_p[k]);
            }
        }
    }
    let mean_entropy = entropy_sum / b as f64;
    let mean_surrogate = if m > 0 { surrogate_sum / m as f64 } else { 0.0 };
    if m > 0 {
        stats.approx_kl /= m as f64;
        stats.clip_fraction = clipped as f64 / m as f64;
    }
    stats.surrogate = mean_surrogate;
    stats.entropy = mean_entropy;
    let loss = -mean_surrogate - entropy_coef * mean_entropy;
    (loss, actor.backward(&cache, grad), stats)
}

/// Mean squared error of the critic and its gradient.
pub fn critic_loss_and_grad(critic: &Mlp, observations: ArrayView2<'_, f64>, returns: &[f64]) -> (f64, Mlp) {
    let b = returns.len() as f64;
    let (values, cache) = critic.forward_cached(observations);
    let mut grad = Array2::<f64>::zeros((returns.len(), 1));
    let mut loss = 0.0;
    for (i, &r) in returns.iter().enumerate() {
        let err = values[[i, 0]] - r;
        loss += err * err;
        grad[[i, 0]] = 2.0 * err / b;
    }
    (loss / b, critic.backward(&cache, grad))
}

/// Rescales `grads` so that their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut Mlp, max_norm: f64) -> f64 {
    let norm = grads.l2_norm();
    if max_norm > 0.0 && norm > max_norm {
        grads.scale(max_norm / (norm + 1e-12));
    }
    norm
}

/// Zero-mean, unit-variance advantages over the on-policy entries.
pub fn normalize_advantages(advantages: &[f64], on_policy: &[bool]) -> Vec<f64> {
    let used: Vec<f64> = advantages
        .iter()
        .zip(on_policy)
        .filter(|(_, &on)| on)
        .map(|(a, _)| *a)
        .collect();
    if used.len() < 2 {
        return advantages.to_vec();
    }
    let n = used.len() as f64;
    let mean = used.iter().sum::<f64>() / n;
    let var = used.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    advantages.iter().map(|a| (a - mean) / std).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
}

/// Networks plus optimizer state; the single writer during training.
#[derive(Debug, Clone)]
pub struct PpoTrainer {
    pub model: ActorCritic,
    pub config: PpoConfig,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl PpoTrainer {
    pub fn new(model: ActorCritic, config: PpoConfig) -> Self {
        let actor_opt = Adam::new(
            &model.actor,
            config.actor_lr,
            config.adam_beta1,
            config.adam_beta2,
            config.adam_epsilon,
        );
        let critic_opt = Adam::new(
            &model.critic,
            config.critic_lr,
            config.adam_beta1,
            config.adam_beta2,
            config.adam_epsilon,
        );
        Self {
            model,
            config,
            actor_opt,
            critic_opt,
        }
    }

    /// Runs `epochs` passes of shuffled minibatch updates over `batch`.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("PPO update on an empty batch".into()));
        }
        let cfg = &self.config;
        let advantages = if cfg.normalize_advantages {
            normalize_advantages(&batch.advantages, &batch.on_policy)
        } else {
            batch.advantages.clone()
        };
        let n = batch.len();
        let mb = cfg.minibatch_size.min(n);
        let mut order: Vec<usize> = (0..n).collect();
        let mut stats = UpdateStats::default();

        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(mb) {
                let obs = batch.observations.select(Axis(0), chunk);
                let pick = |v: &[f64]| chunk.iter().map(|&i| v[i]).collect::<Vec<_>>();
                let actions: Vec<usize> = chunk.iter().map(|&i| batch.actions[i]).collect();
                let on: Vec<bool> = chunk.iter().map(|&i| batch.on_policy[i]).collect();
                let old = pick(&batch.old_log_probs);
                let adv = pick(&advantages);
                let ret = pick(&batch.returns);

                let (a_loss, mut a_grad, a_stats) = actor_loss_and_grad(
                    &self.model.actor,
                    obs.view(),
                    &actions,
                    &old,
                    &adv,
                    &on,
                    cfg.clip_epsilon,
                    cfg.entropy_coef,
                );
                let (c_loss, mut c_grad) = critic_loss_and_grad(&self.model.critic, obs.view(), &ret);
                if !a_loss.is_finite() || !c_loss.is_finite() {
                    return Err(Error::Diverged(format!(
                        "non-finite loss (actor {a_loss}, critic {c_loss}) after {} minibatches",
                        stats.minibatches
                    )));
                }
                clip_grad_norm(&mut a_grad, cfg.max_grad_norm);
                clip_grad_norm(&mut c_grad, cfg.max_grad_norm);
                self.actor_opt.apply(&mut self.model.actor, &a_grad);
                self.critic_opt.apply(&mut self.model.critic, &c_grad);

                stats.actor_loss += a_loss;
                stats.critic_loss += c_loss;
                stats.entropy += a_stats.entropy;
                stats.approx_kl += a_stats.approx_kl;
                stats.clip_fraction += a_stats.clip_fraction;
                stats.minibatches += 1;
            }
        }
        if !self.model.actor.is_finite() || !self.model.critic.is_finite() {
            return Err(Error::Diverged("parameters became non-finite".into()));
        }
        let k = stats.minibatches as f64;
        stats.actor_loss /= k;
        stats.critic_loss /= k;
        stats.entropy /= k;
        stats.approx_kl /= k;
        stats.clip_fraction /= k;
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::buffer::Transition;
    use crate::environment::OBS_DIM;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clip_binds_on_negative_advantage() {
        assert_eq!(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
        assert_eq!(clipped_surrogate(1.5, 1.0, 0.2), 1.2);
        assert_eq!(clipped_surrogate(1.1, 2.0, 0.2), 2.2);
    }

    fn random_batch(rng: &mut ChaCha8Rng, actor: &Mlp, n: usize) -> (Array2<f64>, Vec<usize>, Vec<f64>, Vec<f64>) {
        let obs = Array2::from_shape_fn((n, OBS_DIM), |_| rng.random_range(-1.0..1.0));
        let logp = log_softmax(&actor.forward(obs.view()));
        let actions: Vec<usize> = (0..n).map(|_| rng.random_range(0..NUM_ACTIONS)).collect();
        let old: Vec<f64> = actions.iter().enumerate().map(|(i, &a)| logp[[i, a]]).collect();
        let adv: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        (obs, actions, old, adv)
    }

    #[test]
    fn ratio_one_reduces_to_vanilla_policy_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let actor = Mlp::orthogonal(&[OBS_DIM, 8, 4, NUM_ACTIONS], 1.0, &mut rng);
        let (obs, actions, old, adv) = random_batch(&mut rng, &actor, 12);
        let on = vec![true; 12];
        let (_, g, _) = actor_loss_and_grad(&actor, obs.view(), &actions, &old, &adv, &on, 0.2, 0.0);

        // Vanilla: ∇ −mean(A · log π(a|s)).
        let logits = actor.forward(obs.view());
        let probs = log_softmax(&logits).mapv(f64::exp);
        let mut dz = Array2::zeros((12, NUM_ACTIONS));
        for i in 0..12 {
            for k in 0..NUM_ACTIONS {
                let ind = if k == actions[i] { 1.0 } else { 0.0 };
                dz[[i, k]] = -adv[i] / 12.0 * (ind - probs[[i, k]]);
            }
        }
        let (_, cache) = actor.forward_cached(obs.view());
        let vanilla = actor.backward(&cache, dz);
        for (a, b) in g.params().zip(vanilla.params()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn update_reinforces_advantaged_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = ActorCritic::new(&[32, 16], &mut rng);
        let config = PpoConfig {
            batch_size: 64,
            minibatch_size: 16,
            epochs: 4,
            hidden_sizes: vec![32, 16],
            ..PpoConfig::default()
        };
        let mut trainer = PpoTrainer::new(model, config);
        let obs_rows: Vec<[f64; OBS_DIM]> = (0..64)
            .map(|_| std::array::from_fn(|_| rng.random_range(0.0..1.0)))
            .collect();
        let mean_p = |m: &ActorCritic| obs_rows.iter().map(|o| m.policy(o).unwrap()[3]).sum::<f64>() / 64.0;
        let before = mean_p(&trainer.model);
        let transitions: Vec<Transition> = obs_rows
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let a = i % NUM_ACTIONS;
                let p = trainer.model.policy(o).unwrap();
                Transition {
                    observation: *o,
                    action: a,
                    log_prob: p[a].ln(),
                    reward: if a == 3 { 1.0 } else { 0.0 },
                    value: 0.0,
                    done: true,
                    on_policy: true,
                }
            })
            .collect();
        let batch = Batch::from_transitions(&transitions, 0.0, 0.99, 0.95).unwrap();
        let stats = trainer.update(&batch, &mut rng).unwrap();
        assert!(stats.minibatches == 16);
        assert!(mean_p(&trainer.model) > before);
    }

    #[test]
    fn excluded_samples_do_not_move_the_actor_via_surrogate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let actor = Mlp::orthogonal(&[OBS_DIM, 8, NUM_ACTIONS], 1.0, &mut rng);
        let (obs, actions, old, adv) = random_batch(&mut rng, &actor, 6);
        let (_, g, _) = actor_loss_and_grad(&actor, obs.view(), &actions, &old, &adv, &[false; 6], 0.2, 0.0);
        assert!(g.params().all(|v| *v == 0.0));
    }

    #[test]
    fn empty_batch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut t = PpoTrainer::new(ActorCritic::new(&[4], &mut rng), PpoConfig::default());
        let batch = Batch::from_transitions(&[], 0.0, 0.99, 0.95).unwrap();
        assert!(t.update(&batch, &mut rng).is_err());
    }

    #[test]
    fn advantage_normalization() {
        let a = normalize_advantages(&[1.0, 2.0, 3.0, 100.0], &[true, true, true, false]);
        let used = &a[..3];
        let mean: f64 = used.iter().sum::<f64>() / 3.0;
        let var: f64 = used.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-6);
    }
}
