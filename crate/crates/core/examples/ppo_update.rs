//! GAE on a hand-sized trajectory, a finite-difference check of the actor
//! gradient, and a few PPO updates on a toy bandit that rewards one action.
//!
//! `cargo run --release --example ppo_update`

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use beamguard::agent::ppo::actor_loss_and_grad;
use beamguard::agent::{gae, ActorCritic, Batch, PpoConfig, PpoTrainer, Transition};
use beamguard::environment::{NUM_ACTIONS, OBS_DIM};

fn main() -> beamguard::Result<()> {
    let (adv, ret) = gae(&[1.0, 1.0], &[0.0, 0.0], 0.0, &[false, false], 0.99, 0.95)?;
    println!("GAE r=[1,1] V=[0,0]: advantages {adv:?}, returns {ret:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = ActorCritic::new(&[16, 8], &mut rng);
    let obs = Array2::from_shape_fn((6, OBS_DIM), |_| rng.random_range(0.0..1.0));
    let actions: Vec<usize> = (0..6).map(|i| i % NUM_ACTIONS).collect();
    let old = vec![(1.0 / NUM_ACTIONS as f64).ln(); 6];
    let advs = vec![1.0, -0.5, 0.3, 2.0, -1.0, 0.7];
    let on = vec![true; 6];
    let loss = |m: &beamguard::agent::Mlp| actor_loss_and_grad(m, obs.view(), &actions, &old, &advs, &on, 0.2, 0.01);
    let (_, grad, _) = loss(&model.actor);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for (i, g) in grad.params().enumerate().step_by(37) {
        let mut plus = model.actor.clone();
        *plus.params_mut().nth(i).expect("index") += h;
        let mut minus = model.actor.clone();
        *minus.params_mut().nth(i).expect("index") -= h;
        let fd = (loss(&plus).0 - loss(&minus).0) / (2.0 * h);
        worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-8));
    }
    println!("actor gradient vs finite differences: max relative error {worst:.2e}");

    // Bandit: action 2 pays 1, everything else 0.
    let config = PpoConfig {
        hidden_sizes: vec![16, 8],
        batch_size: 256,
        minibatch_size: 64,
        epochs: 4,
        ..PpoConfig::default()
    };
    let mut trainer = PpoTrainer::new(model, config);
    let state = [0.5; OBS_DIM];
    for round in 0..5 {
        let probs = trainer.model.policy(&state)?;
        println!("round {round}: P(action 2) = {:.3}", probs[2]);
        let transitions: Vec<Transition> = (0..256)
            .map(|_| {
                let (a, log_prob) = beamguard::agent::sample_action(&probs, &mut rng).expect("valid distribution");
                Transition {
                    observation: state,
                    action: a,
                    log_prob,
                    reward: (a == 2) as u8 as f64,
                    value: 0.0,
                    done: true,
                    on_policy: true,
                }
            })
            .collect();
        let batch = Batch::from_transitions(&transitions, 0.0, 0.99, 0.95)?;
        trainer.update(&batch, &mut rng)?;
    }
    Ok(())
}
