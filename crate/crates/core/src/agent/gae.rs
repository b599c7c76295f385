//! Generalized advantage estimation.

use crate::error::{Error, Result};

/// Advantages and returns for one contiguous trajectory segment.
///
/// `dones[t]` marks that the episode ended after step `t`, so neither the
/// next value nor later advantages leak across it. `bootstrap_value` is
/// `V(s_T)` for the state following the last step (ignored if that step is
/// terminal).
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap_value: f64,
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::InvalidInput(format!(
            "gae length mismatch: rewards {n}, values {}, dones {}",
            values.len(),
            dones.len()
        )));
    }
    let mut advantages = vec![0.0; n];
    let mut next_advantage = 0.0;
    let mut next_value = bootstrap_value;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * not_done - values[t];
        next_advantage = delta + gamma * lambda * not_done * next_advantage;
        advantages[t] = next_advantage;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}
