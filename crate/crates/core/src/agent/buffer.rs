use ndarray::Array2;

use crate::environment::OBS_DIM;
use crate::error::{Error, Result};

use super::gae::gae;

/// One environment step as seen by the learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub observation: [f64; OBS_DIM],
    pub action: usize,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
    /// Whether the step contributes to the policy-gradient term.
    pub on_policy: bool,
}

/// Transitions collected since the last update, in time order.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    transitions: Vec<Transition>,
}

/// A fixed-size slice of the buffer with advantages attached.
#[derive(Debug, Clone)]
pub struct Batch {
    pub observations: Array2<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub on_policy: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn from_transitions(transitions: &[Transition], bootstrap_value: f64, gamma: f64, lambda: f64) -> Result<Self> {
        let rewards: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = transitions.iter().map(|t| t.value).collect();
        let dones: Vec<bool> = transitions.iter().map(|t| t.done).collect();
        let (advantages, returns) = gae(&rewards, &values, bootstrap_value, &dones, gamma, lambda)?;
        let mut observations = Array2::zeros((transitions.len(), OBS_DIM));
        for (mut row, t) in observations.rows_mut().into_iter().zip(transitions) {
            row.assign(&ndarray::ArrayView1::from(&t.observation));
        }
        Ok(Self {
            observations,
            actions: transitions.iter().map(|t| t.action).collect(),
            old_log_probs: transitions.iter().map(|t| t.log_prob).collect(),
            advantages,
            returns,
            on_policy: transitions.iter().map(|t| t.on_policy).collect(),
        })
    }
}

impl RolloutBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn extend(&mut self, ts: impl IntoIterator<Item = Transition>) {
        self.transitions.extend(ts);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Removes the oldest `size` transitions and turns them into a batch.
    ///
    /// If the batch ends mid-episode the value stored with the next
    /// transition bootstraps the tail.
    pub fn drain_batch(&mut self, size: usize, gamma: f64, lambda: f64) -> Result<Batch> {
        if size == 0 || self.transitions.len() < size {
            return Err(Error::InvalidInput(format!(
                "need {size} transitions for a batch, buffer holds {}",
                self.transitions.len()
            )));
        }
        let bootstrap = if self.transitions[size - 1].done {
            0.0
        } else {
            self.transitions.get(size).map_or(0.0, |t| t.value)
        };
        let taken: Vec<Transition> = self.transitions.drain(..size).collect();
        Batch::from_transitions(&taken, bootstrap, gamma, lambda)
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }
}
