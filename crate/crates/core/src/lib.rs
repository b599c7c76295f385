//! Cognitive beamforming defense against beam-stealing attacks in mmWave
//! links.
//!
//! The crate simulates an 8×8 uniform planar array serving one user while an
//! attacker lurks nearby, trains a PPO agent that trades sensing effort and
//! beam pointing against user SINR, and compares it with a fixed-beam
//! power-delay-profile detector.
//!
//! | module | contents |
//! |---|---|
//! | [`channel`] | array response, path loss, beamforming weights, SINR |
//! | [`sensing`] | detection probability, confidence, noisy measurements |
//! | [`environment`] | scenario state, actions, reward, episodes |
//! | [`curriculum`] | forced-success and override scheduling |
//! | [`agent`] | MLPs, GAE, clipped PPO, Adam, checkpoints |
//! | [`baseline`] | two-tap PDP detector |
//! | [`harness`] | configuration, training, evaluation, comparison |

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod baseline;
pub mod channel;
pub mod curriculum;
pub mod environment;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod seeding;
pub mod sensing;

pub use error::{Error, Result};
