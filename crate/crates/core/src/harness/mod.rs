//! Experiment plumbing: configuration, training, evaluation and the
//! agent-versus-baseline comparison.

pub mod config;
pub mod eval;
pub mod rollout;
pub mod train;

pub use config::{load_config, ExperimentConfig, Profile};
pub use eval::{compare, evaluate, CompareReport, CompareRun, EvalReport, EvalRun, PairedRow};
pub use rollout::{run_episode, EpisodeRun, EpisodeSpec, PolicyMode};
pub use train::{curriculum_dry_run, train, DryRunReport, TrainOptions, TrainOutcome};
