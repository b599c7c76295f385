//! The training loop.
//!
//! Episodes are collected in rounds of `workers` episodes against a frozen
//! copy of the parameters. After each round the transitions are appended to
//! the rollout buffer in episode order and a PPO update runs every time the
//! buffer holds `batch_size` transitions. With one worker this is the plain
//! sequential loop and the output is bit-reproducible; with more workers the
//! policy lags by up to one round, so results are reproducible only for a
//! fixed worker count.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::agent::checkpoint::save_checkpoint;
use crate::agent::{ActorCritic, Batch, PpoTrainer, RolloutBuffer, UpdateStats};
use crate::curriculum::{self, Phase};
use crate::environment::ObsMode;
use crate::error::{Error, Result};
use crate::metrics::{EpisodeMetrics, MetricsWriter};
use crate::seeding::{stream, Purpose};

use super::config::ExperimentConfig;
use super::rollout::{run_episode, EpisodeRun, EpisodeSpec, PolicyMode};

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Directory for `metrics.csv`, `config.toml` and `checkpoints/`.
    /// Nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ActorCritic,
    pub metrics: Vec<EpisodeMetrics>,
    pub updates: Vec<UpdateStats>,
    pub config_hash: u64,
}

struct Outputs {
    metrics: MetricsWriter<BufWriter<File>>,
    checkpoints: PathBuf,
    root: PathBuf,
}

impl Outputs {
    fn create(dir: &Path, cfg: &ExperimentConfig, hash: u64) -> Result<Self> {
        let checkpoints = dir.join("checkpoints");
        fs::create_dir_all(&checkpoints).map_err(|e| Error::io(&checkpoints, e))?;
        write_resolved_config(&dir.join("config.toml"), cfg, hash)?;
        let path = dir.join("metrics.csv");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            metrics: MetricsWriter::new(BufWriter::new(file), cfg.seed, hash)?,
            checkpoints,
            root: dir.to_owned(),
        })
    }
}

/// Writes the fully resolved configuration with a provenance comment.
pub fn write_resolved_config(path: &Path, cfg: &ExperimentConfig, hash: u64) -> Result<()> {
    let text = format!("# seed={} config_hash={hash:016x}\n{}", cfg.seed, cfg.to_toml());
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    seed: u64,
    config_hash: String,
    episode: usize,
    update: usize,
    error: String,
    batch_len: usize,
    advantage_min: f64,
    advantage_max: f64,
    return_min: f64,
    return_max: f64,
    last_update: Option<UpdateStatsDump>,
    recent_episodes: &'a [EpisodeMetrics],
}

#[derive(Serialize)]
struct UpdateStatsDump {
    actor_loss: f64,
    critic_loss: f64,
    entropy: f64,
    approx_kl: f64,
    clip_fraction: f64,
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

fn checkpoint_name(episode: usize) -> String {
    format!("episode_{episode:06}.ckpt")
}

/// Trains a fresh agent under `cfg`.
pub fn train(cfg: &ExperimentConfig, options: &TrainOptions) -> Result<TrainOutcome> {
    cfg.validate()?;
    let hash = cfg.config_hash();
    let mut outputs = options
        .out_dir
        .as_deref()
        .map(|d| Outputs::create(d, cfg, hash))
        .transpose()?;

    let model = ActorCritic::new(&cfg.ppo.hidden_sizes, &mut stream(cfg.seed, Purpose::Init, 0));
    let mut trainer = PpoTrainer::new(model, cfg.ppo.clone());
    let mut buffer = RolloutBuffer::new();
    let mut metrics = Vec::with_capacity(cfg.total_episodes);
    let mut updates = Vec::new();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let mut next = 0usize;
    while next < cfg.total_episodes {
        let end = (next + cfg.workers).min(cfg.total_episodes);
        let specs: Vec<EpisodeSpec> = (next..end)
            .map(|e| EpisodeSpec {
                episode: e,
                scenario_id: e as u64,
                phase: curriculum::phase_of(e, &cfg.curriculum),
                policy: PolicyMode::Sample,
                obs_mode: ObsMode::Train,
            })
            .collect();
        let snapshot = &trainer.model;
        let runs: Vec<EpisodeRun> = if cfg.workers == 1 {
            specs
                .iter()
                .map(|s| run_episode(cfg, snapshot, s))
                .collect::<Result<_>>()?
        } else {
            pool.install(|| {
                specs
                    .par_iter()
                    .map(|s| run_episode(cfg, snapshot, s))
                    .collect::<Result<_>>()
            })?
        };

        for run in runs {
            let episode = run.metrics.episode;
            buffer.extend(run.transitions);
            if let Some(out) = outputs.as_mut() {
                out.metrics.write(&run.metrics)?;
            }
            metrics.push(run.metrics);

            while buffer.len() >= cfg.ppo.batch_size {
                let batch = buffer.drain_batch(cfg.ppo.batch_size, cfg.ppo.gamma, cfg.ppo.gae_lambda)?;
                let mut rng = stream(cfg.seed, Purpose::Update, updates.len() as u64);
                match trainer.update(&batch, &mut rng) {
                    Ok(stats) => {
                        log::debug!(
                            "update {} after episode {episode}: actor {:.4} critic {:.2} entropy {:.3} kl {:.4}",
                            updates.len(),
                            stats.actor_loss,
                            stats.critic_loss,
                            stats.entropy,
                            stats.approx_kl
                        );
                        updates.push(stats);
                    }
                    Err(err) => {
                        if let Some(out) = outputs.as_ref() {
                            dump_diagnostics(&out.root, cfg, hash, episode, &updates, &batch, &metrics, &err)?;
                        }
                        return Err(err);
                    }
                }
            }

            let done = episode + 1;
            if done % 10 == 0 {
                let recent = &metrics[metrics.len().saturating_sub(10)..];
                let mean = |f: fn(&EpisodeMetrics) -> f64| recent.iter().map(f).sum::<f64>() / recent.len() as f64;
                log::info!(
                    "episode {done}/{}: reward {:.1} detection {:.3} sinr {:.1} dB effort {:.2}",
                    cfg.total_episodes,
                    mean(|m| m.reward.unwrap_or(0.0)),
                    mean(|m| m.detection_rate),
                    mean(|m| m.mean_sinr_db),
                    mean(|m| m.mean_effort)
                );
            }
            if let Some(out) = outputs.as_mut() {
                if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 {
                    let path = out.checkpoints.join(checkpoint_name(done));
                    save_checkpoint(&path, &trainer.model, hash, cfg.seed, done as u64)?;
                }
            }
        }
        next = end;
    }

    if let Some(out) = outputs {
        let path = out.checkpoints.join("final.ckpt");
        save_checkpoint(&path, &trainer.model, hash, cfg.seed, cfg.total_episodes as u64)?;
    }
    Ok(TrainOutcome {
        model: trainer.model,
        metrics,
        updates,
        config_hash: hash,
    })
}

#[allow(clippy::too_many_arguments)]
fn dump_diagnostics(
    dir: &Path,
    cfg: &ExperimentConfig,
    hash: u64,
    episode: usize,
    updates: &[UpdateStats],
    batch: &Batch,
    metrics: &[EpisodeMetrics],
    err: &Error,
) -> Result<()> {
    let (advantage_min, advantage_max) = min_max(&batch.advantages);
    let (return_min, return_max) = min_max(&batch.returns);
    let d = Diagnostics {
        seed: cfg.seed,
        config_hash: format!("{hash:016x}"),
        episode,
        update: updates.len(),
        error: err.to_string(),
        batch_len: batch.len(),
        advantage_min,
        advantage_max,
        return_min,
        return_max,
        last_update: updates.last().map(|s| UpdateStatsDump {
            actor_loss: s.actor_loss,
            critic_loss: s.critic_loss,
            entropy: s.entropy,
            approx_kl: s.approx_kl,
            clip_fraction: s.clip_fraction,
        }),
        recent_episodes: &metrics[metrics.len().saturating_sub(20)..],
    };
    let path = dir.join("diagnostics.json");
    let mut file = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
    serde_json::to_writer_pretty(&mut file, &d)?;
    file.flush().map_err(|e| Error::io(&path, e))?;
    log::error!("training diverged; diagnostics written to {}", path.display());
    Ok(())
}

/// Counts from replaying the curriculum schedule without any environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DryRunReport {
    pub phase1_episodes: usize,
    pub forced_steps: usize,
    /// Whether every phase-1 episode had exactly the configured number of
    /// distinct forced indices.
    pub unique_per_episode: bool,
    pub phase2_steps: usize,
    pub phase2_overrides: usize,
}

impl DryRunReport {
    pub fn phase2_frequency(&self) -> f64 {
        self.phase2_overrides as f64 / self.phase2_steps as f64
    }
}

/// Replays the curriculum decisions of `cfg` over all phase-1 episodes and
/// enough phase-2 episodes to cover `phase2_steps` steps, drawing from the
/// same streams as [`train`].
pub fn curriculum_dry_run(cfg: &ExperimentConfig, phase2_steps: usize) -> Result<DryRunReport> {
    let c = &cfg.curriculum;
    let len = cfg.env.episode_length;
    c.validate(len)?;
    let mut report = DryRunReport {
        phase1_episodes: 0,
        forced_steps: 0,
        unique_per_episode: true,
        phase2_steps: 0,
        phase2_overrides: 0,
    };
    let mut episode = 0usize;
    while report.phase2_steps < phase2_steps {
        let phase = curriculum::phase_of(episode, c);
        if phase == Phase::Off {
            break;
        }
        let mut rng = stream(cfg.seed, Purpose::Curriculum, episode as u64);
        let plan = curriculum::plan_episode(phase, len, c, &mut rng)?;
        let mut forced_here = 0usize;
        for step in 0..len {
            let forced = curriculum::should_override(&plan, step, c, &mut rng);
            match phase {
                Phase::Phase1 => forced_here += forced as usize,
                _ if report.phase2_steps < phase2_steps => {
                    report.phase2_steps += 1;
                    report.phase2_overrides += forced as usize;
                }
                _ => {}
            }
        }
        if phase == Phase::Phase1 {
            report.phase1_episodes += 1;
            report.forced_steps += forced_here;
            report.unique_per_episode &=
                plan.forced_steps.len() == c.forced_steps_per_episode && forced_here == c.forced_steps_per_episode;
        }
        episode += 1;
    }
    Ok(report)
}
