//! Evaluation of a trained agent and the paired comparison with the
//! power-delay-profile baseline.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::agent::ActorCritic;
use crate::baseline::{run_baseline, BaselineEpisode, BaselineSetup};
use crate::curriculum::Phase;
use crate::environment::{self, ObsMode, StepOutcome};
use crate::error::{Error, Result};
use crate::metrics::{bootstrap_positive_fraction, EpisodeMetrics, SummaryStats};
use crate::seeding::{stream, Purpose, EVAL_INDEX_OFFSET};

use super::config::ExperimentConfig;
use super::rollout::{run_episode, EpisodeSpec, PolicyMode};

/// Attacker range separating the "near" and "far" effort averages.
pub const EFFORT_SPLIT_RANGE_M: f64 = 75.0;
/// Bootstrap resamples behind each ordering confidence.
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
/// Confidence required for an ordering to count as established.
pub const ORDERING_CONFIDENCE: f64 = 0.95;

/// Scenario stream indices used for the `k`-th evaluation episode.
pub fn eval_scenario_ids(count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| EVAL_INDEX_OFFSET + k).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub seed: u64,
    pub config_hash: String,
    pub episodes: usize,
    pub greedy: bool,
    pub reward: SummaryStats,
    /// Per-episode fraction of detected steps.
    pub detection_rate: SummaryStats,
    pub mean_sinr_db: SummaryStats,
    /// Per-step SINR pooled over all episodes.
    pub step_sinr_db: SummaryStats,
    /// Fraction of episodes with at least one detection.
    pub episode_detection_fraction: f64,
    /// Fraction of all steps that were detections.
    pub step_detection_rate: f64,
    pub mean_effort_near: f64,
    pub mean_effort_far: f64,
    pub near_steps: usize,
    pub far_steps: usize,
}

impl EvalReport {
    pub fn effort_gap(&self) -> f64 {
        self.mean_effort_near - self.mean_effort_far
    }
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    pub report: EvalReport,
    pub episodes: Vec<EpisodeMetrics>,
    pub traces: Vec<Vec<StepOutcome>>,
}

impl EvalRun {
    /// JSONL traces: a metadata object, then one object per step with the
    /// episode index added.
    pub fn write_traces<W: Write>(&self, mut out: W) -> Result<()> {
        let meta = serde_json::json!({
            "seed": self.report.seed,
            "config_hash": self.report.config_hash,
            "episodes": self.report.episodes,
            "greedy": self.report.greedy,
        });
        serde_json::to_writer(&mut out, &meta)?;
        out.write_all(b"\n").map_err(|e| Error::io("<trace>", e))?;
        for (episode, steps) in self.traces.iter().enumerate() {
            for o in steps {
                let mut v = serde_json::to_value(environment::TraceRecord::from(o))?;
                v["episode"] = episode.into();
                serde_json::to_writer(&mut out, &v)?;
                out.write_all(b"\n").map_err(|e| Error::io("<trace>", e))?;
            }
        }
        Ok(())
    }
}

fn mean_or_nan(sum: f64, n: usize) -> f64 {
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Runs `cfg.eval_episodes` episodes with the curriculum off and the
/// ground-truth observation slots masked.
pub fn evaluate(model: &ActorCritic, cfg: &ExperimentConfig, greedy: bool) -> Result<EvalRun> {
    cfg.validate()?;
    let policy = if greedy { PolicyMode::Greedy } else { PolicyMode::Sample };
    let specs: Vec<EpisodeSpec> = eval_scenario_ids(cfg.eval_episodes)
        .into_iter()
        .enumerate()
        .map(|(k, id)| EpisodeSpec {
            episode: k,
            scenario_id: id,
            phase: Phase::Off,
            policy,
            obs_mode: ObsMode::Eval,
        })
        .collect();
    let runs = if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| {
            specs
                .par_iter()
                .map(|s| run_episode(cfg, model, s))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        specs
            .iter()
            .map(|s| run_episode(cfg, model, s))
            .collect::<Result<Vec<_>>>()?
    };

    let mut episodes = Vec::with_capacity(runs.len());
    let mut traces = Vec::with_capacity(runs.len());
    for mut run in runs {
        run.metrics.phase = "eval".into();
        episodes.push(run.metrics);
        traces.push(run.outcomes);
    }

    let steps = || traces.iter().flatten();
    let pick = |f: fn(&EpisodeMetrics) -> f64| episodes.iter().map(f).collect::<Vec<_>>();
    let (mut near_sum, mut near_n, mut far_sum, mut far_n) = (0.0, 0usize, 0.0, 0usize);
    for o in steps() {
        if o.info.attacker_range_m < EFFORT_SPLIT_RANGE_M {
            near_sum += o.info.effort;
            near_n += 1;
        } else {
            far_sum += o.info.effort;
            far_n += 1;
        }
    }
    let report = EvalReport {
        seed: cfg.seed,
        config_hash: format!("{:016x}", cfg.config_hash()),
        episodes: episodes.len(),
        greedy,
        reward: SummaryStats::from_values(&pick(|m| m.reward.unwrap_or(0.0)))?,
        detection_rate: SummaryStats::from_values(&pick(|m| m.detection_rate))?,
        mean_sinr_db: SummaryStats::from_values(&pick(|m| m.mean_sinr_db))?,
        step_sinr_db: SummaryStats::from_values(&steps().map(|o| o.info.sinr_db).collect::<Vec<_>>())?,
        episode_detection_fraction: environment::detection_rate(episodes.iter().map(EpisodeMetrics::detected))?,
        step_detection_rate: environment::detection_rate(steps().map(|o| o.info.detected))?,
        mean_effort_near: mean_or_nan(near_sum, near_n),
        mean_effort_far: mean_or_nan(far_sum, far_n),
        near_steps: near_n,
        far_steps: far_n,
    };
    Ok(EvalRun {
        report,
        episodes,
        traces,
    })
}

/// Baseline statistics over the comparison scenarios.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub detection_rate: SummaryStats,
    pub mean_sinr_db: SummaryStats,
    pub episode_detection_fraction: f64,
    pub step_detection_rate: f64,
}

impl BaselineReport {
    pub fn from_episodes(episodes: &[BaselineEpisode]) -> Result<Self> {
        let det: Vec<f64> = episodes.iter().map(|e| e.metrics.detection_rate).collect();
        let sinr: Vec<f64> = episodes.iter().map(|e| e.metrics.mean_sinr_db).collect();
        let steps: usize = episodes.iter().map(|e| e.step_sinr_db.len()).sum();
        let hits: f64 = episodes
            .iter()
            .map(|e| e.metrics.detection_rate * e.step_sinr_db.len() as f64)
            .sum();
        Ok(Self {
            detection_rate: SummaryStats::from_values(&det)?,
            mean_sinr_db: SummaryStats::from_values(&sinr)?,
            episode_detection_fraction: environment::detection_rate(episodes.iter().map(|e| e.metrics.detected()))?,
            step_detection_rate: hits / steps as f64,
        })
    }
}

/// One qualitative ordering checked on paired episodes.
#[derive(Debug, Clone, Serialize)]
pub struct Ordering {
    pub claim: String,
    pub mean_difference: f64,
    /// Fraction of bootstrap resamples with a positive mean difference.
    pub confidence: f64,
    pub holds: bool,
}

impl Ordering {
    fn from_diffs(claim: &str, diffs: &[f64], rng_index: u64, seed: u64) -> Self {
        let mut rng = stream(seed, Purpose::Bootstrap, rng_index);
        let confidence = bootstrap_positive_fraction(diffs, BOOTSTRAP_RESAMPLES, &mut rng);
        let mean_difference = diffs.iter().sum::<f64>() / diffs.len() as f64;
        Self {
            claim: claim.to_owned(),
            mean_difference,
            confidence,
            holds: mean_difference > 0.0 && confidence >= ORDERING_CONFIDENCE,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub agent: EvalReport,
    pub baseline: BaselineReport,
    pub sinr_ordering: Ordering,
    pub detection_ordering: Ordering,
}

impl CompareReport {
    pub fn orderings_hold(&self) -> bool {
        self.sinr_ordering.holds && self.detection_ordering.holds
    }
}

/// Agent and baseline outcomes on one shared scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedRow {
    pub scenario_id: u64,
    pub agent_detection_rate: f64,
    pub baseline_detection_rate: f64,
    pub agent_detected: bool,
    pub baseline_detected: bool,
    pub agent_mean_sinr_db: f64,
    pub baseline_mean_sinr_db: f64,
    pub agent_mean_effort: f64,
}

#[derive(Debug, Clone)]
pub struct CompareRun {
    pub report: CompareReport,
    pub rows: Vec<PairedRow>,
}

impl CompareRun {
    pub fn write_paired_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# seed={} config_hash={}",
            self.report.agent.seed, self.report.agent.config_hash
        )
        .map_err(|e| Error::io("<csv>", e))?;
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}

/// Runs the agent and the baseline on the same evaluation scenarios.
pub fn compare(model: &ActorCritic, cfg: &ExperimentConfig, greedy: bool) -> Result<CompareRun> {
    let agent = evaluate(model, cfg, greedy)?;
    let ids = eval_scenario_ids(cfg.eval_episodes);
    let setup = BaselineSetup {
        env: &cfg.env,
        array: &cfg.array,
        budget: &cfg.budget,
        config: &cfg.baseline,
        seed: cfg.seed,
    };
    let baseline = run_baseline(&setup, &ids)?;
    let rows: Vec<PairedRow> = agent
        .episodes
        .iter()
        .zip(&baseline)
        .map(|(a, b)| {
            debug_assert_eq!(a.scenario_id, b.metrics.scenario_id);
            PairedRow {
                scenario_id: a.scenario_id,
                agent_detection_rate: a.detection_rate,
                baseline_detection_rate: b.metrics.detection_rate,
                agent_detected: a.detected(),
                baseline_detected: b.metrics.detected(),
                agent_mean_sinr_db: a.mean_sinr_db,
                baseline_mean_sinr_db: b.metrics.mean_sinr_db,
                agent_mean_effort: a.mean_effort,
            }
        })
        .collect();
    let sinr_diffs: Vec<f64> = rows
        .iter()
        .map(|r| r.baseline_mean_sinr_db - r.agent_mean_sinr_db)
        .collect();
    let det_diffs: Vec<f64> = rows
        .iter()
        .map(|r| r.agent_detection_rate - r.baseline_detection_rate)
        .collect();
    let report = CompareReport {
        sinr_ordering: Ordering::from_diffs("baseline SINR > agent SINR", &sinr_diffs, 0, cfg.seed),
        detection_ordering: Ordering::from_diffs("agent detection > baseline detection", &det_diffs, 1, cfg.seed),
        baseline: BaselineReport::from_episodes(&baseline)?,
        agent: agent.report,
    };
    Ok(CompareRun { report, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::desk();
        c.eval_episodes = 12;
        c.ppo.hidden_sizes = vec![16, 8];
        c
    }

    fn untrained(c: &ExperimentConfig) -> ActorCritic {
        ActorCritic::new(&c.ppo.hidden_sizes, &mut rand_chacha::ChaCha8Rng::seed_from_u64(4))
    }

    #[test]
    fn report_is_consistent_with_episode_rows() {
        let cfg = small();
        let run = evaluate(&untrained(&cfg), &cfg, false).unwrap();
        let r = &run.report;
        assert_eq!(r.episodes, 12);
        assert_eq!(r.near_steps + r.far_steps, 12 * 50);
        let det: Vec<f64> = run.episodes.iter().map(|m| m.detection_rate).collect();
        assert!((r.detection_rate.mean - det.iter().sum::<f64>() / 12.0).abs() < 1e-12);
        assert!((r.step_detection_rate - r.detection_rate.mean).abs() < 1e-12);
        assert!(run.episodes.iter().all(|m| m.override_count == 0 && m.phase == "eval"));
        assert!(r.detection_rate.min <= r.detection_rate.median && r.detection_rate.median <= r.detection_rate.max);
    }

    #[test]
    fn traces_have_one_line_per_step_plus_metadata() {
        let cfg = small();
        let run = evaluate(&untrained(&cfg), &cfg, true).unwrap();
        let mut buf = Vec::new();
        run.write_traces(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 12 * 50);
        let meta: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(meta["seed"], cfg.seed);
        let step: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        for key in [
            "step_index",
            "action",
            "override",
            "sinr_db",
            "conf",
            "reward",
            "detection",
        ] {
            assert!(step.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn compare_pairs_scenarios() {
        let cfg = small();
        let run = compare(&untrained(&cfg), &cfg, false).unwrap();
        assert_eq!(run.rows.len(), 12);
        let ids = eval_scenario_ids(12);
        assert!(run.rows.iter().zip(&ids).all(|(r, id)| r.scenario_id == *id));
        let mut buf = Vec::new();
        run.write_paired_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed="));
        assert_eq!(text.lines().count(), 2 + 12);
        assert!(run.report.baseline.step_detection_rate >= 0.0);
    }
}
