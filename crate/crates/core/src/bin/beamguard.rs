use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use beamguard::agent::checkpoint::load_checkpoint;
use beamguard::baseline::{run_baseline, BaselineSetup};
use beamguard::harness::eval::{eval_scenario_ids, BaselineReport};
use beamguard::harness::train::write_resolved_config;
use beamguard::harness::{compare, evaluate, load_config, train, ExperimentConfig, Profile, TrainOptions};
use beamguard::metrics::MetricsWriter;
use beamguard::Error;

#[derive(Parser)]
#[command(
    name = "beamguard",
    version,
    about = "Train and evaluate the beam-stealing defense agent"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write metrics.csv and checkpoints.
    Train(Common),
    /// Evaluate a checkpoint with the curriculum off.
    Eval(WithCheckpoint),
    /// Run the power-delay-profile baseline on the evaluation scenarios.
    Baseline(Common),
    /// Run agent and baseline on paired scenarios and check the orderings.
    Compare(WithCheckpoint),
    /// Print the fully resolved configuration.
    InspectConfig(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `paper` or `desk`.
    #[arg(long)]
    profile: Option<Profile>,
    #[arg(long, default_value = "runs/latest")]
    out_dir: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Arg-max actions during evaluation.
    #[arg(long)]
    greedy: bool,
}

#[derive(Args)]
struct WithCheckpoint {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    checkpoint: PathBuf,
}

fn resolve(c: &Common) -> beamguard::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => load_config(path, c.profile)?,
        None => ExperimentConfig::for_profile(c.profile.unwrap_or(Profile::Paper)),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    cfg.greedy_eval |= c.greedy;
    cfg.validate()?;
    Ok(cfg)
}

fn prepare(dir: &Path, cfg: &ExperimentConfig) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_resolved_config(&dir.join("config.toml"), cfg, cfg.config_hash())?;
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

fn load_model(path: &Path, cfg: &ExperimentConfig) -> anyhow::Result<beamguard::agent::ActorCritic> {
    let ckpt = load_checkpoint(path)?;
    if let Some(warning) = ckpt.config_mismatch(cfg.config_hash()) {
        log::warn!("{warning}");
        eprintln!("warning: {warning}");
    }
    Ok(ckpt.model)
}

/// `Ok(false)` means the compare orderings did not hold.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::InspectConfig(c) => {
            let cfg = resolve(&c)?;
            println!("# seed={} config_hash={:016x}", cfg.seed, cfg.config_hash());
            print!("{}", cfg.to_toml());
        }
        Command::Train(c) => {
            let cfg = resolve(&c)?;
            let out = train(
                &cfg,
                &TrainOptions {
                    out_dir: Some(c.out_dir.clone()),
                },
            )?;
            let last = &out.metrics[out.metrics.len().saturating_sub(10)..];
            let det = last.iter().map(|m| m.detection_rate).sum::<f64>() / last.len() as f64;
            println!(
                "trained {} episodes ({} updates); last-10 detection rate {det:.3}; outputs in {}",
                out.metrics.len(),
                out.updates.len(),
                c.out_dir.display()
            );
        }
        Command::Eval(w) => {
            let cfg = resolve(&w.common)?;
            let model = load_model(&w.checkpoint, &cfg)?;
            let dir = &w.common.out_dir;
            prepare(dir, &cfg)?;
            let run = evaluate(&model, &cfg, cfg.greedy_eval)?;
            let file = File::create(dir.join("eval.csv"))?;
            let mut writer = MetricsWriter::new(BufWriter::new(file), cfg.seed, cfg.config_hash())?;
            for m in &run.episodes {
                writer.write(m)?;
            }
            run.write_traces(BufWriter::new(File::create(dir.join("traces.jsonl"))?))?;
            write_json(&dir.join("eval_summary.json"), &run.report)?;
            println!("{}", serde_json::to_string_pretty(&run.report)?);
        }
        Command::Baseline(c) => {
            let cfg = resolve(&c)?;
            prepare(&c.out_dir, &cfg)?;
            let setup = BaselineSetup {
                env: &cfg.env,
                array: &cfg.array,
                budget: &cfg.budget,
                config: &cfg.baseline,
                seed: cfg.seed,
            };
            let episodes = run_baseline(&setup, &eval_scenario_ids(cfg.eval_episodes))?;
            let file = File::create(c.out_dir.join("baseline.csv"))?;
            let mut writer = MetricsWriter::new(BufWriter::new(file), cfg.seed, cfg.config_hash())?;
            for e in &episodes {
                writer.write(&e.metrics)?;
            }
            let report = BaselineReport::from_episodes(&episodes)?;
            write_json(&c.out_dir.join("baseline_summary.json"), &report)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Compare(w) => {
            let cfg = resolve(&w.common)?;
            let model = load_model(&w.checkpoint, &cfg)?;
            let dir = &w.common.out_dir;
            prepare(dir, &cfg)?;
            let run = compare(&model, &cfg, cfg.greedy_eval)?;
            run.write_paired_csv(BufWriter::new(File::create(dir.join("paired.csv"))?))?;
            write_json(&dir.join("compare_summary.json"), &run.report)?;
            let r = &run.report;
            println!("{:<22}{:>12}{:>12}", "", "agent", "baseline");
            println!(
                "{:<22}{:>12.3}{:>12.3}",
                "detection (per step)", r.agent.step_detection_rate, r.baseline.step_detection_rate
            );
            println!(
                "{:<22}{:>12.3}{:>12.3}",
                "detection (episode)", r.agent.episode_detection_fraction, r.baseline.episode_detection_fraction
            );
            println!(
                "{:<22}{:>12.2}{:>12.2}",
                "mean SINR dB", r.agent.mean_sinr_db.mean, r.baseline.mean_sinr_db.mean
            );
            for o in [&r.sinr_ordering, &r.detection_ordering] {
                let verdict = if o.holds { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {} (mean diff {:.3}, bootstrap {:.3})",
                    o.claim, o.mean_difference, o.confidence
                );
            }
            return Ok(r.orderings_hold());
        }
    }
    Ok(true)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::Usage(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
