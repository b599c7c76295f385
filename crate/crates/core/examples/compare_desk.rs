//! Trains a desk-profile agent, runs it against the baseline on paired
//! scenarios and writes the paired CSV.
//!
//! `cargo run --release --example compare_desk -- [seed] [paired.csv]`

use std::fs::File;
use std::io::BufWriter;

use beamguard::harness::{compare, train, ExperimentConfig, TrainOptions};

fn main() -> beamguard::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = ExperimentConfig::desk();
    cfg.seed = args.get(1).map_or(0, |s| s.parse().expect("seed"));
    let model = train(&cfg, &TrainOptions::default())?.model;
    let run = compare(&model, &cfg, cfg.greedy_eval)?;
    let r = &run.report;
    println!("{:<22}{:>10}{:>10}", "", "agent", "baseline");
    println!(
        "{:<22}{:>10.3}{:>10.3}",
        "detection rate", r.agent.detection_rate.mean, r.baseline.detection_rate.mean
    );
    println!(
        "{:<22}{:>10.2}{:>10.2}",
        "mean SINR dB", r.agent.mean_sinr_db.mean, r.baseline.mean_sinr_db.mean
    );
    for o in [&r.sinr_ordering, &r.detection_ordering] {
        println!(
            "{}: {} (bootstrap {:.3})",
            o.claim,
            if o.holds { "holds" } else { "does not hold" },
            o.confidence
        );
    }
    if let Some(path) = args.get(2) {
        let file = File::create(path).map_err(|e| beamguard::Error::io(path, e))?;
        run.write_paired_csv(BufWriter::new(file))?;
        println!("paired rows written to {path}");
    }
    Ok(())
}
