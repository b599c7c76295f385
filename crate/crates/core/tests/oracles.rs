//! End-to-end checks against values computed independently of the crate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use beamguard::agent::ActorCritic;
use beamguard::baseline::{run_baseline, AttackActivity, BaselineConfig, BaselineSetup};
use beamguard::environment::{Environment, Geometry, ObsMode};
use beamguard::harness::{compare, evaluate, ExperimentConfig};
use beamguard::metrics::MetricsWriter;
use beamguard::sensing::confidence;

fn quiet_env(cfg: &ExperimentConfig) -> Environment {
    let mut env = cfg.env;
    env.jitter_range_m = 0.0;
    env.jitter_azimuth_deg = 0.0;
    Environment::new(env, cfg.array, cfg.budget, cfg.sensing, cfg.reward, ObsMode::Train).unwrap()
}

fn geometry(user_range_m: f64) -> Geometry {
    Geometry {
        user_range_m,
        user_azimuth_deg: 0.0,
        attacker_range_m: 60.0,
        attacker_azimuth_deg: 30.0,
    }
}

#[test]
fn aligned_link_budget_at_100_m() {
    let cfg = ExperimentConfig::paper();
    let mut env = quiet_env(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let obs = env.reset_to(geometry(100.0), &mut rng).unwrap();
    // 30 dBm − (20·log10 100 + 20·log10 28e9 − 147.55) + 10·log10 64 + 94.
    let loss = 20.0 * 100f64.log10() + 20.0 * 28e9f64.log10() - 147.55;
    let expected = 30.0 - loss + 10.0 * 64f64.log10() + 94.0;
    assert!((loss - 101.39).abs() < 0.01, "{loss}");
    assert!((obs.sinr_db - expected).abs() < 1e-6, "{} vs {expected}", obs.sinr_db);
    assert!((obs.sinr_db - 40.67).abs() < 0.01);
}

#[test]
fn forced_success_confidence() {
    let cfg = ExperimentConfig::paper();
    let c = confidence(1.0, 0.0, 12.0, 12.0, &cfg.sensing).value();
    assert!((c - (1.0 - (-3f64).exp())).abs() < 1e-12);
    assert!((c - 0.9502).abs() < 1e-4);
}

fn baseline_step_rate(activity: AttackActivity, episodes: u64) -> f64 {
    let cfg = ExperimentConfig::paper();
    let config = BaselineConfig {
        attack_activity: activity,
        ..cfg.baseline
    };
    let setup = BaselineSetup {
        env: &cfg.env,
        array: &cfg.array,
        budget: &cfg.budget,
        config: &config,
        seed: 5,
    };
    let ids: Vec<u64> = (0..episodes).collect();
    let runs = run_baseline(&setup, &ids).unwrap();
    runs.iter().map(|r| r.metrics.detection_rate).sum::<f64>() / runs.len() as f64
}

#[test]
fn baseline_false_alarms_stay_below_one_percent() {
    assert!(baseline_step_rate(AttackActivity::Never, 200) < 0.01);
}

#[test]
fn baseline_hit_rate_matches_gaussian_margin() {
    // Relay copy 3 dB stronger, both taps jittered by N(0, 1 dB):
    // P(alarm) = Φ(3/√2) ≈ 0.9831.
    let rate = baseline_step_rate(AttackActivity::Always, 400);
    assert!((rate - 0.9831).abs() < 0.005, "{rate}");
}

#[test]
fn untrained_agent_sits_at_the_random_floor() {
    let mut cfg = ExperimentConfig::desk();
    cfg.eval_episodes = 100;
    let model = ActorCritic::zeros(&cfg.ppo.hidden_sizes);
    let report = evaluate(&model, &cfg, false).unwrap().report;
    println!(
        "uniform policy: detection {:.4}, episodes with a detection {:.3}, SINR {:.2} dB",
        report.detection_rate.mean, report.episode_detection_fraction, report.mean_sinr_db.mean
    );
    assert!(report.detection_rate.mean < 0.10);
}

#[test]
fn baseline_keeps_the_better_link_on_paired_scenarios() {
    let mut cfg = ExperimentConfig::desk();
    cfg.eval_episodes = 60;
    let model = ActorCritic::zeros(&cfg.ppo.hidden_sizes);
    let run = compare(&model, &cfg, false).unwrap();
    assert_eq!(run.rows.len(), 60);
    assert!(run.report.baseline.mean_sinr_db.mean > run.report.agent.mean_sinr_db.mean);
    assert!(run.report.sinr_ordering.holds);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn summary_medians_match_the_raw_csv() {
    let mut cfg = ExperimentConfig::desk();
    cfg.eval_episodes = 41;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = ActorCritic::new(&cfg.ppo.hidden_sizes, &mut rng);
    let run = evaluate(&model, &cfg, false).unwrap();
    let mut w = MetricsWriter::new(Vec::new(), cfg.seed, 0).unwrap();
    for m in &run.episodes {
        w.write(m).unwrap();
    }
    let text = String::from_utf8(w.into_inner()).unwrap();

    // Plain split parser, independent of the crate's reader.
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    let column = |name: &str| -> Vec<f64> { rows.iter().map(|r| r[col(name)].parse().unwrap()).collect() };

    assert_eq!(rows.len(), 41);
    let r = &run.report;
    assert_eq!(median(column("reward")), r.reward.median);
    assert_eq!(median(column("detection_rate")), r.detection_rate.median);
    assert_eq!(median(column("mean_sinr_db")), r.mean_sinr_db.median);
}
