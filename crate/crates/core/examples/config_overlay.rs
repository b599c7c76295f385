//! Profile defaults, a partial overlay, the config hash and the error
//! reported for a misspelled key.
//!
//! `cargo run --example config_overlay`

use beamguard::harness::{ExperimentConfig, Profile};

const OVERLAY: &str = r#"
seed = 7
[sensing]
model_variant = "paper"
[curriculum]
override_mode = "proxy_action"
"#;

fn main() -> beamguard::Result<()> {
    let desk = ExperimentConfig::desk();
    let tuned = ExperimentConfig::from_toml_str(OVERLAY, Some(Profile::Desk))?;
    println!("desk hash  {:016x}", desk.config_hash());
    println!("tuned hash {:016x} (seed {})", tuned.config_hash(), tuned.seed);

    let reseeded = ExperimentConfig {
        seed: 99,
        ..desk.clone()
    };
    println!(
        "reseeding keeps the hash: {}",
        reseeded.config_hash() == desk.config_hash()
    );

    match ExperimentConfig::from_toml_str("[ppo]\nentropy_coeff = 0.02\n", None) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    println!("\nresolved tuned config:\n{}", tuned.to_toml());
    Ok(())
}
