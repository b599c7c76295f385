//! Detection probability and confidence tables for both sensing variants.
//!
//! `cargo run --example sensing_confidence`

use beamguard::sensing::{confidence, detection_probability, ModelVariant, SensingParams};

fn table(params: &SensingParams) {
    let distances = [0.0, 20.0, 40.0, 60.0, 80.0, 100.0, 150.0];
    print!("effort \\ d ");
    for d in distances {
        print!("{d:>7.0}");
    }
    println!();
    for e in [0.0, 0.25, 0.5, 0.75, 1.0] {
        print!("{e:>10.2} ");
        for d in distances {
            print!("{:>7.3}", detection_probability(e, d, params));
        }
        println!();
    }
}

fn main() {
    let attenuated = SensingParams::default();
    let paper = SensingParams {
        model_variant: ModelVariant::Paper,
        ..attenuated
    };
    println!(
        "P_d, attenuated variant (alpha {}, beta {})",
        attenuated.alpha, attenuated.beta
    );
    table(&attenuated);
    println!("\nP_d, paper variant");
    table(&paper);

    // Largest distance at which a perfectly aimed full-effort probe still
    // crosses the 0.7 confidence threshold.
    let reach = ((1.0 - (-attenuated.alpha).exp()) / 0.7).ln() / attenuated.beta;
    println!("\nattenuated reach of conf > 0.7 at full effort: {reach:.1} m");

    println!("\nconfidence at full effort, 50 m, by beam misalignment");
    for miss in [0.0, 2.5, 5.0, 7.5, 10.0, 15.0, 20.0] {
        let a = confidence(1.0, 50.0, miss, 0.0, &attenuated).value();
        let p = confidence(1.0, 50.0, miss, 0.0, &paper).value();
        println!("{miss:>5.1}°  attenuated {a:.3}  paper {p:.3}");
    }
}
