//! Link budget of the 8×8 array: path loss, array gain and the user SINR as
//! the beam swings away from the user.
//!
//! `cargo run --example link_budget -- [range_m]`

use beamguard::channel::{beam_weights, channel_vector, path_loss, sinr, ArrayConfig, LinkBudget};

fn main() -> beamguard::Result<()> {
    let range: f64 = std::env::args()
        .nth(1)
        .map_or(100.0, |s| s.parse().expect("range in meters"));
    let array = ArrayConfig::default();
    let budget = LinkBudget::default();
    let noise = budget.noise_power_watts()?;

    println!("range {range} m, carrier {:.0} GHz", array.carrier_frequency / 1e9);
    println!("path loss        {:.2} dB", path_loss(range, array.carrier_frequency));
    println!(
        "array gain       {:.2} dB",
        10.0 * (array.num_elements() as f64).log10()
    );

    let h = channel_vector(range, 0.0, 0.0, &array, &budget)?;
    println!("\nbeam offset  SINR (dB)");
    for offset in [0.0, 2.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0, 45.0] {
        let s = sinr(&h, &beam_weights(offset, &array), noise)?;
        println!("{offset:>9.0}°  {s:>9.2}");
    }
    Ok(())
}
