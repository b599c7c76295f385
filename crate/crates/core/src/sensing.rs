//! ISAC threat assessment: detection probability, beam alignment gain,
//! noisy range/azimuth measurements and the detection confidence fed to
//! the reward.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::{angle_difference, wrap_degrees};
use crate::error::{Error, Result};

/// Which closed form to use for the detection probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// `1 − e^{−αe}·e^{−βd}`, exactly as the formula is usually printed.
    /// Note this grows towards 1 with distance.
    Paper,
    /// `(1 − e^{−αe})·e^{−βd}`: saturates in effort, decays with distance.
    Attenuated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingParams {
    /// Sensing efficiency per unit effort.
    pub alpha: f64,
    /// Distance attenuation per meter.
    pub beta: f64,
    pub model_variant: ModelVariant,
    /// Width (degrees) of the Gaussian alignment kernel between the beam and
    /// the attacker direction.
    pub alignment_sigma_deg: f64,
    /// Measurement noise std in range (m).
    pub range_noise_std_m: f64,
    /// Measurement noise std in azimuth (degrees).
    pub azimuth_noise_std_deg: f64,
}

impl Default for SensingParams {
    fn default() -> Self {
        Self {
            alpha: 3.0,
            beta: 0.005,
            model_variant: ModelVariant::Attenuated,
            alignment_sigma_deg: 10.0,
            range_noise_std_m: 1.5,
            azimuth_noise_std_deg: 3.0,
        }
    }
}

impl SensingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Config("sensing.alpha must be > 0".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config("sensing.beta must be > 0".into()));
        }
        if !(self.alignment_sigma_deg > 0.0) {
            return Err(Error::Config("sensing.alignment_sigma_deg must be > 0".into()));
        }
        if !(self.range_noise_std_m >= 0.0) || !(self.azimuth_noise_std_deg >= 0.0) {
            return Err(Error::Config("sensing noise std must be >= 0".into()));
        }
        Ok(())
    }
}

/// Noisy position estimate of the attacker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub est_range_m: f64,
    pub est_azimuth_deg: f64,
}

/// Detection confidence in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Confidence(f64);

impl Confidence {
    pub fn new(value: f64) -> Self {
        Confidence(if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Probability that a probe with `effort ∈ [0,1]` detects a target at
/// `distance_m`. Inputs are clamped to their domains.
pub fn detection_probability(effort: f64, distance_m: f64, params: &SensingParams) -> f64 {
    let e = effort.clamp(0.0, 1.0);
    let d = distance_m.max(0.0);
    let p = match params.model_variant {
        ModelVariant::Paper => 1.0 - (-params.alpha * e).exp() * (-params.beta * d).exp(),
        ModelVariant::Attenuated => (1.0 - (-params.alpha * e).exp()) * (-params.beta * d).exp(),
    };
    p.clamp(0.0, 1.0)
}

/// Gaussian kernel on the wrapped angle between beam and attacker.
pub fn alignment_gain(beam_azimuth_deg: f64, attacker_azimuth_deg: f64, params: &SensingParams) -> f64 {
    let delta = angle_difference(beam_azimuth_deg, attacker_azimuth_deg);
    let s = params.alignment_sigma_deg;
    (-(delta * delta) / (2.0 * s * s)).exp()
}

/// Draws a noisy range/azimuth measurement of the attacker.
pub fn measure<R: Rng + ?Sized>(
    true_range_m: f64,
    true_azimuth_deg: f64,
    params: &SensingParams,
    rng: &mut R,
) -> Measurement {
    let range_noise = gaussian(params.range_noise_std_m, rng);
    let az_noise = gaussian(params.azimuth_noise_std_deg, rng);
    Measurement {
        est_range_m: (true_range_m + range_noise).max(0.0),
        est_azimuth_deg: wrap_degrees(true_azimuth_deg + az_noise),
    }
}

/// `detection_probability × alignment_gain`, computed on true geometry.
pub fn confidence(
    effort: f64,
    true_distance_m: f64,
    beam_azimuth_deg: f64,
    true_azimuth_deg: f64,
    params: &SensingParams,
) -> Confidence {
    Confidence::new(
        detection_probability(effort, true_distance_m, params)
            * alignment_gain(beam_azimuth_deg, true_azimuth_deg, params),
    )
}

/// Zero-mean Gaussian sample; `std == 0` consumes no randomness.
pub(crate) fn gaussian<R: Rng + ?Sized>(std: f64, rng: &mut R) -> f64 {
    if std > 0.0 {
        Normal::new(0.0, std).expect("finite std").sample(rng)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn attenuated() -> SensingParams {
        SensingParams {
            alpha: 3.0,
            beta: 0.005,
            ..SensingParams::default()
        }
    }

    #[test]
    fn detection_probability_examples() {
        let paper = SensingParams {
            model_variant: ModelVariant::Paper,
            ..attenuated()
        };
        assert_eq!(detection_probability(0.0, 0.0, &paper), 0.0);
        let p = detection_probability(1.0, 0.0, &attenuated());
        assert!((p - (1.0 - (-3f64).exp())).abs() < 1e-15);
        assert!((p - 0.9502).abs() < 1e-4);
    }

    #[test]
    fn distance_monotonicity_by_variant() {
        let att = attenuated();
        let paper = SensingParams {
            model_variant: ModelVariant::Paper,
            ..att
        };
        for e in [0.1, 0.5, 1.0] {
            let mut prev_a = f64::INFINITY;
            let mut prev_p = f64::NEG_INFINITY;
            for i in 0..=2000 {
                let d = i as f64 * 0.1;
                let a = detection_probability(e, d, &att);
                let p = detection_probability(e, d, &paper);
                assert!(a <= prev_a);
                assert!(p >= prev_p);
                prev_a = a;
                prev_p = p;
            }
        }
    }

    #[test]
    fn alignment_examples() {
        let p = attenuated();
        assert_eq!(alignment_gain(12.0, 12.0, &p), 1.0);
        let g = alignment_gain(10.0, 0.0, &p);
        assert!((g - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g - 0.6065).abs() < 1e-4);
        assert_eq!(alignment_gain(3.0, 40.0, &p), alignment_gain(40.0, 3.0, &p));
        // Wrapped difference: 179° and −179° are 2° apart.
        assert!((alignment_gain(179.0, -179.0, &p) - alignment_gain(0.0, 2.0, &p)).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_passthrough() {
        let p = SensingParams {
            range_noise_std_m: 0.0,
            azimuth_noise_std_deg: 0.0,
            ..attenuated()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = measure(42.5, -17.25, &p, &mut rng);
        assert_eq!(m.est_range_m, 42.5);
        assert_eq!(m.est_azimuth_deg, -17.25);
    }

    #[test]
    fn measurement_noise_statistics() {
        let p = attenuated();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let (mut sr, mut sr2, mut sa, mut sa2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let m = measure(100.0, 0.0, &p, &mut rng);
            let er = m.est_range_m - 100.0;
            let ea = m.est_azimuth_deg;
            sr += er;
            sr2 += er * er;
            sa += ea;
            sa2 += ea * ea;
        }
        let n = n as f64;
        let (mr, ma) = (sr / n, sa / n);
        let std_r = (sr2 / n - mr * mr).sqrt();
        let std_a = (sa2 / n - ma * ma).sqrt();
        assert!(mr.abs() < 0.05, "range mean {mr}");
        assert!(ma.abs() < 0.1, "azimuth mean {ma}");
        assert!((std_r / 1.5 - 1.0).abs() < 0.03, "range std {std_r}");
        assert!((std_a / 3.0 - 1.0).abs() < 0.03, "azimuth std {std_a}");
    }

    #[test]
    fn range_is_clamped() {
        let p = SensingParams {
            range_noise_std_m: 50.0,
            ..attenuated()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(measure(1.0, 0.0, &p, &mut rng).est_range_m >= 0.0);
        }
    }

    #[test]
    fn confidence_examples() {
        let p = attenuated();
        assert_eq!(confidence(0.0, 30.0, 5.0, 5.0, &p).value(), 0.0);
        let c = confidence(1.0, 0.0, 37.0, 37.0, &p).value();
        assert!((c - 0.9502).abs() < 1e-4);
        for (e, d, b, t) in [
            (0.3, 10.0, 0.0, 20.0),
            (1.0, 90.0, -30.0, -29.0),
            (0.7, 0.0, 100.0, -100.0),
        ] {
            assert!(confidence(e, d, b, t, &p).value() <= detection_probability(e, d, &p));
        }
    }

    #[test]
    fn confidence_is_lipschitz_in_beam() {
        // |d/dθ exp(−θ²/2σ²)| peaks at θ = σ with value e^{−1/2}/σ.
        let p = attenuated();
        let bound = (-0.5f64).exp() / p.alignment_sigma_deg * 0.1 + 1e-12;
        let mut prev = confidence(1.0, 20.0, -90.0, 0.0, &p).value();
        for i in 1..=1800 {
            let beam = -90.0 + i as f64 * 0.1;
            let c = confidence(1.0, 20.0, beam, 0.0, &p).value();
            assert!((c - prev).abs() <= bound);
            prev = c;
        }
    }

    #[test]
    fn probabilities_stay_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for variant in [ModelVariant::Paper, ModelVariant::Attenuated] {
            let p = SensingParams {
                model_variant: variant,
                ..attenuated()
            };
            for _ in 0..500_000 {
                let e: f64 = rng.random();
                let d: f64 = rng.random_range(0.0..1000.0);
                let b: f64 = rng.random_range(-180.0..180.0);
                let t: f64 = rng.random_range(-180.0..180.0);
                let pd = detection_probability(e, d, &p);
                let c = confidence(e, d, b, t, &p).value();
                assert!((0.0..=1.0).contains(&pd) && (0.0..=1.0).contains(&c));
            }
        }
    }
}
