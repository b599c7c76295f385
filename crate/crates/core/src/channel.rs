//! Geometric line-of-sight mmWave link between the base station and a
//! single-antenna receiver.
//!
//! The base station carries a uniform planar array (UPA). Element `(m, n)`
//! of the array response towards azimuth `θ` and elevation `φ` has phase
//!
//! ```text
//! 2π · d · (m · sin θ · cos φ + n · sin φ)
//! ```
//!
//! with `d` the element spacing in wavelengths. The channel is free-space
//! (Friis) path loss times that response, and the user SINR is
//! `|hᴴw|² / σ²`. Power math is done in linear watts; dB only appears at
//! the public surface.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// SINR reported when the beam sits exactly in a null of the user channel.
pub const SINR_FLOOR_DB: f64 = -200.0;

/// Speed of light used by the delay model (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space constant `20·log10(4π/c)` rounded as it is usually quoted.
const FRIIS_CONSTANT_DB: f64 = -147.55;

/// Wraps an angle in degrees to `[-180, 180)`.
pub fn wrap_degrees(angle: f64) -> f64 {
    let wrapped = (angle + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can return exactly 360.0 for tiny negative inputs.
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Smallest signed difference `a - b` in degrees, in `[-180, 180)`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    wrap_degrees(a - b)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 8,
            element_spacing: 0.5,
            carrier_frequency: 28e9,
        }
    }
}

impl ArrayConfig {
    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("array must have at least one row and column".into()));
        }
        if !(self.element_spacing > 0.0) {
            return Err(Error::Config("array.element_spacing must be > 0".into()));
        }
        if !(self.carrier_frequency > 0.0) {
            return Err(Error::Config("array.carrier_frequency must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    /// Total transmit power (dBm).
    pub tx_power_dbm: f64,
    /// Noise power spectral density (dBm/Hz).
    pub noise_psd_dbm_hz: f64,
    /// Bandwidth (Hz).
    pub bandwidth_hz: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power_dbm: 30.0,
            noise_psd_dbm_hz: -174.0,
            bandwidth_hz: 100e6,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config("budget.bandwidth_hz must be > 0".into()));
        }
        if !self.tx_power_dbm.is_finite() || !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::Config("budget powers must be finite".into()));
        }
        Ok(())
    }

    pub fn noise_power_watts(&self) -> Result<f64> {
        noise_power(self).map(dbm_to_watts)
    }
}

/// Thermal noise power over the configured bandwidth, in dBm.
pub fn noise_power(budget: &LinkBudget) -> Result<f64> {
    if !(budget.bandwidth_hz > 0.0) {
        return Err(Error::Config(format!(
            "bandwidth must be positive, got {}",
            budget.bandwidth_hz
        )));
    }
    Ok(budget.noise_psd_dbm_hz + 10.0 * budget.bandwidth_hz.log10())
}

/// Complex vector with one entry per array element, row-major over `(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(pub Vec<Complex64>);

/// Unit-norm beamforming weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights(Vec<Complex64>);

impl ChannelVector {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }
}

impl BeamWeights {
    /// Normalizes arbitrary coefficients to unit Euclidean norm.
    pub fn from_coefficients(coefficients: Vec<Complex64>) -> Result<Self> {
        let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidInput(
                "beam weights must have a finite non-zero norm".into(),
            ));
        }
        Ok(Self(coefficients.into_iter().map(|c| c / norm).collect()))
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Unit-modulus array response (`‖a‖² = N`).
pub fn array_response(azimuth_deg: f64, elevation_deg: f64, array: &ArrayConfig) -> Vec<Complex64> {
    let az = wrap_degrees(azimuth_deg).to_radians();
    let el = elevation_deg.clamp(-90.0, 90.0).to_radians();
    let u = az.sin() * el.cos();
    let v = el.sin();
    let k = 2.0 * PI * array.element_spacing;
    let mut out = Vec::with_capacity(array.num_elements());
    for m in 0..array.rows {
        for n in 0..array.cols {
            let phase = k * (m as f64 * u + n as f64 * v);
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    out
}

/// Array response normalized so that every element has magnitude `1/√N`.
pub fn steering_vector(azimuth_deg: f64, elevation_deg: f64, array: &ArrayConfig) -> ChannelVector {
    let scale = 1.0 / (array.num_elements() as f64).sqrt();
    ChannelVector(
        array_response(azimuth_deg, elevation_deg, array)
            .into_iter()
            .map(|c| c * scale)
            .collect(),
    )
}

/// Friis free-space path loss in dB. Distances below 1 m are clamped to 1 m.
pub fn path_loss(distance_m: f64, frequency_hz: f64) -> f64 {
    let d = distance_m.max(1.0);
    20.0 * d.log10() + 20.0 * frequency_hz.log10() + FRIIS_CONSTANT_DB
}

/// Received power per element (watts) at `distance_m` before array gain.
pub fn received_power_watts(distance_m: f64, array: &ArrayConfig, budget: &LinkBudget) -> f64 {
    dbm_to_watts(budget.tx_power_dbm - path_loss(distance_m, array.carrier_frequency))
}

/// Channel from the base station to a receiver at the given polar position.
///
/// `h = √P_rx · a(θ, φ)` with `a` the unit-modulus array response, so a
/// matched unit-norm beam collects the full `N·P_rx`.
pub fn channel_vector(
    range_m: f64,
    azimuth_deg: f64,
    elevation_deg: f64,
    array: &ArrayConfig,
    budget: &LinkBudget,
) -> Result<ChannelVector> {
    if !(range_m > 0.0) || !range_m.is_finite() {
        return Err(Error::InvalidInput(format!(
            "receiver must be away from the base station (range {range_m} m)"
        )));
    }
    if !azimuth_deg.is_finite() || !elevation_deg.is_finite() {
        return Err(Error::NonFinite("receiver angles"));
    }
    let amplitude = received_power_watts(range_m, array, budget).sqrt();
    Ok(ChannelVector(
        array_response(azimuth_deg, elevation_deg, array)
            .into_iter()
            .map(|c| c * amplitude)
            .collect(),
    ))
}

/// Matched beam towards `beam_azimuth_deg` in the horizontal plane.
///
/// Weights are chosen so that `hᴴw` sums coherently for a channel arriving
/// from the same direction (the conjugate-matched beamformer for the `hᴴw`
/// convention).
pub fn beam_weights(beam_azimuth_deg: f64, array: &ArrayConfig) -> BeamWeights {
    BeamWeights(steering_vector(beam_azimuth_deg, 0.0, array).0)
}

/// `hᴴw`.
pub fn beam_response(h: &ChannelVector, w: &BeamWeights) -> Complex64 {
    h.0.iter().zip(&w.0).map(|(hi, wi)| hi.conj() * wi).sum()
}

/// `10·log10(|hᴴw|² / σ²)` with a floor of [`SINR_FLOOR_DB`] at exact nulls.
pub fn sinr(h: &ChannelVector, w: &BeamWeights, noise_watts: f64) -> Result<f64> {
    if !(noise_watts > 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise power must be > 0, got {noise_watts}"
        )));
    }
    let gain = beam_response(h, w).norm_sqr();
    if gain == 0.0 {
        return Ok(SINR_FLOOR_DB);
    }
    Ok(linear_to_db(gain / noise_watts).max(SINR_FLOOR_DB))
}
