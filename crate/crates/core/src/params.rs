//! Radar configuration, derived resolution/ambiguity quantities and the
//! radar-equation detection range solver.
//!
//! Velocities are signed radial velocities: positive values close on the
//! radar (positive Doppler), negative values recede.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Pulse-Doppler radar configuration. Every derived quantity (CPI length,
/// resolutions, ambiguity interval) is computed from these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    /// Carrier frequency, Hz.
    pub carrier_frequency: f64,
    /// Pulse repetition frequency, Hz.
    pub prf: f64,
    /// Pulses per coherent processing interval.
    pub n_pulses: usize,
    /// Receiver (noise) bandwidth, Hz.
    pub bandwidth: f64,
    pub n_range_bins: usize,
    /// Peak transmit power, W.
    pub peak_power: f64,
    /// Receiver noise figure as a linear ratio.
    pub noise_figure: f64,
    /// Standard/system noise temperature, K.
    pub system_temperature: f64,
    /// Antenna gain as a linear ratio.
    pub antenna_gain: f64,
    /// Effective receive aperture, m².
    pub effective_aperture: f64,
}

impl RadarConfig {
    /// X-band surveillance configuration: 10.1 GHz, 11.4 kHz PRF, 2048 pulses,
    /// 5 MHz bandwidth and 512 range windows.
    pub fn reference() -> Self {
        Self {
            carrier_frequency: 10.1e9,
            prf: 11.4e3,
            n_pulses: 2048,
            bandwidth: 5.0e6,
            n_range_bins: 512,
            peak_power: 320.0,
            noise_figure: 10f64.powf(0.3),
            system_temperature: 290.0,
            antenna_gain: 10f64.powf(3.5),
            effective_aperture: 1.0,
        }
    }

    /// The longer-CPI waveform (8.7 kHz PRF, ~233.4 ms CPI) on the same radar.
    pub fn alternate_waveform() -> Self {
        Self {
            prf: 8.7e3,
            n_pulses: 2031,
            ..Self::reference()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_frequency", self.carrier_frequency),
            ("prf", self.prf),
            ("bandwidth", self.bandwidth),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {value}")));
            }
        }
        if self.n_pulses < 2 {
            return Err(Error::domain(format!(
                "n_pulses must be at least 2, got {}",
                self.n_pulses
            )));
        }
        if self.n_range_bins == 0 {
            return Err(Error::domain("n_range_bins must be at least 1"));
        }
        Ok(())
    }

    /// Coherent processing interval, `n_pulses / prf` seconds.
    pub fn cpi_seconds(&self) -> f64 {
        self.n_pulses as f64 / self.prf
    }

    /// Wavelength in metres; see [`wavelength`].
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth)
    }

    pub fn velocity_resolution(&self) -> f64 {
        self.wavelength() / (2.0 * self.cpi_seconds())
    }

    pub fn unambiguous_velocity(&self) -> f64 {
        unambiguous_velocity_for(self.wavelength(), self.prf)
    }

    /// Velocity of shifted Doppler cell `index` (cell `n_pulses / 2` is zero).
    pub fn velocity_of_index(&self, index: usize) -> f64 {
        velocity_axis_value(index, self.n_pulses, self.velocity_resolution())
    }
}

/// Radar-equation inputs that describe the target and the detection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetQuery {
    /// Target radar cross-section σ, m².
    pub target_rcs: f64,
    /// Required signal-to-noise ratio as a linear ratio.
    pub required_snr: f64,
    pub boltzmann_constant: f64,
}

impl LinkBudgetQuery {
    pub fn new(target_rcs: f64, required_snr: f64) -> Self {
        Self {
            target_rcs,
            required_snr,
            boltzmann_constant: BOLTZMANN,
        }
    }
}

/// λ = c / f.
pub fn wavelength(config: &RadarConfig) -> Result<f64> {
    wavelength_for(config.carrier_frequency)
}

pub fn wavelength_for(carrier_frequency: f64) -> Result<f64> {
    if !(carrier_frequency > 0.0) {
        return Err(Error::domain(format!(
            "carrier frequency must be positive, got {carrier_frequency}"
        )));
    }
    Ok(SPEED_OF_LIGHT / carrier_frequency)
}

/// Range resolution c / (2B).
pub fn range_resolution(bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * bandwidth))
}

/// Velocity resolution λ / (2·CPI).
pub fn velocity_resolution(config: &RadarConfig) -> Result<f64> {
    config.validate()?;
    Ok(config.velocity_resolution())
}

/// Half-width of the measurable velocity interval, λ·PRF/4.
pub fn unambiguous_velocity(config: &RadarConfig) -> Result<f64> {
    config.validate()?;
    Ok(config.unambiguous_velocity())
}

pub fn unambiguous_velocity_for(wavelength: f64, prf: f64) -> f64 {
    wavelength * prf / 4.0
}

/// Maps a true radial velocity into the half-open interval `[-v_ua, v_ua)`.
///
/// The result is `v_true - k·2v_ua` for the unique integer `k` that lands in
/// the interval, evaluated with a single rounding.
pub fn fold_velocity(v_true: f64, v_ua: f64) -> Result<f64> {
    if !(v_ua > 0.0) || !v_ua.is_finite() {
        return Err(Error::domain(format!(
            "unambiguous velocity must be positive, got {v_ua}"
        )));
    }
    if !v_true.is_finite() {
        return Err(Error::domain("velocity must be finite"));
    }
    let period = 2.0 * v_ua;
    let mut k = ((v_true + v_ua) / period).floor();
    let mut folded = (-k).mul_add(period, v_true);
    // the quotient above is rounded, so k can be one off near the edges
    while folded >= v_ua {
        k += 1.0;
        folded = (-k).mul_add(period, v_true);
    }
    while folded < -v_ua {
        k -= 1.0;
        folded = (-k).mul_add(period, v_true);
    }
    Ok(folded)
}

/// Maximum detection range from the radar equation,
/// `R = (P_t·G·A_e·σ / ((4π)²·k·T_0·B_n·F_n·C_SNR))^(1/4)`.
///
/// Gain and effective aperture enter as independent factors.
pub fn detection_range(config: &RadarConfig, query: &LinkBudgetQuery) -> Result<f64> {
    let factors = [
        ("peak_power", config.peak_power),
        ("antenna_gain", config.antenna_gain),
        ("effective_aperture", config.effective_aperture),
        ("target_rcs", query.target_rcs),
        ("boltzmann_constant", query.boltzmann_constant),
        ("system_temperature", config.system_temperature),
        ("bandwidth", config.bandwidth),
        ("noise_figure", config.noise_figure),
        ("required_snr", query.required_snr),
    ];
    for (name, value) in factors {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::domain(format!("{name} must be positive, got {value}")));
        }
    }
    let numerator =
        config.peak_power * config.antenna_gain * config.effective_aperture * query.target_rcs;
    let denominator = (4.0 * PI).powi(2)
        * query.boltzmann_constant
        * config.system_temperature
        * config.bandwidth
        * config.noise_figure
        * query.required_snr;
    Ok((numerator / denominator).sqrt().sqrt())
}

/// 10·log10(signal / noise).
pub fn snr_db(signal_power: f64, noise_power: f64) -> Result<f64> {
    if !(signal_power > 0.0) || !(noise_power > 0.0) {
        return Err(Error::domain(format!(
            "powers must be positive, got signal {signal_power} noise {noise_power}"
        )));
    }
    Ok(10.0 * (signal_power / noise_power).log10())
}

/// Velocity of shifted FFT index `index` for an `n`-point axis with step `resolution`.
pub fn velocity_axis_value(index: usize, n: usize, resolution: f64) -> f64 {
    (index as f64 - (n / 2) as f64) * resolution
}

/// Nearest shifted FFT index for velocity `v`, wrapping aliased values.
pub fn index_of_velocity(v: f64, n: usize, resolution: f64) -> usize {
    let offset = (v / resolution).round() as i64 + (n / 2) as i64;
    offset.rem_euclid(n as i64) as usize
}
