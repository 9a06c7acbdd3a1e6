//! Aircraft body line plus jet-engine modulation combs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{fold_velocity, RadarConfig};

/// First blade stage comb, centred on the body line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JemStage1 {
    pub line_spacing: f64,
    pub n_lines_each_side: usize,
    pub relative_amplitude: f64,
}

/// Second blade stage comb, centred at `body + series_offset`. It carries as
/// many lines per side as the first stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JemStage2 {
    pub line_spacing: f64,
    pub series_offset: f64,
    pub relative_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftSpec {
    /// Range bin at frame 0.
    pub range_bin: usize,
    /// True radial velocity, m/s; negative recedes.
    pub radial_velocity_true: f64,
    /// Target per-bin SNR, dB.
    pub snr_target: f64,
    pub jem_stage1: JemStage1,
    pub jem_stage2: JemStage2,
    /// Wingspan, m.
    pub wingspan: f64,
}

impl AircraftSpec {
    /// Medium twin-jet receding at 140.1 m/s with a 14.4 m/s first-stage comb
    /// and a weaker second-stage comb offset by 2.9 m/s.
    pub fn reference(range_bin: usize) -> Self {
        Self {
            range_bin,
            radial_velocity_true: -140.1,
            snr_target: 52.35,
            jem_stage1: JemStage1 {
                line_spacing: 14.4,
                n_lines_each_side: 5,
                relative_amplitude: 0.15,
            },
            jem_stage2: JemStage2 {
                line_spacing: 14.4,
                series_offset: 2.9,
                relative_amplitude: 0.075,
            },
            wingspan: 34.32,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if !(self.wingspan > 0.0) {
            return Err(Error::domain("wingspan must be positive"));
        }
        let a1 = self.jem_stage1.relative_amplitude;
        let a2 = self.jem_stage2.relative_amplitude;
        if !(0.0..=1.0).contains(&a1) || !(0.0..=1.0).contains(&a2) {
            return Err(Error::domain("JEM relative amplitudes must lie in [0, 1]"));
        }
        if a2 > a1 {
            return Err(Error::domain(
                "second-stage JEM amplitude must not exceed the first stage",
            ));
        }
        if self.jem_stage1.line_spacing <= 0.0 && a1 > 0.0 {
            return Err(Error::domain("stage-1 line spacing must be positive"));
        }
        if self.jem_stage2.line_spacing <= 0.0 && a2 > 0.0 {
            return Err(Error::domain("stage-2 line spacing must be positive"));
        }
        Ok(())
    }
}

/// A spectral line of the aircraft signature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AircraftLine {
    /// Folded velocity, m/s.
    pub velocity: f64,
    pub amplitude: f64,
}

/// Body and comb lines, folded into the measurable interval.
pub fn aircraft_lines(spec: &AircraftSpec, config: &RadarConfig) -> Vec<AircraftLine> {
    let v_ua = config.unambiguous_velocity();
    let fold = |v: f64| fold_velocity(v, v_ua).unwrap_or(v);
    let body = spec.radial_velocity_true;
    let mut lines = vec![AircraftLine {
        velocity: fold(body),
        amplitude: 1.0,
    }];
    let s1 = spec.jem_stage1;
    if s1.relative_amplitude > 0.0 {
        for k in 1..=s1.n_lines_each_side {
            for sign in [-1.0, 1.0] {
                lines.push(AircraftLine {
                    velocity: fold(body + sign * k as f64 * s1.line_spacing),
                    amplitude: s1.relative_amplitude,
                });
            }
        }
    }
    let s2 = spec.jem_stage2;
    if s2.relative_amplitude > 0.0 {
        let centre = body + s2.series_offset;
        lines.push(AircraftLine {
            velocity: fold(centre),
            amplitude: s2.relative_amplitude,
        });
        for k in 1..=s1.n_lines_each_side {
            for sign in [-1.0, 1.0] {
                lines.push(AircraftLine {
                    velocity: fold(centre + sign * k as f64 * s2.line_spacing),
                    amplitude: s2.relative_amplitude,
                });
            }
        }
    }
    lines
}

/// Pulse series of the aircraft with mean power exactly `power`.
///
/// Line phases follow a fixed quadratic law so the series is deterministic
/// and has a low crest factor.
pub fn aircraft_pulse_series(spec: &AircraftSpec, config: &RadarConfig, power: f64) -> Vec<Complex64> {
    let lines = aircraft_lines(spec, config);
    let n = config.n_pulses;
    let k = 2.0 * PI * 2.0 / (config.wavelength() * config.prf);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let m = lines.len() as f64;
    for (i, line) in lines.iter().enumerate() {
        let phase0 = PI * (i * i) as f64 / m;
        let w = k * line.velocity;
        for (p, s) in out.iter_mut().enumerate() {
            *s += Complex64::from_polar(line.amplitude, phase0 + w * p as f64);
        }
    }
    scale_to_power(&mut out, power);
    out
}

/// Rescales `series` so its mean power equals `power`.
pub(crate) fn scale_to_power(series: &mut [Complex64], power: f64) {
    let current = series.iter().map(|z| z.norm_sqr()).sum::<f64>() / series.len().max(1) as f64;
    if current > 0.0 && power >= 0.0 {
        let g = (power / current).sqrt();
        for s in series.iter_mut() {
            *s *= g;
        }
    }
}
