//! Doppler spectra, range-Doppler maps and micro-Doppler spectrograms.
//!
//! Spectra are magnitude spectra, FFT-shifted so that cell `N/2` is zero
//! velocity and cell `i` sits at `(i - N/2)·Δv`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::{Complex32, Complex64};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{velocity_axis_value, RadarConfig};
use crate::sim::CpiFrame;

/// Default spectrogram window length in pulses.
pub const DEFAULT_WIN_LEN: usize = 256;
/// Default spectrogram hop in pulses.
pub const DEFAULT_HOP: usize = 64;
/// Default clutter notch half-width, m/s.
pub const DEFAULT_NOTCH_HALF_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            // periodic Hann
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// Magnitude spectrum of one range bin over one CPI.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerSpectrum {
    pub amplitudes: Vec<f64>,
    pub velocity_axis: Vec<f64>,
    pub bin_index: usize,
    /// `true` marks a cell excluded as clutter.
    pub notch_mask: Vec<bool>,
}

impl DopplerSpectrum {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Velocity step between adjacent cells.
    pub fn resolution(&self) -> f64 {
        if self.velocity_axis.len() < 2 {
            return 0.0;
        }
        self.velocity_axis[1] - self.velocity_axis[0]
    }

    pub fn mean_amplitude(&self) -> f64 {
        if self.amplitudes.is_empty() {
            return 0.0;
        }
        self.amplitudes.iter().sum::<f64>() / self.amplitudes.len() as f64
    }

    /// Nearest cell to velocity `v`, clamped to the axis.
    pub fn index_of(&self, v: f64) -> usize {
        let n = self.len();
        let res = self.resolution();
        if n == 0 || res == 0.0 {
            return 0;
        }
        let i = (v / res).round() + (n / 2) as f64;
        i.clamp(0.0, (n - 1) as f64) as usize
    }

    /// Sub-cell peak position by parabolic interpolation of the magnitudes
    /// around `index`, returned as a velocity.
    pub fn interpolated_velocity(&self, index: usize) -> f64 {
        interpolate_peak(&self.amplitudes, index, &self.velocity_axis)
    }
}

/// One Doppler spectrum per range bin for a single CPI.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    pub rows: Vec<DopplerSpectrum>,
    pub frame_index: u32,
}

/// Short-time magnitude spectra within a single CPI.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// `[slice][velocity cell]`.
    pub magnitudes: Vec<Vec<f64>>,
    /// Slice centre times, seconds from CPI start.
    pub time_axis: Vec<f64>,
    pub velocity_axis: Vec<f64>,
    pub cpi_seconds: f64,
    /// Full-CPI velocity resolution, the unit of slope dead-bands.
    pub cpi_velocity_resolution: f64,
}

impl Spectrogram {
    pub fn n_slices(&self) -> usize {
        self.magnitudes.len()
    }

    /// The same spectrogram with its slices in reverse time order.
    pub fn time_reversed(&self) -> Self {
        let mut magnitudes = self.magnitudes.clone();
        magnitudes.reverse();
        Self {
            magnitudes,
            ..self.clone()
        }
    }
}

/// A complex baseband sample in either precision.
pub trait IqSample: Copy {
    fn to_c64(self) -> Complex64;
}

impl IqSample for Complex64 {
    fn to_c64(self) -> Complex64 {
        self
    }
}

impl IqSample for Complex32 {
    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }
}

/// Reusable FFT plan for a fixed transform length.
#[derive(Clone)]
pub struct SpectrumEngine {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    len: usize,
}

impl SpectrumEngine {
    pub fn new(len: usize, window: Window) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        Self {
            fft,
            window: window.coefficients(len),
            len,
        }
    }

    /// Windowed, FFT-shifted magnitude spectrum of `samples`.
    pub fn magnitudes<T>(&self, samples: &[T]) -> Result<Vec<f64>>
    where
        T: IqSample,
    {
        if samples.len() != self.len {
            return Err(Error::Dimension {
                expected: self.len,
                actual: samples.len(),
            });
        }
        let mut buf: Vec<Complex64> = samples
            .iter()
            .zip(&self.window)
            .map(|(&s, &w)| s.to_c64() * w)
            .collect();
        self.fft.process(&mut buf);
        let n = self.len;
        let half = n / 2;
        Ok((0..n)
            .map(|i| buf[(i + n - half) % n].norm())
            .collect())
    }
}

fn velocity_axis(n: usize, resolution: f64) -> Vec<f64> {
    (0..n).map(|i| velocity_axis_value(i, n, resolution)).collect()
}

/// Doppler spectrum of one range bin's pulse series.
pub fn doppler_spectrum(
    pulses: &[Complex64],
    config: &RadarConfig,
    window: Window,
) -> Result<DopplerSpectrum> {
    config.validate()?;
    let engine = SpectrumEngine::new(config.n_pulses, window);
    spectrum_with(&engine, pulses, config, 0)
}

fn spectrum_with<T>(
    engine: &SpectrumEngine,
    pulses: &[T],
    config: &RadarConfig,
    bin_index: usize,
) -> Result<DopplerSpectrum>
where
    T: IqSample,
{
    let amplitudes = engine.magnitudes(pulses)?;
    let n = amplitudes.len();
    Ok(DopplerSpectrum {
        amplitudes,
        velocity_axis: velocity_axis(n, config.velocity_resolution()),
        bin_index,
        notch_mask: vec![false; n],
    })
}

/// Spectrum of every range bin in `frame`. Rows are computed in parallel and
/// equal the serial per-row result exactly.
pub fn range_doppler_map(
    frame: &CpiFrame,
    config: &RadarConfig,
    window: Window,
) -> Result<RangeDopplerMap> {
    config.validate()?;
    if frame.n_bins != config.n_range_bins || frame.n_pulses != config.n_pulses {
        return Err(Error::Dimension {
            expected: config.n_range_bins * config.n_pulses,
            actual: frame.n_bins * frame.n_pulses,
        });
    }
    let engine = SpectrumEngine::new(config.n_pulses, window);
    let rows = (0..frame.n_bins)
        .into_par_iter()
        .map(|bin| spectrum_with::<Complex32>(&engine, frame.bin(bin), config, bin))
        .collect::<Result<Vec<_>>>()?;
    Ok(RangeDopplerMap {
        rows,
        frame_index: frame.frame_index,
    })
}

/// Masks every cell with `|v| ≤ half_width`. Amplitudes are left untouched and
/// cells already masked stay masked.
pub fn notch_clutter(spectrum: &DopplerSpectrum, half_width: f64) -> DopplerSpectrum {
    let limit = half_width.max(0.0) + 1e-9;
    let notch_mask = spectrum
        .velocity_axis
        .iter()
        .zip(&spectrum.notch_mask)
        .map(|(v, &m)| m || v.abs() <= limit)
        .collect();
    DopplerSpectrum {
        notch_mask,
        ..spectrum.clone()
    }
}

/// Short-time Fourier magnitudes over sliding windows of one CPI.
pub fn micro_doppler_spectrogram(
    pulses: &[Complex64],
    config: &RadarConfig,
    win_len: usize,
    hop: usize,
    window: Window,
) -> Result<Spectrogram> {
    config.validate()?;
    if pulses.len() != config.n_pulses {
        return Err(Error::Dimension {
            expected: config.n_pulses,
            actual: pulses.len(),
        });
    }
    if win_len < 2 || win_len > config.n_pulses {
        return Err(Error::domain(format!(
            "window length {win_len} outside [2, {}]",
            config.n_pulses
        )));
    }
    if hop == 0 {
        return Err(Error::domain("hop must be at least 1"));
    }
    let engine = SpectrumEngine::new(win_len, window);
    let n_slices = (config.n_pulses - win_len) / hop + 1;
    let magnitudes = (0..n_slices)
        .into_par_iter()
        .map(|s| engine.magnitudes(&pulses[s * hop..s * hop + win_len]))
        .collect::<Result<Vec<_>>>()?;
    let time_axis = (0..n_slices)
        .map(|s| (s * hop) as f64 / config.prf + win_len as f64 / (2.0 * config.prf))
        .collect();
    let slice_resolution = config.wavelength() * config.prf / (2.0 * win_len as f64);
    Ok(Spectrogram {
        magnitudes,
        time_axis,
        velocity_axis: velocity_axis(win_len, slice_resolution),
        cpi_seconds: config.cpi_seconds(),
        cpi_velocity_resolution: config.velocity_resolution(),
    })
}

/// Parabolic interpolation of a peak at `index`, mapped onto `axis`.
pub(crate) fn interpolate_peak(values: &[f64], index: usize, axis: &[f64]) -> f64 {
    let n = values.len();
    if index == 0 || index + 1 >= n || axis.len() < 2 {
        return axis[index];
    }
    let (a, b, c) = (values[index - 1], values[index], values[index + 1]);
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > f64::EPSILON * b.abs().max(1.0) {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    axis[index] + delta * (axis[1] - axis[0])
}
