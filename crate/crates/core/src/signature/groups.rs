use serde::{Deserialize, Serialize};

use crate::detect::DopplerPeak;

/// Descriptive statistics of the Doppler peaks of one bin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DopplerGroupStats {
    pub n_peaks: usize,
    /// Mean of |velocity|, m/s.
    pub mean_speed: f64,
    /// Population standard deviation of the velocities, m/s.
    pub peak_spread: f64,
    /// Fraction of peaks with negative velocity, by count.
    pub negative_fraction: f64,
    /// Mean peak amplitude.
    pub magnitude_level: f64,
}

pub fn doppler_group_stats(peaks: &[DopplerPeak]) -> DopplerGroupStats {
    if peaks.is_empty() {
        return DopplerGroupStats::default();
    }
    let n = peaks.len() as f64;
    let mean_v = peaks.iter().map(|p| p.velocity).sum::<f64>() / n;
    let var = peaks.iter().map(|p| (p.velocity - mean_v).powi(2)).sum::<f64>() / n;
    DopplerGroupStats {
        n_peaks: peaks.len(),
        mean_speed: peaks.iter().map(|p| p.velocity.abs()).sum::<f64>() / n,
        peak_spread: var.sqrt(),
        negative_fraction: peaks.iter().filter(|p| p.velocity < 0.0).count() as f64 / n,
        magnitude_level: peaks.iter().map(|p| p.amplitude).sum::<f64>() / n,
    }
}
