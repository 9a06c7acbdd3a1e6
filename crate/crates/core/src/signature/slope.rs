use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::{Spectrogram, DEFAULT_NOTCH_HALF_WIDTH};
use crate::error::{Error, Result};
use crate::signature::WakeStage;

/// Sign of the time/Doppler slope of a wake ridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeSign {
    Positive,
    Mixed,
    Negative,
}

impl SlopeSign {
    /// Young wakes drift up, mature wakes both ways, old and decaying wakes down.
    pub fn for_stage(stage: WakeStage) -> Self {
        match stage {
            WakeStage::Young => SlopeSign::Positive,
            WakeStage::Mature => SlopeSign::Mixed,
            WakeStage::Old | WakeStage::Decaying => SlopeSign::Negative,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SlopeSign::Positive => SlopeSign::Negative,
            SlopeSign::Negative => SlopeSign::Positive,
            SlopeSign::Mixed => SlopeSign::Mixed,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SlopeSign::Positive => "positive",
            SlopeSign::Mixed => "mixed",
            SlopeSign::Negative => "negative",
        }
    }
}

impl fmt::Display for SlopeSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlopeSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "positive" => Ok(SlopeSign::Positive),
            "mixed" => Ok(SlopeSign::Mixed),
            "negative" => Ok(SlopeSign::Negative),
            other => Err(Error::Config(format!("unknown slope sign `{other}`"))),
        }
    }
}

/// Window length for slope analysis. Longer than the display default so
/// neighbouring scatterers are resolved and a drift of one or two CPI cells
/// is measurable.
pub const SLOPE_WIN_LEN: usize = 1024;
pub const SLOPE_HOP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeConfig {
    /// Slopes smaller than this many full-CPI velocity cells per CPI count as flat.
    pub dead_band_cells: f64,
    pub notch_half_width: f64,
    /// A spectrogram carries signal when its strongest time-averaged cell
    /// exceeds this multiple of the median cell, in magnitude.
    pub ridge_to_median: f64,
    /// Ridges below this fraction of the strongest ridge's power are ignored.
    pub secondary_power_ratio: f64,
    /// The result is mixed when ridges drifting against the overall sign
    /// carry at least this multiple of the weight of those drifting with it.
    pub mixed_weight_ratio: f64,
    pub max_ridges: usize,
    /// Half-width, in spectrogram cells, of the band over which a ridge's drift is measured.
    pub ridge_half_width: usize,
}

impl Default for SlopeConfig {
    fn default() -> Self {
        Self {
            dead_band_cells: 0.5,
            notch_half_width: DEFAULT_NOTCH_HALF_WIDTH,
            ridge_to_median: 4.0,
            secondary_power_ratio: 0.5,
            mixed_weight_ratio: 0.8,
            max_ridges: 3,
            ridge_half_width: 3,
        }
    }
}

/// A ridge of the time-averaged spectrum and its measured drift.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub velocity: f64,
    /// Drift in full-CPI velocity cells per CPI.
    pub slope_cells: f64,
    /// Mean power of the ridge cell.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimate {
    pub sign: SlopeSign,
    /// Drift of the whole unmasked spectrum, full-CPI velocity cells per CPI.
    pub slope_cells: f64,
    pub ridges: Vec<RidgeFit>,
}

/// Gradient sums of the brightness-constancy fit `∂S/∂t + s·∂S/∂v = 0`.
/// Their ratio is the drift `s`. Amplitude changes of a symmetric peak add
/// nothing to `cross`, so gated scatterers do not bias the estimate.
#[derive(Debug, Clone, Copy, Default)]
struct FlowSums {
    cross: f64,
    gradient: f64,
}

impl FlowSums {
    fn add(&mut self, other: FlowSums) {
        self.cross += other.cross;
        self.gradient += other.gradient;
    }

    fn slope(&self) -> f64 {
        if self.gradient > 0.0 {
            -self.cross / self.gradient
        } else {
            0.0
        }
    }
}

/// Classifies the time/Doppler slope of one spectrogram.
pub fn slope_sign_classify(spectrogram: &Spectrogram, config: &SlopeConfig) -> Result<SlopeEstimate> {
    slope_sign_classify_pooled(std::slice::from_ref(spectrogram), config)
}

/// Classifies the common slope of several spectrograms, typically the range
/// bins of one wake segment.
///
/// The drift is fitted to the whole unmasked time/Doppler surface by least
/// squares on its gradients, in full-CPI cells per CPI, and compared against
/// a dead-band. Ridges of the time-averaged spectrum are fitted the same way
/// inside a narrow band; when ridges drifting against the overall sign carry
/// a large share of the ridge weight the result is `Mixed`. Spectrograms
/// without signal are skipped.
pub fn slope_sign_classify_pooled(spectrograms: &[Spectrogram], config: &SlopeConfig) -> Result<SlopeEstimate> {
    let mut total = FlowSums::default();
    let mut ridges: Vec<(RidgeFit, f64)> = Vec::new();
    let mut with_signal = 0;
    let mut slices = 0;
    for sg in spectrograms {
        let n_slices = sg.n_slices();
        if n_slices < 3 {
            return Err(Error::domain(format!(
                "slope fit needs at least 3 slices, got {n_slices}"
            )));
        }
        slices += n_slices;
        let axis = &sg.velocity_axis;
        let unmasked: Vec<bool> = axis
            .iter()
            .map(|v| v.abs() > config.notch_half_width + 1e-9)
            .collect();
        let mut mean_power = vec![0.0; axis.len()];
        for slice in &sg.magnitudes {
            for (m, a) in mean_power.iter_mut().zip(slice) {
                *m += a * a / n_slices as f64;
            }
        }
        let candidates = ridge_candidates(&mean_power, &unmasked, config);
        let Some(&top) = candidates.first() else { continue };
        let median = median_unmasked(&mean_power, &unmasked);
        if !(mean_power[top] > config.ridge_to_median.powi(2) * median) {
            continue;
        }
        with_signal += 1;
        // cross sums scale with the slope unit, gradient sums do not
        let unit = sg.cpi_seconds / sg.cpi_velocity_resolution;
        let scaled = |f: FlowSums| FlowSums {
            cross: f.cross * unit,
            gradient: f.gradient,
        };
        total.add(scaled(flow_sums(sg, &unmasked, 0, axis.len() - 1)));
        let w = config.ridge_half_width;
        for cell in candidates {
            let f = scaled(flow_sums(sg, &unmasked, cell.saturating_sub(w), cell + w));
            ridges.push((
                RidgeFit {
                    velocity: axis[cell],
                    slope_cells: f.slope(),
                    power: mean_power[cell],
                },
                f.gradient,
            ));
        }
    }
    if with_signal == 0 {
        return Err(Error::InsufficientSignal { found: 0, total: slices });
    }

    let slope = total.slope();
    let dead = config.dead_band_cells;
    let sign_of = |s: f64| {
        if s.abs() < dead {
            SlopeSign::Mixed
        } else if s > 0.0 {
            SlopeSign::Positive
        } else {
            SlopeSign::Negative
        }
    };
    let mut sign = sign_of(slope);
    if sign != SlopeSign::Mixed {
        let weight = |s: SlopeSign| -> f64 {
            ridges
                .iter()
                .filter(|(r, _)| sign_of(r.slope_cells) == s)
                .map(|(_, g)| g)
                .sum()
        };
        let (along, against) = (weight(sign), weight(sign.flipped()));
        if against > 0.0 && against >= config.mixed_weight_ratio * along {
            sign = SlopeSign::Mixed;
        }
    }
    Ok(SlopeEstimate {
        sign,
        slope_cells: slope,
        ridges: ridges.into_iter().map(|(r, _)| r).collect(),
    })
}

/// Gradient sums over cells `lo..=hi` whose two neighbours on each side
/// are unmasked too. The Doppler derivative uses a five-point stencil; the
/// three-point one underestimates the slope of a window main lobe.
fn flow_sums(sg: &Spectrogram, unmasked: &[bool], lo: usize, hi: usize) -> FlowSums {
    let axis = &sg.velocity_axis;
    let n = axis.len();
    let mut sums = FlowSums::default();
    if n < 5 {
        return sums;
    }
    let dv = (axis[n - 1] - axis[0]) / (n - 1) as f64;
    for t in 0..sg.n_slices() - 1 {
        let dt = sg.time_axis[t + 1] - sg.time_axis[t];
        if !(dt > 0.0) {
            continue;
        }
        let (a, b) = (&sg.magnitudes[t], &sg.magnitudes[t + 1]);
        let m = |i: usize| a[i] + b[i];
        for i in lo.max(2)..=hi.min(n - 3) {
            if !unmasked[i - 2..=i + 2].iter().all(|&u| u) {
                continue;
            }
            let st = (b[i] - a[i]) / dt;
            let sv = (8.0 * (m(i + 1) - m(i - 1)) - (m(i + 2) - m(i - 2))) / (24.0 * dv);
            sums.cross += st * sv;
            sums.gradient += sv * sv;
        }
    }
    sums
}

/// Local maxima of the averaged power, strongest first, pairwise at least
/// three cells apart.
fn ridge_candidates(power: &[f64], unmasked: &[bool], config: &SlopeConfig) -> Vec<usize> {
    let n = power.len();
    let mut maxima: Vec<usize> = (0..n)
        .filter(|&i| unmasked[i])
        .filter(|&i| {
            let left = if i > 0 { power[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < n { power[i + 1] } else { f64::NEG_INFINITY };
            power[i] > 0.0 && power[i] >= left && power[i] > right
        })
        .collect();
    maxima.sort_by(|&a, &b| power[b].total_cmp(&power[a]).then(a.cmp(&b)));
    let Some(&top) = maxima.first() else {
        return Vec::new();
    };
    let floor = config.secondary_power_ratio * power[top];
    let mut chosen: Vec<usize> = Vec::new();
    for i in maxima {
        if chosen.len() >= config.max_ridges || power[i] < floor {
            break;
        }
        if chosen.iter().all(|&c| c.abs_diff(i) >= 3) {
            chosen.push(i);
        }
    }
    chosen
}

fn median_unmasked(values: &[f64], unmasked: &[bool]) -> f64 {
    let mut v: Vec<f64> = values
        .iter()
        .zip(unmasked)
        .filter(|(_, &u)| u)
        .map(|(&a, _)| a)
        .collect();
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    v.select_nth_unstable_by(mid, f64::total_cmp);
    v[mid]
}
