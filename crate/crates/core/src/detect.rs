//! DSCR detector, dominant-Doppler selection and per-bin classification.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{notch_clutter, DopplerSpectrum, RangeDopplerMap, Window, DEFAULT_NOTCH_HALF_WIDTH};
use crate::error::{Error, Result};
use crate::signature::{jem_comb_estimate_with, stage_from_distance, JemComb, JemConfig, WakeStage};

/// Default peak prominence, as a fraction of the strongest unmasked cell.
pub const DEFAULT_PROMINENCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionClass {
    Aircraft,
    Wake,
    Other,
    Noise,
}

impl DetectionClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectionClass::Aircraft => "aircraft",
            DetectionClass::Wake => "wake",
            DetectionClass::Other => "other",
            DetectionClass::Noise => "noise",
        }
    }
}

impl fmt::Display for DetectionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aircraft" => Ok(DetectionClass::Aircraft),
            "wake" => Ok(DetectionClass::Wake),
            "other" => Ok(DetectionClass::Other),
            "noise" => Ok(DetectionClass::Noise),
            other => Err(Error::Config(format!("unknown detection class `{other}`"))),
        }
    }
}

/// A local spectral maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerPeak {
    /// Sub-cell velocity, m/s.
    pub velocity: f64,
    pub amplitude: f64,
    /// Spectrum cell of the maximum.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_index: u32,
    pub bin_index: usize,
    pub range_m: f64,
    pub class: DetectionClass,
    pub snr_db: f64,
    pub dscr_db: f64,
    pub dominant_velocity: f64,
    pub doppler_peaks: Vec<DopplerPeak>,
    pub stage: Option<WakeStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jem: Option<JemComb>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub notch_half_width: f64,
    pub dscr_threshold: f64,
    pub aircraft_min_speed: f64,
    pub wake_speed_band: [f64; 2],
    pub min_peaks_for_wake: usize,
    /// Prominence fraction used when listing Doppler peaks.
    pub peak_prominence: f64,
    /// Largest hole, in bins, bridged inside a wake extent.
    pub wake_gap_tolerance: usize,
    /// Lines needed to confirm a JEM comb on a slow bin.
    pub jem_min_lines: usize,
    /// Wingspan used to stage wake bins, m.
    pub wingspan: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            notch_half_width: DEFAULT_NOTCH_HALF_WIDTH,
            dscr_threshold: 8.0,
            aircraft_min_speed: 15.0,
            wake_speed_band: [2.0, 12.0],
            min_peaks_for_wake: 2,
            peak_prominence: DEFAULT_PROMINENCE,
            wake_gap_tolerance: 3,
            jem_min_lines: 5,
            wingspan: 34.32,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.wake_speed_band;
        if !(self.dscr_threshold > 0.0) {
            return Err(Error::domain("DSCR threshold must be positive"));
        }
        if !(0.0 <= lo && lo < hi) {
            return Err(Error::domain(format!("wake speed band [{lo}, {hi}] is empty")));
        }
        if !(lo < self.aircraft_min_speed) {
            return Err(Error::domain(
                "wake speed band must start below the aircraft minimum speed",
            ));
        }
        if !(self.notch_half_width >= 0.0) || !(self.peak_prominence >= 0.0) {
            return Err(Error::domain("notch width and prominence must be non-negative"));
        }
        if self.jem_min_lines < 3 {
            return Err(Error::domain("JEM confirmation needs at least 3 lines"));
        }
        if !(self.wingspan > 0.0) {
            return Err(Error::domain("wingspan must be positive"));
        }
        Ok(())
    }
}

/// Doppler signal-to-clutter ratio of cell `d_index`, dB.
pub fn dscr(spectrum: &DopplerSpectrum, d_index: usize) -> Result<f64> {
    let n = spectrum.len();
    if d_index >= n {
        return Err(Error::domain(format!("cell {d_index} outside spectrum of {n}")));
    }
    let mean = spectrum.mean_amplitude();
    if !(mean > 0.0) {
        return Err(Error::UndefinedInput("DSCR of an all-zero spectrum".into()));
    }
    Ok(10.0 * (spectrum.amplitudes[d_index] / mean).log10())
}

/// Strongest unmasked cell. Ties go to the smaller |velocity|, then to the
/// negative side.
pub fn select_dominant_doppler(spectrum: &DopplerSpectrum) -> Result<usize> {
    let mut best: Option<usize> = None;
    for i in 0..spectrum.len() {
        if spectrum.notch_mask[i] {
            continue;
        }
        let Some(b) = best else {
            best = Some(i);
            continue;
        };
        let (a, ab) = (spectrum.amplitudes[i], spectrum.amplitudes[b]);
        let (v, vb) = (spectrum.velocity_axis[i], spectrum.velocity_axis[b]);
        let wins = a > ab || (a == ab && (v.abs() < vb.abs() || (v.abs() == vb.abs() && v < vb)));
        if wins {
            best = Some(i);
        }
    }
    best.ok_or(Error::NoCandidate)
}

/// Prominent local maxima among unmasked cells, strongest first.
///
/// Peaks must also stand 8 dB above the mean spectral amplitude, so a
/// noise-only spectrum yields no peaks.
pub fn find_doppler_peaks(spectrum: &DopplerSpectrum, min_prominence: f64) -> Vec<DopplerPeak> {
    let floor = spectrum.mean_amplitude() * 10f64.powf(0.8);
    spectral_peaks(spectrum, min_prominence, floor)
}

/// Local maxima among unmasked cells with amplitude at least `floor` and
/// prominence at least `min_prominence` times the strongest candidate.
pub(crate) fn spectral_peaks(spectrum: &DopplerSpectrum, min_prominence: f64, floor: f64) -> Vec<DopplerPeak> {
    let a = &spectrum.amplitudes;
    let n = a.len();
    let mut peaks: Vec<DopplerPeak> = (0..n)
        .filter(|&i| !spectrum.notch_mask[i] && a[i] > 0.0 && a[i] >= floor)
        .filter(|&i| {
            let left = if i > 0 { a[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < n { a[i + 1] } else { f64::NEG_INFINITY };
            a[i] > left && a[i] >= right
        })
        .map(|i| DopplerPeak {
            velocity: peak_velocity(spectrum, i),
            amplitude: a[i],
            index: i,
        })
        .collect();
    peaks.sort_by(|p, q| q.amplitude.total_cmp(&p.amplitude).then(p.index.cmp(&q.index)));
    if min_prominence > 0.0 {
        if let Some(top) = peaks.first().map(|p| p.amplitude) {
            peaks.retain(|p| prominence(a, p.index) >= min_prominence * top);
        }
    }
    peaks
}

/// Height of a peak above the higher of its two bases.
fn prominence(a: &[f64], i: usize) -> f64 {
    let h = a[i];
    let mut left_min = h;
    for j in (0..i).rev() {
        if a[j] > h {
            break;
        }
        left_min = left_min.min(a[j]);
    }
    let mut right_min = h;
    for &x in &a[i + 1..] {
        if x > h {
            break;
        }
        right_min = right_min.min(x);
    }
    h - left_min.max(right_min)
}

/// Sub-cell position of a peak from the ratio of the peak to its larger
/// neighbour, exact for an isolated tone under a rectangular window.
fn peak_velocity(spectrum: &DopplerSpectrum, i: usize) -> f64 {
    let a = &spectrum.amplitudes;
    let n = a.len();
    let axis = &spectrum.velocity_axis;
    if n < 3 || i == 0 || i + 1 >= n {
        return axis[i];
    }
    let (l, r) = (a[i - 1], a[i + 1]);
    let (side, dir) = if r >= l { (r, 1.0) } else { (l, -1.0) };
    let delta = if a[i] + side > 0.0 {
        (side / (a[i] + side)).min(0.5)
    } else {
        0.0
    };
    axis[i] + dir * delta * spectrum.resolution()
}

/// Per-bin measurements that do not come from the spectrum shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinMeasurement {
    pub frame_index: u32,
    pub snr_db: f64,
    pub range_m: f64,
}

/// Classifies one bin from its (un-notched) spectrum.
pub fn classify_bin(
    spectrum: &DopplerSpectrum,
    config: &DetectorConfig,
    jem: Option<&JemComb>,
    measurement: BinMeasurement,
) -> Detection {
    let notched = notch_clutter(spectrum, config.notch_half_width);
    let dominant = select_dominant_doppler(&notched).unwrap_or(notched.len() / 2);
    // an all-zero spectrum is flat: 0 dB
    let dscr_db = dscr(&notched, dominant).unwrap_or(0.0);
    let dominant_velocity = notched.velocity_axis[dominant];
    let mut detection = Detection {
        frame_index: measurement.frame_index,
        bin_index: spectrum.bin_index,
        range_m: measurement.range_m,
        class: DetectionClass::Noise,
        snr_db: measurement.snr_db,
        dscr_db,
        dominant_velocity,
        doppler_peaks: Vec::new(),
        stage: None,
        jem: None,
    };
    if dscr_db < config.dscr_threshold {
        return detection;
    }
    detection.doppler_peaks = find_doppler_peaks(&notched, config.peak_prominence);
    let speed = dominant_velocity.abs();
    let [lo, hi] = config.wake_speed_band;
    detection.class = if speed >= config.aircraft_min_speed || jem.is_some() {
        DetectionClass::Aircraft
    } else if (lo..=hi).contains(&speed) && detection.doppler_peaks.len() >= config.min_peaks_for_wake {
        DetectionClass::Wake
    } else {
        DetectionClass::Other
    };
    detection.jem = jem.cloned();
    detection
}

/// Power and noise reference for a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameContext {
    /// Mean per-pulse power of each bin.
    pub bin_powers: Vec<f64>,
    pub noise_floor: f64,
    pub range_resolution: f64,
}

impl FrameContext {
    /// Derives bin powers from the map by Parseval. When `noise_floor` is
    /// absent it is estimated from each bin's spectral-median noise level,
    /// taking the lower decile over bins because wakes and their leakage can
    /// occupy most of the window.
    pub fn from_map(map: &RangeDopplerMap, window: Window, range_resolution: f64, noise_floor: Option<f64>) -> Self {
        let n = map.rows.first().map_or(0, |r| r.len());
        let energy: f64 = window.coefficients(n).iter().map(|w| w * w).sum();
        let norm = n as f64 * energy;
        let bin_powers = map
            .rows
            .par_iter()
            .map(|r| r.amplitudes.iter().map(|a| a * a).sum::<f64>() / norm)
            .collect();
        let noise_floor = noise_floor.unwrap_or_else(|| {
            let per_bin: Vec<f64> = map
                .rows
                .par_iter()
                .map(|r| median(r.amplitudes.iter().map(|a| a * a).collect()) / (energy * std::f64::consts::LN_2))
                .collect();
            quantile(per_bin, NOISE_QUANTILE)
        });
        Self {
            bin_powers,
            noise_floor,
            range_resolution,
        }
    }

    pub fn snr_db(&self, bin: usize) -> f64 {
        let p = self.bin_powers.get(bin).copied().unwrap_or(0.0);
        if self.noise_floor > 0.0 && p > 0.0 {
            10.0 * (p / self.noise_floor).log10()
        } else {
            f64::NEG_INFINITY
        }
    }
}

const NOISE_QUANTILE: f64 = 0.1;

fn median(v: Vec<f64>) -> f64 {
    quantile(v, 0.5)
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let k = ((v.len() as f64 * q) as usize).min(v.len() - 1);
    v.select_nth_unstable_by(k, f64::total_cmp);
    v[k]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub frame_index: u32,
    /// One record per bin, in bin order.
    pub detections: Vec<Detection>,
    pub aircraft_bin: Option<usize>,
    /// Inclusive bin interval of the wake behind the aircraft.
    pub wake_extent: Option<(usize, usize)>,
}

impl ScanResult {
    pub fn aircraft(&self) -> Option<&Detection> {
        self.aircraft_bin.map(|b| &self.detections[b])
    }

    pub fn non_noise(&self) -> impl Iterator<Item = &Detection> {
        self.detections.iter().filter(|d| d.class != DetectionClass::Noise)
    }
}

/// Classifies every bin, picks the aircraft and the wake behind it.
pub fn scan_frame(map: &RangeDopplerMap, config: &DetectorConfig, context: &FrameContext) -> ScanResult {
    let jem_config = JemConfig {
        min_lines: config.jem_min_lines,
        ..JemConfig::default()
    };
    let mut detections: Vec<Detection> = map
        .rows
        .par_iter()
        .enumerate()
        .map(|(bin, row)| {
            let measurement = BinMeasurement {
                frame_index: map.frame_index,
                snr_db: context.snr_db(bin),
                range_m: bin as f64 * context.range_resolution,
            };
            let mut d = classify_bin(row, config, None, measurement);
            // a slow bin can still be an aircraft if it carries a JEM comb
            if d.class != DetectionClass::Noise && d.class != DetectionClass::Aircraft {
                let notched = notch_clutter(row, config.notch_half_width);
                if let Some(comb) = jem_comb_estimate_with(&notched, &jem_config) {
                    d = classify_bin(row, config, Some(&comb), measurement);
                }
            }
            d
        })
        .collect();

    let aircraft_bin = detections
        .iter()
        .filter(|d| d.class == DetectionClass::Aircraft)
        .fold(None::<&Detection>, |best, d| match best {
            Some(b) if b.dscr_db >= d.dscr_db => Some(b),
            _ => Some(d),
        })
        .map(|d| d.bin_index);

    let mut wake_extent = None;
    if let Some(ac) = aircraft_bin {
        if detections[ac].jem.is_none() {
            let notched = notch_clutter(&map.rows[ac], config.notch_half_width);
            detections[ac].jem = jem_comb_estimate_with(
                &notched,
                &JemConfig {
                    min_lines: 3,
                    ..JemConfig::default()
                },
            );
        }
        let wake_bins: Vec<usize> = detections[..ac]
            .iter()
            .filter(|d| d.class == DetectionClass::Wake)
            .map(|d| d.bin_index)
            .collect();
        wake_extent = longest_run(&wake_bins, config.wake_gap_tolerance);
        for d in detections[..ac].iter_mut().filter(|d| d.class == DetectionClass::Wake) {
            let x = (ac - d.bin_index) as f64 * context.range_resolution;
            d.stage = stage_from_distance(x, config.wingspan).ok().map(|s| s.stage);
        }
    }

    ScanResult {
        frame_index: map.frame_index,
        detections,
        aircraft_bin,
        wake_extent,
    }
}

/// Longest run of sorted bins with holes of at most `gap` bins. Ties go to
/// the run with the higher end.
fn longest_run(bins: &[usize], gap: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = *bins.first()?;
    let mut prev = start;
    let consider = |s: usize, e: usize, best: &mut Option<(usize, usize)>| {
        if best.is_none_or(|(bs, be)| e - s >= be - bs) {
            *best = Some((s, e));
        }
    };
    for &b in &bins[1..] {
        if b - prev > gap + 1 {
            consider(start, prev, &mut best);
            start = b;
        }
        prev = b;
    }
    consider(start, prev, &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(amplitudes: Vec<f64>, res: f64) -> DopplerSpectrum {
        let n = amplitudes.len();
        DopplerSpectrum {
            velocity_axis: (0..n).map(|i| (i as f64 - (n / 2) as f64) * res).collect(),
            notch_mask: vec![false; n],
            bin_index: 0,
            amplitudes,
        }
    }

    #[test]
    fn dscr_examples() {
        let s = spectrum(vec![1.0, 1.0, 1.0, 9.0], 1.0);
        let expected = 10.0 * (9.0f64 / 3.0).log10();
        assert!((dscr(&s, 3).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 4.771).abs() < 5e-4);
        let flat = spectrum(vec![2.5; 16], 1.0);
        for i in 0..16 {
            assert_eq!(dscr(&flat, i).unwrap(), 0.0);
        }
        assert!(matches!(dscr(&spectrum(vec![0.0; 4], 1.0), 0), Err(Error::UndefinedInput(_))));
        assert!(dscr(&s, 4).is_err());
    }

    #[test]
    fn dominant_tie_breaks() {
        // ±5 m/s at 1 m/s cells on a 32-cell axis
        let mut a = vec![0.1; 32];
        a[16 - 5] = 3.0;
        a[16 + 5] = 3.0;
        let s = spectrum(a, 1.0);
        assert_eq!(s.velocity_axis[select_dominant_doppler(&s).unwrap()], -5.0);

        let mut a = vec![0.1; 32];
        a[16 + 1] = 10.0;
        a[16 + 8] = 4.0;
        a[16 + 7] = 5.0;
        let s = notch_clutter(&spectrum(a, 1.0), 2.0);
        assert_eq!(s.velocity_axis[select_dominant_doppler(&s).unwrap()], 7.0);

        let mut all = spectrum(vec![1.0; 8], 1.0);
        all.notch_mask = vec![true; 8];
        assert!(matches!(select_dominant_doppler(&all), Err(Error::NoCandidate)));
    }

    #[test]
    fn peaks_of_single_tone_and_flat() {
        let mut a = vec![1.0; 64];
        a[40] = 50.0;
        let s = spectrum(a, 0.5);
        let p = find_doppler_peaks(&s, DEFAULT_PROMINENCE);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].index, 40);
        assert!(find_doppler_peaks(&spectrum(vec![1.0; 64], 0.5), DEFAULT_PROMINENCE).is_empty());
    }

    #[test]
    fn runs_bridge_small_gaps() {
        assert_eq!(longest_run(&[], 3), None);
        assert_eq!(longest_run(&[1, 2, 6, 7], 3), Some((1, 7)));
        assert_eq!(longest_run(&[1, 2, 7, 8, 9], 3), Some((7, 9)));
        assert_eq!(longest_run(&[1, 2, 7, 8], 3), Some((7, 8)));
    }

    #[test]
    fn classification_rules() {
        let cfg = DetectorConfig::default();
        let m = BinMeasurement {
            frame_index: 0,
            snr_db: 40.0,
            range_m: 0.0,
        };
        let n = 256;
        let res = 0.25;
        let at = |v: f64| ((v / res) as isize + (n / 2) as isize) as usize;
        let mut a = vec![1.0; n];
        a[at(-25.0)] = 200.0;
        assert_eq!(classify_bin(&spectrum(a, res), &cfg, None, m).class, DetectionClass::Aircraft);

        let mut a = vec![1.0; n];
        a[at(6.0)] = 100.0;
        a[at(-4.0)] = 60.0;
        let d = classify_bin(&spectrum(a, res), &cfg, None, m);
        assert_eq!(d.class, DetectionClass::Wake);
        assert_eq!(d.doppler_peaks.len(), 2);

        let mut a = vec![1.0; n];
        a[at(6.0)] = 100.0;
        assert_eq!(classify_bin(&spectrum(a, res), &cfg, None, m).class, DetectionClass::Other);

        let d = classify_bin(&spectrum(vec![1.0; n], res), &cfg, None, m);
        assert_eq!(d.class, DetectionClass::Noise);
        assert_eq!(d.stage, None);
        let d = classify_bin(&spectrum(vec![0.0; n], res), &cfg, None, m);
        assert_eq!(d.class, DetectionClass::Noise);
        assert!(d.dscr_db.is_finite());
    }
}
