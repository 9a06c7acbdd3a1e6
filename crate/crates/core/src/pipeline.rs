//! Frame-level glue between synthesis, spectra and detection.

use serde::Serialize;

use crate::detect::{scan_frame, DetectionClass, DetectorConfig, FrameContext, ScanResult};
use crate::dsp::{range_doppler_map, RangeDopplerMap, Window};
use crate::error::Result;
use crate::params::RadarConfig;
use crate::sim::{synthesize_frame, CpiFrame, Scenario};

/// Spectra and detections of one frame.
#[derive(Debug, Clone)]
pub struct ProcessedFrame {
    pub map: RangeDopplerMap,
    pub context: FrameContext,
    pub scan: ScanResult,
}

/// Runs the rectangular-window detection chain on one frame. `noise_floor`
/// is the per-pulse noise power when known.
pub fn process_frame(
    frame: &CpiFrame,
    radar: &RadarConfig,
    detector: &DetectorConfig,
    noise_floor: Option<f64>,
) -> Result<ProcessedFrame> {
    let map = range_doppler_map(frame, radar, Window::Rectangular)?;
    let context = FrameContext::from_map(&map, Window::Rectangular, radar.range_resolution(), noise_floor);
    let scan = scan_frame(&map, detector, &context);
    Ok(ProcessedFrame { map, context, scan })
}

/// Detection outcome of one synthesized frame together with its truth.
#[derive(Debug, Clone)]
pub struct SceneFrame {
    pub scan: ScanResult,
    pub truth_aircraft_bin: Option<usize>,
    pub truth_wake_bins: Vec<usize>,
    pub truth_ghost_bins: Vec<usize>,
}

/// Synthesizes and scans every frame of a scenario, using the scenario's
/// noise floor as SNR reference.
pub fn run_scene(scenario: &Scenario, detector: &DetectorConfig) -> Result<Vec<SceneFrame>> {
    (0..scenario.n_frames)
        .map(|k| {
            let sf = synthesize_frame(scenario, k)?;
            let processed = process_frame(&sf.frame, &scenario.radar, detector, Some(scenario.noise_floor))?;
            Ok(SceneFrame {
                scan: processed.scan,
                truth_aircraft_bin: sf.aircraft_bin,
                truth_wake_bins: scenario.wake_bins(k),
                truth_ghost_bins: scenario.ghost_bins(k),
            })
        })
        .collect()
}

/// Fractions of truth cells recovered over a scene.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SceneRates {
    /// Frames whose aircraft was found within one bin of truth.
    pub aircraft: f64,
    /// Truth wake bins classified as wake.
    pub wake: f64,
    /// Truth ghost bins classified as wake or other.
    pub ghost: f64,
    /// Empty bins classified as anything but noise.
    pub false_alarm: f64,
}

pub fn scene_rates(frames: &[SceneFrame]) -> SceneRates {
    let ratio = |hit: usize, total: usize| if total == 0 { 0.0 } else { hit as f64 / total as f64 };
    let (mut ac_hit, mut ac_total) = (0, 0);
    let (mut wake_hit, mut wake_total) = (0, 0);
    let (mut ghost_hit, mut ghost_total) = (0, 0);
    let (mut fa_hit, mut fa_total) = (0, 0);
    for f in frames {
        if let Some(t) = f.truth_aircraft_bin {
            ac_total += 1;
            if f.scan.aircraft_bin.is_some_and(|b| b.abs_diff(t) <= 1) {
                ac_hit += 1;
            }
        }
        for &b in &f.truth_wake_bins {
            wake_total += 1;
            if f.scan.detections[b].class == DetectionClass::Wake {
                wake_hit += 1;
            }
        }
        for &b in &f.truth_ghost_bins {
            ghost_total += 1;
            if matches!(f.scan.detections[b].class, DetectionClass::Wake | DetectionClass::Other) {
                ghost_hit += 1;
            }
        }
        for d in &f.scan.detections {
            let b = d.bin_index;
            let occupied = f.truth_aircraft_bin.is_some_and(|t| t.abs_diff(b) <= 1)
                || f.truth_wake_bins.binary_search(&b).is_ok()
                || f.truth_ghost_bins.binary_search(&b).is_ok();
            if !occupied {
                fa_total += 1;
                if d.class != DetectionClass::Noise {
                    fa_hit += 1;
                }
            }
        }
    }
    SceneRates {
        aircraft: ratio(ac_hit, ac_total),
        wake: ratio(wake_hit, wake_total),
        ghost: ratio(ghost_hit, ghost_total),
        false_alarm: ratio(fa_hit, fa_total),
    }
}
