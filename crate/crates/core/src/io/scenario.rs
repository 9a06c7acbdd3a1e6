//! Scenario files (TOML).
//!
//! ```toml
//! [radar]          # every RadarConfig key, SI units, linear gains
//! [aircraft]       # optional; AircraftSpec keys, snr_target in dB
//! [aircraft.jem_stage1]
//! [aircraft.jem_stage2]
//! [wake.1]         # bins = [lo, hi], stage, snr_db; the rest optional
//! [ghost.1]        # same keys as a wake segment
//! [clutter]        # optional; half_width m/s, power_db dB, n_lines
//! [sim]            # n_frames, frame_interval s, seed, noise_floor
//! ```
//!
//! Segment SNRs are converted to component powers after accounting for
//! noise and clutter, exactly as the built-in scenes do.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::RadarConfig;
use crate::signature::{SlopeSign, WakeStage};
use crate::sim::{
    circulation_for_mean_speed, component_power_for_snr, AircraftSpec, ClutterSpec, Scenario, WakeSegmentSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub bins: [usize; 2],
    pub stage: WakeStage,
    pub snr_db: f64,
    /// Ghost segments default to the slower ghost preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_scatterers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermittency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_sign: Option<SlopeSign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterSection {
    pub half_width: f64,
    pub power_db: f64,
    pub n_lines: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n_frames: u32,
    pub frame_interval: f64,
    pub seed: u64,
    pub noise_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub radar: RadarConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aircraft: Option<AircraftSpec>,
    #[serde(default)]
    pub wake: BTreeMap<String, SegmentSection>,
    #[serde(default)]
    pub ghost: BTreeMap<String, SegmentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clutter: Option<ClutterSection>,
    pub sim: SimSection,
}

/// Segment tables are keyed `1`, `2`, …; numeric keys sort numerically.
fn ordered(map: &BTreeMap<String, SegmentSection>) -> Vec<&SegmentSection> {
    let mut v: Vec<(&String, &SegmentSection)> = map.iter().collect();
    v.sort_by(|a, b| match (a.0.parse::<u64>(), b.0.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.0.cmp(b.0),
    });
    v.into_iter().map(|(_, s)| s).collect()
}

fn segment(section: &SegmentSection, clutter_ratio: f64, ghost: bool) -> WakeSegmentSpec {
    let bins = (section.bins[0], section.bins[1]);
    let level = component_power_for_snr(section.snr_db, clutter_ratio);
    let mut spec = if ghost {
        WakeSegmentSpec {
            stage: section.stage,
            slope_sign: SlopeSign::for_stage(section.stage),
            ..WakeSegmentSpec::ghost(bins, level)
        }
    } else {
        WakeSegmentSpec::preset(section.stage, bins, level)
    };
    if let Some(r) = section.core_radius {
        spec.core_radius = r;
    }
    if let Some(mean) = section.mean_speed {
        spec.circulation = circulation_for_mean_speed(spec.stage, spec.core_radius, mean);
    }
    if let Some(n) = section.n_scatterers {
        spec.n_scatterers = n;
    }
    if let Some(p) = section.intermittency {
        spec.intermittency = p;
    }
    if let Some(s) = section.slope_sign {
        spec.slope_sign = s;
    }
    if section.speed_cap.is_some() {
        spec.speed_cap = section.speed_cap;
    }
    spec
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let clutter = match self.clutter {
            Some(c) => ClutterSpec {
                half_width: c.half_width,
                power_db: c.power_db,
                n_lines: c.n_lines,
            },
            None => ClutterSpec {
                n_lines: 0,
                ..ClutterSpec::default()
            },
        };
        let c = clutter.power_ratio();
        let scenario = Scenario {
            radar: self.radar,
            aircraft: self.aircraft,
            wake_segments: ordered(&self.wake).into_iter().map(|s| segment(s, c, false)).collect(),
            ghost_segments: ordered(&self.ghost).into_iter().map(|s| segment(s, c, true)).collect(),
            clutter,
            noise_floor: self.sim.noise_floor,
            n_frames: self.sim.n_frames,
            frame_interval: self.sim.frame_interval,
            seed: self.sim.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    file.into_scenario()
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// The `[radar]` table of a file, other tables ignored. Used by the budget command.
pub fn parse_radar(text: &str) -> Result<RadarConfig> {
    #[derive(Deserialize)]
    struct RadarOnly {
        radar: RadarConfig,
    }
    let file: RadarOnly = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    file.radar.validate()?;
    Ok(file.radar)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[radar]
carrier_frequency = 10.1e9
prf = 11400.0
n_pulses = 2048
bandwidth = 5.0e6
n_range_bins = 512
peak_power = 320.0
noise_figure = 1.9952623149688795
system_temperature = 290.0
antenna_gain = 3162.2776601683795
effective_aperture = 1.0

[wake.2]
bins = [60, 100]
stage = "mature"
snr_db = 43.0

[wake.10]
bins = [101, 120]
stage = "young"
snr_db = 42.0
intermittency = 0.0

[sim]
n_frames = 2
frame_interval = 0.5
seed = 3
noise_floor = 1.0
"#;

    #[test]
    fn minimal_scene() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert!(s.aircraft.is_none());
        assert_eq!(s.wake_segments.len(), 2);
        assert_eq!(s.wake_segments[0].stage, WakeStage::Mature);
        assert_eq!(s.wake_segments[1].intermittency, 0.0);
        assert_eq!(s.clutter.power_ratio(), 0.0);
        let expected = component_power_for_snr(43.0, 0.0);
        assert_eq!(s.wake_segments[0].amplitude_level, expected);
    }

    #[test]
    fn unknown_and_missing_keys_rejected() {
        let extra = MINIMAL.replace("seed = 3", "seed = 3\ncolour = 1");
        assert!(matches!(parse_scenario(&extra), Err(Error::Config(m)) if m.contains("colour")));
        let missing = MINIMAL.replace("seed = 3\n", "");
        assert!(matches!(parse_scenario(&missing), Err(Error::Config(m)) if m.contains("seed")));
    }

    #[test]
    fn radar_only() {
        let cfg = parse_radar(MINIMAL.split("[wake.2]").next().unwrap()).unwrap();
        assert_eq!(cfg, RadarConfig::reference());
    }
}
