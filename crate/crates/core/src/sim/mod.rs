//! Seeded synthesis of coherent IQ scenes: an aircraft with engine modulation,
//! staged wake-vortex segments behind it, ghost wakes ahead of it, low-velocity
//! clutter and thermal noise.
//!
//! Every random draw comes from a ChaCha substream keyed by
//! `(seed, frame, bin, component)`, so frames are bit-identical regardless of
//! thread count or evaluation order.

pub mod aircraft;
pub mod vortex;

pub use aircraft::{
    aircraft_lines, aircraft_pulse_series, AircraftLine, AircraftSpec, JemStage1, JemStage2,
};
pub use vortex::{
    lamb_oseen_tangential, peak_tangential_speed, wake_doppler_population, WakeScatterer,
    GATE_INTERVALS, MIN_WAKE_SPEED,
};

use std::f64::consts::PI;

use num_complex::{Complex32, Complex64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dsp::IqSample;
use crate::error::{Error, Result};
use crate::params::RadarConfig;
use crate::signature::{SlopeSign, WakeStage};
use vortex::{population_from_rng, StageProfile};

/// One coherent processing interval of complex samples, bin-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CpiFrame {
    pub iq: Vec<Complex32>,
    pub n_bins: usize,
    pub n_pulses: usize,
    pub frame_index: u32,
    /// Seconds since the first frame.
    pub timestamp: f64,
}

impl CpiFrame {
    pub fn zeros(n_bins: usize, n_pulses: usize, frame_index: u32, timestamp: f64) -> Self {
        Self {
            iq: vec![Complex32::new(0.0, 0.0); n_bins * n_pulses],
            n_bins,
            n_pulses,
            frame_index,
            timestamp,
        }
    }

    /// Pulse series of range bin `bin`.
    pub fn bin(&self, bin: usize) -> &[Complex32] {
        &self.iq[bin * self.n_pulses..(bin + 1) * self.n_pulses]
    }

    pub fn bin_mut(&mut self, bin: usize) -> &mut [Complex32] {
        &mut self.iq[bin * self.n_pulses..(bin + 1) * self.n_pulses]
    }

    /// Pulse series of `bin` widened to double precision.
    pub fn bin_f64(&self, bin: usize) -> Vec<Complex64> {
        self.bin(bin).iter().map(|&z| z.to_c64()).collect()
    }

    /// Mean sample power of `bin`.
    pub fn bin_power(&self, bin: usize) -> f64 {
        let s = self.bin(bin);
        s.iter().map(|z| (z.norm_sqr()) as f64).sum::<f64>() / s.len().max(1) as f64
    }

    pub fn is_finite(&self) -> bool {
        self.iq.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// A run of range bins sharing one wake-vortex stage.
#[derive(Debug, Clone, PartialEq)]
pub struct WakeSegmentSpec {
    /// Inclusive bin interval at frame 0.
    pub bin_range: (usize, usize),
    pub stage: WakeStage,
    /// Circulation Γ, m²/s.
    pub circulation: f64,
    /// Core radius r_c, m.
    pub core_radius: f64,
    pub n_scatterers: usize,
    /// Per-bin wake power as a multiple of the noise floor.
    pub amplitude_level: f64,
    pub slope_sign: SlopeSign,
    /// Probability that a scatterer is switched off in any gating sub-interval.
    pub intermittency: f64,
    /// Optional ceiling on line-of-sight speed, m/s.
    pub speed_cap: Option<f64>,
}

impl WakeSegmentSpec {
    /// Stage defaults. Core radius grows with age; circulation is set so the
    /// expected population speed matches the stage's typical Doppler.
    pub fn preset(stage: WakeStage, bin_range: (usize, usize), amplitude_level: f64) -> Self {
        let (core_radius, mean_speed, n_scatterers, intermittency) = match stage {
            WakeStage::Young => (1.0, 5.0, 14, 0.35),
            WakeStage::Mature => (2.0, 6.93, 16, 0.3),
            WakeStage::Old => (3.0, 5.53, 14, 0.45),
            WakeStage::Decaying => (4.0, 4.5, 5, 0.55),
        };
        Self {
            bin_range,
            stage,
            circulation: circulation_for_mean_speed(stage, core_radius, mean_speed),
            core_radius,
            n_scatterers,
            amplitude_level,
            slope_sign: SlopeSign::for_stage(stage),
            intermittency,
            speed_cap: None,
        }
    }

    /// A weaker, slower wake left by another aircraft.
    pub fn ghost(bin_range: (usize, usize), amplitude_level: f64) -> Self {
        let core_radius = 3.0;
        Self {
            circulation: circulation_for_mean_speed(WakeStage::Old, core_radius, 3.3),
            core_radius,
            n_scatterers: 5,
            speed_cap: Some(4.0),
            ..Self::preset(WakeStage::Old, bin_range, amplitude_level)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scatterers == 0 {
            return Err(Error::domain("wake segment needs at least one scatterer"));
        }
        if !(self.core_radius > 0.0) {
            return Err(Error::domain("core radius must be positive"));
        }
        if !(0.0..=1.0).contains(&self.intermittency) {
            return Err(Error::domain("intermittency must lie in [0, 1]"));
        }
        if self.bin_range.0 > self.bin_range.1 {
            return Err(Error::domain("wake bin range is reversed"));
        }
        if !(self.amplitude_level >= 0.0) {
            return Err(Error::domain("amplitude level must be non-negative"));
        }
        Ok(())
    }

    fn contains(&self, bin: i64, shift: i64) -> bool {
        let lo = self.bin_range.0 as i64 + shift;
        let hi = self.bin_range.1 as i64 + shift;
        (lo..=hi).contains(&bin)
    }
}

/// Circulation giving an expected line-of-sight speed of `mean_speed` for a
/// stage's sampling profile.
pub fn circulation_for_mean_speed(stage: WakeStage, core_radius: f64, mean_speed: f64) -> f64 {
    mean_speed * 2.0 * PI * core_radius / StageProfile::of(stage).mean_speed_factor()
}

/// Low-velocity clutter lines on the Doppler grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterSpec {
    /// Lines are drawn within ±half_width, m/s.
    pub half_width: f64,
    /// Total clutter power relative to the noise floor, dB.
    pub power_db: f64,
    pub n_lines: usize,
}

impl Default for ClutterSpec {
    fn default() -> Self {
        Self {
            half_width: 1.78,
            power_db: 10.0,
            n_lines: 3,
        }
    }
}

impl ClutterSpec {
    pub fn power_ratio(&self) -> f64 {
        if self.n_lines == 0 {
            0.0
        } else {
            10f64.powf(self.power_db / 10.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub radar: RadarConfig,
    pub aircraft: Option<AircraftSpec>,
    pub wake_segments: Vec<WakeSegmentSpec>,
    /// Wakes of other aircraft, ahead of this one.
    pub ghost_segments: Vec<WakeSegmentSpec>,
    pub clutter: ClutterSpec,
    /// Noise power per complex sample.
    pub noise_floor: f64,
    pub n_frames: u32,
    /// Seconds between successive CPIs.
    pub frame_interval: f64,
    pub seed: u64,
}

/// Per-bin component power that yields `snr_db` once noise and clutter are added.
pub fn component_power_for_snr(snr_db: f64, clutter_ratio: f64) -> f64 {
    (10f64.powf(snr_db / 10.0) - 1.0 - clutter_ratio).max(0.0)
}

impl Scenario {
    /// Reference scene: aircraft at bin 286 receding at 140.1 m/s, a wake
    /// trail over bins 1–285 (old, mature, young going towards the
    /// aircraft), ghost wakes ahead and wind clutter.
    pub fn reference(seed: u64) -> Self {
        let clutter = ClutterSpec::default();
        let c = clutter.power_ratio();
        let level = |snr| component_power_for_snr(snr, c);
        Self {
            radar: RadarConfig::reference(),
            aircraft: Some(AircraftSpec::reference(286)),
            wake_segments: vec![
                WakeSegmentSpec::preset(WakeStage::Old, (1, 59), level(40.18)),
                WakeSegmentSpec::preset(WakeStage::Mature, (60, 202), level(43.29)),
                WakeSegmentSpec::preset(WakeStage::Young, (203, 285), level(42.84)),
            ],
            ghost_segments: vec![WakeSegmentSpec::ghost((440, 480), level(41.85))],
            clutter,
            noise_floor: 1.0,
            n_frames: 10,
            frame_interval: 0.5,
            seed,
        }
    }

    /// Scene for tracking: a 6 km wake (200 bins) behind an aircraft starting at
    /// bin 250, ghosts ahead, 20 frames at 0.5 s.
    pub fn tracking(seed: u64) -> Self {
        let mut s = Self::reference(seed);
        let c = s.clutter.power_ratio();
        let level = |snr| component_power_for_snr(snr, c);
        s.aircraft = Some(AircraftSpec::reference(250));
        s.wake_segments = vec![
            WakeSegmentSpec::preset(WakeStage::Old, (50, 89), level(40.18)),
            WakeSegmentSpec::preset(WakeStage::Mature, (90, 189), level(43.29)),
            WakeSegmentSpec::preset(WakeStage::Young, (190, 249), level(42.84)),
        ];
        s.ghost_segments = vec![WakeSegmentSpec::ghost((380, 410), level(41.85))];
        s.n_frames = 20;
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        if !(self.frame_interval > 0.0) {
            return Err(Error::domain("frame_interval must be positive"));
        }
        if !(self.noise_floor > 0.0) {
            return Err(Error::domain("noise_floor must be positive"));
        }
        if self.n_frames == 0 {
            return Err(Error::domain("n_frames must be at least 1"));
        }
        if !(self.clutter.half_width >= 0.0) {
            return Err(Error::domain("clutter half_width must be non-negative"));
        }
        let n_bins = self.radar.n_range_bins;
        for seg in self.wake_segments.iter().chain(&self.ghost_segments) {
            seg.validate()?;
            if seg.bin_range.1 >= n_bins {
                return Err(Error::domain(format!(
                    "segment {:?} exceeds {n_bins} range bins",
                    seg.bin_range
                )));
            }
        }
        if let Some(ac) = &self.aircraft {
            ac.validate()?;
            if ac.range_bin >= n_bins {
                return Err(Error::domain("aircraft range bin outside the window"));
            }
            if let Some(seg) = self.wake_segments.iter().find(|s| s.bin_range.1 >= ac.range_bin) {
                return Err(Error::domain(format!(
                    "wake segment {:?} is not strictly behind the aircraft bin {}",
                    seg.bin_range, ac.range_bin
                )));
            }
            if let Some(seg) = self.ghost_segments.iter().find(|s| s.bin_range.0 <= ac.range_bin) {
                return Err(Error::domain(format!(
                    "ghost segment {:?} is not strictly ahead of the aircraft bin {}",
                    seg.bin_range, ac.range_bin
                )));
            }
        }
        Ok(())
    }

    /// Fractional aircraft bin at `frame_index`. Receding targets move to
    /// higher bins.
    pub fn aircraft_position(&self, frame_index: u32) -> Option<f64> {
        self.aircraft.as_ref().map(|ac| {
            let range_rate = -ac.radial_velocity_true;
            ac.range_bin as f64
                + range_rate * self.frame_interval * frame_index as f64 / self.radar.range_resolution()
        })
    }

    /// Bin shift applied to the aircraft and its segments at `frame_index`.
    pub fn segment_shift(&self, frame_index: u32) -> i64 {
        match (&self.aircraft, self.aircraft_position(frame_index)) {
            (Some(ac), Some(pos)) => pos.round() as i64 - ac.range_bin as i64,
            _ => 0,
        }
    }

    /// Aircraft bin at `frame_index`, or `None` when absent or off the window.
    pub fn aircraft_bin(&self, frame_index: u32) -> Option<usize> {
        let pos = self.aircraft_position(frame_index)?.round();
        (pos >= 0.0 && pos < self.radar.n_range_bins as f64).then_some(pos as usize)
    }

    /// Bins (after shifting) covered by wake segments at `frame_index`.
    pub fn wake_bins(&self, frame_index: u32) -> Vec<usize> {
        segment_bins(&self.wake_segments, self.segment_shift(frame_index), self.radar.n_range_bins)
    }

    pub fn ghost_bins(&self, frame_index: u32) -> Vec<usize> {
        segment_bins(&self.ghost_segments, self.segment_shift(frame_index), self.radar.n_range_bins)
    }
}

fn segment_bins(segments: &[WakeSegmentSpec], shift: i64, n_bins: usize) -> Vec<usize> {
    let mut bins: Vec<usize> = segments
        .iter()
        .flat_map(|s| (s.bin_range.0 as i64 + shift)..=(s.bin_range.1 as i64 + shift))
        .filter(|&b| b >= 0 && b < n_bins as i64)
        .map(|b| b as usize)
        .collect();
    bins.sort_unstable();
    bins.dedup();
    bins
}

/// A synthesized frame with the ground truth needed by tests and reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedFrame {
    pub frame: CpiFrame,
    pub aircraft_bin: Option<usize>,
    /// Set when the scenario has an aircraft that has left the range window.
    pub aircraft_off_window: bool,
}

#[derive(Clone, Copy)]
#[repr(u8)]
enum Stream {
    Noise = 1,
    Clutter = 2,
    Wake = 3,
    Ghost = 4,
}

/// Independent random substream for one scene component of one bin.
fn substream(seed: u64, frame: u32, bin: usize, stream: Stream, index: usize) -> ChaCha8Rng {
    let tag = ((stream as u64) << 4) | (index as u64 & 0xF);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 56) | ((frame as u64 & 0x0FFF_FFFF) << 28) | (bin as u64 & 0x0FFF_FFFF));
    rng
}

/// Complex white Gaussian noise with `E|n|² = power`.
pub fn complex_noise<R: Rng>(rng: &mut R, n: usize, power: f64) -> Vec<Complex64> {
    let sigma = (power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

fn tone(config: &RadarConfig, velocity: f64, amplitude: f64, phase: f64) -> impl Iterator<Item = Complex64> {
    let w = 2.0 * PI * 2.0 * velocity / (config.wavelength() * config.prf);
    (0..config.n_pulses).map(move |p| Complex64::from_polar(amplitude, phase + w * p as f64))
}

/// Clutter lines drawn uniformly among Doppler cells within ±half_width.
fn clutter_series(scenario: &Scenario, rng: &mut ChaCha8Rng) -> Option<Vec<Complex64>> {
    let spec = &scenario.clutter;
    if spec.n_lines == 0 {
        return None;
    }
    let cfg = &scenario.radar;
    let res = cfg.velocity_resolution();
    let max_cell = (spec.half_width / res).floor() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); cfg.n_pulses];
    for _ in 0..spec.n_lines {
        let cell = rng.random_range(-max_cell..=max_cell);
        let amp = rng.random_range(0.2..=1.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        for (o, t) in out.iter_mut().zip(tone(cfg, cell as f64 * res, amp, phase)) {
            *o += t;
        }
    }
    aircraft::scale_to_power(&mut out, spec.power_ratio() * scenario.noise_floor);
    Some(out)
}

/// Sum of a segment population's scatterers, scaled to the segment power.
fn segment_series(
    segment: &WakeSegmentSpec,
    config: &RadarConfig,
    noise_floor: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Complex64> {
    let population = population_from_rng(segment, config, rng);
    let mut out = vec![Complex64::new(0.0, 0.0); config.n_pulses];
    for s in &population {
        for (o, x) in out.iter_mut().zip(s.pulse_series(config)) {
            *o += x;
        }
    }
    aircraft::scale_to_power(&mut out, segment.amplitude_level * noise_floor);
    out
}

/// Synthesizes frame `frame_index` of `scenario`.
pub fn synthesize_frame(scenario: &Scenario, frame_index: u32) -> Result<SynthesizedFrame> {
    scenario.validate()?;
    if frame_index >= scenario.n_frames {
        return Err(Error::domain(format!(
            "frame {frame_index} outside scenario of {} frames",
            scenario.n_frames
        )));
    }
    let cfg = &scenario.radar;
    let shift = scenario.segment_shift(frame_index);
    let aircraft_bin = scenario.aircraft_bin(frame_index);
    let aircraft_off_window = scenario.aircraft.is_some() && aircraft_bin.is_none();

    let aircraft_series = match (&scenario.aircraft, aircraft_bin) {
        (Some(ac), Some(_)) => {
            let power = component_power_for_snr(ac.snr_target, scenario.clutter.power_ratio())
                * scenario.noise_floor;
            Some(aircraft_pulse_series(ac, cfg, power))
        }
        _ => None,
    };

    let bins: Vec<Vec<Complex32>> = (0..cfg.n_range_bins)
        .into_par_iter()
        .map(|bin| {
            let mut rng = substream(scenario.seed, frame_index, bin, Stream::Noise, 0);
            let mut acc = complex_noise(&mut rng, cfg.n_pulses, scenario.noise_floor);

            let mut add = |series: &[Complex64]| {
                for (a, s) in acc.iter_mut().zip(series) {
                    *a += s;
                }
            };
            let mut rng = substream(scenario.seed, frame_index, bin, Stream::Clutter, 0);
            if let Some(c) = clutter_series(scenario, &mut rng) {
                add(&c);
            }
            if aircraft_bin == Some(bin) {
                if let Some(a) = &aircraft_series {
                    add(a);
                }
            }
            let b = bin as i64;
            for (segments, stream) in [
                (&scenario.wake_segments, Stream::Wake),
                (&scenario.ghost_segments, Stream::Ghost),
            ] {
                for (k, seg) in segments.iter().enumerate() {
                    if seg.contains(b, shift) {
                        let mut rng = substream(scenario.seed, frame_index, bin, stream, k);
                        add(&segment_series(seg, cfg, scenario.noise_floor, &mut rng));
                    }
                }
            }
            acc.into_iter()
                .map(|z| Complex32::new(z.re as f32, z.im as f32))
                .collect()
        })
        .collect();

    let mut frame = CpiFrame::zeros(
        cfg.n_range_bins,
        cfg.n_pulses,
        frame_index,
        frame_index as f64 * scenario.frame_interval,
    );
    for (bin, series) in bins.into_iter().enumerate() {
        frame.bin_mut(bin).copy_from_slice(&series);
    }
    Ok(SynthesizedFrame {
        frame,
        aircraft_bin,
        aircraft_off_window,
    })
}

/// All frames of a scenario in order.
pub fn synthesize_all(scenario: &Scenario) -> Result<Vec<SynthesizedFrame>> {
    (0..scenario.n_frames)
        .map(|f| synthesize_frame(scenario, f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario(seed: u64) -> Scenario {
        let radar = RadarConfig {
            n_pulses: 256,
            n_range_bins: 48,
            ..RadarConfig::reference()
        };
        let c = ClutterSpec::default().power_ratio();
        Scenario {
            radar,
            aircraft: Some(AircraftSpec::reference(30)),
            wake_segments: vec![WakeSegmentSpec::preset(
                WakeStage::Mature,
                (10, 29),
                component_power_for_snr(30.0, c),
            )],
            ghost_segments: vec![WakeSegmentSpec::ghost((35, 40), component_power_for_snr(25.0, c))],
            clutter: ClutterSpec::default(),
            noise_floor: 1.0,
            n_frames: 4,
            frame_interval: 0.5,
            seed,
        }
    }

    #[test]
    fn frames_are_deterministic() {
        let s = small_scenario(9);
        let a = synthesize_frame(&s, 1).unwrap();
        let b = synthesize_frame(&s, 1).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| synthesize_frame(&s, 1).unwrap());
        assert_eq!(a, c);
        let other = synthesize_frame(&small_scenario(10), 1).unwrap();
        assert_ne!(a.frame, other.frame);
    }

    #[test]
    fn frame_shape_and_finiteness() {
        let s = small_scenario(1);
        let f = synthesize_frame(&s, 0).unwrap();
        assert_eq!(f.frame.iq.len(), 48 * 256);
        assert!(f.frame.is_finite());
        assert_eq!(f.aircraft_bin, Some(30));
        assert!(synthesize_frame(&s, 4).is_err());
    }

    #[test]
    fn aircraft_advance_per_frame() {
        let s = Scenario::reference(0);
        let p0 = s.aircraft_position(0).unwrap();
        let p1 = s.aircraft_position(1).unwrap();
        let metres = (p1 - p0) * s.radar.range_resolution();
        assert!((metres - 70.05).abs() < 1e-9);
        assert!(((p1 - p0) - 2.335).abs() < 0.01);
    }

    #[test]
    fn aircraft_leaving_window_sets_flag() {
        let mut s = small_scenario(3);
        s.aircraft.as_mut().unwrap().range_bin = 46;
        s.ghost_segments.clear();
        s.n_frames = 3;
        let f = synthesize_frame(&s, 2).unwrap();
        assert!(f.aircraft_off_window);
        assert_eq!(f.aircraft_bin, None);
        assert!(f.frame.is_finite());
    }

    #[test]
    fn geometry_validation() {
        let mut s = small_scenario(3);
        s.wake_segments[0].bin_range = (10, 30);
        assert!(s.validate().is_err());
        let mut s = small_scenario(3);
        s.ghost_segments[0].bin_range = (30, 40);
        assert!(s.validate().is_err());
        let mut s = small_scenario(3);
        s.frame_interval = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn no_wake_energy_at_or_ahead_of_aircraft() {
        let mut s = small_scenario(5);
        s.clutter.n_lines = 0;
        s.ghost_segments.clear();
        for f in 0..s.n_frames {
            let out = synthesize_frame(&s, f).unwrap();
            let ac = out.aircraft_bin.unwrap();
            for bin in ac + 1..s.radar.n_range_bins {
                let p = out.frame.bin_power(bin);
                assert!(p < 2.0, "bin {bin} power {p}");
            }
        }
    }

    #[test]
    fn noise_power_matches_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = complex_noise(&mut rng, 200_000, 2.5);
        let p = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((p - 2.5).abs() / 2.5 < 0.01);
    }
}
