//! Lamb-Oseen tangential speed law and the wake scatterer population drawn from it.

use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::params::RadarConfig;
use crate::signature::{SlopeSign, WakeStage};
use crate::sim::WakeSegmentSpec;

/// Smallest line-of-sight speed given to a wake scatterer, m/s. Keeps wake
/// lines clear of the default 2 m/s clutter notch.
pub const MIN_WAKE_SPEED: f64 = 2.5;

/// Number of gating sub-intervals per CPI.
pub const GATE_INTERVALS: usize = 8;

/// Chirp magnitude range in velocity-resolution cells per CPI.
const DRIFT_CELLS: (f64, f64) = (1.5, 2.0);

/// Mean of the line-of-sight projection factor, drawn uniformly in [0.7, 1.0].
const PROJECTION: (f64, f64) = (0.7, 1.0);

/// Lamb-Oseen tangential speed `Γ/(2πr)·(1 − exp(−r²/r_c²))`, 0 at the centre.
pub fn lamb_oseen_tangential(r: f64, circulation: f64, core_radius: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let x = r / core_radius;
    // 1 - exp(-x²) without cancellation for small x
    circulation / (2.0 * PI * r) * -(-x * x).exp_m1()
}

/// Radius (in core radii) of peak tangential speed, root of `2x²·e^{-x²} = 1 - e^{-x²}`.
pub const PEAK_RADIUS_RATIO: f64 = 1.120_906_402_7;

pub fn peak_tangential_speed(circulation: f64, core_radius: f64) -> f64 {
    lamb_oseen_tangential(PEAK_RADIUS_RATIO * core_radius, circulation, core_radius)
}

/// How a stage samples its scatterers.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StageProfile {
    /// Radius interval in core radii.
    pub radius: (f64, f64),
    /// Probability of a closing (positive) line-of-sight velocity.
    pub p_positive: f64,
    /// Amplitude factor applied to receding scatterers.
    pub negative_gain: f64,
    /// Upper bound of the extra spread factor on positive speeds.
    pub positive_spread: f64,
}

impl StageProfile {
    pub fn of(stage: WakeStage) -> Self {
        match stage {
            // inside the core: speed grows with radius
            WakeStage::Young => Self {
                radius: (0.3, 1.0),
                p_positive: 0.6,
                negative_gain: 1.0,
                positive_spread: 1.0,
            },
            WakeStage::Mature => Self {
                radius: (0.6, 2.0),
                p_positive: 0.75,
                negative_gain: 0.2,
                positive_spread: 1.0,
            },
            // outside the core: speed falls with radius
            WakeStage::Old => Self {
                radius: (1.5, 4.0),
                p_positive: 0.5,
                negative_gain: 1.0,
                positive_spread: 1.2,
            },
            WakeStage::Decaying => Self {
                radius: (2.0, 5.0),
                p_positive: 0.5,
                negative_gain: 1.0,
                positive_spread: 1.2,
            },
        }
    }

    /// Expected line-of-sight speed per unit `Γ/(2π r_c)`, ignoring the speed floor.
    pub fn mean_speed_factor(&self) -> f64 {
        let (a, b) = self.radius;
        let steps = 2000;
        let h = (b - a) / steps as f64;
        let f = |u: f64| -(-u * u).exp_m1() / u;
        // Simpson's rule
        let mut acc = f(a) + f(b);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        let mean_f = acc * h / 3.0 / (b - a);
        let projection = 0.5 * (PROJECTION.0 + PROJECTION.1);
        let spread = self.p_positive * 0.5 * (1.0 + self.positive_spread) + (1.0 - self.p_positive);
        mean_f * projection * spread
    }
}

/// One wake scatterer as seen along the line of sight during a CPI.
#[derive(Debug, Clone, PartialEq)]
pub struct WakeScatterer {
    /// Line-of-sight velocity at mid-CPI, m/s.
    pub velocity: f64,
    /// Relative amplitude.
    pub amplitude: f64,
    /// Total velocity change across the CPI (linear chirp), m/s.
    pub drift: f64,
    /// Initial phase, radians.
    pub phase: f64,
    /// Pulse-index ranges during which the scatterer reflects.
    pub active: Vec<Range<usize>>,
}

impl WakeScatterer {
    pub fn is_active(&self, pulse: usize) -> bool {
        self.active.iter().any(|r| r.contains(&pulse))
    }

    /// Complex pulse series of this scatterer (zero while gated off).
    pub fn pulse_series(&self, config: &RadarConfig) -> Vec<num_complex::Complex64> {
        let n = config.n_pulses;
        let k = 2.0 * PI * 2.0 / (config.wavelength() * config.prf);
        let mut out = vec![num_complex::Complex64::new(0.0, 0.0); n];
        for range in &self.active {
            for p in range.clone() {
                let t = p as f64;
                let phase = self.phase
                    + k * (self.velocity * t + self.drift * (t * t / (2.0 * n as f64) - t / 2.0));
                out[p] = num_complex::Complex64::from_polar(self.amplitude, phase);
            }
        }
        out
    }
}

/// Draws the scatterer population of one wake range bin.
///
/// Deterministic in `seed`. Speeds are line-of-sight projections of
/// Lamb-Oseen tangential speeds sampled across the stage's radius interval.
pub fn wake_doppler_population(
    spec: &WakeSegmentSpec,
    config: &RadarConfig,
    seed: u64,
) -> Vec<WakeScatterer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    population_from_rng(spec, config, &mut rng)
}

pub(crate) fn population_from_rng<R: Rng>(
    spec: &WakeSegmentSpec,
    config: &RadarConfig,
    rng: &mut R,
) -> Vec<WakeScatterer> {
    let profile = StageProfile::of(spec.stage);
    let v_peak = peak_tangential_speed(spec.circulation, spec.core_radius);
    let v_max = 1.2 * v_peak;
    let cap = spec.speed_cap.unwrap_or(f64::INFINITY).min(v_max);
    let floor = MIN_WAKE_SPEED.min(cap);
    let vres = config.velocity_resolution();
    let n = config.n_pulses;
    let gate_len = (n / GATE_INTERVALS).max(1);

    (0..spec.n_scatterers.max(1))
        .map(|_| {
            let positive = rng.random_bool(profile.p_positive);
            let mut speed = 0.0;
            for _ in 0..32 {
                let u = rng.random_range(profile.radius.0..=profile.radius.1);
                let c = rng.random_range(PROJECTION.0..=PROJECTION.1);
                speed = lamb_oseen_tangential(u * spec.core_radius, spec.circulation, spec.core_radius)
                    * c;
                if positive && profile.positive_spread > 1.0 {
                    speed *= rng.random_range(1.0..=profile.positive_spread);
                }
                if speed >= floor && speed <= cap {
                    break;
                }
            }
            let speed = speed.clamp(floor, cap);
            let velocity = if positive { speed } else { -speed };

            let mut amplitude = rng.random_range(0.5..=1.0);
            if !positive {
                amplitude *= profile.negative_gain;
            }

            let drift_sign = match spec.slope_sign {
                SlopeSign::Positive => 1.0,
                SlopeSign::Negative => -1.0,
                SlopeSign::Mixed => {
                    if rng.random_bool(0.5) {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            let drift = drift_sign * rng.random_range(DRIFT_CELLS.0..=DRIFT_CELLS.1) * vres;
            let phase = rng.random_range(0.0..2.0 * PI);

            let mut on: Vec<bool> = (0..GATE_INTERVALS)
                .map(|_| !rng.random_bool(spec.intermittency.clamp(0.0, 1.0)))
                .collect();
            if !on.iter().any(|&b| b) {
                let pick = rng.random_range(0..GATE_INTERVALS);
                on[pick] = true;
            }
            WakeScatterer {
                velocity,
                amplitude,
                drift,
                phase,
                active: gate_ranges(&on, gate_len, n),
            }
        })
        .collect()
}

/// Merges per-interval on/off flags into contiguous pulse ranges.
fn gate_ranges(on: &[bool], gate_len: usize, n: usize) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    for (i, &active) in on.iter().enumerate() {
        if !active {
            continue;
        }
        let start = i * gate_len;
        let end = if i + 1 == on.len() { n } else { (i + 1) * gate_len };
        match out.last_mut() {
            Some(last) if last.end == start => last.end = end,
            _ => out.push(start..end),
        }
    }
    out
}
