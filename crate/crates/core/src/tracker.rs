//! Frame-to-frame association of the aircraft and its trailing wake.

use serde::{Deserialize, Serialize};

use crate::detect::{Detection, DetectionClass, ScanResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Association gate, bins.
    pub gate_bins: usize,
    /// Consecutive misses tolerated before the track is dropped.
    pub coast_limit: usize,
    pub confirm_hits: usize,
    pub range_resolution: f64,
    /// Half-width of the measurable velocity interval, m/s.
    pub unambiguous_velocity: f64,
}

impl TrackerConfig {
    pub fn new(range_resolution: f64, unambiguous_velocity: f64) -> Self {
        Self {
            gate_bins: 5,
            coast_limit: 3,
            confirm_hits: 3,
            range_resolution,
            unambiguous_velocity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Coasting,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFrame {
    pub frame_index: u32,
    pub timestamp: f64,
    pub aircraft_bin: Option<usize>,
    /// Unfolded radial velocity, m/s.
    pub aircraft_velocity: f64,
    /// Velocity as measured in the spectrum, m/s.
    pub measured_velocity: f64,
    pub wake_extent: Option<(usize, usize)>,
    pub wake_length_m: f64,
    pub status: TrackStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub frames: Vec<TrackFrame>,
    pub status: TrackStatus,
    pub config: TrackerConfig,
    consecutive_hits: usize,
    consecutive_misses: usize,
    confirmed_once: bool,
}

impl Track {
    pub fn new(config: TrackerConfig) -> Self {
        Self {
            frames: Vec::new(),
            status: TrackStatus::Tentative,
            config,
            consecutive_hits: 0,
            consecutive_misses: 0,
            confirmed_once: false,
        }
    }

    fn associations(&self) -> impl DoubleEndedIterator<Item = &TrackFrame> {
        self.frames.iter().filter(|f| f.aircraft_bin.is_some())
    }

    pub fn last_association(&self) -> Option<&TrackFrame> {
        self.associations().next_back()
    }

    pub fn n_associations(&self) -> usize {
        self.associations().count()
    }

    /// Bin expected `dt` seconds after the last association.
    pub fn predict(&self, dt: f64) -> Result<usize> {
        let last = self.last_association().ok_or(Error::NoState)?;
        let bin = last.aircraft_bin.ok_or(Error::NoState)?;
        // receding (negative) velocity moves to higher bins
        let shift = (-last.aircraft_velocity * dt / self.config.range_resolution).round() as i64;
        Ok((bin as i64 + shift).max(0) as usize)
    }

    /// Alias of `measured` closest to the drift seen over the last two
    /// associations, or `measured` itself without drift history.
    fn unfold(&self, measured: f64, bin: usize, timestamp: f64) -> f64 {
        let Some(prev) = self.last_association() else {
            return measured;
        };
        let dt = timestamp - prev.timestamp;
        let Some(prev_bin) = prev.aircraft_bin else {
            return measured;
        };
        if !(dt > 0.0) {
            return measured;
        }
        let observed = -(bin as f64 - prev_bin as f64) * self.config.range_resolution / dt;
        let period = 2.0 * self.config.unambiguous_velocity;
        (-4..=4)
            .map(|k| measured + k as f64 * period)
            .min_by(|a, b| (a - observed).abs().total_cmp(&(b - observed).abs()))
            .unwrap_or(measured)
    }

    /// Adds a frame taken `dt` seconds after the previous one.
    pub fn update(&mut self, scan: &ScanResult, dt: f64) -> Result<()> {
        if !(dt > 0.0) && !self.frames.is_empty() {
            return Err(Error::domain(format!("frame interval must be positive, got {dt}")));
        }
        let timestamp = self.frames.last().map_or(0.0, |f| f.timestamp + dt);
        self.update_at(scan, timestamp)
    }

    /// Adds a frame observed at `timestamp`.
    pub fn update_at(&mut self, scan: &ScanResult, timestamp: f64) -> Result<()> {
        if let Some(last) = self.frames.last() {
            if !(timestamp > last.timestamp) {
                return Err(Error::domain("track timestamps must increase"));
            }
        }
        if self.status == TrackStatus::Dropped {
            return Ok(());
        }
        let gate = self.config.gate_bins;
        let associated: Option<&Detection> = match self.last_association() {
            None => scan.aircraft(),
            Some(last) => {
                let predicted = self.predict(timestamp - last.timestamp)?;
                scan.detections
                    .iter()
                    .filter(|d| d.class == DetectionClass::Aircraft)
                    .filter(|d| d.bin_index.abs_diff(predicted) <= gate)
                    .min_by_key(|d| (d.bin_index.abs_diff(predicted), d.bin_index))
            }
        };

        let mut record = TrackFrame {
            frame_index: scan.frame_index,
            timestamp,
            aircraft_bin: None,
            aircraft_velocity: self.last_association().map_or(0.0, |f| f.aircraft_velocity),
            measured_velocity: 0.0,
            wake_extent: None,
            wake_length_m: 0.0,
            status: self.status,
        };
        match associated {
            Some(d) => {
                let bin = d.bin_index;
                record.aircraft_bin = Some(bin);
                record.measured_velocity = d.dominant_velocity;
                record.aircraft_velocity = self.unfold(d.dominant_velocity, bin, timestamp);
                if scan.aircraft_bin == Some(bin) {
                    if let Some((lo, hi)) = scan.wake_extent.filter(|&(_, hi)| hi < bin) {
                        record.wake_extent = Some((lo, hi));
                        record.wake_length_m = (hi - lo + 1) as f64 * self.config.range_resolution;
                    }
                }
                self.consecutive_hits += 1;
                self.consecutive_misses = 0;
                if self.consecutive_hits >= self.config.confirm_hits
                    || (self.confirmed_once && self.status == TrackStatus::Coasting)
                {
                    self.status = TrackStatus::Confirmed;
                    self.confirmed_once = true;
                }
            }
            None => {
                self.consecutive_hits = 0;
                self.consecutive_misses += 1;
                if self.consecutive_misses > self.config.coast_limit {
                    self.status = TrackStatus::Dropped;
                } else if self.confirmed_once {
                    self.status = TrackStatus::Coasting;
                }
            }
        }
        record.status = self.status;
        self.frames.push(record);
        Ok(())
    }

    /// Wake and other detections strictly ahead of this frame's aircraft.
    /// Empty unless the aircraft was associated in the latest frame.
    pub fn ahead_report<'a>(&self, scan: &'a ScanResult) -> Vec<&'a Detection> {
        let Some(bin) = self
            .frames
            .last()
            .filter(|f| f.frame_index == scan.frame_index)
            .and_then(|f| f.aircraft_bin)
        else {
            return Vec::new();
        };
        scan.detections
            .iter()
            .filter(|d| d.bin_index > bin)
            .filter(|d| matches!(d.class, DetectionClass::Wake | DetectionClass::Other))
            .collect()
    }
}
