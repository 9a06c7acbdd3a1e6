use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Age of a wake vortex, indexed by the distance-to-wingspan ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WakeStage {
    /// ratio ≤ 1
    Young,
    /// 1 < ratio ≤ 10
    Mature,
    /// 10 < ratio ≤ 100
    Old,
    /// ratio > 100
    Decaying,
}

impl WakeStage {
    /// Stage for a distance/wingspan ratio. Boundary values belong to the
    /// earlier stage.
    pub fn from_ratio(r_wv: f64) -> Self {
        if r_wv <= 1.0 {
            WakeStage::Young
        } else if r_wv <= 10.0 {
            WakeStage::Mature
        } else if r_wv <= 100.0 {
            WakeStage::Old
        } else {
            WakeStage::Decaying
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WakeStage::Young => "young",
            WakeStage::Mature => "mature",
            WakeStage::Old => "old",
            WakeStage::Decaying => "decaying",
        }
    }
}

impl fmt::Display for WakeStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WakeStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "young" => Ok(WakeStage::Young),
            "mature" => Ok(WakeStage::Mature),
            "old" => Ok(WakeStage::Old),
            "decaying" => Ok(WakeStage::Decaying),
            other => Err(Error::Config(format!("unknown wake stage `{other}`"))),
        }
    }
}

/// Stage together with the ratio it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageEstimate {
    pub stage: WakeStage,
    pub r_wv: f64,
}

/// Classifies a wake at distance `x` behind an aircraft of wingspan `b`.
///
/// The thresholds are applied as `x ≤ k·b`, so a distance computed as
/// `k·b` lands exactly on its boundary.
pub fn stage_from_distance(x: f64, b: f64) -> Result<StageEstimate> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::domain(format!("wingspan must be positive, got {b}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("distance must be non-negative, got {x}")));
    }
    let stage = if x <= b {
        WakeStage::Young
    } else if x <= 10.0 * b {
        WakeStage::Mature
    } else if x <= 100.0 * b {
        WakeStage::Old
    } else {
        WakeStage::Decaying
    };
    Ok(StageEstimate { stage, r_wv: x / b })
}
