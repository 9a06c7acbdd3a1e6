//! Wake-stage geometry, slope sign, JEM combs and Doppler-group statistics.

mod groups;
mod jem;
mod slope;
mod stage;

pub use groups::{doppler_group_stats, DopplerGroupStats};
pub use jem::{jem_comb_estimate, jem_comb_estimate_with, JemComb, JemConfig, SecondComb};
pub use slope::{
    slope_sign_classify, slope_sign_classify_pooled, RidgeFit, SlopeConfig, SlopeEstimate, SlopeSign, SLOPE_HOP,
    SLOPE_WIN_LEN,
};
pub use stage::{stage_from_distance, StageEstimate, WakeStage};
