//! File formats, scenario files, serialization and renders.

pub mod emit;
pub mod render;
pub mod scenario;
pub mod wviq;

pub use emit::{emit_detections, emit_track, EmitFormat, CSV_HEADER};
pub use render::{render_map, render_spectrogram, RenderOptions, Scale};
pub use scenario::{load_scenario, parse_radar, parse_scenario, ScenarioFile};
pub use wviq::{parse_wviq, read_wviq, write_wviq, write_wviq_to, WviqHeader};
