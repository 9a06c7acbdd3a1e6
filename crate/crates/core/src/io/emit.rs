//! Detection and track serialization.
//!
//! Numbers are formatted by Rust's own formatter, so output never depends
//! on the process locale.

use std::io::Write;

use serde::Serialize;

use crate::detect::{Detection, DetectionClass};
use crate::error::Result;
use crate::tracker::TrackFrame;

pub const CSV_HEADER: &str = "frame,bin,range_m,class,snr_db,dscr_db,velocity_mps,stage";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

#[derive(Serialize)]
struct Row<'a> {
    frame: u32,
    bin: usize,
    range_m: f64,
    class: DetectionClass,
    snr_db: f64,
    dscr_db: f64,
    velocity_mps: f64,
    stage: Option<&'a str>,
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn sorted(detections: &[Detection]) -> Vec<&Detection> {
    let mut v: Vec<&Detection> = detections.iter().collect();
    v.sort_by_key(|d| (d.frame_index, d.bin_index));
    v
}

/// Writes one row per detection, ordered by (frame, bin). Callers decide
/// which detections to pass; the CLI drops noise bins.
pub fn emit_detections<W: Write>(mut out: W, detections: &[Detection], format: EmitFormat) -> Result<()> {
    let rows = sorted(detections);
    match format {
        EmitFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for d in rows {
                writeln!(
                    out,
                    "{},{},{:.3},{},{:.3},{:.3},{:.3},{}",
                    d.frame_index,
                    d.bin_index,
                    d.range_m,
                    d.class,
                    d.snr_db,
                    d.dscr_db,
                    d.dominant_velocity,
                    d.stage.map_or("", |s| s.as_str())
                )?;
            }
        }
        EmitFormat::Json => {
            let rows: Vec<Row> = rows
                .into_iter()
                .map(|d| Row {
                    frame: d.frame_index,
                    bin: d.bin_index,
                    range_m: round3(d.range_m),
                    class: d.class,
                    snr_db: round3(d.snr_db),
                    dscr_db: round3(d.dscr_db),
                    velocity_mps: round3(d.dominant_velocity),
                    stage: d.stage.map(|s| s.as_str()),
                })
                .collect();
            serde_json::to_writer_pretty(&mut out, &rows).map_err(std::io::Error::other)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// One JSON object per line per track frame.
pub fn emit_track<W: Write>(mut out: W, frames: &[TrackFrame]) -> Result<()> {
    for f in frames {
        serde_json::to_writer(&mut out, f).map_err(std::io::Error::other)?;
        writeln!(out)?;
    }
    Ok(())
}
