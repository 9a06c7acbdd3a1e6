//! Netpbm renders of range-Doppler maps and spectrograms.
//!
//! Range (or time) runs left to right, velocity bottom to top with the most
//! positive velocity in the first row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dsp::{RangeDopplerMap, Spectrogram};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    /// Decibels below the peak, clamped to `dynamic_range` dB.
    Db { dynamic_range: f64 },
    Linear,
}

impl Default for Scale {
    fn default() -> Self {
        Scale::Db { dynamic_range: 60.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub scale: Scale,
    /// P6 with a colormap instead of P5 grey.
    pub color: bool,
    /// Velocity cells are averaged in power-of-two groups until at most
    /// this many rows remain.
    pub max_doppler_pixels: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            scale: Scale::default(),
            color: false,
            max_doppler_pixels: 2048,
        }
    }
}

/// An 8-bit intensity raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Builds a raster from columns of magnitudes (one column per range bin or
/// time slice, cells in ascending velocity).
fn raster(columns: &[&[f64]], options: &RenderOptions) -> Result<Raster> {
    let width = columns.len();
    let n = columns.first().map_or(0, |c| c.len());
    if width == 0 || n == 0 {
        return Err(Error::domain("cannot render an empty map"));
    }
    let mut factor = 1;
    while n / factor > options.max_doppler_pixels.max(1) && factor < n {
        factor *= 2;
    }
    let height = n.div_ceil(factor);
    // averaged power per pixel
    let cols: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            c.chunks(factor)
                .map(|g| g.iter().map(|a| a * a).sum::<f64>() / g.len() as f64)
                .collect()
        })
        .collect();
    let peak = cols.iter().flatten().cloned().fold(0.0, f64::max);
    let level = |p: f64| -> u8 {
        if !(peak > 0.0) || p <= 0.0 {
            return 0;
        }
        let x = match options.scale {
            Scale::Db { dynamic_range } => {
                let db = 10.0 * (p / peak).log10();
                (db + dynamic_range) / dynamic_range
            }
            Scale::Linear => (p / peak).sqrt(),
        };
        (x.clamp(0.0, 1.0) * 255.0).round() as u8
    };
    let mut pixels = vec![0u8; width * height];
    for (x, col) in cols.iter().enumerate() {
        for (j, &p) in col.iter().enumerate() {
            let y = height - 1 - j;
            pixels[y * width + x] = level(p);
        }
    }
    Ok(Raster { width, height, pixels })
}

pub fn map_raster(map: &RangeDopplerMap, options: &RenderOptions) -> Result<Raster> {
    let cols: Vec<&[f64]> = map.rows.iter().map(|r| r.amplitudes.as_slice()).collect();
    raster(&cols, options)
}

pub fn spectrogram_raster(sg: &Spectrogram, options: &RenderOptions) -> Result<Raster> {
    let cols: Vec<&[f64]> = sg.magnitudes.iter().map(|m| m.as_slice()).collect();
    raster(&cols, options)
}

/// Black, blue, red, yellow, white.
fn colormap(v: u8) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 180.0],
        [200.0, 0.0, 60.0],
        [255.0, 210.0, 0.0],
        [255.0, 255.0, 255.0],
    ];
    let t = v as f64 / 255.0 * 4.0;
    let i = (t.floor() as usize).min(3);
    let f = t - i as f64;
    let mix = |k: usize| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8;
    [mix(0), mix(1), mix(2)]
}

pub fn write_netpbm<W: Write>(mut out: W, raster: &Raster, color: bool) -> Result<()> {
    if color {
        write!(out, "P6\n{} {}\n255\n", raster.width, raster.height)?;
        let rgb: Vec<u8> = raster.pixels.iter().flat_map(|&v| colormap(v)).collect();
        out.write_all(&rgb)?;
    } else {
        write!(out, "P5\n{} {}\n255\n", raster.width, raster.height)?;
        out.write_all(&raster.pixels)?;
    }
    out.flush()?;
    Ok(())
}

pub fn render_map(map: &RangeDopplerMap, options: &RenderOptions, path: &Path) -> Result<()> {
    let r = map_raster(map, options)?;
    write_netpbm(BufWriter::new(File::create(path)?), &r, options.color)
}

pub fn render_spectrogram(sg: &Spectrogram, options: &RenderOptions, path: &Path) -> Result<()> {
    let r = spectrogram_raster(sg, options)?;
    write_netpbm(BufWriter::new(File::create(path)?), &r, options.color)
}
