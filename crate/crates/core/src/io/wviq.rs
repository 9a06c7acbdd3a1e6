//! WVIQ binary I/Q container.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field          |
//! |--------|------|----------------|
//! | 0      | 4    | magic `WVIQ`   |
//! | 4      | 2    | format version  |
//! | 6      | 8    | carrier, Hz    |
//! | 14     | 8    | PRF, Hz        |
//! | 22     | 8    | range res, m   |
//! | 30     | 4    | n_pulses       |
//! | 34     | 4    | n_bins         |
//! | 38     | 4    | n_frames       |
//! | 42     | ...  | payload        |
//!
//! The payload holds the frames in order, each bin-major, each pulse as an
//! `f32` I followed by an `f32` Q.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex32;

use crate::error::{Error, Result};
use crate::params::{RadarConfig, SPEED_OF_LIGHT};
use crate::sim::CpiFrame;

pub const MAGIC: &[u8; 4] = b"WVIQ";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 42;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WviqHeader {
    pub format_version: u16,
    pub carrier_hz: f64,
    pub prf_hz: f64,
    pub range_res_m: f64,
    pub n_pulses: u32,
    pub n_bins: u32,
    pub n_frames: u32,
}

impl WviqHeader {
    pub fn payload_len(&self) -> u64 {
        self.n_frames as u64 * self.n_bins as u64 * self.n_pulses as u64 * 8
    }

    /// Radar configuration implied by the header. Link-budget fields are
    /// not stored and take reference values.
    pub fn radar_config(&self) -> RadarConfig {
        RadarConfig {
            carrier_frequency: self.carrier_hz,
            prf: self.prf_hz,
            n_pulses: self.n_pulses as usize,
            bandwidth: SPEED_OF_LIGHT / (2.0 * self.range_res_m),
            n_range_bins: self.n_bins as usize,
            ..RadarConfig::reference()
        }
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(MAGIC);
        b[4..6].copy_from_slice(&self.format_version.to_le_bytes());
        b[6..14].copy_from_slice(&self.carrier_hz.to_le_bytes());
        b[14..22].copy_from_slice(&self.prf_hz.to_le_bytes());
        b[22..30].copy_from_slice(&self.range_res_m.to_le_bytes());
        b[30..34].copy_from_slice(&self.n_pulses.to_le_bytes());
        b[34..38].copy_from_slice(&self.n_bins.to_le_bytes());
        b[38..42].copy_from_slice(&self.n_frames.to_le_bytes());
        b
    }

    fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::format(
                bytes.len() as u64,
                format!("header truncated: expected {HEADER_LEN} bytes, got {}", bytes.len()),
            ));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::format(0, format!("bad magic {:?}, expected \"WVIQ\"", &bytes[0..4])));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let format_version = u16_at(4);
        if format_version != FORMAT_VERSION {
            return Err(Error::format(
                4,
                format!("unsupported format_version {format_version}, expected {FORMAT_VERSION}"),
            ));
        }
        let header = Self {
            format_version,
            carrier_hz: f64_at(6),
            prf_hz: f64_at(14),
            range_res_m: f64_at(22),
            n_pulses: u32_at(30),
            n_bins: u32_at(34),
            n_frames: u32_at(38),
        };
        for (offset, name, v) in [
            (6, "carrier_hz", header.carrier_hz),
            (14, "prf_hz", header.prf_hz),
            (22, "range_res_m", header.range_res_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::format(offset, format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (offset, name, v) in [(30, "n_pulses", header.n_pulses), (34, "n_bins", header.n_bins)] {
            if v == 0 {
                return Err(Error::format(offset, format!("{name} must be non-zero")));
            }
        }
        Ok(header)
    }
}

fn header_for(frames: &[CpiFrame], config: &RadarConfig) -> Result<WviqHeader> {
    for f in frames {
        if f.n_bins != config.n_range_bins || f.n_pulses != config.n_pulses {
            return Err(Error::Dimension {
                expected: config.n_range_bins * config.n_pulses,
                actual: f.n_bins * f.n_pulses,
            });
        }
    }
    let narrow = |v: usize, name: &str| {
        u32::try_from(v).map_err(|_| Error::domain(format!("{name} {v} does not fit in 32 bits")))
    };
    Ok(WviqHeader {
        format_version: FORMAT_VERSION,
        carrier_hz: config.carrier_frequency,
        prf_hz: config.prf,
        range_res_m: config.range_resolution(),
        n_pulses: narrow(config.n_pulses, "n_pulses")?,
        n_bins: narrow(config.n_range_bins, "n_bins")?,
        n_frames: narrow(frames.len(), "n_frames")?,
    })
}

/// Serializes frames into a writer.
pub fn write_wviq_to<W: Write>(mut w: W, frames: &[CpiFrame], config: &RadarConfig) -> Result<()> {
    let header = header_for(frames, config)?;
    w.write_all(&header.to_bytes())?;
    let mut buf = Vec::with_capacity(config.n_pulses * 8);
    for frame in frames {
        for bin in 0..frame.n_bins {
            buf.clear();
            for z in frame.bin(bin) {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_wviq(frames: &[CpiFrame], config: &RadarConfig, path: &Path) -> Result<()> {
    write_wviq_to(BufWriter::new(File::create(path)?), frames, config)
}

/// Parses a complete WVIQ image. Frame timestamps are `index · frame_interval`.
pub fn parse_wviq(bytes: &[u8], frame_interval: f64) -> Result<(Vec<CpiFrame>, WviqHeader)> {
    let header = WviqHeader::parse(bytes)?;
    let expected = header.payload_len();
    let actual = (bytes.len() - HEADER_LEN) as u64;
    if actual != expected {
        let what = if actual < expected { "truncated" } else { "oversized" };
        return Err(Error::format(
            HEADER_LEN as u64 + actual.min(expected),
            format!("payload {what}: expected {expected} bytes, got {actual}"),
        ));
    }
    let (n_bins, n_pulses) = (header.n_bins as usize, header.n_pulses as usize);
    let frame_bytes = n_bins * n_pulses * 8;
    let payload = &bytes[HEADER_LEN..];
    let frames = (0..header.n_frames as usize)
        .map(|k| {
            let chunk = &payload[k * frame_bytes..(k + 1) * frame_bytes];
            let iq = chunk
                .chunks_exact(8)
                .map(|c| {
                    Complex32::new(
                        f32::from_le_bytes(c[0..4].try_into().unwrap()),
                        f32::from_le_bytes(c[4..8].try_into().unwrap()),
                    )
                })
                .collect();
            CpiFrame {
                iq,
                n_bins,
                n_pulses,
                frame_index: k as u32,
                timestamp: k as f64 * frame_interval,
            }
        })
        .collect();
    Ok((frames, header))
}

/// Reads a WVIQ file, returning its frames and the implied radar configuration.
pub fn read_wviq(path: &Path, frame_interval: f64) -> Result<(Vec<CpiFrame>, RadarConfig)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let (frames, header) = parse_wviq(&bytes, frame_interval)?;
    Ok((frames, header.radar_config()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (Vec<CpiFrame>, RadarConfig) {
        let cfg = RadarConfig {
            n_pulses: 16,
            n_range_bins: 3,
            ..RadarConfig::reference()
        };
        let mut f = CpiFrame::zeros(3, 16, 0, 0.0);
        for (i, z) in f.iq.iter_mut().enumerate() {
            *z = Complex32::new(i as f32 * 0.25 - 3.0, f32::MIN_POSITIVE * i as f32);
        }
        (vec![f], cfg)
    }

    fn encode(frames: &[CpiFrame], cfg: &RadarConfig) -> Vec<u8> {
        let mut out = Vec::new();
        write_wviq_to(&mut out, frames, cfg).unwrap();
        out
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (frames, cfg) = small();
        let bytes = encode(&frames, &cfg);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 16 * 8);
        let (back, header) = parse_wviq(&bytes, 0.5).unwrap();
        assert_eq!(header.n_frames, 1);
        for (a, b) in back[0].iq.iter().zip(&frames[0].iq) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        let rc = header.radar_config();
        assert!((rc.range_resolution() - cfg.range_resolution()).abs() < 1e-9);
    }

    #[test]
    fn reference_payload_size() {
        let h = WviqHeader {
            format_version: 1,
            carrier_hz: 10.1e9,
            prf_hz: 11_400.0,
            range_res_m: 30.0,
            n_pulses: 2048,
            n_bins: 512,
            n_frames: 1,
        };
        assert_eq!(h.payload_len(), 8_388_608);
    }

    #[test]
    fn malformed_inputs_name_offsets() {
        let (frames, cfg) = small();
        let bytes = encode(&frames, &cfg);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(parse_wviq(&bad, 0.5), Err(Error::Format { offset: 0, .. })));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(parse_wviq(&bad, 0.5), Err(Error::Format { offset: 4, .. })));

        let cut = &bytes[..bytes.len() - 5];
        match parse_wviq(cut, 0.5) {
            Err(Error::Format { message, .. }) => {
                assert!(message.contains("expected 384"), "{message}");
                assert!(message.contains("got 379"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }

        assert!(matches!(parse_wviq(&bytes[..10], 0.5), Err(Error::Format { .. })));
        let mut long = bytes.clone();
        long.push(0);
        assert!(parse_wviq(&long, 0.5).is_err());
    }
}
