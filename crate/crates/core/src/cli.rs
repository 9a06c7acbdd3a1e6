//! Command-line front end. `run` returns the process exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::detect::{DetectionClass, DetectorConfig};
use crate::dsp::{micro_doppler_spectrogram, notch_clutter, Window, DEFAULT_HOP, DEFAULT_WIN_LEN};
use crate::error::{Error, Result};
use crate::io::{self, EmitFormat, RenderOptions, Scale};
use crate::params::{detection_range, fold_velocity, LinkBudgetQuery, RadarConfig};
use crate::pipeline::{process_frame, run_scene, scene_rates};
use crate::signature::{
    doppler_group_stats, jem_comb_estimate, slope_sign_classify, slope_sign_classify_pooled, stage_from_distance,
    SlopeConfig, SLOPE_HOP, SLOPE_WIN_LEN,
};
use crate::sim::synthesize_all;
use crate::tracker::{Track, TrackerConfig};

/// Environment variable naming a default detector configuration file.
pub const DETECTOR_CONFIG_ENV: &str = "WAKERADAR_DETECTOR_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "wakeradar", version, about = "Pulse-Doppler wake-vortex toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WindowArg {
    Rectangular,
    Hann,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Rectangular => Window::Rectangular,
            WindowArg::Hann => Window::Hann,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a scenario into a WVIQ file.
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render the range-Doppler map of one frame.
    Process {
        wviq: PathBuf,
        #[arg(long, default_value_t = 0)]
        frame: u32,
        #[arg(short, long)]
        output: PathBuf,
        /// Colour pixmap (P6) instead of a grey map (P5).
        #[arg(long)]
        color: bool,
        #[arg(long)]
        linear: bool,
        #[arg(long, default_value_t = 60.0)]
        dynamic_range: f64,
        #[arg(long, default_value_t = 2048)]
        max_doppler_pixels: usize,
        #[arg(long, value_enum, default_value_t = WindowArg::Rectangular)]
        window: WindowArg,
    },
    /// Classify every bin of every frame.
    Detect {
        wviq: PathBuf,
        /// Detector configuration (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Noise power per sample; estimated from the data when absent.
        #[arg(long)]
        noise_floor: Option<f64>,
    },
    /// Track the aircraft and its wake across frames.
    Track {
        wviq: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        frame_interval: f64,
        #[arg(long, default_value_t = 5)]
        gate: usize,
        #[arg(long, default_value_t = 3)]
        coast_limit: usize,
        #[arg(long)]
        noise_floor: Option<f64>,
    },
    /// Inspect one range bin of one frame.
    Analyze {
        wviq: PathBuf,
        #[arg(long)]
        bin: usize,
        #[arg(long, default_value_t = 0)]
        frame: u32,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Writes the bin's micro-Doppler spectrogram here (P5).
        #[arg(long)]
        spectrogram: Option<PathBuf>,
        #[arg(long)]
        noise_floor: Option<f64>,
        /// Half-width in bins of the neighbourhood pooled for the segment slope.
        #[arg(long, default_value_t = 20)]
        slope_bins: usize,
    },
    /// Derived radar quantities and detection range.
    Budget {
        /// TOML file with a [radar] table.
        config: PathBuf,
        /// Target RCS, m².
        #[arg(long, default_value_t = 1.0)]
        rcs: f64,
        /// Required SNR, dB.
        #[arg(long, default_value_t = 13.0)]
        snr_db: f64,
    },
    /// Run two scenarios and compare detection rates.
    Compare {
        scenario_a: PathBuf,
        scenario_b: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Exit status for an error: 2 for malformed input, 3 for numeric/domain
/// failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Format { .. } | Error::Config(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn detector_config(path: Option<&Path>) -> Result<DetectorConfig> {
    let env = std::env::var_os(DETECTOR_CONFIG_ENV).map(PathBuf::from);
    let cfg = match path.map(Path::to_path_buf).or(env) {
        Some(p) => {
            let text = std::fs::read_to_string(&p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => DetectorConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn load_frame(path: &Path, frame: u32) -> Result<(crate::sim::CpiFrame, RadarConfig)> {
    let (frames, cfg) = io::read_wviq(path, 0.5)?;
    let n = frames.len();
    let f = frames
        .into_iter()
        .nth(frame as usize)
        .ok_or_else(|| Error::domain(format!("frame {frame} outside file of {n} frames")))?;
    Ok((f, cfg))
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate { scenario, output, seed } => {
            let mut s = io::load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let frames: Vec<_> = synthesize_all(&s)?.into_iter().map(|f| f.frame).collect();
            io::write_wviq(&frames, &s.radar, &output)?;
            writeln!(out, "wrote {} frames of {} x {} to {}", frames.len(), s.radar.n_range_bins, s.radar.n_pulses, output.display())?;
        }
        Command::Process {
            wviq,
            frame,
            output,
            color,
            linear,
            dynamic_range,
            max_doppler_pixels,
            window,
        } => {
            if !(dynamic_range > 0.0) {
                return Err(Error::domain("dynamic range must be positive"));
            }
            let (f, cfg) = load_frame(&wviq, frame)?;
            let map = crate::dsp::range_doppler_map(&f, &cfg, window.into())?;
            let options = RenderOptions {
                scale: if linear { Scale::Linear } else { Scale::Db { dynamic_range } },
                color,
                max_doppler_pixels,
            };
            io::render_map(&map, &options, &output)?;
            writeln!(out, "rendered frame {frame} to {}", output.display())?;
        }
        Command::Detect {
            wviq,
            config,
            output,
            format,
            noise_floor,
        } => {
            let det = detector_config(config.as_deref())?;
            let (frames, cfg) = io::read_wviq(&wviq, 0.5)?;
            let mut rows = Vec::new();
            for f in &frames {
                let p = process_frame(f, &cfg, &det, noise_floor)?;
                rows.extend(p.scan.detections.into_iter().filter(|d| d.class != DetectionClass::Noise));
            }
            let format = match format {
                Format::Csv => EmitFormat::Csv,
                Format::Json => EmitFormat::Json,
            };
            let mut w = create(&output)?;
            io::emit_detections(&mut w, &rows, format)?;
            w.flush()?;
            writeln!(out, "{} detections in {} frames", rows.len(), frames.len())?;
        }
        Command::Track {
            wviq,
            config,
            output,
            frame_interval,
            gate,
            coast_limit,
            noise_floor,
        } => {
            if !(frame_interval > 0.0) {
                return Err(Error::domain("frame interval must be positive"));
            }
            let det = detector_config(config.as_deref())?;
            let (frames, cfg) = io::read_wviq(&wviq, frame_interval)?;
            let mut track = Track::new(TrackerConfig {
                gate_bins: gate,
                coast_limit,
                ..TrackerConfig::new(cfg.range_resolution(), cfg.unambiguous_velocity())
            });
            for f in &frames {
                let p = process_frame(f, &cfg, &det, noise_floor)?;
                track.update_at(&p.scan, f.timestamp)?;
                let ahead = track.ahead_report(&p.scan);
                let last = track.frames.last().expect("frame just added");
                writeln!(
                    out,
                    "frame {:>3} aircraft {:>5} wake {:>12} ahead {:>3} status {:?}",
                    f.frame_index,
                    last.aircraft_bin.map_or("-".into(), |b| b.to_string()),
                    last.wake_extent.map_or("-".into(), |(a, b)| format!("{a}-{b}")),
                    ahead.len(),
                    last.status
                )?;
            }
            let mut w = create(&output)?;
            io::emit_track(&mut w, &track.frames)?;
            w.flush()?;
        }
        Command::Analyze {
            wviq,
            bin,
            frame,
            config,
            spectrogram,
            noise_floor,
            slope_bins,
        } => analyze(
            &wviq,
            bin,
            frame,
            config.as_deref(),
            spectrogram.as_deref(),
            noise_floor,
            slope_bins,
            out,
        )?,
        Command::Budget { config, rcs, snr_db } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = io::parse_radar(&text)?;
            let query = LinkBudgetQuery::new(rcs, 10f64.powf(snr_db / 10.0));
            let range = detection_range(&cfg, &query)?;
            writeln!(out, "wavelength_m          {:.6}", cfg.wavelength())?;
            writeln!(out, "range_resolution_m    {:.1}", cfg.range_resolution())?;
            writeln!(out, "velocity_resolution   {:.3} m/s", cfg.velocity_resolution())?;
            writeln!(out, "unambiguous_velocity  {:.2} m/s", cfg.unambiguous_velocity())?;
            writeln!(out, "cpi_s                 {:.4}", cfg.cpi_seconds())?;
            writeln!(out, "range_window_m        {:.0}", cfg.range_resolution() * cfg.n_range_bins as f64)?;
            writeln!(out, "detection_range_m     {range:.1} (rcs {rcs} m^2, snr {snr_db} dB)")?;
        }
        Command::Compare {
            scenario_a,
            scenario_b,
            config,
        } => {
            let det = detector_config(config.as_deref())?;
            let a = io::load_scenario(&scenario_a)?;
            let b = io::load_scenario(&scenario_b)?;
            let ra = scene_rates(&run_scene(&a, &det)?);
            let rb = scene_rates(&run_scene(&b, &det)?);
            writeln!(out, "{:<12} {:>10} {:>10} {:>10}", "rate", "A", "B", "B-A")?;
            for (name, x, y) in [
                ("aircraft", ra.aircraft, rb.aircraft),
                ("wake", ra.wake, rb.wake),
                ("ghost", ra.ghost, rb.ghost),
                ("false_alarm", ra.false_alarm, rb.false_alarm),
            ] {
                writeln!(out, "{name:<12} {x:>10.4} {y:>10.4} {:>+10.4}", y - x)?;
            }
            writeln!(
                out,
                "velocity_resolution {:.4} {:.4} m/s, unambiguous {:.2} {:.2} m/s",
                a.radar.velocity_resolution(),
                b.radar.velocity_resolution(),
                a.radar.unambiguous_velocity(),
                b.radar.unambiguous_velocity()
            )?;
        }
    }
    Ok(())
}

fn analyze(
    wviq: &Path,
    bin: usize,
    frame: u32,
    config: Option<&Path>,
    spectrogram: Option<&Path>,
    noise_floor: Option<f64>,
    slope_bins: usize,
    out: &mut dyn Write,
) -> Result<()> {
    let det = detector_config(config)?;
    let (f, cfg) = load_frame(wviq, frame)?;
    if bin >= f.n_bins {
        return Err(Error::domain(format!("bin {bin} outside {} bins", f.n_bins)));
    }
    let p = process_frame(&f, &cfg, &det, noise_floor)?;
    let d = &p.scan.detections[bin];
    writeln!(out, "frame {frame} bin {bin} range {:.1} m", d.range_m)?;
    writeln!(out, "class {} snr {:.2} dB dscr {:.2} dB dominant {:.3} m/s", d.class, d.snr_db, d.dscr_db, d.dominant_velocity)?;
    writeln!(out, "peaks:")?;
    for pk in &d.doppler_peaks {
        writeln!(out, "  {:>9.3} m/s  {:.4e}", pk.velocity, pk.amplitude)?;
    }
    let g = doppler_group_stats(&d.doppler_peaks);
    writeln!(
        out,
        "groups: n {} mean_speed {:.3} spread {:.3} negative {:.2} level {:.4e}",
        g.n_peaks, g.mean_speed, g.peak_spread, g.negative_fraction, g.magnitude_level
    )?;
    match p.scan.aircraft_bin {
        Some(ac) if ac > bin => {
            let x = (ac - bin) as f64 * cfg.range_resolution();
            let s = stage_from_distance(x, det.wingspan)?;
            writeln!(out, "stage inputs: aircraft bin {ac} x {x:.1} m b {} m r_wv {:.3} -> {}", det.wingspan, s.r_wv, s.stage)?;
        }
        Some(ac) => writeln!(out, "stage inputs: aircraft bin {ac}, this bin is not behind it")?,
        None => writeln!(out, "stage inputs: no aircraft in frame")?,
    }
    let notched = notch_clutter(&p.map.rows[bin], det.notch_half_width);
    match jem_comb_estimate(&notched, 3) {
        Some(c) => {
            writeln!(out, "jem: body {:.3} m/s spacing {:.3} m/s lines {} confidence {:.2}", c.body_velocity, c.stage1_spacing, c.stage1_lines.len(), c.confidence)?;
            if let Some(s2) = &c.stage2 {
                writeln!(out, "jem stage 2: spacing {:.3} m/s offset {:.3} m/s lines {}", s2.spacing, s2.offset, s2.lines.len())?;
            }
            let v_ua = cfg.unambiguous_velocity();
            writeln!(out, "fold check: body {:.3} m/s lies in [-{v_ua:.2}, {v_ua:.2})", fold_velocity(c.body_velocity, v_ua)?)?;
        }
        None => writeln!(out, "jem: none")?,
    }
    let slope_of = |b: usize| micro_doppler_spectrogram(&f.bin_f64(b), &cfg, SLOPE_WIN_LEN, SLOPE_HOP, Window::Hann);
    match slope_sign_classify(&slope_of(bin)?, &SlopeConfig::default()) {
        Ok(s) => writeln!(out, "slope: {} ({:+.3} cells/CPI, {} ridges)", s.sign, s.slope_cells, s.ridges.len())?,
        Err(e) => writeln!(out, "slope: {e}")?,
    }
    // single bins are noisy; pool the neighbouring wake bins
    let lo = bin.saturating_sub(slope_bins);
    let hi = (bin + slope_bins).min(f.n_bins - 1);
    let pooled: Vec<usize> = (lo..=hi)
        .filter(|&b| p.scan.detections[b].class == DetectionClass::Wake)
        .collect();
    if !pooled.is_empty() {
        let sgs = pooled.iter().map(|&b| slope_of(b)).collect::<Result<Vec<_>>>()?;
        match slope_sign_classify_pooled(&sgs, &SlopeConfig::default()) {
            Ok(s) => writeln!(out, "slope over {} wake bins in {lo}-{hi}: {} ({:+.3} cells/CPI)", pooled.len(), s.sign, s.slope_cells)?,
            Err(e) => writeln!(out, "slope over wake bins in {lo}-{hi}: {e}")?,
        }
    }
    let sg = micro_doppler_spectrogram(&f.bin_f64(bin), &cfg, DEFAULT_WIN_LEN, DEFAULT_HOP, Window::Hann)?;
    if let Some(path) = spectrogram {
        io::render_spectrogram(&sg, &RenderOptions::default(), path)?;
        writeln!(out, "spectrogram written to {}", path.display())?;
    }
    Ok(())
}
