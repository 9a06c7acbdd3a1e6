//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! runtime; the process fails if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wakeradar::detect::{dscr, DetectionClass, DetectorConfig};
use wakeradar::dsp::{micro_doppler_spectrogram, DopplerSpectrum, Spectrogram, Window};
use wakeradar::params::{
    detection_range, fold_velocity, index_of_velocity, range_resolution, velocity_axis_value,
    velocity_resolution, LinkBudgetQuery, RadarConfig,
};
use wakeradar::pipeline::{process_frame, run_scene};
use wakeradar::signature::{
    jem_comb_estimate, slope_sign_classify_pooled, stage_from_distance, SlopeConfig, SlopeSign, WakeStage,
    SLOPE_HOP, SLOPE_WIN_LEN,
};
use wakeradar::sim::aircraft::{aircraft_pulse_series, AircraftSpec};
use wakeradar::sim::{
    complex_noise, component_power_for_snr, synthesize_frame, ClutterSpec, Scenario, WakeSegmentSpec,
};
use wakeradar::tracker::{Track, TrackerConfig};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn run(id: u32, name: &str, limit_s: f64, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .unwrap_or_else(|_| outcome(false, "panicked"));
    let elapsed = start.elapsed().as_secs_f64();
    let passed = result.passed && elapsed < limit_s;
    println!(
        "criterion {id:>2} {name}: {} ({}; {elapsed:.2} s, limit {limit_s} s)",
        if passed { "PASS" } else { "FAIL" },
        result.detail
    );
    passed
}

fn main() {
    let results = [
        run(1, "derived parameters", 1.0, derived_parameters),
        run(2, "range scaling", 1.0, range_scaling),
        run(3, "dscr properties", 5.0, dscr_properties),
        run(4, "fold oracle", 1.0, fold_oracle),
        run(5, "snr/dscr gap", 30.0, gap_reproduction),
        run(6, "stage boundaries", 1.0, stage_boundaries),
        run(7, "jem comb recovery", 20.0, jem_recovery),
        run(8, "slope sign", 60.0, slope_sign),
        run(9, "tracker geometry", 60.0, tracker_geometry),
        run(10, "determinism and throughput", f64::INFINITY, determinism_and_throughput),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn derived_parameters() -> Outcome {
    let r5 = range_resolution(5.0e6).unwrap();
    let r375 = range_resolution(3.75e6).unwrap();
    let vres = velocity_resolution(&RadarConfig::reference()).unwrap();
    let ok = ((r5 - 30.0) / 30.0).abs() < 0.002
        && ((r375 - 40.0) / 40.0).abs() < 0.002
        && (vres - 0.083).abs() < 0.001;
    outcome(ok, format!("{r5:.3} m, {r375:.3} m, {vres:.4} m/s"))
}

fn range_scaling() -> Outcome {
    let base = RadarConfig::reference();
    let boosted = RadarConfig {
        peak_power: base.peak_power * 16.0,
        ..base
    };
    let q = LinkBudgetQuery::new(1.0, 10f64.powf(1.3));
    let r0 = detection_range(&base, &q).unwrap();
    let r1 = detection_range(&boosted, &q).unwrap();
    let rel = (r1 / r0 - 2.0).abs() / 2.0;
    outcome(rel < 1e-12, format!("{:.1} m -> {:.1} m, rel err {rel:.1e}", r0, r1))
}

fn spectrum(amplitudes: Vec<f64>) -> DopplerSpectrum {
    let n = amplitudes.len();
    DopplerSpectrum {
        velocity_axis: (0..n).map(|i| velocity_axis_value(i, n, 0.083)).collect(),
        notch_mask: vec![false; n],
        bin_index: 0,
        amplitudes,
    }
}

fn dscr_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_scale = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(4..=512);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let d = rng.random_range(0..n);
        let k = 10f64.powf(rng.random_range(-6.0..6.0));
        let s = spectrum(a.clone());
        let scaled = spectrum(a.iter().map(|x| x * k).collect());
        let base = dscr(&s, d).unwrap();
        worst_scale = worst_scale.max((dscr(&scaled, d).unwrap() - base).abs());
        // the ratio of the chosen cell to the arithmetic mean, summed naively
        let mut total = 0.0;
        for x in &a {
            total += x;
        }
        let oracle = 10.0 * (a[d] * n as f64 / total).log10();
        worst_oracle = worst_oracle.max((oracle - base).abs());
    }
    let flat = dscr(&spectrum(vec![2.5; 64]), 17).unwrap();
    let case = dscr(&spectrum(vec![1.0, 1.0, 1.0, 9.0]), 3).unwrap();
    let ok = worst_scale < 1e-12
        && worst_oracle < 1e-9
        && flat.abs() < 1e-12
        && (case - 4.771).abs() < 1e-3
        && (case - 10.0 * 3f64.log10()).abs() < 1e-9;
    outcome(
        ok,
        format!("scale {worst_scale:.1e} dB, oracle {worst_oracle:.1e} dB, flat {flat}, [1,1,1,9] {case:.6} dB"),
    )
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Nearest f64 to `r`, ties to even.
fn round_to_f64(r: &BigRational) -> f64 {
    let guess = r.to_f64().unwrap();
    let mut best = guess;
    let mut best_err = (exact(guess) - r).abs();
    for c in [guess.next_down(), guess.next_up()] {
        let err = (exact(c) - r).abs();
        if err < best_err || (err == best_err && c.to_bits() & 1 == 0) {
            best = c;
            best_err = err;
        }
    }
    best
}

/// Adds or subtracts 2·v_ua until the value lies in [-v_ua, v_ua), in exact
/// arithmetic, then rounds once.
fn fold_oracle_value(v: f64, v_ua: f64) -> f64 {
    let half = exact(v_ua);
    let period = &half * BigRational::from_integer(BigInt::from(2));
    let mut r = exact(v);
    while r >= half {
        r -= &period;
    }
    while r < -&half {
        r += &period;
    }
    round_to_f64(&r)
}

fn fold_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for i in 0..10_000 {
        let v_ua = rng.random_range(0.5..200.0);
        let v = match i % 4 {
            // near an interval edge
            0 => {
                let k = rng.random_range(-6i32..=6) as f64;
                (2.0 * k + 1.0) * v_ua + rng.random_range(-1e-9..1e-9)
            }
            _ => rng.random_range(-12.0..12.0) * v_ua,
        };
        if fold_velocity(v, v_ua).unwrap().to_bits() != fold_oracle_value(v, v_ua).to_bits() {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches in 10000 pairs"))
}

fn gap_reproduction() -> Outcome {
    let scenario = Scenario::reference(2024);
    let frames = run_scene(&scenario, &DetectorConfig::default()).unwrap();
    let cfg = scenario.radar;
    let folded = fold_velocity(-140.1, cfg.unambiguous_velocity()).unwrap();
    let n = cfg.n_pulses;
    let expected_velocity = velocity_axis_value(
        index_of_velocity(folded, n, cfg.velocity_resolution()),
        n,
        cfg.velocity_resolution(),
    );

    let (mut ac_snr, mut ac_dscr, mut ac_ok) = (Vec::new(), Vec::new(), true);
    let (mut wake_snr, mut wake_dscr) = (Vec::new(), Vec::new());
    let (mut wake_truth, mut wake_hit, mut wake_in_band) = (0usize, 0usize, true);
    for f in &frames {
        match f.scan.aircraft() {
            Some(a) if Some(a.bin_index) == f.truth_aircraft_bin => {
                ac_snr.push(a.snr_db);
                ac_dscr.push(a.dscr_db);
                ac_ok &= a.dominant_velocity == expected_velocity;
            }
            _ => ac_ok = false,
        }
        for &b in &f.truth_wake_bins {
            wake_truth += 1;
            let d = &f.scan.detections[b];
            if d.class == DetectionClass::Wake {
                wake_hit += 1;
                wake_snr.push(d.snr_db);
                wake_dscr.push(d.dscr_db);
                wake_in_band &= (2.0..=12.0).contains(&d.dominant_velocity.abs());
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let snr_gap = mean(&ac_snr) - mean(&wake_snr);
    let dscr_gap = mean(&ac_dscr) - mean(&wake_dscr);
    let recall = wake_hit as f64 / wake_truth.max(1) as f64;
    let ok = ac_ok
        && frames.len() == 10
        && (snr_gap - 10.0).abs() <= 2.0
        && (dscr_gap - 4.4).abs() <= 2.0
        && wake_in_band
        && recall >= 0.9;
    outcome(
        ok,
        format!(
            "aircraft {:.2} dB / {:.2} dB at {expected_velocity:.4} m/s, snr gap {snr_gap:.2} dB, dscr gap {dscr_gap:.2} dB, wake recall {:.3}",
            mean(&ac_snr),
            mean(&ac_dscr),
            recall
        ),
    )
}

fn stage_boundaries() -> Outcome {
    let b = 34.32;
    let stage = |x: f64| stage_from_distance(x, b).unwrap().stage;
    let cases = [
        (1.0, WakeStage::Young, WakeStage::Mature),
        (10.0, WakeStage::Mature, WakeStage::Old),
        (100.0, WakeStage::Old, WakeStage::Decaying),
    ];
    let mut failures = Vec::new();
    for (k, at, above) in cases {
        let x = k * b;
        for eps in [0.0, 1e-9, 1e-6, 1e-3] {
            let below = if eps == 0.0 { x.next_down() } else { x - eps };
            let over = if eps == 0.0 { x.next_up() } else { x + eps };
            for (value, want) in [(below, at), (x, at), (over, above)] {
                if stage(value) != want {
                    failures.push(format!("{value}"));
                }
            }
        }
        if WakeStage::from_ratio(k) != at || WakeStage::from_ratio(k.next_up()) != above {
            failures.push(format!("ratio {k}"));
        }
    }
    if stage(0.0) != WakeStage::Young {
        failures.push("0".into());
    }
    outcome(failures.is_empty(), format!("{} boundary mismatches", failures.len()))
}

fn jem_recovery() -> Outcome {
    let cfg = RadarConfig::reference();
    let vres = cfg.velocity_resolution();
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spec = AircraftSpec::reference(0);
        spec.radial_velocity_true = rng.random_range(-250.0..-40.0);
        let snr_db: f64 = rng.random_range(25.0..45.0);
        let x = aircraft_pulse_series(&spec, &cfg, 1.0);
        let noise = complex_noise(&mut rng, x.len(), 10f64.powf(-snr_db / 10.0));
        let x: Vec<Complex64> = x.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let s = wakeradar::dsp::doppler_spectrum(&x, &cfg, Window::Rectangular).unwrap();
        let recovered = jem_comb_estimate(&s, 4).is_some_and(|c| {
            (c.stage1_spacing - 14.4).abs() <= vres
                && c.stage2_spacing().is_some_and(|s2| (s2 - 14.4).abs() <= vres)
                && c.stage2_offset().is_some_and(|o| (o - 2.9).abs() <= vres)
        });
        hits += recovered as usize;
    }
    outcome(hits >= 95, format!("{hits}/100 seeds within one velocity cell"))
}

/// One 40-bin (1.2 km) wake segment of a single stage, nothing else.
fn single_segment_scene(stage: WakeStage, seed: u64) -> Scenario {
    let clutter = ClutterSpec::default();
    let level = component_power_for_snr(42.0, clutter.power_ratio());
    Scenario {
        radar: RadarConfig {
            n_range_bins: 44,
            ..RadarConfig::reference()
        },
        aircraft: None,
        wake_segments: vec![WakeSegmentSpec::preset(stage, (2, 41), level)],
        ghost_segments: Vec::new(),
        clutter,
        noise_floor: 1.0,
        n_frames: 1,
        frame_interval: 0.5,
        seed,
    }
}

fn slope_sign() -> Outcome {
    let config = SlopeConfig::default();
    let mut correct = [0usize; 2];
    let mut flips = 0;
    for (k, stage) in [WakeStage::Young, WakeStage::Old].into_iter().enumerate() {
        let want = SlopeSign::for_stage(stage);
        for seed in 0..100u64 {
            let scene = single_segment_scene(stage, 10_000 + seed);
            let frame = synthesize_frame(&scene, 0).unwrap().frame;
            let sgs: Vec<Spectrogram> = (2..=41)
                .map(|b| {
                    micro_doppler_spectrogram(&frame.bin_f64(b), &scene.radar, SLOPE_WIN_LEN, SLOPE_HOP, Window::Hann)
                        .unwrap()
                })
                .collect();
            let reversed: Vec<Spectrogram> = sgs.iter().map(Spectrogram::time_reversed).collect();
            let fwd = slope_sign_classify_pooled(&sgs, &config);
            let rev = slope_sign_classify_pooled(&reversed, &config);
            if let Ok(e) = &fwd {
                correct[k] += (e.sign == want) as usize;
            }
            if let (Ok(a), Ok(b)) = (&fwd, &rev) {
                flips += (b.sign == a.sign.flipped()) as usize;
            }
        }
    }
    let ok = correct[0] >= 95 && correct[1] >= 95 && flips == 200;
    outcome(
        ok,
        format!("young {}/100, old {}/100, reversal flips {flips}/200", correct[0], correct[1]),
    )
}

fn tracker_geometry() -> Outcome {
    let scenario = Scenario::tracking(77);
    let frames = run_scene(&scenario, &DetectorConfig::default()).unwrap();
    let cfg = scenario.radar;
    let mut track = Track::new(TrackerConfig::new(cfg.range_resolution(), cfg.unambiguous_velocity()));
    let mut problems = Vec::new();
    let mut ahead_reported = 0;
    for (k, f) in frames.iter().enumerate() {
        track.update_at(&f.scan, k as f64 * scenario.frame_interval).unwrap();
        let rec = track.frames.last().unwrap();
        let Some(bin) = rec.aircraft_bin else {
            problems.push(format!("frame {k}: aircraft not associated"));
            continue;
        };
        if f.truth_ghost_bins.contains(&bin) {
            problems.push(format!("frame {k}: ghost associated"));
        }
        if let Some((lo, hi)) = rec.wake_extent {
            if hi >= bin || (lo..=hi).any(|b| f.truth_ghost_bins.contains(&b)) {
                problems.push(format!("frame {k}: wake extent {lo}-{hi} vs aircraft {bin}"));
            }
        }
        let ahead = track.ahead_report(&f.scan);
        if ahead.iter().any(|d| f.truth_ghost_bins.contains(&d.bin_index)) {
            ahead_reported += 1;
        }
    }
    let bins: Vec<usize> = track.frames.iter().filter_map(|f| f.aircraft_bin).collect();
    let steps_ok = bins.len() == 20 && bins.windows(2).all(|w| (2..=3).contains(&(w[1] as i64 - w[0] as i64)));
    if !steps_ok {
        problems.push(format!("aircraft bins {bins:?}"));
    }
    if ahead_reported != frames.len() {
        problems.push(format!("ghosts reported in {ahead_reported} frames"));
    }
    outcome(
        problems.is_empty(),
        match problems.first() {
            None => format!(
                "aircraft {} -> {}, ghosts reported in {ahead_reported}/20 frames",
                bins[0],
                bins[bins.len() - 1]
            ),
            Some(p) => p.clone(),
        },
    )
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_wakeradar"))
        .args(args)
        .status()
        .is_ok_and(|s| s.success())
}

fn simulate_and_detect(scenario: &Path, dir: &Path, tag: &str) -> Option<(Vec<u8>, Vec<u8>)> {
    let iq: PathBuf = dir.join(format!("{tag}.wviq"));
    let csv: PathBuf = dir.join(format!("{tag}.csv"));
    let (iq_s, csv_s) = (iq.to_str()?, csv.to_str()?);
    if !cli(&["simulate", scenario.to_str()?, "-o", iq_s, "--seed", "11"]) || !cli(&["detect", iq_s, "-o", csv_s])
    {
        return None;
    }
    Some((std::fs::read(&iq).ok()?, std::fs::read(&csv).ok()?))
}

fn determinism_and_throughput() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/reference.toml")).unwrap();
    let short = text.replace("n_frames = 10", "n_frames = 2");
    assert_ne!(short, text);
    let scenario = dir.path().join("short.toml");
    std::fs::write(&scenario, short).unwrap();
    let a = simulate_and_detect(&scenario, dir.path(), "a");
    let b = simulate_and_detect(&scenario, dir.path(), "b");
    let identical = matches!((&a, &b), (Some(x), Some(y)) if x == y);
    let rows = a.as_ref().map_or(0, |(_, csv)| csv.split(|&c| c == b'\n').count());

    let reference = Scenario::reference(5);
    let frame = synthesize_frame(&reference, 0).unwrap().frame;
    let start = Instant::now();
    let processed = process_frame(&frame, &reference.radar, &DetectorConfig::default(), None).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let ok = identical && rows > 2 && seconds < 1.0 && processed.scan.aircraft().is_some();
    outcome(
        ok,
        format!("outputs identical: {identical}, one 512x2048 frame in {seconds:.3} s"),
    )
}
