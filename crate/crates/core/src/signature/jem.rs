//! Jet-engine modulation comb estimation.
//!
//! A comb is a lattice `anchor + k·spacing` folded into the measurable
//! velocity interval. Peaks are matched to lattice sites within a tolerance
//! given in spectral cells.

use serde::{Deserialize, Serialize};

use crate::detect::{spectral_peaks, DopplerPeak};
use crate::dsp::DopplerSpectrum;

/// Floor for JEM candidate peaks, dB above the mean spectral amplitude.
const PEAK_FLOOR_DB: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JemConfig {
    pub min_lines: usize,
    /// Match tolerance in velocity cells.
    pub tolerance_cells: f64,
    /// Spacings below this are not considered, m/s.
    pub min_spacing: f64,
    /// Candidate peaks must exceed this fraction of the strongest peak.
    pub min_relative_amplitude: f64,
    /// Peaks weaker than this fraction of a stronger neighbour within
    /// `sidelobe_cells` are treated as leakage.
    pub sidelobe_ratio: f64,
    pub sidelobe_cells: usize,
    pub max_peaks: usize,
}

impl Default for JemConfig {
    fn default() -> Self {
        Self {
            min_lines: 4,
            tolerance_cells: 0.5,
            min_spacing: 5.0,
            min_relative_amplitude: 0.04,
            sidelobe_ratio: 0.3,
            sidelobe_cells: 6,
            max_peaks: 48,
        }
    }
}

/// Second blade-stage comb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondComb {
    pub spacing: f64,
    /// Lattice offset from the body line, reduced into `[-spacing/2, spacing/2)`.
    pub offset: f64,
    pub lines: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JemComb {
    pub body_velocity: f64,
    pub stage1_spacing: f64,
    /// Measured velocities of the first-stage lines, body included.
    pub stage1_lines: Vec<f64>,
    pub stage2: Option<SecondComb>,
    /// Fraction of candidate peak amplitude explained by the combs.
    pub confidence: f64,
}

impl JemComb {
    pub fn stage2_spacing(&self) -> Option<f64> {
        self.stage2.as_ref().map(|c| c.spacing)
    }

    pub fn stage2_offset(&self) -> Option<f64> {
        self.stage2.as_ref().map(|c| c.offset)
    }
}

/// Estimates up to two JEM combs with the default tolerances.
pub fn jem_comb_estimate(spectrum: &DopplerSpectrum, min_lines: usize) -> Option<JemComb> {
    jem_comb_estimate_with(
        spectrum,
        &JemConfig {
            min_lines,
            ..JemConfig::default()
        },
    )
}

pub fn jem_comb_estimate_with(spectrum: &DopplerSpectrum, config: &JemConfig) -> Option<JemComb> {
    let res = spectrum.resolution();
    if spectrum.len() < 4 || res <= 0.0 {
        return None;
    }
    let period = res * spectrum.len() as f64;
    let peaks = candidate_peaks(spectrum, config);
    if peaks.len() < config.min_lines.max(3) {
        return None;
    }
    let lat = Lattice {
        period,
        tol: config.tolerance_cells * res,
        coarse_tol: 2.0 * res,
        min_spacing: config.min_spacing,
    };

    let body = peaks[0];
    let all: Vec<usize> = (0..peaks.len()).collect();
    let first = lat.best_comb(&peaks, 0, &all, &[])?;
    if first.members.len() < config.min_lines.max(3) {
        return None;
    }

    let rest: Vec<usize> = all
        .iter()
        .copied()
        .filter(|i| !first.members.iter().any(|&(_, m)| m == *i))
        .collect();
    let mut second: Option<Fit> = None;
    for &anchor in rest.iter().take(6) {
        if let Some(fit) = lat.best_comb(&peaks, anchor, &rest, &[first.spacing]) {
            if fit.members.len() >= config.min_lines.max(3)
                && second.as_ref().is_none_or(|s| fit.better_than(s))
            {
                second = Some(fit);
            }
        }
    }

    let amp = |fit: &Fit| fit.members.iter().map(|&(_, i)| peaks[i].amplitude).sum::<f64>();
    let total: f64 = peaks.iter().map(|p| p.amplitude).sum();
    let explained = amp(&first) + second.as_ref().map_or(0.0, amp);
    let lines_of = |fit: &Fit| {
        let mut v: Vec<(i64, f64)> = fit.members.iter().map(|&(k, i)| (k, peaks[i].velocity)).collect();
        v.sort_by_key(|&(k, _)| k);
        v.into_iter().map(|(_, v)| v).collect::<Vec<_>>()
    };
    let stage2 = second.map(|fit| {
        let raw = lat.wrap(fit.origin - first.origin);
        let offset = raw - fit.spacing * (raw / fit.spacing + 0.5).floor();
        SecondComb {
            spacing: fit.spacing,
            offset,
            lines: lines_of(&fit),
        }
    });
    Some(JemComb {
        body_velocity: body.velocity,
        stage1_spacing: first.spacing,
        stage1_lines: lines_of(&first),
        stage2,
        confidence: if total > 0.0 { (explained / total).clamp(0.0, 1.0) } else { 0.0 },
    })
}

/// Strong peaks with rectangular-window leakage removed, strongest first.
fn candidate_peaks(spectrum: &DopplerSpectrum, config: &JemConfig) -> Vec<DopplerPeak> {
    let floor = spectrum.mean_amplitude() * 10f64.powf(PEAK_FLOOR_DB / 10.0);
    let raw = spectral_peaks(spectrum, 0.0, floor);
    let Some(top) = raw.first().map(|p| p.amplitude) else {
        return Vec::new();
    };
    let mut kept: Vec<DopplerPeak> = Vec::new();
    for p in raw {
        if p.amplitude < config.min_relative_amplitude * top {
            break;
        }
        let leak = kept.iter().any(|q| {
            q.index.abs_diff(p.index) <= config.sidelobe_cells
                && p.amplitude < config.sidelobe_ratio * q.amplitude
        });
        if !leak {
            kept.push(p);
        }
        if kept.len() >= config.max_peaks {
            break;
        }
    }
    kept
}

#[derive(Debug, Clone)]
struct Fit {
    origin: f64,
    spacing: f64,
    /// (lattice index, peak index)
    members: Vec<(i64, usize)>,
    amplitude: f64,
}

impl Fit {
    fn better_than(&self, other: &Fit) -> bool {
        if self.members.len() != other.members.len() {
            return self.members.len() > other.members.len();
        }
        if (self.amplitude - other.amplitude).abs() > 1e-9 * self.amplitude.max(other.amplitude) {
            return self.amplitude > other.amplitude;
        }
        self.spacing > other.spacing
    }
}

struct Lattice {
    period: f64,
    tol: f64,
    coarse_tol: f64,
    min_spacing: f64,
}

impl Lattice {
    fn wrap(&self, d: f64) -> f64 {
        d - self.period * (d / self.period + 0.5).floor()
    }

    /// Best lattice through `peaks[anchor]` using the peaks in `pool`.
    fn best_comb(
        &self,
        peaks: &[DopplerPeak],
        anchor: usize,
        pool: &[usize],
        extra_spacings: &[f64],
    ) -> Option<Fit> {
        let a = peaks[anchor].velocity;
        let mut spacings: Vec<f64> = extra_spacings.to_vec();
        for &q in pool {
            if q == anchor {
                continue;
            }
            let d = self.wrap(peaks[q].velocity - a).abs();
            for m in 1..=4 {
                spacings.push(d / m as f64);
            }
        }
        let mut best: Option<Fit> = None;
        for s in spacings {
            if s < self.min_spacing || s > self.period / 2.0 {
                continue;
            }
            let Some(fit) = self.fit(peaks, anchor, pool, a, s) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| fit.better_than(b)) {
                best = Some(fit);
            }
        }
        best
    }

    fn fit(&self, peaks: &[DopplerPeak], anchor: usize, pool: &[usize], a: f64, s: f64) -> Option<Fit> {
        let mut origin = a;
        let mut spacing = s;
        let mut members = self.assign(peaks, anchor, pool, origin, spacing, self.coarse_tol);
        for _ in 0..3 {
            if members.len() < 2 {
                return None;
            }
            (origin, spacing) = self.refine(peaks, &members, origin, spacing);
            if spacing < self.min_spacing {
                return None;
            }
            members = self.assign(peaks, anchor, pool, origin, spacing, self.tol);
        }
        let amplitude = members.iter().map(|&(_, i)| peaks[i].amplitude).sum();
        Some(Fit {
            origin,
            spacing,
            members,
            amplitude,
        })
    }

    /// Matches lattice sites to peaks, nearest first, each peak used once.
    fn assign(
        &self,
        peaks: &[DopplerPeak],
        anchor: usize,
        pool: &[usize],
        origin: f64,
        spacing: f64,
        tol: f64,
    ) -> Vec<(i64, usize)> {
        let k_max = ((self.period / (2.0 * spacing)).ceil() as i64 - 1).max(0);
        let mut members = vec![(0i64, anchor)];
        let mut used = vec![anchor];
        let mut ks: Vec<i64> = (1..=k_max).flat_map(|k| [-k, k]).collect();
        ks.sort_by_key(|k| k.abs());
        for k in ks {
            let site = origin + k as f64 * spacing;
            let best = pool
                .iter()
                .copied()
                .filter(|i| !used.contains(i))
                .map(|i| (i, self.wrap(peaks[i].velocity - site).abs()))
                .filter(|&(_, d)| d <= tol)
                .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
            if let Some((i, _)) = best {
                members.push((k, i));
                used.push(i);
            }
        }
        members
    }

    /// Least-squares origin and spacing on unfolded member positions.
    fn refine(&self, peaks: &[DopplerPeak], members: &[(i64, usize)], origin: f64, spacing: f64) -> (f64, f64) {
        let pts: Vec<(f64, f64)> = members
            .iter()
            .map(|&(k, i)| {
                let site = origin + k as f64 * spacing;
                (k as f64, site + self.wrap(peaks[i].velocity - site))
            })
            .collect();
        let n = pts.len() as f64;
        let mk = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mk).powi(2)).sum();
        if sxx == 0.0 {
            return (origin, spacing);
        }
        let sxy: f64 = pts.iter().map(|p| (p.0 - mk) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        (my - slope * mk, slope)
    }
}
