//! Experiment-level procedures: spectral scaling, thinning, homometry and
//! block entropy.

use std::collections::HashMap;
use std::hash::Hash;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autocorrelation::{autocorrelation, compare_autocorrelations, Displacement, Normalization};
use crate::diffraction::{
    detect_peaks, exponential_sums, intensity_scan, prefix_sums, BraggPeak, BraggPeakList, Estimator, KGrid,
};
use crate::error::{Error, Result};
use crate::generators::{bernoulli_thin, GeneratorSpec};
use crate::geometry::AveragingRegion;
use crate::numeric::linear_fit;
use crate::pointset::WeightedPointSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }
}

/// Advisory spectral label for a scaling exponent.
pub fn scaling_label(beta: f64) -> &'static str {
    if (0.85..=1.1).contains(&beta) {
        "pp-like"
    } else if (-0.15..=0.15).contains(&beta) {
        "ac-like"
    } else {
        "sc-like"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub generator: String,
    pub k_probe: Vec<f64>,
    pub sizes: Vec<usize>,
    /// `P_N(k) = |Σ_{i<N} w_i e^{−2πi k·x_i}|² / N` per size.
    pub values: Vec<f64>,
    /// Sizes left out of the fit because `P_N` vanished.
    pub excluded: Vec<usize>,
    pub beta: f64,
    pub intercept: f64,
    /// Residual sum of squares of the log-log fit.
    pub residual: f64,
    pub label: String,
}

/// Fits `log P_N(k) = β log N + c` over the first `N` points of the
/// generator for each size.
pub fn scaling_exponent(generator: &GeneratorSpec, k_probe: &[f64], sizes: &[usize]) -> Result<ScalingReport> {
    if sizes.len() < 4 {
        return Err(Error::TooFew { what: "sizes", needed: 4, got: sizes.len() });
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] == 0 {
        return Err(Error::InvalidParameter("sizes must be positive and strictly increasing".into()));
    }
    let set = generator.prefix(*sizes.last().unwrap())?;
    let sums = prefix_sums(&set, k_probe, sizes)?;
    let values: Vec<f64> = sums.iter().zip(sizes).map(|(s, &n)| s.norm_sqr() / n as f64).collect();
    let (mut lx, mut ly, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
    for (&n, &v) in sizes.iter().zip(&values) {
        if v > 0.0 {
            lx.push((n as f64).ln());
            ly.push(v.ln());
        } else {
            excluded.push(n);
        }
    }
    if lx.len() < 2 {
        return Err(Error::TooFew { what: "sizes with nonzero P_N", needed: 2, got: lx.len() });
    }
    let (beta, intercept, residual) = linear_fit(&lx, &ly);
    Ok(ScalingReport {
        generator: generator.name(),
        k_probe: k_probe.to_vec(),
        sizes: sizes.to_vec(),
        values,
        excluded,
        beta,
        intercept,
        residual,
        label: scaling_label(beta).to_string(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinningTolerances {
    /// Allowed `|mean ratio − p²|` per peak.
    pub ratio_abs: f64,
    /// Allowed relative change of `I_j / I_0` between full and thinned sets.
    pub relative: f64,
    /// Allowed relative deviation of the diffuse background from
    /// `p(1−p)·dens`.
    pub background_rel: f64,
}

impl Default for ThinningTolerances {
    fn default() -> Self {
        ThinningTolerances { ratio_abs: 0.05, relative: 0.10, background_rel: 0.20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinningReport {
    pub p: f64,
    pub seeds: Vec<u64>,
    pub density: f64,
    pub peaks: Vec<BraggPeak>,
    /// Thinned over full `|A_r(k)|²`, one row per seed.
    pub ratios: Vec<Vec<f64>>,
    pub ratio_mean: Vec<f64>,
    pub ratio_sd: Vec<f64>,
    /// `I_j / I_0` on the full set and (seed mean) on thinned sets.
    pub relative_full: Vec<f64>,
    pub relative_thinned: Vec<f64>,
    pub relative_max_change: f64,
    pub background_k: Vec<f64>,
    /// Mean thinned periodogram over the background window.
    pub background_raw_mean: f64,
    pub background_raw_sd: f64,
    /// Mean of `P_thin − p²·P_full` over the window: the thinned
    /// periodogram with the scaled leakage of the full set removed.
    pub background_diffuse_mean: f64,
    pub background_diffuse_sd: f64,
    pub predicted_ratio: f64,
    pub predicted_background: f64,
    pub tolerances: ThinningTolerances,
    pub verdict: Verdict,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// `samples` evenly spread wave vectors in `[lo, hi)` at distance at least
/// `min_dist` from every excluded position (one-dimensional).
pub fn background_window(exclude: &[f64], lo: f64, hi: f64, samples: usize, min_dist: f64) -> Result<KGrid> {
    let mut cuts: Vec<(f64, f64)> = exclude.iter().map(|&k| (k - min_dist - 1e-12, k + min_dist + 1e-12)).collect();
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut allowed = Vec::new();
    let mut start = lo;
    for (a, b) in cuts {
        if a > start {
            allowed.push((start, a.min(hi)));
        }
        start = start.max(b);
        if start >= hi {
            break;
        }
    }
    if start < hi {
        allowed.push((start, hi));
    }
    allowed.retain(|(a, b)| b > a);
    let total: f64 = allowed.iter().map(|(a, b)| b - a).sum();
    if samples == 0 || total <= 0.0 {
        return Err(Error::InvalidParameter("background window is empty".into()));
    }
    let mut points = Vec::with_capacity(samples);
    let mut seg = 0usize;
    let mut before = 0.0;
    for i in 0..samples {
        let t = (i as f64 + 0.5) * total / samples as f64;
        while t - before >= allowed[seg].1 - allowed[seg].0 && seg + 1 < allowed.len() {
            before += allowed[seg].1 - allowed[seg].0;
            seg += 1;
        }
        points.push(vec![allowed[seg].0 + (t - before)]);
    }
    KGrid::from_points(points)
}

/// Thins `set` independently for each seed and compares intensities at the
/// given peaks and the diffuse level over the background window against
/// the `p²` and `p(1−p)·dens` laws.
pub fn thinning_experiment(
    set: &WeightedPointSet,
    p: f64,
    seeds: &[u64],
    peaks: &[BraggPeak],
    background: &KGrid,
    tolerances: ThinningTolerances,
) -> Result<ThinningReport> {
    if seeds.len() < 3 {
        return Err(Error::TooFew { what: "seeds", needed: 3, got: seeds.len() });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if set.weights().iter().any(|w| *w != Complex64::new(1.0, 0.0)) {
        return Err(Error::InvalidParameter("thinning needs a weight-1 set".into()));
    }
    if peaks.is_empty() {
        return Err(Error::InvalidParameter("no peaks to track".into()));
    }
    let region = set.region().clone();
    let vol = region.volume();
    let peak_grid = KGrid::from_points(peaks.iter().map(|pk| pk.k.clone()).collect())?;
    let amp2 = |s: &WeightedPointSet| -> Result<Vec<f64>> {
        Ok(exponential_sums(s, &region, &peak_grid)?.iter().map(|a| a.norm_sqr() / (vol * vol)).collect())
    };
    let pgram = |s: &WeightedPointSet| -> Result<Vec<f64>> {
        Ok(exponential_sums(s, &region, background)?.iter().map(|a| a.norm_sqr() / vol).collect())
    };
    let full_peaks = amp2(set)?;
    let full_bg = pgram(set)?;
    if let Some(j) = full_peaks.iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter(format!("peak {j} has zero intensity on the full set")));
    }

    struct SeedResult {
        ratios: Vec<f64>,
        relative: Vec<f64>,
        raw: f64,
        diffuse: f64,
    }
    let per_seed: Vec<SeedResult> = seeds
        .par_iter()
        .map(|&seed| -> Result<SeedResult> {
            let thin = bernoulli_thin(set, p, seed)?;
            let tp = amp2(&thin)?;
            let tb = pgram(&thin)?;
            let ratios: Vec<f64> = tp.iter().zip(&full_peaks).map(|(t, f)| t / f).collect();
            let relative: Vec<f64> = tp.iter().map(|t| t / tp[0]).collect();
            let m = tb.len() as f64;
            let raw = tb.iter().sum::<f64>() / m;
            let diffuse = tb.iter().zip(&full_bg).map(|(t, f)| t - p * p * f).sum::<f64>() / m;
            Ok(SeedResult { ratios, relative, raw, diffuse })
        })
        .collect::<Result<_>>()?;

    let npk = peaks.len();
    let column = |f: &dyn Fn(&SeedResult) -> f64| -> Vec<f64> { per_seed.iter().map(f).collect() };
    let (ratio_mean, ratio_sd): (Vec<f64>, Vec<f64>) = (0..npk).map(|j| mean_sd(&column(&|r| r.ratios[j]))).unzip();
    let relative_full: Vec<f64> = full_peaks.iter().map(|f| f / full_peaks[0]).collect();
    let relative_thinned: Vec<f64> = (0..npk).map(|j| mean_sd(&column(&|r| r.relative[j])).0).collect();
    let relative_max_change =
        relative_thinned.iter().zip(&relative_full).map(|(t, f)| (t / f - 1.0).abs()).fold(0.0, f64::max);
    let (raw_mean, raw_sd) = mean_sd(&column(&|r| r.raw));
    let (diffuse_mean, diffuse_sd) = mean_sd(&column(&|r| r.diffuse));

    let density = set.density();
    let predicted_ratio = p * p;
    let predicted_background = p * (1.0 - p) * density;
    let ratios_ok = ratio_mean.iter().all(|m| (m - predicted_ratio).abs() <= tolerances.ratio_abs);
    let relative_ok = relative_max_change <= tolerances.relative;
    let background_ok =
        (diffuse_mean - predicted_background).abs() <= tolerances.background_rel * predicted_background + 1e-12;

    Ok(ThinningReport {
        p,
        seeds: seeds.to_vec(),
        density,
        peaks: peaks.to_vec(),
        ratios: per_seed.iter().map(|r| r.ratios.clone()).collect(),
        ratio_mean,
        ratio_sd,
        relative_full,
        relative_thinned,
        relative_max_change,
        background_k: background.points.clone(),
        background_raw_mean: raw_mean,
        background_raw_sd: raw_sd,
        background_diffuse_mean: diffuse_mean,
        background_diffuse_sd: diffuse_sd,
        predicted_ratio,
        predicted_background,
        tolerances,
        verdict: Verdict::from_bool(ratios_ok && relative_ok && background_ok),
    })
}

/// How the peaks and the background window of a thinning experiment are
/// chosen from the full set (one-dimensional sets).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinningProtocol {
    /// Peaks are searched on `[0, peak_k_max]`.
    pub peak_k_max: f64,
    /// Grid intervals per unit of k; default `2L` for a region of length
    /// `L` (half the natural peak width). Lattice sets are sampled in dual
    /// coordinates instead, by default with denominator equal to the number
    /// of lattice cells across the region, which puts every off-peak sample
    /// on a zero of the finite-size sidelobes.
    pub peak_steps: Option<usize>,
    /// Number of strongest peaks with `|k| ≥ min_peak_k` to track.
    pub top: usize,
    pub min_peak_k: f64,
    /// Every detected peak at or above this intensity is excluded from the
    /// background window.
    pub exclude_threshold: f64,
    pub bg_lo: f64,
    pub bg_hi: f64,
    pub bg_samples: usize,
    pub bg_min_dist: f64,
}

impl Default for ThinningProtocol {
    fn default() -> Self {
        ThinningProtocol {
            peak_k_max: 2.0,
            peak_steps: None,
            top: 3,
            min_peak_k: 0.05,
            exclude_threshold: 1e-3,
            bg_lo: 0.0,
            bg_hi: 1.0,
            bg_samples: 200,
            bg_min_dist: 0.05,
        }
    }
}

/// Detects peaks on the full set, picks the tracked ones and the background
/// window, then runs [`thinning_experiment`]. Returns the report and every
/// peak detected on the full set.
pub fn run_thinning_protocol(
    set: &WeightedPointSet,
    p: f64,
    seeds: &[u64],
    protocol: &ThinningProtocol,
    tolerances: ThinningTolerances,
) -> Result<(ThinningReport, BraggPeakList)> {
    if set.dim() != 1 {
        return Err(Error::InvalidParameter("the thinning protocol handles one-dimensional sets".into()));
    }
    if !(protocol.peak_k_max > 0.0) {
        return Err(Error::InvalidParameter("peak_k_max must be positive".into()));
    }
    let region = set.region();
    let grid = match set.lattice() {
        Some(lattice) => {
            let cells = (region.volume() / lattice.det().abs()).round().max(1.0) as u64;
            let m = protocol.peak_steps.map_or(cells, |s| s as u64);
            let hi = (protocol.peak_k_max * lattice.det().abs() * m as f64).round() as i64 + 1;
            KGrid::dual_rational(lattice, m, &[0], &[hi])?
        }
        None => {
            let per_unit = protocol.peak_steps.map_or(2.0 * region.volume(), |s| s as f64);
            let steps = (per_unit * protocol.peak_k_max).ceil() as usize;
            KGrid::linspace(0.0, protocol.peak_k_max, steps + 1)?
        }
    };
    let scan = intensity_scan(set, region, &grid, Estimator::AmplitudeSquared)?;
    let all = detect_peaks(&scan, protocol.exclude_threshold, Some((set, region)))?;
    let tracked: Vec<BraggPeak> = all.nonzero(protocol.min_peak_k).into_iter().take(protocol.top).cloned().collect();
    if tracked.is_empty() {
        return Err(Error::InvalidParameter(format!("no peak above {} away from k = 0", protocol.exclude_threshold)));
    }
    let exclude: Vec<f64> = all.peaks.iter().map(|pk| pk.k[0]).collect();
    let window =
        background_window(&exclude, protocol.bg_lo, protocol.bg_hi, protocol.bg_samples, protocol.bg_min_dist)?;
    let report = thinning_experiment(set, p, seeds, &tracked, &window, tolerances)?;
    Ok((report, all))
}

pub const HOMOMETRY_TOLERANCE: f64 = 0.03;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomometryRow {
    pub z: Displacement,
    pub eta_a: Complex64,
    pub eta_b: Complex64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomometryReport {
    pub n_a: usize,
    pub n_b: usize,
    pub region: AveragingRegion,
    pub z_max: f64,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub rows: Vec<HomometryRow>,
    /// `HOMOMETRIC-AT-SCALE` or `NOT-HOMOMETRIC-AT-SCALE`; a statement
    /// about this finite region only.
    pub verdict: String,
}

impl HomometryReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Boundary-corrected autocorrelations of both sets on `region`, compared
/// over the union of their displacements.
pub fn homometry_report(
    a: &WeightedPointSet,
    b: &WeightedPointSet,
    region: &AveragingRegion,
    z_max: f64,
    tolerance: f64,
) -> Result<HomometryReport> {
    let ea = autocorrelation(a, region, z_max, Normalization::BoundaryCorrected)?;
    let eb = autocorrelation(b, region, z_max, Normalization::BoundaryCorrected)?;
    let max_deviation = compare_autocorrelations(&ea, &eb)?;
    let keys: std::collections::BTreeSet<&Displacement> =
        ea.coefficients.keys().chain(eb.coefficients.keys()).collect();
    let rows = keys
        .into_iter()
        .map(|z| {
            let (x, y) = (ea.coefficient(z), eb.coefficient(z));
            HomometryRow { z: z.clone(), eta_a: x, eta_b: y, deviation: (x - y).norm() }
        })
        .collect();
    let verdict = if max_deviation <= tolerance { "HOMOMETRIC-AT-SCALE" } else { "NOT-HOMOMETRIC-AT-SCALE" };
    Ok(HomometryReport {
        n_a: ea.n_points,
        n_b: eb.n_points,
        region: region.clone(),
        z_max,
        tolerance,
        max_deviation,
        rows,
        verdict: verdict.to_string(),
    })
}

/// Block entropy per symbol, in bits, of the overlapping length-`len`
/// blocks of `symbols`, with the Miller–Madow correction
/// `(K − 1) / (2M ln 2)` for `K` observed blocks out of `M`.
pub fn block_entropy<T: Hash + Eq + Clone>(symbols: &[T], len: usize) -> Result<f64> {
    if len == 0 || symbols.len() < len {
        return Err(Error::InvalidParameter(format!("block length {len} for a sequence of length {}", symbols.len())));
    }
    let mut counts: HashMap<&[T], usize> = HashMap::new();
    for w in symbols.windows(len) {
        *counts.entry(w).or_default() += 1;
    }
    let m = (symbols.len() - len + 1) as f64;
    let mut values: Vec<usize> = counts.values().copied().collect();
    values.sort_unstable();
    let plug_in: f64 = values
        .iter()
        .map(|&c| {
            let q = c as f64 / m;
            -q * q.log2()
        })
        .sum();
    let correction = (counts.len() as f64 - 1.0) / (2.0 * m * std::f64::consts::LN_2);
    Ok((plug_in + correction) / len as f64)
}

/// Symbols `+1 / −1` from the signs of real weights.
pub fn sign_symbols(weights: &[Complex64]) -> Vec<i8> {
    weights.iter().map(|w| if w.re >= 0.0 { 1 } else { -1 }).collect()
}
