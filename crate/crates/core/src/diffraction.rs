//! Diffraction estimators: Bragg amplitude scans, periodograms, the
//! transform of stored autocorrelations, the closed-form crystallographic
//! intensity, peak detection and folding into a fundamental domain.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autocorrelation::{Algebra, AutocorrelationEstimate, Displacement, Normalization};
use crate::error::{Error, Result};
use crate::generators::MotifAtom;
use crate::geometry::{fold_coords, AveragingRegion, Lattice};
use crate::golden::TAU;
use crate::numeric::{phasor, phasor_table, CompensatedSum};
use crate::pointset::{Support, WeightedPointSet};

/// Intensities within this distance below zero are rounding and clamp to 0.
pub const CLAMP_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `|A_r(k)|²`, converging to Bragg intensities.
    AmplitudeSquared,
    /// `vol(A)·|A_r(k)|²`, a density estimate for continuous parts.
    Periodogram,
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude_squared" | "amplitude" => Ok(Estimator::AmplitudeSquared),
            "periodogram" => Ok(Estimator::Periodogram),
            other => Err(Error::Parse(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Rational dual coordinates `numerators / denominator` of every grid point
/// with respect to the dual basis of `lattice`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalCoords {
    pub lattice: Lattice,
    pub denominator: u64,
    /// Flat, `dim` entries per grid point.
    pub numerators: Vec<i64>,
}

/// A list of wave vectors, optionally a regular grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    pub dim: usize,
    /// Cartesian wave vectors, flat, `dim` entries per point.
    pub points: Vec<f64>,
    /// Axis lengths for regular grids, last axis fastest.
    pub shape: Option<Vec<usize>>,
    /// Grid spacing per axis, in the coordinates the grid was built in.
    pub steps: Option<Vec<f64>>,
    pub rational: Option<RationalCoords>,
}

impl KGrid {
    /// Arbitrary wave vectors, no grid structure.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
        }
        Ok(KGrid { dim, points: points.concat(), shape: None, steps: None, rational: None })
    }

    /// `n` equally spaced points from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!("linspace({lo}, {hi}, {n})")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let points = (0..n).map(|i| lo + i as f64 * step).collect();
        Ok(KGrid { dim: 1, points, shape: Some(vec![n]), steps: Some(vec![step]), rational: None })
    }

    /// `n` equally spaced points covering `[lo, hi)`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!("uniform({lo}, {hi}, {n})")));
        }
        let step = (hi - lo) / n as f64;
        let points = (0..n).map(|i| lo + i as f64 * step).collect();
        Ok(KGrid { dim: 1, points, shape: Some(vec![n]), steps: Some(vec![step]), rational: None })
    }

    /// Points with dual coordinates `i / denominator`, `lo_j ≤ i_j < hi_j`,
    /// relative to the dual basis of `lattice`.
    pub fn dual_rational(lattice: &Lattice, denominator: u64, lo: &[i64], hi: &[i64]) -> Result<Self> {
        let n = lattice.dim();
        if lo.len() != n || hi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: lo.len().min(hi.len()) });
        }
        if denominator == 0 || lo.iter().zip(hi).any(|(l, h)| h <= l) {
            return Err(Error::InvalidParameter("empty rational grid".into()));
        }
        let shape: Vec<usize> = lo.iter().zip(hi).map(|(l, h)| (h - l) as usize).collect();
        let total: usize = shape.iter().product();
        let dual = lattice.dual();
        let mut numerators = Vec::with_capacity(total * n);
        let mut points = Vec::with_capacity(total * n);
        let mut idx = lo.to_vec();
        for _ in 0..total {
            numerators.extend_from_slice(&idx);
            let kappa: Vec<f64> = idx.iter().map(|&i| i as f64 / denominator as f64).collect();
            points.extend(dual.point_real(&kappa));
            for axis in (0..n).rev() {
                idx[axis] += 1;
                if idx[axis] < hi[axis] {
                    break;
                }
                idx[axis] = lo[axis];
            }
        }
        Ok(KGrid {
            dim: n,
            points,
            shape: Some(shape),
            steps: Some(vec![1.0 / denominator as f64; n]),
            rational: Some(RationalCoords { lattice: lattice.clone(), denominator, numerators }),
        })
    }

    /// `steps_per_domain` points per unit of dual coordinate over
    /// `[0, domains)^n`.
    pub fn dual_span(lattice: &Lattice, domains: u32, steps_per_domain: u64) -> Result<Self> {
        let n = lattice.dim();
        let hi = vec![domains as i64 * steps_per_domain as i64; n];
        Self::dual_rational(lattice, steps_per_domain, &vec![0; n], &hi)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.dim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffractionEstimate {
    pub k_grid: KGrid,
    pub intensities: Vec<f64>,
    pub estimator: Estimator,
    pub volume: f64,
    /// Values clamped from below `−CLAMP_FLOOR`, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DiffractionEstimate {
    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }
}

/// Phase `k·x` of each point, reduced before multiplying so that large
/// coordinates do not cost precision.
enum PhaseSource<'a> {
    Lattice { lattice: &'a Lattice, coords: &'a [i64] },
    Golden(&'a [crate::golden::ZTau]),
    Float { dim: usize, coords: &'a [f64] },
}

impl<'a> PhaseSource<'a> {
    fn new(support: &'a Support) -> Self {
        match support {
            Support::Lattice { lattice, coords } => PhaseSource::Lattice { lattice, coords },
            Support::Golden(v) => PhaseSource::Golden(v),
            Support::Float { dim, coords } => PhaseSource::Float { dim: *dim, coords },
        }
    }

    fn dim(&self) -> usize {
        match self {
            PhaseSource::Lattice { lattice, .. } => lattice.dim(),
            PhaseSource::Golden(_) => 1,
            PhaseSource::Float { dim, .. } => *dim,
        }
    }

    /// Calls `f` with `w_i e^{−2πi k·x_i}` for each point, in point order.
    fn terms(&self, weights: &[Complex64], k: &[f64], mut f: impl FnMut(Complex64)) {
        match self {
            PhaseSource::Lattice { lattice, coords } => {
                let n = lattice.dim();
                let kappa: Vec<f64> = lattice.dual_coords_of(k).into_iter().map(|v| v - v.round()).collect();
                for (c, w) in coords.chunks(n).zip(weights) {
                    let theta: f64 = c.iter().zip(&kappa).map(|(&ci, ki)| ci as f64 * ki).sum();
                    f(w * phasor(theta));
                }
            }
            PhaseSource::Golden(pos) => {
                let ka = k[0] - k[0].round();
                let kt = k[0] * TAU;
                let kb = kt - kt.round();
                for (z, w) in pos.iter().zip(weights) {
                    f(w * phasor(ka * z.a as f64 + kb * z.b as f64));
                }
            }
            PhaseSource::Float { dim, coords } => {
                for (x, w) in coords.chunks(*dim).zip(weights) {
                    let theta: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
                    f(w * phasor(theta));
                }
            }
        }
    }

    /// `Σ w_i e^{−2πi k·x_i}` with compensated accumulation in point order.
    fn sum(&self, weights: &[Complex64], k: &[f64]) -> Complex64 {
        let mut acc = CompensatedSum::default();
        self.terms(weights, k, |t| acc.add(t));
        acc.value()
    }
}

/// Running sums `Σ_{i<n} w_i e^{−2πi k·x_i}` over the first `n` points, in
/// storage order, for each `n` in `cutoffs` (increasing).
pub fn prefix_sums(set: &WeightedPointSet, k: &[f64], cutoffs: &[usize]) -> Result<Vec<Complex64>> {
    if k.len() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: k.len() });
    }
    if cutoffs.windows(2).any(|w| w[1] < w[0]) || cutoffs.last().is_some_and(|&c| c > set.len()) {
        return Err(Error::InvalidParameter("cutoffs must increase and stay within the set".into()));
    }
    let mut acc = CompensatedSum::default();
    let mut out = Vec::with_capacity(cutoffs.len());
    let mut next = cutoffs.iter().peekable();
    while next.peek() == Some(&&0) {
        out.push(acc.value());
        next.next();
    }
    let mut seen = 0usize;
    PhaseSource::new(set.support()).terms(set.weights(), k, |t| {
        acc.add(t);
        seen += 1;
        while next.peek() == Some(&&seen) {
            out.push(acc.value());
            next.next();
        }
    });
    Ok(out)
}

fn restricted(set: &WeightedPointSet, region: &AveragingRegion) -> Result<WeightedPointSet> {
    if region.dim != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: region.dim });
    }
    set.restrict(region)
}

/// `A_r(k) = (1/vol(A)) Σ_{x ∈ S∩A} w_x e^{−2πi k·x}`.
pub fn bragg_amplitude(set: &WeightedPointSet, region: &AveragingRegion, k: &[f64]) -> Result<Complex64> {
    if k.len() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: k.len() });
    }
    let s = restricted(set, region)?;
    Ok(PhaseSource::new(s.support()).sum(s.weights(), k) / region.volume())
}

/// Exact sums on a rational dual grid: the phase of point `c` at
/// numerators `i` is `(i·c mod M)/M`, so `k` and `k + γ*` give bit-identical
/// results. Weights are pre-summed by residue class when that is cheaper.
fn rational_sums(lattice: &Lattice, coords: &[i64], weights: &[Complex64], rc: &RationalCoords) -> Vec<Complex64> {
    let n = lattice.dim();
    let m = rc.denominator as i64;
    let table = phasor_table(rc.denominator);
    let residues = (m as usize).checked_pow(n as u32).filter(|&r| r <= 4 * weights.len().max(1024));
    match residues {
        Some(cells) => {
            let mut folded = vec![CompensatedSum::default(); cells];
            for (c, w) in coords.chunks(n).zip(weights) {
                let cell = c.iter().fold(0usize, |acc, &ci| acc * m as usize + ci.rem_euclid(m) as usize);
                folded[cell].add(*w);
            }
            let occupied: Vec<(Vec<i64>, Complex64)> = folded
                .iter()
                .enumerate()
                .filter_map(|(cell, s)| {
                    let v = s.value();
                    (v != Complex64::default()).then(|| {
                        let mut r = vec![0i64; n];
                        let mut rest = cell;
                        for j in (0..n).rev() {
                            r[j] = (rest % m as usize) as i64;
                            rest /= m as usize;
                        }
                        (r, v)
                    })
                })
                .collect();
            rc.numerators
                .par_chunks(n)
                .map(|num| {
                    let mut acc = CompensatedSum::default();
                    for (r, w) in &occupied {
                        let ph: i64 = num.iter().zip(r).map(|(a, b)| a.rem_euclid(m) * b).sum();
                        acc.add(w * table[ph.rem_euclid(m) as usize]);
                    }
                    acc.value()
                })
                .collect()
        }
        None => rc
            .numerators
            .par_chunks(n)
            .map(|num| {
                let num: Vec<i64> = num.iter().map(|a| a.rem_euclid(m)).collect();
                let mut acc = CompensatedSum::default();
                for (c, w) in coords.chunks(n).zip(weights) {
                    let ph = c.iter().zip(&num).fold(0i64, |s, (&ci, &a)| (s + (ci.rem_euclid(m) * a) % m) % m);
                    acc.add(w * table[ph as usize]);
                }
                acc.value()
            })
            .collect(),
    }
}

/// Raw exponential sums `Σ w e^{−2πi k·x}` over `S ∩ A` at every grid point.
pub fn exponential_sums(set: &WeightedPointSet, region: &AveragingRegion, grid: &KGrid) -> Result<Vec<Complex64>> {
    if grid.dim != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: grid.dim });
    }
    let s = restricted(set, region)?;
    if let (Some(rc), Support::Lattice { lattice, coords }) = (&grid.rational, s.support()) {
        if rc.lattice.approx_eq(lattice, 1e-12) {
            return Ok(rational_sums(lattice, coords, s.weights(), rc));
        }
    }
    let src = PhaseSource::new(s.support());
    debug_assert_eq!(src.dim(), grid.dim);
    let ks: Vec<&[f64]> = grid.iter().collect();
    Ok(ks.par_iter().map(|k| src.sum(s.weights(), k)).collect())
}

fn clamp(values: Vec<f64>, warnings: &mut Vec<String>) -> Vec<f64> {
    let bad = values.iter().filter(|&&v| v < -CLAMP_FLOOR).count();
    if bad > 0 {
        warnings.push(format!("{bad} values below −{CLAMP_FLOOR} clamped to 0"));
    }
    values.into_iter().map(|v| v.max(0.0)).collect()
}

pub fn intensity_scan(
    set: &WeightedPointSet,
    region: &AveragingRegion,
    grid: &KGrid,
    estimator: Estimator,
) -> Result<DiffractionEstimate> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty k grid".into()));
    }
    let vol = region.volume();
    let sums = exponential_sums(set, region, grid)?;
    let scale = match estimator {
        Estimator::AmplitudeSquared => 1.0 / (vol * vol),
        Estimator::Periodogram => 1.0 / vol,
    };
    let mut warnings = Vec::new();
    let intensities = clamp(sums.iter().map(|s| s.norm_sqr() * scale).collect(), &mut warnings);
    Ok(DiffractionEstimate { k_grid: grid.clone(), intensities, estimator, volume: vol, warnings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WkMode {
    /// Full-range transform; equals the periodogram exactly.
    Exact,
    /// `η(z)` multiplied by the triangular taper `1 − |z|/z_max`.
    Truncated,
}

/// `P(k) = Σ_z η(z) e^{−2πi k·z}` over the stored coefficients.
pub fn wiener_khinchin(est: &AutocorrelationEstimate, grid: &KGrid, mode: WkMode) -> Result<DiffractionEstimate> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty k grid".into()));
    }
    if grid.dim != est.algebra.dim() {
        return Err(Error::DimensionMismatch { expected: est.algebra.dim(), found: grid.dim });
    }
    if mode == WkMode::Exact {
        if est.normalization != Normalization::Eq1Literal {
            return Err(Error::IncompatibleNormalization(
                est.normalization.name().into(),
                Normalization::Eq1Literal.name().into(),
            ));
        }
        if est.z_max < est.diameter {
            return Err(Error::InsufficientCutoff { z_max: est.z_max, diameter: est.diameter });
        }
    }
    let terms: Vec<(&Displacement, Complex64)> = est
        .coefficients
        .iter()
        .map(|(z, v)| {
            let taper = match mode {
                WkMode::Exact => 1.0,
                WkMode::Truncated if est.z_max > 0.0 => (1.0 - est.algebra.norm(z) / est.z_max).max(0.0),
                WkMode::Truncated => 1.0,
            };
            (z, v * taper)
        })
        .collect();
    let ks: Vec<&[f64]> = grid.iter().collect();
    let values: Vec<f64> = ks
        .par_iter()
        .map(|k| {
            let mut acc = CompensatedSum::default();
            match &est.algebra {
                Algebra::Lattice { lattice } => {
                    let kappa: Vec<f64> = lattice.dual_coords_of(k).into_iter().map(|v| v - v.round()).collect();
                    for (z, v) in &terms {
                        let Displacement::Lattice(c) = z else { unreachable!() };
                        let theta: f64 = c.iter().zip(&kappa).map(|(&ci, ki)| ci as f64 * ki).sum();
                        acc.add(v * phasor(theta));
                    }
                }
                Algebra::Golden => {
                    let ka = k[0] - k[0].round();
                    let kt = k[0] * TAU;
                    let kb = kt - kt.round();
                    for (z, v) in &terms {
                        let Displacement::Golden(g) = z else { unreachable!() };
                        acc.add(v * phasor(ka * g.a as f64 + kb * g.b as f64));
                    }
                }
            }
            acc.value().re
        })
        .collect();
    let mut warnings = Vec::new();
    let intensities = clamp(values, &mut warnings);
    Ok(DiffractionEstimate {
        k_grid: grid.clone(),
        intensities,
        estimator: Estimator::Periodogram,
        volume: est.region.volume(),
        warnings,
    })
}

/// Dual coordinates of `k` reduced to `[−1/2, 1/2)`: the offset from the
/// nearest dual lattice point.
fn dual_offset(lattice: &Lattice, k: &[f64]) -> Vec<f64> {
    lattice.dual_coords_of(k).into_iter().map(|v| v - v.round()).collect()
}

/// `|ĥ(k)|²·dens(L)²` at dual lattice points, 0 elsewhere, with
/// `ĥ(k) = Σ_j w_j e^{−2πi k·t_j}`.
pub fn crystallographic_prediction(lattice: &Lattice, motif: &[MotifAtom], k: &[f64]) -> Result<f64> {
    if k.len() != lattice.dim() {
        return Err(Error::DimensionMismatch { expected: lattice.dim(), found: k.len() });
    }
    let off = lattice.dual().point_real(&dual_offset(lattice, k));
    if off.iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-9 {
        return Ok(0.0);
    }
    let mut h = CompensatedSum::default();
    for atom in motif {
        if atom.offset.len() != k.len() {
            return Err(Error::DimensionMismatch { expected: k.len(), found: atom.offset.len() });
        }
        let theta: f64 = atom.offset.iter().zip(k).map(|(a, b)| a * b).sum();
        h.add(atom.weight * phasor(theta));
    }
    Ok(h.value().norm_sqr() * lattice.density().powi(2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BraggPeak {
    pub k: Vec<f64>,
    pub intensity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BraggPeakList {
    pub peaks: Vec<BraggPeak>,
    pub threshold: f64,
}

impl BraggPeakList {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Peaks whose wave vector is at least `min_norm` from the origin.
    pub fn nonzero(&self, min_norm: f64) -> Vec<&BraggPeak> {
        self.peaks.iter().filter(|p| p.k.iter().map(|v| v * v).sum::<f64>().sqrt() >= min_norm).collect()
    }
}

/// Grid shape used for neighbour tests: the declared shape, or a line.
fn grid_shape(grid: &KGrid) -> Vec<usize> {
    grid.shape.clone().unwrap_or_else(|| vec![grid.len()])
}

fn unflatten(mut i: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for j in (0..shape.len()).rev() {
        out[j] = i % shape[j];
        i /= shape[j];
    }
    out
}

/// Local maximum: strictly above neighbours earlier in flat order and at
/// least as high as later ones, so a plateau yields a single peak.
fn is_local_max(values: &[f64], shape: &[usize], i: usize) -> bool {
    let n = shape.len();
    let at = unflatten(i, shape);
    let v = values[i];
    for offset in 0..3usize.pow(n as u32) {
        let mut rest = offset;
        let mut flat = 0usize;
        let mut valid = true;
        let mut is_self = true;
        for j in 0..n {
            let d = (rest % 3) as i64 - 1;
            rest /= 3;
            is_self &= d == 0;
            let c = at[j] as i64 + d;
            if c < 0 || c >= shape[j] as i64 {
                valid = false;
                break;
            }
        }
        if !valid || is_self {
            continue;
        }
        let mut rest = offset;
        let mut coords = vec![0usize; n];
        for j in 0..n {
            coords[j] = (at[j] as i64 + (rest % 3) as i64 - 1) as usize;
            rest /= 3;
        }
        for j in 0..n {
            flat = flat * shape[j] + coords[j];
        }
        let w = values[flat];
        if (flat < i && w >= v) || (flat > i && w > v) {
            return false;
        }
    }
    true
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iterations: u32) -> (f64, f64) {
    let r = 1.0 / TAU;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

pub const REFINE_ITERATIONS: u32 = 20;

/// Local maxima with intensity `≥ threshold`, sorted by descending
/// intensity. With `refine`, each peak is polished by golden-section search
/// on `|A_r(k)|²` along each axis within one grid cell; a refinement that
/// does not improve on the grid value is discarded.
pub fn detect_peaks(
    est: &DiffractionEstimate,
    threshold: f64,
    refine: Option<(&WeightedPointSet, &AveragingRegion)>,
) -> Result<BraggPeakList> {
    let shape = grid_shape(&est.k_grid);
    if shape.iter().product::<usize>() != est.len() {
        return Err(Error::InvalidParameter("grid shape does not match intensities".into()));
    }
    let candidates: Vec<usize> = (0..est.len())
        .filter(|&i| est.intensities[i] >= threshold && is_local_max(&est.intensities, &shape, i))
        .collect();
    let grid = &est.k_grid;
    let mut peaks: Vec<BraggPeak> = match refine {
        None => {
            candidates.iter().map(|&i| BraggPeak { k: grid.point(i).to_vec(), intensity: est.intensities[i] }).collect()
        }
        Some((set, region)) => {
            let s = restricted(set, region)?;
            let src = PhaseSource::new(s.support());
            let vol = region.volume();
            let scale = match est.estimator {
                Estimator::AmplitudeSquared => 1.0 / (vol * vol),
                Estimator::Periodogram => 1.0 / vol,
            };
            let half_cells = cell_vectors(grid);
            candidates
                .par_iter()
                .map(|&i| {
                    let mut k = grid.point(i).to_vec();
                    let mut best = est.intensities[i];
                    for dir in &half_cells {
                        let f = |t: f64| {
                            let kt: Vec<f64> = k.iter().zip(dir).map(|(a, d)| a + t * d).collect();
                            src.sum(s.weights(), &kt).norm_sqr() * scale
                        };
                        let (t, v) = golden_section_max(f, -1.0, 1.0, REFINE_ITERATIONS);
                        if v > best {
                            best = v;
                            k = k.iter().zip(dir).map(|(a, d)| a + t * d).collect();
                        }
                    }
                    BraggPeak { k, intensity: best }
                })
                .collect()
        }
    };
    peaks.sort_by(|a, b| b.intensity.total_cmp(&a.intensity));
    Ok(BraggPeakList { peaks, threshold })
}

/// Cartesian grid-step vector along each axis.
fn cell_vectors(grid: &KGrid) -> Vec<Vec<f64>> {
    let n = grid.dim;
    let steps = grid.steps.clone().unwrap_or_else(|| {
        // irregular lists: use the smallest spacing between neighbours
        let mut v: Vec<f64> = grid.iter().map(|k| k[0]).collect();
        v.sort_by(f64::total_cmp);
        let h = v.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
        vec![if h.is_finite() { h } else { 1e-3 }; n]
    });
    match &grid.rational {
        Some(rc) => {
            let dual = rc.lattice.dual();
            (0..n).map(|j| (0..n).map(|i| dual.entry(i, j) * steps[j]).collect()).collect()
        }
        None => (0..n).map(|j| (0..n).map(|i| if i == j { steps[j] } else { 0.0 }).collect()).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldedDiffraction {
    pub dual: Lattice,
    pub bins: Vec<usize>,
    /// Per-bin mean intensity, flat, last axis fastest.
    pub mean: Vec<f64>,
    /// Per-bin `max − min` over the folded preimages.
    pub spread: Vec<f64>,
    pub count: Vec<usize>,
}

impl FoldedDiffraction {
    pub fn max_spread(&self) -> f64 {
        self.spread.iter().copied().fold(0.0, f64::max)
    }

    /// Lower-corner dual coordinates of bin `i`.
    pub fn bin_coords(&self, i: usize) -> Vec<usize> {
        unflatten(i, &self.bins)
    }
}

/// Folds every grid point into `[0,1)^n` dual coordinates and bins it.
/// Bin `b_j = ⌊c_j·bins_j + 1e-9⌋ mod bins_j`; the slack keeps points lying
/// on bin edges in the upper bin despite round-off. Fails when a bin
/// receives no grid point.
pub fn fold_diffraction(est: &DiffractionEstimate, dual: &Lattice, bins: &[usize]) -> Result<FoldedDiffraction> {
    let n = dual.dim();
    if bins.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: bins.len() });
    }
    if bins.contains(&0) {
        return Err(Error::InvalidParameter("zero bins".into()));
    }
    let cells: usize = bins.iter().product();
    let mut lo = vec![f64::INFINITY; cells];
    let mut hi = vec![f64::NEG_INFINITY; cells];
    let mut sum = vec![CompensatedSum::default(); cells];
    let mut count = vec![0usize; cells];
    for (k, &v) in est.k_grid.iter().zip(&est.intensities) {
        let c = fold_coords(k, dual)?;
        let cell =
            c.iter().zip(bins).fold(0usize, |acc, (&cj, &b)| acc * b + ((cj * b as f64 + 1e-9).floor() as usize) % b);
        lo[cell] = lo[cell].min(v);
        hi[cell] = hi[cell].max(v);
        sum[cell].add(Complex64::new(v, 0.0));
        count[cell] += 1;
    }
    if let Some(empty) = count.iter().position(|&c| c == 0) {
        return Err(Error::GridTooSmall(format!("bin {:?} received no grid point", unflatten(empty, bins))));
    }
    Ok(FoldedDiffraction {
        dual: dual.clone(),
        bins: bins.to_vec(),
        mean: sum.iter().zip(&count).map(|(s, &c)| s.value().re / c as f64).collect(),
        spread: lo.iter().zip(&hi).map(|(l, h)| h - l).collect(),
        count,
    })
}
