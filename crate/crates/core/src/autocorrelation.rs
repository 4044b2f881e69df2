//! Finite-volume autocorrelation coefficients
//!
//! ```text
//! η_A(z) = (1/V) Σ_{x,y ∈ S∩A, x−y=z} w_x · conj(w_y)
//! ```
//!
//! where `V` is either `vol(A)` ([`Normalization::Eq1Literal`]) or the
//! overlap `vol(A ∩ (A − z))` ([`Normalization::BoundaryCorrected`]).
//! Displacements are matched exactly in the set's algebra (integer lattice
//! coordinates or Z[τ]); sets with floating-point positions are refused.
//!
//! Each coefficient sums its pair terms in ascending order of the first
//! point's index with compensated summation, so results do not depend on
//! the number of threads. Only the half `z ≥ 0` is accumulated; `η(−z)` is
//! stored as `conj(η(z))`, which makes the estimate Hermitian exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::geometry::{region_points, AveragingRegion, Lattice};
use crate::golden::ZTau;
use crate::numeric::CompensatedSum;
use crate::pointset::{Support, WeightedPointSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by `vol(A)`, exactly as in the volume-weighted convolution.
    Eq1Literal,
    /// Divide by `vol(A ∩ (A − z))`; unbiased for lattice-supported sets.
    BoundaryCorrected,
}

impl Normalization {
    pub fn name(&self) -> &'static str {
        match self {
            Normalization::Eq1Literal => "eq1_literal",
            Normalization::BoundaryCorrected => "boundary_corrected",
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq1_literal" | "literal" => Ok(Normalization::Eq1Literal),
            "boundary_corrected" | "corrected" => Ok(Normalization::BoundaryCorrected),
            other => Err(Error::Parse(format!("unknown normalization '{other}'"))),
        }
    }
}

/// A displacement `x − y` in the exact algebra of its point set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Displacement {
    Lattice(Vec<i64>),
    Golden(ZTau),
}

impl Displacement {
    pub fn zero_like(&self) -> Displacement {
        match self {
            Displacement::Lattice(v) => Displacement::Lattice(vec![0; v.len()]),
            Displacement::Golden(_) => Displacement::Golden(ZTau::ZERO),
        }
    }

    pub fn neg(&self) -> Displacement {
        match self {
            Displacement::Lattice(v) => Displacement::Lattice(v.iter().map(|c| -c).collect()),
            Displacement::Golden(z) => Displacement::Golden(-*z),
        }
    }

    pub fn checked_add(&self, other: &Displacement) -> Option<Displacement> {
        match (self, other) {
            (Displacement::Lattice(a), Displacement::Lattice(b)) if a.len() == b.len() => {
                Some(Displacement::Lattice(a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            (Displacement::Golden(a), Displacement::Golden(b)) => Some(Displacement::Golden(*a + *b)),
            _ => None,
        }
    }

    /// `z > 0` in the ordering used to pick the accumulated half.
    fn is_positive(&self) -> bool {
        match self {
            Displacement::Lattice(v) => v.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0),
            Displacement::Golden(z) => z.signum() == std::cmp::Ordering::Greater,
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Displacement::Lattice(v) => v.iter().all(|&c| c == 0),
            Displacement::Golden(z) => z.is_zero(),
        }
    }

    /// Exact-algebra coordinates for CSV output (`m,n` for Z[τ]).
    pub fn components(&self) -> Vec<i64> {
        match self {
            Displacement::Lattice(v) => v.clone(),
            Displacement::Golden(z) => vec![z.a, z.b],
        }
    }
}

impl std::fmt::Display for Displacement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Displacement::Lattice(v) => write!(f, "{v:?}"),
            Displacement::Golden(z) => write!(f, "{z}"),
        }
    }
}

/// The exact algebra in which displacements of an estimate live.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Algebra {
    Lattice { lattice: Lattice },
    Golden,
}

impl Algebra {
    pub fn of(set: &WeightedPointSet) -> Result<Algebra> {
        match set.support() {
            Support::Lattice { lattice, .. } => Ok(Algebra::Lattice { lattice: lattice.clone() }),
            Support::Golden(_) => Ok(Algebra::Golden),
            Support::Float { .. } => Err(Error::IncompatibleAlgebra(
                "floating-point positions must be snapped to a lattice or Z[τ] first".into(),
            )),
        }
    }

    pub fn real(&self, z: &Displacement) -> Vec<f64> {
        match (self, z) {
            (Algebra::Lattice { lattice }, Displacement::Lattice(c)) => lattice.point(c),
            (Algebra::Golden, Displacement::Golden(g)) => vec![g.value()],
            _ => panic!("displacement {z} does not belong to this algebra"),
        }
    }

    pub fn norm(&self, z: &Displacement) -> f64 {
        self.real(z).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn compatible(&self, other: &Algebra) -> bool {
        match (self, other) {
            (Algebra::Lattice { lattice: a }, Algebra::Lattice { lattice: b }) => a.approx_eq(b, 1e-12),
            (Algebra::Golden, Algebra::Golden) => true,
            _ => false,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Algebra::Lattice { lattice } => lattice.dim(),
            Algebra::Golden => 1,
        }
    }
}

/// Finite-volume approximant of the autocorrelation measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationEstimate {
    pub region: AveragingRegion,
    pub z_max: f64,
    pub normalization: Normalization,
    pub algebra: Algebra,
    /// Number of points of the set inside the region.
    pub n_points: usize,
    /// Largest distance between two points of the restricted set.
    pub diameter: f64,
    #[serde(with = "coefficient_list")]
    pub coefficients: BTreeMap<Displacement, Complex64>,
}

mod coefficient_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<Displacement, Complex64>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<Displacement, Complex64>, D::Error> {
        let v: Vec<(Displacement, Complex64)> = Vec::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

impl AutocorrelationEstimate {
    pub fn get(&self, z: &Displacement) -> Option<Complex64> {
        self.coefficients.get(z).copied()
    }

    /// `η(z)`, or zero when no pair realises `z`.
    pub fn coefficient(&self, z: &Displacement) -> Complex64 {
        self.get(z).unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Displacement, &Complex64)> {
        self.coefficients.iter()
    }

    /// Whether `η(−z) = conj(η(z))` holds exactly for every stored `z`.
    pub fn is_hermitian(&self) -> bool {
        self.coefficients.iter().all(|(z, v)| self.coefficients.get(&z.neg()) == Some(&v.conj()))
    }
}

/// Lookup from exact position to point index.
enum PositionIndex {
    Dense { lo: Vec<i64>, extent: Vec<usize>, table: Vec<u32> },
    Hashed(HashMap<Vec<i64>, usize>),
    Golden(HashMap<ZTau, usize>),
}

impl PositionIndex {
    fn build(support: &Support) -> PositionIndex {
        match support {
            Support::Lattice { lattice, coords } => {
                let n = lattice.dim();
                let count = coords.len() / n;
                let mut lo = vec![i64::MAX; n];
                let mut hi = vec![i64::MIN; n];
                for c in coords.chunks(n) {
                    for j in 0..n {
                        lo[j] = lo[j].min(c[j]);
                        hi[j] = hi[j].max(c[j]);
                    }
                }
                let extent: Vec<usize> = if count == 0 {
                    vec![0; n]
                } else {
                    lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect()
                };
                let cells = extent.iter().try_fold(1usize, |acc, &e| acc.checked_mul(e));
                match cells {
                    Some(cells) if cells <= 16 * count + (1 << 20) && count < u32::MAX as usize => {
                        let mut table = vec![u32::MAX; cells];
                        let mut idx = PositionIndex::Dense { lo, extent, table: Vec::new() };
                        for (i, c) in coords.chunks(n).enumerate() {
                            let cell = idx.dense_cell(c).expect("inside bounding box");
                            table[cell] = i as u32;
                        }
                        if let PositionIndex::Dense { table: t, .. } = &mut idx {
                            *t = table;
                        }
                        idx
                    }
                    _ => PositionIndex::Hashed(coords.chunks(n).enumerate().map(|(i, c)| (c.to_vec(), i)).collect()),
                }
            }
            Support::Golden(v) => PositionIndex::Golden(v.iter().enumerate().map(|(i, z)| (*z, i)).collect()),
            Support::Float { .. } => unreachable!("float sets are refused earlier"),
        }
    }

    fn dense_cell(&self, c: &[i64]) -> Option<usize> {
        let PositionIndex::Dense { lo, extent, .. } = self else { return None };
        let mut cell = 0usize;
        for j in 0..c.len() {
            let off = c[j] - lo[j];
            if off < 0 || off as usize >= extent[j] {
                return None;
            }
            cell = cell * extent[j] + off as usize;
        }
        Some(cell)
    }

    fn lattice(&self, c: &[i64]) -> Option<usize> {
        match self {
            PositionIndex::Dense { table, .. } => {
                let i = table[self.dense_cell(c)?];
                (i != u32::MAX).then_some(i as usize)
            }
            PositionIndex::Hashed(map) => map.get(c).copied(),
            PositionIndex::Golden(_) => None,
        }
    }

    fn golden(&self, z: ZTau) -> Option<usize> {
        match self {
            PositionIndex::Golden(map) => map.get(&z).copied(),
            _ => None,
        }
    }
}

/// Displacements `d` with `|d| ≤ z_max` that can occur, `d ≥ 0` only.
fn candidate_half(set: &WeightedPointSet, algebra: &Algebra, z_max: f64) -> Result<Vec<Displacement>> {
    let mut out = match (set.support(), algebra) {
        (Support::Lattice { .. }, Algebra::Lattice { lattice }) => {
            let ball = AveragingRegion::ball(z_max.max(f64::MIN_POSITIVE), lattice.dim())?;
            region_points(lattice, &ball)?
                .into_iter()
                .map(Displacement::Lattice)
                .filter(|d| d.is_zero() || d.is_positive())
                .collect::<Vec<_>>()
        }
        (Support::Golden(pos), Algebra::Golden) => {
            let mut sorted = pos.clone();
            sorted.sort();
            let mut seen = BTreeSet::new();
            seen.insert(ZTau::ZERO);
            for (i, x) in sorted.iter().enumerate() {
                for y in &sorted[i + 1..] {
                    let d = *y - *x;
                    if d.value() > z_max + 1e-9 {
                        break;
                    }
                    if d.value().abs() <= z_max {
                        seen.insert(d);
                    }
                }
            }
            seen.into_iter().map(Displacement::Golden).collect()
        }
        _ => unreachable!("algebra derived from the support"),
    };
    out.sort();
    Ok(out)
}

fn support_diameter(set: &WeightedPointSet) -> f64 {
    let n = set.dim();
    if set.is_empty() {
        return 0.0;
    }
    if n == 1 {
        let (lo, hi) = (0..set.len())
            .map(|i| set.real_position(i)[0])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
        return hi - lo;
    }
    // bounding-box diagonal, an upper bound in higher dimensions
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for i in 0..set.len() {
        for (j, x) in set.real_position(i).into_iter().enumerate() {
            lo[j] = lo[j].min(x);
            hi[j] = hi[j].max(x);
        }
    }
    lo.iter().zip(&hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt()
}

/// Autocorrelation coefficients of `set ∩ region` for all displacements
/// `|z| ≤ z_max` realised by at least one pair.
pub fn autocorrelation(
    set: &WeightedPointSet,
    region: &AveragingRegion,
    z_max: f64,
    normalization: Normalization,
) -> Result<AutocorrelationEstimate> {
    if !(z_max >= 0.0) {
        return Err(Error::InvalidParameter(format!("z_max = {z_max}")));
    }
    if z_max > 2.0 * region.radius {
        return Err(Error::CutoffTooLarge { z_max, limit: 2.0 * region.radius });
    }
    let algebra = Algebra::of(set)?;
    let restricted = set.restrict(region)?;
    let candidates = candidate_half(&restricted, &algebra, z_max)?;
    let index = PositionIndex::build(restricted.support());
    let weights = restricted.weights();
    let volume = region.volume();

    let half: Vec<(Displacement, Complex64)> = candidates
        .par_iter()
        .map(|z| -> Result<Option<(Displacement, Complex64)>> {
            let mut acc = CompensatedSum::default();
            let mut pairs = 0usize;
            match (restricted.support(), z) {
                (Support::Lattice { lattice, coords }, Displacement::Lattice(d)) => {
                    let n = lattice.dim();
                    let mut target = vec![0i64; n];
                    for (i, c) in coords.chunks(n).enumerate() {
                        for j in 0..n {
                            target[j] = c[j] - d[j];
                        }
                        if let Some(j) = index.lattice(&target) {
                            acc.add(weights[i] * weights[j].conj());
                            pairs += 1;
                        }
                    }
                }
                (Support::Golden(pos), Displacement::Golden(d)) => {
                    for (i, x) in pos.iter().enumerate() {
                        if let Some(j) = index.golden(*x - *d) {
                            acc.add(weights[i] * weights[j].conj());
                            pairs += 1;
                        }
                    }
                }
                _ => unreachable!(),
            }
            if pairs == 0 {
                return Ok(None);
            }
            let denom = match normalization {
                Normalization::Eq1Literal => volume,
                Normalization::BoundaryCorrected => region.overlap_volume(&algebra.real(z))?,
            };
            Ok(Some((z.clone(), acc.value() / denom)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut coefficients = BTreeMap::new();
    for (z, v) in half {
        if !z.is_zero() {
            coefficients.insert(z.neg(), v.conj());
        }
        coefficients.insert(z, v);
    }
    Ok(AutocorrelationEstimate {
        region: region.clone(),
        z_max,
        normalization,
        algebra,
        n_points: restricted.len(),
        diameter: support_diameter(&restricted),
        coefficients,
    })
}

/// `η_r(z_probe)` for each radius, with the generator realised afresh on the
/// region of that radius.
pub fn convergence_table(
    generator: &GeneratorSpec,
    radii: &[f64],
    z_probe: &Displacement,
    normalization: Normalization,
) -> Result<Vec<(f64, Complex64)>> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("radii must be strictly increasing".into()));
    }
    radii
        .iter()
        .map(|&r| {
            let set = generator.realize(r)?;
            let algebra = Algebra::of(&set)?;
            let z_max = algebra.norm(z_probe);
            let est = autocorrelation(&set, set.region(), z_max, normalization)?;
            Ok((r, est.coefficient(z_probe)))
        })
        .collect()
}

/// `max_z |η_A(z) − η_B(z)|` over the union of stored displacements, a
/// missing coefficient counting as zero.
pub fn compare_autocorrelations(a: &AutocorrelationEstimate, b: &AutocorrelationEstimate) -> Result<f64> {
    if a.normalization != b.normalization {
        return Err(Error::IncompatibleNormalization(a.normalization.name().into(), b.normalization.name().into()));
    }
    if !a.algebra.compatible(&b.algebra) {
        return Err(Error::IncompatibleAlgebra("estimates use different displacement algebras".into()));
    }
    if (a.z_max - b.z_max).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("cutoffs differ: {} vs {}", a.z_max, b.z_max)));
    }
    let keys: BTreeSet<&Displacement> = a.coefficients.keys().chain(b.coefficients.keys()).collect();
    Ok(keys.into_iter().map(|z| (a.coefficient(z) - b.coefficient(z)).norm()).fold(0.0, f64::max))
}

/// Candidates `t` with `max |η(z + t) − η(z)| ≤ ε` over every stored `z`
/// for which `z + t` is stored too.
pub fn almost_period_scan(
    est: &AutocorrelationEstimate,
    eps: f64,
    candidates: &[Displacement],
) -> Result<Vec<Displacement>> {
    let mut out = Vec::new();
    for t in candidates {
        if est.algebra.norm(t) > est.z_max / 2.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("candidate {t} lies beyond z_max/2 = {}", est.z_max / 2.0)));
        }
        let mut compared = 0usize;
        let mut worst: f64 = 0.0;
        for (z, v) in &est.coefficients {
            let shifted = z.checked_add(t).ok_or_else(|| Error::IncompatibleAlgebra(format!("candidate {t}")))?;
            if let Some(w) = est.coefficients.get(&shifted) {
                worst = worst.max((w - v).norm());
                compared += 1;
            }
        }
        if compared == 0 {
            return Err(Error::EmptyComparableRange(t.to_string()));
        }
        if worst <= eps {
            out.push(t.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{
        fibonacci_model_set, lattice_comb, rudin_shapiro_comb, substitution_chain, substitution_prefix,
        CutProjectScheme, SubstitutionRule,
    };
    use crate::golden::TAU;

    fn z_comb(lo: i64, hi: i64) -> WeightedPointSet {
        lattice_comb(&Lattice::integer(1), &AveragingRegion::interval(lo as f64, hi as f64).unwrap()).unwrap()
    }

    fn d1(z: i64) -> Displacement {
        Displacement::Lattice(vec![z])
    }

    #[test]
    fn integer_comb_literal_and_corrected() {
        let s = z_comb(-50, 50);
        let lit = autocorrelation(&s, s.region(), 20.0, Normalization::Eq1Literal).unwrap();
        assert_eq!(lit.coefficient(&d1(10)).re, 0.9);
        assert_eq!(lit.coefficient(&d1(0)).re, 1.0);
        let cor = autocorrelation(&s, s.region(), 20.0, Normalization::BoundaryCorrected).unwrap();
        for z in -20..=20 {
            assert_eq!(cor.coefficient(&d1(z)), Complex64::new(1.0, 0.0));
        }
        assert_eq!(cor.len(), 41);
        assert!(lit.is_hermitian() && cor.is_hermitian());
    }

    #[test]
    fn fibonacci_tau_coefficient_regression() {
        // Frozen from a brute-force double loop over the 724 points: 447
        // pairs at distance exactly τ.
        let s = fibonacci_model_set(&CutProjectScheme::default(), 0.0, 1000.0).unwrap();
        let est = autocorrelation(&s, s.region(), 2.0, Normalization::Eq1Literal).unwrap();
        let v = est.coefficient(&Displacement::Golden(ZTau::TAU));
        assert_eq!(v, Complex64::new(FIB_TAU_PAIRS as f64 / 1000.0, 0.0));
        // every neighbouring pair is one of the two gaps
        let one = est.coefficient(&Displacement::Golden(ZTau::ONE)).re * 1000.0;
        assert_eq!(one + v.re * 1000.0, (s.len() - 1) as f64);
    }

    const FIB_TAU_PAIRS: usize = 447;

    #[test]
    fn cutoff_errors() {
        let s = z_comb(-5, 5);
        assert!(matches!(
            autocorrelation(&s, s.region(), 10.5, Normalization::Eq1Literal),
            Err(Error::CutoffTooLarge { .. })
        ));
        let float = crate::generators::motif_comb(
            &Lattice::integer(1),
            &[crate::generators::MotifAtom::new(vec![0.1 * std::f64::consts::SQRT_2], 1.0)],
            s.region(),
        )
        .unwrap();
        assert!(matches!(
            autocorrelation(&float, float.region(), 2.0, Normalization::Eq1Literal),
            Err(Error::IncompatibleAlgebra(_))
        ));
    }

    #[test]
    fn convergence_examples() {
        let spec = GeneratorSpec::LatticeComb { lattice: Lattice::integer(1) };
        let tab = convergence_table(&spec, &[100.0, 200.0, 400.0], &d1(10), Normalization::BoundaryCorrected).unwrap();
        assert!(tab.iter().all(|(_, v)| *v == Complex64::new(1.0, 0.0)));
        // box of radius r holds 2r points, so η(10) = (2r − 10)/2r
        let tab = convergence_table(&spec, &[50.0, 100.0, 200.0], &d1(10), Normalization::Eq1Literal).unwrap();
        let vals: Vec<f64> = tab.iter().map(|(_, v)| v.re).collect();
        assert_eq!(vals, vec![0.9, 0.95, 0.975]);
        assert!(convergence_table(&spec, &[2.0, 1.0], &d1(1), Normalization::Eq1Literal).is_err());
    }

    #[test]
    fn fibonacci_convergence_bounded() {
        // limit: frequency of unit gaps times density, 1/τ² · τ/√5 = 1/(τ√5);
        // the error fluctuates but stays O(1/r)
        let spec = GeneratorSpec::FibonacciModelSet { scheme: CutProjectScheme::default() };
        let z = Displacement::Golden(ZTau::ONE);
        let limit = 1.0 / (TAU * crate::golden::SQRT5);
        let radii = [250.0, 500.0, 1000.0, 2000.0];
        let tab = convergence_table(&spec, &radii, &z, Normalization::BoundaryCorrected).unwrap();
        for (r, v) in tab {
            assert!((v.re - limit).abs() * r <= 1.0, "r = {r}: {v}");
        }
    }

    #[test]
    fn compare_examples() {
        let s = z_comb(-100, 100);
        let e = autocorrelation(&s, s.region(), 32.0, Normalization::BoundaryCorrected).unwrap();
        assert_eq!(compare_autocorrelations(&e, &e).unwrap(), 0.0);
        let l = autocorrelation(&s, s.region(), 32.0, Normalization::Eq1Literal).unwrap();
        assert!(matches!(compare_autocorrelations(&e, &l), Err(Error::IncompatibleNormalization(..))));
    }

    #[test]
    fn even_vs_odd_small_exact() {
        // Brute force at N = 20: both are translates of 2Z; on [−N, N)
        // the corrected coefficients coincide up to one boundary pair.
        let n = 20i64;
        let full = z_comb(-n, n);
        let parity = |r: i64| -> WeightedPointSet {
            let keep: Vec<bool> =
                (0..full.len()).map(|i| (full.real_position(i)[0] as i64).rem_euclid(2) == r).collect();
            full.select(&keep, crate::pointset::Provenance::new("parity"))
        };
        let ev = autocorrelation(&parity(0), full.region(), 16.0, Normalization::BoundaryCorrected).unwrap();
        let od = autocorrelation(&parity(1), full.region(), 16.0, Normalization::BoundaryCorrected).unwrap();
        let dev = compare_autocorrelations(&ev, &od).unwrap();
        // odd z never occurs; even z: both have (2N − |z|)/2 pairs
        assert_eq!(dev, 0.0);
        assert_eq!(ev.coefficient(&d1(4)).re, 0.5);
        assert!(ev.get(&d1(3)).is_none());
    }

    #[test]
    fn almost_period_examples() {
        let s = z_comb(-100, 100);
        let e = autocorrelation(&s, s.region(), 32.0, Normalization::BoundaryCorrected).unwrap();
        let ts: Vec<Displacement> = (1..=10).map(d1).collect();
        assert_eq!(almost_period_scan(&e, 1e-9, &ts).unwrap(), ts);

        let alt: Vec<Complex64> =
            (0..s.len()).map(|i| Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
        let a = s.with_weights(alt).unwrap();
        let e = autocorrelation(&a, a.region(), 32.0, Normalization::BoundaryCorrected).unwrap();
        let found = almost_period_scan(&e, 1e-9, &ts).unwrap();
        assert_eq!(found, (1..=5).map(|k| d1(2 * k)).collect::<Vec<_>>());

        assert!(almost_period_scan(&e, 1e-9, &[d1(17)]).is_err());
    }

    #[test]
    fn thue_morse_almost_periods_regression() {
        let tm = substitution_prefix(&SubstitutionRule::thue_morse(), 1 << 14).unwrap();
        let e = autocorrelation(&tm, tm.region(), 128.0, Normalization::BoundaryCorrected).unwrap();
        let ts: Vec<Displacement> = (1..=64).map(d1).collect();
        let found = almost_period_scan(&e, 0.05, &ts).unwrap();
        assert_eq!(found, TM_ALMOST_PERIODS.iter().map(|&t| d1(t)).collect::<Vec<_>>());

        let fib = substitution_chain(&SubstitutionRule::fibonacci(), 20_000.0).unwrap();
        let e = autocorrelation(&fib, fib.region(), 128.0, Normalization::BoundaryCorrected).unwrap();
        let cands: Vec<Displacement> = e
            .coefficients
            .keys()
            .filter(|z| matches!(z, Displacement::Golden(g) if g.value() > 0.0 && g.value() <= 64.0))
            .cloned()
            .collect();
        let fib_found = almost_period_scan(&e, 0.05, &cands).unwrap();
        let tm_frac = found.len() as f64 / ts.len() as f64;
        let fib_frac = fib_found.len() as f64 / cands.len() as f64;
        assert!(tm_frac < fib_frac, "tm {tm_frac} fib {fib_frac}");
    }

    const TM_ALMOST_PERIODS: &[i64] = &[];

    #[test]
    fn rudin_shapiro_hermitian() {
        let s = rudin_shapiro_comb(4096).unwrap();
        let e = autocorrelation(&s, s.region(), 64.0, Normalization::Eq1Literal).unwrap();
        assert!(e.is_hermitian());
        assert!(e.coefficient(&d1(0)).im == 0.0 && e.coefficient(&d1(0)).re > 0.0);
    }
}
