//! Generators for every point set used in the experiments: lattice combs,
//! crystallographic motifs, substitution chains, the cut-and-project
//! Fibonacci set, visible lattice points and Bernoulli randomisations.

use std::collections::{BTreeMap, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{region_points, AveragingRegion, Lattice};
use crate::golden::{ZTau, SQRT5};
use crate::pointset::{Provenance, Support, WeightedPointSet};
use crate::rng::{uniform_draws, RNG_NAME};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Weight-1 comb on every lattice point of `region`.
pub fn lattice_comb(lattice: &Lattice, region: &AveragingRegion) -> Result<WeightedPointSet> {
    let pts = region_points(lattice, region)?;
    let n = pts.len();
    let support = Support::Lattice { lattice: lattice.clone(), coords: pts.concat() };
    let prov = Provenance::new("lattice").param("basis", lattice.rows()).param("region", region);
    Ok(WeightedPointSet::new_unchecked(support, vec![ONE; n], region.clone(), prov))
}

/// One atom of a crystallographic motif.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotifAtom {
    pub offset: Vec<f64>,
    pub weight: Complex64,
}

impl MotifAtom {
    pub fn new(offset: Vec<f64>, weight: f64) -> Self {
        MotifAtom { offset, weight: Complex64::new(weight, 0.0) }
    }
}

/// Largest denominator tried when snapping motif offsets onto a refined
/// lattice.
pub const MAX_MOTIF_DENOMINATOR: u32 = 1024;

/// Smallest `q` such that every motif offset has coordinates in `(1/q)Z^n`.
fn motif_denominator(coords: &[Vec<f64>]) -> Option<u32> {
    (1..=MAX_MOTIF_DENOMINATOR).find(|&q| {
        coords.iter().flatten().all(|&c| {
            let s = c * q as f64;
            (s - s.round()).abs() < 1e-9
        })
    })
}

/// `h ∗ δ_Γ`: the motif repeated at every lattice translate, keeping the
/// atoms that fall inside `region`.
///
/// Offsets that are rational in the basis (denominator up to
/// [`MAX_MOTIF_DENOMINATOR`]) yield exact positions on the refined lattice
/// `Γ/q`; otherwise positions are stored as floats.
pub fn motif_comb(lattice: &Lattice, motif: &[MotifAtom], region: &AveragingRegion) -> Result<WeightedPointSet> {
    let n = lattice.dim();
    let mut coords = Vec::with_capacity(motif.len());
    for atom in motif {
        if atom.offset.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: atom.offset.len() });
        }
        let c = lattice.coords_of(&atom.offset);
        if c.iter().any(|&v| !(-1e-9..1.0 - 1e-9).contains(&v)) {
            return Err(Error::MotifOutsideCell(atom.offset.clone()));
        }
        coords.push(c);
    }
    let prov = Provenance::new("motif").param("basis", lattice.rows()).param("motif", motif).param("region", region);

    // Enlarge the region by one cell so translates whose atoms poke inside
    // are not missed; atoms are filtered against `region` below.
    let reach: f64 = (0..n).map(|j| (0..n).map(|i| lattice.entry(i, j).powi(2)).sum::<f64>().sqrt()).sum();
    let grown = AveragingRegion::new(region.kind, region.radius + reach, n)?.with_center(region.center())?;
    let translates = region_points(lattice, &grown)?;

    let mut weights = Vec::new();
    let support = if let Some(q) = motif_denominator(&coords) {
        let fine = lattice.refined(q);
        let offs: Vec<Vec<i64>> =
            coords.iter().map(|c| c.iter().map(|v| (v * q as f64).round() as i64).collect()).collect();
        let mut out = Vec::new();
        for t in &translates {
            for (atom, off) in motif.iter().zip(&offs) {
                let c: Vec<i64> = t.iter().zip(off).map(|(ti, oi)| ti * q as i64 + oi).collect();
                if region.contains(&fine.point(&c)) {
                    out.extend_from_slice(&c);
                    weights.push(atom.weight);
                }
            }
        }
        Support::Lattice { lattice: fine, coords: out }
    } else {
        let mut out = Vec::new();
        for t in &translates {
            let base = lattice.point(t);
            for atom in motif {
                let x: Vec<f64> = base.iter().zip(&atom.offset).map(|(b, o)| b + o).collect();
                if region.contains(&x) {
                    out.extend_from_slice(&x);
                    weights.push(atom.weight);
                }
            }
        }
        Support::Float { dim: n, coords: out }
    };
    WeightedPointSet::new(support, weights, region.clone(), prov)
}

/// A substitution rule on a finite alphabet with per-symbol tile lengths in
/// Z[τ] and complex weights. The first alphabet symbol is the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionRule {
    pub name: String,
    pub alphabet: Vec<char>,
    pub rules: BTreeMap<char, String>,
    pub weights: BTreeMap<char, Complex64>,
    pub lengths: BTreeMap<char, ZTau>,
}

impl SubstitutionRule {
    fn build(name: &str, rules: &[(char, &str, f64, ZTau)]) -> Self {
        SubstitutionRule {
            name: name.to_string(),
            alphabet: rules.iter().map(|r| r.0).collect(),
            rules: rules.iter().map(|r| (r.0, r.1.to_string())).collect(),
            weights: rules.iter().map(|r| (r.0, Complex64::new(r.2, 0.0))).collect(),
            lengths: rules.iter().map(|r| (r.0, r.3)).collect(),
        }
    }

    /// a → ab, b → a with tile lengths τ and 1.
    pub fn fibonacci() -> Self {
        Self::build("fibonacci", &[('a', "ab", 1.0, ZTau::TAU), ('b', "a", 1.0, ZTau::ONE)])
    }

    /// a → ab, b → ba with weights +1 and −1.
    pub fn thue_morse() -> Self {
        Self::build("thue_morse", &[('a', "ab", 1.0, ZTau::ONE), ('b', "ba", -1.0, ZTau::ONE)])
    }

    /// a → ab, b → aa with weights +1 and −1.
    pub fn period_doubling() -> Self {
        Self::build("period_doubling", &[('a', "ab", 1.0, ZTau::ONE), ('b', "aa", -1.0, ZTau::ONE)])
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "fibonacci" => Some(Self::fibonacci()),
            "thue_morse" | "thue-morse" => Some(Self::thue_morse()),
            "period_doubling" | "period-doubling" => Some(Self::period_doubling()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphabet.is_empty() {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        for s in &self.alphabet {
            let image =
                self.rules.get(s).ok_or_else(|| Error::InvalidParameter(format!("no rule for symbol '{s}'")))?;
            if image.is_empty() {
                return Err(Error::InvalidParameter(format!("empty image for '{s}'")));
            }
            if let Some(bad) = image.chars().find(|c| !self.alphabet.contains(c)) {
                return Err(Error::UnknownSymbol(bad));
            }
            if !self.weights.contains_key(s) {
                return Err(Error::InvalidParameter(format!("no weight for '{s}'")));
            }
            let len = self.lengths.get(s).ok_or_else(|| Error::InvalidParameter(format!("no length for '{s}'")))?;
            if len.signum() != std::cmp::Ordering::Greater {
                return Err(Error::InvalidParameter(format!("non-positive length for '{s}'")));
            }
        }
        Ok(())
    }

    /// The word obtained by applying the rule `iterations` times to the seed.
    pub fn word(&self, iterations: u32) -> Result<Vec<char>> {
        self.validate()?;
        let mut w = vec![self.alphabet[0]];
        for _ in 0..iterations {
            w = w.iter().flat_map(|c| self.rules[c].chars()).collect();
        }
        Ok(w)
    }

    /// Smallest iteration count whose word has at least `min_len` letters.
    pub fn iterations_for(&self, min_len: usize) -> Result<u32> {
        self.validate()?;
        let mut counts: BTreeMap<char, u128> = self.alphabet.iter().map(|&c| (c, 0)).collect();
        *counts.get_mut(&self.alphabet[0]).unwrap() = 1;
        for it in 0..200 {
            if counts.values().sum::<u128>() >= min_len as u128 {
                return Ok(it);
            }
            let mut next: BTreeMap<char, u128> = self.alphabet.iter().map(|&c| (c, 0)).collect();
            for (c, k) in &counts {
                for d in self.rules[c].chars() {
                    *next.get_mut(&d).unwrap() += k;
                }
            }
            counts = next;
        }
        Err(Error::InvalidParameter("substitution does not grow".into()))
    }

    fn is_integer_tiling(&self) -> bool {
        self.lengths.values().all(|l| l.b == 0)
    }
}

fn tiles_to_set(
    rule: &SubstitutionRule,
    word: &[char],
    x_max: Option<f64>,
    prov: Provenance,
) -> Result<WeightedPointSet> {
    let mut pos = ZTau::ZERO;
    let mut positions = Vec::with_capacity(word.len());
    let mut weights = Vec::with_capacity(word.len());
    for c in word {
        if x_max.is_some_and(|x| pos.value() >= x) {
            break;
        }
        positions.push(pos);
        weights.push(rule.weights[c]);
        pos = pos + rule.lengths[c];
    }
    let hi = x_max.unwrap_or(pos.value());
    let region = AveragingRegion::interval(0.0, hi)?;
    let support = if rule.is_integer_tiling() {
        Support::Lattice { lattice: Lattice::integer(1), coords: positions.iter().map(|z| z.a).collect() }
    } else {
        Support::Golden(positions)
    };
    Ok(WeightedPointSet::new_unchecked(support, weights, region, prov))
}

/// Left endpoints of the tiles of the `iterations`-th substitution word,
/// starting at 0, declared on `[0, total length)`.
pub fn substitution_sequence(rule: &SubstitutionRule, iterations: u32) -> Result<WeightedPointSet> {
    let word = rule.word(iterations)?;
    let prov = Provenance::new("substitution").param("rule", &rule.name).param("iterations", iterations);
    tiles_to_set(rule, &word, None, prov)
}

/// The substitution chain clipped to `[0, x_max)`, iterating until the word
/// covers the interval.
pub fn substitution_chain(rule: &SubstitutionRule, x_max: f64) -> Result<WeightedPointSet> {
    if !(x_max > 0.0) {
        return Err(Error::InvalidParameter(format!("x_max = {x_max}")));
    }
    let min_len = rule.lengths.values().map(ZTau::value).fold(f64::INFINITY, f64::min);
    let it = rule.iterations_for((x_max / min_len).ceil() as usize + 1)?;
    let word = rule.word(it)?;
    let prov = Provenance::new("substitution").param("rule", &rule.name).param("iterations", it).param("x_max", x_max);
    tiles_to_set(rule, &word, Some(x_max), prov)
}

/// The first `n` tiles of the substitution chain.
pub fn substitution_prefix(rule: &SubstitutionRule, n: usize) -> Result<WeightedPointSet> {
    let it = rule.iterations_for(n)?;
    let mut word = rule.word(it)?;
    word.truncate(n);
    let prov = Provenance::new("substitution").param("rule", &rule.name).param("n", n);
    tiles_to_set(rule, &word, None, prov)
}

/// Rudin-Shapiro signs by the recursion `ε_0 = 1`, `ε_{2n} = ε_n`,
/// `ε_{2n+1} = (−1)^n ε_n`.
pub fn rudin_shapiro_weights(n: usize) -> Vec<Complex64> {
    let mut eps: Vec<i8> = Vec::with_capacity(n);
    for i in 0..n {
        let e = if i == 0 {
            1
        } else if i % 2 == 0 {
            eps[i / 2]
        } else {
            let half = i / 2;
            if half % 2 == 0 {
                eps[half]
            } else {
                -eps[half]
            }
        };
        eps.push(e);
    }
    eps.into_iter().map(|e| Complex64::new(e as f64, 0.0)).collect()
}

/// Integer comb at `0..weights.len()` on `[0, N)`.
fn integer_sequence_comb(weights: Vec<Complex64>, prov: Provenance) -> Result<WeightedPointSet> {
    let n = weights.len();
    let region = AveragingRegion::interval(0.0, n.max(1) as f64)?;
    let support = Support::Lattice { lattice: Lattice::integer(1), coords: (0..n as i64).collect() };
    Ok(WeightedPointSet::new_unchecked(support, weights, region, prov))
}

/// Rudin-Shapiro ±1 comb on `0..n`.
pub fn rudin_shapiro_comb(n: usize) -> Result<WeightedPointSet> {
    integer_sequence_comb(rudin_shapiro_weights(n), Provenance::new("rudin_shapiro").param("n", n))
}

/// Fair-coin ±1 comb on `0..n`: weight +1 when the draw is below 1/2.
pub fn random_sign_comb(n: usize, seed: u64) -> Result<WeightedPointSet> {
    let weights =
        uniform_draws(seed, n).into_iter().map(|u| Complex64::new(if u < 0.5 { 1.0 } else { -1.0 }, 0.0)).collect();
    let mut prov = Provenance::new("coin").param("n", n);
    prov.seed = Some(seed);
    prov.rng = Some(RNG_NAME.to_string());
    integer_sequence_comb(weights, prov)
}

/// One endpoint of a cut-and-project window in internal space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowEdge {
    /// The star image `a + bτ′` of an element of Z[τ]; membership tests
    /// against it are exact.
    Exact(ZTau),
    Real(f64),
}

impl WindowEdge {
    pub fn value(&self) -> f64 {
        match self {
            WindowEdge::Exact(z) => z.star_value(),
            WindowEdge::Real(v) => *v,
        }
    }

    /// Whether the star image of `x` is at or above this edge.
    fn star_at_or_above(&self, x: ZTau) -> bool {
        match self {
            WindowEdge::Exact(e) => (x - *e).star_signum() != std::cmp::Ordering::Less,
            WindowEdge::Real(v) => x.star_value() >= *v,
        }
    }
}

/// Cut-and-project scheme for the Fibonacci model set: lattice Z[τ]
/// embedded via `(m + nτ, m + nτ′)`, half-open window `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutProjectScheme {
    pub lo: WindowEdge,
    pub hi: WindowEdge,
}

impl Default for CutProjectScheme {
    /// The window `[−1, τ−1)`, whose model set is the Fibonacci chain with
    /// tiles τ and 1 anchored at 0.
    fn default() -> Self {
        CutProjectScheme { lo: WindowEdge::Exact(ZTau::from_int(-1)), hi: WindowEdge::Exact(ZTau::new(0, -1)) }
    }
}

impl CutProjectScheme {
    pub fn new(lo: WindowEdge, hi: WindowEdge) -> Result<Self> {
        let s = CutProjectScheme { lo, hi };
        if !(s.length() > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window [{}, {}) has non-positive length",
                lo.value(),
                hi.value()
            )));
        }
        Ok(s)
    }

    pub fn real(lo: f64, hi: f64) -> Result<Self> {
        Self::new(WindowEdge::Real(lo), WindowEdge::Real(hi))
    }

    pub fn length(&self) -> f64 {
        self.hi.value() - self.lo.value()
    }

    /// Asymptotic density `length / √5`.
    pub fn density(&self) -> f64 {
        self.length() / SQRT5
    }

    pub fn accepts(&self, x: ZTau) -> bool {
        self.lo.star_at_or_above(x) && !self.hi.star_at_or_above(x)
    }
}

/// Model set `{m + nτ ∈ [x_lo, x_hi) : m + nτ′ ∈ window}`, sorted by
/// position. The `(m, n)` search range is derived from the window and the
/// interval; an empty result carries a warning in its provenance.
pub fn fibonacci_model_set(scheme: &CutProjectScheme, x_lo: f64, x_hi: f64) -> Result<WeightedPointSet> {
    let region = AveragingRegion::interval(x_lo, x_hi)?;
    let (w_lo, w_hi) = (scheme.lo.value(), scheme.hi.value());
    if !(w_hi > w_lo) {
        return Err(Error::InvalidParameter("empty window".into()));
    }
    // x − s = n√5 with x the physical and s the internal coordinate
    let n_lo = ((x_lo - w_hi) / SQRT5).floor() as i64 - 1;
    let n_hi = ((x_hi - w_lo) / SQRT5).ceil() as i64 + 1;
    let mut points = Vec::new();
    for n in n_lo..=n_hi {
        let nt = n as f64 * crate::golden::TAU_CONJ;
        let m_lo = (w_lo - nt).floor() as i64 - 1;
        let m_hi = (w_hi - nt).ceil() as i64 + 1;
        for m in m_lo..=m_hi {
            let z = ZTau::new(m, n);
            let x = z.value();
            if x >= x_lo && x < x_hi && scheme.accepts(z) {
                points.push(z);
            }
        }
    }
    points.sort();
    let mut prov = Provenance::new("fibonacci_model_set")
        .param("window", scheme)
        .param("interval", [x_lo, x_hi])
        .param("search_n", [n_lo, n_hi]);
    if points.is_empty() {
        prov.warnings.push("window and search range produced no points".into());
    }
    let n = points.len();
    Ok(WeightedPointSet::new_unchecked(Support::Golden(points), vec![ONE; n], region, prov))
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Visible points of Z²: `(m, n)` with `0 < m² + n² ≤ r²` and
/// `gcd(|m|, |n|) = 1`, declared on the closed ball of radius `r`.
pub fn visible_points(r: f64) -> Result<WeightedPointSet> {
    if !(r >= 2.0) {
        return Err(Error::InvalidParameter(format!("visible points need r ≥ 2, got {r}")));
    }
    let region = AveragingRegion::ball(r, 2)?;
    let rr = r * r;
    let k = r.floor() as i64;
    let mut coords = Vec::new();
    for m in -k..=k {
        for n in -k..=k {
            let d = (m * m + n * n) as f64;
            if d > 0.0 && d <= rr && gcd(m, n) == 1 {
                coords.extend_from_slice(&[m, n]);
            }
        }
    }
    let n = coords.len() / 2;
    let support = Support::Lattice { lattice: Lattice::integer(2), coords };
    let prov = Provenance::new("visible").param("r", r);
    Ok(WeightedPointSet::new_unchecked(support, vec![ONE; n], region, prov))
}

/// Keeps each point independently with probability `p`; point `i` is kept
/// when the `i`-th draw of the seeded stream is below `p`.
pub fn bernoulli_thin(set: &WeightedPointSet, p: f64, seed: u64) -> Result<WeightedPointSet> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let keep: Vec<bool> = uniform_draws(seed, set.len()).into_iter().map(|u| u < p).collect();
    let mut prov = Provenance::new("bernoulli_thin").param("p", p).param("parent", &set.provenance);
    prov.seed = Some(seed);
    prov.rng = Some(RNG_NAME.to_string());
    Ok(set.select(&keep, prov))
}

/// Bernoulli lattice gas: `bernoulli_thin(lattice_comb(L, A), p, seed)`.
pub fn bernoulli_lattice_gas(
    lattice: &Lattice,
    p: f64,
    region: &AveragingRegion,
    seed: u64,
) -> Result<WeightedPointSet> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let mut out = bernoulli_thin(&lattice_comb(lattice, region)?, p, seed)?;
    out.provenance.generator = "bernoulli_gas".into();
    Ok(out)
}

/// Weight-1 set on the lattice points of `region` that are not in `set`.
pub fn complement_in_lattice(
    set: &WeightedPointSet,
    lattice: &Lattice,
    region: &AveragingRegion,
) -> Result<WeightedPointSet> {
    let n = lattice.dim();
    let mut taken: HashSet<&[i64]> = HashSet::with_capacity(set.len());
    if !set.is_empty() {
        let Support::Lattice { lattice: own, coords } = set.support() else {
            return Err(Error::NotInLattice(set.position(0).to_string()));
        };
        if !own.approx_eq(lattice, 1e-12) {
            return Err(Error::IncompatibleAlgebra("set lives on a different lattice".into()));
        }
        for (i, c) in coords.chunks(n).enumerate() {
            if !region.contains(&lattice.point(c)) {
                return Err(Error::NotInLattice(set.position(i).to_string()));
            }
            if set.weights()[i] != ONE {
                return Err(Error::InvalidParameter(format!(
                    "point {} has weight {} (complement needs weight-1 sets)",
                    set.position(i),
                    set.weights()[i]
                )));
            }
            taken.insert(c);
        }
    }
    let all = region_points(lattice, region)?;
    let coords: Vec<i64> = all.iter().filter(|c| !taken.contains(c.as_slice())).flatten().copied().collect();
    let count = coords.len() / n;
    let prov = Provenance::new("complement")
        .param("basis", lattice.rows())
        .param("region", region)
        .param("parent", &set.provenance);
    Ok(WeightedPointSet::new_unchecked(
        Support::Lattice { lattice: lattice.clone(), coords },
        vec![ONE; count],
        region.clone(),
        prov,
    ))
}

/// A recipe for a point set that can be realised at any scale; drives the
/// convergence and scaling experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum GeneratorSpec {
    LatticeComb { lattice: Lattice },
    Substitution { rule: SubstitutionRule },
    RudinShapiro,
    CoinSigns { seed: u64 },
    FibonacciModelSet { scheme: CutProjectScheme },
    Visible,
    BernoulliGas { lattice: Lattice, p: f64, seed: u64 },
}

impl GeneratorSpec {
    pub fn name(&self) -> String {
        match self {
            GeneratorSpec::LatticeComb { .. } => "lattice_comb".into(),
            GeneratorSpec::Substitution { rule } => rule.name.clone(),
            GeneratorSpec::RudinShapiro => "rudin_shapiro".into(),
            GeneratorSpec::CoinSigns { .. } => "coin".into(),
            GeneratorSpec::FibonacciModelSet { .. } => "fibonacci_model_set".into(),
            GeneratorSpec::Visible => "visible".into(),
            GeneratorSpec::BernoulliGas { .. } => "bernoulli_gas".into(),
        }
    }

    /// The set on the region of radius `r`: a centred box for lattice
    /// combs and gases, the closed ball for visible points, and `[0, 2r)`
    /// for one-sided sequences.
    pub fn realize(&self, r: f64) -> Result<WeightedPointSet> {
        if !(r > 0.0) {
            return Err(Error::InvalidRegion(format!("radius {r}")));
        }
        let n = (2.0 * r).floor() as usize;
        match self {
            GeneratorSpec::LatticeComb { lattice } => {
                lattice_comb(lattice, &AveragingRegion::centered_box(r, lattice.dim())?)
            }
            GeneratorSpec::Substitution { rule } => substitution_chain(rule, 2.0 * r),
            GeneratorSpec::RudinShapiro => rudin_shapiro_comb(n),
            GeneratorSpec::CoinSigns { seed } => random_sign_comb(n, *seed),
            GeneratorSpec::FibonacciModelSet { scheme } => fibonacci_model_set(scheme, 0.0, 2.0 * r),
            GeneratorSpec::Visible => visible_points(r),
            GeneratorSpec::BernoulliGas { lattice, p, seed } => {
                bernoulli_lattice_gas(lattice, *p, &AveragingRegion::centered_box(r, lattice.dim())?, *seed)
            }
        }
    }

    /// The first `n` points of a one-dimensional generator, counted from 0.
    pub fn prefix(&self, n: usize) -> Result<WeightedPointSet> {
        let one_d = |l: &Lattice| -> Result<AveragingRegion> {
            if l.dim() != 1 {
                return Err(Error::InvalidParameter("prefixes need a one-dimensional set".into()));
            }
            AveragingRegion::interval(0.0, n.max(1) as f64 * l.entry(0, 0).abs())
        };
        match self {
            GeneratorSpec::LatticeComb { lattice } => lattice_comb(lattice, &one_d(lattice)?),
            GeneratorSpec::Substitution { rule } => substitution_prefix(rule, n),
            GeneratorSpec::RudinShapiro => rudin_shapiro_comb(n),
            GeneratorSpec::CoinSigns { seed } => random_sign_comb(n, *seed),
            GeneratorSpec::FibonacciModelSet { scheme } => {
                let mut x_hi = n as f64 / scheme.density() + 10.0;
                loop {
                    let s = fibonacci_model_set(scheme, 0.0, x_hi)?;
                    if s.len() >= n {
                        let keep: Vec<bool> = (0..s.len()).map(|i| i < n).collect();
                        let prov = s.provenance.clone().param("prefix", n);
                        return Ok(s.select(&keep, prov));
                    }
                    x_hi *= 2.0;
                }
            }
            GeneratorSpec::Visible => {
                Err(Error::InvalidParameter("visible points have no one-dimensional prefix".into()))
            }
            GeneratorSpec::BernoulliGas { lattice, p, seed } => {
                bernoulli_lattice_gas(lattice, *p, &one_d(lattice)?, *seed)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden::TAU;
    use crate::pointset::ExactPosition;

    fn reals(w: &[Complex64]) -> Vec<f64> {
        w.iter().map(|c| c.re).collect()
    }

    #[test]
    fn lattice_comb_examples() {
        let z = Lattice::integer(1);
        let s = lattice_comb(&z, &AveragingRegion::centered_box(3.5, 1).unwrap()).unwrap();
        assert_eq!(s.len(), 7);
        assert!(s.weights().iter().all(|w| *w == ONE));
        let s2 = lattice_comb(&Lattice::integer(2), &AveragingRegion::centered_box(10.5, 2).unwrap()).unwrap();
        assert_eq!(s2.len(), 441);
        let l = Lattice::new(vec![vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let s3 = lattice_comb(&l, &AveragingRegion::centered_box(20.0, 2).unwrap()).unwrap();
        assert!((s3.density() - 0.5).abs() < 0.02);
    }

    #[test]
    fn motif_examples() {
        let z = Lattice::integer(1);
        let region = AveragingRegion::centered_box(10.0, 1).unwrap();
        let single = motif_comb(&z, &[MotifAtom::new(vec![0.0], 1.0)], &region).unwrap();
        let plain = lattice_comb(&z, &region).unwrap();
        assert_eq!(single.support(), plain.support());
        assert_eq!(single.weights(), plain.weights());

        let two = motif_comb(&z, &[MotifAtom::new(vec![0.0], 1.0), MotifAtom::new(vec![0.5], 1.0)], &region).unwrap();
        let half = lattice_comb(&Lattice::scaled_integers(0.5).unwrap(), &region).unwrap();
        let mut a: Vec<i64> = match two.support() {
            Support::Lattice { lattice, coords } => {
                assert!(lattice.approx_eq(&Lattice::scaled_integers(0.5).unwrap(), 0.0));
                coords.clone()
            }
            _ => panic!("expected exact positions"),
        };
        a.sort();
        let Support::Lattice { coords: b, .. } = half.support() else { unreachable!() };
        assert_eq!(&a, b);

        let two_z = Lattice::scaled_integers(2.0).unwrap();
        let alt = motif_comb(
            &two_z,
            &[MotifAtom::new(vec![0.0], 1.0), MotifAtom::new(vec![1.0], -1.0)],
            &AveragingRegion::centered_box(50.0, 1).unwrap(),
        )
        .unwrap();
        assert_eq!(alt.len(), 100);
        // weights alternate along the line
        let mut by_pos: Vec<(f64, f64)> =
            (0..alt.len()).map(|i| (alt.real_position(i)[0], alt.weights()[i].re)).collect();
        by_pos.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(by_pos.windows(2).all(|w| w[0].1 == -w[1].1));
    }

    #[test]
    fn motif_errors() {
        let z = Lattice::integer(1);
        let region = AveragingRegion::centered_box(5.0, 1).unwrap();
        assert!(matches!(motif_comb(&z, &[MotifAtom::new(vec![1.5], 1.0)], &region), Err(Error::MotifOutsideCell(_))));
        assert!(matches!(
            motif_comb(&z, &[MotifAtom::new(vec![0.25], 1.0), MotifAtom::new(vec![0.25], 2.0)], &region),
            Err(Error::DuplicatePosition(_))
        ));
        let irrational = motif_comb(&z, &[MotifAtom::new(vec![1.0 / std::f64::consts::PI], 1.0)], &region).unwrap();
        assert_eq!(irrational.support().kind(), "float");
    }

    #[test]
    fn thue_morse_first_weights() {
        let s = substitution_sequence(&SubstitutionRule::thue_morse(), 3).unwrap();
        assert_eq!(reals(s.weights()), vec![1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0]);
        assert_eq!(s.position(7), ExactPosition::Integer(vec![7]));
    }

    #[test]
    fn fibonacci_first_gaps() {
        let rule = SubstitutionRule::fibonacci();
        assert_eq!(rule.word(3).unwrap().iter().collect::<String>(), "abaab");
        let s = substitution_sequence(&rule, 4).unwrap();
        let Support::Golden(pos) = s.support() else { panic!("golden positions expected") };
        let gaps: Vec<ZTau> = pos.windows(2).take(5).map(|w| w[1] - w[0]).collect();
        assert_eq!(gaps, vec![ZTau::TAU, ZTau::ONE, ZTau::TAU, ZTau::TAU, ZTau::ONE]);
        // abaababa: five long tiles, three short ones
        let total = 5.0 * TAU + 3.0;
        assert!((s.region().volume() - total).abs() < 1e-12);
    }

    #[test]
    fn zero_iterations_single_tile() {
        for rule in [SubstitutionRule::fibonacci(), SubstitutionRule::thue_morse(), SubstitutionRule::period_doubling()]
        {
            let s = substitution_sequence(&rule, 0).unwrap();
            assert_eq!(s.len(), 1);
            assert_eq!(s.real_position(0), vec![0.0]);
        }
    }

    #[test]
    fn words_are_prefixes() {
        for rule in [SubstitutionRule::fibonacci(), SubstitutionRule::thue_morse(), SubstitutionRule::period_doubling()]
        {
            for it in 0..10 {
                let a = rule.word(it).unwrap();
                let b = rule.word(it + 1).unwrap();
                assert_eq!(&b[..a.len()], &a[..]);
            }
        }
    }

    #[test]
    fn unknown_symbol_rejected() {
        let mut rule = SubstitutionRule::thue_morse();
        rule.rules.insert('b', "bc".into());
        assert!(matches!(rule.word(2), Err(Error::UnknownSymbol('c'))));
    }

    /// ε_n = (−1)^(number of "11" blocks in binary n), overlapping.
    fn rs_by_binary(n: usize) -> f64 {
        let count = (0..usize::BITS - 1).filter(|b| (n >> b) & 3 == 3).count();
        if count % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    #[test]
    fn rudin_shapiro_examples() {
        assert_eq!(reals(&rudin_shapiro_weights(8)), vec![1.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0]);
        assert_eq!(rudin_shapiro_weights(1)[0], ONE);
    }

    #[test]
    fn rudin_shapiro_definitions_agree() {
        let w = rudin_shapiro_weights(1 << 20);
        for (n, e) in w.iter().enumerate() {
            assert_eq!(e.re, rs_by_binary(n), "n={n}");
        }
    }

    #[test]
    fn rudin_shapiro_partial_sums_bounded() {
        let w = rudin_shapiro_weights(1 << 16);
        let mut s = 0.0;
        for (i, e) in w.iter().enumerate() {
            s += e.re;
            let n = (i + 1) as f64;
            assert!(s.abs() <= 3.0 * n.sqrt(), "prefix {n}: {s}");
        }
    }

    #[test]
    fn model_set_density_and_gaps() {
        let scheme = CutProjectScheme::default();
        let s = fibonacci_model_set(&scheme, 0.0, 1000.0).unwrap();
        assert!((s.density() - TAU / SQRT5).abs() < 0.002, "{}", s.density());
        let Support::Golden(pos) = s.support() else { panic!() };
        let mut n_long = 0;
        let mut n_short = 0;
        for w in pos.windows(2) {
            match w[1] - w[0] {
                g if g == ZTau::TAU => n_long += 1,
                g if g == ZTau::ONE => n_short += 1,
                g => panic!("unexpected gap {g}"),
            }
        }
        assert!((n_long as f64 / n_short as f64 - TAU).abs() < 0.01);
    }

    #[test]
    fn narrow_window_is_sparse() {
        let scheme = CutProjectScheme::real(0.1, 0.11).unwrap();
        let s = fibonacci_model_set(&scheme, 0.0, 100_000.0).unwrap();
        let expected = 0.01 / SQRT5;
        assert!((s.density() - expected).abs() < 0.1 * expected, "{}", s.density());
    }

    #[test]
    fn empty_model_set_warns() {
        let scheme = CutProjectScheme::real(0.1, 0.1 + 1e-9).unwrap();
        let s = fibonacci_model_set(&scheme, 0.0, 2.0).unwrap();
        assert!(s.is_empty());
        assert!(!s.provenance.warnings.is_empty());
        assert!(CutProjectScheme::real(0.5, 0.5).is_err());
    }

    #[test]
    fn model_set_matches_substitution_chain() {
        let m = fibonacci_model_set(&CutProjectScheme::default(), 0.0, 500.0).unwrap();
        let s = substitution_chain(&SubstitutionRule::fibonacci(), 500.0).unwrap();
        assert_eq!(m.support(), s.support());
    }

    #[test]
    fn visible_examples() {
        let v = visible_points(2.0).unwrap();
        assert_eq!(v.len(), 8);
        let v3 = visible_points(3.0).unwrap();
        assert!(!(0..v3.len()).any(|i| v3.position(i) == ExactPosition::Integer(vec![2, 2])));
        assert!((0..v3.len()).any(|i| v3.position(i) == ExactPosition::Integer(vec![1, 0])));
        assert!(!(0..v3.len()).any(|i| v3.position(i) == ExactPosition::Integer(vec![2, 0])));
        let big = visible_points(500.0).unwrap();
        let d = big.len() as f64 / (std::f64::consts::PI * 250_000.0);
        assert!((d - 0.6079).abs() < 0.005, "{d}");
        assert!((6.0 / std::f64::consts::PI.powi(2) - 0.6079).abs() < 1e-4);
    }

    #[test]
    fn thinning_examples() {
        let z = Lattice::integer(1);
        let full = lattice_comb(&z, &AveragingRegion::centered_box(50_000.0, 1).unwrap()).unwrap();
        let all = bernoulli_thin(&full, 1.0, 3).unwrap();
        assert_eq!(all.support(), full.support());
        assert!(bernoulli_thin(&full, 0.0, 3).unwrap().is_empty());
        let half = bernoulli_thin(&full, 0.5, 3).unwrap();
        assert!((half.len() as f64 / full.len() as f64 - 0.5).abs() < 0.005);
        assert!(matches!(bernoulli_thin(&full, 1.5, 3), Err(Error::InvalidProbability(_))));
        assert!(matches!(bernoulli_thin(&full, -0.1, 3), Err(Error::InvalidProbability(_))));
    }

    #[test]
    fn lattice_gas_examples() {
        let z = Lattice::integer(1);
        let region = AveragingRegion::centered_box(50_000.0, 1).unwrap();
        let full = bernoulli_lattice_gas(&z, 1.0, &region, 9).unwrap();
        assert_eq!(full.support(), lattice_comb(&z, &region).unwrap().support());
        let gas = bernoulli_lattice_gas(&z, 0.5, &region, 42).unwrap();
        assert!((gas.density() - 0.5).abs() < 0.01);
        let again = bernoulli_lattice_gas(&z, 0.5, &region, 42).unwrap();
        assert_eq!(gas, again);
        for (a, b) in [(1, 2), (3, 4), (5, 6), (7, 8), (9, 10)] {
            let x = bernoulli_lattice_gas(&z, 0.3, &AveragingRegion::centered_box(100.0, 1).unwrap(), a).unwrap();
            let y = bernoulli_lattice_gas(&z, 0.3, &AveragingRegion::centered_box(100.0, 1).unwrap(), b).unwrap();
            assert_ne!(x.support(), y.support());
        }
    }

    #[test]
    fn complement_examples() {
        let z = Lattice::integer(1);
        let n = 50i64;
        let region = AveragingRegion::interval(-n as f64, (n + 1) as f64).unwrap();
        let full = lattice_comb(&z, &region).unwrap();
        let keep: Vec<bool> = (0..full.len())
            .map(|i| {
                let ExactPosition::Integer(c) = full.position(i) else { unreachable!() };
                c[0] % 2 == 0
            })
            .collect();
        let evens = full.select(&keep, Provenance::new("evens"));
        let odds = complement_in_lattice(&evens, &z, &region).unwrap();
        assert_eq!(odds.len() + evens.len(), full.len());
        assert!((0..odds.len()).all(|i| matches!(odds.position(i), ExactPosition::Integer(c) if c[0] % 2 != 0)));

        let empty = full.select(&vec![false; full.len()], Provenance::new("empty"));
        assert_eq!(complement_in_lattice(&empty, &z, &region).unwrap().support(), full.support());

        let tm = substitution_sequence(&SubstitutionRule::thue_morse(), 14).unwrap();
        let plus: Vec<bool> = tm.weights().iter().map(|w| w.re > 0.0).collect();
        let plus_set = tm.select(&plus, Provenance::new("tm+")).with_weights(vec![ONE; 8192]).unwrap();
        let minus = complement_in_lattice(&plus_set, &z, tm.region()).unwrap();
        assert_eq!((plus_set.len(), minus.len()), (8192, 8192));
        let minus_expected: Vec<i64> = (0..tm.len()).filter(|&i| tm.weights()[i].re < 0.0).map(|i| i as i64).collect();
        let Support::Lattice { coords, .. } = minus.support() else { unreachable!() };
        assert_eq!(coords, &minus_expected);
    }

    #[test]
    fn complement_rejects_foreign_points() {
        let z = Lattice::integer(1);
        let small = AveragingRegion::centered_box(5.0, 1).unwrap();
        let wide = lattice_comb(&z, &AveragingRegion::centered_box(10.0, 1).unwrap()).unwrap();
        match complement_in_lattice(&wide, &z, &small) {
            Err(Error::NotInLattice(p)) => assert_eq!(p, "[-10]"),
            other => panic!("{other:?}"),
        }
    }
}
