//! Finite weighted point sets with exact positions.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AveragingRegion, Lattice};
use crate::golden::ZTau;

/// Position of a single point in its exact algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactPosition {
    /// Integer coordinates relative to the set's lattice basis.
    Integer(Vec<i64>),
    /// `m + nτ` on the real line.
    Golden(ZTau),
    /// Plain floating-point coordinates; no exact displacement algebra.
    Float(Vec<f64>),
}

impl fmt::Display for ExactPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactPosition::Integer(c) => write!(f, "{c:?}"),
            ExactPosition::Golden(z) => write!(f, "{z}"),
            ExactPosition::Float(x) => write!(f, "{x:?}"),
        }
    }
}

/// Storage for the positions of a point set, one exact algebra per set.
#[derive(Clone, Debug, PartialEq)]
pub enum Support {
    /// Row-major integer coordinates, `lattice.dim()` per point.
    Lattice {
        lattice: Lattice,
        coords: Vec<i64>,
    },
    Golden(Vec<ZTau>),
    Float {
        dim: usize,
        coords: Vec<f64>,
    },
}

impl Support {
    pub fn len(&self) -> usize {
        match self {
            Support::Lattice { lattice, coords } => coords.len() / lattice.dim(),
            Support::Golden(v) => v.len(),
            Support::Float { dim, coords } => coords.len() / dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Support::Lattice { lattice, .. } => lattice.dim(),
            Support::Golden(_) => 1,
            Support::Float { dim, .. } => *dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Support::Lattice { .. } => "lattice",
            Support::Golden(_) => "golden",
            Support::Float { .. } => "float",
        }
    }

    pub fn position(&self, i: usize) -> ExactPosition {
        match self {
            Support::Lattice { lattice, coords } => {
                let n = lattice.dim();
                ExactPosition::Integer(coords[i * n..(i + 1) * n].to_vec())
            }
            Support::Golden(v) => ExactPosition::Golden(v[i]),
            Support::Float { dim, coords } => ExactPosition::Float(coords[i * dim..(i + 1) * dim].to_vec()),
        }
    }

    pub fn real_position(&self, i: usize) -> Vec<f64> {
        match self {
            Support::Lattice { lattice, coords } => {
                let n = lattice.dim();
                lattice.point(&coords[i * n..(i + 1) * n])
            }
            Support::Golden(v) => vec![v[i].value()],
            Support::Float { dim, coords } => coords[i * dim..(i + 1) * dim].to_vec(),
        }
    }

    fn select(&self, keep: &[bool]) -> Support {
        match self {
            Support::Lattice { lattice, coords } => {
                let n = lattice.dim();
                let coords =
                    coords.chunks(n).zip(keep).filter(|(_, &k)| k).flat_map(|(c, _)| c.iter().copied()).collect();
                Support::Lattice { lattice: lattice.clone(), coords }
            }
            Support::Golden(v) => Support::Golden(v.iter().zip(keep).filter(|(_, &k)| k).map(|(z, _)| *z).collect()),
            Support::Float { dim, coords } => Support::Float {
                dim: *dim,
                coords: coords
                    .chunks(*dim)
                    .zip(keep)
                    .filter(|(_, &k)| k)
                    .flat_map(|(c, _)| c.iter().copied())
                    .collect(),
            },
        }
    }

    /// Fails on the first repeated position.
    fn check_distinct(&self) -> Result<()> {
        let dup = |i: usize| Err(Error::DuplicatePosition(self.position(i).to_string()));
        match self {
            Support::Lattice { lattice, coords } => {
                let mut seen = HashSet::with_capacity(self.len());
                for (i, c) in coords.chunks(lattice.dim()).enumerate() {
                    if !seen.insert(c) {
                        return dup(i);
                    }
                }
            }
            Support::Golden(v) => {
                let mut seen = HashSet::with_capacity(v.len());
                for (i, z) in v.iter().enumerate() {
                    if !seen.insert(*z) {
                        return dup(i);
                    }
                }
            }
            Support::Float { dim, coords } => {
                let mut seen = HashSet::with_capacity(self.len());
                for (i, c) in coords.chunks(*dim).enumerate() {
                    let bits: Vec<u64> = c.iter().map(|v| (v + 0.0).to_bits()).collect();
                    if !seen.insert(bits) {
                        return dup(i);
                    }
                }
            }
        }
        Ok(())
    }
}

/// How a set's positions are represented exactly; written to the JSON
/// sidecar so that CSV positions can be snapped back on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Representation {
    Lattice {
        basis: Vec<Vec<f64>>,
    },
    /// `star_bound` bounds `|m + nτ′|` over the set, which makes the
    /// recovery of `(m, n)` from `m + nτ` unique.
    Golden {
        star_bound: f64,
    },
    Float {
        dim: usize,
    },
}

/// Where a point set came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub parameters: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Provenance {
    pub fn new(generator: impl Into<String>) -> Self {
        Provenance { generator: generator.into(), ..Default::default() }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).expect("parameter serializes");
        self.parameters.insert(key.to_string(), v);
        self
    }
}

/// A finite weighted Dirac comb `Σ w_x δ_x` restricted to a region.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPointSet {
    support: Support,
    weights: Vec<Complex64>,
    region: AveragingRegion,
    pub provenance: Provenance,
}

impl WeightedPointSet {
    /// Builds a set, checking that positions are distinct and inside
    /// `region`.
    pub fn new(
        support: Support,
        weights: Vec<Complex64>,
        region: AveragingRegion,
        provenance: Provenance,
    ) -> Result<Self> {
        if weights.len() != support.len() {
            return Err(Error::InvalidParameter(format!("{} weights for {} points", weights.len(), support.len())));
        }
        if region.dim != support.dim() {
            return Err(Error::DimensionMismatch { expected: support.dim(), found: region.dim });
        }
        support.check_distinct()?;
        if let Some(i) = (0..support.len()).find(|&i| !region.contains(&support.real_position(i))) {
            return Err(Error::InvalidRegion(format!(
                "point {} lies outside the declared region",
                support.position(i)
            )));
        }
        Ok(WeightedPointSet { support, weights, region, provenance })
    }

    /// Builds a set whose invariants are guaranteed by the caller.
    pub(crate) fn new_unchecked(
        support: Support,
        weights: Vec<Complex64>,
        region: AveragingRegion,
        provenance: Provenance,
    ) -> Self {
        debug_assert_eq!(support.len(), weights.len());
        WeightedPointSet { support, weights, region, provenance }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn region(&self) -> &AveragingRegion {
        &self.region
    }

    pub fn position(&self, i: usize) -> ExactPosition {
        self.support.position(i)
    }

    pub fn real_position(&self, i: usize) -> Vec<f64> {
        self.support.real_position(i)
    }

    /// The lattice carrying the positions, if the set is lattice-supported.
    pub fn lattice(&self) -> Option<&Lattice> {
        match &self.support {
            Support::Lattice { lattice, .. } => Some(lattice),
            _ => None,
        }
    }

    pub fn representation(&self) -> Representation {
        match &self.support {
            Support::Lattice { lattice, .. } => Representation::Lattice { basis: lattice.rows() },
            Support::Golden(v) => Representation::Golden {
                star_bound: v.iter().map(|z| z.star_value().abs()).fold(0.0, f64::max).max(1.0),
            },
            Support::Float { dim, .. } => Representation::Float { dim: *dim },
        }
    }

    /// Number of points per unit volume of the region.
    pub fn density(&self) -> f64 {
        self.len() as f64 / self.region.volume()
    }

    /// Keeps the points with `keep[i]`.
    pub fn select(&self, keep: &[bool], provenance: Provenance) -> WeightedPointSet {
        assert_eq!(keep.len(), self.len());
        let weights = self.weights.iter().zip(keep).filter(|(_, &k)| k).map(|(w, _)| *w).collect();
        WeightedPointSet::new_unchecked(self.support.select(keep), weights, self.region.clone(), provenance)
    }

    /// `ω|_A`: the points lying inside `region`, now declared on `region`.
    pub fn restrict(&self, region: &AveragingRegion) -> Result<WeightedPointSet> {
        if region.dim != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: region.dim });
        }
        let keep: Vec<bool> = (0..self.len()).map(|i| region.contains(&self.real_position(i))).collect();
        let mut out = self.select(&keep, self.provenance.clone());
        out.region = region.clone();
        Ok(out)
    }

    /// Same positions, new weights.
    pub fn with_weights(&self, weights: Vec<Complex64>) -> Result<WeightedPointSet> {
        if weights.len() != self.len() {
            return Err(Error::InvalidParameter(format!("{} weights for {} points", weights.len(), self.len())));
        }
        Ok(WeightedPointSet { weights, ..self.clone() })
    }

    /// Same positions and weights, declared on another region.
    pub fn with_region(&self, region: AveragingRegion) -> Result<WeightedPointSet> {
        WeightedPointSet::new(self.support.clone(), self.weights.clone(), region, self.provenance.clone())
    }

    /// Shifts a lattice-supported set by integer coordinates `shift`,
    /// moving the region along with it.
    pub fn translate_lattice(&self, shift: &[i64]) -> Result<WeightedPointSet> {
        let Support::Lattice { lattice, coords } = &self.support else {
            return Err(Error::IncompatibleAlgebra("translation by lattice vector".into()));
        };
        let n = lattice.dim();
        if shift.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: shift.len() });
        }
        let coords = coords.iter().enumerate().map(|(i, c)| c + shift[i % n]).collect();
        let offset = lattice.point(shift);
        let center: Vec<f64> = self.region.center().iter().zip(&offset).map(|(c, o)| c + o).collect();
        let region = self.region.clone().with_center(center)?;
        Ok(WeightedPointSet {
            support: Support::Lattice { lattice: lattice.clone(), coords },
            weights: self.weights.clone(),
            region,
            provenance: self.provenance.clone(),
        })
    }
}
