//! Lattices, dual lattices, averaging regions and fundamental-domain folding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bases with `|det|` below this are rejected.
pub const MIN_ABS_DET: f64 = 1e-12;

/// A full-rank lattice in R^n. The basis is an n×n matrix whose *columns*
/// are the generators; it is stored and (de)serialized as a list of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct Lattice {
    dim: usize,
    basis: Vec<f64>,
    inverse: Vec<f64>,
    det: f64,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    basis: Vec<Vec<f64>>,
}

impl TryFrom<LatticeRepr> for Lattice {
    type Error = Error;
    fn try_from(repr: LatticeRepr) -> Result<Self> {
        Lattice::new(repr.basis)
    }
}

impl From<Lattice> for LatticeRepr {
    fn from(l: Lattice) -> Self {
        LatticeRepr { basis: l.rows() }
    }
}

/// Gauss-Jordan inversion with partial pivoting. Returns `(inverse, det)`.
fn invert(n: usize, m: &[f64]) -> (Vec<f64>, f64) {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs())).unwrap();
        let p = a[pivot * n + col];
        if p == 0.0 {
            return (inv, 0.0);
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
                inv.swap(pivot * n + j, col * n + j);
            }
            det = -det;
        }
        det *= p;
        for j in 0..n {
            a[col * n + j] /= p;
            inv[col * n + j] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i * n + col];
            if f != 0.0 {
                for j in 0..n {
                    a[i * n + j] -= f * a[col * n + j];
                    inv[i * n + j] -= f * inv[col * n + j];
                }
            }
        }
    }
    (inv, det)
}

impl Lattice {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParameter(format!(
                "lattice basis must be a nonempty square matrix, got {} rows",
                dim
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("lattice basis has non-finite entries".into()));
        }
        let basis: Vec<f64> = rows.into_iter().flatten().collect();
        let (inverse, det) = invert(dim, &basis);
        if det.abs() < MIN_ABS_DET {
            return Err(Error::SingularBasis { det });
        }
        Ok(Lattice { dim, basis, inverse, det })
    }

    /// The integer lattice Z^n.
    pub fn integer(dim: usize) -> Self {
        let mut rows = vec![vec![0.0; dim]; dim];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        Lattice::new(rows).expect("identity basis")
    }

    /// One-dimensional lattice `spacing · Z`.
    pub fn scaled_integers(spacing: f64) -> Result<Self> {
        Lattice::new(vec![vec![spacing]])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.basis.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.basis[row * self.dim + col]
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// Points per unit volume, `1/|det B|`.
    pub fn density(&self) -> f64 {
        1.0 / self.det.abs()
    }

    /// The dual lattice, with basis `(Bᵀ)⁻¹`.
    pub fn dual(&self) -> Lattice {
        let n = self.dim;
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.inverse[j * n + i];
            }
        }
        Lattice::new(rows).expect("inverse of a nonsingular basis is nonsingular")
    }

    /// The lattice with every generator divided by `q`.
    pub fn refined(&self, q: u32) -> Lattice {
        let rows = self.rows().into_iter().map(|r| r.into_iter().map(|v| v / q as f64).collect()).collect();
        Lattice::new(rows).expect("refinement keeps the basis nonsingular")
    }

    /// Cartesian position `B·c` of integer coordinates `c`.
    pub fn point(&self, coords: &[i64]) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|j| self.basis[i * n + j] * coords[j] as f64).sum()).collect()
    }

    /// Cartesian position `B·c` of real basis coordinates `c`.
    pub fn point_real(&self, coords: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|j| self.basis[i * n + j] * coords[j]).sum()).collect()
    }

    /// Basis coordinates `B⁻¹·x` of a Cartesian vector.
    pub fn coords_of(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|j| self.inverse[i * n + j] * x[j]).sum()).collect()
    }

    /// Coordinates `Bᵀ·k` of a wave vector with respect to the dual basis.
    /// For integer lattice coordinates `c`, `k·(B c) = (Bᵀk)·c`.
    pub fn dual_coords_of(&self, k: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|j| self.basis[j * n + i] * k[j]).sum()).collect()
    }

    /// Entrywise comparison of bases.
    pub fn approx_eq(&self, other: &Lattice, tol: f64) -> bool {
        self.dim == other.dim && self.basis.iter().zip(&other.basis).all(|(a, b)| (a - b).abs() <= tol)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: len });
        }
        Ok(())
    }
}

/// Dual lattice of `lattice`.
pub fn dual_lattice(lattice: &Lattice) -> Lattice {
    lattice.dual()
}

/// Density `1/|det B|` of `lattice`.
pub fn density(lattice: &Lattice) -> f64 {
    lattice.density()
}

/// Reduces a coordinate into `[0,1)`. Values within 1e-12 below an integer
/// snap to that integer so folding stays idempotent under round-off.
pub(crate) fn reduce_unit(c: f64) -> f64 {
    let r = c - c.floor();
    if r >= 1.0 - 1e-12 {
        0.0
    } else {
        r
    }
}

/// Dual-basis coordinates of `k` folded into `[0,1)^n`.
pub fn fold_coords(k: &[f64], dual: &Lattice) -> Result<Vec<f64>> {
    dual.check_dim(k.len())?;
    Ok(dual.coords_of(k).into_iter().map(reduce_unit).collect())
}

/// Representative of `k` modulo `dual` inside the half-open fundamental
/// parallelepiped spanned by the basis of `dual`.
pub fn fold_vector(k: &[f64], dual: &Lattice) -> Result<Vec<f64>> {
    let c = fold_coords(k, dual)?;
    let n = dual.dim();
    Ok((0..n).map(|i| (0..n).map(|j| dual.entry(i, j) * c[j]).sum()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    /// Closed Euclidean ball `|x − c| ≤ r`.
    Ball,
    /// Half-open cube `[c − r, c + r)^n`.
    Box,
}

/// A ball or box of radius `r` in R^n, centred at the origin unless a
/// centre is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragingRegion {
    pub kind: RegionKind,
    pub radius: f64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    center: Vec<f64>,
}

impl AveragingRegion {
    pub fn new(kind: RegionKind, radius: f64, dim: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || dim == 0 {
            return Err(Error::InvalidRegion(format!("radius {radius}, dim {dim}")));
        }
        Ok(AveragingRegion { kind, radius, dim, center: Vec::new() })
    }

    pub fn centered_box(radius: f64, dim: usize) -> Result<Self> {
        Self::new(RegionKind::Box, radius, dim)
    }

    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        Self::new(RegionKind::Ball, radius, dim)
    }

    /// The half-open interval `[lo, hi)`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidRegion(format!("empty interval [{lo}, {hi})")));
        }
        Self::new(RegionKind::Box, (hi - lo) / 2.0, 1)?.with_center(vec![(lo + hi) / 2.0])
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Result<Self> {
        if center.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: center.len() });
        }
        self.center = if center.iter().all(|&c| c == 0.0) { Vec::new() } else { center };
        Ok(self)
    }

    pub fn center(&self) -> Vec<f64> {
        if self.center.is_empty() {
            vec![0.0; self.dim]
        } else {
            self.center.clone()
        }
    }

    pub fn volume(&self) -> f64 {
        let r = self.radius;
        match self.kind {
            RegionKind::Box => (2.0 * r).powi(self.dim as i32),
            RegionKind::Ball => unit_ball_volume(self.dim) * r.powi(self.dim as i32),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        let c = |i: usize| self.center.get(i).copied().unwrap_or(0.0);
        match self.kind {
            RegionKind::Box => x.iter().enumerate().all(|(i, &v)| {
                let lo = c(i) - self.radius;
                v >= lo && v < c(i) + self.radius
            }),
            RegionKind::Ball => {
                let d2: f64 = x.iter().enumerate().map(|(i, &v)| (v - c(i)).powi(2)).sum();
                d2 <= self.radius * self.radius
            }
        }
    }

    /// Axis-aligned bounds `(lo, hi)` per coordinate.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.center().into_iter().map(|c| (c - self.radius, c + self.radius)).collect()
    }

    /// `vol(A ∩ (A − z))`, the volume available to pairs at displacement `z`.
    pub fn overlap_volume(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: z.len() });
        }
        let r = self.radius;
        Ok(match self.kind {
            RegionKind::Box => z.iter().map(|&zi| (2.0 * r - zi.abs()).max(0.0)).product(),
            RegionKind::Ball => {
                let d = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if d >= 2.0 * r {
                    return Ok(0.0);
                }
                match self.dim {
                    1 => 2.0 * r - d,
                    2 => 2.0 * r * r * (d / (2.0 * r)).acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt(),
                    3 => std::f64::consts::PI * (4.0 * r + d) * (2.0 * r - d).powi(2) / 12.0,
                    n => {
                        return Err(Error::InvalidRegion(format!("ball overlap volume not available in dimension {n}")))
                    }
                }
            }
        })
    }
}

fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// Integer coordinates of all lattice points inside `region`, in
/// lexicographic order.
pub fn region_points(lattice: &Lattice, region: &AveragingRegion) -> Result<Vec<Vec<i64>>> {
    let n = lattice.dim();
    if region.dim != n {
        return Err(Error::DimensionMismatch { expected: n, found: region.dim });
    }
    let bounds = region.bounds();
    // Coordinate ranges from the images of the bounding-box corners.
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for corner in 0..(1usize << n) {
        let x: Vec<f64> = (0..n).map(|i| if corner >> i & 1 == 1 { bounds[i].1 } else { bounds[i].0 }).collect();
        for (j, c) in lattice.coords_of(&x).into_iter().enumerate() {
            lo[j] = lo[j].min(c);
            hi[j] = hi[j].max(c);
        }
    }
    let lo: Vec<i64> = lo.iter().map(|v| v.floor() as i64 - 1).collect();
    let hi: Vec<i64> = hi.iter().map(|v| v.ceil() as i64 + 1).collect();

    let mut out = Vec::new();
    let mut c = lo.clone();
    loop {
        if region.contains(&lattice.point(&c)) {
            out.push(c.clone());
        }
        // odometer, last coordinate fastest
        let mut axis = n;
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            if c[axis] < hi[axis] {
                c[axis] += 1;
                break;
            }
            c[axis] = lo[axis];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lat(rows: &[&[f64]]) -> Lattice {
        Lattice::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn dual_examples() {
        assert_eq!(lat(&[&[1.0]]).dual().rows(), vec![vec![1.0]]);
        let d = lat(&[&[2.0, 0.0], &[0.0, 1.0]]).dual();
        assert_eq!(d.rows(), vec![vec![0.5, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn dual_products_are_integer() {
        let l = lat(&[&[2.0, 0.0], &[1.0, 1.0]]);
        let d = l.dual();
        // 100 pseudo-random integer combinations on each side
        let mut s = 12345u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) % 21) as i64 - 10
        };
        for _ in 0..100 {
            let u = d.point(&[next(), next()]);
            let v = l.point(&[next(), next()]);
            let dot = u[0] * v[0] + u[1] * v[1];
            assert!((dot - dot.round()).abs() < 1e-9, "{dot}");
        }
    }

    #[test]
    fn singular_basis_rejected() {
        assert!(matches!(Lattice::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]]), Err(Error::SingularBasis { .. })));
        assert!(Lattice::new(vec![vec![1e-13]]).is_err());
    }

    #[test]
    fn density_examples() {
        assert_eq!(density(&lat(&[&[1.0]])), 1.0);
        let l = lat(&[&[2.0, 0.0], &[1.0, 1.0]]);
        assert!((density(&l) - 0.5).abs() < 1e-15);
        let region = AveragingRegion::centered_box(50.0, 2).unwrap();
        let count = region_points(&l, &region).unwrap().len() as f64;
        assert!((count / region.volume() - 0.5).abs() < 0.02);
    }

    #[test]
    fn dual_density_is_abs_det() {
        let l = lat(&[&[2.0, 0.3], &[1.0, 1.7]]);
        assert!((l.dual().density() - l.det().abs()).abs() < 1e-12);
    }

    #[test]
    fn fold_examples() {
        let z = Lattice::integer(1);
        assert!((fold_vector(&[1.7], &z).unwrap()[0] - 0.7).abs() < 1e-12);
        assert_eq!(fold_vector(&[-0.25], &z).unwrap(), vec![0.75]);
        let f = fold_vector(&[1.2, -0.3], &Lattice::integer(2)).unwrap();
        assert!((f[0] - 0.2).abs() < 1e-12 && (f[1] - 0.7).abs() < 1e-12);
        assert!(matches!(fold_vector(&[1.0, 2.0], &z), Err(Error::DimensionMismatch { .. })));
        assert_eq!(fold_vector(&[-1e-18], &z).unwrap(), vec![0.0]);
    }

    #[test]
    fn region_point_examples() {
        let z = Lattice::integer(1);
        let pts = region_points(&z, &AveragingRegion::centered_box(2.5, 1).unwrap()).unwrap();
        assert_eq!(pts, vec![vec![-2], vec![-1], vec![0], vec![1], vec![2]]);

        let z2 = Lattice::integer(2);
        let ball = region_points(&z2, &AveragingRegion::ball(1.5, 2).unwrap()).unwrap();
        assert_eq!(ball.len(), 9);
        let mut sorted = ball.clone();
        sorted.sort();
        assert_eq!(sorted, ball);

        let l = lat(&[&[2.0, 0.0], &[1.0, 1.0]]);
        let r = AveragingRegion::centered_box(10.0, 2).unwrap();
        let n = region_points(&l, &r).unwrap().len() as f64;
        assert!((n / 400.0 - 0.5).abs() < 0.03);
    }

    #[test]
    fn half_open_box() {
        let z = Lattice::integer(1);
        let pts = region_points(&z, &AveragingRegion::centered_box(50.0, 1).unwrap()).unwrap();
        assert_eq!(pts.len(), 100);
        assert_eq!(pts[0], vec![-50]);
        let iv = AveragingRegion::interval(0.0, 10.0).unwrap();
        let pts = region_points(&z, &iv).unwrap();
        assert_eq!(pts.first(), Some(&vec![0]));
        assert_eq!(pts.last(), Some(&vec![9]));
    }

    #[test]
    fn count_converges_to_density() {
        let l = lat(&[&[1.3, 0.4], &[-0.2, 0.9]]);
        let mut prev = f64::INFINITY;
        for r in [10.0, 20.0, 40.0] {
            let region = AveragingRegion::ball(r, 2).unwrap();
            let n = region_points(&l, &region).unwrap().len() as f64;
            let err = (n / region.volume() - l.density()).abs();
            assert!(err <= 4.0 / r, "r={r} err={err}");
            assert!(err <= prev * 1.5 + 1e-3);
            prev = err;
        }
    }

    #[test]
    fn region_volumes() {
        assert_eq!(AveragingRegion::ball(3.0, 1).unwrap().volume(), 6.0);
        assert_eq!(AveragingRegion::centered_box(3.0, 2).unwrap().volume(), 36.0);
        let b2 = AveragingRegion::ball(2.0, 2).unwrap();
        assert!((b2.volume() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((b2.overlap_volume(&[0.0, 0.0]).unwrap() - b2.volume()).abs() < 1e-12);
        assert_eq!(b2.overlap_volume(&[4.0, 0.0]).unwrap(), 0.0);
        let b3 = AveragingRegion::ball(1.0, 3).unwrap();
        assert!((b3.overlap_volume(&[0.0, 0.0, 0.0]).unwrap() - b3.volume()).abs() < 1e-12);
        assert!(AveragingRegion::new(RegionKind::Ball, -1.0, 1).is_err());
    }

    #[test]
    fn ball_overlap_matches_monte_carlo() {
        // Riemann sum of the lens area on a fine grid
        let r = 1.0;
        let d = 0.7;
        let h = 0.002;
        let mut area = 0.0;
        let mut x = -1.0;
        while x < 1.0 {
            let mut y = -1.0;
            while y < 1.0 {
                let (px, py) = (x + h / 2.0, y + h / 2.0);
                if px * px + py * py <= 1.0 && (px + d) * (px + d) + py * py <= 1.0 {
                    area += h * h;
                }
                y += h;
            }
            x += h;
        }
        let exact = AveragingRegion::ball(r, 2).unwrap().overlap_volume(&[d, 0.0]).unwrap();
        assert!((area - exact).abs() < 5e-3, "{area} vs {exact}");
    }

    proptest! {
        #[test]
        fn dual_is_involution(a in 0.5f64..3.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in 0.5f64..3.0) {
            prop_assume!((a * d - b * c).abs() > 0.2);
            let l = Lattice::new(vec![vec![a, b], vec![c, d]]).unwrap();
            prop_assert!(l.dual().dual().approx_eq(&l, 1e-12));
            prop_assert!((l.density() * l.dual().density() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn fold_is_idempotent(k0 in -50.0f64..50.0, k1 in -50.0f64..50.0) {
            let d = Lattice::new(vec![vec![0.5, 0.1], vec![-0.2, 1.0]]).unwrap();
            let f = fold_vector(&[k0, k1], &d).unwrap();
            let c = d.coords_of(&f);
            prop_assert!(c.iter().all(|&v| (-1e-12..1.0).contains(&v)));
            let ff = fold_vector(&f, &d).unwrap();
            prop_assert!((ff[0] - f[0]).abs() < 1e-9 && (ff[1] - f[1]).abs() < 1e-9);
        }
    }
}
