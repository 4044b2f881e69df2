//! Exact arithmetic in the ring Z[τ], τ = (1+√5)/2.
//!
//! Elements are stored as integer pairs `(a, b)` meaning `a + bτ`. Ordering,
//! equality and sign tests are exact; floating point only appears in
//! [`ZTau::value`] and [`ZTau::star_value`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// The golden ratio τ = (1+√5)/2.
pub const TAU: f64 = 1.618_033_988_749_895;
/// The algebraic conjugate τ′ = (1−√5)/2 = 1 − τ.
pub const TAU_CONJ: f64 = -0.618_033_988_749_895;
pub const SQRT5: f64 = 2.236_067_977_499_79;

/// An element `a + bτ` of Z[τ].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZTau {
    pub a: i64,
    pub b: i64,
}

/// Sign of `u + v√5` for integers `u`, `v`.
fn sign_surd(u: i128, v: i128) -> Ordering {
    match (u.cmp(&0), v.cmp(&0)) {
        (Ordering::Equal, s) | (s, Ordering::Equal) => s,
        (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
        (Ordering::Less, Ordering::Less) => Ordering::Less,
        (Ordering::Greater, Ordering::Less) => (u * u).cmp(&(5 * v * v)),
        (Ordering::Less, Ordering::Greater) => (5 * v * v).cmp(&(u * u)),
    }
}

impl ZTau {
    pub const ZERO: ZTau = ZTau { a: 0, b: 0 };
    pub const ONE: ZTau = ZTau { a: 1, b: 0 };
    pub const TAU: ZTau = ZTau { a: 0, b: 1 };

    pub const fn new(a: i64, b: i64) -> Self {
        ZTau { a, b }
    }

    pub const fn from_int(a: i64) -> Self {
        ZTau { a, b: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// Real value `a + bτ`.
    pub fn value(&self) -> f64 {
        self.a as f64 + self.b as f64 * TAU
    }

    /// Galois conjugate `a + bτ′` as an element of Z[τ] (τ′ = 1 − τ).
    pub fn star(&self) -> ZTau {
        ZTau::new(self.a + self.b, -self.b)
    }

    /// Real value of the star image `a + bτ′`.
    pub fn star_value(&self) -> f64 {
        self.a as f64 + self.b as f64 * TAU_CONJ
    }

    /// Field norm `(a + bτ)(a + bτ′) = a² + ab − b²`.
    pub fn norm(&self) -> i64 {
        self.a * self.a + self.a * self.b - self.b * self.b
    }

    /// Exact sign of the real value.
    pub fn signum(&self) -> Ordering {
        // 2(a + bτ) = (2a + b) + b√5
        sign_surd(2 * self.a as i128 + self.b as i128, self.b as i128)
    }

    /// Exact sign of the star image.
    pub fn star_signum(&self) -> Ordering {
        sign_surd(2 * self.a as i128 + self.b as i128, -(self.b as i128))
    }

    pub fn abs(&self) -> ZTau {
        if self.signum() == Ordering::Less {
            -*self
        } else {
            *self
        }
    }

    /// Recovers the unique element within `tol` of `x` whose star image lies
    /// in `[-star_bound, star_bound]`, if there is one.
    ///
    /// Uniqueness holds whenever `4·tol·star_bound < 1`, because a nonzero
    /// element of Z[τ] has norm of absolute value at least one.
    pub fn snap(x: f64, star_bound: f64, tol: f64) -> Option<ZTau> {
        // x − s = b(τ − τ′) = b√5 for s the star value
        let b_lo = ((x - star_bound) / SQRT5).floor() as i64 - 1;
        let b_hi = ((x + star_bound) / SQRT5).ceil() as i64 + 1;
        let mut found = None;
        for b in b_lo..=b_hi {
            let a = (x - b as f64 * TAU).round() as i64;
            let z = ZTau::new(a, b);
            if (z.value() - x).abs() <= tol && z.star_value().abs() <= star_bound + tol {
                if found.is_some() {
                    return None;
                }
                found = Some(z);
            }
        }
        found
    }
}

impl Ord for ZTau {
    /// Orders by real value; exact because τ is irrational.
    fn cmp(&self, other: &Self) -> Ordering {
        (*self - *other).signum()
    }
}

impl PartialOrd for ZTau {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for ZTau {
    type Output = ZTau;
    fn add(self, rhs: ZTau) -> ZTau {
        ZTau::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl Sub for ZTau {
    type Output = ZTau;
    fn sub(self, rhs: ZTau) -> ZTau {
        ZTau::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl Neg for ZTau {
    type Output = ZTau;
    fn neg(self) -> ZTau {
        ZTau::new(-self.a, -self.b)
    }
}

impl Mul for ZTau {
    type Output = ZTau;
    // τ² = τ + 1
    fn mul(self, rhs: ZTau) -> ZTau {
        let bd = self.b * rhs.b;
        ZTau::new(self.a * rhs.a + bd, self.a * rhs.b + self.b * rhs.a + bd)
    }
}

impl fmt::Display for ZTau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}τ", self.a, self.b)
    }
}
