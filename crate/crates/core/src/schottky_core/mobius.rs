use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Finite(C64),
    Infinity,
}

impl Point {
    pub fn finite(re: f64, im: f64) -> Self {
        Point::Finite(C64::new(re, im))
    }

    pub fn as_finite(&self) -> Option<C64> {
        match *self {
            Point::Finite(z) => Some(z),
            Point::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

impl From<C64> for Point {
    fn from(z: C64) -> Self {
        Point::Finite(z)
    }
}

/// Image of a finite point together with the first two derivatives of the map there.
#[derive(Debug, Clone, Copy)]
pub struct Image {
    pub z: C64,
    pub d1: C64,
    pub d2: C64,
    /// The denominator `cx + d`.
    pub den: C64,
}

/// Möbius map `z -> (az + b)/(cz + d)` stored with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl MobiusMap {
    /// Builds the map from arbitrary entries and rescales to unit determinant
    /// using the principal square root.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        if !det.is_finite() || det.norm() <= 1e-300 || det.norm() <= 1e-14 * scale * scale {
            return Err(Error::DegenerateMap(format!("determinant {det} is zero")));
        }
        let s = det.sqrt();
        Ok(MobiusMap {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        MobiusMap {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    pub fn translation(t: C64) -> Self {
        MobiusMap {
            b: t,
            ..Self::identity()
        }
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    /// Matrix product `self * other`, i.e. the map `z -> self(other(z))`.
    ///
    /// Not renormalized: the determinant of a long word is lost to cancellation
    /// long before the entries lose accuracy.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn apply(&self, z: Point) -> Point {
        match z {
            Point::Infinity => {
                if self.c == C64::new(0.0, 0.0) {
                    Point::Infinity
                } else {
                    Point::Finite(self.a / self.c)
                }
            }
            Point::Finite(z) => {
                let den = self.c * z + self.d;
                if den == C64::new(0.0, 0.0) {
                    Point::Infinity
                } else {
                    Point::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Image of a finite point with `γ'(x) = (cx+d)^-2` and `γ''(x) = -2c (cx+d)^-3`.
    #[inline]
    pub fn image(&self, x: C64) -> Image {
        let den = self.c * x + self.d;
        let inv = den.inv();
        let inv2 = inv * inv;
        Image {
            z: (self.a * x + self.b) * inv,
            d1: inv2,
            d2: -2.0 * self.c * inv2 * inv,
            den,
        }
    }

    /// Largest entry-wise distance to another map, up to the overall sign.
    pub fn distance(&self, other: &MobiusMap) -> f64 {
        let plus = [
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
        ];
        let minus = [
            self.a + other.a,
            self.b + other.b,
            self.c + other.c,
            self.d + other.d,
        ];
        let p = plus.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let m = minus.iter().map(|z| z.norm()).fold(0.0, f64::max);
        p.min(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_fixes_points() {
        let z = Point::finite(3.0, 4.0);
        assert_eq!(MobiusMap::identity().apply(z), z);
        assert_eq!(MobiusMap::identity().apply(Point::Infinity), Point::Infinity);
    }

    #[test]
    fn infinity_goes_to_a_over_c() {
        let m = MobiusMap::new(
            C64::new(2.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
        )
        .unwrap();
        let w = m.apply(Point::Infinity).as_finite().unwrap();
        assert!((w - 2.0).norm() < 1e-15);
        let t = MobiusMap::translation(C64::new(1.0, 1.0));
        assert_eq!(t.apply(Point::Infinity), Point::Infinity);
    }

    #[test]
    fn pole_maps_to_infinity() {
        let m = MobiusMap::new(
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        )
        .unwrap();
        assert_eq!(m.apply(Point::finite(0.0, 0.0)), Point::Infinity);
    }

    #[test]
    fn singular_matrix_rejected() {
        let one = C64::new(1.0, 0.0);
        assert!(MobiusMap::new(one, one, one, one).is_err());
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let m = MobiusMap::new(
            C64::new(1.0, 0.5),
            C64::new(0.2, 0.0),
            C64::new(0.3, -0.1),
            C64::new(1.1, 0.0),
        )
        .unwrap();
        let x = C64::new(0.4, 0.3);
        let h = 1e-6;
        let im = m.image(x);
        let fd = (m.image(x + h).z - m.image(x - h).z) / (2.0 * h);
        assert!((fd - im.d1).norm() < 1e-8);
        let fd2 = (m.image(x + h).d1 - m.image(x - h).d1) / (2.0 * h);
        assert!((fd2 - im.d2).norm() < 1e-7);
    }
}
