//! Points of the Riemann sphere, the chordal metric and affine changes of
//! coordinates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A point of the Riemann sphere. Infinity is a tag, never a large float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

pub use SpherePoint::{Finite, Infinity};

impl SpherePoint {
    pub fn new(re: f64, im: f64) -> Self {
        Finite(Complex64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            Finite(z) => Some(z),
            Infinity => None,
        }
    }

    /// Coordinate in the chart `w = 1/z`.
    pub fn inverted(&self) -> SpherePoint {
        match *self {
            Infinity => Finite(Complex64::new(0.0, 0.0)),
            Finite(z) if z.norm_sqr() == 0.0 => Infinity,
            Finite(z) => Finite(z.inv()),
        }
    }

    /// Image on the sphere of radius one in R^3 (north pole = infinity).
    /// Euclidean distance between embedded points equals [`sphere_dist`].
    pub fn embed(&self) -> [f64; 3] {
        match *self {
            Infinity => [0.0, 0.0, 1.0],
            Finite(z) => {
                let r2 = z.norm_sqr();
                if !r2.is_finite() {
                    return [0.0, 0.0, 1.0];
                }
                let s = 1.0 + r2;
                [2.0 * z.re / s, 2.0 * z.im / s, (r2 - 1.0) / s]
            }
        }
    }

    /// Inverse of [`SpherePoint::embed`] for points on the unit sphere.
    pub fn from_embedded(p: [f64; 3]) -> SpherePoint {
        let d = 1.0 - p[2];
        if d <= 1e-300 {
            Infinity
        } else {
            Finite(Complex64::new(p[0] / d, p[1] / d))
        }
    }

    /// Promote a complex number, mapping non-finite values to infinity.
    pub fn from_complex(z: Complex64) -> SpherePoint {
        if z.re.is_finite() && z.im.is_finite() {
            Finite(z)
        } else {
            Infinity
        }
    }
}

impl From<Complex64> for SpherePoint {
    fn from(z: Complex64) -> Self {
        SpherePoint::from_complex(z)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infinity => write!(f, "inf"),
            Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

/// Serialized as `[re, im]`, or the string `"inf"`.
impl Serialize for SpherePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Infinity => s.serialize_str("inf"),
            Finite(z) => [z.re, z.im].serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SpherePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([f64; 2]),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Pair([re, im]) => Ok(Finite(Complex64::new(re, im))),
            Repr::Tag(t) if t == "inf" => Ok(Infinity),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!("bad sphere point {t:?}"))),
        }
    }
}

/// Chordal distance `2|a-b| / sqrt((1+|a|^2)(1+|b|^2))`, extended to infinity.
pub fn sphere_dist(a: SpherePoint, b: SpherePoint) -> f64 {
    match (a, b) {
        (Infinity, Infinity) => 0.0,
        (Finite(z), Infinity) | (Infinity, Finite(z)) => 2.0 / (1.0 + z.norm_sqr()).sqrt(),
        (Finite(z), Finite(w)) => {
            // Large moduli lose everything in the direct formula.
            if z.norm() > 1e8 || w.norm() > 1e8 {
                let (pa, pb) = (a.embed(), b.embed());
                return ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2))
                    .sqrt()
                    .min(2.0);
            }
            let d = 2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt();
            d.min(2.0)
        }
    }
}

/// Affine map `z -> a z + b` with `a != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: Complex64,
    pub b: Complex64,
}

impl AffineMap {
    pub fn new(a: Complex64, b: Complex64) -> Self {
        assert!(a.norm() > 0.0, "affine map with zero linear part");
        AffineMap { a, b }
    }

    pub fn identity() -> Self {
        AffineMap::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn scaling(a: Complex64) -> Self {
        AffineMap::new(a, Complex64::new(0.0, 0.0))
    }

    /// The unique affine map sending `p` to 0 and `q` to 1.
    pub fn normalizing(p: Complex64, q: Complex64) -> Self {
        let a = (q - p).inv();
        AffineMap::new(a, -p * a)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.a * z + self.b
    }

    pub fn apply_sphere(&self, z: SpherePoint) -> SpherePoint {
        match z {
            Infinity => Infinity,
            Finite(w) => Finite(self.apply(w)),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap::new(self.a * other.a, self.a * other.b + self.b)
    }

    pub fn inverse(&self) -> AffineMap {
        let ia = self.a.inv();
        AffineMap::new(ia, -self.b * ia)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> SpherePoint {
        SpherePoint::new(re, im)
    }

    #[test]
    fn antipodal_and_identity() {
        assert!((sphere_dist(c(0.0, 0.0), Infinity) - 2.0).abs() < 1e-15);
        assert_eq!(sphere_dist(c(0.3, -2.0), c(0.3, -2.0)), 0.0);
        assert!((sphere_dist(c(1.0, 0.0), c(-1.0, 0.0)) - 2.0).abs() < 1e-15);
        assert_eq!(sphere_dist(Infinity, Infinity), 0.0);
    }

    #[test]
    fn embedding_matches_formula() {
        let a = c(0.7, -1.3);
        let b = c(-2.0, 0.25);
        let (pa, pb) = (a.embed(), b.embed());
        let e = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2)).sqrt();
        assert!((e - sphere_dist(a, b)).abs() < 1e-14);
        let back = SpherePoint::from_embedded(pa).finite().unwrap();
        assert!((back - a.finite().unwrap()).norm() < 1e-14);
    }

    #[test]
    fn huge_moduli_stay_accurate() {
        let z = c(1e12, 0.0);
        assert!(sphere_dist(z, Infinity) < 3e-12);
        assert!(sphere_dist(z, c(2e12, 0.0)) < 2e-12);
    }

    #[test]
    fn affine_group_ops() {
        let m = AffineMap::normalizing(Complex64::new(2.0, 0.0), Complex64::new(5.0, 0.0));
        assert!((m.apply(Complex64::new(2.0, 0.0))).norm() < 1e-15);
        assert!((m.apply(Complex64::new(5.0, 0.0)) - 1.0).norm() < 1e-15);
        let id = m.compose(&m.inverse());
        assert!((id.a - 1.0).norm() < 1e-15 && id.b.norm() < 1e-15);
    }

    fn point() -> impl Strategy<Value = SpherePoint> {
        (-50.0f64..50.0, -50.0f64..50.0).prop_map(|(x, y)| c(x, y))
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in point(), b in point(), c3 in point()) {
            let lhs = sphere_dist(a, c3);
            let rhs = sphere_dist(a, b) + sphere_dist(b, c3);
            prop_assert!(lhs <= rhs + 1e-12);
            prop_assert!((sphere_dist(a, b) - sphere_dist(b, a)).abs() < 1e-15);
            prop_assert!(sphere_dist(a, b) <= 2.0);
        }

        #[test]
        fn inversion_is_isometry(a in point(), b in point()) {
            prop_assume!(a.finite().unwrap().norm() > 1e-6 && b.finite().unwrap().norm() > 1e-6);
            let d0 = sphere_dist(a, b);
            let d1 = sphere_dist(a.inverted(), b.inverted());
            prop_assert!((d0 - d1).abs() < 1e-10);
        }
    }
}
