//! Linear algebra of the Minkowski space R^{2,1}.
//!
//! The bilinear form has signature (2,1):
//!   <u, v> = u.x v.x + u.y v.y - u.z v.z
//!
//! Vectors are space-like (<v,v> > 0), light-like (<v,v> = 0) or time-like
//! (<v,v> < 0); causal (non-space-like) vectors split further by the sign of
//! the z component. The Minkowski cross product `mcross` plays the role of
//! the Euclidean cross product: it is orthogonal to both factors with respect
//! to <.,.>, and it realises the Lie bracket of Killing fields of H^2.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A vector of R^{2,1}. Also used as a Killing field of the hyperbolic plane
/// via the standard isomorphism R^{2,1} ~ so(2,1) ~ sl(2,R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec21 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Causal type of a vector, with future/past split for causal vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalClass {
    Spacelike,
    LightlikePositive,
    LightlikeNegative,
    TimelikePositive,
    TimelikeNegative,
    /// The zero vector; kept as its own class so degeneracies surface
    /// explicitly instead of being misread as light-like.
    Zero,
}

/// Default relative tolerance for causal classification.
pub const CLASSIFY_TOL: f64 = 1e-9;

impl Vec21 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Minkowski inner product <self, other>.
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y - self.z * other.z
    }

    /// Minkowski square norm <v, v>.
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    /// Euclidean square norm, used only for tolerances and normalisation of
    /// space-like vectors where |<v,v>| alone is ill-conditioned.
    pub fn euclid_norm2(self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    /// Largest component magnitude; scale reference for tolerances.
    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    /// Minkowski cross product:
    ///   (x1,y1,z1) x (x2,y2,z2) = (-y1 z2 + z1 y2, -z1 x2 + x1 z2, x1 y2 - x2 y1)
    /// Orthogonal to both factors with respect to <.,.>.
    pub fn mcross(self, other: Self) -> Self {
        Self::new(
            -self.y * other.z + self.z * other.y,
            -self.z * other.x + self.x * other.z,
            self.x * other.y - other.x * self.y,
        )
    }

    /// Causal classification with tolerance `tol`, relative to the largest
    /// component magnitude squared (the norm is quadratic in the entries).
    pub fn classify_with_tol(self, tol: f64) -> CausalClass {
        let scale = self.max_abs();
        if scale == 0.0 {
            return CausalClass::Zero;
        }
        let q = self.norm2();
        let cutoff = tol * scale * scale;
        if q > cutoff {
            CausalClass::Spacelike
        } else if q < -cutoff {
            if self.z > 0.0 {
                CausalClass::TimelikePositive
            } else {
                CausalClass::TimelikeNegative
            }
        } else if self.z > 0.0 {
            CausalClass::LightlikePositive
        } else {
            CausalClass::LightlikeNegative
        }
    }

    /// Causal classification with the default tolerance.
    pub fn classify(self) -> CausalClass {
        self.classify_with_tol(CLASSIFY_TOL)
    }

    pub fn is_future_lightlike(self) -> bool {
        self.classify() == CausalClass::LightlikePositive
    }

    /// Normal vector of the dual plane v^perp = { w : <w, v> = 0 }.
    ///
    /// The dual of a space-like vector is a time-like plane (a geodesic of
    /// H^2), the dual of a light-like vector is tangent to the light cone
    /// along v, and the dual of a time-like vector is a space-like plane.
    pub fn dual_plane_normal(self) -> Result<Self, MinkowskiError> {
        if self.max_abs() == 0.0 {
            return Err(MinkowskiError::ZeroVector);
        }
        Ok(self)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(s * self.x, s * self.y, s * self.z)
    }

    /// v / sqrt(|<v,v>|); requires non-null v.
    pub fn normalized(self) -> Result<Self, MinkowskiError> {
        let q = self.norm2().abs();
        if q <= f64::EPSILON * self.euclid_norm2() {
            return Err(MinkowskiError::NullVector);
        }
        Ok(self.scale(1.0 / q.sqrt()))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MinkowskiError {
    #[error("zero vector has no dual plane")]
    ZeroVector,
    #[error("cannot normalise a null vector")]
    NullVector,
}

impl Add for Vec21 {
    type Output = Vec21;
    fn add(self, rhs: Vec21) -> Vec21 {
        Vec21::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec21 {
    type Output = Vec21;
    fn sub(self, rhs: Vec21) -> Vec21 {
        Vec21::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec21 {
    type Output = Vec21;
    fn neg(self) -> Vec21 {
        Vec21::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<Vec21> for f64 {
    type Output = Vec21;
    fn mul(self, rhs: Vec21) -> Vec21 {
        rhs.scale(self)
    }
}

/// Determinant of the 3x3 matrix with rows (a, b, c); orientation test.
pub fn det3(a: Vec21, b: Vec21, c: Vec21) -> f64 {
    a.x * (b.y * c.z - b.z * c.y) - a.y * (b.x * c.z - b.z * c.x)
        + a.z * (b.x * c.y - b.y * c.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec21 {
        Vec21::new(x, y, z)
    }

    #[test]
    fn bilinear_values() {
        assert_eq!(v(1.0, 0.0, 0.0).dot(v(1.0, 0.0, 0.0)), 1.0);
        assert_eq!(v(0.0, 0.0, 1.0).dot(v(0.0, 0.0, 1.0)), -1.0);
        assert_eq!(v(0.0, 1.0, 1.0).dot(v(0.0, -1.0, 1.0)), -2.0);
    }

    #[test]
    fn mcross_values() {
        assert_eq!(v(1.0, 0.0, 0.0).mcross(v(0.0, 1.0, 0.0)), v(0.0, 0.0, 1.0));
        let w = v(0.3, -1.2, 0.7);
        assert_eq!(w.mcross(w), Vec21::zero());
        assert_eq!(v(0.0, -1.0, 1.0).mcross(v(0.0, 1.0, 1.0)), v(2.0, 0.0, 0.0));
    }

    #[test]
    fn classify_values() {
        assert_eq!(v(1.0, 0.0, 0.0).classify(), CausalClass::Spacelike);
        assert_eq!(v(0.0, 1.0, 1.0).classify(), CausalClass::LightlikePositive);
        assert_eq!(v(0.0, 0.0, -1.0).classify(), CausalClass::TimelikeNegative);
        assert_eq!(v(0.0, 0.0, 2.0).classify(), CausalClass::TimelikePositive);
        assert_eq!(v(-1.0, 0.0, -1.0).classify(), CausalClass::LightlikeNegative);
        assert_eq!(Vec21::zero().classify(), CausalClass::Zero);
    }

    #[test]
    fn dual_plane_values() {
        // (0,1,1) lies in the dual plane of (1,0,0).
        let n = v(1.0, 0.0, 0.0).dual_plane_normal().unwrap();
        assert_eq!(v(0.0, 1.0, 1.0).dot(n), 0.0);
        // A light-like vector lies in its own dual plane.
        let l = v(0.0, 1.0, 1.0);
        assert_eq!(l.dot(l.dual_plane_normal().unwrap()), 0.0);
        assert_eq!(
            Vec21::zero().dual_plane_normal(),
            Err(MinkowskiError::ZeroVector)
        );
    }

    fn arb_vec() -> impl Strategy<Value = Vec21> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec21::new(x, y, z))
    }

    proptest! {
        #[test]
        fn mcross_orthogonal_and_antisymmetric(u in arb_vec(), w in arb_vec()) {
            let c = u.mcross(w);
            let scale = u.max_abs() * w.max_abs() + 1.0;
            prop_assert!(c.dot(u).abs() <= 1e-12 * scale * scale);
            prop_assert!(c.dot(w).abs() <= 1e-12 * scale * scale);
            let d = w.mcross(u);
            prop_assert!((c + d).max_abs() <= 1e-12 * scale);
        }

        #[test]
        fn triple_product_alternating(u in arb_vec(), w in arb_vec(), t in arb_vec()) {
            let lhs = u.mcross(w).dot(t);
            let rhs = -w.mcross(u).dot(t);
            let scale = (u.max_abs() * w.max_abs() * t.max_abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-11 * scale);
        }

        #[test]
        fn classify_scaling(u in arb_vec(), s in 0.01..100.0f64) {
            let c = u.classify();
            prop_assert_eq!(u.scale(s).classify(), c);
            let flipped = u.scale(-s).classify();
            let expect = match c {
                CausalClass::LightlikePositive => CausalClass::LightlikeNegative,
                CausalClass::LightlikeNegative => CausalClass::LightlikePositive,
                CausalClass::TimelikePositive => CausalClass::TimelikeNegative,
                CausalClass::TimelikeNegative => CausalClass::TimelikePositive,
                other => other,
            };
            prop_assert_eq!(flipped, expect);
        }

        #[test]
        fn cross_of_future_lightlike_is_spacelike(a in 0.0..std::f64::consts::TAU, b in 0.0..std::f64::consts::TAU) {
            prop_assume!((a - b).abs() > 1e-3 && (a - b).abs() < std::f64::consts::TAU - 1e-3);
            let u = Vec21::new(a.cos(), a.sin(), 1.0);
            let w = Vec21::new(b.cos(), b.sin(), 1.0);
            prop_assert!(u.mcross(w).norm2() > 0.0);
        }
    }
}
