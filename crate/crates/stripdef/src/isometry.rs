//! The isometry group of H^2 as 2x2 real matrices of determinant +-1 (up to
//! sign), its adjoint action on R^{2,1}, and the Killing-field calculus.
//!
//! A Killing field of H^2 is a vector v of R^{2,1} acting on points by
//!   X_v(p) = v mcross p,
//! and corresponds to the traceless matrix
//!   V = [[y, x + z], [x - z, -y]],   v = (x, y, z).
//! Under this map the matrix commutator satisfies
//!   V W - W V  <->  AD_MCROSS_SCALE * mcross(v, w),
//! with AD_MCROSS_SCALE = -2 (pinned by the basis-pair test below). The flow
//! of X_v is therefore exp(-t/2 V), not exp(t V).
//!
//! The translation length of a hyperbolic element is l = 2 arccosh(|tr|/2);
//! a glide reflection gets half the length of its (hyperbolic) square.

use crate::hyperbolic::{geodesic_from_endpoints, Geodesic};
use crate::minkowski::Vec21;
use serde::{Deserialize, Serialize};
use std::ops::Mul;

/// Commutator normalisation: [V, W] corresponds to -2 mcross(v, w).
pub const AD_MCROSS_SCALE: f64 = -2.0;

/// A Killing field of H^2, stored as its Minkowski vector.
pub type KillingField = Vec21;

/// Isometry of H^2: a 2x2 real matrix with |det| = 1, stored up to sign with
/// a canonical representative (first nonzero entry of the first row > 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    /// Row-major entries [[a, b], [c, d]].
    pub m: [[f64; 2]; 2],
    /// Sign of the determinant: +1 orientation-preserving, -1 reversing.
    pub det_sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsoClass {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
    Reflection,
    GlideReflection,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IsometryError {
    #[error("matrix is singular or non-finite")]
    Degenerate,
    #[error("isometry is not hyperbolic (|tr| <= 2)")]
    NotHyperbolic,
    #[error("isometry has no axis")]
    NoAxis,
    #[error("endpoints are projectively dependent")]
    DependentEndpoints,
}

impl Isometry {
    /// Normalises to |det| = 1 and the canonical sign.
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self, IsometryError> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(IsometryError::Degenerate);
        }
        let s = det.abs().sqrt();
        let mut m = [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]];
        let lead = if m[0][0] != 0.0 { m[0][0] } else { m[0][1] };
        if lead < 0.0 {
            for r in &mut m {
                r[0] = -r[0];
                r[1] = -r[1];
            }
        }
        Ok(Self {
            m,
            det_sign: if det > 0.0 { 1 } else { -1 },
        })
    }

    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0], [0.0, 1.0]],
            det_sign: 1,
        }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    /// |tr| of the canonical representative; the PGL-invariant quantity.
    pub fn abs_trace(&self) -> f64 {
        self.trace().abs()
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        Isometry::new([
            [self.m[1][1] / d, -self.m[0][1] / d],
            [-self.m[1][0] / d, self.m[0][0] / d],
        ])
        .expect("inverse of a unit-determinant matrix")
    }

    /// Adjoint action on Killing fields: v -> matrix of A V A^{-1}.
    ///
    /// This is the transport of Killing fields by the isometry and preserves
    /// <.,.> for both determinant signs. Note that for det_sign = -1 it is
    /// the *point* action composed with -1 (it reverses the time direction);
    /// use `act` to move points, ideal points and horoball vectors.
    pub fn adjoint(&self, v: Vec21) -> Vec21 {
        let vm = killing_to_matrix(v);
        // Raw inverse, not `inverse()`: canonicalising the sign of A^{-1}
        // independently of A would negate the conjugation.
        let d = self.det();
        let inv = [
            [self.m[1][1] / d, -self.m[0][1] / d],
            [-self.m[1][0] / d, self.m[0][0] / d],
        ];
        let prod = mat_mul(mat_mul(self.m, vm), inv);
        matrix_to_killing(prod)
    }

    /// Geometric (point) action on R^{2,1}: the time-preserving linear
    /// isometry of the form induced by this element of PGL(2, R). Agrees
    /// with `adjoint` when det_sign = +1, and is -adjoint otherwise.
    pub fn act(&self, v: Vec21) -> Vec21 {
        let w = self.adjoint(v);
        if self.det_sign == 1 {
            w
        } else {
            -w
        }
    }

    /// Translation length: 2 arccosh(|tr|/2) for hyperbolic elements; half
    /// the length of the square for glide reflections.
    pub fn trace_length(&self) -> Result<f64, IsometryError> {
        if self.det_sign == 1 {
            let h = self.abs_trace() / 2.0;
            if h <= 1.0 + 1e-12 {
                return Err(IsometryError::NotHyperbolic);
            }
            Ok(2.0 * h.acosh())
        } else {
            let sq = *self * *self;
            Ok(sq.trace_length()? / 2.0)
        }
    }

    pub fn classify(&self, tol: f64) -> IsoClass {
        if self.det_sign == 1 {
            let t = self.abs_trace();
            if (t - 2.0).abs() <= tol {
                // tr = +-2: identity or parabolic.
                let off = self.m[0][1].abs().max(self.m[1][0].abs());
                let diag = (self.m[0][0] - self.m[1][1]).abs();
                if off <= tol && diag <= tol {
                    IsoClass::Identity
                } else {
                    IsoClass::Parabolic
                }
            } else if t > 2.0 {
                IsoClass::Hyperbolic
            } else {
                IsoClass::Elliptic
            }
        } else if self.trace().abs() <= tol {
            IsoClass::Reflection
        } else {
            IsoClass::GlideReflection
        }
    }

    /// Oriented axis of a hyperbolic element or glide reflection, from the
    /// repelling to the attracting fixed ideal point.
    pub fn axis(&self) -> Result<Geodesic, IsometryError> {
        match self.classify(1e-9) {
            IsoClass::Hyperbolic | IsoClass::GlideReflection => {}
            _ => return Err(IsometryError::NoAxis),
        }
        // Real eigenvalues l1, l2 with l1 l2 = det; eigen-direction of the
        // larger |eigenvalue| is the attracting fixed point on the circle.
        let tr = self.trace();
        let disc = (tr * tr - 4.0 * self.det()).sqrt();
        let l_att = (tr + disc.copysign(tr)) / 2.0;
        let l_rep = self.det() / l_att;
        let vplus = lightlike_of_eigendirection(self.m, l_att);
        let vminus = lightlike_of_eigendirection(self.m, l_rep);
        geodesic_from_endpoints(vminus, vplus).map_err(|_| IsometryError::NoAxis)
    }

    /// Unit space-like neutral vector of a hyperbolic element or glide
    /// reflection: fixed by the adjoint action, oriented so that
    /// (attracting, neutral, repelling) is a positive basis.
    pub fn neutral_vector(&self) -> Result<Vec21, IsometryError> {
        let ax = self.axis()?;
        // ax.n satisfies (v-, n, v+) positive, i.e. (v+, -n, v-) positive.
        Ok(-ax.n)
    }
}

impl Mul for Isometry {
    type Output = Isometry;
    fn mul(self, rhs: Isometry) -> Isometry {
        Isometry::new(mat_mul(self.m, rhs.m)).expect("product of unit-determinant matrices")
    }
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// v = (x, y, z) -> [[y, x+z], [x-z, -y]].
pub fn killing_to_matrix(v: Vec21) -> [[f64; 2]; 2] {
    [[v.y, v.x + v.z], [v.x - v.z, -v.y]]
}

/// Inverse of `killing_to_matrix`; the trace part is discarded.
pub fn matrix_to_killing(m: [[f64; 2]; 2]) -> Vec21 {
    Vec21::new(
        (m[0][1] + m[1][0]) / 2.0,
        (m[0][0] - m[1][1]) / 2.0,
        (m[0][1] - m[1][0]) / 2.0,
    )
}

/// Future-pointing light-like vector fixed by the eigendirection (xi1:xi2)
/// of a 2x2 matrix for eigenvalue `lambda`. The nilpotent Killing matrix
/// with kernel xi corresponds to x = (xi1^2 - xi2^2)/2, y = -xi1 xi2,
/// z = (xi1^2 + xi2^2)/2.
fn lightlike_of_eigendirection(m: [[f64; 2]; 2], lambda: f64) -> Vec21 {
    // (m - lambda) xi = 0: xi = (b, lambda - a) or (lambda - d, c).
    let r1 = (m[0][1], lambda - m[0][0]);
    let r2 = (lambda - m[1][1], m[1][0]);
    let (x1, x2) = if r1.0 * r1.0 + r1.1 * r1.1 >= r2.0 * r2.0 + r2.1 * r2.1 {
        r1
    } else {
        r2
    };
    let n2 = x1 * x1 + x2 * x2;
    Vec21::new((x1 * x1 - x2 * x2) / n2, -2.0 * x1 * x2 / n2, 1.0)
}

/// Matrix exponential exp(t V) of the Killing matrix of k. Closed form
/// using V^2 = <k,k> I.
pub fn exp_killing(k: KillingField, t: f64) -> Isometry {
    let v = killing_to_matrix(k);
    let q = k.norm2() * t * t; // (tV)^2 = q I
    let (cosh_part, sinc_part) = if q > 1e-30 {
        let r = q.sqrt();
        (r.cosh(), r.sinh() / r)
    } else if q < -1e-30 {
        let r = (-q).sqrt();
        (r.cos(), r.sin() / r)
    } else {
        (1.0, 1.0)
    };
    let m = [
        [cosh_part + sinc_part * t * v[0][0], sinc_part * t * v[0][1]],
        [sinc_part * t * v[1][0], cosh_part + sinc_part * t * v[1][1]],
    ];
    Isometry::new(m).expect("exponential is invertible")
}

/// Time-t flow of the Killing field X_k(p) = mcross(k, p), as an isometry.
/// Accounts for the commutator normalisation: the flow matrix is
/// exp(-t/2 V), see AD_MCROSS_SCALE.
pub fn flow(k: KillingField, t: f64) -> Isometry {
    exp_killing(k, -0.5 * t)
}

/// Longitudinal motion imparted by the Killing field k to the geodesic with
/// ideal endpoints a, b:  X_l = <k, mcross(a, b) / ||mcross(a, b)||>.
pub fn longitudinal_motion(k: KillingField, a: Vec21, b: Vec21) -> Result<f64, IsometryError> {
    let n = a.mcross(b);
    let q = n.norm2();
    if q <= 1e-24 * a.euclid_norm2() * b.euclid_norm2() {
        return Err(IsometryError::DependentEndpoints);
    }
    Ok(k.dot(n) / q.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const E: f64 = std::f64::consts::E;

    fn iso(m: [[f64; 2]; 2]) -> Isometry {
        Isometry::new(m).unwrap()
    }

    #[test]
    fn killing_matrix_values() {
        assert_eq!(
            killing_to_matrix(Vec21::new(0.0, 0.0, 1.0)),
            [[0.0, 1.0], [-1.0, 0.0]]
        );
        assert_eq!(
            killing_to_matrix(Vec21::new(1.0, 0.0, 0.0)),
            [[0.0, 1.0], [1.0, 0.0]]
        );
        assert_eq!(
            killing_to_matrix(Vec21::new(0.0, 1.0, 0.0)),
            [[1.0, 0.0], [0.0, -1.0]]
        );
    }

    #[test]
    fn commutator_pins_ad_scale() {
        // [V, W] mapped back must equal AD_MCROSS_SCALE * mcross(v, w) on
        // all basis pairs; this pins the constant to -2.
        let basis = [
            Vec21::new(1.0, 0.0, 0.0),
            Vec21::new(0.0, 1.0, 0.0),
            Vec21::new(0.0, 0.0, 1.0),
        ];
        for &v in &basis {
            for &w in &basis {
                let vm = killing_to_matrix(v);
                let wm = killing_to_matrix(w);
                let comm = matrix_to_killing(mat_sub(mat_mul(vm, wm), mat_mul(wm, vm)));
                let expect = AD_MCROSS_SCALE * v.mcross(w);
                assert_relative_eq!((comm - expect).max_abs(), 0.0, epsilon = 1e-14);
            }
        }
    }

    fn mat_sub(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        [
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ]
    }

    #[test]
    fn adjoint_values() {
        let v = Vec21::new(0.3, -1.1, 0.4);
        let id = Isometry::identity();
        assert_relative_eq!((id.adjoint(v) - v).max_abs(), 0.0);
        let a = iso([[E, 0.0], [0.0, 1.0 / E]]);
        let neutral = Vec21::new(0.0, 1.0, 0.0);
        assert_relative_eq!((a.adjoint(neutral) - neutral).max_abs(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_length_values() {
        let a = iso([[E, 0.0], [0.0, 1.0 / E]]);
        assert_relative_eq!(a.trace_length().unwrap(), 2.0, epsilon = 1e-13);
        let b = iso([[1.0, 2.5], [0.7, 3.0]]);
        let conj = b * a * b.inverse();
        assert_relative_eq!(conj.trace_length().unwrap(), 2.0, epsilon = 1e-12);
        // Glide reflection with square diag(e^2, e^-2): half-length rule.
        let g = iso([[E, 0.0], [0.0, -1.0 / E]]);
        assert_eq!(g.det_sign, -1);
        assert_relative_eq!(g.trace_length().unwrap(), 2.0, epsilon = 1e-13);
        assert!(matches!(
            iso([[0.0, 1.0], [-1.0, 0.0]]).trace_length(),
            Err(IsometryError::NotHyperbolic)
        ));
    }

    #[test]
    fn classify_values() {
        let tol = 1e-9;
        assert_eq!(Isometry::identity().classify(tol), IsoClass::Identity);
        assert_eq!(iso([[1.0, 1.0], [0.0, 1.0]]).classify(tol), IsoClass::Parabolic);
        assert_eq!(
            iso([[E, 0.0], [0.0, -1.0 / E]]).classify(tol),
            IsoClass::GlideReflection
        );
        assert_eq!(iso([[0.0, 1.0], [1.0, 0.0]]).classify(tol), IsoClass::Reflection);
        assert_eq!(iso([[2.0, 0.0], [0.0, 0.5]]).classify(tol), IsoClass::Hyperbolic);
        assert_eq!(iso([[0.9, -0.9], [0.9, 0.9]]).classify(tol), IsoClass::Elliptic);
    }

    #[test]
    fn axis_values() {
        let a = iso([[E, 0.0], [0.0, 1.0 / E]]);
        let ax = a.axis().unwrap();
        assert_relative_eq!((ax.vplus - Vec21::new(1.0, 0.0, 1.0)).max_abs(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((ax.vminus - Vec21::new(-1.0, 0.0, 1.0)).max_abs(), 0.0, epsilon = 1e-12);
        // Inverse: same geodesic, reversed orientation.
        let ax_inv = a.inverse().axis().unwrap();
        assert_relative_eq!((ax_inv.vplus - ax.vminus).max_abs(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((ax_inv.n + ax.n).max_abs(), 0.0, epsilon = 1e-12);
        // Conjugation equivariance of the attracting point.
        let b = iso([[1.0, 1.0], [0.5, 2.0]]);
        let conj_ax = (b * a * b.inverse()).axis().unwrap();
        let moved = b.act(ax.vplus);
        let moved = moved.scale(1.0 / moved.z);
        assert_relative_eq!((conj_ax.vplus - moved).max_abs(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn neutral_vector_orientation() {
        use crate::minkowski::det3;
        let a = iso([[E, 0.0], [0.0, 1.0 / E]]);
        let v0 = a.neutral_vector().unwrap();
        assert_relative_eq!(v0.norm2(), 1.0, epsilon = 1e-12);
        assert_relative_eq!((a.adjoint(v0) - v0).max_abs(), 0.0, epsilon = 1e-13);
        let ax = a.axis().unwrap();
        assert!(det3(ax.vplus, v0, ax.vminus) > 0.0);
    }

    #[test]
    fn exp_killing_values() {
        // exp(pi [[0,1],[-1,0]]) = -Id, which is Id in PGL.
        let r = exp_killing(Vec21::new(0.0, 0.0, 1.0), std::f64::consts::PI);
        assert_eq!(r.classify(1e-9), IsoClass::Identity);
        let k = Vec21::new(0.7, -0.2, 0.3);
        let zero = exp_killing(k, 0.0);
        assert_eq!(zero.classify(1e-12), IsoClass::Identity);
        let st = exp_killing(k, 0.3) * exp_killing(k, 0.5);
        let direct = exp_killing(k, 0.8);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(st.m[i][j], direct.m[i][j], epsilon = 1e-12);
            }
        }
        // Unit space-like k translates with speed 2 along its axis.
        let a = exp_killing(Vec21::new(0.0, 1.0, 0.0), 0.5);
        assert_relative_eq!(a.trace_length().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn flow_matches_mcross_derivative() {
        // d/dt flow(k,t).act(p) at 0 must be mcross(k, p): the pinned
        // constant -2 between commutators and mcross forces flow = exp(-t/2 V).
        let k = Vec21::new(0.4, -0.9, 0.2);
        let p = Vec21::new(0.3, 0.5, (1.0 + 0.09 + 0.25f64).sqrt());
        let h = 1e-6;
        let fwd = flow(k, h).act(p);
        let bwd = flow(k, -h).act(p);
        let fd = (fwd - bwd).scale(1.0 / (2.0 * h));
        assert_relative_eq!((fd - k.mcross(p)).max_abs(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn longitudinal_rectangle() {
        // Rectangle configuration at theta = pi/4: the field through the
        // outer intersection of the diagonals imparts -8 sin^2(theta) = -4
        // to both AB and CD; the field through AD x BC imparts motions of
        // equal magnitude and opposite signs.
        let th = std::f64::consts::FRAC_PI_4;
        let (s, c) = th.sin_cos();
        let a = Vec21::new(-c, -s, 1.0);
        let b = Vec21::new(c, -s, 1.0);
        let cc = Vec21::new(c, s, 1.0);
        let d = Vec21::new(-c, s, 1.0);
        let x_g = a.mcross(cc).mcross(b.mcross(d));
        assert_relative_eq!(longitudinal_motion(x_g, a, b).unwrap(), -4.0, epsilon = 1e-12);
        assert_relative_eq!(longitudinal_motion(x_g, cc, d).unwrap(), -4.0, epsilon = 1e-12);
        let x_e = a.mcross(d).mcross(cc.mcross(b));
        let on_ab = longitudinal_motion(x_e, a, b).unwrap();
        let on_cd = longitudinal_motion(x_e, cc, d).unwrap();
        assert_relative_eq!(on_ab, -on_cd, epsilon = 1e-12);
        assert!(on_ab > 0.0);
        // A light-like endpoint imparts no motion to its own geodesic.
        assert_relative_eq!(longitudinal_motion(a, a, b).unwrap(), 0.0);
        assert!(matches!(
            longitudinal_motion(x_g, a, a.scale(2.0)),
            Err(IsometryError::DependentEndpoints)
        ));
    }

    fn arb_iso() -> impl Strategy<Value = Isometry> {
        (
            -2.0..2.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
            proptest::bool::ANY,
        )
            .prop_filter_map("nonsingular", |(a, b, c, d, flip)| {
                let m = if flip { [[a, b], [c, -d]] } else { [[a, b], [c, d]] };
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if det.abs() > 1e-3 {
                    Some(Isometry::new(m).unwrap())
                } else {
                    None
                }
            })
    }

    fn arb_vec() -> impl Strategy<Value = Vec21> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec21::new(x, y, z))
    }

    proptest! {
        #[test]
        fn adjoint_preserves_form(a in arb_iso(), u in arb_vec(), v in arb_vec()) {
            let scale = (u.max_abs() * v.max_abs()).max(1.0);
            prop_assert!((a.adjoint(u).dot(a.adjoint(v)) - u.dot(v)).abs() < 1e-8 * scale);
            prop_assert!((a.act(u).dot(a.act(v)) - u.dot(v)).abs() < 1e-8 * scale);
        }

        #[test]
        fn act_preserves_future_cone(a in arb_iso(), t in 0.0..std::f64::consts::TAU) {
            let l = Vec21::new(t.cos(), t.sin(), 1.0);
            let img = a.act(l);
            prop_assert!(img.z > 0.0);
        }

        #[test]
        fn adjoint_is_multiplicative(a in arb_iso(), b in arb_iso(), v in arb_vec()) {
            let lhs = (a * b).adjoint(v);
            let rhs = a.adjoint(b.adjoint(v));
            prop_assert!((lhs - rhs).max_abs() < 1e-8 * (1.0 + v.max_abs()));
        }
    }
}
