//! Hyperbolic plane in the hyperboloid and Klein models.
//!
//! Points live on the upper sheet of the hyperboloid <v,v> = -1, z > 0.
//! Oriented geodesics are intersections of time-like planes n^perp with the
//! hyperboloid, stored with their unit space-like dual n and future-pointing
//! light-like endpoints (v-, v+), oriented so that (v-, n, v+) is a positive
//! basis. A horoball is encoded by a single future-pointing light-like vector
//! v: H(v) = { p : <p, v> > -1 }, larger v meaning smaller ball.
//!
//! The signed length of the connection between two horoballs H(v1), H(v2) is
//!   l = ln(-<v1, v2> / 2),
//! the distance between the horocycles along the common perpendicular,
//! negative when the horoballs overlap. Rescaling both vectors by s shifts l
//! by exactly 2 ln s.

use crate::minkowski::{det3, CausalClass, Vec21};
use serde::{Deserialize, Serialize};

/// Point on the upper hyperboloid sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypPoint {
    pub v: Vec21,
}

/// Oriented geodesic of H^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    /// Unit space-like dual; the geodesic is n^perp on the hyperboloid.
    pub n: Vec21,
    /// Future-pointing light-like forward endpoint.
    pub vplus: Vec21,
    /// Future-pointing light-like backward endpoint.
    pub vminus: Vec21,
}

/// Horoball determined by a future-pointing light-like vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horoball {
    pub v: Vec21,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HyperbolicError {
    #[error("point does not lie on the hyperboloid")]
    NotOnHyperboloid,
    #[error("coincident points have no common geodesic")]
    CoincidentPoints,
    #[error("geodesic endpoints are projectively dependent")]
    DependentEndpoints,
    #[error("geodesic endpoints must be future-pointing light-like")]
    NonLightlike,
    #[error("point does not lie on the geodesic")]
    PointNotOnGeodesic,
    #[error("horoballs share their ideal center")]
    SameCenter,
}

/// Tolerance for "point lies on geodesic": |<p, n>| <= 1e-8 (1 + |p.z|).
pub fn on_geodesic_tol(p: HypPoint) -> f64 {
    1e-8 * (1.0 + p.v.z.abs())
}

impl HypPoint {
    /// Wraps a hyperboloid representative, renormalising small drift.
    pub fn new(v: Vec21) -> Result<Self, HyperbolicError> {
        let q = v.norm2();
        if v.z <= 0.0 || (q + 1.0).abs() > 1e-6 * (1.0 + v.euclid_norm2()) {
            return Err(HyperbolicError::NotOnHyperboloid);
        }
        Ok(Self {
            v: v.scale(1.0 / (-q).sqrt()),
        })
    }

    pub fn base() -> Self {
        Self {
            v: Vec21::new(0.0, 0.0, 1.0),
        }
    }

    /// Projects a time-like future vector onto the hyperboloid.
    pub fn project(v: Vec21) -> Result<Self, HyperbolicError> {
        let q = v.norm2();
        if q >= 0.0 || v.z <= 0.0 {
            return Err(HyperbolicError::NotOnHyperboloid);
        }
        Ok(Self {
            v: v.scale(1.0 / (-q).sqrt()),
        })
    }

    /// Klein-disk coordinates (x/z, y/z).
    pub fn klein(self) -> (f64, f64) {
        (self.v.x / self.v.z, self.v.y / self.v.z)
    }

    pub fn on_geodesic(self, g: &Geodesic) -> bool {
        self.v.dot(g.n).abs() <= on_geodesic_tol(self)
    }
}

/// Hyperbolic distance: cosh d = -<p, q>.
pub fn dist(p: HypPoint, q: HypPoint) -> f64 {
    let c = -p.v.dot(q.v);
    // Round-off can push the product slightly below 1 for nearby points.
    c.max(1.0).acosh()
}

/// Hilbert-metric distance in the Klein model: half the log of the
/// cross-ratio [p, w1; w2, q] of the points with the chord endpoints.
/// Cross-checks `dist` through an independent formula.
pub fn dist_hilbert(p: HypPoint, q: HypPoint) -> Result<f64, HyperbolicError> {
    let (px, py) = p.klein();
    let (qx, qy) = q.klein();
    let (dx, dy) = (qx - px, qy - py);
    let d2 = dx * dx + dy * dy;
    if d2 < 1e-28 {
        return Err(HyperbolicError::CoincidentPoints);
    }
    // Chord p + t (q - p) meets the unit circle at the roots of
    //   |p|^2 + 2 t <p, d> + t^2 |d|^2 = 1.
    let b = px * dx + py * dy;
    let c = px * px + py * py - 1.0;
    let disc = (b * b - d2 * c).sqrt();
    let t1 = (-b - disc) / d2; // w1 side of p (t < 0)
    let t2 = (-b + disc) / d2; // w2 side of q (t > 1)
    // Cross-ratio [a,b;c,d] = (c-a)(d-b)/((b-a)(d-c)) with collinear points
    // parametrised by t: a=p (t=0), b=w1 (t=t1), c=w2 (t=t2), d=q (t=1).
    let cross = (t2 - 0.0) * (1.0 - t1) / ((t1 - 0.0) * (1.0 - t2));
    Ok(0.5 * cross.abs().ln())
}

/// Oriented geodesic from future-pointing light-like endpoints.
pub fn geodesic_from_endpoints(vminus: Vec21, vplus: Vec21) -> Result<Geodesic, HyperbolicError> {
    if vminus.classify() != CausalClass::LightlikePositive
        || vplus.classify() != CausalClass::LightlikePositive
    {
        return Err(HyperbolicError::NonLightlike);
    }
    let cross = vminus.mcross(vplus);
    let q = cross.norm2();
    if q <= 1e-24 * vminus.euclid_norm2() * vplus.euclid_norm2() {
        return Err(HyperbolicError::DependentEndpoints);
    }
    let mut n = cross.scale(1.0 / q.sqrt());
    // Fix orientation: (v-, n, v+) must be a positive basis of R^{2,1}.
    if det3(vminus, n, vplus) < 0.0 {
        n = -n;
    }
    // Normalise endpoint representatives to z = 1 so equal geodesics compare
    // equal regardless of the input scales.
    Ok(Geodesic {
        n,
        vplus: vplus.scale(1.0 / vplus.z),
        vminus: vminus.scale(1.0 / vminus.z),
    })
}

impl Geodesic {
    /// Geodesic through two distinct points, oriented from p to q.
    pub fn through(p: HypPoint, q: HypPoint) -> Result<Self, HyperbolicError> {
        let n = p.v.mcross(q.v);
        let q2 = n.norm2();
        if q2 <= 1e-24 {
            return Err(HyperbolicError::CoincidentPoints);
        }
        // Endpoints: the light-like directions in span(p, q). Writing
        // w = q + t p light-like gives t^2 - 2 <p,q> t + 1 = 0.
        let pq = p.v.dot(q.v);
        let disc = (pq * pq - 1.0).max(0.0).sqrt();
        let t_fwd = -pq + disc; // w = q + t_fwd p is ahead of q
        let t_bwd = -pq - disc;
        let vplus = q.v + t_fwd * p.v;
        let vminus = q.v + t_bwd * p.v;
        geodesic_from_endpoints(vminus, vplus)
    }

    /// Signed arclength parametrisation; point(0) is the point of the
    /// geodesic closest to the base of the parametrisation below.
    pub fn point(&self, t: f64) -> HypPoint {
        // p0 = (v- + v+) normalised, tangent towards v+.
        let p0 = HypPoint::project(self.vminus + self.vplus).expect("valid geodesic");
        let tangent = self.n.mcross(p0.v);
        HypPoint {
            v: t.cosh() * p0.v + t.sinh() * tangent,
        }
    }

    /// Closest point of the geodesic to p (foot of the perpendicular).
    pub fn foot(&self, p: HypPoint) -> HypPoint {
        let w = p.v - p.v.dot(self.n) * self.n; // remove the n component
        HypPoint::project(w).expect("foot projects back to the hyperboloid")
    }
}

/// Signed length of the horoball connection between H(v1) and H(v2):
/// l = ln(-<v1, v2> / 2).
pub fn horoball_connection_length(h1: Horoball, h2: Horoball) -> Result<f64, HyperbolicError> {
    let ip = h1.v.dot(h2.v);
    if ip >= -1e-15 * h1.v.z * h2.v.z {
        return Err(HyperbolicError::SameCenter);
    }
    Ok((-ip / 2.0).ln())
}

/// sin of the angle between two geodesics at a common point:
/// sin = sqrt(1 - <n1, n2>^2) for unit duals.
pub fn sin_angle_at(p: HypPoint, g1: &Geodesic, g2: &Geodesic) -> Result<f64, HyperbolicError> {
    if !p.on_geodesic(g1) || !p.on_geodesic(g2) {
        return Err(HyperbolicError::PointNotOnGeodesic);
    }
    let c = g1.n.dot(g2.n);
    Ok((1.0 - c * c).max(0.0).sqrt())
}

/// Geodesic through p perpendicular to g, oriented by n_perp = g.n x p.
pub fn perpendicular_at(g: &Geodesic, p: HypPoint) -> Result<Geodesic, HyperbolicError> {
    if !p.on_geodesic(g) {
        return Err(HyperbolicError::PointNotOnGeodesic);
    }
    // The dual of the perpendicular lies in p^perp, orthogonal to g.n; that
    // is the tangent direction of g at p.
    let m = g.n.mcross(p.v);
    let m = m.scale(1.0 / m.norm2().sqrt());
    // Endpoints of the perpendicular: light-like vectors p +- (m x p).
    let t = m.mcross(p.v);
    geodesic_from_endpoints(p.v - t, p.v + t)
}

/// Open-ball membership test <p, v> > -1; the horocycle is <p, v> = -1.
pub fn horoball_contains(h: Horoball, p: HypPoint) -> bool {
    p.v.dot(h.v) > -1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64, z: f64) -> HypPoint {
        HypPoint::new(Vec21::new(x, y, z)).unwrap()
    }

    #[test]
    fn foot_drops_perpendicularly() {
        // x-axis geodesic; a point up the y-axis projects to the origin.
        let g = geodesic_from_endpoints(Vec21::new(-1.0, 0.0, 1.0), Vec21::new(1.0, 0.0, 1.0))
            .unwrap();
        let p = pt(0.0, 1f64.sinh(), 1f64.cosh());
        let f = g.foot(p);
        assert_relative_eq!(f.v.x, 0.0, epsilon = 1e-14);
        assert_relative_eq!(f.v.y, 0.0, epsilon = 1e-14);
        assert_relative_eq!(f.v.z, 1.0, epsilon = 1e-14);
        // The foot is the distance minimizer along the geodesic.
        for t in [-0.5, -0.1, 0.1, 0.5] {
            assert!(dist(p, g.point(t)) > dist(p, f) - 1e-12);
        }
    }

    #[test]
    fn dist_values() {
        let o = HypPoint::base();
        assert_eq!(dist(o, o), 0.0);
        let q = pt(1f64.sinh(), 0.0, 1f64.cosh());
        assert_relative_eq!(dist(o, q), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn hilbert_agrees_with_hyperboloid() {
        let o = HypPoint::base();
        let q = pt(1f64.sinh(), 0.0, 1f64.cosh());
        assert_relative_eq!(dist_hilbert(o, q).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(
            dist_hilbert(o, o),
            Err(HyperbolicError::CoincidentPoints)
        ));
    }

    #[test]
    fn geodesic_from_endpoints_orientation() {
        let vm = Vec21::new(-1.0, 0.0, 1.0);
        let vp = Vec21::new(1.0, 0.0, 1.0);
        let g = geodesic_from_endpoints(vm, vp).unwrap();
        // The x-axis geodesic has dual +-(0,1,0); orientation picks one sign.
        assert_relative_eq!(g.n.y.abs(), 1.0, epsilon = 1e-14);
        assert!(det3(g.vminus, g.n, g.vplus) > 0.0);
        let g_rev = geodesic_from_endpoints(vp, vm).unwrap();
        assert_relative_eq!((g.n + g_rev.n).max_abs(), 0.0, epsilon = 1e-14);
        // Projective invariance of the endpoints.
        let g_scaled = geodesic_from_endpoints(vm.scale(2.0), vp.scale(3.0)).unwrap();
        assert_relative_eq!((g.n - g_scaled.n).max_abs(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((g.vplus - g_scaled.vplus).max_abs(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn horoball_length_values() {
        let h1 = Horoball { v: Vec21::new(0.0, 1.0, 1.0) };
        let h2 = Horoball { v: Vec21::new(0.0, -1.0, 1.0) };
        assert_relative_eq!(horoball_connection_length(h1, h2).unwrap(), 0.0);
        let e = std::f64::consts::E;
        let s1 = Horoball { v: h1.v.scale(e) };
        let s2 = Horoball { v: h2.v.scale(e) };
        assert_relative_eq!(
            horoball_connection_length(s1, s2).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        assert!(matches!(
            horoball_connection_length(h1, h1),
            Err(HyperbolicError::SameCenter)
        ));
    }

    #[test]
    fn sin_angle_values() {
        let o = HypPoint::base();
        let g1 = geodesic_from_endpoints(Vec21::new(0.0, -1.0, 1.0), Vec21::new(0.0, 1.0, 1.0))
            .unwrap(); // dual (+-1, 0, 0)
        let g2 = geodesic_from_endpoints(Vec21::new(-1.0, 0.0, 1.0), Vec21::new(1.0, 0.0, 1.0))
            .unwrap(); // dual (0, +-1, 0)
        assert_relative_eq!(sin_angle_at(o, &g1, &g2).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(sin_angle_at(o, &g1, &g1).unwrap(), 0.0, epsilon = 1e-7);
        // Duals at angle pi/3: sin = sqrt(3)/2.
        let th = std::f64::consts::FRAC_PI_3;
        let vm = Vec21::new(-th.sin(), th.cos(), 1.0);
        let vp = Vec21::new(th.sin(), -th.cos(), 1.0);
        let g3 = geodesic_from_endpoints(vm, vp).unwrap();
        assert_relative_eq!(
            sin_angle_at(o, &g1, &g3).unwrap(),
            3f64.sqrt() / 2.0,
            epsilon = 1e-12
        );
        let far = pt(2f64.sinh(), 0.0, 2f64.cosh());
        assert!(matches!(
            sin_angle_at(far, &g1, &g2),
            Err(HyperbolicError::PointNotOnGeodesic)
        ));
    }

    #[test]
    fn perpendicular_values() {
        let o = HypPoint::base();
        let g = geodesic_from_endpoints(Vec21::new(-1.0, 0.0, 1.0), Vec21::new(1.0, 0.0, 1.0))
            .unwrap();
        let perp = perpendicular_at(&g, o).unwrap();
        assert!(o.on_geodesic(&perp));
        assert_relative_eq!(perp.n.x.abs(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(sin_angle_at(o, &g, &perp).unwrap(), 1.0, epsilon = 1e-14);
        // Involution up to orientation.
        let back = perpendicular_at(&perp, o).unwrap();
        assert_relative_eq!((back.n.y.abs() - 1.0).abs(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn horoball_contains_values() {
        let o = HypPoint::base();
        let h = |y: f64, z: f64| Horoball { v: Vec21::new(0.0, y, z) };
        assert!(!horoball_contains(h(1.0, 1.0), o)); // boundary, open ball
        assert!(!horoball_contains(h(2.0, 2.0), o));
        assert!(horoball_contains(h(0.5, 0.5), o));
    }

    fn arb_point() -> impl Strategy<Value = HypPoint> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| {
            HypPoint::project(Vec21::new(x, y, (1.0 + x * x + y * y).sqrt() + 0.1)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn hilbert_cross_check(p in arb_point(), q in arb_point()) {
            prop_assume!(dist(p, q) > 1e-6);
            let dh = dist_hilbert(p, q).unwrap();
            prop_assert!((dh - dist(p, q)).abs() < 1e-10);
        }

        #[test]
        fn horoball_nesting(k in 1.0..5.0f64, kp in 0.1..1.0f64, p in arb_point()) {
            // H(k v0) subset of H(k' v0) when k >= k'.
            let v0 = Vec21::new(0.0, 1.0, 1.0);
            let big_k = Horoball { v: v0.scale(k) };
            let small_k = Horoball { v: v0.scale(kp) };
            if horoball_contains(big_k, p) {
                prop_assert!(horoball_contains(small_k, p));
            }
        }

        #[test]
        fn horoball_rescaling_law(s in 0.1..10.0f64, a in 0.0..1.0f64) {
            let v1 = Vec21::new(a.cos(), a.sin(), 1.0);
            let v2 = Vec21::new(-a.sin(), a.cos(), 1.0);
            let h1 = Horoball { v: v1 };
            let h2 = Horoball { v: v2 };
            let l = horoball_connection_length(h1, h2).unwrap();
            let ls = horoball_connection_length(
                Horoball { v: v1.scale(s) },
                Horoball { v: v2.scale(s) },
            ).unwrap();
            prop_assert!((ls - (l + 2.0 * s.ln())).abs() < 1e-12);
        }
    }
}
