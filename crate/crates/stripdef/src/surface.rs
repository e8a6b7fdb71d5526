//! Decorated crowned hyperbolic surfaces.
//!
//! A surface is held as a convex fundamental polygon in the Klein disk
//! together with side pairings, a free-group holonomy, and one
//! future-pointing lightlike decoration vector per spike class (ideal
//! point + horoball). Constructors cover the four explicit families:
//! ideal polygons, crowns, spiked annuli, and spiked Möbius strips.
//! Closed geodesics are enumerated by conjugacy class with lengths
//! l = 2 arccosh(|tr|/2); horoball connections have length
//! l = ln(−⟨v₁, ρ(w)·v₂⟩/2).

use crate::hyperbolic::{Geodesic, HypPoint};
use crate::isometry::{IsoClass, Isometry};
use crate::minkowski::Vec21;
use crate::word::{conjugacy_classes, reduced_words, Word};
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Classification tolerance used throughout surface checks.
pub const SURFACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SurfaceError {
    #[error("need at least three ideal points")]
    TooFewPoints,
    #[error("ideal points must be distinct and cyclically ordered")]
    BadOrder,
    #[error("spike placement violates the crown ordering")]
    BadSpikeOrder,
    #[error("translation length must be positive")]
    NonPositiveLength,
    #[error("side pairing does not identify the glued sides")]
    BadGluing,
    #[error("rescale factor must be positive")]
    NonPositiveScale,
    #[error("bad construction parameters: {0}")]
    BadParams(String),
}

/// Which explicit construction produced the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    IdealPolygon { q: usize },
    Crown { q: usize },
    SpikedAnnulus { q1: usize, q2: usize },
    SpikedMoebius { q: usize },
    Generic,
}

/// Boundary component: number of spikes on it and whether it is a closed
/// geodesic (spike-free) component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Peripheral {
    pub q: usize,
    pub closed: bool,
}

/// One decorated spike: lightlike vector = ideal point + horoball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeDecoration {
    pub peripheral_index: usize,
    pub position_index: usize,
    pub v: Vec21,
}

/// Vertex of the fundamental polygon: a spike lift (with its transported
/// decoration vector) or a finite point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainVertex {
    Ideal { spike: usize, v: Vec21 },
    Finite(HypPoint),
}

/// Side i joins vertex i to vertex i+1 (cyclically). Cut sides carry the
/// word letter whose isometry maps this side onto its partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideKind {
    Edge { id: usize },
    ClosedBoundary,
    Paired { letter: i32, partner: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDomain {
    pub vertices: Vec<DomainVertex>,
    pub sides: Vec<SideKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoratedSurface {
    pub orientable: bool,
    pub genus_or_h: usize,
    pub generators: Vec<Isometry>,
    pub peripherals: Vec<Peripheral>,
    pub spikes: Vec<SpikeDecoration>,
    pub domain: FundamentalDomain,
    pub family: Family,
    pub tol: f64,
}

/// Closed geodesic: conjugacy-class word and its translation length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedGeodesic {
    pub word: Word,
    pub length: f64,
}

/// Geodesic joining two decorated spikes; length measured between the
/// bounding horoballs (can be negative when they overlap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoroballConnection {
    pub spike_from: usize,
    pub spike_to: usize,
    pub word: Word,
    pub length: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub issues: Vec<String>,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.issues.is_empty()
    }
}

fn klein_of(v: Vec21) -> (f64, f64) {
    (v.x / v.z, v.y / v.z)
}

fn klein_angle(v: Vec21) -> f64 {
    let (x, y) = klein_of(v);
    y.atan2(x)
}

fn lightlike_future(v: Vec21, tol: f64) -> bool {
    v.z > 0.0 && v.norm2().abs() <= tol * v.euclid_norm2().max(1.0)
}

impl DomainVertex {
    pub fn klein(&self) -> (f64, f64) {
        match self {
            DomainVertex::Ideal { v, .. } => klein_of(*v),
            DomainVertex::Finite(p) => p.klein(),
        }
    }

    pub fn spike(&self) -> Option<usize> {
        match self {
            DomainVertex::Ideal { spike, .. } => Some(*spike),
            DomainVertex::Finite(_) => None,
        }
    }
}

impl FundamentalDomain {
    pub fn side_count(&self) -> usize {
        self.sides.len()
    }

    /// Endpoint vertex indices of side i.
    pub fn side_vertices(&self, i: usize) -> (usize, usize) {
        (i, (i + 1) % self.vertices.len())
    }

    pub fn side_klein(&self, i: usize) -> ((f64, f64), (f64, f64)) {
        let (a, b) = self.side_vertices(i);
        (self.vertices[a].klein(), self.vertices[b].klein())
    }
}

impl DecoratedSurface {
    pub fn spike_count(&self) -> usize {
        self.spikes.len()
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// Isometry of a single word letter (±(index+1)).
    pub fn letter_isometry(&self, letter: i32) -> Isometry {
        let g = self.generators[(letter.unsigned_abs() as usize) - 1];
        if letter > 0 {
            g
        } else {
            g.inverse()
        }
    }

    pub fn holonomy(&self, w: &Word) -> Isometry {
        w.evaluate(&self.generators)
    }

    /// Translation length of a word's geodesic representative: trace length
    /// for hyperbolic elements, half the length of the square for glide
    /// reflections.
    pub fn word_length(&self, w: &Word) -> Option<f64> {
        let a = self.holonomy(w);
        match a.classify(self.tol) {
            IsoClass::Hyperbolic => a.trace_length().ok(),
            IsoClass::GlideReflection => (a * a).trace_length().ok().map(|l| l / 2.0),
            _ => None,
        }
    }

    /// One entry per conjugacy class (deduplicated under inversion) of
    /// cyclically reduced length <= max_word_len, sorted by length.
    pub fn enumerate_closed_geodesics(&self, max_word_len: usize) -> Vec<ClosedGeodesic> {
        let classes = conjugacy_classes(self.rank(), max_word_len);
        #[cfg(feature = "parallel")]
        let it = classes.par_iter();
        #[cfg(not(feature = "parallel"))]
        let it = classes.iter();
        let mut out: Vec<ClosedGeodesic> = it
            .filter_map(|w| {
                self.word_length(w).map(|length| ClosedGeodesic {
                    word: w.clone(),
                    length,
                })
            })
            .collect();
        out.sort_by(|a, b| {
            a.length
                .partial_cmp(&b.length)
                .unwrap()
                .then(a.word.0.cmp(&b.word.0))
        });
        out
    }

    /// All horoball connections (i, j, w) with |w| <= max_word_len and
    /// length <= max_length, deduplicated under (i,j,w) ~ (j,i,w⁻¹); the
    /// trivial connection (i,i,id) is excluded.
    pub fn enumerate_horoball_connections(
        &self,
        max_word_len: usize,
        max_length: f64,
    ) -> Vec<HoroballConnection> {
        let mut words = vec![Word::identity()];
        words.extend(reduced_words(self.rank(), max_word_len));
        let spikes = &self.spikes;
        let per_word = |w: &Word| {
                let rho = self.holonomy(w);
                let mut local = Vec::new();
                for i in 0..spikes.len() {
                    for j in 0..spikes.len() {
                        if i == j && w.is_empty() {
                            continue;
                        }
                        // Canonical representative of {(i,j,w), (j,i,w⁻¹)}.
                        let winv = w.inverse();
                        if (j, &winv.0) < (i, &w.0) || ((j, &winv.0) == (i, &w.0) && j < i) {
                            continue;
                        }
                        let inner = spikes[i].v.dot(rho.act(spikes[j].v));
                        if inner >= -self.tol {
                            continue; // same ideal point: no connection
                        }
                        let length = (-inner / 2.0).ln();
                        if length <= max_length {
                            local.push(HoroballConnection {
                                spike_from: i,
                                spike_to: j,
                                word: w.clone(),
                                length,
                            });
                        }
                    }
                }
                local
        };
        #[cfg(feature = "parallel")]
        let mut out: Vec<HoroballConnection> = words.par_iter().flat_map_iter(per_word).collect();
        #[cfg(not(feature = "parallel"))]
        let mut out: Vec<HoroballConnection> = words.iter().flat_map(per_word).collect();
        out.sort_by(|a, b| {
            a.length
                .partial_cmp(&b.length)
                .unwrap()
                .then(a.spike_from.cmp(&b.spike_from))
                .then(a.spike_to.cmp(&b.spike_to))
                .then(a.word.0.cmp(&b.word.0))
        });
        out
    }

    /// Dimension of the deformation space: 6g−6+3n+2Q (orientable) or
    /// 3h−6+3n+2Q (non-orientable) for generic surfaces; the rank-oracle
    /// values for the exceptional families whose convex core degenerates.
    pub fn deformation_dim(&self) -> usize {
        match self.family {
            Family::IdealPolygon { q } => 2 * q - 3,
            Family::Crown { q } => 2 * q,
            Family::SpikedAnnulus { q1, q2 } => 2 * (q1 + q2),
            Family::SpikedMoebius { q } => 2 * q,
            Family::Generic => {
                let n = self.peripherals.len();
                let q: usize = self.peripherals.iter().map(|p| p.q).sum();
                if self.orientable {
                    6 * self.genus_or_h - 6 + 3 * n + 2 * q
                } else {
                    3 * self.genus_or_h - 6 + 3 * n + 2 * q
                }
            }
        }
    }

    /// Scale every horoball decoration by lambda (holonomy unchanged);
    /// every connection length shifts by 2 ln lambda.
    pub fn rescale_decorations(&self, lambda: f64) -> Result<DecoratedSurface, SurfaceError> {
        if !(lambda > 0.0) {
            return Err(SurfaceError::NonPositiveScale);
        }
        let mut s = self.clone();
        for sp in &mut s.spikes {
            sp.v = sp.v.scale(lambda);
        }
        for v in &mut s.domain.vertices {
            if let DomainVertex::Ideal { v: lift, .. } = v {
                *lift = lift.scale(lambda);
            }
        }
        Ok(s)
    }

    /// Invariant audit: generator classification, decoration lightlike-ness,
    /// side-pairing consistency, convexity of the fundamental polygon.
    pub fn audit(&self) -> AuditReport {
        let mut issues = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            match g.classify(self.tol) {
                IsoClass::Hyperbolic => {
                    if g.det_sign < 0 {
                        issues.push(format!("generator {i}: hyperbolic with det −1"));
                    }
                }
                IsoClass::GlideReflection => {
                    if self.orientable {
                        issues.push(format!("generator {i}: glide reflection on orientable surface"));
                    }
                }
                c => issues.push(format!("generator {i}: classifies as {c:?}")),
            }
        }
        // Discreteness proxy: no elliptic/parabolic/trivial nontrivial words.
        for w in conjugacy_classes(self.rank(), 4) {
            match self.holonomy(&w).classify(self.tol) {
                IsoClass::Hyperbolic | IsoClass::GlideReflection => {}
                c => issues.push(format!("word {:?} classifies as {c:?}", w.0)),
            }
        }
        for (i, sp) in self.spikes.iter().enumerate() {
            if !lightlike_future(sp.v, self.tol) {
                issues.push(format!("spike {i}: decoration not future lightlike"));
            }
            if sp.peripheral_index >= self.peripherals.len() {
                issues.push(format!("spike {i}: bad peripheral index"));
            }
        }
        let q_total: usize = self.peripherals.iter().map(|p| p.q).sum();
        if q_total != self.spikes.len() {
            issues.push("spike count disagrees with the spike vector".into());
        }
        self.audit_domain(&mut issues);
        AuditReport { issues }
    }

    fn audit_domain(&self, issues: &mut Vec<String>) {
        let d = &self.domain;
        let n = d.vertices.len();
        if d.sides.len() != n {
            issues.push("domain: side/vertex count mismatch".into());
            return;
        }
        for (i, v) in d.vertices.iter().enumerate() {
            match v {
                DomainVertex::Ideal { spike, v } => {
                    if !lightlike_future(*v, self.tol) {
                        issues.push(format!("domain vertex {i}: lift not future lightlike"));
                    }
                    if *spike >= self.spikes.len() {
                        issues.push(format!("domain vertex {i}: bad spike index"));
                    }
                }
                DomainVertex::Finite(p) => {
                    if (p.v.norm2() + 1.0).abs() > 1e-8 {
                        issues.push(format!("domain vertex {i}: not on the hyperboloid"));
                    }
                }
            }
        }
        // Side pairings: letter isometry maps endpoints onto the partner's.
        for (i, s) in d.sides.iter().enumerate() {
            if let SideKind::Paired { letter, partner } = s {
                let p = *partner;
                if p >= n {
                    issues.push(format!("side {i}: bad partner index"));
                    continue;
                }
                match d.sides[p] {
                    SideKind::Paired {
                        letter: l2,
                        partner: p2,
                    } => {
                        if p2 != i || l2 != -letter {
                            issues.push(format!("side {i}: partner back-link inconsistent"));
                        }
                    }
                    _ => issues.push(format!("side {i}: partner is not a cut side")),
                }
                let h = self.letter_isometry(*letter);
                let (a, b) = d.side_vertices(i);
                let (c, e) = d.side_vertices(p);
                let images = [
                    vertex_image(h, &d.vertices[a]),
                    vertex_image(h, &d.vertices[b]),
                ];
                let targets = [d.vertices[c].klein(), d.vertices[e].klein()];
                let direct = kdist(images[0], targets[0]).max(kdist(images[1], targets[1]));
                let swapped = kdist(images[0], targets[1]).max(kdist(images[1], targets[0]));
                if direct.min(swapped) > 1e-8 {
                    issues.push(format!("side {i}: pairing does not map onto partner"));
                }
            }
        }
        // Convexity: consecutive edge cross products keep one sign.
        let pts: Vec<(f64, f64)> = d.vertices.iter().map(|v| v.klein()).collect();
        let mut sign = 0.0f64;
        for i in 0..n {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            let c = pts[(i + 2) % n];
            let cr = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
            if cr.abs() > 1e-12 {
                if sign != 0.0 && cr.signum() != sign {
                    issues.push("domain: polygon not convex".into());
                    break;
                }
                sign = cr.signum();
            }
        }
    }
}

fn vertex_image(h: Isometry, v: &DomainVertex) -> (f64, f64) {
    match v {
        DomainVertex::Ideal { v, .. } => klein_of(h.act(*v)),
        DomainVertex::Finite(p) => klein_of(h.act(p.v)),
    }
}

fn kdist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn ideal_point(angle: f64, scale: f64) -> Vec21 {
    Vec21::new(angle.cos(), angle.sin(), 1.0).scale(scale)
}

/// Decorated ideal polygon: convex hull of q >= 3 cyclically ordered ideal
/// points; trivial holonomy.
pub fn build_ideal_polygon(points: &[Vec21]) -> Result<DecoratedSurface, SurfaceError> {
    let q = points.len();
    if q < 3 {
        return Err(SurfaceError::TooFewPoints);
    }
    for &v in points {
        if !lightlike_future(v, SURFACE_TOL) {
            return Err(SurfaceError::BadParams("point not future lightlike".into()));
        }
    }
    // Strict cyclic order: angles ascend after rotating the minimum first,
    // with no repeats.
    let angles: Vec<f64> = points.iter().map(|&v| klein_angle(v)).collect();
    let start = angles
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    for k in 0..q - 1 {
        let a = angles[(start + k) % q];
        let b = angles[(start + k + 1) % q];
        if b - a <= 1e-12 {
            return Err(SurfaceError::BadOrder);
        }
    }
    let vertices = points
        .iter()
        .enumerate()
        .map(|(i, &v)| DomainVertex::Ideal { spike: i, v })
        .collect();
    let sides = (0..q).map(|i| SideKind::Edge { id: i }).collect();
    let spikes = points
        .iter()
        .enumerate()
        .map(|(i, &v)| SpikeDecoration {
            peripheral_index: 0,
            position_index: i,
            v,
        })
        .collect();
    Ok(DecoratedSurface {
        orientable: true,
        genus_or_h: 0,
        generators: Vec::new(),
        peripherals: vec![Peripheral { q, closed: false }],
        spikes,
        domain: FundamentalDomain { vertices, sides },
        family: Family::IdealPolygon { q },
        tol: SURFACE_TOL,
    })
}

/// Crown: annulus with one closed geodesic boundary and q spikes.
/// Holonomy Z = <diag(e^{l/2}, e^{-l/2})>; spikes at the given Klein
/// angles (strictly decreasing, in the open upper half circle, staying
/// strictly ahead of the γ-image of the first one).
pub fn build_crown(
    q: usize,
    translation_length: f64,
    spike_params: &[(f64, f64)],
) -> Result<DecoratedSurface, SurfaceError> {
    if q == 0 || spike_params.len() != q {
        return Err(SurfaceError::BadParams("need q >= 1 spike params".into()));
    }
    if !(translation_length > 0.0) {
        return Err(SurfaceError::NonPositiveLength);
    }
    let lam = (translation_length / 2.0).exp();
    let g = Isometry::new([[lam, 0.0], [0.0, 1.0 / lam]]).expect("diagonal");
    let lifts: Vec<Vec21> = spike_params
        .iter()
        .map(|&(a, s)| ideal_point(a, s))
        .collect();
    let first_image = g.act(lifts[0]);
    let mut angles: Vec<f64> = spike_params.iter().map(|&(a, _)| a).collect();
    angles.push(klein_angle(first_image));
    for w in angles.windows(2) {
        if !(w[0] > w[1]) {
            return Err(SurfaceError::BadSpikeOrder);
        }
    }
    if !(angles[0] < std::f64::consts::PI) || !(angles[angles.len() - 1] > 0.0) {
        return Err(SurfaceError::BadSpikeOrder);
    }
    // Axis of g is the x-axis geodesic; feet of the perpendiculars from the
    // first spike and its image bound the closed-boundary segment.
    let axis = g.axis().expect("hyperbolic");
    // Foot of the ideal point: remove the axis-normal component (timelike
    // for any lightlike vector off the axis).
    let w = lifts[0] - lifts[0].dot(axis.n) * axis.n;
    let p_foot = HypPoint::project(w).expect("ideal foot");
    let p_foot2 = HypPoint::new(g.act(p_foot.v)).expect("isometric image");
    let mut vertices = vec![DomainVertex::Finite(p_foot)];
    for (i, &v) in lifts.iter().enumerate() {
        vertices.push(DomainVertex::Ideal { spike: i, v });
    }
    vertices.push(DomainVertex::Ideal {
        spike: 0,
        v: first_image,
    });
    vertices.push(DomainVertex::Finite(p_foot2));
    let mut sides = vec![SideKind::Paired {
        letter: 1,
        partner: q + 1,
    }];
    for i in 0..q {
        sides.push(SideKind::Edge { id: i });
    }
    sides.push(SideKind::Paired {
        letter: -1,
        partner: 0,
    });
    sides.push(SideKind::ClosedBoundary);
    let spikes = spike_params
        .iter()
        .enumerate()
        .map(|(i, &(a, s))| SpikeDecoration {
            peripheral_index: 0,
            position_index: i,
            v: ideal_point(a, s),
        })
        .collect();
    Ok(DecoratedSurface {
        orientable: true,
        genus_or_h: 0,
        generators: vec![g],
        peripherals: vec![
            Peripheral { q, closed: false },
            Peripheral { q: 0, closed: true },
        ],
        spikes,
        domain: FundamentalDomain { vertices, sides },
        family: Family::Crown { q },
        tol: SURFACE_TOL,
    })
}

/// Spiked annulus: ideal (q1+q2+2)-gon with two opposite sides glued by a
/// hyperbolic isometry whose axis crosses both at equal angles. The model
/// pins the cut-side endpoints at Klein angles ±45°, ±135°; the gluing is
/// then diag(1+√2, 1/(1+√2)). Intermediate spike angles lie strictly
/// inside (45°,135°) on top and (225°,315°) on the bottom.
pub fn build_spiked_annulus(
    q1: usize,
    q2: usize,
    top: &[(f64, f64)],
    bottom: &[(f64, f64)],
    corner_scales: [f64; 2],
) -> Result<DecoratedSurface, SurfaceError> {
    if q1 == 0 || q2 == 0 {
        return Err(SurfaceError::BadParams("need q1, q2 >= 1".into()));
    }
    if top.len() != q1 - 1 || bottom.len() != q2 - 1 {
        return Err(SurfaceError::BadParams(
            "need q1-1 top and q2-1 bottom intermediate spikes".into(),
        ));
    }
    use std::f64::consts::FRAC_PI_4;
    let lam = 1.0 + 2.0f64.sqrt();
    let g = Isometry::new([[lam, 0.0], [0.0, 1.0 / lam]]).expect("diagonal");
    let v_top = ideal_point(FRAC_PI_4, corner_scales[0]);
    let v_bot = ideal_point(5.0 * FRAC_PI_4, corner_scales[1]);
    let mut check = vec![FRAC_PI_4];
    check.extend(top.iter().map(|&(a, _)| a));
    check.push(3.0 * FRAC_PI_4);
    check.push(5.0 * FRAC_PI_4);
    check.extend(bottom.iter().map(|&(a, _)| a));
    check.push(7.0 * FRAC_PI_4);
    for w in check.windows(2) {
        if !(w[0] < w[1]) {
            return Err(SurfaceError::BadOrder);
        }
    }
    let mut vertices = vec![DomainVertex::Ideal { spike: 0, v: v_top }];
    let mut spikes = vec![SpikeDecoration {
        peripheral_index: 0,
        position_index: 0,
        v: v_top,
    }];
    for (k, &(a, s)) in top.iter().enumerate() {
        vertices.push(DomainVertex::Ideal {
            spike: spikes.len(),
            v: ideal_point(a, s),
        });
        spikes.push(SpikeDecoration {
            peripheral_index: 0,
            position_index: k + 1,
            v: ideal_point(a, s),
        });
    }
    vertices.push(DomainVertex::Ideal {
        spike: 0,
        v: g.inverse().act(v_top),
    });
    let bottom_first = spikes.len();
    vertices.push(DomainVertex::Ideal {
        spike: bottom_first,
        v: v_bot,
    });
    spikes.push(SpikeDecoration {
        peripheral_index: 1,
        position_index: 0,
        v: v_bot,
    });
    for (k, &(a, s)) in bottom.iter().enumerate() {
        vertices.push(DomainVertex::Ideal {
            spike: spikes.len(),
            v: ideal_point(a, s),
        });
        spikes.push(SpikeDecoration {
            peripheral_index: 1,
            position_index: k + 1,
            v: ideal_point(a, s),
        });
    }
    vertices.push(DomainVertex::Ideal {
        spike: bottom_first,
        v: g.act(v_bot),
    });
    let n = vertices.len(); // q1 + q2 + 2
    let mut sides = Vec::with_capacity(n);
    for i in 0..q1 {
        sides.push(SideKind::Edge { id: i });
    }
    sides.push(SideKind::Paired {
        letter: 1,
        partner: n - 1,
    });
    for i in 0..q2 {
        sides.push(SideKind::Edge { id: q1 + i });
    }
    sides.push(SideKind::Paired {
        letter: -1,
        partner: q1,
    });
    Ok(DecoratedSurface {
        orientable: true,
        genus_or_h: 0,
        generators: vec![g],
        peripherals: vec![
            Peripheral {
                q: q1,
                closed: false,
            },
            Peripheral {
                q: q2,
                closed: false,
            },
        ],
        spikes,
        domain: FundamentalDomain { vertices, sides },
        family: Family::SpikedAnnulus { q1, q2 },
        tol: SURFACE_TOL,
    })
}

/// Spiked Möbius strip: ideal (q+2)-gon with two adjacent sides glued by a
/// gliding reflection (complementary crossing angles). The model pins the
/// glued-side vertices at Klein angles 90°, 210°, 330°; the gluing is
/// diag(λ, −1/λ) with λ² = 2+√3. Intermediate spike angles lie strictly
/// inside (210°, 330°).
pub fn build_spiked_moebius(
    q: usize,
    intermediate: &[(f64, f64)],
    corner_scale: f64,
) -> Result<DecoratedSurface, SurfaceError> {
    if q == 0 || intermediate.len() != q - 1 {
        return Err(SurfaceError::BadParams(
            "need q >= 1 and q-1 intermediate spikes".into(),
        ));
    }
    use std::f64::consts::PI;
    let lam = (2.0 + 3.0f64.sqrt()).sqrt();
    let h = Isometry::new([[lam, 0.0], [0.0, -1.0 / lam]]).expect("diagonal");
    let v0 = ideal_point(PI / 2.0, corner_scale);
    let mut check = vec![7.0 * PI / 6.0];
    check.extend(intermediate.iter().map(|&(a, _)| a));
    check.push(11.0 * PI / 6.0);
    for w in check.windows(2) {
        if !(w[0] < w[1]) {
            return Err(SurfaceError::BadOrder);
        }
    }
    let mut vertices = vec![
        DomainVertex::Ideal { spike: 0, v: v0 },
        DomainVertex::Ideal {
            spike: 0,
            v: h.inverse().act(v0),
        },
    ];
    let mut spikes = vec![SpikeDecoration {
        peripheral_index: 0,
        position_index: 0,
        v: v0,
    }];
    for (k, &(a, s)) in intermediate.iter().enumerate() {
        vertices.push(DomainVertex::Ideal {
            spike: spikes.len(),
            v: ideal_point(a, s),
        });
        spikes.push(SpikeDecoration {
            peripheral_index: 0,
            position_index: k + 1,
            v: ideal_point(a, s),
        });
    }
    vertices.push(DomainVertex::Ideal {
        spike: 0,
        v: h.act(v0),
    });
    let n = vertices.len(); // q + 2
    let mut sides = vec![SideKind::Paired {
        letter: 1,
        partner: n - 1,
    }];
    for i in 0..q {
        sides.push(SideKind::Edge { id: i });
    }
    sides.push(SideKind::Paired {
        letter: -1,
        partner: 0,
    });
    if (h * h).classify(SURFACE_TOL) != IsoClass::Hyperbolic {
        return Err(SurfaceError::BadGluing);
    }
    Ok(DecoratedSurface {
        orientable: false,
        genus_or_h: 1,
        generators: vec![h],
        peripherals: vec![Peripheral { q, closed: false }],
        spikes,
        domain: FundamentalDomain { vertices, sides },
        family: Family::SpikedMoebius { q },
        tol: SURFACE_TOL,
    })
}

/// Core geodesic of a rank-one surface, oriented as the generator's axis.
pub fn core_axis(s: &DecoratedSurface) -> Option<Geodesic> {
    if s.rank() != 1 {
        return None;
    }
    let g = s.generators[0];
    match g.classify(s.tol) {
        IsoClass::Hyperbolic => g.axis().ok(),
        IsoClass::GlideReflection => (g * g).axis().ok(),
        _ => None,
    }
}
