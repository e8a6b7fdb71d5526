//! Margulis invariants, crooked planes, photons and decorated spacetimes.
//!
//! A cocycle u over the holonomy group defines an affine deformation
//! x -> rho(gamma)x + u(gamma) of R^{2,1}; its Margulis invariant
//! alpha_u(gamma) = <u(gamma), v0(gamma)> is the first variation of the
//! length of gamma. A tile map turns a weighted arc family into such a
//! deformation together with one photon (lightlike line) per decorated
//! spike and one crooked plane per finite arc; disjointness and constant
//! handedness of the photons certify the deformation, and the tangent
//! vector is recovered from the photons (round trip of the bijection).
//!
//! Photon bases and crooked-plane vertices live in the affine chart of
//! the deformed action, so the face field phi enters with a sign flip
//! matching the cocycle convention (see the strip module); equivariance
//! then reads P' = rho(gamma)P + u(gamma) with the exposed cocycle.

use crate::arc_complex::{validate_pruned_point, ArcKind, EdgeLabel, WeightedArcFamily};
use crate::isometry::{IsoClass, Isometry};
use crate::minkowski::{det3, Vec21};
use crate::strip::{
    tile_map, Cocycle, StripError, TangentVector, TileMap,
};
use crate::surface::DecoratedSurface;
use crate::word::{conjugacy_classes, reduced_words, Word};
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MargulisError {
    #[error("holonomy of the word is not hyperbolic")]
    NotHyperbolic,
    #[error("arc is not edge-to-edge")]
    NotEdgeToEdge,
    #[error("spike not found in the tiling")]
    SpikeNotFound,
    #[error("photons intersect")]
    IntersectingPhotons,
    #[error("stem geodesics cross")]
    StemsCross,
    #[error("vector is not in the stem plane")]
    NotInPlane,
    #[error("family is not filling")]
    NotFilling,
    #[error("photon family fails disjointness/handedness: {0}")]
    DisjointnessFailure(String),
    #[error("spacetime linear part does not match the surface holonomy")]
    MismatchedLinearPart,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Strip(#[from] StripError),
}

/// Margulis invariant alpha_u(gamma) = <u(gamma), v0(gamma)> with v0 the
/// unit neutral vector; equals the first length derivative. Glide
/// reflections are admitted via their (hyperbolic) axis.
pub fn margulis_invariant(
    gens: &[Isometry],
    u: &Cocycle,
    word: &Word,
) -> Result<f64, MargulisError> {
    let h = word.evaluate(gens);
    let v0 = h.neutral_vector().map_err(|_| MargulisError::NotHyperbolic)?;
    Ok(u.evaluate(gens, word).dot(v0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SignVerdict {
    AllPositive,
    AllNegative,
    Mixed { positive: Word, negative: Word },
}

/// Sign census of alpha_u over conjugacy representatives up to the word
/// cutoff (Opposite Sign Lemma: a proper action needs a constant sign).
/// A vanishing invariant counts as a witness of both signs.
pub fn opposite_sign_check(
    gens: &[Isometry],
    u: &Cocycle,
    word_cutoff: usize,
) -> SignVerdict {
    let tol = 1e-12;
    let classes = conjugacy_classes(gens.len(), word_cutoff);
    #[cfg(feature = "parallel")]
    let it = classes.par_iter();
    #[cfg(not(feature = "parallel"))]
    let it = classes.iter();
    let invariants: Vec<(Word, f64)> = it
        .filter_map(|w| margulis_invariant(gens, u, w).ok().map(|a| (w.clone(), a)))
        .collect();
    let mut pos: Option<Word> = None;
    let mut neg: Option<Word> = None;
    for (w, a) in invariants {
        if a >= -tol {
            pos.get_or_insert_with(|| w.clone());
        }
        if a <= tol {
            neg.get_or_insert_with(|| w.clone());
        }
        if let (Some(p), Some(n)) = (&pos, &neg) {
            return SignVerdict::Mixed {
                positive: p.clone(),
                negative: n.clone(),
            };
        }
    }
    if pos.is_some() {
        SignVerdict::AllPositive
    } else {
        SignVerdict::AllNegative
    }
}

/// First variation of a horoball-connection length from a tangent vector
/// alone: the decorations move by their spike motions and the holonomy by
/// exp_killing(u, t/2)·rho (velocity -u x p).
pub fn dl_horoball_from_tangent(
    s: &DecoratedSurface,
    t: &TangentVector,
    spike_from: usize,
    spike_to: usize,
    word: &Word,
) -> Result<f64, MargulisError> {
    let v1 = s.spikes[spike_from].v;
    let rho = s.holonomy(word);
    let v2t = rho.act(s.spikes[spike_to].v);
    let ip = v1.dot(v2t);
    if ip >= -1e-300 {
        return Err(MargulisError::Invalid("decorations share a center".into()));
    }
    let dv1 = t.spike_motions[spike_from];
    let uw = t.cocycle.evaluate(&s.generators, word);
    let dv2t = rho.act(t.spike_motions[spike_to]) - uw.mcross(v2t);
    Ok((dv1.dot(v2t) + v1.dot(dv2t)) / ip)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AdmissibilityWitness {
    Closed {
        word: Word,
        dl: f64,
        length: f64,
        ratio: f64,
    },
    Horoball {
        from: usize,
        to: usize,
        word: Word,
        dl: f64,
        length: f64,
        ratio: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub epsilon: f64,
    pub pass: bool,
    pub min_ratio: Option<f64>,
    pub witness: Option<AdmissibilityWitness>,
    pub closed_checked: usize,
    pub horoball_checked: usize,
}

/// Admissibility up to cutoffs: every enumerated closed geodesic and
/// horoball connection must lengthen at relative rate >= epsilon (raw dl
/// when the connection length is <= 0). Reports the worst witness.
pub fn admissible_check(
    s: &DecoratedSurface,
    t: &TangentVector,
    word_cutoff: usize,
    length_cutoff: f64,
    epsilon: f64,
) -> AdmissibilityReport {
    let classes = conjugacy_classes(s.rank(), word_cutoff);
    #[cfg(feature = "parallel")]
    let it = classes.par_iter();
    #[cfg(not(feature = "parallel"))]
    let it = classes.iter();
    let closed: Vec<AdmissibilityWitness> = it
        .filter_map(|w| {
            let h = s.holonomy(w);
            if !matches!(
                h.classify(s.tol),
                IsoClass::Hyperbolic | IsoClass::GlideReflection
            ) {
                return None;
            }
            let l = h.trace_length().ok()?;
            if l > length_cutoff {
                return None;
            }
            let dl = margulis_invariant(&s.generators, &t.cocycle, w).ok()?;
            Some(AdmissibilityWitness::Closed {
                word: w.clone(),
                dl,
                length: l,
                ratio: dl / l,
            })
        })
        .collect();

    let mut words = vec![Word::identity()];
    words.extend(reduced_words(s.rank(), word_cutoff));
    let pairs: Vec<(usize, usize, &Word)> = (0..s.spike_count())
        .flat_map(|from| {
            let words = &words;
            (0..s.spike_count())
                .flat_map(move |to| words.iter().map(move |w| (from, to, w)))
        })
        .collect();
    #[cfg(feature = "parallel")]
    let it = pairs.par_iter();
    #[cfg(not(feature = "parallel"))]
    let it = pairs.iter();
    let horoball: Vec<AdmissibilityWitness> = it
        .filter_map(|&(from, to, w)| {
            if from == to && w.is_empty() {
                return None;
            }
            let rho = s.holonomy(w);
            let v2t = rho.act(s.spikes[to].v);
            let ip = s.spikes[from].v.dot(v2t);
            if ip >= -1e-12 {
                return None; // same point at infinity
            }
            let l = (-ip / 2.0).ln();
            let dl = dl_horoball_from_tangent(s, t, from, to, w).ok()?;
            Some(AdmissibilityWitness::Horoball {
                from,
                to,
                word: w.clone(),
                dl,
                length: l,
                ratio: if l > 0.0 { dl / l } else { dl },
            })
        })
        .collect();

    let closed_checked = closed.len();
    let horoball_checked = horoball.len();
    let mut min_ratio: Option<f64> = None;
    let mut witness: Option<AdmissibilityWitness> = None;
    for cand in closed.into_iter().chain(horoball) {
        let ratio = match &cand {
            AdmissibilityWitness::Closed { ratio, .. } => *ratio,
            AdmissibilityWitness::Horoball { ratio, .. } => *ratio,
        };
        if min_ratio.is_none_or(|m| ratio < m) {
            min_ratio = Some(ratio);
            witness = Some(cand);
        }
    }

    AdmissibilityReport {
        epsilon,
        pass: min_ratio.is_some_and(|m| m >= epsilon),
        min_ratio,
        witness,
        closed_checked,
        horoball_checked,
    }
}

/// The two future lightlike directions orthogonal to a spacelike vector,
/// ordered so that (vplus, v, vminus) is positively oriented; both are
/// normalized to z = 1.
pub fn null_directions(v: Vec21) -> Result<(Vec21, Vec21), MargulisError> {
    let n2 = v.norm2();
    if n2 <= 0.0 {
        return Err(MargulisError::Invalid("director is not spacelike".into()));
    }
    let vh = v.scale(1.0 / n2.sqrt());
    // Timelike unit in v^perp (projection of e_z), future-pointing.
    let p = Vec21::new(vh.z * vh.x, vh.z * vh.y, 1.0 + vh.z * vh.z);
    let ph = p.scale(1.0 / (1.0 + vh.z * vh.z).sqrt());
    let m = vh.mcross(ph);
    let mh = m.scale(1.0 / m.norm2().sqrt());
    let a = ph + mh;
    let b = ph - mh;
    let (cand1, cand2) = (a.scale(1.0 / a.z), b.scale(1.0 / b.z));
    if det3(cand1, vh, cand2) > 0.0 {
        Ok((cand1, cand2))
    } else {
        Ok((cand2, cand1))
    }
}

/// Crooked plane P(w, v): stem = timelike double cone of v^perp, wings
/// attached along R·vplus (on the +v side) and R·vminus (on the -v side).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrookedPlane {
    pub w: Vec21,
    pub v: Vec21,
    pub vplus: Vec21,
    pub vminus: Vec21,
}

pub fn crooked_plane(w: Vec21, v: Vec21) -> Result<CrookedPlane, MargulisError> {
    let (vplus, vminus) = null_directions(v)?;
    Ok(CrookedPlane { w, v, vplus, vminus })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StemQuadrant {
    pub vplus: Vec21,
    pub vminus: Vec21,
}

pub fn stem_quadrant(p: &CrookedPlane) -> StemQuadrant {
    StemQuadrant {
        vplus: p.vplus,
        vminus: p.vminus,
    }
}

/// True iff w = a·vplus - b·vminus with a, b > 0. Errors when w is not in
/// the stem plane span(vplus, vminus).
pub fn stem_quadrant_contains(sq: &StemQuadrant, w: Vec21) -> Result<bool, MargulisError> {
    let g1 = sq.vplus;
    let g2 = -sq.vminus;
    // Euclidean least squares in the 2-plane.
    let e = |a: Vec21, b: Vec21| a.x * b.x + a.y * b.y + a.z * b.z;
    let (a11, a12, a22) = (e(g1, g1), e(g1, g2), e(g2, g2));
    let (b1, b2) = (e(g1, w), e(g2, w));
    let det = a11 * a22 - a12 * a12;
    if det.abs() < 1e-14 {
        return Err(MargulisError::Invalid("degenerate stem plane".into()));
    }
    let a = (b1 * a22 - b2 * a12) / det;
    let b = (a11 * b2 - a12 * b1) / det;
    let res = w - g1.scale(a) - g2.scale(b);
    let scale = w.max_abs().max(1.0);
    if res.max_abs() > 1e-8 * scale {
        return Err(MargulisError::NotInPlane);
    }
    let tol = 1e-12 * scale;
    Ok(a > tol && b > tol)
}

/// Crooked plane of an edge-to-edge arc: the stem lies over the arc's own
/// geodesic (director = its dual), oriented so that the tile-map jump
/// across the arc lies in the stem quadrant; vertex = the (affine-chart)
/// average of the two adjacent face values along the first piece.
pub fn crooked_from_arc(tm: &TileMap, arc: usize) -> Result<CrookedPlane, MargulisError> {
    let lift = tm
        .tiling
        .lifts
        .get(arc)
        .ok_or_else(|| MargulisError::Invalid("arc index out of range".into()))?;
    if lift.kind != ArcKind::EdgeToEdge {
        return Err(MargulisError::NotEdgeToEdge);
    }
    let edge = tm
        .tiling
        .sub
        .edges
        .iter()
        .find(|e| matches!(e.label, EdgeLabel::Arc { arc: a, piece: 0 } if a == arc))
        .ok_or_else(|| MargulisError::Invalid("arc edge missing".into()))?;
    let (Some(l), Some(r)) = (edge.left, edge.right) else {
        return Err(MargulisError::Invalid("arc edge on the outer face".into()));
    };
    let w = -(tm.phi[l] + tm.phi[r]).scale(0.5);
    // Affine-chart jump toward side B (the side the strip field pushes):
    // for piece 0, side B is the right face.
    let flip = lift.pieces[0].flip;
    let (af, bf) = if flip > 0 { (l, r) } else { (r, l) };
    let jump = -tm.phi[bf] + tm.phi[af];
    let n = lift.geodesic.n;
    for dir in [n, -n] {
        let p = crooked_plane(w, dir)?;
        if matches!(stem_quadrant_contains(&stem_quadrant(&p), jump), Ok(true)) {
            return Ok(p);
        }
    }
    Err(MargulisError::Invalid(
        "strip jump not in either stem quadrant (zero weight?)".into(),
    ))
}

/// Affine image of a crooked plane under (linear part, translation);
/// lightlike duals are recomputed from the transported director.
pub fn crooked_transform(
    h: Isometry,
    u: Vec21,
    p: &CrookedPlane,
) -> Result<CrookedPlane, MargulisError> {
    crooked_plane(h.adjoint(p.w) + u, h.adjoint(p.v))
}

/// Crooked plane of the deck-translated arc, via the equivariant field.
pub fn crooked_orbit_plane(
    s: &DecoratedSurface,
    tm: &TileMap,
    arc: usize,
    deck: &Word,
) -> Result<CrookedPlane, MargulisError> {
    let p = crooked_from_arc(tm, arc)?;
    let rho = s.holonomy(deck);
    let u = tm.cocycle.evaluate(&s.generators, deck);
    crooked_transform(rho, u, &p)
}

/// Equivariance residual: the transformed plane recomputed from the
/// director (crooked_transform) against the directly transported frame
/// (act on the lightlike duals, which preserves the future cone for both
/// determinant signs).
pub fn crooked_equivariance_residual(
    s: &DecoratedSurface,
    tm: &TileMap,
    arc: usize,
    deck: &Word,
) -> Result<f64, MargulisError> {
    let p = crooked_from_arc(tm, arc)?;
    let rho = s.holonomy(deck);
    let u = tm.cocycle.evaluate(&s.generators, deck);
    let q = crooked_transform(rho, u, &p)?;
    // Point transport of the null directions matches the recomputed labels
    // for both determinant signs: for det -1 the adjoint negates the
    // director, and the induced label swap cancels against act = -adjoint.
    let vp = rho.act(p.vplus);
    let vm = rho.act(p.vminus);
    let r1 = (vp.scale(1.0 / vp.z) - q.vplus).max_abs();
    let r2 = (vm.scale(1.0 / vm.z) - q.vminus).max_abs();
    Ok(r1.max(r2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrookedDisjointReport {
    pub quadrant: bool,
    pub sampled: bool,
    pub min_separation: f64,
}

fn unit(v: Vec21) -> Vec21 {
    v.scale(1.0 / v.norm2().abs().sqrt())
}

/// The plane with its director re-oriented so its positive side contains
/// the reference point (the lightlike generators swap when it flips).
fn oriented_toward(p: &CrookedPlane, toward: Vec21) -> Result<CrookedPlane, MargulisError> {
    if p.v.dot(toward) >= 0.0 {
        Ok(p.clone())
    } else {
        crooked_plane(p.w, -p.v)
    }
}

/// Membership of d in the open cone spanned by the four generators
/// (Caratheodory over 3-subsets).
pub fn in_open_cone(gens: [Vec21; 4], d: Vec21) -> bool {
    let scale = d.max_abs().max(1.0);
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                let (a, b, c) = (gens[i], gens[j], gens[k]);
                let det = det3(a, b, c);
                if det.abs() < 1e-12 {
                    continue;
                }
                // Cramer solve d = la*a + lb*b + lc*c.
                let la = det3(d, b, c) / det;
                let lb = det3(a, d, c) / det;
                let lc = det3(a, b, d) / det;
                let tol = 1e-10 * scale;
                if la > tol && lb > tol && lc > tol {
                    return true;
                }
            }
        }
    }
    false
}

/// Flat convex piece w + a·g1 + b·g2 with optional nonnegativity
/// constraints on the coefficients.
struct FlatPiece {
    w: Vec21,
    g1: Vec21,
    g2: Vec21,
    c1: bool,
    c2: bool,
}

fn euclid(a: Vec21, b: Vec21) -> f64 {
    a.x * b.x + a.y * b.y + a.z * b.z
}

fn piece_point(p: &FlatPiece, a: f64, b: f64) -> Vec21 {
    p.w + p.g1.scale(a) + p.g2.scale(b)
}

/// Euclidean projection of x onto the piece (exact, by case analysis).
fn project_piece(p: &FlatPiece, x: Vec21) -> Vec21 {
    let d = x - p.w;
    let (a11, a12, a22) = (euclid(p.g1, p.g1), euclid(p.g1, p.g2), euclid(p.g2, p.g2));
    let (b1, b2) = (euclid(p.g1, d), euclid(p.g2, d));
    let det = a11 * a22 - a12 * a12;
    let mut best: Option<(f64, Vec21)> = None;
    let mut consider = |a: f64, b: f64| {
        if (p.c1 && a < 0.0) || (p.c2 && b < 0.0) {
            return;
        }
        let pt = piece_point(p, a, b);
        let dist = euclid(pt - x, pt - x);
        if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
            best = Some((dist, pt));
        }
    };
    if det.abs() > 1e-14 {
        consider((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det);
    }
    // Edge/corner candidates.
    consider(b1 / a11, 0.0);
    consider(0.0, b2 / a22);
    consider(0.0, 0.0);
    best.expect("corner always feasible").1
}

/// Minimum distance between two flat convex pieces by alternating
/// projections.
fn piece_distance(p: &FlatPiece, q: &FlatPiece) -> f64 {
    let mut x = p.w;
    for _ in 0..400 {
        let y = project_piece(q, x);
        x = project_piece(p, y);
    }
    let y = project_piece(q, x);
    euclid(x - y, x - y).sqrt()
}

fn crooked_pieces(p: &CrookedPlane) -> [FlatPiece; 4] {
    let vh = unit(p.v);
    [
        // future stem quadrant and past stem quadrant
        FlatPiece { w: p.w, g1: p.vplus, g2: p.vminus, c1: true, c2: true },
        FlatPiece { w: p.w, g1: -p.vplus, g2: -p.vminus, c1: true, c2: true },
        // wings: half null planes on the +-v sides
        FlatPiece { w: p.w, g1: p.vplus, g2: vh, c1: false, c2: true },
        FlatPiece { w: p.w, g1: p.vminus, g2: -vh, c1: false, c2: true },
    ]
}

/// Minimum Euclidean separation of the two crooked planes, computed piece
/// by piece (alternating projections on convex flats, seeded
/// deterministically).
pub fn crooked_min_separation(p1: &CrookedPlane, p2: &CrookedPlane) -> f64 {
    let a = crooked_pieces(p1);
    let b = crooked_pieces(p2);
    let mut min = f64::INFINITY;
    for pa in &a {
        for pb in &b {
            min = min.min(piece_distance(pa, pb));
        }
    }
    min
}

/// Disjointness of two crooked planes. Primary: the stem-quadrant
/// criterion (w2 - w1 in the open sum of the quadrants oriented toward
/// each other); corroborated by the measured separation in the report.
/// Stems over the same geodesic use the translation criterion
/// (offset in +-SQ); crossing stem geodesics are an error.
pub fn crooked_disjoint_report(
    p1: &CrookedPlane,
    p2: &CrookedPlane,
    sep_tol: f64,
) -> Result<CrookedDisjointReport, MargulisError> {
    let v1 = unit(p1.v);
    let v2 = unit(p2.v);
    let d = p2.w - p1.w;
    let quadrant;
    if (v1 - v2).max_abs() < 1e-9 || (v1 + v2).max_abs() < 1e-9 {
        // Same stem geodesic: disjoint iff the offset is in +-SQ.
        let sq = StemQuadrant {
            vplus: p1.vplus,
            vminus: p1.vminus,
        };
        let inside = |x: Vec21| stem_quadrant_contains(&sq, x).unwrap_or(false);
        quadrant = d.max_abs() > 0.0 && (inside(d) || inside(-d));
    } else if v1.dot(v2).abs() <= 1.0 + 1e-12 {
        return Err(MargulisError::StemsCross);
    } else {
        // Ultraparallel: orient each director toward the other geodesic
        // and test d in SQ(v2) - SQ(v1) (exact for ultraparallel stems).
        let t2 = p2.vplus + p2.vminus; // timelike point over l2
        let t1 = p1.vplus + p1.vminus;
        let a = oriented_toward(p1, t2)?;
        let b = oriented_toward(p2, t1)?;
        quadrant = in_open_cone([b.vplus, -b.vminus, -a.vplus, a.vminus], d);
    }
    let min_separation = crooked_min_separation(p1, p2);
    Ok(CrookedDisjointReport {
        quadrant,
        sampled: min_separation > sep_tol,
        min_separation,
    })
}

pub fn crooked_disjoint(p1: &CrookedPlane, p2: &CrookedPlane) -> Result<bool, MargulisError> {
    Ok(crooked_disjoint_report(p1, p2, 1e-9)?.quadrant)
}

/// Lightlike line w + R·v0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Photon {
    pub w: Vec21,
    pub v0: Vec21,
}

/// Photon of a decorated spike: base = affine-chart value of the face at
/// the spike, direction = the decoration vector.
pub fn photon_from_spike(
    s: &DecoratedSurface,
    tm: &TileMap,
    spike: usize,
) -> Result<Photon, MargulisError> {
    if spike >= s.spike_count() {
        return Err(MargulisError::SpikeNotFound);
    }
    let v = s.spikes[spike].v;
    let vtx = (0..s.domain.vertices.len())
        .find(|&i| match s.domain.vertices[i] {
            crate::surface::DomainVertex::Ideal { spike: sp, v: vv } => {
                sp == spike && (vv - v).max_abs() < 1e-9
            }
            _ => false,
        })
        .ok_or(MargulisError::SpikeNotFound)?;
    let face = tm
        .tiling
        .sub
        .faces
        .iter()
        .position(|f| f.nodes.contains(&vtx))
        .ok_or(MargulisError::SpikeNotFound)?;
    Ok(Photon {
        w: -tm.phi[face],
        v0: v,
    })
}

/// Affine image of a photon (act keeps the direction future-pointing).
pub fn photon_translate(h: Isometry, u: Vec21, l: &Photon) -> Photon {
    Photon {
        w: h.adjoint(l.w) + u,
        v0: h.act(l.v0),
    }
}

/// Handedness pairing <w1 - w2, v1 x v2>; zero iff the photons meet.
pub fn photon_pairing(l1: &Photon, l2: &Photon) -> f64 {
    (l1.w - l2.w).dot(l1.v0.mcross(l2.v0))
}

pub fn photons_intersect(l1: &Photon, l2: &Photon) -> bool {
    let cross = l1.v0.mcross(l2.v0);
    let scale = (l1.w.max_abs() + l2.w.max_abs() + 1.0)
        * l1.v0.max_abs().max(1.0)
        * l2.v0.max_abs().max(1.0);
    if cross.max_abs() < 1e-12 * l1.v0.max_abs().max(1.0) * l2.v0.max_abs().max(1.0) {
        // Parallel directions: same line iff the offset is parallel too.
        let d = l1.w - l2.w;
        return d.mcross(l1.v0).max_abs() < 1e-10 * scale.max(1.0);
    }
    photon_pairing(l1, l2).abs() < 1e-10 * scale
}

/// Sign of the handedness pairing for a disjoint pair with independent
/// directions (canonical order: pass photons in spike order i < j).
pub fn handedness(l1: &Photon, l2: &Photon) -> Result<i32, MargulisError> {
    if photons_intersect(l1, l2) {
        return Err(MargulisError::IntersectingPhotons);
    }
    Ok(if photon_pairing(l1, l2) > 0.0 { 1 } else { -1 })
}

/// Crooked-plane facet of the fundamental region: the plane of an arc,
/// optionally paired with the facet it maps to under a pairing word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrookedFacet {
    pub arc: usize,
    pub plane: CrookedPlane,
    pub paired_with: Option<usize>,
    pub pairing_word: Option<Word>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoratedSpacetime {
    pub holonomy: Vec<Isometry>,
    pub cocycle: Cocycle,
    pub photons: Vec<Photon>,
    pub crooked_fd: Vec<CrookedFacet>,
    /// Handedness sign per spike pair (i, j, sign), i < j.
    pub handedness_signs: Vec<(usize, usize, i32)>,
}

/// Assembles the decorated spacetime of a weighted filling family:
/// cocycle, one photon per spike (verified pairwise disjoint with
/// constant handedness) and crooked fundamental-domain facets with their
/// generator pairings.
pub fn build_decorated_spacetime(
    s: &DecoratedSurface,
    x: &WeightedArcFamily,
) -> Result<DecoratedSpacetime, MargulisError> {
    if !validate_pruned_point(s, x).pass() {
        return Err(MargulisError::NotFilling);
    }
    let tm = tile_map(s, x)?;
    let photons: Vec<Photon> = (0..s.spike_count())
        .map(|i| photon_from_spike(s, &tm, i))
        .collect::<Result<_, _>>()?;
    let mut handedness_signs = Vec::new();
    let mut census = None;
    for i in 0..photons.len() {
        for j in (i + 1)..photons.len() {
            let sign = handedness(&photons[i], &photons[j]).map_err(|_| {
                MargulisError::DisjointnessFailure(format!("photons {i} and {j} intersect"))
            })?;
            match census {
                None => census = Some(sign),
                Some(c) if c != sign => {
                    return Err(MargulisError::DisjointnessFailure(format!(
                        "handedness of pair ({i},{j}) differs from earlier pairs"
                    )))
                }
                _ => {}
            }
            handedness_signs.push((i, j, sign));
        }
    }
    let mut crooked_fd = Vec::new();
    for (a, lift) in tm.tiling.lifts.iter().enumerate() {
        if lift.kind != ArcKind::EdgeToEdge {
            continue;
        }
        let base = crooked_fd.len();
        crooked_fd.push(CrookedFacet {
            arc: a,
            plane: crooked_from_arc(&tm, a)?,
            paired_with: None,
            pairing_word: None,
            residual: 0.0,
        });
        for gi in 0..s.rank() {
            let w = Word(vec![gi as i32 + 1]);
            let plane = crooked_orbit_plane(s, &tm, a, &w)?;
            let residual = crooked_equivariance_residual(s, &tm, a, &w)?;
            crooked_fd.push(CrookedFacet {
                arc: a,
                plane,
                paired_with: Some(base),
                pairing_word: Some(w),
                residual,
            });
        }
    }
    Ok(DecoratedSpacetime {
        holonomy: s.generators.clone(),
        cocycle: tm.cocycle,
        photons,
        crooked_fd,
        handedness_signs,
    })
}

/// Recovers the tangent vector from a decorated spacetime: the cocycle is
/// copied and each spike moves by (-w_i) x v_i — independent of the
/// chosen base point on the photon since mcross(v, v) = 0.
pub fn recover_tangent(
    dst: &DecoratedSpacetime,
    s: &DecoratedSurface,
) -> Result<TangentVector, MargulisError> {
    if dst.photons.len() != s.spike_count() || dst.holonomy.len() != s.rank() {
        return Err(MargulisError::MismatchedLinearPart);
    }
    for (a, b) in dst.holonomy.iter().zip(&s.generators) {
        let diff = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (a.m[i][j] - b.m[i][j]).abs().min((a.m[i][j] + b.m[i][j]).abs()))
            .fold(0.0f64, f64::max);
        if diff > 1e-9 || a.det_sign != b.det_sign {
            return Err(MargulisError::MismatchedLinearPart);
        }
    }
    let spike_motions = dst
        .photons
        .iter()
        .zip(&s.spikes)
        .map(|(l, sp)| (-l.w).mcross(sp.v))
        .collect();
    Ok(TangentVector {
        cocycle: dst.cocycle.clone(),
        spike_motions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::strip::{dl_closed_fd, strip_map};
    use approx::assert_relative_eq;

    #[test]
    fn margulis_invariant_examples() {
        let f = fixtures::crown(); // generator conjugate to diag(e, 1/e)
        let gens = &f.surface.generators;
        let u = Cocycle {
            values: vec![gens[0].neutral_vector().unwrap()],
        };
        let w = Word(vec![1]);
        assert_relative_eq!(
            margulis_invariant(gens, &u, &w).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // Coboundary vanishes; negation flips.
        let e = Vec21::new(0.3, -0.7, 0.2);
        let cob = Cocycle {
            values: vec![e - gens[0].adjoint(e)],
        };
        assert!(margulis_invariant(gens, &cob, &w).unwrap().abs() < 1e-12);
        let nu = Cocycle {
            values: vec![-u.values[0]],
        };
        assert_relative_eq!(
            margulis_invariant(gens, &nu, &w).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn invariant_equals_length_derivative() {
        for f in [fixtures::crown(), fixtures::annulus(), fixtures::moebius()] {
            let s = &f.surface;
            let tm = tile_map(s, &f.family).unwrap();
            for w in conjugacy_classes(s.rank(), 3) {
                let Ok(alpha) = margulis_invariant(&s.generators, &tm.cocycle, &w) else {
                    continue;
                };
                let fd = dl_closed_fd(s, &tm.cocycle, &w, 1e-4).unwrap();
                assert!(
                    (alpha - fd).abs() < 1e-8 * (1.0 + fd.abs()),
                    "{} {:?}: alpha {alpha} vs fd {fd}",
                    f.name,
                    w
                );
            }
        }
    }

    #[test]
    fn opposite_sign_census() {
        let f = fixtures::crown();
        let s = &f.surface;
        let tm = tile_map(s, &f.family).unwrap();
        assert_eq!(
            opposite_sign_check(&s.generators, &tm.cocycle, 4),
            SignVerdict::AllPositive
        );
        let neg = Cocycle {
            values: tm.cocycle.values.iter().map(|&v| -v).collect(),
        };
        assert_eq!(
            opposite_sign_check(&s.generators, &neg, 4),
            SignVerdict::AllNegative
        );
        // Hand-built rank-2 mixed cocycle.
        let g1 = Isometry::new([[E, 0.0], [0.0, 1.0 / E]]).unwrap();
        let g2 = {
            let r = Isometry::new([[C, -S], [S, C]]).unwrap();
            r * g1 * r.inverse()
        };
        let gens = [g1, g2];
        let u = Cocycle {
            values: vec![
                g1.neutral_vector().unwrap(),
                -g2.neutral_vector().unwrap(),
            ],
        };
        assert!(matches!(
            opposite_sign_check(&gens, &u, 1),
            SignVerdict::Mixed { .. }
        ));
    }
    const E: f64 = std::f64::consts::E;
    const C: f64 = 0.8;
    const S: f64 = 0.6;

    #[test]
    fn stem_quadrant_membership() {
        let p = crooked_plane(Vec21::zero(), Vec21::new(1.0, 0.0, 0.0)).unwrap();
        let sq = stem_quadrant(&p);
        assert!(stem_quadrant_contains(&sq, sq.vplus - sq.vminus).unwrap());
        assert!(!stem_quadrant_contains(&sq, sq.vplus + sq.vminus).unwrap());
        assert!(!stem_quadrant_contains(&sq, Vec21::zero()).unwrap());
        assert_eq!(
            stem_quadrant_contains(&sq, Vec21::new(1.0, 0.0, 0.0)),
            Err(MargulisError::NotInPlane)
        );
    }

    #[test]
    fn crooked_plane_invariants() {
        let f = fixtures::square();
        let s = &f.surface;
        let fam = WeightedArcFamily {
            arcs: vec![f.family.arcs[2].clone()],
            weights: vec![1.0],
        };
        let tm = tile_map(s, &fam).unwrap();
        let p = crooked_from_arc(&tm, 0).unwrap();
        // Stem over the arc's own geodesic, oriented so the affine-chart
        // jump across the arc lies in the stem quadrant.
        let n = tm.tiling.lifts[0].geodesic.n;
        assert!(p.v.mcross(n).max_abs() < 1e-12 * n.max_abs());
        let e = &tm.tiling.sub.edges[tm
            .tiling
            .sub
            .edges
            .iter()
            .position(|e| matches!(e.label, crate::arc_complex::EdgeLabel::Arc { arc: 0, piece: 0 }))
            .unwrap()];
        let (l, r) = (e.left.unwrap(), e.right.unwrap());
        let (af, bf) = if tm.tiling.lifts[0].pieces[0].flip > 0 { (l, r) } else { (r, l) };
        let jump = tm.phi[af] - tm.phi[bf];
        assert!(stem_quadrant_contains(&stem_quadrant(&p), jump).unwrap());
        assert!(p.v.norm2() > 0.0);
        assert!(p.vplus.dot(p.v).abs() < 1e-12);
        assert!(p.vminus.dot(p.v).abs() < 1e-12);
        assert!(p.vplus.norm2().abs() < 1e-12 && p.vplus.z > 0.0);
        assert!(det3(p.vplus, unit(p.v), p.vminus) > 0.0);
        // Vertex is the affine average across the arc: |w| = |field|/2.
        assert_relative_eq!(
            p.w.max_abs(),
            tm.fields[0].max_abs() / 2.0,
            epsilon = 1e-12
        );
        // Spike-to-edge arcs are rejected.
        let tm2 = tile_map(s, &f.family).unwrap();
        assert_eq!(
            crooked_from_arc(&tm2, 3).unwrap_err(),
            MargulisError::NotEdgeToEdge
        );
    }

    #[test]
    fn crooked_equivariance() {
        let f = fixtures::crown();
        let s = &f.surface;
        let tm = tile_map(s, &f.family).unwrap();
        for w in reduced_words(s.rank(), 3) {
            let r = crooked_equivariance_residual(s, &tm, 1, &w).unwrap();
            assert!(r < 1e-10, "{:?}: residual {r}", w);
        }
    }

    #[test]
    fn crooked_disjointness_cases() {
        let p = crooked_plane(Vec21::zero(), Vec21::new(1.0, 0.0, 0.0)).unwrap();
        // Identical planes meet.
        let rep = crooked_disjoint_report(&p, &p, 1e-9).unwrap();
        assert!(!rep.quadrant && !rep.sampled);
        // Translate by a stem-quadrant vector: the quadrant criterion
        // accepts it (Drumm's translation criterion).
        let q = CrookedPlane {
            w: p.vplus - p.vminus,
            ..p.clone()
        };
        assert!(crooked_disjoint(&p, &q).unwrap());
        // Translate along the director: wings overlap.
        let r = CrookedPlane {
            w: Vec21::new(2.0, 0.0, 0.0),
            ..p.clone()
        };
        let rep = crooked_disjoint_report(&p, &r, 1e-9).unwrap();
        assert!(!rep.quadrant && !rep.sampled);
    }

    #[test]
    fn pipeline_crooked_planes_disjoint() {
        let f = fixtures::square();
        let s = &f.surface;
        let tm = tile_map(s, &f.family).unwrap();
        // Disjoint arc lifts carry ultraparallel stems; every pair of the
        // three edge-to-edge arcs yields disjoint planes, and the quadrant
        // criterion agrees with the measured separation.
        let ps: Vec<_> = (0..3).map(|a| crooked_from_arc(&tm, a).unwrap()).collect();
        for (i, j) in [(0, 1), (0, 2)] {
            let rep = crooked_disjoint_report(&ps[i], &ps[j], 1e-9).unwrap();
            assert!(rep.quadrant, "({i},{j}): quadrant criterion");
            assert!(rep.sampled, "({i},{j}): separation {}", rep.min_separation);
        }
        // Arcs 1 and 2 are disjoint in the polygon but their geodesic
        // extensions cross, so the quadrant criterion declines; the planes
        // are still separated.
        assert_eq!(
            crooked_disjoint_report(&ps[1], &ps[2], 1e-9).unwrap_err(),
            MargulisError::StemsCross
        );
        assert!(crooked_min_separation(&ps[1], &ps[2]) > 0.1);
    }

    #[test]
    fn quadrant_criterion_matches_separation() {
        // For ultraparallel stems the quadrant criterion is exact: perturb
        // one vertex at random and compare against the measured separation.
        let f = fixtures::square();
        let tm = tile_map(&f.surface, &f.family).unwrap();
        let p1 = crooked_from_arc(&tm, 0).unwrap();
        let p2 = crooked_from_arc(&tm, 2).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for trial in 0..240 {
            let scale = [0.0, 0.05, 0.2, 0.5, 1.0, 2.0][trial % 6];
            let off = Vec21::new(rnd(), rnd(), rnd()).scale(scale);
            let q2 = CrookedPlane { w: p2.w + off, ..p2.clone() };
            let rep = crooked_disjoint_report(&p1, &q2, 1e-9).unwrap();
            assert_eq!(
                rep.quadrant, rep.sampled,
                "trial {trial}: sep {}",
                rep.min_separation
            );
        }
    }

    #[test]
    fn crown_orbit_planes_disjoint() {
        // Fundamental-domain pair: an arc and its deck translate, related
        // by the equivariance (rho(g), u(g)).
        let f = fixtures::crown();
        let s = &f.surface;
        let tm = tile_map(s, &f.family).unwrap();
        let p = crooked_from_arc(&tm, 1).unwrap();
        let q = crooked_orbit_plane(s, &tm, 1, &Word(vec![1])).unwrap();
        let rep = crooked_disjoint_report(&p, &q, 1e-9).unwrap();
        assert_eq!(rep.quadrant, rep.sampled, "criteria agree");
        assert!(rep.quadrant, "separation {}", rep.min_separation);
    }

    #[test]
    fn photon_examples() {
        let l1 = Photon {
            w: Vec21::zero(),
            v0: Vec21::new(0.0, 1.0, 1.0),
        };
        let l2 = Photon {
            w: Vec21::new(1.0, 0.0, 0.0),
            v0: Vec21::new(0.0, -1.0, 1.0),
        };
        assert_relative_eq!(photon_pairing(&l1, &l2), 2.0);
        assert!(!photons_intersect(&l1, &l2));
        assert_eq!(handedness(&l1, &l2).unwrap(), 1);
        // The pairing is antisymmetric in the base offset: swapping the
        // bases while keeping the direction order flips the sign. (Swapping
        // whole photons negates both factors and preserves it.)
        let l1s = Photon { w: l2.w, v0: l1.v0 };
        let l2s = Photon { w: l1.w, v0: l2.v0 };
        assert_eq!(handedness(&l1s, &l2s).unwrap(), -1);
        assert_eq!(handedness(&l2, &l1).unwrap(), 1);
        // Common base point intersects; coplanar offset intersects.
        let l3 = Photon { w: l1.w, ..l2.clone() };
        assert!(photons_intersect(&l1, &l3));
        let l4 = Photon {
            w: l1.w + l1.v0 + l2.v0,
            ..l2.clone()
        };
        assert!(photons_intersect(&l1, &l4));
        assert_eq!(
            handedness(&l1, &l4),
            Err(MargulisError::IntersectingPhotons)
        );
        // Translating both bases preserves the pairing.
        let t = Vec21::new(0.3, -0.4, 0.9);
        let l1t = Photon { w: l1.w + t, ..l1.clone() };
        let l2t = Photon { w: l2.w + t, ..l2.clone() };
        assert_relative_eq!(photon_pairing(&l1t, &l2t), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn spacetime_pipeline_and_round_trip() {
        for f in [fixtures::square(), fixtures::crown()] {
            let s = &f.surface;
            let dst = build_decorated_spacetime(s, &f.family).unwrap();
            assert_eq!(dst.photons.len(), s.spike_count());
            let signs: Vec<i32> = dst.handedness_signs.iter().map(|&(_, _, s)| s).collect();
            assert!(signs.windows(2).all(|w| w[0] == w[1]), "{}: census", f.name);
            // Round trip against the strip map.
            let t = strip_map(s, &f.family).unwrap();
            let r = recover_tangent(&dst, s).unwrap();
            for (a, b) in t.cocycle.values.iter().zip(&r.cocycle.values) {
                assert!((*a - *b).max_abs() < 1e-10);
            }
            for (a, b) in t.spike_motions.iter().zip(&r.spike_motions) {
                assert!((*a - *b).max_abs() < 1e-10, "{}: spike motion", f.name);
            }
        }
    }

    #[test]
    fn crown_crooked_pairing() {
        let f = fixtures::crown();
        let dst = build_decorated_spacetime(&f.surface, &f.family).unwrap();
        let paired: Vec<_> = dst
            .crooked_fd
            .iter()
            .filter(|c| c.paired_with.is_some())
            .collect();
        assert_eq!(paired.len(), 1);
        assert!(paired[0].residual < 1e-10);
    }

    #[test]
    fn photon_base_shift_and_negation() {
        let f = fixtures::square();
        let s = &f.surface;
        let mut dst = build_decorated_spacetime(s, &f.family).unwrap();
        let r0 = recover_tangent(&dst, s).unwrap();
        for l in &mut dst.photons {
            l.w = l.w + l.v0.scale(2.5);
        }
        let r1 = recover_tangent(&dst, s).unwrap();
        for (a, b) in r0.spike_motions.iter().zip(&r1.spike_motions) {
            assert!((*a - *b).max_abs() < 1e-12);
        }
        // Negated weights: handedness census flips, tangent negates.
        let mut neg = f.family.clone();
        for w in &mut neg.weights {
            *w = -*w;
        }
        match build_decorated_spacetime(s, &neg) {
            Ok(d2) => {
                for ((_, _, a), (_, _, b)) in
                    dst.handedness_signs.iter().zip(&d2.handedness_signs)
                {
                    assert_eq!(*a, -*b);
                }
                let r2 = recover_tangent(&d2, s).unwrap();
                for (a, b) in r0.spike_motions.iter().zip(&r2.spike_motions) {
                    assert!((*a + *b).max_abs() < 1e-10);
                }
            }
            Err(MargulisError::NotFilling) => {} // negative weights fail validation
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn admissibility_verdicts() {
        let f = fixtures::square();
        let s = &f.surface;
        let t = strip_map(s, &f.family).unwrap();
        let rep = admissible_check(s, &t, 2, 50.0, 1e-6);
        assert!(rep.pass, "witness {:?}", rep.witness);
        let neg = TangentVector {
            cocycle: Cocycle {
                values: t.cocycle.values.iter().map(|&v| -v).collect(),
            },
            spike_motions: t.spike_motions.iter().map(|&v| -v).collect(),
        };
        let rep = admissible_check(s, &neg, 2, 50.0, 1e-6);
        assert!(!rep.pass);
        assert!(rep.witness.is_some());
        let zero = TangentVector {
            cocycle: Cocycle::zero(s.rank()),
            spike_motions: vec![Vec21::zero(); s.spike_count()],
        };
        assert!(!admissible_check(s, &zero, 2, 50.0, 1e-6).pass);
        // With closed geodesics in the census.
        let fc = fixtures::crown();
        let tc = strip_map(&fc.surface, &fc.family).unwrap();
        let rep = admissible_check(&fc.surface, &tc, 3, 50.0, 1e-6);
        assert!(rep.pass, "witness {:?}", rep.witness);
        assert!(rep.closed_checked > 0 && rep.horoball_checked > 0);
    }

    #[test]
    fn tangent_horoball_derivative_matches_tile_map() {
        let f = fixtures::crown();
        let s = &f.surface;
        let tm = tile_map(s, &f.family).unwrap();
        let t = strip_map(s, &f.family).unwrap();
        for w in [Word::identity(), Word(vec![1]), Word(vec![-1])] {
            if w.is_empty() {
                continue;
            }
            let a = crate::strip::dl_horoball_with(s, &tm, 0, 0, &w).unwrap();
            let b = dl_horoball_from_tangent(s, &t, 0, 0, &w).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }
}
