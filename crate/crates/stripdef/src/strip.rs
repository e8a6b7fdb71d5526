//! Infinitesimal strip deformations.
//!
//! A weighted arc family deforms the surface by inserting strips along its
//! arcs. The tile map assigns a Killing field (Vec21 via the cross-product
//! model) to every face of the arc subdivision, jumping by the weighted
//! strip field across each arc; side pairings then determine a cocycle
//! u: generators -> Vec21 with u(gh) = u(g) + Ad(rho(g))u(h), and spike
//! decorations move by dv = phi(d) x v. Length derivatives:
//!   closed geodesic:      dl = sum over crossings of w(p)·sin(angle)
//!   horoball connection:  dl = <phi(d_n) - phi(d_1), n_hat>,
//!                         n_hat = mcross(v2, v1) / <v1, v2>,
//! both cross-checked by central-difference oracles (deformed holonomy
//! exp_killing(u, t/2)·rho, deformed decorations act(flow(phi, t))·v).

use crate::arc_complex::{
    chord_geodesic, kdist, lerp, lift_family, seg_intersect, tiles, validate_pruned_point,
    walk_chord, ArcError, ArcKind, ArcLift, EdgeData, EdgeLabel, PieceEnd, Tiling,
    WeightedArcFamily,
};
use crate::hyperbolic::{
    geodesic_from_endpoints, perpendicular_at, sin_angle_at, Geodesic, HyperbolicError, HypPoint,
};
use crate::isometry::{exp_killing, flow, IsoClass, Isometry, IsometryError};
use crate::minkowski::Vec21;
use crate::surface::{DecoratedSurface, DomainVertex, SideKind};
use crate::word::Word;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StripError {
    #[error("family is not filling")]
    NotFilling,
    #[error("tile adjacency graph is disconnected")]
    DisconnectedTiling,
    #[error("template waist does not lie on the arc")]
    WaistOffArc,
    #[error("holonomy of the word is not hyperbolic")]
    NotHyperbolic,
    #[error("tile chain for the connection not found: {0}")]
    ChainNotFound(String),
    #[error("family is not a triangulation")]
    NotTriangulation,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Arc(#[from] ArcError),
}

impl From<HyperbolicError> for StripError {
    fn from(e: HyperbolicError) -> Self {
        StripError::Invalid(format!("hyperbolic geometry: {e:?}"))
    }
}
impl From<IsometryError> for StripError {
    fn from(e: IsometryError) -> Self {
        StripError::Invalid(format!("isometry: {e:?}"))
    }
}

/// Strip template per arc: waist point for finite arcs, decorated spike
/// vector for infinite ones; width_scale multiplies the field.
#[derive(Debug, Clone)]
pub struct StripTemplate {
    pub waist: Option<HypPoint>,
    pub width_scale: f64,
    pub spike_vec: Option<Vec21>,
}

/// Cocycle over the holonomy group, stored on the generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cocycle {
    pub values: Vec<Vec21>,
}

impl Cocycle {
    pub fn zero(rank: usize) -> Self {
        Cocycle {
            values: vec![Vec21::zero(); rank],
        }
    }

    /// u(l1 l2 ... lk) by the cocycle rule u(gh) = u(g) + Ad(rho(g))u(h);
    /// u(g^{-1}) = -Ad(rho(g)^{-1}) u(g).
    pub fn evaluate(&self, gens: &[Isometry], w: &Word) -> Vec21 {
        let mut acc = Vec21::zero();
        let mut rho = Isometry::identity();
        for &l in &w.0 {
            let i = l.unsigned_abs() as usize - 1;
            let g = gens[i];
            let (ul, gl) = if l > 0 {
                (self.values[i], g)
            } else {
                let gi = g.inverse();
                (-gi.adjoint(self.values[i]), gi)
            };
            acc = acc + rho.adjoint(ul);
            rho = rho * gl;
        }
        acc
    }
}

/// Infinitesimal deformation of the decorated surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub cocycle: Cocycle,
    /// Per spike, dv = phi(d) x v (orthogonal to v).
    pub spike_motions: Vec<Vec21>,
}

/// Killing-field assignment per face of the arc subdivision, with the
/// derived cocycle. `phi` lives on faces (lifts of tiles inside the base
/// polygon); faces of one tile across a cut carry Ad-related values.
#[derive(Debug, Clone)]
pub struct TileMap {
    pub tiling: Tiling,
    pub weights: Vec<f64>,
    pub templates: Vec<StripTemplate>,
    /// Canonical-frame strip field per arc, oriented to push the arc's
    /// side B (right of the first piece) away.
    pub fields: Vec<Vec21>,
    pub base_face: usize,
    pub phi: Vec<Vec21>,
    pub cocycle: Cocycle,
    /// Max disagreement among repeated cocycle determinations
    /// (equivariance residual).
    pub residual: f64,
}

fn klein_to_hyp(p: (f64, f64)) -> Result<HypPoint, StripError> {
    let r2 = p.0 * p.0 + p.1 * p.1;
    if r2 >= 1.0 {
        return Err(StripError::Invalid("point outside the Klein disk".into()));
    }
    let z = 1.0 / (1.0 - r2).sqrt();
    Ok(HypPoint::new(Vec21::new(p.0 * z, p.1 * z, z)).expect("inside the disk"))
}

fn klein_of_vec(v: Vec21) -> (f64, f64) {
    (v.x / v.z, v.y / v.z)
}

fn transform_geodesic(h: Isometry, g: &Geodesic) -> Result<Geodesic, StripError> {
    Ok(geodesic_from_endpoints(h.act(g.vminus), h.act(g.vplus))?)
}

/// Default templates: midpoint waist for edge-to-edge arcs, decorated
/// spike vector for spike-to-edge arcs; width_scale 1.
pub fn default_templates(
    s: &DecoratedSurface,
    lifts: &[ArcLift],
    family: &WeightedArcFamily,
) -> Result<Vec<StripTemplate>, StripError> {
    lifts
        .iter()
        .zip(&family.arcs)
        .map(|(l, arc)| match l.kind {
            ArcKind::EdgeToEdge => {
                let m = HypPoint::project(l.start_vec + l.end_vec)
                    .map_err(|_| StripError::Invalid("degenerate waist".into()))?;
                Ok(StripTemplate {
                    waist: Some(m),
                    width_scale: 1.0,
                    spike_vec: None,
                })
            }
            ArcKind::SpikeToEdge => {
                let (vertex, deck) = match (&arc.start, &arc.end) {
                    (crate::arc_complex::ArcEndpoint::Spike { vertex, deck }, _) => (vertex, deck),
                    (_, crate::arc_complex::ArcEndpoint::Spike { vertex, deck }) => (vertex, deck),
                    _ => return Err(StripError::Invalid("spike arc without spike end".into())),
                };
                let v = match s.domain.vertices[*vertex] {
                    DomainVertex::Ideal { v, .. } => v,
                    DomainVertex::Finite(_) => {
                        return Err(StripError::Invalid("spike at finite vertex".into()))
                    }
                };
                Ok(StripTemplate {
                    waist: None,
                    width_scale: 1.0,
                    spike_vec: Some(s.holonomy(deck).act(v)),
                })
            }
        })
        .collect()
}

/// Strip Killing field in the canonical (first-piece) frame, oriented to
/// push side B (the right side of the first piece) away from the arc.
pub fn canonical_field(lift: &ArcLift, tpl: &StripTemplate) -> Result<Vec21, StripError> {
    let k_raw = match lift.kind {
        ArcKind::EdgeToEdge => {
            let waist = tpl.waist.ok_or(StripError::WaistOffArc)?;
            if !waist.on_geodesic(&lift.geodesic) {
                return Err(StripError::WaistOffArc);
            }
            let perp = perpendicular_at(&lift.geodesic, waist)?;
            tpl.width_scale * perp.n
        }
        ArcKind::SpikeToEdge => {
            let v = tpl.spike_vec.ok_or(StripError::WaistOffArc)?;
            tpl.width_scale * v
        }
    };
    // Evaluation point on the arc: waist, or the finite foot for spike arcs.
    let m = match lift.kind {
        ArcKind::EdgeToEdge => tpl.waist.expect("checked").v,
        ArcKind::SpikeToEdge => {
            // Pick the timelike (foot) endpoint, not the lightlike spike
            // where a parabolic field vanishes. Compare scale-invariantly:
            // the spike's norm2 is rounding noise that grows with the
            // decoration scale.
            let rel = |v: Vec21| v.norm2() / (v.x * v.x + v.y * v.y + v.z * v.z);
            if rel(lift.start_vec) < rel(lift.end_vec) {
                lift.start_vec
            } else {
                lift.end_vec
            }
        }
    };
    // Klein velocity of the field at m, versus the right normal of the
    // chord (start -> unfolded end).
    let w = k_raw.mcross(m);
    let vel = (w.x * m.z - m.x * w.z, w.y * m.z - m.y * w.z);
    let a = klein_of_vec(lift.start_vec);
    let b = klein_of_vec(lift.end_vec);
    let dir = (b.0 - a.0, b.1 - a.1);
    let right = (dir.1, -dir.0);
    let dot = vel.0 * right.0 + vel.1 * right.1;
    if dot.abs() < 1e-14 {
        return Err(StripError::Invalid("degenerate strip orientation".into()));
    }
    Ok(if dot > 0.0 { k_raw } else { -k_raw })
}

/// Strip Killing field oriented to push the given tile away from the arc.
pub fn strip_killing(
    tiling: &Tiling,
    fields: &[Vec21],
    arc: usize,
    orient_toward: usize,
) -> Result<Vec21, StripError> {
    let (side_a, side_b) = tiling.arc_tiles[arc];
    if orient_toward == side_b {
        Ok(fields[arc])
    } else if orient_toward == side_a {
        Ok(-fields[arc])
    } else {
        Err(StripError::Invalid("tile does not border the arc".into()))
    }
}

/// Width of the strip with field v at the point p: |mcross(v, p)|.
pub fn strip_width_at(v_arc: Vec21, p: HypPoint) -> f64 {
    v_arc.mcross(p.v).norm2().max(0.0).sqrt()
}

fn inner_face(e: &EdgeData) -> usize {
    e.left.or(e.right).expect("boundary edge borders a face")
}

/// Tile map for the weighted family: phi on faces by crossing-jumps, the
/// derived cocycle, and the equivariance residual. Requires the arcs to be
/// pairwise disjoint and the face graph connected through arcs; filling is
/// not required here (strip_map enforces it).
pub fn tile_map(s: &DecoratedSurface, x: &WeightedArcFamily) -> Result<TileMap, StripError> {
    let tiling = tiles(s, &x.arcs)?;
    let templates = default_templates(s, &tiling.lifts, x)?;
    tile_map_with(s, tiling, x.weights.clone(), templates, 0)
}

pub fn tile_map_with(
    s: &DecoratedSurface,
    tiling: Tiling,
    weights: Vec<f64>,
    templates: Vec<StripTemplate>,
    base_face: usize,
) -> Result<TileMap, StripError> {
    if weights.len() != tiling.lifts.len() || templates.len() != tiling.lifts.len() {
        return Err(StripError::Invalid("weights/templates length mismatch".into()));
    }
    let fields: Vec<Vec21> = tiling
        .lifts
        .iter()
        .zip(&templates)
        .map(|(l, t)| canonical_field(l, t))
        .collect::<Result<_, _>>()?;

    // Propagate phi across arc edges (jump = weight * transported field,
    // signed toward the entered side).
    let nf = tiling.sub.faces.len();
    let mut phi = vec![Vec21::zero(); nf];
    let mut seen = vec![false; nf];
    if base_face >= nf {
        return Err(StripError::Invalid("base face out of range".into()));
    }
    seen[base_face] = true;
    let mut queue = std::collections::VecDeque::from([base_face]);
    while let Some(f) = queue.pop_front() {
        for e in &tiling.sub.edges {
            let EdgeLabel::Arc { arc, piece } = e.label else {
                continue;
            };
            let (Some(l), Some(r)) = (e.left, e.right) else {
                continue;
            };
            if l != f && r != f {
                continue;
            }
            let p = &tiling.lifts[arc].pieces[piece];
            let x_piece = p.iso.adjoint(fields[arc]);
            // Side B of this piece (the side the canonical field pushes).
            let b_face = if p.flip > 0 { r } else { l };
            let other = if l == f { r } else { l };
            if seen[other] {
                continue;
            }
            let jump = weights[arc] * x_piece;
            phi[other] = if other == b_face {
                phi[f] + jump
            } else {
                phi[f] - jump
            };
            seen[other] = true;
            queue.push_back(other);
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(StripError::DisconnectedTiling);
    }

    // Cocycle from the cut gluings. The continuity of the equivariant
    // field across a cut gives the flow-convention value
    // phi(F') - Ad(gamma) phi(F); the exposed cocycle pairs with the
    // deformed holonomy exp_killing(u, t/2) * rho (dl = <u, v0>), whose
    // velocity is opposite, hence the sign flip.
    let rank = s.rank();
    let mut dets: Vec<Vec<Vec21>> = vec![Vec::new(); rank];
    for &(ei, ej, letter) in &tiling.sub.gluings {
        let f = inner_face(&tiling.sub.edges[ei]);
        let fp = inner_face(&tiling.sub.edges[ej]);
        let h = s.letter_isometry(letter);
        let u_h = h.adjoint(phi[f]) - phi[fp];
        let i = letter.unsigned_abs() as usize - 1;
        let u_g = if letter > 0 {
            u_h
        } else {
            // u(g) = -Ad(g) u(g^{-1})
            -s.generators[i].adjoint(u_h)
        };
        dets[i].push(u_g);
    }
    let mut values = Vec::with_capacity(rank);
    let mut residual: f64 = 0.0;
    for d in &dets {
        if d.is_empty() {
            return Err(StripError::Invalid(
                "generator without a cut gluing".into(),
            ));
        }
        let n = d.len() as f64;
        let avg = d.iter().fold(Vec21::zero(), |a, &b| a + b).scale(1.0 / n);
        for &v in d {
            residual = residual.max((v - avg).max_abs());
        }
        values.push(avg);
    }

    Ok(TileMap {
        tiling,
        weights,
        templates,
        fields,
        base_face,
        phi,
        cocycle: Cocycle { values },
        residual,
    })
}

fn spike_primary_vertex(s: &DecoratedSurface, spike: usize) -> Result<usize, StripError> {
    let mut fallback = None;
    for (i, dv) in s.domain.vertices.iter().enumerate() {
        if let DomainVertex::Ideal { spike: sp, v } = dv {
            if *sp == spike {
                if (*v - s.spikes[spike].v).max_abs() < 1e-9 {
                    return Ok(i);
                }
                fallback.get_or_insert(i);
            }
        }
    }
    fallback.ok_or_else(|| StripError::Invalid(format!("spike {spike} has no vertex lift")))
}

fn faces_at_vertex(t: &Tiling, vertex: usize) -> Vec<usize> {
    t.sub
        .faces
        .iter()
        .enumerate()
        .filter(|(_, f)| f.nodes.contains(&vertex))
        .map(|(i, _)| i)
        .collect()
}

/// The infinitesimal strip map: the tile-map cocycle plus the spike
/// motions dv_i = phi(d_i) x v_i (d_i any face at the spike; well defined
/// because faces around a spike differ by parabolic jumps parallel to v_i).
pub fn strip_map(s: &DecoratedSurface, x: &WeightedArcFamily) -> Result<TangentVector, StripError> {
    let report = validate_pruned_point(s, x);
    if !report.pass() {
        return Err(StripError::NotFilling);
    }
    let tm = tile_map(s, x)?;
    tangent_of(s, &tm)
}

pub fn tangent_of(s: &DecoratedSurface, tm: &TileMap) -> Result<TangentVector, StripError> {
    let mut spike_motions = Vec::with_capacity(s.spike_count());
    for i in 0..s.spike_count() {
        let vtx = spike_primary_vertex(s, i)?;
        let v = s.spikes[i].v;
        let faces = faces_at_vertex(&tm.tiling, vtx);
        if faces.is_empty() {
            return Err(StripError::Invalid(format!("spike {i}: no incident face")));
        }
        let dv = tm.phi[faces[0]].mcross(v);
        for &f in &faces[1..] {
            let alt = tm.phi[f].mcross(v);
            if (alt - dv).max_abs() > 1e-8 * (1.0 + dv.max_abs()) {
                return Err(StripError::Invalid(format!(
                    "spike {i}: motion not well defined across incident faces"
                )));
            }
        }
        spike_motions.push(dv);
    }
    Ok(TangentVector {
        cocycle: tm.cocycle.clone(),
        spike_motions,
    })
}

/// Splits a cyclically reduced word into (primitive root, power).
fn primitive_power(w: &Word) -> (Word, usize) {
    let n = w.0.len();
    for d in 1..=n {
        if !n.is_multiple_of(d) {
            continue;
        }
        let ok = (0..n).all(|i| w.0[i] == w.0[i % d]);
        if ok {
            return (Word(w.0[..d].to_vec()), n / d);
        }
    }
    (w.clone(), 1)
}

fn axis_of(s: &DecoratedSurface, h: Isometry) -> Result<Geodesic, StripError> {
    match h.classify(s.tol) {
        IsoClass::Hyperbolic => Ok(h.axis()?),
        IsoClass::GlideReflection => Ok((h * h).axis()?),
        _ => Err(StripError::NotHyperbolic),
    }
}

/// Distinct lifts of the axis meeting the enumeration window.
fn axis_lifts(s: &DecoratedSurface, axis: &Geodesic, max_len: usize) -> Result<Vec<Geodesic>, StripError> {
    let mut lifts: Vec<Geodesic> = Vec::new();
    let mut keys: Vec<((f64, f64), (f64, f64))> = Vec::new();
    let mut words = vec![Word::identity()];
    words.extend(crate::word::reduced_words(s.rank(), max_len));
    for w in &words {
        let g = transform_geodesic(s.holonomy(w), axis)?;
        let mut e1 = klein_of_vec(g.vminus);
        let mut e2 = klein_of_vec(g.vplus);
        if (e1.0, e1.1) > (e2.0, e2.1) {
            std::mem::swap(&mut e1, &mut e2);
        }
        if keys
            .iter()
            .any(|&(a, b)| kdist(a, e1) < 1e-7 && kdist(b, e2) < 1e-7)
        {
            continue;
        }
        keys.push((e1, e2));
        lifts.push(g);
    }
    Ok(lifts)
}

/// Crossing points of a complete geodesic with the arc pieces, counted
/// once per surface point: intersections at a piece endpoint on a paired
/// (cut) side are attributed to the outgoing piece only.
fn piece_crossings(
    s: &DecoratedSurface,
    lifts: &[ArcLift],
    g: &Geodesic,
) -> Vec<(usize, usize, (f64, f64))> {
    let e1 = klein_of_vec(g.vminus);
    let e2 = klein_of_vec(g.vplus);
    let mut out = Vec::new();
    for (ai, l) in lifts.iter().enumerate() {
        for (pi, p) in l.pieces.iter().enumerate() {
            let Some((u, _)) = seg_intersect(p.a, p.b, e1, e2) else {
                continue;
            };
            if !(-1e-7..=1.0 + 1e-7).contains(&u) {
                continue;
            }
            let on_cut = |loc: PieceEnd| -> bool {
                matches!(loc, PieceEnd::OnSide { side, .. }
                    if matches!(s.domain.sides[side], SideKind::Paired { .. }))
            };
            if u < 1e-6 && on_cut(p.a_loc) {
                continue; // counted at the partner piece's far end
            }
            out.push((ai, pi, lerp(p.a, p.b, u)));
        }
    }
    out
}

/// dl of a closed geodesic under the weighted family:
/// sum over crossings of weight * strip_width * sin(angle).
pub fn dl_closed_analytic(
    s: &DecoratedSurface,
    x: &WeightedArcFamily,
    word: &Word,
) -> Result<f64, StripError> {
    let lifts = lift_family(s, &x.arcs)?;
    let c = word.cyclically_reduced();
    if c.is_empty() {
        return Err(StripError::Invalid("trivial word".into()));
    }
    let (prim, k) = primitive_power(&c);
    let h = s.holonomy(&prim);
    let axis = axis_of(s, h)?;
    let templates = default_templates(s, &lifts, x)?;
    let fields: Vec<Vec21> = lifts
        .iter()
        .zip(&templates)
        .map(|(l, t)| canonical_field(l, t))
        .collect::<Result<_, _>>()?;
    let mut dl = 0.0;
    for g in axis_lifts(s, &axis, 4.max(2 * prim.len()))? {
        for (ai, pi, pt) in piece_crossings(s, &lifts, &g) {
            let p = klein_to_hyp(pt)?;
            let piece = &lifts[ai].pieces[pi];
            let x_piece = piece.iso.adjoint(fields[ai]);
            let width = strip_width_at(x_piece, p);
            let piece_g = chord_geodesic(piece.a, piece.b)?;
            let sn = sin_angle_at(p, &piece_g, &g)?.abs();
            dl += x.weights[ai] * width * sn;
        }
    }
    Ok(k as f64 * dl)
}

/// n_hat of a decorated connection: mcross(v2, v1) / <v1, v2>.
fn connection_normal(v1: Vec21, v2: Vec21) -> Result<Vec21, StripError> {
    let ip = v1.dot(v2);
    if ip >= -1e-300 {
        return Err(StripError::Invalid("decorations share a center".into()));
    }
    Ok(v2.mcross(v1).scale(1.0 / ip))
}

/// First variation of a decorated connection length from the endpoint
/// Killing fields: <phi_n - phi_1, n_hat>.
pub fn horoball_variation(v1: Vec21, v2: Vec21, phi1: Vec21, phin: Vec21) -> Result<f64, StripError> {
    let n = connection_normal(v1, v2)?;
    Ok((phin - phi1).dot(n))
}

/// Central-difference oracle for the same variation: decorations flow by
/// their endpoint fields (velocity phi x v) through ln(-<v1,v2>/2).
pub fn horoball_variation_fd(
    v1: Vec21,
    v2: Vec21,
    phi1: Vec21,
    phin: Vec21,
    t_step: f64,
) -> Result<f64, StripError> {
    let len = |t: f64| -> Result<f64, StripError> {
        let a = flow(phi1, t).act(v1);
        let b = flow(phin, t).act(v2);
        let ip = a.dot(b);
        if ip >= 0.0 {
            return Err(StripError::Invalid("flowed decorations degenerate".into()));
        }
        Ok((-ip / 2.0).ln())
    };
    let central = |h: f64| -> Result<f64, StripError> { Ok((len(h)? - len(-h)?) / (2.0 * h)) };
    let d1 = central(t_step)?;
    let d2 = central(t_step / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Endpoint data of a connection under the tile map: unfolded second
/// decoration and the phi values at both ends (equivariant extension).
fn connection_endpoint_fields(
    s: &DecoratedSurface,
    tm: &TileMap,
    spike_from: usize,
    spike_to: usize,
    word: &Word,
) -> Result<(Vec21, Vec21, Vec21, Vec21), StripError> {
    let v1 = s.spikes[spike_from].v;
    let rho = s.holonomy(word);
    let v2 = rho.act(s.spikes[spike_to].v);
    let vtx1 = spike_primary_vertex(s, spike_from)?;
    let vtx2 = spike_primary_vertex(s, spike_to)?;
    let f1 = *faces_at_vertex(&tm.tiling, vtx1)
        .first()
        .ok_or_else(|| StripError::ChainNotFound("no face at start spike".into()))?;
    let f2 = *faces_at_vertex(&tm.tiling, vtx2)
        .first()
        .ok_or_else(|| StripError::ChainNotFound("no face at end spike".into()))?;
    let phi1 = tm.phi[f1];
    // Flow-convention equivariant extension: u_flow = -u.
    let phin = rho.adjoint(tm.phi[f2]) - tm.cocycle.evaluate(&s.generators, word);
    Ok((v1, v2, phi1, phin))
}

/// dl of a horoball connection under the family's tile map.
pub fn dl_horoball_analytic(
    s: &DecoratedSurface,
    x: &WeightedArcFamily,
    spike_from: usize,
    spike_to: usize,
    word: &Word,
) -> Result<f64, StripError> {
    let tm = tile_map(s, x)?;
    dl_horoball_with(s, &tm, spike_from, spike_to, word)
}

pub fn dl_horoball_with(
    s: &DecoratedSurface,
    tm: &TileMap,
    spike_from: usize,
    spike_to: usize,
    word: &Word,
) -> Result<f64, StripError> {
    let (v1, v2, phi1, phin) = connection_endpoint_fields(s, tm, spike_from, spike_to, word)?;
    horoball_variation(v1, v2, phi1, phin)
}

/// Same dl as a crossing sum (Thm. lenderiv form): walk the connection
/// chord through the polygon and sum weight * width * sin(angle) over its
/// transverse intersections with arc pieces.
pub fn dl_horoball_crossing_sum(
    s: &DecoratedSurface,
    tm: &TileMap,
    spike_from: usize,
    spike_to: usize,
    word: &Word,
) -> Result<f64, StripError> {
    let vtx1 = spike_primary_vertex(s, spike_from)?;
    let p0 = s.domain.vertices[vtx1].klein();
    let rho = s.holonomy(word);
    let v2 = rho.act(s.spikes[spike_to].v);
    let q0 = klein_of_vec(v2);
    let conn_pieces = walk_chord(s, p0, q0, PieceEnd::AtVertex { vertex: vtx1 })
        .map_err(|e| StripError::ChainNotFound(e.to_string()))?;
    let mut dl = 0.0;
    for cp in &conn_pieces {
        let cg = chord_geodesic(cp.a, cp.b)?;
        for (ai, l) in tm.tiling.lifts.iter().enumerate() {
            for p in &l.pieces {
                let Some((u, t)) = seg_intersect(p.a, p.b, cp.a, cp.b) else {
                    continue;
                };
                if !(-1e-7..=1.0 + 1e-7).contains(&u) || !(1e-7..=1.0 - 1e-7).contains(&t) {
                    continue;
                }
                let pt = lerp(p.a, p.b, u);
                // Skip contact at a shared ideal endpoint.
                if pt.0 * pt.0 + pt.1 * pt.1 > 1.0 - 1e-9 {
                    continue;
                }
                let hp = klein_to_hyp(pt)?;
                let x_piece = p.iso.adjoint(tm.fields[ai]);
                let width = strip_width_at(x_piece, hp);
                let pg = chord_geodesic(p.a, p.b)?;
                let sn = sin_angle_at(hp, &pg, &cg)?.abs();
                dl += tm.weights[ai] * width * sn;
            }
        }
    }
    Ok(dl)
}

/// Word-length function of the (possibly glide) isometry.
fn geodesic_length(s: &DecoratedSurface, h: Isometry) -> Result<f64, StripError> {
    match h.classify(s.tol) {
        IsoClass::Hyperbolic => Ok(h.trace_length()?),
        IsoClass::GlideReflection => Ok((h * h).trace_length()? / 2.0),
        _ => Err(StripError::NotHyperbolic),
    }
}

/// Central-difference derivative of the closed-geodesic length under the
/// deformed holonomy exp_killing(u(word), t/2) * rho(word), with one
/// Richardson step.
pub fn dl_closed_fd(
    s: &DecoratedSurface,
    u: &Cocycle,
    word: &Word,
    t_step: f64,
) -> Result<f64, StripError> {
    if t_step <= 0.0 {
        return Err(StripError::Invalid("t_step must be positive".into()));
    }
    let h = s.holonomy(word);
    geodesic_length(s, h)?; // classify early: NotHyperbolic
    let uw = u.evaluate(&s.generators, word);
    let len = |t: f64| -> Result<f64, StripError> {
        geodesic_length(s, exp_killing(uw, t / 2.0) * h)
    };
    let central = |h: f64| -> Result<f64, StripError> { Ok((len(h)? - len(-h)?) / (2.0 * h)) };
    let d1 = central(t_step)?;
    let d2 = central(t_step / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Central-difference derivative of a horoball-connection length under
/// the tile map's endpoint fields.
pub fn dl_horoball_fd(
    s: &DecoratedSurface,
    tm: &TileMap,
    spike_from: usize,
    spike_to: usize,
    word: &Word,
    t_step: f64,
) -> Result<f64, StripError> {
    let (v1, v2, phi1, phin) = connection_endpoint_fields(s, tm, spike_from, spike_to, word)?;
    horoball_variation_fd(v1, v2, phi1, phin, t_step)
}

/// Coordinates of a tangent vector: u on the generators (3 each), then
/// per spike the coordinates of dv in the basis {(-y, x, 0), v}.
pub fn tangent_rep(s: &DecoratedSurface, t: &TangentVector) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * s.rank() + 2 * s.spike_count());
    for u in &t.cocycle.values {
        out.extend([u.x, u.y, u.z]);
    }
    for (i, dv) in t.spike_motions.iter().enumerate() {
        let v = s.spikes[i].v;
        let b1 = Vec21::new(-v.y, v.x, 0.0);
        let a = dv.dot(b1) / b1.dot(b1);
        let b = (*dv - a.scale_of(b1)).z / v.z;
        out.extend([a, b]);
    }
    out
}

trait ScaleOf {
    fn scale_of(self, v: Vec21) -> Vec21;
}
impl ScaleOf for f64 {
    fn scale_of(self, v: Vec21) -> Vec21 {
        v.scale(self)
    }
}

/// Rank of a matrix given as columns, by Gaussian elimination.
pub fn column_rank(cols: &[Vec<f64>], tol: f64) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let rows = cols[0].len();
    let mut m: Vec<Vec<f64>> = cols.to_vec();
    let scale = m
        .iter()
        .flat_map(|c| c.iter().map(|x| x.abs()))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut rank = 0;
    for r in 0..rows {
        // pivot column with the largest entry in row r among remaining
        let mut best = None;
        let mut best_abs = tol * scale;
        for (ci, c) in m.iter().enumerate().skip(rank) {
            if c[r].abs() > best_abs {
                best_abs = c[r].abs();
                best = Some(ci);
            }
        }
        let Some(p) = best else { continue };
        m.swap(rank, p);
        let pivot = m[rank][r];
        let pcol = m[rank].clone();
        for c in m.iter_mut().skip(rank + 1) {
            let f = c[r] / pivot;
            for (x, pv) in c.iter_mut().zip(&pcol) {
                *x -= f * pv;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisReport {
    /// Columns of the tangent representation, one per arc.
    pub columns: Vec<Vec<f64>>,
    /// Coboundary columns (global Killing fields e_x, e_y, e_z).
    pub coboundary_columns: Vec<Vec<f64>>,
    pub rep_dim: usize,
    pub arc_rank: usize,
    pub full_rank: usize,
    pub expected_full_rank: usize,
    pub ok: bool,
}

/// Basis theorem check: single-arc strip maps are independent, and stay
/// independent of the 3-dimensional coboundary space.
pub fn basis_matrix(s: &DecoratedSurface, x: &WeightedArcFamily) -> Result<BasisReport, StripError> {
    let report = validate_pruned_point(s, x);
    if !report.pass() {
        return Err(StripError::NotTriangulation);
    }
    let tiling = tiles(s, &x.arcs)?;
    let templates = default_templates(s, &tiling.lifts, x)?;
    let n = x.arcs.len();
    let idx: Vec<usize> = (0..n).collect();
    #[cfg(feature = "parallel")]
    let it = idx.par_iter();
    #[cfg(not(feature = "parallel"))]
    let it = idx.iter();
    let columns: Vec<Vec<f64>> = it
        .map(|&i| {
            let mut w = vec![0.0; n];
            w[i] = 1.0;
            let tm = tile_map_with(s, tiling.clone(), w, templates.clone(), 0)?;
            let t = tangent_of(s, &tm)?;
            Ok(tangent_rep(s, &t))
        })
        .collect::<Result<_, StripError>>()?;
    // Coboundaries: the global Killing field e moves nothing intrinsically;
    // u(g) = e - Ad(rho(g)) e, dv_i = e x v_i.
    let mut coboundary_columns = Vec::with_capacity(3);
    for e in [
        Vec21::new(1.0, 0.0, 0.0),
        Vec21::new(0.0, 1.0, 0.0),
        Vec21::new(0.0, 0.0, 1.0),
    ] {
        let cocycle = Cocycle {
            values: s.generators.iter().map(|g| e - g.adjoint(e)).collect(),
        };
        let spike_motions = s.spikes.iter().map(|sp| e.mcross(sp.v)).collect();
        coboundary_columns.push(tangent_rep(
            s,
            &TangentVector {
                cocycle,
                spike_motions,
            },
        ));
    }
    let rep_dim = 3 * s.rank() + 2 * s.spike_count();
    let arc_rank = column_rank(&columns, 1e-8);
    let mut all = columns.clone();
    all.extend(coboundary_columns.clone());
    let full_rank = column_rank(&all, 1e-8);
    let expected_full_rank = n + 3;
    Ok(BasisReport {
        columns,
        coboundary_columns,
        rep_dim,
        arc_rank,
        full_rank,
        expected_full_rank,
        ok: arc_rank == n && full_rank == expected_full_rank,
    })
}
