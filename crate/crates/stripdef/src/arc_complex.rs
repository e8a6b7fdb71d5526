//! Geodesic arcs, arc families, and the tiling they cut out.
//!
//! Arcs are geodesic chords of the Klein-disk fundamental polygon,
//! possibly crossing cut sides: a lift is walked through the polygon,
//! unfolding by the side-pairing isometries, producing a chain of
//! straight pieces. Tiles are the connected components of the
//! complement: faces of the planar subdivision, glued across the side
//! pairings (union-find), with Euler characteristic
//! chi = #faces − #gluings (a tile is a disk iff chi = 1).

use crate::hyperbolic::{geodesic_from_endpoints, sin_angle_at, Geodesic, HypPoint};
use crate::isometry::Isometry;
use crate::minkowski::Vec21;
use crate::surface::{DecoratedSurface, DomainVertex, Family, SideKind};
use crate::word::Word;
use serde::{Deserialize, Serialize};

const MATCH_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArcError {
    #[error("arcs cross")]
    ArcsCross,
    #[error("invalid arc: {0}")]
    BadArc(String),
    #[error("arc walk did not terminate")]
    WalkDiverged,
    #[error("arc end does not match its declared endpoint")]
    MismatchedEnd,
    #[error("family is not filling")]
    NotFilling,
    #[error("tile has {0} internal sides (allowed: 1..=3)")]
    BadTileType(usize),
    #[error("family is not a triangulation of the expected size")]
    NotTriangulation,
}

/// Endpoint of an arc: a spike lift (polygon vertex) or a foot on a
/// boundary side, with a deck word locating the lift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ArcEndpoint {
    Spike { vertex: usize, deck: Word },
    Foot { side: usize, t: f64, deck: Word },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcKind {
    EdgeToEdge,
    SpikeToEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicArc {
    pub kind: ArcKind,
    pub start: ArcEndpoint,
    pub end: ArcEndpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedArcFamily {
    pub arcs: Vec<GeodesicArc>,
    pub weights: Vec<f64>,
}

/// Where a piece endpoint sits on the polygon boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceEnd {
    OnSide { side: usize, t: f64 },
    AtVertex { vertex: usize },
}

/// One straight piece of an arc lift inside the base polygon. `word`/`iso`
/// transform the canonical (first-piece) frame into this piece's frame;
/// `flip` is −1 after an odd number of orientation-reversing unfoldings.
#[derive(Debug, Clone)]
pub struct Piece {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub a_loc: PieceEnd,
    pub b_loc: PieceEnd,
    pub word: Word,
    pub iso: Isometry,
    pub flip: i8,
}

/// An arc lift: its chain of pieces plus the canonical geodesic (the
/// unfolded chord through the first piece) and the unfolded endpoints.
#[derive(Debug, Clone)]
pub struct ArcLift {
    pub kind: ArcKind,
    pub pieces: Vec<Piece>,
    pub geodesic: Geodesic,
    /// Unfolded start/end: lightlike vector for spike ends, hyperboloid
    /// point (as Vec21) for feet.
    pub start_vec: Vec21,
    pub end_vec: Vec21,
    /// Smallest |sin angle| of boundary incidence (diagnostic).
    pub min_incidence_sin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Vertex(usize),
    SideFoot { side: usize, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeLabel {
    Boundary { side: usize },
    Arc { arc: usize, piece: usize },
}

#[derive(Debug, Clone)]
pub struct EdgeData {
    pub a: usize,
    pub b: usize,
    pub label: EdgeLabel,
    /// Face left of a→b, face left of b→a (None = outer face).
    pub left: Option<usize>,
    pub right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct FaceData {
    /// Node cycle, counterclockwise.
    pub nodes: Vec<usize>,
    pub spikes: Vec<usize>,
    pub sample: (f64, f64),
}

/// Planar subdivision of the fundamental polygon by the arc pieces.
#[derive(Debug, Clone)]
pub struct Subdivision {
    pub nodes: Vec<(f64, f64)>,
    pub node_kind: Vec<NodeKind>,
    pub edges: Vec<EdgeData>,
    pub faces: Vec<FaceData>,
    /// Pairs of glued boundary edges (edge on cut side, edge on partner,
    /// letter of the pairing isometry).
    pub gluings: Vec<(usize, usize, i32)>,
}

#[derive(Debug, Clone)]
pub struct Tile {
    pub faces: Vec<usize>,
    pub euler: i64,
    pub spikes: Vec<usize>,
    pub internal_sides: usize,
}

#[derive(Debug, Clone)]
pub struct Tiling {
    pub lifts: Vec<ArcLift>,
    pub sub: Subdivision,
    /// Tile id per face.
    pub face_tile: Vec<usize>,
    pub tiles: Vec<Tile>,
    /// Per arc: tile on its two sides (side A = left of the first piece).
    pub arc_tiles: Vec<(usize, usize)>,
    pub is_ideal_triangle: bool,
}

pub(crate) fn kdist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub(crate) fn lerp(a: (f64, f64), b: (f64, f64), t: f64) -> (f64, f64) {
    (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
}

pub(crate) fn apply_klein(h: Isometry, p: (f64, f64)) -> (f64, f64) {
    let v = h.act(Vec21::new(p.0, p.1, 1.0));
    (v.x / v.z, v.y / v.z)
}

/// Intersection of segments a-b and c-d; returns params (s, t) on each.
pub(crate) fn seg_intersect(
    a: (f64, f64),
    b: (f64, f64),
    c: (f64, f64),
    d: (f64, f64),
) -> Option<(f64, f64)> {
    let r = (b.0 - a.0, b.1 - a.1);
    let s = (d.0 - c.0, d.1 - c.1);
    let den = r.0 * s.1 - r.1 * s.0;
    if den.abs() < 1e-14 {
        return None;
    }
    let qp = (c.0 - a.0, c.1 - a.1);
    let u = (qp.0 * s.1 - qp.1 * s.0) / den;
    let v = (qp.0 * r.1 - qp.1 * r.0) / den;
    Some((u, v))
}

/// Extend the chord through p toward q to the unit circle (the forward
/// ideal endpoint beyond q).
pub(crate) fn forward_ideal(p: (f64, f64), q: (f64, f64)) -> (f64, f64) {
    let d = (q.0 - p.0, q.1 - p.1);
    let a = d.0 * d.0 + d.1 * d.1;
    let b = 2.0 * (p.0 * d.0 + p.1 * d.1);
    let c = p.0 * p.0 + p.1 * p.1 - 1.0;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let t = (-b + disc) / (2.0 * a);
    lerp(p, q, t)
}

impl DecoratedSurface {
    fn endpoint_base_klein(&self, e: &ArcEndpoint) -> Result<(f64, f64), ArcError> {
        match e {
            ArcEndpoint::Spike { vertex, .. } => {
                if *vertex >= self.domain.vertices.len() {
                    return Err(ArcError::BadArc("bad vertex index".into()));
                }
                match self.domain.vertices[*vertex] {
                    DomainVertex::Ideal { .. } => Ok(self.domain.vertices[*vertex].klein()),
                    DomainVertex::Finite(_) => {
                        Err(ArcError::BadArc("spike endpoint at a finite vertex".into()))
                    }
                }
            }
            ArcEndpoint::Foot { side, t, .. } => {
                if *side >= self.domain.side_count() {
                    return Err(ArcError::BadArc("bad side index".into()));
                }
                match self.domain.sides[*side] {
                    SideKind::Paired { .. } => {
                        Err(ArcError::BadArc("arc foot on a cut side".into()))
                    }
                    _ => {
                        if !(*t > 0.0 && *t < 1.0) {
                            return Err(ArcError::BadArc("foot parameter outside (0,1)".into()));
                        }
                        let (p, q) = self.domain.side_klein(*side);
                        Ok(lerp(p, q, *t))
                    }
                }
            }
        }
    }

    fn endpoint_deck(&self, e: &ArcEndpoint) -> Isometry {
        let w = match e {
            ArcEndpoint::Spike { deck, .. } => deck,
            ArcEndpoint::Foot { deck, .. } => deck,
        };
        self.holonomy(w)
    }
}

/// Side geodesic of the polygon (chord extended to the circle).
pub(crate) fn side_geodesic(s: &DecoratedSurface, side: usize) -> Result<Geodesic, ArcError> {
    let (p, q) = s.domain.side_klein(side);
    chord_geodesic(p, q)
}

pub(crate) fn chord_geodesic(p: (f64, f64), q: (f64, f64)) -> Result<Geodesic, ArcError> {
    let back = forward_ideal(q, p);
    let fwd = forward_ideal(p, q);
    geodesic_from_endpoints(Vec21::new(back.0, back.1, 1.0), Vec21::new(fwd.0, fwd.1, 1.0))
        .map_err(|_| ArcError::BadArc("degenerate chord".into()))
}

/// Walk an arc through the polygon, unfolding across cut sides.
pub fn lift_arc(s: &DecoratedSurface, arc: &GeodesicArc) -> Result<ArcLift, ArcError> {
    match (arc.kind, &arc.start, &arc.end) {
        (ArcKind::EdgeToEdge, ArcEndpoint::Foot { .. }, ArcEndpoint::Foot { .. }) => {}
        (ArcKind::SpikeToEdge, ArcEndpoint::Spike { .. }, ArcEndpoint::Foot { .. }) => {}
        (ArcKind::SpikeToEdge, ArcEndpoint::Foot { .. }, ArcEndpoint::Spike { .. }) => {}
        _ => return Err(ArcError::BadArc("endpoint kinds disagree with arc kind".into())),
    }
    let start_deck = s.endpoint_deck(&arc.start);
    if (start_deck.m[0][1].abs() + start_deck.m[1][0].abs()
        + (start_deck.m[0][0] - start_deck.m[1][1]).abs())
        > 1e-12
        && start_deck != Isometry::identity()
    {
        return Err(ArcError::BadArc("start deck word must be trivial".into()));
    }
    let p0 = s.endpoint_base_klein(&arc.start)?;
    let end_base = s.endpoint_base_klein(&arc.end)?;
    let q0 = apply_klein(s.endpoint_deck(&arc.end), end_base);
    if kdist(p0, q0) < 1e-9 {
        return Err(ArcError::BadArc("degenerate arc".into()));
    }
    let start_loc = match &arc.start {
        ArcEndpoint::Spike { vertex, .. } => PieceEnd::AtVertex { vertex: *vertex },
        ArcEndpoint::Foot { side, t, .. } => PieceEnd::OnSide { side: *side, t: *t },
    };
    let pieces = walk_chord(s, p0, q0, start_loc)?;
    let last = pieces.last().expect("walk returns pieces");
    // The final frame must bring the declared end back to base.
    if kdist(last.b, end_base) > MATCH_TOL {
        return Err(ArcError::MismatchedEnd);
    }
    let geodesic = chord_geodesic(p0, q0)?;
    let to_vec = |loc: &ArcEndpoint, pt: (f64, f64)| -> Vec21 {
        match loc {
            ArcEndpoint::Spike { .. } => {
                let e = forward_ideal(lerp(p0, q0, 0.5), pt);
                Vec21::new(e.0, e.1, 1.0)
            }
            ArcEndpoint::Foot { .. } => {
                let z = 1.0 / (1.0 - pt.0 * pt.0 - pt.1 * pt.1).sqrt();
                Vec21::new(pt.0 * z, pt.1 * z, z)
            }
        }
    };
    let start_vec = to_vec(&arc.start, p0);
    let end_vec = to_vec(&arc.end, q0);
    let mut min_sin = f64::INFINITY;
    for p in &pieces {
        for (pt, loc) in [(p.a, p.a_loc), (p.b, p.b_loc)] {
            if let PieceEnd::OnSide { side, .. } = loc {
                if matches!(
                    s.domain.sides[side],
                    SideKind::Edge { .. } | SideKind::ClosedBoundary
                ) {
                    let g1 = chord_geodesic(p.a, p.b)?;
                    let g2 = side_geodesic(s, side)?;
                    let z = 1.0 / (1.0 - pt.0 * pt.0 - pt.1 * pt.1).sqrt();
                    let hp = HypPoint::new(Vec21::new(pt.0 * z, pt.1 * z, z))
                        .map_err(|_| ArcError::BadArc("foot off disk".into()))?;
                    if let Ok(sn) = sin_angle_at(hp, &g1, &g2) {
                        min_sin = min_sin.min(sn.abs());
                    }
                }
            }
        }
    }
    Ok(ArcLift {
        kind: arc.kind,
        pieces,
        geodesic,
        start_vec,
        end_vec,
        min_incidence_sin: min_sin,
    })
}

/// Walk the chord p0 -> q0 through the polygon, unfolding across cut
/// sides; q0 may lie outside the polygon (an unfolded target).
pub(crate) fn walk_chord(
    s: &DecoratedSurface,
    p0: (f64, f64),
    q0: (f64, f64),
    start_loc: PieceEnd,
) -> Result<Vec<Piece>, ArcError> {
    let n_sides = s.domain.side_count();
    let polys: Vec<((f64, f64), (f64, f64))> =
        (0..n_sides).map(|i| s.domain.side_klein(i)).collect();

    let mut pieces: Vec<Piece> = Vec::new();
    let mut entry = p0;
    let mut target = q0;
    let mut entry_loc = start_loc;
    let mut word = Word::identity();
    let mut iso = Isometry::identity();
    let mut flip: i8 = 1;

    for _ in 0..64 {
        // Earliest proper crossing of a side strictly between entry and target.
        let mut best: Option<(f64, usize, f64)> = None; // (param along piece, side, side param)
        for (i, &(c, d)) in polys.iter().enumerate() {
            if let PieceEnd::OnSide { side, .. } = entry_loc {
                if side == i {
                    continue;
                }
            }
            if let PieceEnd::AtVertex { vertex } = entry_loc {
                let (a, b) = s.domain.side_vertices(i);
                if a == vertex || b == vertex {
                    continue;
                }
            }
            if let Some((u, v)) = seg_intersect(entry, target, c, d) {
                if u > 1e-9 && u < 1.0 - 1e-9 && v > -1e-9 && v < 1.0 + 1e-9 {
                    if !(1e-6..=1.0 - 1e-6).contains(&v) {
                        return Err(ArcError::BadArc("arc passes through a vertex".into()));
                    }
                    if best.is_none_or(|(bu, _, _)| u < bu) {
                        best = Some((u, i, v));
                    }
                }
            }
        }
        match best {
            None => {
                // Terminal piece: target must sit at a vertex or on a
                // boundary side.
                let b_loc = locate_terminal(s, target)?;
                pieces.push(Piece {
                    a: entry,
                    b: target,
                    a_loc: entry_loc,
                    b_loc,
                    word: word.clone(),
                    iso,
                    flip,
                });
                return Ok(pieces);
            }
            Some((u, side, v)) => {
                let letter = match s.domain.sides[side] {
                    SideKind::Paired { letter, .. } => letter,
                    _ => return Err(ArcError::BadArc("arc leaves through the boundary".into())),
                };
                let exit = lerp(polys[side].0, polys[side].1, v);
                let exit_pt = lerp(entry, target, u);
                debug_assert!(kdist(exit, exit_pt) < 1e-7);
                pieces.push(Piece {
                    a: entry,
                    b: exit,
                    a_loc: entry_loc,
                    b_loc: PieceEnd::OnSide { side, t: v },
                    word: word.clone(),
                    iso,
                    flip,
                });
                let h = s.letter_isometry(letter);
                let partner = match s.domain.sides[side] {
                    SideKind::Paired { partner, .. } => partner,
                    _ => unreachable!(),
                };
                entry = apply_klein(h, exit);
                target = apply_klein(h, target);
                // Recover the entry parameter on the partner side.
                let (c, d) = polys[partner];
                let len2 = kdist(c, d).powi(2);
                let t_new =
                    ((entry.0 - c.0) * (d.0 - c.0) + (entry.1 - c.1) * (d.1 - c.1)) / len2;
                entry_loc = PieceEnd::OnSide {
                    side: partner,
                    t: t_new,
                };
                word = Word::reduced(
                    &std::iter::once(letter)
                        .chain(word.0.iter().copied())
                        .collect::<Vec<_>>(),
                );
                iso = h * iso;
                if h.det_sign < 0 {
                    flip = -flip;
                }
            }
        }
    }
    Err(ArcError::WalkDiverged)
}

fn locate_terminal(s: &DecoratedSurface, p: (f64, f64)) -> Result<PieceEnd, ArcError> {
    for (i, v) in s.domain.vertices.iter().enumerate() {
        if kdist(v.klein(), p) < MATCH_TOL {
            return Ok(PieceEnd::AtVertex { vertex: i });
        }
    }
    for i in 0..s.domain.side_count() {
        if matches!(s.domain.sides[i], SideKind::Paired { .. }) {
            continue;
        }
        let (c, d) = s.domain.side_klein(i);
        let len2 = kdist(c, d).powi(2);
        let t = ((p.0 - c.0) * (d.0 - c.0) + (p.1 - c.1) * (d.1 - c.1)) / len2;
        if t > 1e-9 && t < 1.0 - 1e-9 {
            let foot = lerp(c, d, t);
            if kdist(foot, p) < MATCH_TOL {
                return Ok(PieceEnd::OnSide { side: i, t });
            }
        }
    }
    Err(ArcError::MismatchedEnd)
}

pub fn lift_family(
    s: &DecoratedSurface,
    arcs: &[GeodesicArc],
) -> Result<Vec<ArcLift>, ArcError> {
    arcs.iter().map(|a| lift_arc(s, a)).collect()
}

/// True iff no two lifted pieces cross in the fundamental polygon (shared
/// ideal endpoints allowed). Pieces capture all deck translates: any
/// surface crossing projects into the base polygon.
pub fn pairwise_disjoint(s: &DecoratedSurface, arcs: &[GeodesicArc]) -> Result<bool, ArcError> {
    let lifts = lift_family(s, arcs)?;
    Ok(lifts_disjoint(&lifts))
}

fn lifts_disjoint(lifts: &[ArcLift]) -> bool {
    let mut all: Vec<(usize, &Piece)> = Vec::new();
    for (i, l) in lifts.iter().enumerate() {
        for p in &l.pieces {
            all.push((i, p));
        }
    }
    for (k, &(i1, p1)) in all.iter().enumerate() {
        for &(i2, p2) in &all[k + 1..] {
            if i1 == i2 && std::ptr::eq(p1, p2) {
                continue;
            }
            if let Some((u, v)) = seg_intersect(p1.a, p1.b, p2.a, p2.b) {
                if !(-1e-9..=1.0 + 1e-9).contains(&u) || !(-1e-9..=1.0 + 1e-9).contains(&v) {
                    continue;
                }
                let pt = lerp(p1.a, p1.b, u);
                // Shared ideal vertex: both pieces end there.
                let near_vertex = |p: &Piece| {
                    (matches!(p.a_loc, PieceEnd::AtVertex { .. }) && kdist(p.a, pt) < MATCH_TOL)
                        || (matches!(p.b_loc, PieceEnd::AtVertex { .. })
                            && kdist(p.b, pt) < MATCH_TOL)
                };
                if near_vertex(p1) && near_vertex(p2) {
                    continue;
                }
                return false;
            }
        }
    }
    true
}

/// Tiles cut out by the arcs: planar subdivision + gluing.
pub fn tiles(s: &DecoratedSurface, arcs: &[GeodesicArc]) -> Result<Tiling, ArcError> {
    let lifts = lift_family(s, arcs)?;
    if !lifts_disjoint(&lifts) {
        return Err(ArcError::ArcsCross);
    }
    build_tiling(s, lifts)
}

fn build_tiling(s: &DecoratedSurface, lifts: Vec<ArcLift>) -> Result<Tiling, ArcError> {
    let n_sides = s.domain.side_count();
    let nv = s.domain.vertices.len();

    // Nodes: polygon vertices + piece endpoints on sides.
    let mut nodes: Vec<(f64, f64)> = (0..nv).map(|i| s.domain.vertices[i].klein()).collect();
    let mut node_kind: Vec<NodeKind> = (0..nv).map(NodeKind::Vertex).collect();
    let mut side_feet: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n_sides];

    let locate = |loc: PieceEnd,
                      nodes: &mut Vec<(f64, f64)>,
                      node_kind: &mut Vec<NodeKind>,
                      side_feet: &mut Vec<Vec<(f64, usize)>>|
     -> usize {
        match loc {
            PieceEnd::AtVertex { vertex } => vertex,
            PieceEnd::OnSide { side, t } => {
                for &(t0, id) in &side_feet[side] {
                    if (t0 - t).abs() < 1e-8 {
                        return id;
                    }
                }
                let (c, d) = s.domain.side_klein(side);
                let id = nodes.len();
                nodes.push(lerp(c, d, t));
                node_kind.push(NodeKind::SideFoot { side, t });
                side_feet[side].push((t, id));
                id
            }
        }
    };

    // Arc edges.
    let mut edges: Vec<EdgeData> = Vec::new();
    for (ai, l) in lifts.iter().enumerate() {
        for (pi, p) in l.pieces.iter().enumerate() {
            let a = locate(p.a_loc, &mut nodes, &mut node_kind, &mut side_feet);
            let b = locate(p.b_loc, &mut nodes, &mut node_kind, &mut side_feet);
            edges.push(EdgeData {
                a,
                b,
                label: EdgeLabel::Arc { arc: ai, piece: pi },
                left: None,
                right: None,
            });
        }
    }
    // Boundary edges: consecutive nodes along each side.
    let mut side_edges: Vec<Vec<usize>> = vec![Vec::new(); n_sides];
    for side in 0..n_sides {
        let (va, vb) = s.domain.side_vertices(side);
        let mut feet = side_feet[side].clone();
        feet.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut chain = vec![va];
        chain.extend(feet.iter().map(|&(_, id)| id));
        chain.push(vb);
        for w in chain.windows(2) {
            side_edges[side].push(edges.len());
            edges.push(EdgeData {
                a: w[0],
                b: w[1],
                label: EdgeLabel::Boundary { side },
                left: None,
                right: None,
            });
        }
    }

    // Half-edge face tracing: at each node, outgoing directions sorted by
    // angle; next(u->v) = the edge clockwise-next after (v->u) at v.
    let ne = edges.len();
    let mut out: Vec<Vec<(f64, usize, bool)>> = vec![Vec::new(); nodes.len()];
    for (ei, e) in edges.iter().enumerate() {
        let d1 = (nodes[e.b].0 - nodes[e.a].0, nodes[e.b].1 - nodes[e.a].1);
        out[e.a].push((d1.1.atan2(d1.0), ei, true));
        out[e.b].push(((-d1.1).atan2(-d1.0), ei, false));
    }
    for v in &mut out {
        v.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    }
    let he_next = |ei: usize, fwd: bool| -> (usize, bool) {
        let e = &edges[ei];
        let v = if fwd { e.b } else { e.a };
        let list = &out[v];
        let pos = list
            .iter()
            .position(|&(_, e2, f2)| e2 == ei && f2 != fwd)
            .expect("reverse half-edge present");
        // Clockwise-next = previous in ccw-sorted order.
        let (_, e2, f2) = list[(pos + list.len() - 1) % list.len()];
        (e2, f2)
    };
    let mut face_of: Vec<[Option<usize>; 2]> = vec![[None, None]; ne];
    let mut faces: Vec<FaceData> = Vec::new();
    let mut outer: Option<usize> = None;
    for start in 0..ne {
        for fwd in [true, false] {
            if face_of[start][fwd as usize].is_some() {
                continue;
            }
            let fid = faces.len();
            let mut cyc_nodes = Vec::new();
            let (mut ei, mut f) = (start, fwd);
            let mut area = 0.0;
            for _ in 0..4 * ne {
                face_of[ei][f as usize] = Some(fid);
                let (a, b) = if f {
                    (edges[ei].a, edges[ei].b)
                } else {
                    (edges[ei].b, edges[ei].a)
                };
                cyc_nodes.push(a);
                area += nodes[a].0 * nodes[b].1 - nodes[b].0 * nodes[a].1;
                let nx = he_next(ei, f);
                ei = nx.0;
                f = nx.1;
                if ei == start && f == fwd {
                    break;
                }
            }
            if area < 0.0 {
                if outer.is_some() {
                    return Err(ArcError::BadArc("multiple outer faces".into()));
                }
                outer = Some(fid);
            }
            let spikes: Vec<usize> = {
                let mut sp: Vec<usize> = cyc_nodes
                    .iter()
                    .filter_map(|&n| match node_kind[n] {
                        NodeKind::Vertex(v) => s.domain.vertices[v].spike(),
                        _ => None,
                    })
                    .collect();
                sp.sort_unstable();
                sp.dedup();
                sp
            };
            let sample = {
                let mut sx = 0.0;
                let mut sy = 0.0;
                for &n in &cyc_nodes {
                    sx += nodes[n].0;
                    sy += nodes[n].1;
                }
                (sx / cyc_nodes.len() as f64, sy / cyc_nodes.len() as f64)
            };
            faces.push(FaceData {
                nodes: cyc_nodes,
                spikes,
                sample,
            });
        }
    }
    let outer = outer.ok_or_else(|| ArcError::BadArc("no outer face".into()))?;
    // Re-index faces skipping the outer one.
    let mut remap: Vec<Option<usize>> = vec![None; faces.len()];
    let mut inner_faces = Vec::new();
    for (i, f) in faces.into_iter().enumerate() {
        if i != outer {
            remap[i] = Some(inner_faces.len());
            inner_faces.push(f);
        }
    }
    for (ei, e) in edges.iter_mut().enumerate() {
        e.left = face_of[ei][1].and_then(|f| remap[f]);
        e.right = face_of[ei][0].and_then(|f| remap[f]);
    }

    // Glue boundary edges across side pairings.
    let mut gluings = Vec::new();
    for side in 0..n_sides {
        if let SideKind::Paired { letter, partner } = s.domain.sides[side] {
            if partner < side {
                continue; // handle each pair once
            }
            let h = s.letter_isometry(letter);
            for &ei in &side_edges[side] {
                let mid = lerp(nodes[edges[ei].a], nodes[edges[ei].b], 0.5);
                let img = apply_klein(h, mid);
                let mut found = None;
                for &ej in &side_edges[partner] {
                    let c = nodes[edges[ej].a];
                    let d = nodes[edges[ej].b];
                    let len2 = kdist(c, d).powi(2);
                    let t = ((img.0 - c.0) * (d.0 - c.0) + (img.1 - c.1) * (d.1 - c.1)) / len2;
                    if t > -1e-6 && t < 1.0 + 1e-6 && kdist(lerp(c, d, t), img) < MATCH_TOL {
                        found = Some(ej);
                        break;
                    }
                }
                let ej = found.ok_or(ArcError::BadArc(
                    "cut subdivisions do not match across the pairing".into(),
                ))?;
                gluings.push((ei, ej, letter));
            }
            if side_edges[side].len() != side_edges[partner].len() {
                return Err(ArcError::BadArc("unbalanced cut subdivision".into()));
            }
        }
    }

    // Union-find over faces.
    let nf = inner_faces.len();
    let mut parent: Vec<usize> = (0..nf).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let inner_face_of = |e: &EdgeData| e.left.or(e.right).expect("boundary edge has a face");
    for &(ei, ej, _) in &gluings {
        let a = inner_face_of(&edges[ei]);
        let b = inner_face_of(&edges[ej]);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut tile_ids: Vec<usize> = Vec::new();
    let mut face_tile = vec![0usize; nf];
    let mut roots: Vec<usize> = Vec::new();
    for (f, ft) in face_tile.iter_mut().enumerate() {
        let r = find(&mut parent, f);
        let id = match roots.iter().position(|&x| x == r) {
            Some(i) => i,
            None => {
                roots.push(r);
                roots.len() - 1
            }
        };
        *ft = id;
        tile_ids.push(id);
    }
    let nt = roots.len();
    let mut tiles: Vec<Tile> = (0..nt)
        .map(|_| Tile {
            faces: Vec::new(),
            euler: 0,
            spikes: Vec::new(),
            internal_sides: 0,
        })
        .collect();
    for f in 0..nf {
        let t = face_tile[f];
        tiles[t].faces.push(f);
        tiles[t].euler += 1;
        for &sp in &inner_faces[f].spikes {
            if !tiles[t].spikes.contains(&sp) {
                tiles[t].spikes.push(sp);
            }
        }
    }
    for &(ei, _, _) in &gluings {
        let t = face_tile[inner_face_of(&edges[ei])];
        tiles[t].euler -= 1;
    }
    for t in &mut tiles {
        t.spikes.sort_unstable();
    }

    // Arc sides: side A = left of the first piece, propagated through
    // flips; every piece of a side must land in the same tile.
    let mut arc_tiles = Vec::with_capacity(lifts.len());
    for (ai, l) in lifts.iter().enumerate() {
        let mut side_a: Option<usize> = None;
        let mut side_b: Option<usize> = None;
        for (pi, p) in l.pieces.iter().enumerate() {
            let e = edges
                .iter()
                .find(|e| e.label == EdgeLabel::Arc { arc: ai, piece: pi })
                .expect("piece edge exists");
            let (l_f, r_f) = (
                e.left.expect("arc edge interior"),
                e.right.expect("arc edge interior"),
            );
            let (ta, tb) = if p.flip > 0 {
                (face_tile[l_f], face_tile[r_f])
            } else {
                (face_tile[r_f], face_tile[l_f])
            };
            match side_a {
                None => {
                    side_a = Some(ta);
                    side_b = Some(tb);
                }
                Some(sa) => {
                    if sa != ta || side_b != Some(tb) {
                        return Err(ArcError::BadArc(
                            "arc sides inconsistent along the lift chain".into(),
                        ));
                    }
                }
            }
        }
        let (sa, sb) = (side_a.unwrap(), side_b.unwrap());
        tiles[sa].internal_sides += 1;
        tiles[sb].internal_sides += 1;
        arc_tiles.push((sa, sb));
    }

    Ok(Tiling {
        lifts,
        sub: Subdivision {
            nodes,
            node_kind,
            edges,
            faces: inner_faces,
            gluings,
        },
        face_tile,
        tiles,
        arc_tiles,
        is_ideal_triangle: s.family == Family::IdealPolygon { q: 3 },
    })
}

/// Every tile a disk (chi = 1) with at most one spike.
pub fn is_filling(s: &DecoratedSurface, arcs: &[GeodesicArc]) -> Result<bool, ArcError> {
    let t = tiles(s, arcs)?;
    Ok(tiling_is_filling(&t))
}

pub fn tiling_is_filling(t: &Tiling) -> bool {
    t.tiles.iter().all(|x| x.euler == 1 && x.spikes.len() <= 1)
}

/// Histogram of tiles over 1..=3 internal sides; tiles outside that range
/// are rejected (0 internal sides is legal only for the bare ideal
/// triangle).
pub fn tile_types(t: &Tiling) -> Result<[usize; 3], ArcError> {
    let mut h = [0usize; 3];
    for tile in &t.tiles {
        match tile.internal_sides {
            0 if t.is_ideal_triangle && t.tiles.len() == 1 => {}
            1..=3 => h[tile.internal_sides - 1] += 1,
            k => return Err(ArcError::BadTileType(k)),
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PrunedReport {
    pub issues: Vec<String>,
    pub tile_witnesses: Vec<String>,
}

impl PrunedReport {
    pub fn pass(&self) -> bool {
        self.issues.is_empty() && self.tile_witnesses.is_empty()
    }
}

/// Pruned-arc-complex membership: positive normalized weights, pairwise
/// disjoint, filling.
pub fn validate_pruned_point(s: &DecoratedSurface, x: &WeightedArcFamily) -> PrunedReport {
    let mut r = PrunedReport::default();
    if x.weights.len() != x.arcs.len() {
        r.issues.push("weight/arc count mismatch".into());
        return r;
    }
    if x.arcs.is_empty() {
        r.issues.push("empty family".into());
        return r;
    }
    if x.weights.iter().any(|&w| !(w > 0.0)) {
        r.issues.push("weights must be strictly positive".into());
    }
    let sum: f64 = x.weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        r.issues.push(format!("weights sum to {sum}, expected 1"));
    }
    match tiles(s, &x.arcs) {
        Err(e) => r.issues.push(format!("tiling failed: {e}")),
        Ok(t) => {
            for (i, tile) in t.tiles.iter().enumerate() {
                if tile.euler != 1 {
                    r.tile_witnesses
                        .push(format!("tile {i}: chi = {}, not a disk", tile.euler));
                }
                if tile.spikes.len() > 1 {
                    r.tile_witnesses
                        .push(format!("tile {i}: spikes {:?}", tile.spikes));
                }
            }
        }
    }
    r
}
