//! Bundled example surfaces with filling arc triangulations.
//!
//! Five fixtures, one per supported family: ideal triangle, ideal square,
//! one-spiked crown, (1,1)-spiked annulus, one-spiked Möbius strip. Each
//! carries a weighted arc family that triangulates the surface (every tile
//! a disk with at most one spike, 1–3 internal sides).

use crate::arc_complex::{ArcEndpoint, ArcKind, GeodesicArc, WeightedArcFamily};
use crate::minkowski::Vec21;
use crate::surface::{
    build_crown, build_ideal_polygon, build_spiked_annulus, build_spiked_moebius,
    DecoratedSurface,
};
use crate::word::Word;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub surface: DecoratedSurface,
    pub family: WeightedArcFamily,
}

fn foot(side: usize, t: f64) -> ArcEndpoint {
    ArcEndpoint::Foot {
        side,
        t,
        deck: Word::identity(),
    }
}

fn foot_deck(side: usize, t: f64, deck: Vec<i32>) -> ArcEndpoint {
    ArcEndpoint::Foot {
        side,
        t,
        deck: Word(deck),
    }
}

fn spike(vertex: usize) -> ArcEndpoint {
    ArcEndpoint::Spike {
        vertex,
        deck: Word::identity(),
    }
}

fn e2e(start: ArcEndpoint, end: ArcEndpoint) -> GeodesicArc {
    GeodesicArc {
        kind: ArcKind::EdgeToEdge,
        start,
        end,
    }
}

fn s2e(start: ArcEndpoint, end: ArcEndpoint) -> GeodesicArc {
    GeodesicArc {
        kind: ArcKind::SpikeToEdge,
        start,
        end,
    }
}

fn equal_weights(arcs: Vec<GeodesicArc>) -> WeightedArcFamily {
    let w = 1.0 / arcs.len() as f64;
    let weights = vec![w; arcs.len()];
    WeightedArcFamily { arcs, weights }
}

fn circle(angle_deg: f64) -> Vec21 {
    let a = angle_deg.to_radians();
    Vec21::new(a.cos(), a.sin(), 1.0)
}

/// Ideal triangle, vertices at 90°, 210°, 330°; two corner arcs plus one
/// spike-to-edge arc. Tiles: 2 of type 1, 2 of type 2.
pub fn triangle() -> Fixture {
    let surface =
        build_ideal_polygon(&[circle(90.0), circle(210.0), circle(330.0)]).expect("triangle");
    let arcs = vec![
        e2e(foot(2, 0.75), foot(0, 0.25)), // corner arc at vertex 0
        e2e(foot(0, 0.75), foot(1, 0.25)), // corner arc at vertex 1
        s2e(spike(2), foot(0, 0.5)),
    ];
    Fixture {
        name: "triangle",
        surface,
        family: equal_weights(arcs),
    }
}

/// Ideal square, vertices at 45°, 135°, 225°, 315°; two corner arcs, one
/// near-diagonal, two spike-to-edge arcs. Tiles: 2 of type 1, 4 of type 2.
pub fn square() -> Fixture {
    let surface = build_ideal_polygon(&[
        circle(45.0),
        circle(135.0),
        circle(225.0),
        circle(315.0),
    ])
    .expect("square");
    let arcs = vec![
        e2e(foot(3, 0.75), foot(0, 0.25)), // corner arc at vertex 0 (NE)
        e2e(foot(1, 0.75), foot(2, 0.25)), // corner arc at vertex 2 (SW)
        e2e(foot(0, 0.55), foot(2, 0.45)), // separates vertices 1 and 3
        s2e(spike(1), foot(2, 0.36)),
        s2e(spike(3), foot(0, 0.39)),
    ];
    Fixture {
        name: "square",
        surface,
        family: equal_weights(arcs),
    }
}

/// One-spiked crown, boundary translation length 2, spike at Klein angle
/// 2 rad; one spike-to-boundary arc and one chain-to-boundary arc.
/// Tiles: 2 of type 2.
pub fn crown() -> Fixture {
    let surface = build_crown(1, 2.0, &[(2.0, 1.0)]).expect("crown");
    let arcs = vec![
        s2e(spike(1), foot(3, 0.8)),
        e2e(foot(1, 0.5), foot(3, 0.4)),
    ];
    Fixture {
        name: "crown",
        surface,
        family: equal_weights(arcs),
    }
}

/// (1,1)-spiked annulus; one edge-to-edge arc across the core, two
/// spike-to-edge arcs, and one edge-to-edge arc winding through the cut.
/// Tiles: 4 of type 2.
pub fn annulus() -> Fixture {
    let surface = build_spiked_annulus(1, 1, &[], &[], [1.0, 1.0]).expect("annulus");
    let arcs = vec![
        e2e(foot(0, 0.5), foot(2, 0.5)),
        s2e(spike(1), foot(2, 0.25)),
        s2e(spike(3), foot(0, 0.25)),
        e2e(foot(0, 0.111), foot_deck(2, 0.111, vec![1])),
    ];
    Fixture {
        name: "annulus",
        surface,
        family: equal_weights(arcs),
    }
}

/// One-spiked Möbius strip; one spike-to-edge arc and one edge-to-edge arc
/// through the orientation-reversing cut. Tiles: 2 of type 2.
pub fn moebius() -> Fixture {
    let surface = build_spiked_moebius(1, &[], 1.0).expect("moebius");
    let arcs = vec![
        s2e(spike(0), foot(1, 0.5)),
        e2e(foot(1, 0.75), foot_deck(1, 0.25, vec![1])),
    ];
    Fixture {
        name: "moebius",
        surface,
        family: equal_weights(arcs),
    }
}

pub fn all() -> Vec<Fixture> {
    vec![triangle(), square(), crown(), annulus(), moebius()]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}
