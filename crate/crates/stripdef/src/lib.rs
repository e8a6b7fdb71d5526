//! Infinitesimal strip deformations of decorated hyperbolic surfaces.
//!
//! The library builds decorated crowned hyperbolic surfaces (ideal polygons,
//! crowns, spiked annuli and Möbius strips), evaluates infinitesimal strip
//! deformations along weighted arc families, and assembles the associated
//! Margulis-spacetime data: cocycles, Margulis invariants, crooked planes and
//! photons. Analytic first derivatives of closed-geodesic lengths and
//! horoball-connection lengths are cross-checked against finite differences.

// Negated comparisons such as `!(t > 0.0 && t < 1.0)` are deliberate input
// guards: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arc_complex;
pub mod fixtures;
pub mod hyperbolic;
pub mod io;
pub mod isometry;
pub mod margulis;
pub mod minkowski;
pub mod render;
pub mod strip;
pub mod surface;
pub mod word;
