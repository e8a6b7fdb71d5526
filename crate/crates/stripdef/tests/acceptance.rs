//! Acceptance suite: ten end-to-end criteria over the five bundled
//! surfaces. Each criterion is one test, so `cargo test --test acceptance`
//! prints one pass/fail line per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stripdef::fixtures::{self, Fixture};
use stripdef::hyperbolic::{dist, dist_hilbert, HypPoint};
use stripdef::isometry::longitudinal_motion;
use stripdef::margulis::{
    admissible_check, build_decorated_spacetime, crooked_disjoint_report,
    crooked_equivariance_residual, crooked_from_arc, crooked_orbit_plane, dl_horoball_from_tangent,
    handedness, margulis_invariant, opposite_sign_check, photon_pairing, CrookedPlane, Photon,
    SignVerdict,
};
use stripdef::minkowski::Vec21;
use stripdef::strip::{
    basis_matrix, dl_closed_analytic, dl_closed_fd, dl_horoball_analytic, dl_horoball_fd,
    strip_map, tile_map, Cocycle,
};
use stripdef::word::{conjugacy_classes, Word};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn fixtures_with_holonomy() -> Vec<Fixture> {
    fixtures::all()
        .into_iter()
        .filter(|f| f.surface.rank() > 0)
        .collect()
}

/// Criterion 1: analytic vs finite-difference length derivatives, every
/// bundled surface, closed words <= 4 and connections of length <= 6,
/// relative error < 1e-6, total runtime < 30 s.
#[test]
fn c01_derivative_oracle_agreement() {
    let start = Instant::now();
    let dt = 1e-4;
    for f in fixtures::all() {
        let s = &f.surface;
        let t = strip_map(s, &f.family).unwrap();
        let tm = tile_map(s, &f.family).unwrap();
        for g in s.enumerate_closed_geodesics(4) {
            let analytic = dl_closed_analytic(s, &f.family, &g.word).unwrap();
            let fd = dl_closed_fd(s, &t.cocycle, &g.word, dt).unwrap();
            assert!(
                rel_err(analytic, fd) < 1e-6,
                "{} closed {:?}: {analytic} vs {fd}",
                f.name,
                g.word
            );
        }
        for h in s.enumerate_horoball_connections(4, 6.0) {
            let analytic =
                dl_horoball_analytic(s, &f.family, h.spike_from, h.spike_to, &h.word).unwrap();
            let fd = dl_horoball_fd(s, &tm, h.spike_from, h.spike_to, &h.word, dt).unwrap();
            assert!(
                rel_err(analytic, fd) < 1e-6,
                "{} horoball ({},{},{:?}): {analytic} vs {fd}",
                f.name,
                h.spike_from,
                h.spike_to,
                h.word
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
}

/// Criterion 2: alpha_u(gamma) equals the FD length derivative to 1e-8 for
/// words <= 5; alpha vanishes on 100 random coboundaries to 1e-9.
#[test]
fn c02_margulis_invariant_identity() {
    for f in fixtures_with_holonomy() {
        let s = &f.surface;
        let t = strip_map(s, &f.family).unwrap();
        for w in conjugacy_classes(s.rank(), 5) {
            let Ok(alpha) = margulis_invariant(&s.generators, &t.cocycle, &w) else {
                continue;
            };
            let fd = dl_closed_fd(s, &t.cocycle, &w, 1e-4).unwrap();
            assert!((alpha - fd).abs() < 1e-8, "{} {:?}", f.name, w);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let e = Vec21::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let u = Cocycle {
                values: s.generators.iter().map(|g| e - g.adjoint(e)).collect(),
            };
            for w in conjugacy_classes(s.rank(), 3) {
                let Ok(alpha) = margulis_invariant(&s.generators, &u, &w) else {
                    continue;
                };
                assert!(alpha.abs() < 1e-9, "{} coboundary {:?}: {alpha}", f.name, w);
            }
        }
    }
}

/// Criterion 3: strip vectors of each bundled triangulation are a basis —
/// arc rank equals the deformation dimension exactly, and the rank grows by
/// exactly 3 when the coboundary columns are added.
#[test]
fn c03_basis_theorem() {
    for f in fixtures::all() {
        let rep = basis_matrix(&f.surface, &f.family).unwrap();
        assert!(rep.ok, "{}", f.name);
        assert_eq!(rep.arc_rank, f.family.arcs.len(), "{}", f.name);
        assert_eq!(
            rep.arc_rank,
            f.surface.deformation_dim(),
            "{}: deformation dimension",
            f.name
        );
        assert_eq!(rep.full_rank, rep.arc_rank + 3, "{}", f.name);
    }
    // Rank-oracle value for the decorated ideal square.
    let sq = fixtures::square();
    assert_eq!(basis_matrix(&sq.surface, &sq.family).unwrap().arc_rank, 5);
}

/// Criterion 4: strictly positive weights on a filling family lengthen
/// every enumerated connection; admissible_check passes at epsilon = 1e-6
/// and the negated vector fails with a witness.
#[test]
fn c04_positivity_and_admissibility() {
    for f in fixtures::all() {
        let s = &f.surface;
        let t = strip_map(s, &f.family).unwrap();
        for g in s.enumerate_closed_geodesics(4) {
            let dl = margulis_invariant(&s.generators, &t.cocycle, &g.word).unwrap();
            assert!(dl > 0.0, "{} closed {:?}", f.name, g.word);
        }
        for h in s.enumerate_horoball_connections(4, 6.0) {
            let dl = dl_horoball_from_tangent(s, &t, h.spike_from, h.spike_to, &h.word).unwrap();
            assert!(dl > 0.0, "{} horoball {:?}", f.name, h.word);
        }
        let rep = admissible_check(s, &t, 4, 6.0, 1e-6);
        assert!(rep.pass, "{}: {:?}", f.name, rep.witness);
        let neg = stripdef::strip::TangentVector {
            cocycle: Cocycle {
                values: t.cocycle.values.iter().map(|v| -*v).collect(),
            },
            spike_motions: t.spike_motions.iter().map(|v| -*v).collect(),
        };
        let rep = admissible_check(s, &neg, 4, 6.0, 1e-6);
        assert!(!rep.pass && rep.witness.is_some(), "{}", f.name);
    }
}

/// Criterion 5: photons of each pipeline spacetime are pairwise disjoint
/// with constant handedness; u -> -u flips every sign; exact sign census.
#[test]
fn c05_photon_suite() {
    type Census = &'static [(usize, usize, i32)];
    let expected: [(&str, Census); 5] = [
        ("triangle", &[(0, 1, 1), (0, 2, 1), (1, 2, 1)]),
        (
            "square",
            &[
                (0, 1, 1),
                (0, 2, 1),
                (0, 3, 1),
                (1, 2, 1),
                (1, 3, 1),
                (2, 3, 1),
            ],
        ),
        ("crown", &[]),
        ("annulus", &[(0, 1, 1)]),
        ("moebius", &[]),
    ];
    for f in fixtures::all() {
        let dst = build_decorated_spacetime(&f.surface, &f.family).unwrap();
        for i in 0..dst.photons.len() {
            for j in i + 1..dst.photons.len() {
                let p = photon_pairing(&dst.photons[i], &dst.photons[j]);
                assert!(p.abs() > 1e-8, "{} photons {i},{j}", f.name);
            }
        }
        let census = expected.iter().find(|e| e.0 == f.name).unwrap().1;
        assert_eq!(dst.handedness_signs, census, "{}", f.name);
        // u -> -u negates every photon base (directions are decoration
        // data and stay fixed), so every pairing sign flips. Negated
        // weights themselves are rejected upstream as non-filling.
        let neg: Vec<Photon> = dst
            .photons
            .iter()
            .map(|p| Photon { w: -p.w, v0: p.v0 })
            .collect();
        for &(i, j, s) in census {
            let flipped = handedness(&neg[i], &neg[j]).unwrap();
            assert_eq!(flipped, -s, "{} photons {i},{j}", f.name);
        }
    }
}

/// Criterion 6: crooked orbit residuals < 1e-10 up to word length 3, and
/// the stem-quadrant predicate agrees with the measured separation on
/// every tested pair (1000 perturbed samples per pair).
#[test]
fn c06_crooked_equivariance_and_disjointness() {
    use stripdef::word::reduced_words;
    for (name, arc) in [("crown", 1usize), ("annulus", 0), ("annulus", 3), ("moebius", 1)] {
        let f = fixtures::by_name(name).unwrap();
        let tm = tile_map(&f.surface, &f.family).unwrap();
        for w in reduced_words(f.surface.rank(), 3) {
            let r = crooked_equivariance_residual(&f.surface, &tm, arc, &w).unwrap();
            assert!(r < 1e-10, "{name} arc {arc} {:?}: {r}", w);
        }
    }
    // Base pairs with ultraparallel stems.
    let sq = fixtures::square();
    let tm = tile_map(&sq.surface, &sq.family).unwrap();
    let sq_pair = (
        crooked_from_arc(&tm, 0).unwrap(),
        crooked_from_arc(&tm, 2).unwrap(),
    );
    let cr = fixtures::crown();
    let tmc = tile_map(&cr.surface, &cr.family).unwrap();
    let cr_pair = (
        crooked_from_arc(&tmc, 1).unwrap(),
        crooked_orbit_plane(&cr.surface, &tmc, 1, &Word(vec![1])).unwrap(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (p1, p2) in [sq_pair, cr_pair] {
        for trial in 0..1000 {
            let scale = [0.0, 0.05, 0.2, 0.5, 1.0, 2.0][trial % 6];
            let off = Vec21::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .scale(scale);
            let q2 = CrookedPlane {
                w: p2.w + off,
                ..p2.clone()
            };
            let rep = crooked_disjoint_report(&p1, &q2, 1e-9).unwrap();
            assert_eq!(
                rep.quadrant, rep.sampled,
                "trial {trial}: sep {}",
                rep.min_separation
            );
        }
    }
}

/// Criterion 7: Opposite Sign Lemma census — AllPositive for every
/// admissible pipeline cocycle up to word length 6.
#[test]
fn c07_opposite_sign_census() {
    for f in fixtures_with_holonomy() {
        let t = strip_map(&f.surface, &f.family).unwrap();
        let verdict = opposite_sign_check(&f.surface.generators, &t.cocycle, 6);
        assert_eq!(verdict, SignVerdict::AllPositive, "{}", f.name);
    }
}

/// Criterion 8: rescaling every decoration by s shifts every connection
/// length by exactly 2 ln s and leaves admissibility verdicts unchanged.
#[test]
fn c08_rescaling_laws() {
    let s_factor = 2.5f64;
    let shift = 2.0 * s_factor.ln();
    for f in fixtures::all() {
        let base = &f.surface;
        let scaled = base.rescale_decorations(s_factor).unwrap();
        let a = base.enumerate_horoball_connections(3, 1e9);
        let b = scaled.enumerate_horoball_connections(3, 1e9);
        assert_eq!(a.len(), b.len(), "{}", f.name);
        for h in &a {
            let partner = b
                .iter()
                .find(|k| {
                    k.spike_from == h.spike_from && k.spike_to == h.spike_to && k.word == h.word
                })
                .unwrap_or_else(|| panic!("{}: missing {:?}", f.name, h));
            assert!(
                (partner.length - h.length - shift).abs() < 1e-12,
                "{}: {:?}",
                f.name,
                h
            );
        }
        let t1 = strip_map(base, &f.family).unwrap();
        let t2 = strip_map(&scaled, &f.family).unwrap();
        let r1 = admissible_check(base, &t1, 3, 6.0, 1e-6);
        let r2 = admissible_check(&scaled, &t2, 3, 6.0 + shift, 1e-6);
        assert_eq!(r1.pass, r2.pass, "{}", f.name);
    }
}

/// Criterion 9: hyperboloid distance equals the Hilbert (cross-ratio)
/// metric to 1e-10 over 10^4 random pairs.
#[test]
fn c09_cross_model_metric_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let mut point = || {
            let r: f64 = rng.gen_range(0.0..0.95f64);
            let a: f64 = rng.gen_range(0.0..2.0 * PI);
            let (x, y) = (r * a.cos(), r * a.sin());
            let z = 1.0 / (1.0 - x * x - y * y).sqrt();
            HypPoint::new(Vec21::new(x * z, y * z, z)).unwrap()
        };
        let (p, q) = (point(), point());
        let d1 = dist(p, q);
        let d2 = dist_hilbert(p, q).unwrap();
        assert!((d1 - d2).abs() < 1e-10, "{d1} vs {d2}");
    }
}

/// Criterion 10: the rectangle configuration reproduces the closed forms
/// -8 sin^2(theta) and 4 cos^2(theta) (the latter after the k' =
/// cos^2/(2 sin^2) field normalization) at theta in {pi/6, pi/4, pi/3}.
#[test]
fn c10_longitudinal_motion_closed_forms() {
    for theta in [PI / 6.0, PI / 4.0, PI / 3.0] {
        let (sn, cs) = theta.sin_cos();
        let a = Vec21::new(-cs, -sn, 1.0);
        let b = Vec21::new(cs, -sn, 1.0);
        let c = Vec21::new(cs, sn, 1.0);
        let d = Vec21::new(-cs, sn, 1.0);
        let x_g = a.mcross(c).mcross(b.mcross(d));
        let got_g = longitudinal_motion(x_g, a, b).unwrap();
        assert!((got_g - (-8.0 * sn * sn)).abs() < 1e-10, "theta {theta}");
        assert!(
            (longitudinal_motion(x_g, c, d).unwrap() - got_g).abs() < 1e-10,
            "equal magnitude on CD"
        );
        let kprime = cs * cs / (2.0 * sn * sn);
        let x_e = a.mcross(d).mcross(c.mcross(b)).scale(kprime);
        let got_e = longitudinal_motion(x_e, a, b).unwrap();
        assert!((got_e - 4.0 * cs * cs).abs() < 1e-10, "theta {theta}");
    }
}
