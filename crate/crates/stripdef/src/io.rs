//! JSON interchange for the command-line tools.
//!
//! Every output embeds a config echo (command, cutoffs, seed, threads) so
//! a run can be reproduced exactly. Serialization is canonical — pretty
//! two-space indentation, fixed field order, shortest float round trip —
//! so read → write → read is byte-identical.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::arc_complex::{
    pairwise_disjoint, tiling_is_filling, validate_pruned_point, WeightedArcFamily,
};
use crate::margulis::{
    build_decorated_spacetime, opposite_sign_check, AdmissibilityReport, DecoratedSpacetime,
    MargulisError, Photon, SignVerdict,
};
use crate::minkowski::Vec21;
use crate::strip::{strip_map, tile_map, StripError, TangentVector};
use crate::surface::{
    build_crown, build_ideal_polygon, build_spiked_annulus, build_spiked_moebius, AuditReport,
    DecoratedSurface, SurfaceError,
};
use crate::word::Word;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violations: {0:?}")]
    InvariantViolation(Vec<String>),
    #[error("file error: {0}")]
    File(String),
    #[error("the tangent file does not match the surface")]
    MismatchedSurface,
    #[error(transparent)]
    Strip(#[from] StripError),
    #[error(transparent)]
    Margulis(#[from] MargulisError),
}

impl From<SurfaceError> for IoError {
    fn from(e: SurfaceError) -> Self {
        IoError::InvariantViolation(vec![e.to_string()])
    }
}

/// Run configuration echoed into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub command: String,
    pub word_length: usize,
    pub max_length: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for ConfigEcho {
    fn default() -> Self {
        ConfigEcho {
            command: String::new(),
            word_length: 4,
            max_length: 6.0,
            epsilon: 1e-6,
            dt: 1e-4,
            seed: 0,
            threads: 1,
        }
    }
}

/// Construction parameters for the four explicit surface families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SurfaceSpec {
    /// Decorated ideal polygon: one lightlike decoration vector per spike.
    IdealPolygon { spikes: Vec<Vec21> },
    /// Crown: closed-boundary translation length plus (Klein angle, scale)
    /// per spike.
    Crown {
        translation_length: f64,
        spikes: Vec<(f64, f64)>,
    },
    /// Spiked annulus: intermediate (angle, scale) spikes on each side of
    /// the two pinned corner spikes, whose decorations get the two scales.
    SpikedAnnulus {
        q1: usize,
        q2: usize,
        top: Vec<(f64, f64)>,
        bottom: Vec<(f64, f64)>,
        corner_scales: [f64; 2],
    },
    /// Spiked Möbius strip: intermediate (angle, scale) spikes plus the
    /// pinned corner spike's scale.
    SpikedMoebius {
        q: usize,
        intermediate: Vec<(f64, f64)>,
        corner_scale: f64,
    },
}

/// Builds the surface of a spec and audits it; any constructor error or
/// audit issue is an itemized invariant violation.
pub fn build_surface(spec: &SurfaceSpec) -> Result<DecoratedSurface, IoError> {
    let s = match spec {
        SurfaceSpec::IdealPolygon { spikes } => build_ideal_polygon(spikes)?,
        SurfaceSpec::Crown {
            translation_length,
            spikes,
        } => build_crown(spikes.len(), *translation_length, spikes)?,
        SurfaceSpec::SpikedAnnulus {
            q1,
            q2,
            top,
            bottom,
            corner_scales,
        } => build_spiked_annulus(*q1, *q2, top, bottom, *corner_scales)?,
        SurfaceSpec::SpikedMoebius {
            q,
            intermediate,
            corner_scale,
        } => build_spiked_moebius(*q, intermediate, *corner_scale)?,
    };
    let audit = s.audit();
    if !audit.pass() {
        return Err(IoError::InvariantViolation(audit.issues));
    }
    Ok(s)
}

/// Normalized surface output: spec, built surface and its audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFile {
    pub config: ConfigEcho,
    pub spec: SurfaceSpec,
    pub surface: DecoratedSurface,
    pub audit: AuditReport,
}

pub fn surface_file(config: ConfigEcho, spec: SurfaceSpec) -> Result<SurfaceFile, IoError> {
    let surface = build_surface(&spec)?;
    let audit = surface.audit();
    Ok(SurfaceFile {
        config,
        spec,
        surface,
        audit,
    })
}

/// Weighted arc family plus its disjointness/filling verdicts on a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcsFile {
    pub config: ConfigEcho,
    pub family: WeightedArcFamily,
    pub disjoint: bool,
    pub filling: bool,
    pub pruned_point: bool,
}

pub fn arcs_file(
    config: ConfigEcho,
    s: &DecoratedSurface,
    family: WeightedArcFamily,
) -> Result<ArcsFile, IoError> {
    let disjoint = pairwise_disjoint(s, &family.arcs).map_err(|e| IoError::Parse(e.to_string()))?;
    let filling = disjoint
        && crate::arc_complex::tiles(s, &family.arcs)
            .map(|t| tiling_is_filling(&t))
            .unwrap_or(false);
    let pruned_point = validate_pruned_point(s, &family).pass();
    Ok(ArcsFile {
        config,
        family,
        disjoint,
        filling,
        pruned_point,
    })
}

/// Infinitesimal strip-map output: tangent vector, tile-map dump and the
/// equivariance self-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentFile {
    pub config: ConfigEcho,
    pub weights: Vec<f64>,
    pub weights_normalized: bool,
    pub cocycle: Vec<Vec21>,
    pub spike_motions: Vec<Vec21>,
    pub tile_values: Vec<Vec21>,
    pub equivariance_residual: f64,
}

/// Strip map of a weighted family. Weights are normalized to sum 1 (the
/// projective class is what matters); the flag records whether they
/// already did.
pub fn tangent_file(
    config: ConfigEcho,
    s: &DecoratedSurface,
    family: &WeightedArcFamily,
) -> Result<TangentFile, IoError> {
    let total: f64 = family.weights.iter().sum();
    if total.abs() < 1e-12 {
        return Err(IoError::Parse("weights sum to zero".into()));
    }
    let weights_normalized = (total - 1.0).abs() < 1e-12;
    let mut fam = family.clone();
    for w in &mut fam.weights {
        *w /= total;
    }
    let t = strip_map(s, &fam)?;
    let tm = tile_map(s, &fam)?;
    Ok(TangentFile {
        config,
        weights: fam.weights,
        weights_normalized,
        cocycle: t.cocycle.values.clone(),
        spike_motions: t.spike_motions.clone(),
        tile_values: tm.phi.clone(),
        equivariance_residual: tm.residual,
    })
}

impl TangentFile {
    /// The tangent vector carried by the file, checked against a surface.
    pub fn tangent(&self, s: &DecoratedSurface) -> Result<TangentVector, IoError> {
        if self.cocycle.len() != s.rank() || self.spike_motions.len() != s.spike_count() {
            return Err(IoError::MismatchedSurface);
        }
        Ok(TangentVector {
            cocycle: crate::strip::Cocycle {
                values: self.cocycle.clone(),
            },
            spike_motions: self.spike_motions.clone(),
        })
    }
}

/// Admissibility verdict with its cutoffs echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleFile {
    pub config: ConfigEcho,
    pub report: AdmissibilityReport,
}

/// One crooked fundamental-domain facet, flattened for interchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrookedPlaneEntry {
    pub arc: usize,
    pub w: Vec21,
    pub v: Vec21,
    pub vplus: Vec21,
    pub vminus: Vec21,
    pub paired_with: Option<usize>,
    pub pairing_word: Option<Word>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeChecks {
    /// Handedness sign per spike pair (i, j, sign), i < j.
    pub handedness: Vec<(usize, usize, i32)>,
    /// Photons pairwise disjoint with constant handedness.
    pub disjointness: bool,
    pub opposite_sign: SignVerdict,
}

/// Decorated Margulis spacetime output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeFile {
    pub config: ConfigEcho,
    pub cocycle: Vec<Vec21>,
    pub photons: Vec<Photon>,
    pub crooked_planes: Vec<CrookedPlaneEntry>,
    pub checks: SpacetimeChecks,
}

pub fn spacetime_file(
    config: ConfigEcho,
    s: &DecoratedSurface,
    family: &WeightedArcFamily,
) -> Result<SpacetimeFile, IoError> {
    let word_length = config.word_length;
    let dst = build_decorated_spacetime(s, family)?;
    Ok(spacetime_file_from(config, s, &dst, word_length))
}

pub fn spacetime_file_from(
    config: ConfigEcho,
    s: &DecoratedSurface,
    dst: &DecoratedSpacetime,
    word_cutoff: usize,
) -> SpacetimeFile {
    let crooked_planes = dst
        .crooked_fd
        .iter()
        .map(|f| CrookedPlaneEntry {
            arc: f.arc,
            w: f.plane.w,
            v: f.plane.v,
            vplus: f.plane.vplus,
            vminus: f.plane.vminus,
            paired_with: f.paired_with,
            pairing_word: f.pairing_word.clone(),
            residual: f.residual,
        })
        .collect();
    let signs: Vec<i32> = dst.handedness_signs.iter().map(|&(_, _, s)| s).collect();
    let disjointness = signs.windows(2).all(|w| w[0] == w[1]);
    let opposite_sign = opposite_sign_check(&s.generators, &dst.cocycle, word_cutoff);
    SpacetimeFile {
        config,
        cocycle: dst.cocycle.values.clone(),
        photons: dst.photons.clone(),
        crooked_planes,
        checks: SpacetimeChecks {
            handedness: dst.handedness_signs.clone(),
            disjointness,
            opposite_sign,
        },
    }
}

/// Canonical JSON text: pretty two-space indentation plus a trailing
/// newline; field order is the declaration order.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| IoError::Parse(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = to_canonical_json(value)?;
    std::fs::write(path, text).map_err(|e| IoError::File(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| IoError::File(format!("{}: {e}", path.display())))?;
    from_json(&text)
}

/// Specs reproducing the bundled fixture surfaces.
pub fn fixture_spec(name: &str) -> Option<SurfaceSpec> {
    fn circle(angle_deg: f64) -> Vec21 {
        let a = angle_deg.to_radians();
        Vec21::new(a.cos(), a.sin(), 1.0)
    }
    match name {
        "triangle" => Some(SurfaceSpec::IdealPolygon {
            spikes: vec![circle(90.0), circle(210.0), circle(330.0)],
        }),
        "square" => Some(SurfaceSpec::IdealPolygon {
            spikes: vec![circle(45.0), circle(135.0), circle(225.0), circle(315.0)],
        }),
        "crown" => Some(SurfaceSpec::Crown {
            translation_length: 2.0,
            spikes: vec![(2.0, 1.0)],
        }),
        "annulus" => Some(SurfaceSpec::SpikedAnnulus {
            q1: 1,
            q2: 1,
            top: vec![],
            bottom: vec![],
            corner_scales: [1.0, 1.0],
        }),
        "moebius" => Some(SurfaceSpec::SpikedMoebius {
            q: 1,
            intermediate: vec![],
            corner_scale: 1.0,
        }),
        _ => None,
    }
}
