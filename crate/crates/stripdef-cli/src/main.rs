//! Command-line front end: builds surfaces, checks arc families, computes
//! strip maps and Margulis spacetime data, verifies derivative formulas,
//! and renders Klein-disk figures.
//!
//! Exit codes: 0 success, 2 verdict failure (admissibility, disjointness,
//! derivative mismatch), 3 input error.

// `!(epsilon > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stripdef::arc_complex::WeightedArcFamily;
use stripdef::io::{
    arcs_file, build_surface, from_json, read_json, spacetime_file, surface_file, tangent_file,
    to_canonical_json, write_json, AdmissibleFile, ConfigEcho, IoError, SurfaceFile, SurfaceSpec,
    TangentFile,
};
use stripdef::margulis::admissible_check;
use stripdef::render::{render_klein, RenderOptions};
use stripdef::strip::{dl_closed_analytic, dl_closed_fd, dl_horoball_analytic, dl_horoball_fd};
use stripdef::strip::{strip_map, tile_map};
use stripdef::surface::DecoratedSurface;
use stripdef::word::Word;
use stripdef::{fixtures, io};

#[derive(Parser)]
#[command(name = "stripdef", version, about = "Strip deformations of decorated hyperbolic surfaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build or audit a decorated surface.
    Surface {
        #[command(subcommand)]
        action: SurfaceAction,
    },
    /// Check a weighted arc family (disjointness, filling, pruned point).
    Arcs {
        #[command(subcommand)]
        action: ArcsAction,
    },
    /// Infinitesimal strip map of a weighted arc family.
    Strip {
        #[command(subcommand)]
        action: StripAction,
    },
    /// Admissibility of a tangent vector up to cutoffs.
    Admissible {
        #[command(subcommand)]
        action: AdmissibleAction,
    },
    /// Decorated Margulis spacetime of a filling family.
    Margulis {
        #[command(subcommand)]
        action: MargulisAction,
    },
    /// Numerical verification harnesses.
    Verify {
        #[command(subcommand)]
        action: VerifyAction,
    },
    /// SVG figures.
    Render {
        #[command(subcommand)]
        action: RenderAction,
    },
}

#[derive(Subcommand)]
enum SurfaceAction {
    /// Build a surface from a spec file, audit it, and write normalized JSON.
    Build {
        #[command(flatten)]
        input: SurfaceInput,
        #[command(flatten)]
        common: Common,
    },
    /// Audit an existing surface file (or bundled fixture).
    Audit {
        #[command(flatten)]
        input: SurfaceInput,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum ArcsAction {
    Check {
        #[command(flatten)]
        input: FamilyInput,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum StripAction {
    Map {
        #[command(flatten)]
        input: FamilyInput,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum AdmissibleAction {
    Check {
        #[command(flatten)]
        input: FamilyInput,
        /// Tangent file to check (defaults to the strip map of the family).
        #[arg(long)]
        tangent: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum MargulisAction {
    /// Assemble the fundamental-domain spacetime data.
    Fd {
        #[command(flatten)]
        input: FamilyInput,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum VerifyAction {
    /// Analytic vs finite-difference length derivatives.
    Derivatives {
        #[command(flatten)]
        input: FamilyInput,
        /// Maximum allowed relative error.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum RenderAction {
    Klein {
        #[command(flatten)]
        input: FamilyInput,
        /// Skip horoball boundaries.
        #[arg(long)]
        no_horoballs: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct SurfaceInput {
    /// Surface spec or normalized surface JSON.
    #[arg(long, conflicts_with = "fixture")]
    spec: Option<PathBuf>,
    /// Bundled fixture name (triangle, square, crown, annulus, moebius).
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Args)]
struct FamilyInput {
    #[command(flatten)]
    surface: SurfaceInput,
    /// Weighted arc family JSON (defaults to the fixture's family).
    #[arg(long)]
    arcs: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    /// Word-length cutoff for enumerations.
    #[arg(long, default_value_t = 4)]
    word_length: usize,
    /// Length cutoff for horoball connections.
    #[arg(long, default_value_t = 6.0)]
    max_length: f64,
    /// Admissibility margin.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    /// Sampling seed (echoed into outputs).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 1 is the reproducibility mode.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output path (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl Common {
    fn echo(&self, command: &str) -> ConfigEcho {
        ConfigEcho {
            command: command.to_string(),
            word_length: self.word_length,
            max_length: self.max_length,
            epsilon: self.epsilon,
            dt: self.dt,
            seed: self.seed,
            threads: self.threads,
        }
    }

    fn init_threads(&self) {
        #[cfg(feature = "parallel")]
        if self.threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(self.threads)
                .build_global();
        }
    }
}

fn load_spec(path: &Path) -> Result<SurfaceSpec, IoError> {
    // Accept either a bare spec or a previously written surface file.
    let text = std::fs::read_to_string(path)
        .map_err(|e| IoError::File(format!("{}: {e}", path.display())))?;
    from_json::<SurfaceSpec>(&text).or_else(|_| from_json::<SurfaceFile>(&text).map(|f| f.spec))
}

fn resolve_surface(input: &SurfaceInput) -> Result<(SurfaceSpec, DecoratedSurface), IoError> {
    let spec = match (&input.spec, &input.fixture) {
        (Some(path), _) => load_spec(path)?,
        (None, Some(name)) => io::fixture_spec(name)
            .ok_or_else(|| IoError::Parse(format!("unknown fixture `{name}`")))?,
        (None, None) => return Err(IoError::Parse("need --spec or --fixture".into())),
    };
    let s = build_surface(&spec)?;
    Ok((spec, s))
}

fn resolve_family(input: &FamilyInput) -> Result<(DecoratedSurface, WeightedArcFamily), IoError> {
    let (_, s) = resolve_surface(&input.surface)?;
    let family = match &input.arcs {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| IoError::File(format!("{}: {e}", path.display())))?;
            from_json::<WeightedArcFamily>(&text)
                .or_else(|_| from_json::<io::ArcsFile>(&text).map(|f| f.family))?
        }
        None => {
            let name = input
                .surface
                .fixture
                .as_deref()
                .ok_or_else(|| IoError::Parse("need --arcs (no fixture family)".into()))?;
            fixtures::by_name(name)
                .ok_or_else(|| IoError::Parse(format!("unknown fixture `{name}`")))?
                .family
        }
    };
    Ok((s, family))
}

fn emit<T: Serialize>(common: &Common, value: &T) -> Result<(), IoError> {
    match &common.output {
        Some(path) => write_json(path, value),
        None => {
            print!("{}", to_canonical_json(value)?);
            Ok(())
        }
    }
}

fn emit_text(common: &Common, text: &str) -> Result<(), IoError> {
    match &common.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| IoError::File(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct DerivativeCase {
    kind: &'static str,
    word: Word,
    spikes: Option<(usize, usize)>,
    length: f64,
    analytic: f64,
    finite_difference: f64,
    rel_err: f64,
}

#[derive(Serialize)]
struct DerivativeReport {
    config: ConfigEcho,
    tolerance: f64,
    cases: Vec<DerivativeCase>,
    max_rel_err: f64,
    pass: bool,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn verify_derivatives(
    s: &DecoratedSurface,
    family: &WeightedArcFamily,
    common: &Common,
    tolerance: f64,
) -> Result<DerivativeReport, IoError> {
    let t = strip_map(s, family)?;
    let tm = tile_map(s, family)?;
    let mut cases = Vec::new();
    for g in s.enumerate_closed_geodesics(common.word_length) {
        let analytic = dl_closed_analytic(s, family, &g.word)?;
        let fd = dl_closed_fd(s, &t.cocycle, &g.word, common.dt)?;
        cases.push(DerivativeCase {
            kind: "closed",
            word: g.word,
            spikes: None,
            length: g.length,
            analytic,
            finite_difference: fd,
            rel_err: rel_err(analytic, fd),
        });
    }
    for h in s.enumerate_horoball_connections(common.word_length, common.max_length) {
        let analytic = dl_horoball_analytic(s, family, h.spike_from, h.spike_to, &h.word)?;
        let fd = dl_horoball_fd(s, &tm, h.spike_from, h.spike_to, &h.word, common.dt)?;
        cases.push(DerivativeCase {
            kind: "horoball",
            word: h.word,
            spikes: Some((h.spike_from, h.spike_to)),
            length: h.length,
            analytic,
            finite_difference: fd,
            rel_err: rel_err(analytic, fd),
        });
    }
    let max_rel_err = cases.iter().map(|c| c.rel_err).fold(0.0, f64::max);
    Ok(DerivativeReport {
        config: common.echo("verify derivatives"),
        tolerance,
        cases,
        max_rel_err,
        pass: max_rel_err < tolerance,
    })
}

/// Ok(true) = verdict pass, Ok(false) = verdict fail (exit 2).
fn run(cli: Cli) -> Result<bool, IoError> {
    match cli.cmd {
        Cmd::Surface { action } => match action {
            SurfaceAction::Build { input, common } => {
                common.init_threads();
                let (spec, _) = resolve_surface(&input)?;
                let file = surface_file(common.echo("surface build"), spec)?;
                emit(&common, &file)?;
                Ok(true)
            }
            SurfaceAction::Audit { input, common } => {
                common.init_threads();
                let (spec, s) = resolve_surface(&input)?;
                let audit = s.audit();
                let pass = audit.pass();
                let file = SurfaceFile {
                    config: common.echo("surface audit"),
                    spec,
                    surface: s,
                    audit,
                };
                emit(&common, &file)?;
                Ok(pass)
            }
        },
        Cmd::Arcs { action } => match action {
            ArcsAction::Check { input, common } => {
                common.init_threads();
                let (s, family) = resolve_family(&input)?;
                let file = arcs_file(common.echo("arcs check"), &s, family)?;
                let pass = file.disjoint && file.filling && file.pruned_point;
                emit(&common, &file)?;
                Ok(pass)
            }
        },
        Cmd::Strip { action } => match action {
            StripAction::Map { input, common } => {
                common.init_threads();
                let (s, family) = resolve_family(&input)?;
                let file = tangent_file(common.echo("strip map"), &s, &family)?;
                emit(&common, &file)?;
                Ok(true)
            }
        },
        Cmd::Admissible { action } => match action {
            AdmissibleAction::Check {
                input,
                tangent,
                common,
            } => {
                common.init_threads();
                if !(common.epsilon > 0.0) {
                    return Err(IoError::Parse(
                        "epsilon must be strictly positive (open-cone margin)".into(),
                    ));
                }
                let (s, family) = resolve_family(&input)?;
                let t = match &tangent {
                    Some(path) => read_json::<TangentFile>(path)?.tangent(&s)?,
                    None => strip_map(&s, &family)?,
                };
                let report =
                    admissible_check(&s, &t, common.word_length, common.max_length, common.epsilon);
                let pass = report.pass;
                let file = AdmissibleFile {
                    config: common.echo("admissible check"),
                    report,
                };
                emit(&common, &file)?;
                Ok(pass)
            }
        },
        Cmd::Margulis { action } => match action {
            MargulisAction::Fd { input, common } => {
                common.init_threads();
                let (s, family) = resolve_family(&input)?;
                let file = spacetime_file(common.echo("margulis fd"), &s, &family)?;
                let pass = file.checks.disjointness;
                emit(&common, &file)?;
                Ok(pass)
            }
        },
        Cmd::Verify { action } => match action {
            VerifyAction::Derivatives {
                input,
                tolerance,
                common,
            } => {
                common.init_threads();
                let (s, family) = resolve_family(&input)?;
                let report = verify_derivatives(&s, &family, &common, tolerance)?;
                let pass = report.pass;
                emit(&common, &report)?;
                Ok(pass)
            }
        },
        Cmd::Render { action } => match action {
            RenderAction::Klein {
                input,
                no_horoballs,
                common,
            } => {
                common.init_threads();
                let (_, s) = resolve_surface(&input.surface)?;
                let family = resolve_family(&input).map(|(_, f)| f).ok();
                let opts = RenderOptions {
                    show_horoballs: !no_horoballs,
                    ..Default::default()
                };
                let svg = render_klein(&s, family.as_ref(), &opts);
                emit_text(&common, &svg)?;
                Ok(true)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
