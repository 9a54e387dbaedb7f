//! `omegasym`: batch front end for the symmetry, beta, cube and flatness tools.
//!
//! Exit codes: 0 on success, 2 when input validation or a checked property
//! fails, 1 on I/O errors, 64 on usage errors.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use omegasym::Point2;
use serde::Serialize;

use crate::report::Failure;

#[derive(Parser, Debug)]
#[command(name = "omegasym", version, about = "Symmetry functionals, beta numbers and flatness diagnostics for planar measures")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand and recorded in every report.
#[derive(Args, Clone, Debug, Serialize)]
pub struct Common {
    /// Scale ratio between a cube and its symmetry window.
    #[arg(long = "A", global = true, default_value_t = omegasym::flatness::DEFAULT_A)]
    pub a: f64,
    /// Threshold separating the small and large beta regimes.
    #[arg(long, global = true, default_value_t = omegasym::flatness::DEFAULT_TAU)]
    pub tau: f64,
    /// Carleson exponent, in (0, 1).
    #[arg(long, global = true, default_value_t = omegasym::flatness::DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Relative deviation allowed by the flat classifier.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic measure as `x,y,w` CSV.
    Generate(GenerateArgs),
    #[command(subcommand)]
    Kernel(KernelCommand),
    #[command(subcommand)]
    Beta(BetaCommand),
    #[command(subcommand)]
    Symmetry(SymmetryCommand),
    #[command(subcommand)]
    Flatness(FlatnessCommand),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// line, segment, equidistant_lines, circle, cross, lipschitz_graph, lebesgue_grid or perturbed_line.
    #[arg(value_parser = commands::parse_kind)]
    pub kind: omegasym::synth::GeneratorKind,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    #[arg(long, default_value_t = 10.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 5)]
    pub lines: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gap: f64,
    #[arg(long, default_value_t = 0.01)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    pub frequency: f64,
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub angle: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum KernelCommand {
    /// Report the defect, admissibility, derivative residuals and the dot-product lemma sweep.
    Validate(KernelValidateArgs),
}

#[derive(Args, Debug)]
pub struct KernelValidateArgs {
    /// Kernel JSON file, `identity`, or `sine:AMPLITUDE`.
    pub kernel: String,
    /// Angles per axis of the lemma sweep.
    #[arg(long, default_value_t = 360)]
    pub grid: usize,
    /// Random pairs for the derivative check.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BetaCommand {
    /// Multiscale beta profile at one point as `scale,beta,cumsum` CSV.
    Profile(BetaProfileArgs),
    /// Per-cube beta numbers of the dyadic lattice.
    Cubes(BetaCubesArgs),
}

#[derive(Args, Debug)]
pub struct BetaProfileArgs {
    pub measure: PathBuf,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x: Point2,
    #[arg(long)]
    pub ell: f64,
    #[arg(long = "N", default_value_t = 5)]
    pub n: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BetaCubesArgs {
    pub measure: PathBuf,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub jmin: i32,
    #[arg(long, default_value_t = 5, allow_hyphen_values = true)]
    pub jmax: i32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the cube tree as JSON.
    #[arg(long)]
    pub tree: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum SymmetryCommand {
    /// Sup of a symmetry functional over sampled centers and scales.
    Defect(DefectArgs),
    /// Truncated principal values over shrinking holes.
    Pv(PvArgs),
}

#[derive(Args, Debug)]
pub struct DefectArgs {
    pub measure: PathBuf,
    pub kernel: String,
    #[arg(long, default_value_t = 100)]
    pub centers: usize,
    #[arg(long, default_value_t = 0.1)]
    pub rmin: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 10)]
    pub scales: usize,
    /// c_omega, c_omega_smooth or riesz.
    #[arg(long, default_value = "c_omega")]
    pub functional: omegasym::symmetry::Functional,
    /// Restrict centers to the ball `x,y,radius`.
    #[arg(long, value_parser = parse_ball, allow_hyphen_values = true)]
    pub region: Option<(Point2, f64)>,
    /// Outer truncation radius of the Riesz functional, in units of r.
    #[arg(long)]
    pub riesz_outer: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write every value as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PvArgs {
    pub measure: PathBuf,
    pub kernel: String,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x: Point2,
    #[arg(long, default_value_t = 1.0)]
    pub outer: f64,
    /// Largest hole radius; each further level halves it.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum FlatnessCommand {
    /// Certification rows and Carleson sums below a cube.
    Certify(CertifyArgs),
    /// Flat or non-flat verdict with the best line.
    Classify(ClassifyArgs),
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    pub measure: PathBuf,
    pub kernel: String,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub jmin: i32,
    #[arg(long, default_value_t = 5, allow_hyphen_values = true)]
    pub jmax: i32,
    /// Level of the top cube S.
    #[arg(long, allow_hyphen_values = true)]
    pub level: Option<i32>,
    /// S is the cube of that level owning the support point nearest to this one.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub at: Option<Point2>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    pub measure: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Point2, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => {
            let x: f64 = x.parse().map_err(|_| format!("`{x}` is not a number"))?;
            let y: f64 = y.parse().map_err(|_| format!("`{y}` is not a number"))?;
            Ok(Point2::new(x, y))
        }
        _ => Err(format!("expected `x,y`, got `{s}`")),
    }
}

fn parse_ball(s: &str) -> Result<(Point2, f64), String> {
    let (head, r) = s.rsplit_once(',').ok_or_else(|| format!("expected `x,y,radius`, got `{s}`"))?;
    let r: f64 = r.trim().parse().map_err(|_| format!("`{r}` is not a number"))?;
    Ok((parse_point(head)?, r))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    let common = cli.common.clone();
    let result = omegasym::exec::with_threads(common.threads, move || dispatch(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("omegasym: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("omegasym: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let c = &cli.common;
    match cli.command {
        Command::Generate(args) => commands::generate(c, &args),
        Command::Kernel(KernelCommand::Validate(args)) => commands::kernel_validate(c, &args),
        Command::Beta(BetaCommand::Profile(args)) => commands::beta_profile(c, &args),
        Command::Beta(BetaCommand::Cubes(args)) => commands::beta_cubes(c, &args),
        Command::Symmetry(SymmetryCommand::Defect(args)) => commands::symmetry_defect(c, &args),
        Command::Symmetry(SymmetryCommand::Pv(args)) => commands::symmetry_pv(c, &args),
        Command::Flatness(FlatnessCommand::Certify(args)) => commands::flatness_certify(c, &args),
        Command::Flatness(FlatnessCommand::Classify(args)) => commands::flatness_classify(c, &args),
    }
}
