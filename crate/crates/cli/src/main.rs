//! `eulerpoisson` command-line front end.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 on numeric failure or a
//! failed verification. `EPGAS_THREADS` sets the worker thread count.

mod commands;
mod config;
mod error;
mod output;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::*;
use error::{CliError, CliResult};
use output::Format;

pub const THREADS_ENV: &str = "EPGAS_THREADS";

#[derive(Parser, Debug)]
#[command(name = "eulerpoisson", version, about = "Self-gravitating barotropic gas toolkit")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Seed of the randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report errors on stderr as one JSON object.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the Lane–Emden equation for one index and sample θ(ξ), or list
    /// the first zero ξ₁ and mass μ₁ for the classical indices with --table.
    LaneEmden(LaneEmdenParams),
    /// Build the static polytrope of P = Aρ^γ with central density ρ_c and
    /// sample its density, enthalpy and potential.
    Equilibrium(EquilibriumParams),
    /// Newton potential of an axisymmetric density by ring-kernel quadrature
    /// or by the Legendre expansion, on the density grid.
    Potential(PotentialParams),
    /// Evaluate the axisymmetric kernel K_II, the spherical kernel K_III and
    /// the ζ′ integral of K_II at one pair of points.
    Kernels(KernelsParams),
    /// Advect an initial angular velocity along the characteristics of a
    /// meridional flow, conserving ϖ²Ω.
    Advect(AdvectParams),
    /// Mass, energy, angular momentum and equatorial symmetry of a state.
    Diagnostics(DiagnosticsParams),
    /// Apply the linearized perturbation operator of a static polytrope to a
    /// displacement and report g = div(ρ̄ξ) and the acceleration.
    PerturbApply(PerturbApplyParams),
    /// Radial oscillation eigenvalues ω² of a polytrope; ω² < 0 means unstable.
    Modes(ModesParams),
    /// Check the rotating-frame identities: divergence invariance,
    /// centrifugal potential and rotation determinant.
    FramesCheck(CheckParams),
    /// Check the Lagrangian-change formulas and the first-order relation
    /// between Lagrangian and Eulerian changes.
    FormulasCheck(CheckParams),
    /// Run every acceptance check and report one line per criterion.
    VerifyAll(CheckParams),
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let format = cli.format.or(file.global.format).unwrap_or_default();
    let output = cli.output.or(file.global.output);
    let seed = cli.seed.or(file.global.seed);
    let outcome = match cli.command {
        Command::LaneEmden(p) => commands::lane_emden(p.merged(file.lane_emden)),
        Command::Equilibrium(p) => commands::equilibrium(p.merged(file.equilibrium)),
        Command::Potential(p) => commands::potential_cmd(p.merged(file.potential)),
        Command::Kernels(p) => commands::kernels(p.merged(file.kernels)),
        Command::Advect(p) => commands::advect(p.merged(file.advect)),
        Command::Diagnostics(p) => commands::diagnostics(p.merged(file.diagnostics)),
        Command::PerturbApply(p) => commands::perturb_apply(p.merged(file.perturb_apply)),
        Command::Modes(p) => commands::modes(p.merged(file.modes)),
        Command::FramesCheck(p) => commands::check(&[9], p.merged(file.frames_check), seed),
        Command::FormulasCheck(p) => commands::check(&[10], p.merged(file.formulas_check), seed),
        Command::VerifyAll(p) => commands::check(&[], p.merged(file.verify_all), seed),
    }?;
    let io_err = |e: std::io::Error| CliError::Core(e.into());
    match output {
        Some(path) => {
            let mut f = std::io::BufWriter::new(fs::File::create(&path).map_err(io_err)?);
            outcome.table.write(format, &mut f).map_err(io_err)?;
            f.flush().map_err(io_err)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            outcome.table.write(format, &mut lock).map_err(io_err)?;
        }
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Check(msg)),
        None => Ok(()),
    }
}

fn report(err: &CliError, json: bool) -> ExitCode {
    if json {
        eprintln!("{}", err.to_json());
    } else {
        eprintln!("error: {err}");
    }
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let json = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if json => return report(&CliError::Usage(e.to_string().trim().to_string()), true),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let json = cli.json_errors;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e, json),
    }
}
