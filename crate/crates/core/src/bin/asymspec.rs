use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use asymspec::harness::{parse_complex, run, Command, RunConfig, DEFAULT_SEED};
use asymspec::report::to_json_string;
use asymspec::C64;

#[derive(Parser)]
#[command(
    name = "asymspec",
    version,
    about = "Spectra and equivalences of h-dependent matrix families"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Family JSON file.
    #[arg(long, global = true)]
    family: Option<PathBuf>,
    /// Second family JSON file (equiv, qequiv, series).
    #[arg(long, global = true)]
    family2: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 1.0)]
    grid_h0: f64,
    #[arg(long, global = true, default_value_t = 0.5)]
    grid_ratio: f64,
    #[arg(long, global = true, default_value_t = 20)]
    grid_count: usize,
    #[arg(long, global = true, default_value_t = 6)]
    tail_window: usize,

    /// Region center, e.g. `1.5` or `0.5+0.25i`.
    #[arg(long, global = true, value_parser = complex)]
    region_center: Option<C64>,
    #[arg(long, global = true)]
    region_half_width: Option<f64>,
    /// Grid points per axis (odd, at least 21).
    #[arg(long, global = true, default_value_t = 101)]
    resolution: usize,
    /// Absolute flagging threshold; defaults to 1e-3 times the family norm bound.
    #[arg(long, global = true)]
    epsilon: Option<f64>,

    /// Function of `z` for funcalc, e.g. `exp(z)` or `z^2`.
    #[arg(long, global = true)]
    expr: Option<String>,
    #[arg(long, global = true, value_parser = complex)]
    contour_center: Option<C64>,
    #[arg(long, global = true)]
    contour_radius: Option<f64>,
    #[arg(long, global = true, default_value_t = 256)]
    nodes: usize,

    /// Highest bracket order (qequiv, qnil) or number of series terms (series).
    #[arg(long, global = true, default_value_t = 24)]
    nmax: usize,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Evaluation point for series; repeatable.
    #[arg(long = "lambda", global = true, value_parser = complex)]
    lambdas: Vec<C64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "asymspec-out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Resolvent-norm field plus clustered spectrum estimate.
    Spectrum,
    /// Resolvent-norm field only.
    Field,
    /// Asymptotic equivalence and asymptotic commuting of two families.
    Equiv,
    /// Asymptotic quasinilpotent equivalence of two families.
    Qequiv,
    /// Asymptotic quasinilpotence of one family.
    Qnil,
    /// Holomorphic image of a family and its spectral-mapping report.
    Funcalc,
    /// Resolvent transported from the second family to the first by the bracket series.
    Series,
    /// All verification suites.
    Verify,
}

fn complex(s: &str) -> Result<C64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Field => Command::Field,
        Cmd::Equiv => Command::Equiv,
        Cmd::Qequiv => Command::Qequiv,
        Cmd::Qnil => Command::Qnil,
        Cmd::Funcalc => Command::Funcalc,
        Cmd::Series => Command::Series,
        Cmd::Verify => Command::Verify,
    };
    let cfg = RunConfig {
        command,
        family: cli.family,
        family2: cli.family2,
        grid_h0: cli.grid_h0,
        grid_ratio: cli.grid_ratio,
        grid_count: cli.grid_count,
        tail_window: cli.tail_window,
        region_center: cli.region_center,
        region_half_width: cli.region_half_width,
        resolution: cli.resolution,
        epsilon: cli.epsilon,
        expr: cli.expr,
        contour_center: cli.contour_center,
        contour_radius: cli.contour_radius,
        nodes: cli.nodes,
        nmax: cli.nmax,
        tol: cli.tol,
        lambdas: cli.lambdas,
        out: cli.out,
        seed: cli.seed,
    };
    let outcome = run(&cfg);
    let mut summary = outcome.summary;
    summary["artifacts"] = outcome.artifacts.iter().map(|p| p.display().to_string()).collect();
    let text = to_json_string(&summary);
    if outcome.exit_code >= 2 {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
