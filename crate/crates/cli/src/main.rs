use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use geqw_core::experiments::{
    parse_config, parse_grid, parse_q_list, read_metadata, run_experiment, table_path,
    verify_replay, write_results, CoinKind, ExperimentKind, PhaseRelation, RawConfig,
};
use geqw_core::{EntropicIndex, Observable};

/// Generalized elephant quantum walk experiments.
///
/// Angles are given in degrees. Grids accept a single value, a comma list
/// (`0,30,60`) or an inclusive range `start:step:stop`.
#[derive(Parser, Debug)]
#[command(name = "geqw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time-averaged entropy over a (θ, Ω) or (θ, β) grid.
    Surface(ExperimentArgs),
    /// Time-averaged entropy as a function of q.
    EntropyVsQ(ExperimentArgs),
    /// Mean diffusion exponent as a function of q.
    DiffusionVsQ(ExperimentArgs),
    /// Per-step observable series with ensemble mean and std.
    Series(ExperimentArgs),
    /// Successive-state trace distance and fitted decay exponents.
    TraceDistance(ExperimentArgs),
    /// Re-run an experiment from its JSON sidecar and compare with the stored data.
    Replay(ReplayArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum CoinArg {
    Kempe,
    Hadamard,
    General,
}

impl From<CoinArg> for CoinKind {
    fn from(c: CoinArg) -> Self {
        match c {
            CoinArg::Kempe => CoinKind::Kempe,
            CoinArg::Hadamard => CoinKind::Hadamard,
            CoinArg::General => CoinKind::General,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum PhaseArg {
    Bloch,
    Orthey,
}

impl From<PhaseArg> for PhaseRelation {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::Bloch => PhaseRelation::Bloch,
            PhaseArg::Orthey => PhaseRelation::Orthey,
        }
    }
}

fn grid_arg(s: &str) -> Result<Vec<f64>, String> {
    parse_grid(s)
}

fn q_arg(s: &str) -> Result<Vec<EntropicIndex>, String> {
    parse_q_list(s)
}

fn observables_arg(s: &str) -> Result<Vec<Observable>, String> {
    s.split(',')
        .map(|o| o.parse().map_err(|e: geqw_core::Error| e.to_string()))
        .collect()
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Config file of `key = value` pairs mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Entropic index grid, e.g. `0.5,0.6,1,inf`.
    #[arg(long, value_parser = q_arg)]
    q: Option<::std::vec::Vec<EntropicIndex>>,
    /// Coin angle θ grid in degrees, within [0, 90].
    #[arg(long, value_parser = grid_arg)]
    theta_grid: Option<::std::vec::Vec<f64>>,
    /// Initial-state Bloch angle Ω grid in degrees, within [0, 180].
    #[arg(long, value_parser = grid_arg)]
    omega_grid: Option<::std::vec::Vec<f64>>,
    /// General-coin phase β grid in degrees (requires `--coin general`).
    #[arg(long, value_parser = grid_arg)]
    beta_grid: Option<::std::vec::Vec<f64>>,
    /// General-coin phase γ in degrees.
    #[arg(long)]
    gamma: Option<f64>,
    /// Initial-state Bloch phase φ in degrees.
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    /// How φ is chosen: as given, or the maximal-entanglement relation per Ω.
    #[arg(long, value_enum)]
    phase_relation: Option<PhaseArg>,
    /// Gaussian initial-state variance grid; 0 means a localized start.
    #[arg(long, value_parser = grid_arg)]
    sigma2: Option<::std::vec::Vec<f64>>,
    /// Number of time steps T.
    #[arg(long)]
    steps: Option<usize>,
    /// Runs per grid point (a q = 0.5 walk always runs once).
    #[arg(long)]
    ensemble: Option<usize>,
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Start of the quasi-stationary window as a fraction of T.
    #[arg(long)]
    window_fraction: Option<f64>,
    #[arg(long, value_enum)]
    coin: Option<CoinArg>,
    /// Observables to record: entropy, coherence, variance, ipr, trace-distance.
    #[arg(long, value_parser = observables_arg)]
    observables: Option<::std::vec::Vec<Observable>>,
    /// Output CSV path; the JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn to_raw(&self) -> RawConfig {
        RawConfig {
            kind: None,
            coin: self.coin.map(Into::into),
            theta_grid: self.theta_grid.clone(),
            omega_grid: self.omega_grid.clone(),
            beta_grid: self.beta_grid.clone(),
            gamma: self.gamma,
            phi: self.phi,
            phase_relation: self.phase_relation.map(Into::into),
            q: self.q.clone(),
            sigma2: self.sigma2.clone(),
            steps: self.steps,
            ensemble: self.ensemble,
            seed: self.seed,
            window_fraction: self.window_fraction,
            observables: self.observables.clone(),
            out: self.out.clone(),
        }
    }
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// JSON sidecar written alongside an earlier run.
    sidecar: PathBuf,
    /// Write the regenerated data here instead of comparing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(kind: ExperimentKind, args: &ExperimentArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => parse_config(path).with_context(|| format!("reading {}", path.display()))?,
        None => RawConfig::default(),
    };
    let spec = file.merged_with(args.to_raw()).resolve(kind)?;
    let out = spec
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{kind}.csv")));
    let points = spec.grid().len();
    println!("seed {}", spec.seed);
    println!(
        "{kind}: {points} grid point(s), T = {}, ensemble {}",
        spec.steps, spec.ensemble
    );
    let output = run_experiment(&spec)?;
    let sidecar = write_results(&output, &out)?;
    for (i, table) in output.tables.iter().enumerate() {
        println!(
            "wrote {} ({} rows)",
            table_path(&out, i, table).display(),
            table.rows.len()
        );
    }
    println!("wrote {}", sidecar.display());
    Ok(())
}

fn replay(args: &ReplayArgs) -> Result<bool> {
    let metadata = read_metadata(&args.sidecar)
        .with_context(|| format!("reading {}", args.sidecar.display()))?;
    println!("seed {}", metadata.spec.seed);
    if let Some(out) = &args.out {
        let output = run_experiment(&metadata.spec)?;
        let sidecar = write_results(&output, out)?;
        println!("wrote {}", sidecar.display());
        return Ok(true);
    }
    let mismatched = verify_replay(&args.sidecar)?;
    let dir = args.sidecar.parent().unwrap_or(Path::new(""));
    for file in &metadata.files {
        let status = if mismatched.contains(file) {
            "DIFFERS"
        } else {
            "identical"
        };
        println!("{}: {status}", dir.join(file).display());
    }
    Ok(mismatched.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Surface(a) => run(ExperimentKind::Surface, a).map(|_| true),
        Command::EntropyVsQ(a) => run(ExperimentKind::EntropyVsQ, a).map(|_| true),
        Command::DiffusionVsQ(a) => run(ExperimentKind::DiffusionVsQ, a).map(|_| true),
        Command::Series(a) => run(ExperimentKind::Series, a).map(|_| true),
        Command::TraceDistance(a) => run(ExperimentKind::TraceDistance, a).map(|_| true),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: replay does not match the stored data");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
