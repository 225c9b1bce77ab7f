mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{CommandKind, RunConfig};
use graphon_games::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "graphon-games",
    version,
    about = "Nash equilibrium solvers and experiments for static network games with a continuum of players"
)]
struct Cli {
    /// Re-run a saved manifest (or any config document). Mutually
    /// exclusive with a subcommand.
    #[arg(long, value_name = "FILE", global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Game: beach | cities:k=..,theta=.. | cournot:a=..,b=..,c=.. | file:PATH
    #[arg(long)]
    game: Option<String>,
    /// Graphon: constant:a | step:r;r | powerlaw:g | normpowerlaw:g[,s] |
    /// minmax | threshold | wattsstrogatz:p=..,rewire=..
    #[arg(long)]
    graphon: Option<String>,
    /// Noise law: pointmass | gaussian:sigma | uniform:halfwidth
    #[arg(long)]
    noise: Option<String>,
    /// Grid cells for the continuum discretization.
    #[arg(long = "gridM")]
    grid_m: Option<usize>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "maxIter")]
    max_iter: Option<usize>,
    /// Sampling seed (sample-graph, finite-solve).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated study seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated player counts for studies.
    #[arg(long = "Nlist", value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Player count (sample-graph, finite-solve).
    #[arg(long = "N")]
    n: Option<usize>,
    /// Graph sampling kind: weighted | bernoulli.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long = "mcSamples")]
    mc_samples: Option<usize>,
    #[arg(long = "betaLo")]
    beta_lo: Option<f64>,
    #[arg(long = "betaHi")]
    beta_hi: Option<f64>,
    #[arg(long = "betaSteps")]
    beta_steps: Option<usize>,
    /// Closed-form PoA family: constant:a | powerlaw:g | normpowerlaw:g | threshold.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    /// theta lattice lo:hi:count for PoA heatmaps.
    #[arg(long = "thetaGrid")]
    theta_grid: Option<String>,
    /// gamma lattice lo:hi:count for PoA heatmaps.
    #[arg(long = "gammaGrid")]
    gamma_grid: Option<String>,
    /// Semicolon-separated perturbation graphons (stability).
    #[arg(long)]
    perturb: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | dat (dat adds plot series).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the continuum Nash equilibrium on a graphon.
    Solve(CommonArgs),
    /// Evaluate a resolvent closed-form equilibrium.
    ClosedForm(CommonArgs),
    /// Price of anarchy: solver ratio, closed-form value, or a heatmap.
    Poa(CommonArgs),
    /// Sample a weighted or Bernoulli graph from a graphon.
    SampleGraph(CommonArgs),
    /// Solve an N-player game on a sampled graph.
    FiniteSolve(CommonArgs),
    /// Epsilon-Nash decay study over growing player counts.
    Epsilon(CommonArgs),
    /// Equilibrium convergence study over growing player counts.
    Converge(CommonArgs),
    /// Equilibrium stability under graphon perturbations.
    Stability(CommonArgs),
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Solve(_) => CommandKind::Solve,
            Command::ClosedForm(_) => CommandKind::ClosedForm,
            Command::Poa(_) => CommandKind::Poa,
            Command::SampleGraph(_) => CommandKind::SampleGraph,
            Command::FiniteSolve(_) => CommandKind::FiniteSolve,
            Command::Epsilon(_) => CommandKind::Epsilon,
            Command::Converge(_) => CommandKind::Converge,
            Command::Stability(_) => CommandKind::Stability,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Solve(a)
            | Command::ClosedForm(a)
            | Command::Poa(a)
            | Command::SampleGraph(a)
            | Command::FiniteSolve(a)
            | Command::Epsilon(a)
            | Command::Converge(a)
            | Command::Stability(a) => a,
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, Error> {
    match (&cli.config, &cli.command) {
        (Some(_), Some(_)) => Err(Error::Parse(
            "--config already names the command; drop the subcommand".into(),
        )),
        (Some(path), None) => RunConfig::from_config_file(path),
        (None, Some(command)) => {
            let mut cfg = RunConfig::defaults(command.kind());
            let a = command.args();
            macro_rules! apply {
                ($($field:ident),*) => {
                    $(if let Some(v) = &a.$field { cfg.$field = v.clone(); })*
                };
            }
            apply!(
                game, graphon, noise, grid_m, tol, max_iter, seed, seeds, n_list, n, kind,
                mc_samples, beta_lo, beta_hi, beta_steps, family, theta, theta_grid,
                gamma_grid, perturb, out, format
            );
            if !matches!(cfg.format.as_str(), "csv" | "dat") {
                return Err(Error::Parse(format!(
                    "format must be csv or dat, got {}",
                    cfg.format
                )));
            }
            Ok(cfg)
        }
        (None, None) => Err(Error::Parse(
            "nothing to do: pass a subcommand or --config FILE".into(),
        )),
    }
}

/// Exit codes: 0 success, 2 configuration error, 3 condition violation
/// (the violated inequality is printed), 4 non-convergence, 1 other.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_)
        | Error::InvalidParameter(_)
        | Error::Unsupported(_)
        | Error::EmptyGrid
        | Error::TooManyBlocks(_)
        | Error::AsymmetricMatrix(..) => 2,
        Error::SpectralCondition(_)
        | Error::ContractionViolated(_)
        | Error::InfeasiblePoa(_)
        | Error::NotAProbability(_) => 3,
        Error::NonConvergence { .. } | Error::Diverged { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match commands::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
