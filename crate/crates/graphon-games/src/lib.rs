//! Solvers for static network games with a continuum of players.
//!
//! A game couples a drift `b(alpha, z)`, a reduced cost `J(alpha, z)` and a
//! noise law with an interaction kernel (a graphon) on the unit square. The
//! crate computes the aggregate fixed point `z = W[b(alpha, z)]`, the Nash
//! equilibrium as the fixed point of best response composed with the
//! aggregate map, the central planner optimum and the price of anarchy, and
//! it certifies the contraction conditions under which the equilibrium is
//! unique. A finite-player counterpart with sampled interaction graphs,
//! epsilon-Nash certification and convergence/stability experiment harnesses
//! round out the library.

pub mod equilibrium;
pub mod finite_game;
pub mod function_space;
pub mod game;
pub mod graphon;
mod linalg;
pub mod studies;

pub use equilibrium::{
    closed_form_nash, mfg_reduce, planner_optimum, poa_closed_form, price_of_anarchy,
    social_cost, solve_aggregate, solve_nash, stability_bound, ClosedFormGame,
    EquilibriumReport, MfgSolution, PlannerMethod, PlannerReport, PoaFamily,
};
pub use finite_game::{BetaGrid, FiniteGame, FiniteSolveMethod, NoiseBatch};
pub use function_space::{Grid, GridProfile, PermutationSearch};
pub use game::{Certificate, CostSpec, DriftSpec, GameSpec, NoiseSpec};
pub use graphon::{
    cut_norm_bounds, hs_norm, DiscretizedOperator, Graphon, ResolventMethod, SampledGraph,
    SamplingKind,
};
pub use studies::{RateTable, StabilityRow, StudyConfig, TheoreticalConstants};

/// Errors shared across the solver modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid must have at least one cell")]
    EmptyGrid,
    #[error("profiles live on different grids ({0} vs {1} cells)")]
    GridMismatch(usize, usize),
    #[error("{cells} cells cannot be split into {blocks} equal blocks")]
    NotBlockAligned { cells: usize, blocks: usize },
    #[error("profile is not block-constant on {0} blocks")]
    NotBlockConstant(usize),
    #[error("exhaustive permutation search limited to 9 blocks, got {0}")]
    TooManyBlocks(usize),
    #[error("coordinate ({0}, {1}) outside the unit square")]
    CoordinateOutOfRange(f64, f64),
    #[error("matrix is not symmetric (entry ({0},{1}))")]
    AsymmetricMatrix(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("spectral condition violated: {0}")]
    SpectralCondition(String),
    #[error("contraction condition violated: {0}")]
    ContractionViolated(String),
    #[error("linear system is singular")]
    SingularSystem,
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("iteration diverged after {iterations} iterations (residual {residual:.3e})")]
    Diverged { iterations: usize, residual: f64 },
    #[error("best-response bracketing failed at x = {0}")]
    BracketingFailed(f64),
    #[error("Bernoulli sampling needs kernel values in [0,1], got {0}")]
    NotAProbability(f64),
    #[error("price of anarchy undefined: {0}")]
    InfeasiblePoa(String),
    #[error("closed-form/solver cross-check failed: {0}")]
    CrossCheckFailed(String),
    #[error("serialization not supported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Full-precision float formatting used by every CSV and config emitter:
/// 17 significant digits, which round-trips `f64` exactly.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
