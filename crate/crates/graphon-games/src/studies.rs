//! Experiment harnesses: equilibrium convergence of sampled finite games
//! toward the continuum limit, rate constants, graphon stability and
//! epsilon-Nash decay. Every study is deterministic given its seeds.

use crate::equilibrium::{
    embed_onto, solve_nash, stability_bound, EquilibriumReport,
};
use crate::finite_game::{BetaGrid, FiniteGame, FiniteSolveMethod, NoiseBatch};
use crate::function_space::{perm_invariant_dist, Grid, GridProfile, PermutationSearch};
use crate::game::{certify, GameSpec};
use crate::graphon::{cut_norm_bounds, Graphon, SamplingKind};
use crate::{fmt_f64, Error, Result};
use std::collections::HashMap;
use std::io::Write;

/// Configuration for the convergence and epsilon studies.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub graphon: Graphon,
    pub game: GameSpec,
    /// Strictly increasing player counts.
    pub n_list: Vec<usize>,
    pub sampling: SamplingKind,
    pub seeds: Vec<u64>,
    /// Target grid size; snapped per N to the nearest multiple so step
    /// embeddings are exact.
    pub grid_m: usize,
    pub ds_search: PermutationSearch,
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "N list must be nonempty and strictly increasing".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("need at least one seed".into()));
        }
        if self.grid_m == 0 {
            return Err(Error::EmptyGrid);
        }
        Ok(())
    }
}

/// Nearest positive multiple of `n` to `target`.
pub fn snap_grid(target: usize, n: usize) -> usize {
    let down = (target / n) * n;
    let up = down + n;
    if down == 0 || up - target < target - down {
        up
    } else {
        down
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub seed: u64,
    pub ds: f64,
    pub epsilon: Option<f64>,
    /// Operator norm of the sampled step graphon (||W^N / N||).
    pub w_op_norm_n: f64,
    pub cut_lower: f64,
    pub cut_upper: f64,
}

/// Convergence study output.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of log median-d_S against log N.
    pub fitted_slope: f64,
    /// Rows that failed, with the error rendered.
    pub failures: Vec<(usize, u64, String)>,
}

impl RateTable {
    /// Median d_S per N, ordered by N.
    pub fn median_ds(&self) -> Vec<(usize, f64)> {
        median_by_n(self.rows.iter().map(|r| (r.n, r.ds)))
    }

    pub fn median_epsilon(&self) -> Vec<(usize, f64)> {
        median_by_n(
            self.rows
                .iter()
                .filter_map(|r| r.epsilon.map(|e| (r.n, e))),
        )
    }

    /// CSV with the fixed header `N,seed,dS,epsilon,opNorm,cutLower,cutUpper`.
    pub fn to_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "N,seed,dS,epsilon,opNorm,cutLower,cutUpper")?;
        for r in &self.rows {
            let eps = match r.epsilon {
                Some(e) => fmt_f64(e),
                None => String::new(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n,
                r.seed,
                fmt_f64(r.ds),
                eps,
                fmt_f64(r.w_op_norm_n),
                fmt_f64(r.cut_lower),
                fmt_f64(r.cut_upper)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

fn median_by_n(rows: impl Iterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut by_n: HashMap<usize, Vec<f64>> = HashMap::new();
    for (n, v) in rows {
        by_n.entry(n).or_default().push(v);
    }
    let mut out: Vec<(usize, f64)> = by_n
        .into_iter()
        .map(|(n, mut vs)| {
            vs.sort_by(f64::total_cmp);
            let mid = vs.len() / 2;
            let median = if vs.len() % 2 == 1 {
                vs[mid]
            } else {
                0.5 * (vs[mid - 1] + vs[mid])
            };
            (n, median)
        })
        .collect();
    out.sort_by_key(|(n, _)| *n);
    out
}

fn fit_log_log_slope(points: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(n, v)| ((*n as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn sample_graph(cfg: &StudyConfig, n: usize, seed: u64) -> Result<crate::graphon::SampledGraph> {
    match cfg.sampling {
        SamplingKind::Weighted => cfg.graphon.sample_weighted(n, seed),
        SamplingKind::Bernoulli => cfg.graphon.sample_bernoulli(n, seed),
    }
}

fn graphon_nash_on(cfg: &StudyConfig, m: usize) -> Result<EquilibriumReport> {
    let grid = Grid::new(m)?;
    let op = cfg.graphon.discretize(&grid);
    let report = solve_nash(&cfg.game, &op, &GridProfile::zeros(grid), 1e-11, 200_000)?;
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    Ok(report)
}

fn solve_finite(game: &FiniteGame) -> Result<Vec<f64>> {
    if game.spec.is_quadratic_identity() && game.has_zero_diagonal() {
        game.solve_nash_finite(FiniteSolveMethod::ClosedForm)
    } else {
        game.solve_nash_finite(FiniteSolveMethod::BestResponseIteration {
            tol: 1e-12,
            max_iter: 200_000,
            damping: 1.0,
            override_certificate: false,
        })
    }
}

/// Deterministic per-row noise seed, decorrelated from the graph seed.
fn noise_seed(seed: u64, n: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(n as u64)
}

const CUT_SCAN_RESOLUTION: usize = 16;

/// Sample finite games of growing size, solve them, and measure the
/// permutation-invariant distance of the embedded equilibria to the
/// continuum equilibrium; fits the log-log decay slope on per-N medians.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<RateTable> {
    cfg.validate()?;
    {
        // The limiting game must be uniquely solvable.
        let grid = Grid::new(cfg.grid_m)?;
        let op = cfg.graphon.discretize(&grid);
        let cert = certify(&cfg.game, op.norm_cached()?);
        if !cert.uniqueness_ok {
            return Err(Error::ContractionViolated(format!(
                "uniqueness value {:.6} >= 1 for the limiting graphon",
                cert.uniqueness_value
            )));
        }
    }
    let mut nash_cache: HashMap<usize, GridProfile> = HashMap::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &cfg.n_list {
        let m = snap_grid(cfg.grid_m, n);
        if let std::collections::hash_map::Entry::Vacant(slot) = nash_cache.entry(m) {
            slot.insert(graphon_nash_on(cfg, m)?.profile);
        }
        let target = &nash_cache[&m];
        for &seed in &cfg.seeds {
            match convergence_row(cfg, n, seed, m, target) {
                Ok(row) => rows.push(row),
                Err(e) => failures.push((n, seed, e.to_string())),
            }
        }
    }
    let fitted_slope = fit_log_log_slope(&median_by_n(rows.iter().map(|r| (r.n, r.ds))));
    Ok(RateTable {
        rows,
        fitted_slope,
        failures,
    })
}

fn convergence_row(
    cfg: &StudyConfig,
    n: usize,
    seed: u64,
    m: usize,
    target: &GridProfile,
) -> Result<RateRow> {
    let graph = sample_graph(cfg, n, seed)?;
    let game = FiniteGame::from_sampled_graph(&graph, cfg.game.clone());
    let alpha = solve_finite(&game)?;
    let embedded = embed_onto(&alpha, target.grid())?;
    let ds = perm_invariant_dist(&embedded, target, cfg.ds_search)?;
    let w_op_norm_n = game.op_norm_scaled(1e-10, 200_000)?;
    let grid = Grid::new(m)?;
    let (cut_lower, cut_upper) = cut_norm_bounds(
        &graph.step_graphon(),
        &cfg.graphon,
        &grid,
        CUT_SCAN_RESOLUTION,
    )?;
    Ok(RateRow {
        n,
        seed,
        ds,
        epsilon: None,
        w_op_norm_n,
        cut_lower,
        cut_upper,
    })
}

/// Rate constants from the quantitative convergence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalConstants {
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

/// Evaluate the printed constants at limits zeta1 (Hilbert-Schmidt norm),
/// zeta2 (operator norm), slack eps and drift bound c0.
pub fn theoretical_constants(
    spec: &GameSpec,
    zeta1: f64,
    zeta2: f64,
    eps: f64,
    c0: f64,
) -> Result<TheoreticalConstants> {
    let b = &spec.bundle;
    let noise2 = spec.noise.variance();
    let z1e = zeta1 + eps;
    let z2e = zeta2 + eps;
    let denom0 = 1.0 - 2.0 * b.c_z * z1e * z1e;
    if denom0 <= 0.0 {
        return Err(Error::ContractionViolated(format!(
            "1 - 2 c_z (zeta1 + eps)^2 = {denom0:.6} <= 0"
        )));
    }
    let margin = 1.0 - b.c_z.sqrt() * z2e;
    if margin <= 0.0 {
        return Err(Error::ContractionViolated(format!(
            "1 - sqrt(c_z)(zeta2 + eps) = {margin:.6} <= 0"
        )));
    }
    let contraction = (b.ell_j / b.ell_c) * b.c_alpha.sqrt() * z2e / margin;
    if contraction >= 1.0 {
        return Err(Error::ContractionViolated(format!(
            "best-response contraction factor {contraction:.6} >= 1"
        )));
    }
    let kappa0 = 2.0 * z1e * z1e * noise2 / denom0;
    let kappa1 = 1.0 / (1.0 - contraction);
    let kappa2 = b.c_alpha * z1e * z1e / (margin * margin);
    let kappa_tilde = 2.0
        * kappa1
        * (2.0 * b.ell_j_tilde / b.ell_c).sqrt()
        * (2.0 * kappa0 + kappa2).powf(0.25);
    let kappa = stability_bound(spec, zeta2, zeta2, c0)?;
    Ok(TheoreticalConstants {
        kappa,
        kappa_tilde,
        kappa0,
        kappa1,
        kappa2,
    })
}

/// One row of the stability study.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    /// Operator norm of the difference of the discretized kernels.
    pub op_norm_diff: f64,
    /// L2 distance between the two equilibria.
    pub equilibrium_diff: f64,
    pub kappa_bound: f64,
    pub violated: bool,
}

/// Solve the game on a base graphon and on perturbations of it, reporting
/// the equilibrium displacement against kappa times the operator-norm
/// displacement. The drift bound c0 falls back to the empirical sup of |b|
/// over the states encountered in both solves.
pub fn run_stability_study(
    spec: &GameSpec,
    w: &Graphon,
    perturbations: &[Graphon],
    grid_m: usize,
) -> Result<Vec<StabilityRow>> {
    let grid = Grid::new(grid_m)?;
    let op = w.discretize(&grid);
    let base_norm = op.norm_cached()?;
    let cert = certify(spec, base_norm);
    if !cert.uniqueness_ok {
        return Err(Error::ContractionViolated(format!(
            "uniqueness value {:.6} >= 1 for the base graphon",
            cert.uniqueness_value
        )));
    }
    let base = solve_nash(spec, &op, &GridProfile::zeros(grid.clone()), 1e-12, 200_000)?;
    let sup_b = |report: &EquilibriumReport| -> f64 {
        report
            .profile
            .values()
            .iter()
            .zip(report.aggregate.values())
            .map(|(a, z)| spec.drift.eval(*a, *z).abs())
            .fold(0.0, f64::max)
    };
    let mut rows = Vec::with_capacity(perturbations.len());
    for wp in perturbations {
        let opp = wp.discretize(&grid);
        let pert_norm = opp.norm_cached()?;
        let pert = solve_nash(spec, &opp, &GridProfile::zeros(grid.clone()), 1e-12, 200_000)?;
        let equilibrium_diff = base.profile.l2_dist(&pert.profile)?;
        // Operator norm of the difference kernel, under the base weights.
        let m = grid.len();
        let op_norm_diff = crate::linalg::power_iteration(
            m,
            |v, out| {
                for i in 0..m {
                    out[i] = (0..m)
                        .map(|j| {
                            (op.kernel(i, j) - opp.kernel(i, j)) * op.weights()[j] * v[j]
                        })
                        .sum();
                }
            },
            1e-12,
            200_000,
        )?;
        let c0 = spec
            .bundle
            .c0
            .unwrap_or_else(|| sup_b(&base).max(sup_b(&pert)));
        let kappa = stability_bound(spec, base_norm, pert_norm, c0)?;
        let kappa_bound = kappa * op_norm_diff;
        rows.push(StabilityRow {
            op_norm_diff,
            equilibrium_diff,
            kappa_bound,
            violated: equilibrium_diff > kappa_bound + 1e-9,
        });
    }
    Ok(rows)
}

/// Epsilon study row.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow {
    pub n: usize,
    pub seed: u64,
    pub epsilon: f64,
}

/// Project the continuum equilibrium onto each sampled finite game and
/// certify how close to a Nash equilibrium the projected profile is.
pub fn run_epsilon_study(
    cfg: &StudyConfig,
    beta_grid: BetaGrid,
    mc_samples: usize,
) -> Result<Vec<EpsilonRow>> {
    cfg.validate()?;
    let mut nash_cache: HashMap<usize, GridProfile> = HashMap::new();
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let m = snap_grid(cfg.grid_m, n);
        if let std::collections::hash_map::Entry::Vacant(slot) = nash_cache.entry(m) {
            slot.insert(graphon_nash_on(cfg, m)?.profile);
        }
        let projected = nash_cache[&m].block_average(n)?;
        for &seed in &cfg.seeds {
            let graph = sample_graph(cfg, n, seed)?;
            let game = FiniteGame::from_sampled_graph(&graph, cfg.game.clone());
            // The decay guarantee needs the sampled aggregate maps to stay
            // uniformly contractive along the sequence; check per row.
            let frob = game.frobenius_scaled();
            if (2.0 * cfg.game.bundle.c_z).sqrt() * frob >= 1.0 {
                return Err(Error::ContractionViolated(format!(
                    "sqrt(2 c_z) * ||W||_F = {:.6} >= 1 at N = {n}",
                    (2.0 * cfg.game.bundle.c_z).sqrt() * frob
                )));
            }
            let noise = NoiseBatch::generate(cfg.game.noise, mc_samples, n, noise_seed(seed, n));
            let epsilon = game.epsilon_nash_certify(&projected, beta_grid, &noise)?;
            rows.push(EpsilonRow { n, seed, epsilon });
        }
    }
    Ok(rows)
}

/// Medians of an epsilon study, per N.
pub fn epsilon_medians(rows: &[EpsilonRow]) -> Vec<(usize, f64)> {
    median_by_n(rows.iter().map(|r| (r.n, r.epsilon)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beach_study(n_list: Vec<usize>, seeds: Vec<u64>, sampling: SamplingKind) -> StudyConfig {
        StudyConfig {
            graphon: Graphon::constant(0.5),
            game: GameSpec::beach(),
            n_list,
            sampling,
            seeds,
            grid_m: 512,
            ds_search: PermutationSearch::Identity,
        }
    }

    #[test]
    fn snap_grid_examples() {
        assert_eq!(snap_grid(1024, 50), 1000);
        assert_eq!(snap_grid(1024, 400), 1200);
        assert_eq!(snap_grid(1024, 800), 800);
        assert_eq!(snap_grid(1024, 1024), 1024);
        assert_eq!(snap_grid(3, 8), 8);
    }

    #[test]
    fn weighted_sampling_of_constant_graphon_is_near_exact() {
        // Off-diagonal rows of the weighted sample are exactly constant;
        // the only deviation from the continuum equilibrium is the O(1/N)
        // zero-diagonal effect.
        let cfg = beach_study(vec![50, 100, 200], vec![1, 2], SamplingKind::Weighted);
        let table = run_convergence_study(&cfg).unwrap();
        assert!(table.failures.is_empty());
        for row in &table.rows {
            assert!(row.ds <= 1e-2, "N={} dS={}", row.n, row.ds);
        }
        // d_S still shrinks with N.
        let med = table.median_ds();
        assert!(med.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn bernoulli_study_decays_and_is_deterministic() {
        let cfg = beach_study(vec![25, 50, 100], vec![3, 4, 5], SamplingKind::Bernoulli);
        let a = run_convergence_study(&cfg).unwrap();
        let b = run_convergence_study(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.fitted_slope, b.fitted_slope);
        let med = a.median_ds();
        assert!(med.first().unwrap().1 > med.last().unwrap().1);
        assert!(a.fitted_slope < 0.0);
        for row in &a.rows {
            assert!(row.cut_lower <= row.cut_upper + 1e-12);
        }
    }

    #[test]
    fn weighted_sampling_beats_bernoulli_at_matched_seeds() {
        // Weighted samples carry no edge noise, so the distance to the
        // continuum equilibrium should win at matched seeds nearly always.
        let seeds: Vec<u64> = (1..=5).collect();
        let weighted = run_convergence_study(&beach_study(
            vec![25, 50, 100],
            seeds.clone(),
            SamplingKind::Weighted,
        ))
        .unwrap();
        let bernoulli = run_convergence_study(&beach_study(
            vec![25, 50, 100],
            seeds,
            SamplingKind::Bernoulli,
        ))
        .unwrap();
        let wins = weighted
            .rows
            .iter()
            .zip(&bernoulli.rows)
            .filter(|(w, b)| {
                assert_eq!((w.n, w.seed), (b.n, b.seed));
                w.ds <= b.ds
            })
            .count();
        let total = weighted.rows.len();
        assert!(wins * 5 >= total * 4, "weighted won only {wins}/{total}");
    }

    #[test]
    fn empty_table_emits_header_only() {
        let table = RateTable {
            rows: Vec::new(),
            fitted_slope: 0.0,
            failures: Vec::new(),
        };
        assert_eq!(
            table.to_csv_string(),
            "N,seed,dS,epsilon,opNorm,cutLower,cutUpper\n"
        );
    }

    #[test]
    fn csv_has_fixed_header() {
        let cfg = beach_study(vec![10, 20], vec![1], SamplingKind::Bernoulli);
        let table = run_convergence_study(&cfg).unwrap();
        let csv = table.to_csv_string();
        assert!(csv.starts_with("N,seed,dS,epsilon,opNorm,cutLower,cutUpper\n"));
        assert_eq!(csv.lines().count(), 1 + table.rows.len());
    }

    #[test]
    fn theoretical_constants_examples() {
        // c_z = 0, E xi^2 = 1, zeta1 = zeta2 = 1, eps = 0, beach bundle.
        let spec = GameSpec::beach().with_noise(crate::game::NoiseSpec::Gaussian { sigma: 1.0 });
        let c = theoretical_constants(&spec, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((c.kappa0 - 2.0).abs() < 1e-12);
        assert!((c.kappa1 - 1.5).abs() < 1e-12);
        assert!((c.kappa2 - 1.0).abs() < 1e-12);
        let expect_tilde =
            2.0 * 1.5 * (2.0 * spec.bundle.ell_j_tilde / 6.0).sqrt() * 5.0f64.powf(0.25);
        assert!((c.kappa_tilde - expect_tilde).abs() < 1e-12);

        // ell_J -> 0 drives kappa1 -> 1.
        let mut decoupled = spec.clone();
        decoupled.bundle.ell_j = 0.0;
        let c = theoretical_constants(&decoupled, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(c.kappa1, 1.0);

        // Condition violations are reported.
        let cournot = GameSpec::cournot(1.0, 1.0, 0.9).unwrap();
        assert!(theoretical_constants(&cournot, 1.5, 1.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn empirical_rate_below_lemma_bound_on_constant_study() {
        // d_S * N^(1/4) stays below the kappa-tilde bound for the weighted
        // constant-graphon study (where d_S is nearly zero).
        let cfg = beach_study(vec![100, 200], vec![1], SamplingKind::Weighted);
        let table = run_convergence_study(&cfg).unwrap();
        let noisy = GameSpec::beach().with_noise(crate::game::NoiseSpec::Gaussian { sigma: 1.0 });
        let c = theoretical_constants(&noisy, 0.5, 0.5, 0.0, 1.0).unwrap();
        for row in &table.rows {
            assert!(row.ds * (row.n as f64).powf(0.25) <= c.kappa_tilde);
        }
    }

    #[test]
    fn stability_identity_perturbation_is_zero() {
        let spec = GameSpec::cities(1.0, 0.2).unwrap();
        let w = Graphon::constant(1.0);
        let rows = run_stability_study(&spec, &w, std::slice::from_ref(&w), 64).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].op_norm_diff.abs() < 1e-12);
        assert!(rows[0].equilibrium_diff.abs() < 1e-11);
        assert!(!rows[0].violated);
    }

    #[test]
    fn stability_constant_perturbations_respect_kappa() {
        let spec = GameSpec::cities(1.0, 0.2).unwrap();
        let w = Graphon::constant(1.0);
        let perturbations: Vec<Graphon> = [1.01, 1.05, 1.1]
            .iter()
            .map(|a| Graphon::constant(*a))
            .collect();
        let rows = run_stability_study(&spec, &w, &perturbations, 64).unwrap();
        for (row, a) in rows.iter().zip([1.01, 1.05, 1.1]) {
            let expect = (1.0 / (1.0 - 0.2 * a) - 1.0 / 0.8f64).abs();
            assert!(
                (row.equilibrium_diff - expect).abs() <= 1e-10,
                "diff {} vs formula {expect}",
                row.equilibrium_diff
            );
            assert!(!row.violated, "kappa bound violated at a = {a}: {row:?}");
        }
    }

    #[test]
    fn epsilon_study_decays_with_n() {
        let mut cfg = beach_study(vec![25, 50, 100], vec![1, 2, 3], SamplingKind::Bernoulli);
        cfg.grid_m = 400;
        let rows = run_epsilon_study(
            &cfg,
            BetaGrid {
                lo: -1.0,
                hi: 1.0,
                steps: 9,
            },
            100,
        )
        .unwrap();
        assert_eq!(rows.len(), 9);
        let med = epsilon_medians(&rows);
        assert!(med.first().unwrap().1 > med.last().unwrap().1);
        // Determinism.
        let again = run_epsilon_study(
            &cfg,
            BetaGrid {
                lo: -1.0,
                hi: 1.0,
                steps: 9,
            },
            100,
        )
        .unwrap();
        assert_eq!(rows, again);
    }

    #[test]
    fn epsilon_zero_interaction_graphon() {
        // Constant zero kernel decouples the players: the projected
        // equilibrium is exactly optimal for each of them.
        let cfg = StudyConfig {
            graphon: Graphon::constant(0.0),
            game: GameSpec::beach(),
            n_list: vec![10, 20],
            sampling: SamplingKind::Weighted,
            seeds: vec![1],
            grid_m: 100,
            ds_search: PermutationSearch::Identity,
        };
        let rows = run_epsilon_study(
            &cfg,
            BetaGrid {
                lo: -1.0,
                hi: 1.0,
                steps: 5,
            },
            10,
        )
        .unwrap();
        for row in &rows {
            assert!(row.epsilon.abs() <= 1e-12);
        }
    }
}
