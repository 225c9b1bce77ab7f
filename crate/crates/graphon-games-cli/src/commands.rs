//! Command dispatch: each command resolves its inputs from the run
//! configuration, writes a manifest echoing every knob, and emits CSV
//! and/or whitespace-separated `.dat` files into the output directory.

use crate::config::{CommandKind, RunConfig};
use graphon_games::equilibrium::{
    closed_form_nash, cournot_closed_form_residual, cournot_resolvent_coefficient,
    cournot_unreduced_coefficient, planner_optimum, poa_closed_form, price_of_anarchy,
    solve_nash, ClosedFormGame, PlannerMethod, PoaFamily,
};
use graphon_games::finite_game::{BetaGrid, FiniteGame, FiniteSolveMethod};
use graphon_games::function_space::{Grid, GridProfile, PermutationSearch};
use graphon_games::graphon::SamplingKind;
use graphon_games::studies::{
    run_convergence_study, run_epsilon_study, run_stability_study, theoretical_constants,
    EpsilonRow, StudyConfig,
};
use graphon_games::{hs_norm, Error, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Full-precision text for emitted numbers (17 significant digits).
fn full(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("manifest"), cfg.manifest())?;
    match cfg.command {
        CommandKind::Solve => solve(cfg),
        CommandKind::ClosedForm => closed_form(cfg),
        CommandKind::Poa => poa(cfg),
        CommandKind::SampleGraph => sample_graph(cfg),
        CommandKind::FiniteSolve => finite_solve(cfg),
        CommandKind::Epsilon => epsilon(cfg),
        CommandKind::Converge => converge(cfg),
        CommandKind::Stability => stability(cfg),
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// One-series whitespace `.dat` file: `x value` rows under a comment header.
fn profile_dat(profile: &GridProfile, name: &str) -> String {
    let mut s = format!("# x {name}\n");
    let grid = profile.grid();
    for i in 0..grid.len() {
        let _ = writeln!(s, "{} {}", full(grid.point(i)), full(profile.values()[i]));
    }
    s
}

fn solve(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.parse_game()?;
    let grid = Grid::new(cfg.grid_m)?;
    let op = cfg.parse_graphon()?.discretize(&grid);
    let report = solve_nash(
        &spec,
        &op,
        &GridProfile::zeros(grid.clone()),
        cfg.tol,
        cfg.max_iter,
    )?;
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    let cert = &report.certificate;
    println!(
        "solved in {} iterations, residual {:.3e}; ||W|| = {:.6}, uniqueness value {:.6} ({})",
        report.iterations,
        report.residual,
        cert.w_norm,
        cert.uniqueness_value,
        if cert.uniqueness_ok {
            "certified unique"
        } else {
            "uniqueness not certified"
        }
    );
    write_file(&cfg.out.join("equilibrium.csv"), &report.to_csv_string())?;
    if cfg.format == "dat" {
        write_file(
            &cfg.out.join("equilibrium_alpha.dat"),
            &profile_dat(&report.profile, "alpha"),
        )?;
        write_file(
            &cfg.out.join("equilibrium_aggregate.dat"),
            &profile_dat(&report.aggregate, "aggregate"),
        )?;
    }
    Ok(())
}

fn closed_form(cfg: &RunConfig) -> Result<()> {
    let game = cfg.parse_closed_form_game()?;
    let w = cfg.parse_graphon()?;
    let grid = Grid::new(cfg.grid_m)?;
    let profile = closed_form_nash(game, &w, &grid)?;
    if let ClosedFormGame::Cournot { a, b, c } = game {
        let op = w.discretize(&grid);
        let verified =
            cournot_closed_form_residual(a, b, c, &op, cournot_resolvent_coefficient(b, c))?;
        let unreduced =
            cournot_closed_form_residual(a, b, c, &op, cournot_unreduced_coefficient(b, c))?;
        println!(
            "cournot equilibrium residuals: resolvent coefficient {:.3e}, unreduced variant {:.3e}",
            verified, unreduced
        );
    }
    let mut csv = String::from("x,value\n");
    for i in 0..grid.len() {
        let _ = writeln!(csv, "{},{}", full(grid.point(i)), full(profile.values()[i]));
    }
    write_file(&cfg.out.join("closed_form.csv"), &csv)?;
    if cfg.format == "dat" {
        write_file(
            &cfg.out.join("closed_form_alpha.dat"),
            &profile_dat(&profile, "alpha"),
        )?;
    }
    Ok(())
}

fn poa(cfg: &RunConfig) -> Result<()> {
    if !cfg.family.is_empty() {
        if !cfg.theta_grid.is_empty() {
            return poa_heatmap(cfg);
        }
        let family = cfg.parse_poa_family()?;
        let value = poa_closed_form(family, cfg.theta)?;
        println!("PoA = {value}");
        write_file(&cfg.out.join("poa.csv"), &format!("poa\n{}\n", full(value)))?;
        return Ok(());
    }
    let spec = cfg.parse_game()?;
    let grid = Grid::new(cfg.grid_m)?;
    let op = cfg.parse_graphon()?.discretize(&grid);
    let value = price_of_anarchy(&spec, &op)?;
    println!("PoA = {value}");
    write_file(&cfg.out.join("poa.csv"), &format!("poa\n{}\n", full(value)))?;
    if cfg.format == "dat" {
        // Nash and planner profiles, one series each.
        let nash = solve_nash(&spec, &op, &GridProfile::zeros(grid.clone()), cfg.tol, cfg.max_iter)?;
        let planner = planner_optimum(&spec, &op, PlannerMethod::ClosedForm)?;
        write_file(&cfg.out.join("poa_nash.dat"), &profile_dat(&nash.profile, "nash"))?;
        write_file(
            &cfg.out.join("poa_planner.dat"),
            &profile_dat(&planner.profile, "planner"),
        )?;
    }
    Ok(())
}

/// PoA over a (theta, gamma) lattice for the power-law families; cells with
/// an undefined planner emit NaN. Row-major: one row per theta.
fn poa_heatmap(cfg: &RunConfig) -> Result<()> {
    let thetas = RunConfig::parse_range(&cfg.theta_grid, "thetaGrid")?;
    let gammas = RunConfig::parse_range(&cfg.gamma_grid, "gammaGrid")?;
    let (name, _) = cfg
        .family
        .split_once(':')
        .unwrap_or((cfg.family.as_str(), ""));
    let family_for = |gamma: f64| -> Result<PoaFamily> {
        match name {
            "powerlaw" => Ok(PoaFamily::PowerLaw { gamma }),
            "normpowerlaw" => Ok(PoaFamily::NormalizedPowerLaw {
                gamma,
                g: (1.0 - gamma) * (1.0 - gamma),
            }),
            other => Err(Error::Parse(format!(
                "heatmaps cover powerlaw/normpowerlaw, got {other}"
            ))),
        }
    };
    let mut out = String::new();
    let join = |vs: &[f64]| {
        vs.iter()
            .map(|v| full(*v))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "# rows: theta = {}", join(&thetas));
    let _ = writeln!(out, "# cols: gamma = {}", join(&gammas));
    for &theta in &thetas {
        let mut row = Vec::with_capacity(gammas.len());
        for &gamma in &gammas {
            let v = match poa_closed_form(family_for(gamma)?, theta) {
                Ok(v) => v,
                Err(Error::InfeasiblePoa(_)) => f64::NAN,
                Err(e) => return Err(e),
            };
            row.push(if v.is_nan() {
                "NaN".to_string()
            } else {
                full(v)
            });
        }
        let _ = writeln!(out, "{}", row.join(" "));
    }
    write_file(&cfg.out.join("poa_heatmap.dat"), &out)
}

fn sample_graph(cfg: &RunConfig) -> Result<()> {
    let w = cfg.parse_graphon()?;
    let graph = match cfg.parse_kind()? {
        SamplingKind::Weighted => w.sample_weighted(cfg.n, cfg.seed)?,
        SamplingKind::Bernoulli => w.sample_bernoulli(cfg.n, cfg.seed)?,
    };
    write_file(&cfg.out.join("graph.csv"), &graph.to_csv_string())
}

fn finite_solve(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.parse_game()?;
    let w = cfg.parse_graphon()?;
    let graph = match cfg.parse_kind()? {
        SamplingKind::Weighted => w.sample_weighted(cfg.n, cfg.seed)?,
        SamplingKind::Bernoulli => w.sample_bernoulli(cfg.n, cfg.seed)?,
    };
    let game = FiniteGame::from_sampled_graph(&graph, spec);
    let alpha = if game.spec.is_quadratic_identity() && game.has_zero_diagonal() {
        game.solve_nash_finite(FiniteSolveMethod::ClosedForm)?
    } else {
        game.solve_nash_finite(FiniteSolveMethod::BestResponseIteration {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            damping: 1.0,
            override_certificate: false,
        })?
    };
    let mut buf = Vec::new();
    FiniteGame::profile_to_csv(&alpha, &mut buf)?;
    write_file(
        &cfg.out.join("finite_equilibrium.csv"),
        &String::from_utf8(buf).expect("CSV is ASCII"),
    )
}

fn study_config(cfg: &RunConfig) -> Result<StudyConfig> {
    Ok(StudyConfig {
        graphon: cfg.parse_graphon()?,
        game: cfg.parse_game()?,
        n_list: cfg.n_list.clone(),
        sampling: cfg.parse_kind()?,
        seeds: cfg.seeds.clone(),
        grid_m: cfg.grid_m,
        ds_search: PermutationSearch::Identity,
    })
}

/// The fixed study table header; studies leave inapplicable columns empty.
const TABLE_HEADER: &str = "N,seed,dS,epsilon,opNorm,cutLower,cutUpper";

fn epsilon_rows_csv(rows: &[EpsilonRow]) -> String {
    let mut s = format!("{TABLE_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},,{},,,", r.n, r.seed, full(r.epsilon));
    }
    s
}

fn json_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn config_json(cfg: &RunConfig) -> String {
    format!(
        "\"command\":\"{}\",\"game\":\"{}\",\"graphon\":\"{}\",\"noise\":\"{}\",\"gridM\":{},\"kind\":\"{}\",\"Nlist\":[{}],\"seeds\":[{}],\"mcSamples\":{}",
        cfg.command.name(),
        json_escape(&cfg.game),
        json_escape(&cfg.graphon),
        json_escape(&cfg.noise),
        cfg.grid_m,
        json_escape(&cfg.kind),
        cfg.n_list
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(","),
        cfg.seeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
        cfg.mc_samples
    )
}

fn epsilon(cfg: &RunConfig) -> Result<()> {
    let study = study_config(cfg)?;
    let rows = run_epsilon_study(
        &study,
        BetaGrid {
            lo: cfg.beta_lo,
            hi: cfg.beta_hi,
            steps: cfg.beta_steps,
        },
        cfg.mc_samples,
    )?;
    write_file(&cfg.out.join("epsilon.csv"), &epsilon_rows_csv(&rows))?;
    let meta = format!("{{{},\"rows\":{}}}\n", config_json(cfg), rows.len());
    write_file(&cfg.out.join("study_meta.jsonl"), &meta)?;
    if cfg.format == "dat" {
        let mut dat = String::from("# N epsilon_median\n");
        for (n, e) in graphon_games::studies::epsilon_medians(&rows) {
            let _ = writeln!(dat, "{} {}", n, full(e));
        }
        write_file(&cfg.out.join("epsilon_median.dat"), &dat)?;
    }
    Ok(())
}

fn converge(cfg: &RunConfig) -> Result<()> {
    let study = study_config(cfg)?;
    let table = run_convergence_study(&study)?;
    write_file(&cfg.out.join("convergence.csv"), &table.to_csv_string())?;
    // Rate constants at the measured limiting norms, with the empirical
    // drift-bound fallback from the continuum equilibrium.
    let grid = Grid::new(cfg.grid_m)?;
    let graphon = cfg.parse_graphon()?;
    let op = graphon.discretize(&grid);
    let spec = cfg.parse_game()?;
    let zeta1 = hs_norm(&graphon, &grid);
    let zeta2 = op.norm_cached()?;
    let c0 = spec.bundle.c0.unwrap_or_else(|| {
        solve_nash(&spec, &op, &GridProfile::zeros(grid.clone()), 1e-10, 100_000)
            .map(|r| {
                r.profile
                    .values()
                    .iter()
                    .zip(r.aggregate.values())
                    .map(|(a, z)| spec.drift.eval(*a, *z).abs())
                    .fold(0.0, f64::max)
            })
            .unwrap_or(f64::NAN)
    });
    let constants = match theoretical_constants(&spec, zeta1, zeta2, 0.0, c0) {
        Ok(c) => format!(
            "{{\"kappa\":{},\"kappaTilde\":{},\"kappa0\":{},\"kappa1\":{},\"kappa2\":{}}}",
            full(c.kappa),
            full(c.kappa_tilde),
            full(c.kappa0),
            full(c.kappa1),
            full(c.kappa2)
        ),
        Err(_) => "null".to_string(),
    };
    let meta = format!(
        "{{{},\"fittedSlope\":{},\"constants\":{},\"failures\":{}}}\n",
        config_json(cfg),
        full(table.fitted_slope),
        constants,
        table.failures.len()
    );
    write_file(&cfg.out.join("study_meta.jsonl"), &meta)?;
    if cfg.format == "dat" {
        let mut dat = String::from("# N dS_median\n");
        for (n, d) in table.median_ds() {
            let _ = writeln!(dat, "{} {}", n, full(d));
        }
        write_file(&cfg.out.join("ds_median.dat"), &dat)?;
    }
    println!(
        "fitted log-log slope {:.4} over {} rows ({} failures)",
        table.fitted_slope,
        table.rows.len(),
        table.failures.len()
    );
    Ok(())
}

fn stability(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.parse_game()?;
    let base = cfg.parse_graphon()?;
    let perturbations = cfg.parse_perturbations()?;
    let rows = run_stability_study(&spec, &base, &perturbations, cfg.grid_m)?;
    let mut csv = String::from("opNormDiff,equilibriumDiff,kappaBound,violated\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            full(r.op_norm_diff),
            full(r.equilibrium_diff),
            full(r.kappa_bound),
            r.violated
        );
    }
    write_file(&cfg.out.join("stability.csv"), &csv)?;
    let violended = rows.iter().filter(|r| r.violated).count();
    println!("{} perturbations, {} bound violations", rows.len(), violended);
    Ok(())
}
