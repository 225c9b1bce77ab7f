//! The continuum-game engine: aggregate fixed point, best responses, Nash
//! and planner solvers, closed-form equilibria, social cost and price of
//! anarchy.

use crate::function_space::{embed_step, Grid, GridProfile};
use crate::game::{certify, Certificate, CostSpec, DriftSpec, GameSpec};
use crate::graphon::{DiscretizedOperator, Graphon, ResolventMethod};
use crate::{fmt_f64, Error, Result};
use std::io::Write;

/// Solved Nash equilibrium with diagnostics and certificates.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    /// Equilibrium strategy profile.
    pub profile: GridProfile,
    /// Aggregate at the equilibrium.
    pub aggregate: GridProfile,
    pub iterations: usize,
    /// L2 distance between the last two best-response iterates.
    pub residual: f64,
    pub certificate: Certificate,
    pub converged: bool,
}

impl EquilibriumReport {
    /// CSV with a metadata line followed by `x,alpha,aggregate` rows.
    pub fn to_csv(&self, mut out: impl Write) -> Result<()> {
        let c = &self.certificate;
        writeln!(
            out,
            "# iterations={} residual={} converged={} wNorm={} contractionMargin={} uniquenessValue={} contractionOk={} uniquenessOk={}",
            self.iterations,
            fmt_f64(self.residual),
            self.converged,
            fmt_f64(c.w_norm),
            fmt_f64(c.contraction_margin),
            fmt_f64(c.uniqueness_value),
            c.contraction_ok,
            c.uniqueness_ok
        )?;
        writeln!(out, "x,alpha,aggregate")?;
        let grid = self.profile.grid();
        for i in 0..grid.len() {
            writeln!(
                out,
                "{},{},{}",
                fmt_f64(grid.point(i)),
                fmt_f64(self.profile.values()[i]),
                fmt_f64(self.aggregate.values()[i])
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

/// Aggregate fixed point z = W[b(alpha, z)], by Banach iteration from zero.
pub fn solve_aggregate(
    spec: &GameSpec,
    op: &DiscretizedOperator,
    alpha: &GridProfile,
    tol: f64,
    max_iter: usize,
) -> Result<GridProfile> {
    solve_aggregate_with(spec, op, alpha, tol, max_iter, false)
}

/// As [`solve_aggregate`], with an override that skips the contraction
/// certificate (for experiments that probe the uncertified regime).
pub fn solve_aggregate_with(
    spec: &GameSpec,
    op: &DiscretizedOperator,
    alpha: &GridProfile,
    tol: f64,
    max_iter: usize,
    skip_certificate: bool,
) -> Result<GridProfile> {
    if !skip_certificate {
        let norm = op.norm_cached()?;
        let cert = certify(spec, norm);
        if !cert.contraction_ok {
            return Err(Error::ContractionViolated(format!(
                "sqrt(c_z) * ||W|| = {:.6} >= 1",
                spec.bundle.c_z.sqrt() * norm
            )));
        }
    }
    let grid = op.grid().clone();
    if alpha.grid() != &grid {
        return Err(Error::GridMismatch(grid.len(), alpha.grid().len()));
    }
    if !spec.drift.depends_on_aggregate() {
        // The fixed-point map ignores z: one application lands exactly on
        // the aggregate.
        let drifted: Vec<f64> = alpha
            .values()
            .iter()
            .map(|a| spec.drift.eval(*a, 0.0))
            .collect();
        return op.apply(&GridProfile::new(grid, drifted)?);
    }
    let mut z = GridProfile::zeros(grid.clone());
    let mut drifted = vec![0.0; grid.len()];
    let mut residual = f64::INFINITY;
    for it in 0..max_iter {
        for (d, (a, zv)) in drifted
            .iter_mut()
            .zip(alpha.values().iter().zip(z.values()))
        {
            *d = spec.drift.eval(*a, *zv);
        }
        let z_next = op.apply(&GridProfile::new(grid.clone(), drifted.clone())?)?;
        residual = z_next.sup_dist(&z)?;
        z = z_next;
        if residual <= tol {
            return Ok(z);
        }
        if it + 1 == max_iter {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Pointwise minimizer of the cost given an aggregate profile.
pub fn best_response_profile(spec: &GameSpec, z: &GridProfile) -> Result<GridProfile> {
    let mut out = Vec::with_capacity(z.len());
    for (i, &zv) in z.values().iter().enumerate() {
        out.push(best_response_scalar(spec, zv, z.grid().point(i))?);
    }
    GridProfile::new(z.grid().clone(), out)
}

fn best_response_scalar(spec: &GameSpec, z: f64, x: f64) -> Result<f64> {
    match &spec.cost {
        CostSpec::Quadratic { q2, q1, qz, .. } => Ok(-(q1 + qz * z) / (2.0 * q2)),
        CostSpec::Custom { dj_dalpha, .. } => {
            // Strong convexity makes the gradient increasing; expand a
            // bracket, then safeguarded Newton with bisection fallback.
            let g = |a: f64| dj_dalpha(a, z);
            let (mut lo, mut hi) = (-1.0, 1.0);
            let mut tries = 0;
            while g(lo) > 0.0 {
                lo *= 2.0;
                tries += 1;
                if tries > 80 {
                    return Err(Error::BracketingFailed(x));
                }
            }
            while g(hi) < 0.0 {
                hi *= 2.0;
                tries += 1;
                if tries > 160 {
                    return Err(Error::BracketingFailed(x));
                }
            }
            let mut a = 0.5 * (lo + hi);
            for _ in 0..200 {
                let ga = g(a);
                if ga.abs() <= 1e-12 {
                    return Ok(a);
                }
                if ga > 0.0 {
                    hi = a;
                } else {
                    lo = a;
                }
                let h = 1e-7 * (1.0 + a.abs());
                let slope = (g(a + h) - g(a - h)) / (2.0 * h);
                let newton = a - ga / slope;
                a = if slope > 0.0 && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
            }
            Ok(a)
        }
    }
}

/// Nash equilibrium as the fixed point of best response composed with the
/// aggregate map (plain Picard iteration).
pub fn solve_nash(
    spec: &GameSpec,
    op: &DiscretizedOperator,
    init: &GridProfile,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumReport> {
    solve_nash_damped(spec, op, init, tol, max_iter, 1.0)
}

/// Damped variant: alpha <- (1 - damping) alpha + damping * B(Z(alpha)).
/// Useful when the uniqueness certificate fails but a fixed point is still
/// being probed.
pub fn solve_nash_damped(
    spec: &GameSpec,
    op: &DiscretizedOperator,
    init: &GridProfile,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<EquilibriumReport> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping must lie in (0, 1], got {damping}"
        )));
    }
    let norm = op.norm_cached()?;
    let certificate = certify(spec, norm);
    if !certificate.contraction_ok {
        return Err(Error::ContractionViolated(format!(
            "sqrt(c_z) * ||W|| = {:.6} >= 1",
            spec.bundle.c_z.sqrt() * norm
        )));
    }
    let mut alpha = init.clone();
    let mut residual = f64::INFINITY;
    let mut prev_residual = f64::INFINITY;
    let mut growth_streak = 0usize;
    let inner_tol = tol / 10.0;
    for it in 1..=max_iter {
        let z = solve_aggregate_with(spec, op, &alpha, inner_tol, 100_000, true)?;
        let best = best_response_profile(spec, &z)?;
        let next = if damping == 1.0 {
            best
        } else {
            let mixed: Vec<f64> = alpha
                .values()
                .iter()
                .zip(best.values())
                .map(|(a, b)| (1.0 - damping) * a + damping * b)
                .collect();
            GridProfile::new(alpha.grid().clone(), mixed)?
        };
        residual = next.l2_dist(&alpha)?;
        alpha = next;
        if residual <= tol {
            let aggregate = solve_aggregate_with(spec, op, &alpha, inner_tol, 100_000, true)?;
            return Ok(EquilibriumReport {
                profile: alpha,
                aggregate,
                iterations: it,
                residual,
                certificate,
                converged: true,
            });
        }
        if residual > prev_residual {
            growth_streak += 1;
            if growth_streak >= 50 {
                return Err(Error::Diverged {
                    iterations: it,
                    residual,
                });
            }
        } else {
            growth_streak = 0;
        }
        prev_residual = residual;
    }
    let aggregate = solve_aggregate_with(spec, op, &alpha, inner_tol, 100_000, true)?;
    Ok(EquilibriumReport {
        profile: alpha,
        aggregate,
        iterations: max_iter,
        residual,
        certificate,
        converged: false,
    })
}

/// Games whose equilibria have a resolvent closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormGame {
    Beach,
    Cities { k: f64, theta: f64 },
    Cournot { a: f64, b: f64, c: f64 },
}

fn auto_resolvent(
    op: &DiscretizedOperator,
    theta: f64,
    phi: &GridProfile,
) -> Result<GridProfile> {
    let norm = op.norm_cached()?;
    if theta.abs() * norm <= 0.9 {
        op.resolvent_apply(
            theta,
            phi,
            ResolventMethod::NeumannSeries {
                tol: 1e-13,
                max_terms: 200_000,
            },
        )
    } else {
        op.resolvent_apply(theta, phi, ResolventMethod::DirectSolve)
    }
}

/// Resolvent coefficient of the Cournot equilibrium,
/// c (1 + b) / (1 + 2 b); the closed form verifies it against the
/// equilibrium conditions.
pub fn cournot_resolvent_coefficient(b: f64, c: f64) -> f64 {
    c * (1.0 + b) / (1.0 + 2.0 * b)
}

/// Unreduced variant c (1 + b) of the Cournot coefficient (missing the
/// 1/(1 + 2b) factor). Kept so its equilibrium residual can be reported
/// alongside the verified coefficient.
pub fn cournot_unreduced_coefficient(b: f64, c: f64) -> f64 {
    c * (1.0 + b)
}

/// Sup-norm residual of the Cournot equilibrium condition
/// alpha = (a + c z) / (1 + 2b) for the candidate profile
/// (a / (1 + 2b)) [I - theta W]^-1 1.
pub fn cournot_closed_form_residual(
    a: f64,
    b: f64,
    c: f64,
    op: &DiscretizedOperator,
    theta: f64,
) -> Result<f64> {
    let spec = GameSpec::cournot(a, b, c)?;
    let one = GridProfile::constant(op.grid().clone(), 1.0);
    let r = auto_resolvent(op, theta, &one)?;
    let scale = a / (1.0 + 2.0 * b);
    let candidate = GridProfile::new(
        op.grid().clone(),
        r.values().iter().map(|v| scale * v).collect(),
    )?;
    let z = solve_aggregate(&spec, op, &candidate, 1e-13, 200_000)?;
    let mut sup = 0.0f64;
    for i in 0..candidate.len() {
        let best = (a + c * z.values()[i]) / (1.0 + 2.0 * b);
        sup = sup.max((candidate.values()[i] - best).abs());
    }
    Ok(sup)
}

/// Closed-form Nash equilibrium via the resolvent applied to the constant
/// one profile.
pub fn closed_form_nash(
    example: ClosedFormGame,
    w: &Graphon,
    grid: &Grid,
) -> Result<GridProfile> {
    let op = w.discretize(grid);
    let one = GridProfile::constant(grid.clone(), 1.0);
    let norm = op.norm_cached()?;
    match example {
        ClosedFormGame::Beach => {
            if norm >= 3.0 {
                return Err(Error::SpectralCondition(format!(
                    "||W|| = {norm:.6} >= 3"
                )));
            }
            let r = auto_resolvent(&op, 1.0 / 3.0, &one)?;
            GridProfile::new(grid.clone(), r.values().iter().map(|v| v / 3.0).collect())
        }
        ClosedFormGame::Cities { k, theta } => {
            if theta * norm >= 1.0 {
                return Err(Error::SpectralCondition(format!(
                    "theta * ||W|| = {:.6} >= 1",
                    theta * norm
                )));
            }
            let r = auto_resolvent(&op, theta, &one)?;
            GridProfile::new(grid.clone(), r.values().iter().map(|v| k * v).collect())
        }
        ClosedFormGame::Cournot { a, b, c } => {
            let theta = cournot_resolvent_coefficient(b, c);
            if theta * norm >= 1.0 {
                return Err(Error::SpectralCondition(format!(
                    "c(1+b)/(1+2b) * ||W|| = {:.6} >= 1",
                    theta * norm
                )));
            }
            let residual = cournot_closed_form_residual(a, b, c, &op, theta)?;
            if residual > 1e-9 {
                return Err(Error::CrossCheckFailed(format!(
                    "cournot closed form misses the equilibrium condition by {residual:.3e}"
                )));
            }
            let r = auto_resolvent(&op, theta, &one)?;
            let scale = a / (1.0 + 2.0 * b);
            GridProfile::new(
                grid.clone(),
                r.values().iter().map(|v| scale * v).collect(),
            )
        }
    }
}

/// Scalar mean field solution for constant-connection-strength graphons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfgSolution {
    pub alpha_hat: f64,
    pub z_hat: f64,
    /// Detected connection strength (common row integral of the kernel).
    pub strength: f64,
}

/// Detect a constant connection strength graphon (all row integrals equal
/// up to `tol`) and solve the scalar mean field system
/// z = a b(alpha, z), alpha = argmin J(., z). Returns `None` when the row
/// integrals vary.
pub fn mfg_reduce(
    spec: &GameSpec,
    w: &Graphon,
    grid: &Grid,
    tol: f64,
) -> Result<Option<MfgSolution>> {
    let op = w.discretize(grid);
    let m = grid.len();
    let rows: Vec<f64> = (0..m).map(|i| op.row_integral(i)).collect();
    let mean = rows.iter().sum::<f64>() / m as f64;
    if rows.iter().any(|r| (r - mean).abs() > tol) {
        return Ok(None);
    }
    let a = mean;
    let mut alpha = best_response_scalar(spec, 0.0, 0.5)?;
    let mut z = 0.0;
    for _ in 0..100_000 {
        let z_next = scalar_aggregate(spec, a, alpha, z)?;
        let alpha_next = best_response_scalar(spec, z_next, 0.5)?;
        let delta = (alpha_next - alpha).abs() + (z_next - z).abs();
        alpha = alpha_next;
        z = z_next;
        if delta <= tol * 1e-3 {
            return Ok(Some(MfgSolution {
                alpha_hat: alpha,
                z_hat: z,
                strength: a,
            }));
        }
    }
    Err(Error::NonConvergence {
        iterations: 100_000,
        residual: f64::NAN,
    })
}

/// Solve z = a b(alpha, z) for fixed alpha.
fn scalar_aggregate(spec: &GameSpec, a: f64, alpha: f64, z_start: f64) -> Result<f64> {
    match &spec.drift {
        DriftSpec::Identity => Ok(a * alpha),
        DriftSpec::Affine { a0, b1, c1 } => {
            let denom = 1.0 - a * c1;
            if denom.abs() < 1e-14 {
                return Err(Error::ContractionViolated(
                    "a * c1 = 1 in the scalar aggregate".into(),
                ));
            }
            Ok(a * (a0 - b1 * alpha) / denom)
        }
        DriftSpec::Custom { .. } => {
            let mut z = z_start;
            for _ in 0..100_000 {
                let next = a * spec.drift.eval(alpha, z);
                if (next - z).abs() <= 1e-14 {
                    return Ok(next);
                }
                z = next;
            }
            Err(Error::NonConvergence {
                iterations: 100_000,
                residual: f64::NAN,
            })
        }
    }
}

/// Solve the K-population mean field system
/// z_k = (1/K) sum_k' W_{k,k'} b(alpha_k', z_k'), alpha_k = argmin J(., z_k).
/// The step-graphon game equilibrium is the block embedding of this
/// solution.
pub fn solve_k_population(
    spec: &GameSpec,
    w: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = w.len();
    if k == 0 || w.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidParameter("interaction matrix must be square".into()));
    }
    let mut alpha = vec![best_response_scalar(spec, 0.0, 0.5)?; k];
    let mut z = vec![0.0; k];
    for _ in 0..max_iter {
        // Inner aggregate fixed point for the current actions.
        for _ in 0..max_iter {
            let mut next = vec![0.0; k];
            for i in 0..k {
                next[i] = (0..k)
                    .map(|j| w[i][j] * spec.drift.eval(alpha[j], z[j]))
                    .sum::<f64>()
                    / k as f64;
            }
            let delta = next
                .iter()
                .zip(&z)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            z = next;
            if delta <= tol * 1e-3 {
                break;
            }
        }
        let mut delta = 0.0f64;
        for i in 0..k {
            let next = best_response_scalar(spec, z[i], 0.5)?;
            delta = delta.max((next - alpha[i]).abs());
            alpha[i] = next;
        }
        if delta <= tol {
            return Ok((alpha, z));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// Social cost S(alpha) = integral of J(alpha_x, [Z alpha]_x).
pub fn social_cost(
    spec: &GameSpec,
    op: &DiscretizedOperator,
    alpha: &GridProfile,
) -> Result<f64> {
    let z = solve_aggregate(spec, op, alpha, 1e-12, 200_000)?;
    let nu = spec.noise.variance();
    let m = alpha.len();
    let total: f64 = (0..m)
        .map(|i| spec.cost.eval(alpha.values()[i], z.values()[i], nu))
        .sum();
    Ok(total / m as f64)
}

/// How the planner optimum is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlannerMethod {
    /// Resolvent closed form; available for quadratic costs with identity
    /// drift and no quadratic aggregate term.
    ClosedForm,
    GradientDescent {
        step: f64,
        tol: f64,
        max_iter: usize,
    },
}

/// Central planner solution.
#[derive(Debug, Clone)]
pub struct PlannerReport {
    pub profile: GridProfile,
    pub social_cost: f64,
    pub method: PlannerMethod,
    pub iterations: usize,
}

impl PlannerReport {
    pub fn to_csv(&self, mut out: impl Write) -> Result<()> {
        let method = match self.method {
            PlannerMethod::ClosedForm => "closed-form".to_string(),
            PlannerMethod::GradientDescent { .. } => "gradient-descent".to_string(),
        };
        writeln!(
            out,
            "# method={} iterations={} socialCost={}",
            method,
            self.iterations,
            fmt_f64(self.social_cost)
        )?;
        writeln!(out, "x,alpha")?;
        let grid = self.profile.grid();
        for i in 0..grid.len() {
            writeln!(
                out,
                "{},{}",
                fmt_f64(grid.point(i)),
                fmt_f64(self.profile.values()[i])
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

fn quadratic_identity_terms(spec: &GameSpec) -> Option<(f64, f64, f64, f64)> {
    match (&spec.drift, &spec.cost) {
        (
            DriftSpec::Identity,
            CostSpec::Quadratic {
                q2, q1, qz, rz2, ..
            },
        ) => Some((*q2, *q1, *qz, *rz2)),
        _ => None,
    }
}

/// Minimize the social cost over strategy profiles.
pub fn planner_optimum(
    spec: &GameSpec,
    op: &DiscretizedOperator,
    method: PlannerMethod,
) -> Result<PlannerReport> {
    match method {
        PlannerMethod::ClosedForm => {
            let (q2, q1, qz, rz2) = quadratic_identity_terms(spec).ok_or_else(|| {
                Error::Unsupported(
                    "planner closed form needs a quadratic cost with identity drift".into(),
                )
            })?;
            if rz2 != 0.0 {
                return Err(Error::Unsupported(
                    "planner closed form needs no quadratic aggregate term".into(),
                ));
            }
            // Stationarity: (2 q2 I + 2 qz W) alpha = -q1 1.
            let theta = -qz / q2;
            let norm = op.norm_cached()?;
            if theta.abs() * norm >= 1.0 {
                return Err(Error::SpectralCondition(format!(
                    "|qz/q2| * ||W|| = {:.6} >= 1: planner resolvent undefined",
                    theta.abs() * norm
                )));
            }
            let one = GridProfile::constant(op.grid().clone(), 1.0);
            let r = auto_resolvent(op, theta, &one)?;
            let scale = -q1 / (2.0 * q2);
            let profile = GridProfile::new(
                op.grid().clone(),
                r.values().iter().map(|v| scale * v).collect(),
            )?;
            let cost = social_cost(spec, op, &profile)?;
            Ok(PlannerReport {
                profile,
                social_cost: cost,
                method,
                iterations: 0,
            })
        }
        PlannerMethod::GradientDescent {
            step,
            tol,
            max_iter,
        } => {
            let grid = op.grid().clone();
            let mut alpha = GridProfile::zeros(grid.clone());
            let mut iterations = 0;
            for it in 1..=max_iter {
                iterations = it;
                let grad = planner_gradient(spec, op, &alpha)?;
                let gnorm = grad.l2_norm();
                if gnorm <= tol {
                    let cost = social_cost(spec, op, &alpha)?;
                    return Ok(PlannerReport {
                        profile: alpha,
                        social_cost: cost,
                        method,
                        iterations,
                    });
                }
                let next: Vec<f64> = alpha
                    .values()
                    .iter()
                    .zip(grad.values())
                    .map(|(a, g)| a - step * g)
                    .collect();
                alpha = GridProfile::new(grid.clone(), next)?;
            }
            Err(Error::NonConvergence {
                iterations,
                residual: planner_gradient(spec, op, &alpha)?.l2_norm(),
            })
        }
    }
}

/// L2 gradient of the social cost. Exact for quadratic costs with identity
/// drift; central finite differences otherwise.
fn planner_gradient(
    spec: &GameSpec,
    op: &DiscretizedOperator,
    alpha: &GridProfile,
) -> Result<GridProfile> {
    if let Some((q2, q1, qz, rz2)) = quadratic_identity_terms(spec) {
        let z = op.apply(alpha)?;
        let wz = op.apply(&z)?;
        let values: Vec<f64> = (0..alpha.len())
            .map(|i| {
                2.0 * q2 * alpha.values()[i]
                    + q1
                    + 2.0 * qz * z.values()[i]
                    + 2.0 * rz2 * wz.values()[i]
            })
            .collect();
        return GridProfile::new(alpha.grid().clone(), values);
    }
    let m = alpha.len();
    let mut grad = vec![0.0; m];
    let mut work = alpha.values().to_vec();
    for j in 0..m {
        let h = 1e-5 * (1.0 + work[j].abs());
        let orig = work[j];
        work[j] = orig + h;
        let up = social_cost(spec, op, &GridProfile::new(alpha.grid().clone(), work.clone())?)?;
        work[j] = orig - h;
        let dn = social_cost(spec, op, &GridProfile::new(alpha.grid().clone(), work.clone())?)?;
        work[j] = orig;
        // d S / d alpha_j carries a 1/M cell mass; scale to the L2 gradient
        // density.
        grad[j] = (up - dn) / (2.0 * h) * m as f64;
    }
    GridProfile::new(alpha.grid().clone(), grad)
}

/// Price of anarchy: Nash social cost over planner social cost. For the
/// cities parametrization on a uniform-weight operator the value is
/// cross-checked against the resolvent inner-product formula.
pub fn price_of_anarchy(spec: &GameSpec, op: &DiscretizedOperator) -> Result<f64> {
    let zero = GridProfile::zeros(op.grid().clone());
    let nash = solve_nash(spec, op, &zero, 1e-12, 200_000)?;
    if !nash.converged {
        return Err(Error::NonConvergence {
            iterations: nash.iterations,
            residual: nash.residual,
        });
    }
    let nash_cost = social_cost(spec, op, &nash.profile)?;
    let planner = match planner_optimum(spec, op, PlannerMethod::ClosedForm) {
        Ok(report) => report,
        Err(Error::SpectralCondition(msg)) => return Err(Error::InfeasiblePoa(msg)),
        Err(Error::Unsupported(_)) => planner_optimum(
            spec,
            op,
            PlannerMethod::GradientDescent {
                step: 0.2,
                tol: 1e-10,
                max_iter: 200_000,
            },
        )?,
        Err(e) => return Err(e),
    };
    if planner.social_cost == 0.0 {
        return Err(Error::InfeasiblePoa("planner social cost is zero".into()));
    }
    let ratio = nash_cost / planner.social_cost;

    // Cities-style cross-check against <[I - theta W]^-2 1, 1> /
    // <[I - 2 theta W]^-1 1, 1>.
    if let Some((q2, q1, qz, rz2)) = quadratic_identity_terms(spec) {
        let uniform = {
            let q0 = op.weights()[0];
            op.weights().iter().all(|q| *q == q0)
        };
        if q2 == 0.5 && rz2 == 0.0 && q1 < 0.0 && qz < 0.0 && uniform {
            let theta = -qz;
            let one = GridProfile::constant(op.grid().clone(), 1.0);
            let r1 = auto_resolvent(op, theta, &one)?;
            let r2 = auto_resolvent(op, theta, &r1)?;
            let num = r2.inner(&one)?;
            let den = auto_resolvent(op, 2.0 * theta, &one)?.inner(&one)?;
            let formula = num / den;
            if (ratio - formula).abs() > 1e-6 * ratio.abs().max(1.0) {
                return Err(Error::CrossCheckFailed(format!(
                    "solver PoA {ratio} vs inner-product PoA {formula}"
                )));
            }
        }
    }
    Ok(ratio)
}

/// Graphon families with closed-form cities-game price of anarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoaFamily {
    ConstantStrength { a: f64 },
    PowerLaw { gamma: f64 },
    NormalizedPowerLaw { gamma: f64, g: f64 },
    Threshold,
}

/// Closed-form price of anarchy for the cities game.
pub fn poa_closed_form(family: PoaFamily, theta: f64) -> Result<f64> {
    if theta < 0.0 {
        return Err(Error::InvalidParameter("theta must be nonnegative".into()));
    }
    match family {
        PoaFamily::ConstantStrength { a } => {
            let ta = theta * a;
            if 2.0 * ta >= 1.0 {
                return Err(Error::InfeasiblePoa(format!(
                    "2 * theta * a = {:.6} >= 1",
                    2.0 * ta
                )));
            }
            Ok((1.0 - 2.0 * ta) / ((1.0 - ta) * (1.0 - ta)))
        }
        PoaFamily::PowerLaw { gamma } => poa_power_law(gamma, theta, 1.0),
        PoaFamily::NormalizedPowerLaw { gamma, g } => poa_power_law(gamma, theta, g),
        PoaFamily::Threshold => {
            if theta == 0.0 {
                return Ok(1.0);
            }
            if theta >= std::f64::consts::FRAC_PI_4 {
                return Err(Error::InfeasiblePoa(format!(
                    "2 * theta * ||W|| = {:.6} >= 1 (||W|| = 2/pi)",
                    2.0 * theta * 2.0 / std::f64::consts::PI
                )));
            }
            let num = 1.0 - (2.0 * theta).sin();
            let den = (2.0 * theta).cos() + (2.0 * theta).sin() - 1.0;
            Ok((2.0 * theta / (1.0 - theta.sin())) * (num / den))
        }
    }
}

/// PoA for kernels g (x y)^-gamma; the plain power law is g = 1. The
/// effective coupling in the resolvent expansions is s = theta * g.
fn poa_power_law(gamma: f64, theta: f64, g: f64) -> Result<f64> {
    let one_2g = 1.0 - 2.0 * gamma;
    let s = theta * g;
    if one_2g - s <= 0.0 {
        return Err(Error::InfeasiblePoa(format!(
            "1 - 2 gamma - theta g = {:.6} <= 0: Nash resolvent undefined",
            one_2g - s
        )));
    }
    if one_2g - 2.0 * s <= 0.0 {
        return Err(Error::InfeasiblePoa(format!(
            "1 - 2 gamma - 2 theta g = {:.6} <= 0: planner resolvent undefined",
            one_2g - 2.0 * s
        )));
    }
    let om = (1.0 - gamma) * (1.0 - gamma);
    let num = 1.0 + s * one_2g * (2.0 * one_2g - s) / (om * (one_2g - s) * (one_2g - s));
    let den = 1.0 + 2.0 * s * one_2g / (om * (one_2g - 2.0 * s));
    Ok(num / den)
}

/// Stability constant kappa of the unique equilibrium with respect to
/// operator perturbations, as printed:
/// kappa = c0 lJ (1 - sqrt(cz) w) / [(1 - sqrt(cz) w)(lc (1 - sqrt(cz) w) - lJ sqrt(ca) w)].
pub fn stability_bound(
    spec: &GameSpec,
    w_norm: f64,
    w_norm_prime: f64,
    c0: f64,
) -> Result<f64> {
    let b = &spec.bundle;
    let cert = certify(spec, w_norm);
    if !cert.uniqueness_ok {
        return Err(Error::SpectralCondition(format!(
            "uniqueness condition fails at ||W|| = {w_norm}: value {:.6} >= 1",
            cert.uniqueness_value
        )));
    }
    if b.c_z.sqrt() * w_norm_prime >= 1.0 {
        return Err(Error::ContractionViolated(format!(
            "sqrt(c_z) * ||W'|| = {:.6} >= 1",
            b.c_z.sqrt() * w_norm_prime
        )));
    }
    if !c0.is_finite() {
        return Err(Error::InvalidParameter("c0 must be finite".into()));
    }
    let margin = 1.0 - b.c_z.sqrt() * w_norm;
    let denom = margin * (b.ell_c * margin - b.ell_j * b.c_alpha.sqrt() * w_norm);
    Ok(c0 * b.ell_j * margin / denom)
}

/// Internal helper shared with the study harness: block embedding of a
/// vector onto a grid.
pub(crate) fn embed_onto(values: &[f64], grid: &Grid) -> Result<GridProfile> {
    embed_step(values, grid.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::certify;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(m: usize) -> Grid {
        Grid::new(m).unwrap()
    }

    #[test]
    fn aggregate_identity_drift_is_one_step() {
        let spec = GameSpec::beach();
        let g = grid(128);
        let op = Graphon::min_max().discretize(&g);
        let alpha = GridProfile::from_fn(g.clone(), |x| x * x).unwrap();
        let z = solve_aggregate(&spec, &op, &alpha, 1e-13, 10).unwrap();
        let direct = op.apply(&alpha).unwrap();
        assert!(z.sup_dist(&direct).unwrap() <= 1e-15);
    }

    #[test]
    fn aggregate_constant_graphon_is_mean_scaled() {
        let spec = GameSpec::beach();
        let g = grid(256);
        let a = 1.3;
        let op = Graphon::constant(a).discretize(&g);
        let alpha = GridProfile::from_fn(g.clone(), |x| (5.0 * x).sin()).unwrap();
        let z = solve_aggregate(&spec, &op, &alpha, 1e-13, 10).unwrap();
        let expect = a * alpha.integrate();
        for v in z.values() {
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_cournot_scalar_fixed_point() {
        // Constant graphon a, constant actions: z = a(a0 - b1 c)/(1 - a c1).
        let (a0, b1, c1) = (1.0, 1.0, 0.2);
        let spec = GameSpec::cournot(a0, b1, c1).unwrap();
        let a = 0.8;
        let g = grid(64);
        let op = Graphon::constant(a).discretize(&g);
        let c = 0.4;
        let alpha = GridProfile::constant(g.clone(), c);
        let z = solve_aggregate(&spec, &op, &alpha, 1e-13, 100_000).unwrap();
        let expect = a * (a0 - b1 * c) / (1.0 - a * c1);
        for v in z.values() {
            assert!((v - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn aggregate_requires_contraction() {
        // Cournot with c ||W|| >= 1.
        let spec = GameSpec::cournot(1.0, 1.0, 0.9).unwrap();
        let op = Graphon::constant(1.2).discretize(&grid(16));
        let alpha = GridProfile::zeros(grid(16));
        assert!(matches!(
            solve_aggregate(&spec, &op, &alpha, 1e-10, 1000),
            Err(Error::ContractionViolated(_))
        ));
    }

    #[test]
    fn best_response_examples() {
        let g = grid(64);
        let beach = GameSpec::beach();
        let br = best_response_profile(&beach, &GridProfile::zeros(g.clone())).unwrap();
        for v in br.values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }

        let cities = GameSpec::cities(2.0, 0.3).unwrap();
        let z = GridProfile::from_fn(g.clone(), |x| x).unwrap();
        let br = best_response_profile(&cities, &z).unwrap();
        for (i, v) in br.values().iter().enumerate() {
            assert!((v - (2.0 + 0.3 * g.point(i))).abs() < 1e-14);
        }
    }

    #[test]
    fn best_response_is_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = grid(64);
        for spec in [
            GameSpec::beach(),
            GameSpec::cities(1.0, 0.4).unwrap(),
            GameSpec::cournot(1.0, 1.0, 0.2).unwrap(),
        ] {
            let ratio = spec.bundle.ell_j / spec.bundle.ell_c;
            for _ in 0..200 {
                let z1 = GridProfile::new(
                    g.clone(),
                    (0..64).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                )
                .unwrap();
                let z2 = GridProfile::new(
                    g.clone(),
                    (0..64).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                )
                .unwrap();
                let b1 = best_response_profile(&spec, &z1).unwrap();
                let b2 = best_response_profile(&spec, &z2).unwrap();
                assert!(
                    b1.l2_dist(&b2).unwrap() <= ratio * z1.l2_dist(&z2).unwrap() + 1e-9
                );
            }
        }
    }

    #[test]
    fn custom_cost_newton_matches_quadratic() {
        // Same beach cost expressed through evaluators.
        let quadratic = GameSpec::beach();
        let custom = GameSpec {
            cost: CostSpec::Custom {
                j: std::sync::Arc::new(|a, z| {
                    3.0 * a * a - 2.0 * a * (1.0 + z) + z * z + 1.0
                }),
                dj_dalpha: std::sync::Arc::new(|a, z| 6.0 * a - 2.0 * (1.0 + z)),
                ell_c: 6.0,
                ell_j: 2.0,
                ell_j_tilde: 2.0 * 10.0 * std::f64::consts::SQRT_2,
            },
            ..GameSpec::beach()
        };
        let g = grid(32);
        let z = GridProfile::from_fn(g, |x| 2.0 * x - 0.7).unwrap();
        let a = best_response_profile(&quadratic, &z).unwrap();
        let b = best_response_profile(&custom, &z).unwrap();
        assert!(a.sup_dist(&b).unwrap() <= 1e-10);
    }

    #[test]
    fn nash_beach_constant_graphon() {
        let spec = GameSpec::beach();
        let g = grid(256);
        let op = Graphon::constant(1.0).discretize(&g);
        let report = solve_nash(&spec, &op, &GridProfile::zeros(g.clone()), 1e-11, 10_000)
            .unwrap();
        assert!(report.converged);
        assert!(report.residual <= 1e-11);
        for v in report.profile.values() {
            assert!((v - 0.5).abs() <= 1e-10);
        }
        // Fixed-point residual of the report.
        let z = solve_aggregate(&spec, &op, &report.profile, 1e-13, 1000).unwrap();
        let best = best_response_profile(&spec, &z).unwrap();
        assert!(report.profile.l2_dist(&best).unwrap() <= 2e-11);
    }

    #[test]
    fn nash_cities_constant_graphon() {
        let spec = GameSpec::cities(1.0, 0.25).unwrap();
        let g = grid(128);
        let op = Graphon::constant(1.0).discretize(&g);
        let report =
            solve_nash(&spec, &op, &GridProfile::zeros(g.clone()), 1e-12, 10_000).unwrap();
        for v in report.profile.values() {
            assert!((v - 4.0 / 3.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn nash_is_init_independent_under_uniqueness() {
        let spec = GameSpec::beach();
        let g = grid(64);
        let op = Graphon::min_max().discretize(&g);
        let tol = 1e-12;
        let a = solve_nash(&spec, &op, &GridProfile::zeros(g.clone()), tol, 10_000).unwrap();
        let init2 = GridProfile::from_fn(g.clone(), |x| 3.0 * (9.0 * x).cos()).unwrap();
        let b = solve_nash(&spec, &op, &init2, tol, 10_000).unwrap();
        assert!(a.certificate.uniqueness_ok);
        assert!(a.profile.l2_dist(&b.profile).unwrap() <= 2.0 * tol * 10.0);
    }

    #[test]
    fn closed_form_beach_power_law() {
        let gamma = 0.2;
        let g = grid(512);
        let w = Graphon::power_law(gamma).unwrap();
        let alpha = closed_form_nash(ClosedFormGame::Beach, &w, &g).unwrap();
        let coeff = (1.0 - 2.0 * gamma) / (6.0 * (1.0 - gamma) * (1.0 - 3.0 * gamma));
        // Value at x = 1 from the closed form: 1/3 + 0.3125.
        assert!((1.0 / 3.0 + coeff - 0.6458333333333333).abs() < 1e-12);
        for i in 0..g.len() {
            let x = g.point(i);
            let expect = 1.0 / 3.0 + coeff * x.powf(-gamma);
            assert!(
                (alpha.values()[i] - expect).abs() <= 1e-9,
                "x={x}: {} vs {expect}",
                alpha.values()[i]
            );
        }
    }

    #[test]
    fn closed_form_beach_threshold_ansatz() {
        let g = grid(1024);
        let alpha =
            closed_form_nash(ClosedFormGame::Beach, &Graphon::simple_threshold(), &g).unwrap();
        let c = 1.0 / (3.0 * (1.0 - (1.0f64 / 3.0).sin()));
        let mut sup = 0.0f64;
        for i in 0..g.len() {
            let x = g.point(i);
            let expect = c * (((1.0 - x) / 3.0).cos() - (x / 3.0).sin());
            sup = sup.max((alpha.values()[i] - expect).abs());
        }
        assert!(sup <= 1e-6, "sup error {sup}");
    }

    #[test]
    fn closed_form_matches_solver_across_families() {
        let g = grid(256);
        let spec = GameSpec::beach();
        let families = [
            Graphon::constant(0.8),
            Graphon::step_matrix(vec![vec![0.9, 0.1], vec![0.1, 0.7]]).unwrap(),
            Graphon::min_max(),
            Graphon::simple_threshold(),
            Graphon::power_law(0.25).unwrap(),
        ];
        for w in &families {
            let op = w.discretize(&g);
            let solved = solve_nash(&spec, &op, &GridProfile::zeros(g.clone()), 1e-12, 50_000)
                .unwrap();
            let closed = closed_form_nash(ClosedFormGame::Beach, w, &g).unwrap();
            let sup = solved.profile.sup_dist(&closed).unwrap();
            assert!(sup <= 1e-6, "{w:?}: closed form vs solver sup {sup}");
        }
    }

    #[test]
    fn cournot_verified_coefficient_beats_unreduced_variant() {
        let (a, b, c) = (1.0, 1.0, 0.2);
        let g = grid(128);
        let op = Graphon::constant(0.5).discretize(&g);
        let verified = cournot_closed_form_residual(a, b, c, &op, cournot_resolvent_coefficient(b, c))
            .unwrap();
        assert!(verified <= 1e-9, "verified-coefficient residual {verified}");
        let unreduced =
            cournot_closed_form_residual(a, b, c, &op, cournot_unreduced_coefficient(b, c))
                .unwrap();
        assert!(unreduced > 1e-4, "unreduced-variant residual {unreduced}");
        // c = 0 limit: equilibrium constant a/(1+2b). Parameters must be
        // positive, so approximate with a tiny c.
        let alpha = closed_form_nash(
            ClosedFormGame::Cournot { a, b, c: 1e-12 },
            &Graphon::constant(0.5),
            &g,
        )
        .unwrap();
        for v in alpha.values() {
            assert!((v - a / (1.0 + 2.0 * b)).abs() < 1e-9);
        }
    }

    #[test]
    fn z_operator_lipschitz_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = grid(96);
        let specs = [GameSpec::beach(), GameSpec::cournot(1.0, 1.0, 0.2).unwrap()];
        let ws = [Graphon::min_max(), Graphon::constant(0.7)];
        for spec in &specs {
            for w in &ws {
                let op = w.discretize(&g);
                let norm = op.norm_cached().unwrap();
                let b = &spec.bundle;
                let l2_factor = b.c_alpha.sqrt() * norm / (1.0 - b.c_z.sqrt() * norm);
                let pw_scale = b.c_alpha.sqrt() / (1.0 - b.c_z.sqrt() * norm);
                for _ in 0..100 {
                    let a1 = GridProfile::new(
                        g.clone(),
                        (0..96).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                    )
                    .unwrap();
                    let a2 = GridProfile::new(
                        g.clone(),
                        (0..96).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                    )
                    .unwrap();
                    let z1 = solve_aggregate(spec, &op, &a1, 1e-13, 100_000).unwrap();
                    let z2 = solve_aggregate(spec, &op, &a2, 1e-13, 100_000).unwrap();
                    let da = a1.l2_dist(&a2).unwrap();
                    assert!(z1.l2_dist(&z2).unwrap() <= l2_factor * da + 1e-8);
                    // Pointwise bound with the row-norm factor.
                    for i in 0..96 {
                        let row_norm = (0..96)
                            .map(|j| op.weights()[j] * op.kernel(i, j) * op.kernel(i, j))
                            .sum::<f64>()
                            .sqrt();
                        let lhs = (z1.values()[i] - z2.values()[i]).abs();
                        assert!(lhs <= pw_scale * row_norm * da + 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn mfg_reduce_examples() {
        let spec = GameSpec::beach();
        let g = grid(128);
        // Constant graphon: alpha = 1/(3-a), z = a/(3-a).
        for a in [0.5, 1.0, 2.0] {
            let sol = mfg_reduce(&spec, &Graphon::constant(a), &g, 1e-9)
                .unwrap()
                .expect("constant graphon has constant strength");
            assert!((sol.alpha_hat - 1.0 / (3.0 - a)).abs() < 1e-9);
            assert!((sol.z_hat - a / (3.0 - a)).abs() < 1e-9);
            assert!((sol.strength - a).abs() < 1e-12);
        }
        // Min-max rows vary: no reduction.
        assert!(mfg_reduce(&spec, &Graphon::min_max(), &g, 1e-9)
            .unwrap()
            .is_none());
        // Watts-Strogatz is constant-strength by construction.
        let ws = Graphon::watts_strogatz(0.3, 0.2).unwrap();
        let sol = mfg_reduce(&spec, &ws, &g, 1e-6).unwrap();
        assert!(sol.is_some());
    }

    #[test]
    fn mfg_solution_is_a_graphon_equilibrium() {
        let spec = GameSpec::beach();
        let g = grid(128);
        let w = Graphon::constant(0.8);
        let sol = mfg_reduce(&spec, &w, &g, 1e-10).unwrap().unwrap();
        let op = w.discretize(&g);
        let profile = GridProfile::constant(g.clone(), sol.alpha_hat);
        let z = solve_aggregate(&spec, &op, &profile, 1e-13, 1000).unwrap();
        let best = best_response_profile(&spec, &z).unwrap();
        assert!(profile.l2_dist(&best).unwrap() <= 1e-9);
    }

    #[test]
    fn k_population_consistency() {
        let spec = GameSpec::beach();
        let wm = vec![vec![0.8, 0.2], vec![0.2, 0.6]];
        let (alpha_k, _z_k) = solve_k_population(&spec, &wm, 1e-12, 100_000).unwrap();

        let g = grid(64);
        let w = Graphon::step_matrix(wm).unwrap();
        let op = w.discretize(&g);
        let report =
            solve_nash(&spec, &op, &GridProfile::zeros(g.clone()), 1e-12, 50_000).unwrap();
        // Block-constant profile whose block averages solve the K system.
        let blocks = report.profile.block_average(2).unwrap();
        for (got, expect) in blocks.iter().zip(&alpha_k) {
            assert!((got - expect).abs() <= 1e-9);
        }
        let embedded = embed_onto(&alpha_k, &g).unwrap();
        assert!(report.profile.sup_dist(&embedded).unwrap() <= 1e-9);
    }

    #[test]
    fn social_cost_examples() {
        let g = grid(256);
        // Cities Nash on constant graphon: S = -(k^2/2) / (1 - theta a)^2.
        let (k, theta, a) = (1.0, 0.25, 1.0);
        let spec = GameSpec::cities(k, theta).unwrap();
        let op = Graphon::constant(a).discretize(&g);
        let nash = solve_nash(&spec, &op, &GridProfile::zeros(g.clone()), 1e-12, 10_000)
            .unwrap();
        let s = social_cost(&spec, &op, &nash.profile).unwrap();
        let expect = -(k * k / 2.0) / ((1.0 - theta * a) * (1.0 - theta * a));
        assert!((s - expect).abs() <= 1e-9);

        // Zero profile costs zero in the cities game.
        let zero_cost = social_cost(&spec, &op, &GridProfile::zeros(g.clone())).unwrap();
        assert_eq!(zero_cost, 0.0);

        // Beach: two evaluation routes agree (integral of pointwise costs).
        let beach = GameSpec::beach();
        let op = Graphon::min_max().discretize(&g);
        let nash = solve_nash(&beach, &op, &GridProfile::zeros(g.clone()), 1e-12, 10_000)
            .unwrap();
        let s1 = social_cost(&beach, &op, &nash.profile).unwrap();
        let z = solve_aggregate(&beach, &op, &nash.profile, 1e-13, 1000).unwrap();
        let nu = beach.noise.variance();
        let s2 = (0..g.len())
            .map(|i| beach.cost.eval(nash.profile.values()[i], z.values()[i], nu))
            .sum::<f64>()
            / g.len() as f64;
        assert!((s1 - s2).abs() <= 1e-10);
    }

    #[test]
    fn planner_examples() {
        let g = grid(256);
        let (k, theta, a) = (1.0, 0.2, 1.0);
        let spec = GameSpec::cities(k, theta).unwrap();
        let op = Graphon::constant(a).discretize(&g);
        let report = planner_optimum(&spec, &op, PlannerMethod::ClosedForm).unwrap();
        let expect = k / (1.0 - 2.0 * theta * a);
        for v in report.profile.values() {
            assert!((v - expect).abs() <= 1e-10);
        }
        let expect_cost = -(k * k / 2.0) / (1.0 - 2.0 * theta * a);
        assert!((report.social_cost - expect_cost).abs() <= 1e-9);

        // Threshold planner: (k / (1 - sin 2theta)) [cos(2theta(1-x)) - sin(2theta x)].
        let theta = 0.4;
        let spec = GameSpec::cities(k, theta).unwrap();
        let op = Graphon::simple_threshold().discretize(&grid(2048));
        let report = planner_optimum(&spec, &op, PlannerMethod::ClosedForm).unwrap();
        let scale = k / (1.0 - (2.0 * theta).sin());
        let mut sup = 0.0f64;
        for i in 0..2048 {
            let x = report.profile.grid().point(i);
            let expect = scale * ((2.0 * theta * (1.0 - x)).cos() - (2.0 * theta * x).sin());
            sup = sup.max((report.profile.values()[i] - expect).abs());
        }
        assert!(sup <= 1e-6, "planner threshold sup {sup}");
    }

    #[test]
    fn planner_gradient_descent_matches_closed_form() {
        let g = grid(128);
        let spec = GameSpec::cities(1.0, 0.3).unwrap();
        let op = Graphon::constant(1.0).discretize(&g);
        let cf = planner_optimum(&spec, &op, PlannerMethod::ClosedForm).unwrap();
        let gd = planner_optimum(
            &spec,
            &op,
            PlannerMethod::GradientDescent {
                step: 0.5,
                tol: 1e-9,
                max_iter: 100_000,
            },
        )
        .unwrap();
        assert!(cf.profile.l2_dist(&gd.profile).unwrap() <= 1e-6);
    }

    #[test]
    fn planner_never_loses_to_nash() {
        let g = grid(128);
        let cases: Vec<(GameSpec, Graphon)> = vec![
            (GameSpec::cities(1.0, 0.3).unwrap(), Graphon::constant(1.0)),
            (GameSpec::cities(1.5, 0.4).unwrap(), Graphon::min_max()),
            (GameSpec::beach(), Graphon::constant(0.5)),
        ];
        for (spec, w) in &cases {
            let op = w.discretize(&g);
            let nash = solve_nash(spec, &op, &GridProfile::zeros(g.clone()), 1e-12, 50_000)
                .unwrap();
            let nash_cost = social_cost(spec, &op, &nash.profile).unwrap();
            let planner = match planner_optimum(spec, &op, PlannerMethod::ClosedForm) {
                Ok(r) => r,
                Err(_) => planner_optimum(
                    spec,
                    &op,
                    PlannerMethod::GradientDescent {
                        step: 0.1,
                        tol: 1e-10,
                        max_iter: 200_000,
                    },
                )
                .unwrap(),
            };
            assert!(planner.social_cost <= nash_cost + 1e-9);
        }
    }

    #[test]
    fn poa_examples() {
        let g = grid(128);
        // theta a -> 0 gives PoA -> 1.
        let spec = GameSpec::cities(1.0, 1e-4).unwrap();
        let op = Graphon::constant(1.0).discretize(&g);
        let poa = price_of_anarchy(&spec, &op).unwrap();
        assert!((poa - 1.0).abs() < 1e-3);

        let spec = GameSpec::cities(1.0, 0.25).unwrap();
        let poa = price_of_anarchy(&spec, &op).unwrap();
        let expect = (1.0 - 0.5) / (0.75 * 0.75);
        assert!((poa - expect).abs() <= 1e-8);

        // Infeasible planner: 2 theta a >= 1.
        let spec = GameSpec::cities(1.0, 0.6).unwrap();
        assert!(matches!(
            price_of_anarchy(&spec, &op),
            Err(Error::InfeasiblePoa(_))
        ));
    }

    #[test]
    fn poa_closed_form_examples() {
        // Constant strength.
        let v = poa_closed_form(PoaFamily::ConstantStrength { a: 1.0 }, 0.25).unwrap();
        assert!((v - 0.5 / 0.5625).abs() < 1e-12);
        // PoA -> 0 as theta a -> 1/2.
        let v = poa_closed_form(PoaFamily::ConstantStrength { a: 1.0 }, 0.499999).unwrap();
        assert!(v < 1e-4);
        assert!(poa_closed_form(PoaFamily::ConstantStrength { a: 1.0 }, 0.5).is_err());

        // Power law at gamma = 0.2, theta = 0.1: evaluate the display.
        let (gamma, theta) = (0.2, 0.1);
        let one_2g: f64 = 1.0 - 2.0 * gamma;
        let om = (1.0 - gamma) * (1.0 - gamma);
        let num = 1.0
            + theta * one_2g * (2.0 * one_2g - theta) / (om * (one_2g - theta) * (one_2g - theta));
        let den = 1.0 + 2.0 * theta * one_2g / (om * (one_2g - 2.0 * theta));
        let v = poa_closed_form(PoaFamily::PowerLaw { gamma }, theta).unwrap();
        assert!((v - num / den).abs() < 1e-12);
        // Normalized family reduces to the plain one at g = 1.
        let nv =
            poa_closed_form(PoaFamily::NormalizedPowerLaw { gamma, g: 1.0 }, theta).unwrap();
        assert!((nv - v).abs() < 1e-15);
        // Infeasible when 1 - 2 gamma - 2 theta g <= 0.
        assert!(poa_closed_form(PoaFamily::PowerLaw { gamma: 0.2 }, 0.3).is_err());

        // Threshold limit at theta -> 0 is 1.
        assert_eq!(poa_closed_form(PoaFamily::Threshold, 0.0).unwrap(), 1.0);
        let v = poa_closed_form(PoaFamily::Threshold, 1e-6).unwrap();
        assert!((v - 1.0).abs() < 1e-5);
    }

    #[test]
    fn poa_solver_matches_closed_form_on_power_law() {
        // Quadrature-limited family: loose agreement at small gamma.
        let (gamma, theta) = (0.1, 0.15);
        let spec = GameSpec::cities(1.0, theta).unwrap();
        let op = Graphon::power_law(gamma).unwrap().discretize(&grid(2048));
        let solver = price_of_anarchy(&spec, &op).unwrap();
        let formula = poa_closed_form(PoaFamily::PowerLaw { gamma }, theta).unwrap();
        assert!(
            (solver - formula).abs() <= 1e-3,
            "solver {solver} vs formula {formula}"
        );
    }

    #[test]
    fn stability_bound_examples() {
        // ell_j = 0: kappa = 0.
        let mut spec = GameSpec::cities(1.0, 0.2).unwrap();
        spec.bundle.ell_j = 0.0;
        assert_eq!(stability_bound(&spec, 1.0, 1.0, 5.0).unwrap(), 0.0);

        // c_z = 0 simplification: kappa = c0 lJ / (lc - lJ sqrt(ca) w).
        let spec = GameSpec::cities(1.0, 0.2).unwrap();
        let (w, c0) = (1.0, 1.3);
        let kappa = stability_bound(&spec, w, 1.05, c0).unwrap();
        let b = &spec.bundle;
        let simplified = c0 * b.ell_j / (b.ell_c - b.ell_j * b.c_alpha.sqrt() * w);
        assert!((kappa - simplified).abs() < 1e-12);

        // Empirical check: cities on perturbed constant graphons.
        let g = grid(64);
        let theta = 0.2;
        let spec = GameSpec::cities(1.0, theta).unwrap();
        let base = Graphon::constant(1.0);
        let pert = Graphon::constant(1.05);
        let op1 = base.discretize(&g);
        let op2 = pert.discretize(&g);
        let e1 = solve_nash(&spec, &op1, &GridProfile::zeros(g.clone()), 1e-13, 100_000)
            .unwrap();
        let e2 = solve_nash(&spec, &op2, &GridProfile::zeros(g.clone()), 1e-13, 100_000)
            .unwrap();
        let diff = e1.profile.l2_dist(&e2.profile).unwrap();
        // Direct formula for constant graphons.
        let expect = (1.0 / (1.0 - theta * 1.05) - 1.0 / (1.0 - theta)).abs();
        assert!((diff - expect).abs() <= 1e-10);
        // c0 fallback: sup |b| over both equilibria (identity drift).
        let c0 = e1
            .profile
            .values()
            .iter()
            .chain(e2.profile.values())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let kappa = stability_bound(&spec, 1.0, 1.05, c0).unwrap();
        let op_norm_diff = 0.05;
        assert!(diff <= kappa * op_norm_diff + 1e-9);
    }

    #[test]
    fn report_csv_has_metadata_and_columns() {
        let spec = GameSpec::beach();
        let g = grid(8);
        let op = Graphon::constant(1.0).discretize(&g);
        let report =
            solve_nash(&spec, &op, &GridProfile::zeros(g.clone()), 1e-11, 1000).unwrap();
        let csv = report.to_csv_string();
        assert!(csv.starts_with("# iterations="));
        assert!(csv.contains("uniquenessOk=true"));
        assert!(csv.contains("x,alpha,aggregate"));
        assert_eq!(csv.lines().count(), 2 + 8);

        let cert = certify(&spec, 1.0);
        assert!(cert.uniqueness_ok);
    }
}
