//! The N-player game: random aggregates, Bayesian costs, finite Nash
//! solvers and epsilon-Nash certification.
//!
//! Aggregates are z_i = (1/N) sum_j W_ij (b(alpha_j, z_j) + xi_j). With a
//! quadratic cost the expected cost has an exact evaluation (the reduced
//! cost at the mean aggregate, plus a variance term when the cost is
//! quadratic in z and the diagonal is zero); Monte Carlo over a common
//! noise batch remains available for validation and for custom costs.

use crate::game::{certify, CostSpec, DriftSpec, GameSpec, NoiseSpec};
use crate::graphon::SampledGraph;
use crate::linalg;
use crate::{fmt_f64, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;

/// An N-player game on a symmetric interaction matrix.
#[derive(Debug, Clone)]
pub struct FiniteGame {
    n: usize,
    /// Row-major N x N symmetric weights.
    w: Vec<f64>,
    pub spec: GameSpec,
}

/// I.i.d. noise draws, S samples per player, reproducible under the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBatch {
    s: usize,
    n: usize,
    /// Row-major S x N samples.
    samples: Vec<f64>,
    pub seed: u64,
}

impl NoiseBatch {
    pub fn generate(noise: NoiseSpec, s: usize, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..s * n).map(|_| noise.sample(&mut rng)).collect();
        NoiseBatch {
            s,
            n,
            samples,
            seed,
        }
    }

    pub fn samples(&self) -> usize {
        self.s
    }

    pub fn players(&self) -> usize {
        self.n
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.samples[k * self.n..(k + 1) * self.n]
    }
}

/// Finite Nash solver selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiniteSolveMethod {
    /// Direct linear solve; quadratic cost, identity drift, zero diagonal.
    ClosedForm,
    BestResponseIteration {
        tol: f64,
        max_iter: usize,
        damping: f64,
        /// Run even when the finite uniqueness certificate fails.
        override_certificate: bool,
    },
}

/// Candidate deviations for epsilon certification; the analytic best
/// response is always added for quadratic costs, and the range is widened
/// to bracket it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaGrid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl FiniteGame {
    pub fn new(n: usize, w: Vec<f64>, spec: GameSpec) -> Result<Self> {
        if n == 0 || w.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "weight matrix has {} entries, expected {}",
                w.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if w[i * n + j] != w[j * n + i] {
                    return Err(Error::AsymmetricMatrix(i, j));
                }
            }
        }
        Ok(FiniteGame { n, w, spec })
    }

    pub fn from_sampled_graph(graph: &SampledGraph, spec: GameSpec) -> Self {
        FiniteGame {
            n: graph.n(),
            w: graph.weights().to_vec(),
            spec,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.w[i * self.n + i] == 0.0)
    }

    /// sqrt((1/N^2) sum_ij W_ij^2), the scaled Frobenius norm from the
    /// aggregate contraction condition.
    pub fn frobenius_scaled(&self) -> f64 {
        let sq: f64 = self.w.iter().map(|v| v * v).sum();
        sq.sqrt() / self.n as f64
    }

    /// Operator norm of W/N, for the finite analog of the uniqueness
    /// condition.
    pub fn op_norm_scaled(&self, tol: f64, max_iter: usize) -> Result<f64> {
        let n = self.n;
        linalg::power_iteration(
            n,
            |v, out| {
                for i in 0..n {
                    out[i] = self.w[i * n..(i + 1) * n]
                        .iter()
                        .zip(v)
                        .map(|(a, x)| a * x)
                        .sum::<f64>()
                        / n as f64;
                }
            },
            tol,
            max_iter,
        )
    }

    fn check_contraction(&self) -> Result<()> {
        let frob = self.frobenius_scaled();
        if self.spec.bundle.c_z.sqrt() * frob >= 1.0 {
            return Err(Error::ContractionViolated(format!(
                "sqrt(c_z) * ||W||_F = {:.6} >= 1",
                self.spec.bundle.c_z.sqrt() * frob
            )));
        }
        Ok(())
    }

    /// Aggregate fixed point for one noise realization, Picard from zero.
    fn aggregate_one(&self, alpha: &[f64], xi: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = self.n;
        let mut z = vec![0.0; n];
        if !self.spec.drift.depends_on_aggregate() {
            // One step suffices: the map does not depend on z.
            let drifted: Vec<f64> = alpha
                .iter()
                .zip(xi)
                .map(|(a, e)| self.spec.drift.eval(*a, 0.0) + e)
                .collect();
            for i in 0..n {
                z[i] = self.w[i * n..(i + 1) * n]
                    .iter()
                    .zip(&drifted)
                    .map(|(wij, x)| wij * x)
                    .sum::<f64>()
                    / n as f64;
            }
            return Ok(z);
        }
        let mut next = vec![0.0; n];
        for _ in 0..100_000 {
            for i in 0..n {
                next[i] = (0..n)
                    .map(|j| {
                        self.w[i * n + j] * (self.spec.drift.eval(alpha[j], z[j]) + xi[j])
                    })
                    .sum::<f64>()
                    / n as f64;
            }
            let delta = next
                .iter()
                .zip(&z)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            std::mem::swap(&mut z, &mut next);
            if delta <= tol {
                return Ok(z);
            }
        }
        Err(Error::NonConvergence {
            iterations: 100_000,
            residual: f64::NAN,
        })
    }

    /// Random aggregates for every noise sample; row k is the fixed point
    /// under noise row k.
    pub fn aggregate_samples(
        &self,
        alpha: &[f64],
        noise: &NoiseBatch,
        tol: f64,
    ) -> Result<Vec<f64>> {
        self.check_contraction()?;
        if alpha.len() != self.n || noise.players() != self.n {
            return Err(Error::InvalidParameter(format!(
                "profile/noise sized {} / {} for {} players",
                alpha.len(),
                noise.players(),
                self.n
            )));
        }
        let mut out = Vec::with_capacity(noise.samples() * self.n);
        for k in 0..noise.samples() {
            out.extend(self.aggregate_one(alpha, noise.row(k), tol)?);
        }
        Ok(out)
    }

    /// Deterministic mean aggregate: m = (1/N) W b(alpha, m) (the noise is
    /// mean zero, and the drift here is affine in z).
    pub fn mean_aggregate(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        self.check_contraction()?;
        self.aggregate_one(alpha, &vec![0.0; self.n], 1e-14)
    }

    fn analytic_cost_available(&self) -> bool {
        match (&self.spec.cost, &self.spec.drift) {
            (CostSpec::Quadratic { rz2, .. }, DriftSpec::Identity) => {
                *rz2 == 0.0 || self.has_zero_diagonal()
            }
            // Affine in z with a cost linear in z: expectation passes through.
            (CostSpec::Quadratic { rz2, .. }, DriftSpec::Affine { .. }) => *rz2 == 0.0,
            _ => false,
        }
    }

    /// Expected cost of player `i` under the profile. Exact analytic
    /// evaluation when available, otherwise Monte Carlo over the batch.
    pub fn expected_cost(&self, i: usize, alpha: &[f64], noise: &NoiseBatch) -> Result<f64> {
        if self.analytic_cost_available() {
            self.expected_cost_analytic(i, alpha)
        } else {
            self.expected_cost_mc(i, alpha, noise)
        }
    }

    /// Analytic path: J_i = J(alpha_i, m_i) + rz2 Var(z_i), with
    /// Var(z_i) = E[xi^2] (1/N^2) sum_j W_ij^2 for the identity drift.
    pub fn expected_cost_analytic(&self, i: usize, alpha: &[f64]) -> Result<f64> {
        if !self.analytic_cost_available() {
            return Err(Error::Unsupported(
                "analytic finite cost needs a quadratic cost and identity/affine drift".into(),
            ));
        }
        let m = self.mean_aggregate(alpha)?;
        let nu = self.spec.noise.variance();
        let base = self.spec.cost.eval(alpha[i], m[i], nu);
        let rz2 = match self.spec.cost {
            CostSpec::Quadratic { rz2, .. } => rz2,
            _ => unreachable!("analytic path is quadratic"),
        };
        if rz2 == 0.0 {
            return Ok(base);
        }
        let n = self.n;
        let row_sq: f64 = self.w[i * n..(i + 1) * n].iter().map(|v| v * v).sum();
        Ok(base + rz2 * nu * row_sq / (n * n) as f64)
    }

    /// Monte Carlo over the noise batch: mean of J(alpha_i, z_i(omega)). Exact
    /// in expectation when the cost is affine in z or the drift ignores z
    /// and the diagonal is zero; otherwise a documented approximation.
    pub fn expected_cost_mc(&self, i: usize, alpha: &[f64], noise: &NoiseBatch) -> Result<f64> {
        let zs = self.aggregate_samples(alpha, noise, 1e-12)?;
        let nu = self.spec.noise.variance();
        let s = noise.samples();
        let total: f64 = (0..s)
            .map(|k| self.spec.cost.eval(alpha[i], zs[k * self.n + i], nu))
            .sum();
        Ok(total / s as f64)
    }

    /// Solve for the finite Nash equilibrium.
    pub fn solve_nash_finite(&self, method: FiniteSolveMethod) -> Result<Vec<f64>> {
        match method {
            FiniteSolveMethod::ClosedForm => {
                let (q2, q1, qz) = match (&self.spec.cost, &self.spec.drift) {
                    (CostSpec::Quadratic { q2, q1, qz, .. }, DriftSpec::Identity) => {
                        (*q2, *q1, *qz)
                    }
                    _ => {
                        return Err(Error::Unsupported(
                            "closed form needs a quadratic cost with identity drift".into(),
                        ))
                    }
                };
                if !self.has_zero_diagonal() {
                    return Err(Error::Unsupported(
                        "closed form needs a zero interaction diagonal".into(),
                    ));
                }
                // Stationarity: 2 q2 alpha_i + q1 + qz m_i = 0 with
                // m = (W/N) alpha, i.e. (2 q2 I + (qz/N) W) alpha = -q1 1.
                let n = self.n;
                let mut a = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        a[i * n + j] = qz * self.w[i * n + j] / n as f64;
                    }
                    a[i * n + i] += 2.0 * q2;
                }
                linalg::lu_solve(a, &vec![-q1; n])
            }
            FiniteSolveMethod::BestResponseIteration {
                tol,
                max_iter,
                damping,
                override_certificate,
            } => {
                if !(damping > 0.0 && damping <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "damping must lie in (0, 1], got {damping}"
                    )));
                }
                if !override_certificate {
                    let norm = self.op_norm_scaled(1e-10, 100_000)?;
                    let cert = certify(&self.spec, norm);
                    if !cert.uniqueness_ok {
                        return Err(Error::ContractionViolated(format!(
                            "finite uniqueness value {:.6} >= 1 at ||W/N|| = {:.6} \
                             (pass override to iterate anyway)",
                            cert.uniqueness_value, norm
                        )));
                    }
                }
                let (q2, q1, qz) = match &self.spec.cost {
                    CostSpec::Quadratic { q2, q1, qz, .. } => (*q2, *q1, *qz),
                    CostSpec::Custom { .. } => {
                        return Err(Error::Unsupported(
                            "best-response iteration implements the deterministic \
                             reduction for quadratic costs"
                                .into(),
                        ))
                    }
                };
                let mut alpha = vec![0.0; self.n];
                let mut residual = f64::INFINITY;
                for it in 0..max_iter {
                    let m = self.mean_aggregate(&alpha)?;
                    let mut delta = 0.0f64;
                    let mut next = alpha.clone();
                    for i in 0..self.n {
                        let best = -(q1 + qz * m[i]) / (2.0 * q2);
                        next[i] = (1.0 - damping) * alpha[i] + damping * best;
                        delta = delta.max((next[i] - alpha[i]).abs());
                    }
                    alpha = next;
                    residual = delta;
                    if delta <= tol {
                        return Ok(alpha);
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
        }
    }

    /// Certify how far the profile is from a Nash equilibrium: the largest
    /// gain any player can extract by a unilateral deviation over the beta
    /// grid (plus the analytic best response for quadratic costs), with
    /// aggregates re-solved under each deviation and costs evaluated on the
    /// same noise batch (common random numbers).
    pub fn epsilon_nash_certify(
        &self,
        alpha: &[f64],
        beta_grid: BetaGrid,
        noise: &NoiseBatch,
    ) -> Result<f64> {
        if alpha.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "profile has {} entries for {} players",
                alpha.len(),
                self.n
            )));
        }
        if beta_grid.steps < 2 || beta_grid.hi <= beta_grid.lo {
            return Err(Error::InvalidParameter("beta grid needs hi > lo and >= 2 steps".into()));
        }
        let quadratic = matches!(self.spec.cost, CostSpec::Quadratic { .. });
        // Analytic best responses at the current mean aggregates; used both
        // as candidates and to widen the grid so it brackets them.
        let analytic_brs: Option<Vec<f64>> = if quadratic {
            let m = self.mean_aggregate(alpha)?;
            let (q2, q1, qz) = match self.spec.cost {
                CostSpec::Quadratic { q2, q1, qz, .. } => (q2, q1, qz),
                _ => unreachable!(),
            };
            Some(m.iter().map(|mi| -(q1 + qz * mi) / (2.0 * q2)).collect())
        } else {
            None
        };
        let (mut lo, mut hi) = (beta_grid.lo, beta_grid.hi);
        if let Some(brs) = &analytic_brs {
            for b in brs {
                lo = lo.min(*b - 1e-9);
                hi = hi.max(*b + 1e-9);
            }
        }
        let betas: Vec<f64> = (0..beta_grid.steps)
            .map(|k| lo + (hi - lo) * k as f64 / (beta_grid.steps - 1) as f64)
            .collect();

        // With identity drift and a zero diagonal a player's own deviation
        // leaves their aggregate untouched, so one mean-aggregate solve
        // covers every candidate.
        let fast = matches!(self.spec.drift, DriftSpec::Identity)
            && self.has_zero_diagonal()
            && self.analytic_cost_available();
        if fast {
            let m = self.mean_aggregate(alpha)?;
            let nu = self.spec.noise.variance();
            let mut epsilon = f64::NEG_INFINITY;
            for i in 0..self.n {
                let base = self.spec.cost.eval(alpha[i], m[i], nu);
                let mut best = f64::INFINITY;
                for &beta in &betas {
                    best = best.min(self.spec.cost.eval(beta, m[i], nu));
                }
                if let Some(brs) = &analytic_brs {
                    best = best.min(self.spec.cost.eval(brs[i], m[i], nu));
                }
                epsilon = epsilon.max(base - best);
            }
            return Ok(epsilon);
        }

        let mut epsilon = f64::NEG_INFINITY;
        let mut deviated = alpha.to_vec();
        for i in 0..self.n {
            let base = self.expected_cost(i, alpha, noise)?;
            let mut best = f64::INFINITY;
            let mut try_beta = |game: &FiniteGame, dev: &mut Vec<f64>, beta: f64| -> Result<()> {
                dev[i] = beta;
                let cost = game.expected_cost(i, dev, noise)?;
                if cost < best {
                    best = cost;
                }
                Ok(())
            };
            for &beta in &betas {
                try_beta(self, &mut deviated, beta)?;
            }
            if let Some(brs) = &analytic_brs {
                try_beta(self, &mut deviated, brs[i])?;
            }
            deviated[i] = alpha[i];
            epsilon = epsilon.max(base - best);
        }
        Ok(epsilon)
    }

    /// Emit an equilibrium vector as CSV (`i,alpha`).
    pub fn profile_to_csv(alpha: &[f64], mut out: impl Write) -> Result<()> {
        writeln!(out, "i,alpha")?;
        for (i, a) in alpha.iter().enumerate() {
            writeln!(out, "{},{}", i, fmt_f64(*a))?;
        }
        Ok(())
    }
}
