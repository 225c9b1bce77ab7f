//! Graphon kernels, their integral operators, random-graph sampling and
//! norms.
//!
//! A graphon is a symmetric square-integrable kernel on the unit square. The
//! integral operator is discretized on the uniform midpoint grid; `apply`
//! multiplies by the sampled kernel with per-cell quadrature weights. The
//! weights are uniform `1/M` for every family except the power laws, where
//! the first two cells are adjusted so the discrete operator acts exactly on
//! the span of `1` and `x^-gamma` (the invariant subspace of the family's
//! equilibria); midpoint weights alone lose several digits of the singular
//! moment near zero. The simple threshold kernel gets the exact cell average
//! 1/2 on the cells bisected by the line `x + y = 1`.

use crate::function_space::{Grid, GridProfile};
use crate::linalg;
use crate::{fmt_f64, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::{Arc, OnceLock};

/// Symmetric kernel evaluator supplied by the caller; declared
/// square-integrable on the unit square.
#[derive(Clone)]
pub struct CustomKernel(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>);

impl CustomKernel {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomKernel(Arc::new(f))
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomKernel(..)")
    }
}

/// Tagged family of interaction kernels on the unit square.
#[derive(Debug, Clone)]
pub enum Graphon {
    Constant { a: f64 },
    /// Block-constant kernel from a symmetric K x K matrix (row-major),
    /// blocks [(i-1)/K, i/K).
    StepMatrix { k: usize, w: Vec<f64> },
    /// (x y)^-gamma, gamma in (0, 1/3).
    PowerLaw { gamma: f64 },
    /// g * (x y)^-gamma, gamma in (0, 1/2); g = (1-gamma)^2 normalizes the
    /// average connection strength to one.
    NormalizedPowerLaw { gamma: f64, g: f64 },
    /// min(x,y) * (1 - max(x,y)).
    MinMax,
    /// Indicator of x + y <= 1.
    SimpleThreshold,
    /// Ring lattice with rewiring; d is the wrap-around distance on the
    /// unit circle.
    WattsStrogatz { p: f64, rewire: f64 },
    Custom(CustomKernel),
}

impl Graphon {
    pub fn constant(a: f64) -> Self {
        Graphon::Constant { a }
    }

    pub fn step_matrix(w: Vec<Vec<f64>>) -> Result<Self> {
        step_graphon_from_matrix(w)
    }

    pub fn power_law(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0 / 3.0) {
            return Err(Error::InvalidParameter(format!(
                "power-law exponent must lie in (0, 1/3), got {gamma}"
            )));
        }
        Ok(Graphon::PowerLaw { gamma })
    }

    pub fn normalized_power_law(gamma: f64) -> Result<Self> {
        Self::normalized_power_law_scaled(gamma, (1.0 - gamma) * (1.0 - gamma))
    }

    pub fn normalized_power_law_scaled(gamma: f64, g: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "normalized power-law exponent must lie in (0, 1/2), got {gamma}"
            )));
        }
        if !(g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "normalized power-law scale must be positive, got {g}"
            )));
        }
        Ok(Graphon::NormalizedPowerLaw { gamma, g })
    }

    pub fn min_max() -> Self {
        Graphon::MinMax
    }

    pub fn simple_threshold() -> Self {
        Graphon::SimpleThreshold
    }

    pub fn watts_strogatz(p: f64, rewire: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("rewire", rewire)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "Watts-Strogatz {name} must lie in [0,1], got {v}"
                )));
            }
        }
        Ok(Graphon::WattsStrogatz { p, rewire })
    }

    pub fn custom(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Graphon::Custom(CustomKernel::new(f))
    }

    /// Kernel value at (x, y).
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::CoordinateOutOfRange(x, y));
        }
        Ok(match self {
            Graphon::Constant { a } => *a,
            Graphon::StepMatrix { k, w } => {
                let bi = block_index(x, *k);
                let bj = block_index(y, *k);
                w[bi * k + bj]
            }
            Graphon::PowerLaw { gamma } => {
                if x <= 0.0 || y <= 0.0 {
                    return Err(Error::CoordinateOutOfRange(x, y));
                }
                (x * y).powf(-gamma)
            }
            Graphon::NormalizedPowerLaw { gamma, g } => {
                if x <= 0.0 || y <= 0.0 {
                    return Err(Error::CoordinateOutOfRange(x, y));
                }
                g * (x * y).powf(-gamma)
            }
            Graphon::MinMax => x.min(y) * (1.0 - x.max(y)),
            Graphon::SimpleThreshold => {
                if x + y <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Graphon::WattsStrogatz { p, rewire } => {
                let d = circle_distance(x, y);
                if d <= p / 2.0 {
                    1.0 - rewire * (1.0 - p)
                } else {
                    rewire * p
                }
            }
            Graphon::Custom(f) => (f.0)(x, y),
        })
    }

    /// Nystrom discretization on the midpoint grid (see module docs for the
    /// power-law and threshold adjustments).
    pub fn discretize(&self, grid: &Grid) -> DiscretizedOperator {
        let m = grid.len();
        let mut kernel = vec![0.0; m * m];
        for i in 0..m {
            let xi = grid.point(i);
            for j in i..m {
                let v = self
                    .eval(xi, grid.point(j))
                    .expect("grid midpoints lie strictly inside (0,1)");
                kernel[i * m + j] = v;
                kernel[j * m + i] = v;
            }
        }
        if let Graphon::SimpleThreshold = self {
            // The line x + y = 1 bisects the cells on the anti-diagonal.
            for i in 0..m {
                let j = m - 1 - i;
                kernel[i * m + j] = 0.5;
            }
        }
        let weights = match self {
            Graphon::PowerLaw { gamma } | Graphon::NormalizedPowerLaw { gamma, .. } => {
                singular_weights(grid, *gamma)
            }
            _ => vec![1.0 / m as f64; m],
        };
        DiscretizedOperator {
            grid: grid.clone(),
            kernel,
            weights,
            cached_norm: OnceLock::new(),
        }
    }

    /// Sample a weighted graph: latent points are i.i.d. uniform, sorted
    /// ascending; off-diagonal entries are the kernel values.
    pub fn sample_weighted(&self, n: usize, seed: u64) -> Result<SampledGraph> {
        self.sample(n, seed, SamplingKind::Weighted)
    }

    /// Sample a simple graph: each edge is Bernoulli with the kernel value
    /// as probability. Requires a [0,1]-valued kernel.
    pub fn sample_bernoulli(&self, n: usize, seed: u64) -> Result<SampledGraph> {
        self.sample(n, seed, SamplingKind::Bernoulli)
    }

    fn sample(&self, n: usize, seed: u64, kind: SamplingKind) -> Result<SampledGraph> {
        if n == 0 {
            return Err(Error::InvalidParameter("cannot sample 0 players".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut latent: Vec<f64> = Vec::with_capacity(n);
        for _ in 0..n {
            // gen() lands in [0,1); redraw an exact 0 so singular kernels
            // stay evaluable.
            let mut u: f64 = rng.gen();
            while u == 0.0 {
                u = rng.gen();
            }
            latent.push(u);
        }
        latent.sort_by(f64::total_cmp);
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.eval(latent[i], latent[j])?;
                let entry = match kind {
                    SamplingKind::Weighted => v,
                    SamplingKind::Bernoulli => {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(Error::NotAProbability(v));
                        }
                        if rng.gen::<f64>() < v {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                w[i * n + j] = entry;
                w[j * n + i] = entry;
            }
        }
        Ok(SampledGraph { n, w, kind, latent })
    }
}

fn block_index(x: f64, k: usize) -> usize {
    ((x * k as f64).floor() as usize).min(k - 1)
}

fn circle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

/// Quadrature weights for the (xy)^-gamma families: uniform except the
/// first two cells, which are solved so that sum q_j x_j^-gamma and
/// sum q_j x_j^-2gamma reproduce the exact integrals of y^-gamma and
/// y^-2gamma. The discrete operator then acts exactly on span{1, x^-gamma}.
fn singular_weights(grid: &Grid, gamma: f64) -> Vec<f64> {
    let m = grid.len();
    let uniform = 1.0 / m as f64;
    let t1 = 1.0 / (1.0 - gamma);
    let t2 = 1.0 / (1.0 - 2.0 * gamma);
    let phi: Vec<f64> = (0..m).map(|i| grid.point(i).powf(-gamma)).collect();
    let mut q = vec![uniform; m];
    if m == 1 {
        q[0] = t1 / phi[0];
        return q;
    }
    let tail1: f64 = phi[2..].iter().sum::<f64>() * uniform;
    let tail2: f64 = phi[2..].iter().map(|p| p * p).sum::<f64>() * uniform;
    let r1 = t1 - tail1;
    let r2 = t2 - tail2;
    let det = phi[0] * phi[1] * (phi[1] - phi[0]);
    q[0] = (r1 * phi[1] * phi[1] - phi[1] * r2) / det;
    q[1] = (phi[0] * r2 - r1 * phi[0] * phi[0]) / det;
    q
}

/// Dense symmetric discretization of a graphon operator on a midpoint grid.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    grid: Grid,
    /// Row-major M x M sampled kernel, exactly symmetric.
    kernel: Vec<f64>,
    /// Per-cell quadrature weights (uniform 1/M for most families).
    weights: Vec<f64>,
    cached_norm: OnceLock<f64>,
}

/// How to evaluate the resolvent [I - theta W]^-1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolventMethod {
    /// Truncated Neumann series; valid for |theta| * ||W|| < 1.
    NeumannSeries { tol: f64, max_terms: usize },
    /// Dense LU solve of (I - theta W) r = phi.
    DirectSolve,
}

impl DiscretizedOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.grid.len() + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of the kernel along row `i` (the connection strength of
    /// player x_i).
    pub fn row_integral(&self, i: usize) -> f64 {
        let m = self.grid.len();
        self.kernel[i * m..(i + 1) * m]
            .iter()
            .zip(&self.weights)
            .map(|(a, q)| a * q)
            .sum()
    }

    fn apply_slice(&self, v: &[f64], out: &mut [f64]) {
        let m = self.grid.len();
        for i in 0..m {
            let row = &self.kernel[i * m..(i + 1) * m];
            out[i] = row
                .iter()
                .zip(&self.weights)
                .zip(v)
                .map(|((a, q), x)| a * q * x)
                .sum();
        }
    }

    /// [W p]_i = sum_j q_j A_ij p_j, the quadrature of the kernel integral.
    pub fn apply(&self, p: &GridProfile) -> Result<GridProfile> {
        if *p.grid() != self.grid {
            return Err(Error::GridMismatch(self.grid.len(), p.grid().len()));
        }
        let mut out = vec![0.0; self.grid.len()];
        self.apply_slice(p.values(), &mut out);
        GridProfile::new(self.grid.clone(), out)
    }

    /// L2 operator norm of the discretized operator: the largest absolute
    /// eigenvalue, by power iteration.
    pub fn operator_norm(&self, tol: f64, max_iter: usize) -> Result<f64> {
        if tol <= 0.0 {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        linalg::power_iteration(
            self.grid.len(),
            |v, out| self.apply_slice(v, out),
            tol,
            max_iter,
        )
    }

    /// Cached operator norm at a fixed internal tolerance; used by solver
    /// preconditions.
    pub fn norm_cached(&self) -> Result<f64> {
        if let Some(v) = self.cached_norm.get() {
            return Ok(*v);
        }
        let v = self.operator_norm(1e-11, 200_000)?;
        Ok(*self.cached_norm.get_or_init(|| v))
    }

    /// r = [I - theta W]^-1 phi, so that r - theta W r = phi.
    pub fn resolvent_apply(
        &self,
        theta: f64,
        phi: &GridProfile,
        method: ResolventMethod,
    ) -> Result<GridProfile> {
        if *phi.grid() != self.grid {
            return Err(Error::GridMismatch(self.grid.len(), phi.grid().len()));
        }
        match method {
            ResolventMethod::NeumannSeries { tol, max_terms } => {
                let norm = self.norm_cached()?;
                if theta.abs() * norm >= 1.0 {
                    return Err(Error::SpectralCondition(format!(
                        "|theta| * ||W|| = {:.6} >= 1: Neumann series diverges",
                        theta.abs() * norm
                    )));
                }
                let m = self.grid.len();
                let mut r = phi.values().to_vec();
                let mut term = phi.values().to_vec();
                let mut scratch = vec![0.0; m];
                for _ in 0..max_terms {
                    self.apply_slice(&term, &mut scratch);
                    for (t, s) in term.iter_mut().zip(&scratch) {
                        *t = theta * s;
                    }
                    for (ri, t) in r.iter_mut().zip(&term) {
                        *ri += t;
                    }
                    let norm_term =
                        (term.iter().map(|t| t * t).sum::<f64>() / m as f64).sqrt();
                    if norm_term <= tol {
                        return GridProfile::new(self.grid.clone(), r);
                    }
                }
                Err(Error::NonConvergence {
                    iterations: max_terms,
                    residual: f64::NAN,
                })
            }
            ResolventMethod::DirectSolve => {
                let m = self.grid.len();
                let mut b = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..m {
                        b[i * m + j] = -theta * self.kernel[i * m + j] * self.weights[j];
                    }
                    b[i * m + i] += 1.0;
                }
                let x = linalg::lu_solve(b, phi.values())?;
                GridProfile::new(self.grid.clone(), x)
            }
        }
    }

    /// Top-k eigenpairs by absolute eigenvalue, via power iteration with
    /// deflation. Eigenprofiles are orthonormal in the quadrature inner
    /// product (the discrete L2 inner product for uniform weights).
    pub fn eigen_decompose(&self, k: usize) -> Result<(Vec<f64>, Vec<GridProfile>)> {
        let m = self.grid.len();
        if k > m {
            return Err(Error::InvalidParameter(format!(
                "requested {k} eigenpairs from a {m}-cell grid"
            )));
        }
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .zip(&self.weights)
                .map(|((x, y), q)| q * x * y)
                .sum()
        };
        let mut eigenvalues = Vec::with_capacity(k);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut scratch = vec![0.0; m];
        for l in 0..k {
            let mut v: Vec<f64> = (0..m)
                .map(|i| 1.0 + ((i * (l + 3)) % 17) as f64 / 29.0)
                .collect();
            project_out(&mut v, &vectors, &dot);
            let mut lambda = 0.0;
            let mut degenerate = false;
            for it in 0..200_000 {
                self.apply_slice(&v, &mut scratch);
                project_out(&mut scratch, &vectors, &dot);
                let num = dot(&v, &scratch);
                let den = dot(&v, &v);
                let next = if den.abs() > 0.0 { num / den } else { 0.0 };
                let nrm = dot(&scratch, &scratch);
                if nrm.abs() < 1e-28 {
                    // Remaining operator annihilates the complement; v is a
                    // null vector.
                    lambda = 0.0;
                    degenerate = true;
                    break;
                }
                let scale = nrm.abs().sqrt();
                for (vi, si) in v.iter_mut().zip(&scratch) {
                    *vi = si / scale;
                }
                if it > 0 && (next - lambda).abs() <= 1e-13 {
                    lambda = next;
                    break;
                }
                lambda = next;
            }
            if degenerate {
                let nv = dot(&v, &v).abs().sqrt();
                if nv > 0.0 {
                    for vi in v.iter_mut() {
                        *vi /= nv;
                    }
                }
            } else {
                let nv = dot(&v, &v).abs().sqrt();
                for vi in v.iter_mut() {
                    *vi /= nv;
                }
            }
            eigenvalues.push(lambda);
            vectors.push(v);
        }
        let profiles = vectors
            .into_iter()
            .map(|v| GridProfile::new(self.grid.clone(), v))
            .collect::<Result<Vec<_>>>()?;
        Ok((eigenvalues, profiles))
    }
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>], dot: &impl Fn(&[f64], &[f64]) -> f64) {
    for e in basis {
        let c = dot(v, e);
        for (vi, ei) in v.iter_mut().zip(e) {
            *vi -= c * ei;
        }
    }
}

/// Hilbert-Schmidt norm of the kernel under the operator's quadrature:
/// sqrt(sum_ij q_i q_j A_ij^2). Reduces to sqrt((1/M^2) sum A^2) for the
/// uniform-weight families.
pub fn hs_norm(w: &Graphon, grid: &Grid) -> f64 {
    let op = w.discretize(grid);
    let m = grid.len();
    let mut acc = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            let a = op.kernel[i * m + j];
            row += op.weights[j] * a * a;
        }
        acc += op.weights[i] * row;
    }
    acc.abs().sqrt()
}

/// Map a symmetric K x K matrix to its block-constant graphon.
pub fn step_graphon_from_matrix(w: Vec<Vec<f64>>) -> Result<Graphon> {
    let k = w.len();
    if k == 0 {
        return Err(Error::InvalidParameter("empty step matrix".into()));
    }
    for (i, row) in w.iter().enumerate() {
        if row.len() != k {
            return Err(Error::InvalidParameter(format!(
                "step matrix row {i} has length {} (expected {k})",
                row.len()
            )));
        }
    }
    let mut flat = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            if w[i][j] != w[j][i] {
                return Err(Error::AsymmetricMatrix(i, j));
            }
            flat[i * k + j] = w[i][j];
        }
    }
    Ok(Graphon::StepMatrix { k, w: flat })
}

/// Bounds on the cut norm of `w1 - w2`: the lower bound scans axis-aligned
/// rectangles on a lattice, the upper bound is the Hilbert-Schmidt norm of
/// the difference. Both use uniform cell quadrature, so lower <= upper by
/// Cauchy-Schwarz.
pub fn cut_norm_bounds(
    w1: &Graphon,
    w2: &Graphon,
    grid: &Grid,
    scan_resolution: usize,
) -> Result<(f64, f64)> {
    if scan_resolution < 2 {
        return Err(Error::InvalidParameter(
            "cut-norm scan needs resolution >= 2".into(),
        ));
    }
    let m = grid.len();
    let a1 = w1.discretize(grid);
    let a2 = w2.discretize(grid);
    let cell = 1.0 / (m * m) as f64;
    let mut upper_sq = 0.0;
    // Prefix sums over cell masses: pre[i][j] = integral over [0,i/M] x [0,j/M].
    let mut pre = vec![0.0; (m + 1) * (m + 1)];
    for i in 0..m {
        let mut rowsum = 0.0;
        for j in 0..m {
            let d = a1.kernel[i * m + j] - a2.kernel[i * m + j];
            upper_sq += d * d * cell;
            rowsum += d * cell;
            pre[(i + 1) * (m + 1) + (j + 1)] = pre[i * (m + 1) + (j + 1)] + rowsum;
        }
    }
    let mut cuts: Vec<usize> = (0..=scan_resolution)
        .map(|l| ((l * m) as f64 / scan_resolution as f64).round() as usize)
        .collect();
    cuts.dedup();
    let rect = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        pre[b * (m + 1) + d] - pre[a * (m + 1) + d] - pre[b * (m + 1) + c]
            + pre[a * (m + 1) + c]
    };
    let mut lower = 0.0f64;
    for (ai, &a) in cuts.iter().enumerate() {
        for &b in &cuts[ai + 1..] {
            for (ci, &c) in cuts.iter().enumerate() {
                for &d in &cuts[ci + 1..] {
                    lower = lower.max(rect(a, b, c, d).abs());
                }
            }
        }
    }
    Ok((lower, upper_sq.sqrt()))
}

/// How a finite graph is drawn from a graphon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingKind {
    Weighted,
    Bernoulli,
}

/// A graph sampled from a graphon at sorted uniform latent points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGraph {
    n: usize,
    /// Row-major N x N symmetric weights, zero diagonal.
    w: Vec<f64>,
    kind: SamplingKind,
    /// Sorted latent points in (0,1).
    latent: Vec<f64>,
}

impl SampledGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn kind(&self) -> SamplingKind {
        self.kind
    }

    pub fn latent_points(&self) -> &[f64] {
        &self.latent
    }

    /// The evenly spaced step graphon of this graph.
    pub fn step_graphon(&self) -> Graphon {
        Graphon::StepMatrix {
            k: self.n,
            w: self.w.clone(),
        }
    }

    /// CSV edge matrix `i,j,w` over i < j plus a sidecar line holding the
    /// latent points.
    pub fn to_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "i,j,w")?;
        let latents: Vec<String> = self.latent.iter().map(|v| fmt_f64(*v)).collect();
        let kind = match self.kind {
            SamplingKind::Weighted => "weighted",
            SamplingKind::Bernoulli => "bernoulli",
        };
        writeln!(out, "# kind={} latent={}", kind, latents.join(" "))?;
        for i in 0..self.n {
            for j in i + 1..self.n {
                writeln!(out, "{},{},{}", i, j, fmt_f64(self.weight(i, j)))?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn from_csv(r: impl BufRead) -> Result<Self> {
        let mut latent = Vec::new();
        let mut kind = SamplingKind::Weighted;
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line == "i,j,w" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for tok in rest.split_whitespace() {
                    if let Some(k) = tok.strip_prefix("kind=") {
                        kind = match k {
                            "weighted" => SamplingKind::Weighted,
                            "bernoulli" => SamplingKind::Bernoulli,
                            other => return Err(Error::Parse(format!("unknown kind {other}"))),
                        };
                    } else if let Some(first) = tok.strip_prefix("latent=") {
                        latent.push(
                            first
                                .parse::<f64>()
                                .map_err(|e| Error::Parse(e.to_string()))?,
                        );
                    } else {
                        latent.push(tok.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
                    }
                }
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("bad edge row: {line}")))
            };
            let i: usize = next()?.trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let j: usize = next()?.trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let v: f64 = next()?.trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
            entries.push((i, j, v));
        }
        let n = latent.len();
        if n == 0 {
            return Err(Error::Parse("missing latent sidecar line".into()));
        }
        let mut w = vec![0.0; n * n];
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::Parse(format!("edge ({i},{j}) outside 0..{n}")));
            }
            w[i * n + j] = v;
            w[j * n + i] = v;
        }
        Ok(SampledGraph { n, w, kind, latent })
    }
}
