//! Game specifications: drift, reduced cost, noise law and the Lipschitz
//! constant bundle, plus the built-in beach, cities and Cournot games and
//! the contraction/uniqueness certificates.

use crate::equilibrium::solve_aggregate_with;
use crate::function_space::GridProfile;
use crate::graphon::DiscretizedOperator;
use crate::{fmt_f64, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

/// Zero-mean noise law with finite second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    Uniform { half_width: f64 },
    PointMass,
}

impl NoiseSpec {
    /// Second moment E[xi^2].
    pub fn variance(&self) -> f64 {
        match self {
            NoiseSpec::Gaussian { sigma } => sigma * sigma,
            NoiseSpec::Uniform { half_width } => half_width * half_width / 3.0,
            NoiseSpec::PointMass => 0.0,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            NoiseSpec::Gaussian { sigma } => {
                // Box-Muller; one draw per call keeps the stream layout simple.
                let mut u1: f64 = rng.gen();
                while u1 == 0.0 {
                    u1 = rng.gen();
                }
                let u2: f64 = rng.gen();
                sigma
                    * (-2.0 * u1.ln()).sqrt()
                    * (2.0 * std::f64::consts::PI * u2).cos()
            }
            NoiseSpec::Uniform { half_width } => (2.0 * rng.gen::<f64>() - 1.0) * half_width,
            NoiseSpec::PointMass => 0.0,
        }
    }
}

type DriftFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type CostFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// State map x = b(alpha, z) + xi.
#[derive(Clone)]
pub enum DriftSpec {
    /// b(alpha, z) = alpha.
    Identity,
    /// b(alpha, z) = a0 - b1 alpha + c1 z.
    Affine { a0: f64, b1: f64, c1: f64 },
    /// Caller-supplied drift with declared joint Lipschitz constants
    /// (sqrt(c_alpha), sqrt(c_z)).
    Custom {
        b: DriftFn,
        sqrt_c_alpha: f64,
        sqrt_c_z: f64,
    },
}

impl DriftSpec {
    pub fn eval(&self, alpha: f64, z: f64) -> f64 {
        match self {
            DriftSpec::Identity => alpha,
            DriftSpec::Affine { a0, b1, c1 } => a0 - b1 * alpha + c1 * z,
            DriftSpec::Custom { b, .. } => b(alpha, z),
        }
    }

    pub fn depends_on_aggregate(&self) -> bool {
        match self {
            DriftSpec::Identity => false,
            DriftSpec::Affine { c1, .. } => *c1 != 0.0,
            DriftSpec::Custom { sqrt_c_z, .. } => *sqrt_c_z != 0.0,
        }
    }
}

impl fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftSpec::Identity => f.write_str("Identity"),
            DriftSpec::Affine { a0, b1, c1 } => {
                write!(f, "Affine {{ a0: {a0}, b1: {b1}, c1: {c1} }}")
            }
            DriftSpec::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

/// Reduced cost J(alpha, z) of a representative player.
#[derive(Clone)]
pub enum CostSpec {
    /// q2 a^2 + q1 a + qz a z + rz2 z^2 + r_const + r_noise E[xi^2].
    Quadratic {
        q2: f64,
        q1: f64,
        qz: f64,
        rz2: f64,
        r_const: f64,
        r_noise: f64,
    },
    /// Caller-supplied cost and alpha-gradient with declared constants.
    Custom {
        j: CostFn,
        dj_dalpha: CostFn,
        ell_c: f64,
        ell_j: f64,
        ell_j_tilde: f64,
    },
}

impl CostSpec {
    pub fn eval(&self, alpha: f64, z: f64, noise_second_moment: f64) -> f64 {
        match self {
            CostSpec::Quadratic {
                q2,
                q1,
                qz,
                rz2,
                r_const,
                r_noise,
            } => {
                q2 * alpha * alpha
                    + q1 * alpha
                    + qz * alpha * z
                    + rz2 * z * z
                    + r_const
                    + r_noise * noise_second_moment
            }
            CostSpec::Custom { j, .. } => j(alpha, z),
        }
    }

    pub fn grad_alpha(&self, alpha: f64, z: f64) -> f64 {
        match self {
            CostSpec::Quadratic { q2, q1, qz, .. } => 2.0 * q2 * alpha + q1 + qz * z,
            CostSpec::Custom { dj_dalpha, .. } => dj_dalpha(alpha, z),
        }
    }
}

impl fmt::Debug for CostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostSpec::Quadratic {
                q2,
                q1,
                qz,
                rz2,
                r_const,
                r_noise,
            } => write!(
                f,
                "Quadratic {{ q2: {q2}, q1: {q1}, qz: {qz}, rz2: {rz2}, r_const: {r_const}, r_noise: {r_noise} }}"
            ),
            CostSpec::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

/// Lipschitz/convexity constants the solvers and certificates consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantBundle {
    /// Squared Lipschitz constant of the drift in alpha.
    pub c_alpha: f64,
    /// Squared Lipschitz constant of the drift in z.
    pub c_z: f64,
    /// Strong convexity constant of the cost in alpha.
    pub ell_c: f64,
    /// Lipschitz constant of d_alpha J in z.
    pub ell_j: f64,
    /// Lipschitz constant of the measure-argument cost; derived for the
    /// built-ins on a working action interval (see `working_action_bound`).
    pub ell_j_tilde: f64,
    /// Uniform bound on |b|, when one exists; `None` gates the stability
    /// constant on the documented empirical fallback.
    pub c0: Option<f64>,
}

/// A complete game specification.
#[derive(Debug, Clone)]
pub struct GameSpec {
    pub drift: DriftSpec,
    pub cost: CostSpec,
    pub noise: NoiseSpec,
    pub bundle: ConstantBundle,
    /// Working action interval half-width used when deriving ell_j_tilde
    /// for quadratic costs.
    pub working_action_bound: f64,
}

const DEFAULT_ACTION_BOUND: f64 = 10.0;

/// ell_j_tilde for a quadratic cost on [-a_max, a_max]: |qz| a_max sqrt(2).
fn quadratic_ell_j_tilde(qz: f64, a_max: f64) -> f64 {
    qz.abs() * a_max * std::f64::consts::SQRT_2
}

impl GameSpec {
    /// Towel placement on the beach: quadratic cost
    /// 3 a^2 - 2 a (1 + z) + z^2 + 1 + 2 E[xi^2] with b(a, z) = a.
    pub fn beach() -> GameSpec {
        GameSpec {
            drift: DriftSpec::Identity,
            cost: CostSpec::Quadratic {
                q2: 3.0,
                q1: -2.0,
                qz: -2.0,
                rz2: 1.0,
                r_const: 1.0,
                r_noise: 2.0,
            },
            noise: NoiseSpec::PointMass,
            bundle: ConstantBundle {
                c_alpha: 1.0,
                c_z: 0.0,
                ell_c: 6.0,
                ell_j: 2.0,
                ell_j_tilde: quadratic_ell_j_tilde(-2.0, DEFAULT_ACTION_BOUND),
                c0: None,
            },
            working_action_bound: DEFAULT_ACTION_BOUND,
        }
    }

    /// City visit frequency: cost a^2/2 - k a - theta a z with b(a, z) = a.
    pub fn cities(k: f64, theta: f64) -> Result<GameSpec> {
        if !(k > 0.0) || !(theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cities game needs k > 0 and theta > 0, got k={k}, theta={theta}"
            )));
        }
        Ok(GameSpec {
            drift: DriftSpec::Identity,
            cost: CostSpec::Quadratic {
                q2: 0.5,
                q1: -k,
                qz: -theta,
                rz2: 0.0,
                r_const: 0.0,
                r_noise: 0.0,
            },
            noise: NoiseSpec::PointMass,
            bundle: ConstantBundle {
                c_alpha: 1.0,
                c_z: 0.0,
                ell_c: 1.0,
                ell_j: theta,
                ell_j_tilde: quadratic_ell_j_tilde(-theta, DEFAULT_ACTION_BOUND),
                c0: None,
            },
            working_action_bound: DEFAULT_ACTION_BOUND,
        })
    }

    /// Cournot competition: price a0 - b1 q + c1 z + xi, cost
    /// (b1 + 1/2) q^2 - (a0 + c1 z) q.
    pub fn cournot(a: f64, b: f64, c: f64) -> Result<GameSpec> {
        if !(a > 0.0) || !(b > 0.0) || !(c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cournot game needs positive parameters, got ({a}, {b}, {c})"
            )));
        }
        Ok(GameSpec {
            drift: DriftSpec::Affine { a0: a, b1: b, c1: c },
            cost: CostSpec::Quadratic {
                q2: b + 0.5,
                q1: -a,
                qz: -c,
                rz2: 0.0,
                r_const: 0.0,
                r_noise: 0.0,
            },
            noise: NoiseSpec::PointMass,
            bundle: ConstantBundle {
                c_alpha: b * b,
                c_z: c * c,
                ell_c: 2.0 * b + 1.0,
                ell_j: c,
                ell_j_tilde: quadratic_ell_j_tilde(-c, DEFAULT_ACTION_BOUND),
                c0: None,
            },
            working_action_bound: DEFAULT_ACTION_BOUND,
        })
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    /// Whether the cost is quadratic and the drift is the identity (the
    /// class with closed-form best responses and exact finite-game costs).
    pub fn is_quadratic_identity(&self) -> bool {
        matches!(self.cost, CostSpec::Quadratic { .. })
            && matches!(self.drift, DriftSpec::Identity)
    }

    /// Serialize to the plain-text configuration document. Only the
    /// tagged (non-custom) variants are serializable.
    pub fn to_config_string(&self) -> Result<String> {
        let drift = match &self.drift {
            DriftSpec::Identity => "identity".to_string(),
            DriftSpec::Affine { a0, b1, c1 } => {
                format!("affine {} {} {}", fmt_f64(*a0), fmt_f64(*b1), fmt_f64(*c1))
            }
            DriftSpec::Custom { .. } => {
                return Err(Error::Unsupported("custom drift".into()));
            }
        };
        let cost = match &self.cost {
            CostSpec::Quadratic {
                q2,
                q1,
                qz,
                rz2,
                r_const,
                r_noise,
            } => format!(
                "quadratic {} {} {} {} {} {}",
                fmt_f64(*q2),
                fmt_f64(*q1),
                fmt_f64(*qz),
                fmt_f64(*rz2),
                fmt_f64(*r_const),
                fmt_f64(*r_noise)
            ),
            CostSpec::Custom { .. } => return Err(Error::Unsupported("custom cost".into())),
        };
        let noise = match self.noise {
            NoiseSpec::Gaussian { sigma } => format!("gaussian {}", fmt_f64(sigma)),
            NoiseSpec::Uniform { half_width } => format!("uniform {}", fmt_f64(half_width)),
            NoiseSpec::PointMass => "pointmass".to_string(),
        };
        let b = &self.bundle;
        let c0 = match b.c0 {
            Some(v) => fmt_f64(v),
            None => "none".to_string(),
        };
        Ok(format!(
            "drift = {drift}\ncost = {cost}\nnoise = {noise}\nbundle = {} {} {} {} {} {}\naction_bound = {}\n",
            fmt_f64(b.c_alpha),
            fmt_f64(b.c_z),
            fmt_f64(b.ell_c),
            fmt_f64(b.ell_j),
            fmt_f64(b.ell_j_tilde),
            c0,
            fmt_f64(self.working_action_bound)
        ))
    }

    pub fn from_config_string(s: &str) -> Result<GameSpec> {
        let mut drift = None;
        let mut cost = None;
        let mut noise = None;
        let mut bundle = None;
        let mut action_bound = DEFAULT_ACTION_BOUND;
        let parse =
            |v: &str| -> Result<f64> { v.parse().map_err(|e| Error::Parse(format!("{e}: {v}"))) };
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key = value, got {line}")))?;
            let toks: Vec<&str> = value.split_whitespace().collect();
            match key.trim() {
                "drift" => {
                    drift = Some(match toks.as_slice() {
                        ["identity"] => DriftSpec::Identity,
                        ["affine", a0, b1, c1] => DriftSpec::Affine {
                            a0: parse(a0)?,
                            b1: parse(b1)?,
                            c1: parse(c1)?,
                        },
                        _ => return Err(Error::Parse(format!("bad drift: {value}"))),
                    })
                }
                "cost" => {
                    cost = Some(match toks.as_slice() {
                        ["quadratic", q2, q1, qz, rz2, rc, rn] => CostSpec::Quadratic {
                            q2: parse(q2)?,
                            q1: parse(q1)?,
                            qz: parse(qz)?,
                            rz2: parse(rz2)?,
                            r_const: parse(rc)?,
                            r_noise: parse(rn)?,
                        },
                        _ => return Err(Error::Parse(format!("bad cost: {value}"))),
                    })
                }
                "noise" => {
                    noise = Some(match toks.as_slice() {
                        ["gaussian", s] => NoiseSpec::Gaussian { sigma: parse(s)? },
                        ["uniform", h] => NoiseSpec::Uniform {
                            half_width: parse(h)?,
                        },
                        ["pointmass"] => NoiseSpec::PointMass,
                        _ => return Err(Error::Parse(format!("bad noise: {value}"))),
                    })
                }
                "bundle" => {
                    bundle = Some(match toks.as_slice() {
                        [ca, cz, lc, lj, ljt, c0] => ConstantBundle {
                            c_alpha: parse(ca)?,
                            c_z: parse(cz)?,
                            ell_c: parse(lc)?,
                            ell_j: parse(lj)?,
                            ell_j_tilde: parse(ljt)?,
                            c0: if *c0 == "none" { None } else { Some(parse(c0)?) },
                        },
                        _ => return Err(Error::Parse(format!("bad bundle: {value}"))),
                    })
                }
                "action_bound" => action_bound = parse(toks[0])?,
                other => return Err(Error::Parse(format!("unknown key {other}"))),
            }
        }
        let bundle = bundle.ok_or_else(|| Error::Parse("missing bundle".into()))?;
        if !(bundle.ell_c > 0.0) {
            return Err(Error::InvalidParameter("ell_c must be positive".into()));
        }
        Ok(GameSpec {
            drift: drift.ok_or_else(|| Error::Parse("missing drift".into()))?,
            cost: cost.ok_or_else(|| Error::Parse("missing cost".into()))?,
            noise: noise.ok_or_else(|| Error::Parse("missing noise".into()))?,
            bundle,
            working_action_bound: action_bound,
        })
    }
}

/// Existence/uniqueness certificate for a game on an operator of the given
/// norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub w_norm: f64,
    /// 1 - sqrt(c_z) ||W||; positive iff the aggregate map contracts.
    pub contraction_margin: f64,
    /// (ell_J / ell_c) sqrt(c_alpha) ||W|| / (1 - sqrt(c_z) ||W||);
    /// below one iff best response composed with the aggregate contracts.
    pub uniqueness_value: f64,
    pub contraction_ok: bool,
    pub uniqueness_ok: bool,
}

/// Evaluate the contraction and uniqueness conditions.
pub fn certify(spec: &GameSpec, w_norm: f64) -> Certificate {
    let b = &spec.bundle;
    let margin = 1.0 - b.c_z.sqrt() * w_norm;
    let contraction_ok = margin > 0.0;
    let uniqueness_value = if contraction_ok {
        (b.ell_j / b.ell_c) * b.c_alpha.sqrt() * w_norm / margin
    } else {
        f64::INFINITY
    };
    Certificate {
        w_norm,
        contraction_margin: margin,
        uniqueness_value,
        contraction_ok,
        uniqueness_ok: contraction_ok && uniqueness_value < 1.0,
    }
}

/// Outcome of the monotonicity probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonotonicityReport {
    /// Pairs whose monotonicity integrand was negative on every grid cell.
    pub violations: usize,
    pub samples: usize,
}

/// Numerically probe the monotonicity of the cost: for random profile
/// pairs, evaluate
/// J(a1, [Z a1]) - J(a1, [Z a2]) - J(a2, [Z a1]) + J(a2, [Z a2])
/// on the grid and count pairs for which it fails to be nonnegative on at
/// least one cell.
pub fn monotonicity_probe(
    spec: &GameSpec,
    op: &DiscretizedOperator,
    n_pairs: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = op.grid().clone();
    let m = grid.len();
    let nu = spec.noise.variance();
    let mut violations = 0;
    for _ in 0..n_pairs {
        let draw = |rng: &mut ChaCha8Rng| -> Result<GridProfile> {
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            GridProfile::new(grid.clone(), v)
        };
        let a1 = draw(&mut rng)?;
        let a2 = draw(&mut rng)?;
        let z1 = solve_aggregate_with(spec, op, &a1, 1e-12, 10_000, true)?;
        let z2 = solve_aggregate_with(spec, op, &a2, 1e-12, 10_000, true)?;
        let mut holds_somewhere = false;
        for i in 0..m {
            let integrand = spec.cost.eval(a1.values()[i], z1.values()[i], nu)
                - spec.cost.eval(a1.values()[i], z2.values()[i], nu)
                - spec.cost.eval(a2.values()[i], z1.values()[i], nu)
                + spec.cost.eval(a2.values()[i], z2.values()[i], nu);
            if integrand >= -1e-12 {
                holds_somewhere = true;
                break;
            }
        }
        if !holds_somewhere {
            violations += 1;
        }
    }
    Ok(MonotonicityReport {
        violations,
        samples: n_pairs,
    })
}
