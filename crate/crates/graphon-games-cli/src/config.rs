//! Resolved run configuration: the union of every command's inputs, with
//! defaults applied and echoed into the manifest so a run never depends on
//! implicit state. The manifest is itself a valid `--config` document.

use graphon_games::equilibrium::{ClosedFormGame, PoaFamily};
use graphon_games::game::GameSpec;
use graphon_games::graphon::{Graphon, SamplingKind};
use graphon_games::{Error, NoiseSpec, Result};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    ClosedForm,
    Poa,
    SampleGraph,
    FiniteSolve,
    Epsilon,
    Converge,
    Stability,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Solve => "solve",
            CommandKind::ClosedForm => "closed-form",
            CommandKind::Poa => "poa",
            CommandKind::SampleGraph => "sample-graph",
            CommandKind::FiniteSolve => "finite-solve",
            CommandKind::Epsilon => "epsilon",
            CommandKind::Converge => "converge",
            CommandKind::Stability => "stability",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "solve" => CommandKind::Solve,
            "closed-form" => CommandKind::ClosedForm,
            "poa" => CommandKind::Poa,
            "sample-graph" => CommandKind::SampleGraph,
            "finite-solve" => CommandKind::FiniteSolve,
            "epsilon" => CommandKind::Epsilon,
            "converge" => CommandKind::Converge,
            "stability" => CommandKind::Stability,
            other => return Err(Error::Parse(format!("unknown command {other}"))),
        })
    }
}

/// Every knob of every command, resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub game: String,
    pub graphon: String,
    pub noise: String,
    pub grid_m: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub n_list: Vec<usize>,
    pub n: usize,
    pub kind: String,
    pub mc_samples: usize,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub beta_steps: usize,
    pub family: String,
    pub theta: f64,
    pub theta_grid: String,
    pub gamma_grid: String,
    pub perturb: String,
    pub out: PathBuf,
    pub format: String,
}

impl RunConfig {
    pub fn defaults(command: CommandKind) -> Self {
        RunConfig {
            command,
            game: "beach".into(),
            graphon: "constant:1".into(),
            noise: "pointmass".into(),
            grid_m: 1024,
            tol: 1e-10,
            max_iter: 100_000,
            seed: 1,
            seeds: vec![1],
            n_list: vec![50, 100, 200],
            n: 100,
            kind: "bernoulli".into(),
            mc_samples: 10_000,
            beta_lo: -10.0,
            beta_hi: 10.0,
            beta_steps: 41,
            family: String::new(),
            theta: 0.0,
            theta_grid: String::new(),
            gamma_grid: String::new(),
            perturb: String::new(),
            out: PathBuf::from("out"),
            format: "csv".into(),
        }
    }

    /// Render the manifest: one `key = value` line per knob, fixed order.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            s.push_str(&format!("{k} = {v}\n"));
        };
        kv("command", &self.command.name());
        kv("game", &self.game);
        kv("graphon", &self.graphon);
        kv("noise", &self.noise);
        kv("gridM", &self.grid_m);
        kv("tol", &format!("{:e}", self.tol));
        kv("maxIter", &self.max_iter);
        kv("seed", &self.seed);
        kv(
            "seeds",
            &self
                .seeds
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv(
            "Nlist",
            &self
                .n_list
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("N", &self.n);
        kv("kind", &self.kind);
        kv("mcSamples", &self.mc_samples);
        kv("betaLo", &format!("{:e}", self.beta_lo));
        kv("betaHi", &format!("{:e}", self.beta_hi));
        kv("betaSteps", &self.beta_steps);
        kv("family", &self.family);
        kv("theta", &format!("{:e}", self.theta));
        kv("thetaGrid", &self.theta_grid);
        kv("gammaGrid", &self.gamma_grid);
        kv("perturb", &self.perturb);
        kv("out", &self.out.display());
        kv("format", &self.format);
        s
    }

    /// Parse a config/manifest document.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut command = None;
        let mut cfg = RunConfig::defaults(CommandKind::Solve);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "command" => command = Some(CommandKind::parse(value)?),
                "game" => cfg.game = value.into(),
                "graphon" => cfg.graphon = value.into(),
                "noise" => cfg.noise = value.into(),
                "gridM" => cfg.grid_m = parse_num(key, value)?,
                "tol" => cfg.tol = parse_num(key, value)?,
                "maxIter" => cfg.max_iter = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "seeds" => cfg.seeds = parse_list(key, value)?,
                "Nlist" => cfg.n_list = parse_list(key, value)?,
                "N" => cfg.n = parse_num(key, value)?,
                "kind" => cfg.kind = value.into(),
                "mcSamples" => cfg.mc_samples = parse_num(key, value)?,
                "betaLo" => cfg.beta_lo = parse_num(key, value)?,
                "betaHi" => cfg.beta_hi = parse_num(key, value)?,
                "betaSteps" => cfg.beta_steps = parse_num(key, value)?,
                "family" => cfg.family = value.into(),
                "theta" => cfg.theta = parse_num(key, value)?,
                "thetaGrid" => cfg.theta_grid = value.into(),
                "gammaGrid" => cfg.gamma_grid = value.into(),
                "perturb" => cfg.perturb = value.into(),
                "out" => cfg.out = PathBuf::from(value),
                "format" => cfg.format = value.into(),
                other => return Err(Error::Parse(format!("unknown config key {other}"))),
            }
        }
        cfg.command =
            command.ok_or_else(|| Error::Parse("config file is missing `command`".into()))?;
        Ok(cfg)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_config_str(&text)
    }

    pub fn parse_game(&self) -> Result<GameSpec> {
        let spec = parse_game_spec(&self.game)?;
        Ok(spec.with_noise(parse_noise(&self.noise)?))
    }

    pub fn parse_graphon(&self) -> Result<Graphon> {
        parse_graphon_spec(&self.graphon)
    }

    pub fn parse_kind(&self) -> Result<SamplingKind> {
        match self.kind.as_str() {
            "weighted" => Ok(SamplingKind::Weighted),
            "bernoulli" => Ok(SamplingKind::Bernoulli),
            other => Err(Error::Parse(format!(
                "sampling kind must be weighted or bernoulli, got {other}"
            ))),
        }
    }

    pub fn parse_closed_form_game(&self) -> Result<ClosedFormGame> {
        let (name, params) = split_spec(&self.game);
        match name {
            "beach" => Ok(ClosedFormGame::Beach),
            "cities" => {
                let p = parse_params(params, &["k", "theta"])?;
                Ok(ClosedFormGame::Cities {
                    k: p[0],
                    theta: p[1],
                })
            }
            "cournot" => {
                let p = parse_params(params, &["a", "b", "c"])?;
                Ok(ClosedFormGame::Cournot {
                    a: p[0],
                    b: p[1],
                    c: p[2],
                })
            }
            other => Err(Error::Parse(format!(
                "no closed form for game {other} (expected beach, cities or cournot)"
            ))),
        }
    }

    pub fn parse_poa_family(&self) -> Result<PoaFamily> {
        let (name, params) = split_spec(&self.family);
        match name {
            "constant" => {
                let p = parse_params(params, &["a"])?;
                Ok(PoaFamily::ConstantStrength { a: p[0] })
            }
            "powerlaw" => {
                let p = parse_params(params, &["gamma"])?;
                Ok(PoaFamily::PowerLaw { gamma: p[0] })
            }
            "normpowerlaw" => {
                let p = parse_params(params, &["gamma"])?;
                let gamma = p[0];
                Ok(PoaFamily::NormalizedPowerLaw {
                    gamma,
                    g: (1.0 - gamma) * (1.0 - gamma),
                })
            }
            "threshold" => Ok(PoaFamily::Threshold),
            other => Err(Error::Parse(format!("unknown PoA family {other}"))),
        }
    }

    pub fn parse_perturbations(&self) -> Result<Vec<Graphon>> {
        if self.perturb.is_empty() {
            return Err(Error::Parse(
                "stability needs --perturb spec;spec;... (semicolon separated graphons)".into(),
            ));
        }
        self.perturb
            .split(';')
            .map(|s| parse_graphon_spec(s.trim()))
            .collect()
    }

    /// Parse a `lo:hi:count` range.
    pub fn parse_range(text: &str, what: &str) -> Result<Vec<f64>> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("{what} must be lo:hi:count, got {text}")));
        }
        let lo: f64 = parse_num(what, parts[0])?;
        let hi: f64 = parse_num(what, parts[1])?;
        let count: usize = parse_num(what, parts[2])?;
        if count < 2 || hi <= lo {
            return Err(Error::Parse(format!("{what} needs hi > lo and count >= 2")));
        }
        Ok((0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Parse(format!("{key}: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn split_spec(spec: &str) -> (&str, &str) {
    match spec.split_once(':') {
        Some((name, params)) => (name, params),
        None => (spec, ""),
    }
}

/// Parse `k=v,k=v` (or bare `v,v` in declaration order) against the
/// expected parameter names.
fn parse_params(params: &str, names: &[&str]) -> Result<Vec<f64>> {
    let parts: Vec<&str> = if params.is_empty() {
        Vec::new()
    } else {
        params.split(',').collect()
    };
    if parts.len() != names.len() {
        return Err(Error::Parse(format!(
            "expected parameters {}, got `{params}`",
            names.join(",")
        )));
    }
    let mut out = vec![f64::NAN; names.len()];
    for (slot, part) in parts.iter().enumerate() {
        match part.split_once('=') {
            Some((k, v)) => {
                let idx = names
                    .iter()
                    .position(|n| *n == k.trim())
                    .ok_or_else(|| Error::Parse(format!("unknown parameter {k}")))?;
                out[idx] = parse_num(k, v.trim())?;
            }
            None => out[slot] = parse_num(names[slot], part.trim())?,
        }
    }
    Ok(out)
}

/// Graphon grammar: `constant:a`, `step:r00,r01;r10,r11`, `powerlaw:gamma`,
/// `normpowerlaw:gamma[,g]`, `minmax`, `threshold`,
/// `wattsstrogatz:p=..,rewire=..`.
pub fn parse_graphon_spec(spec: &str) -> Result<Graphon> {
    let (name, params) = split_spec(spec);
    match name {
        "constant" => {
            let p = parse_params(params, &["a"])?;
            Ok(Graphon::constant(p[0]))
        }
        "step" => {
            let rows: Result<Vec<Vec<f64>>> = params
                .split(';')
                .map(|row| {
                    row.split(',')
                        .map(|v| parse_num("step entry", v.trim()))
                        .collect()
                })
                .collect();
            Graphon::step_matrix(rows?)
        }
        "powerlaw" => {
            let p = parse_params(params, &["gamma"])?;
            Graphon::power_law(p[0])
        }
        "normpowerlaw" => {
            let parts: Vec<&str> = params.split(',').collect();
            match parts.as_slice() {
                [gamma] => Graphon::normalized_power_law(parse_num("gamma", gamma.trim())?),
                [gamma, g] => Graphon::normalized_power_law_scaled(
                    parse_num("gamma", gamma.trim())?,
                    parse_num("g", g.trim())?,
                ),
                _ => Err(Error::Parse(format!(
                    "normpowerlaw takes gamma[,g], got `{params}`"
                ))),
            }
        }
        "minmax" => Ok(Graphon::min_max()),
        "threshold" => Ok(Graphon::simple_threshold()),
        "wattsstrogatz" | "ws" => {
            let p = parse_params(params, &["p", "rewire"])?;
            Graphon::watts_strogatz(p[0], p[1])
        }
        other => Err(Error::Parse(format!("unknown graphon family {other}"))),
    }
}

/// Game grammar: `beach`, `cities:k=..,theta=..`, `cournot:a=..,b=..,c=..`,
/// `file:PATH` (a game-spec config document).
pub fn parse_game_spec(spec: &str) -> Result<GameSpec> {
    let (name, params) = split_spec(spec);
    match name {
        "beach" => Ok(GameSpec::beach()),
        "cities" => {
            let p = parse_params(params, &["k", "theta"])?;
            GameSpec::cities(p[0], p[1])
        }
        "cournot" => {
            let p = parse_params(params, &["a", "b", "c"])?;
            GameSpec::cournot(p[0], p[1], p[2])
        }
        "file" => {
            let text = std::fs::read_to_string(params)?;
            GameSpec::from_config_string(&text)
        }
        other => Err(Error::Parse(format!("unknown game {other}"))),
    }
}

/// Noise grammar: `pointmass`, `gaussian:sigma`, `uniform:halfwidth`.
pub fn parse_noise(spec: &str) -> Result<NoiseSpec> {
    let (name, params) = split_spec(spec);
    match name {
        "pointmass" => Ok(NoiseSpec::PointMass),
        "gaussian" => {
            let p = parse_params(params, &["sigma"])?;
            Ok(NoiseSpec::Gaussian { sigma: p[0] })
        }
        "uniform" => {
            let p = parse_params(params, &["halfwidth"])?;
            Ok(NoiseSpec::Uniform { half_width: p[0] })
        }
        other => Err(Error::Parse(format!("unknown noise law {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let mut cfg = RunConfig::defaults(CommandKind::Poa);
        cfg.game = "cities:k=1,theta=0.25".into();
        cfg.seeds = vec![3, 5, 8];
        cfg.n_list = vec![50, 100];
        cfg.theta = 0.4;
        let manifest = cfg.manifest();
        let back = RunConfig::from_config_str(&manifest).unwrap();
        assert_eq!(manifest, back.manifest());
        assert_eq!(back.command, CommandKind::Poa);
        assert_eq!(back.seeds, vec![3, 5, 8]);
    }

    #[test]
    fn graphon_specs_parse() {
        assert!(matches!(
            parse_graphon_spec("constant:0.5").unwrap(),
            Graphon::Constant { a } if a == 0.5
        ));
        assert!(parse_graphon_spec("step:0.9,0.1;0.1,0.7").is_ok());
        assert!(parse_graphon_spec("powerlaw:0.2").is_ok());
        assert!(parse_graphon_spec("normpowerlaw:0.3").is_ok());
        assert!(parse_graphon_spec("minmax").is_ok());
        assert!(parse_graphon_spec("threshold").is_ok());
        assert!(parse_graphon_spec("wattsstrogatz:p=0.3,rewire=0.1").is_ok());
        assert!(parse_graphon_spec("nonesuch:1").is_err());
        assert!(parse_graphon_spec("powerlaw:0.5").is_err());
    }

    #[test]
    fn game_specs_parse() {
        assert!(parse_game_spec("beach").is_ok());
        let cities = parse_game_spec("cities:k=2,theta=0.3").unwrap();
        assert_eq!(cities.bundle.ell_j, 0.3);
        // Positional parameters are accepted in declaration order.
        let cities2 = parse_game_spec("cities:2,0.3").unwrap();
        assert_eq!(cities2.bundle.ell_j, 0.3);
        assert!(parse_game_spec("cournot:a=1,b=1,c=0.2").is_ok());
        assert!(parse_game_spec("poker").is_err());
        assert!(parse_game_spec("cities:k=0,theta=0.1").is_err());
    }

    #[test]
    fn game_specs_load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("game.conf");
        let spec = GameSpec::cournot(1.0, 1.0, 0.2).unwrap();
        std::fs::write(&path, spec.to_config_string().unwrap()).unwrap();
        let loaded = parse_game_spec(&format!("file:{}", path.display())).unwrap();
        assert_eq!(loaded.bundle, spec.bundle);
    }

    #[test]
    fn ranges_parse() {
        let r = RunConfig::parse_range("0:1:3", "theta").unwrap();
        assert_eq!(r, vec![0.0, 0.5, 1.0]);
        assert!(RunConfig::parse_range("1:0:3", "theta").is_err());
        assert!(RunConfig::parse_range("0:1", "theta").is_err());
    }
}
