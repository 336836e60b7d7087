//! TOML configuration.
//!
//! ```toml
//! [instance]                        # or [[instance]] for several
//! id = "five_node"
//! states = 5
//! base_matrix = [ ... ]             # row-major, states^2 entries
//! emission = { d_net_ms = 10.0, zeta_ms = 5.0 }   # or: delays = [..]
//! thetas = [0.1, 0.3, 0.5, 0.7, 0.9]
//! mu_bar_policy = "oracle"          # or { fixed = 1e-6 }
//! init = "stationary"               # "uniform" | { fixed = [..] }
//!
//! [experiment]
//! algorithms = ["age_aware_lucb", "markovian_uniform"]
//! deltas = [0.1, 0.01]
//! trials = 200
//! seed = 7
//! mode = "oracle_gamma"             # or "learned_gamma"
//! pull_budget = 100000000           # 0 disables the budget
//! workers = 0                       # 0 = all cores
//!
//! [instances]                       # `instances` command only
//! kappas = [1, 2, 3, 4, 5]
//!
//! [lower_bound]                     # `lower-bound` command only
//! delta = 0.01
//! epsilon = 0.1                     # optional override
//!
//! [output]
//! dir = "results"
//! ```

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::env::InitMode;
use crate::error::{Error, Result};
use crate::instance::{EmissionMap, MuBarPolicy, ProblemInstance};
use crate::learner::{Algorithm, DEFAULT_PULL_BUDGET};
use crate::markov::StochasticMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Emission {
    Affine { d_net_ms: f64, zeta_ms: f64 },
    Delays(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceConfig {
    pub id: String,
    pub states: usize,
    pub base_matrix: Vec<f64>,
    pub emission: Emission,
    pub thetas: Vec<f64>,
    pub mu_bar_policy: MuBarPolicy,
    pub init: InitMode,
}

impl InstanceConfig {
    pub fn emission_map(&self) -> Result<EmissionMap<f64>> {
        match &self.emission {
            Emission::Affine { d_net_ms, zeta_ms } => EmissionMap::affine(*d_net_ms, *zeta_ms, self.states),
            Emission::Delays(d) => EmissionMap::new(d.clone()),
        }
    }

    pub fn base(&self) -> Result<StochasticMatrix<f64>> {
        StochasticMatrix::from_row_major(self.states, self.base_matrix.clone())
    }

    pub fn build(&self) -> Result<ProblemInstance<f64>> {
        ProblemInstance::build(self.base()?, self.emission_map()?, self.thetas.clone(), self.mu_bar_policy)
    }

    pub fn with_thetas(&self, id: String, thetas: Vec<f64>) -> Self {
        Self { id, thetas, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    OracleGamma,
    LearnedGamma,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::OracleGamma => "oracle_gamma",
            Mode::LearnedGamma => "learned_gamma",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub deltas: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub mode: Mode,
    pub pull_budget: Option<u64>,
    pub workers: usize,
    /// Record real wall-clock times. Off by default so that outputs are
    /// reproducible byte for byte.
    pub wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::AgeAwareLucb],
            deltas: vec![0.01],
            trials: 200,
            seed: 0,
            mode: Mode::OracleGamma,
            pull_budget: Some(DEFAULT_PULL_BUDGET),
            workers: 0,
            wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundConfig {
    pub delta: f64,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub instances: Vec<InstanceConfig>,
    pub experiment: ExperimentConfig,
    /// Present when the config has an `[instances]` table.
    pub kappas: Option<Vec<u32>>,
    pub lower_bound: LowerBoundConfig,
    pub output_dir: Option<PathBuf>,
}

fn perr(key: &str, message: impl Into<String>) -> Error {
    Error::Parse { key: key.to_string(), message: message.into() }
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(perr(key, format!("expected a number, found {}", other.type_str()))),
    }
}

fn as_u64(v: &Value, key: &str) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        other => Err(perr(key, format!("expected a non-negative integer, found {other}"))),
    }
}

fn as_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| perr(key, format!("expected a string, found {}", v.type_str())))
}

fn as_array<'a>(v: &'a Value, key: &str) -> Result<&'a [Value]> {
    v.as_array()
        .map(|a| a.as_slice())
        .ok_or_else(|| perr(key, format!("expected an array, found {}", v.type_str())))
}

fn f64_list(v: &Value, key: &str) -> Result<Vec<f64>> {
    as_array(v, key)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_f64(x, &format!("{key}[{i}]")))
        .collect()
}

fn required<'a>(t: &'a Table, prefix: &str, name: &str) -> Result<&'a Value> {
    t.get(name).ok_or_else(|| perr(&format!("{prefix}.{name}"), "missing"))
}

fn reject_unknown(t: &Table, prefix: &str, known: &[&str]) -> Result<()> {
    match t.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(perr(&format!("{prefix}.{k}"), "unknown key")),
        None => Ok(()),
    }
}

fn parse_instance(t: &Table, p: &str, default_id: String) -> Result<InstanceConfig> {
    reject_unknown(
        t,
        p,
        &["id", "states", "base_matrix", "emission", "delays", "thetas", "mu_bar_policy", "init"],
    )?;
    let id = match t.get("id") {
        Some(v) => as_str(v, &format!("{p}.id"))?.to_string(),
        None => default_id,
    };
    let states_key = format!("{p}.states");
    let states = as_u64(required(t, p, "states")?, &states_key)? as usize;
    if states == 0 {
        return Err(perr(&states_key, "must be positive"));
    }
    let base_key = format!("{p}.base_matrix");
    let base_matrix = f64_list(required(t, p, "base_matrix")?, &base_key)?;
    if base_matrix.len() != states * states {
        return Err(perr(
            &base_key,
            format!("expected {} entries for {states} states, found {}", states * states, base_matrix.len()),
        ));
    }
    let emission = match (t.get("emission"), t.get("delays")) {
        (Some(_), Some(_)) => return Err(perr(&format!("{p}.delays"), "give either emission or delays")),
        (None, None) => return Err(perr(&format!("{p}.emission"), "missing (or give delays)")),
        (None, Some(d)) => {
            let key = format!("{p}.delays");
            let d = f64_list(d, &key)?;
            if d.len() != states {
                return Err(perr(&key, format!("expected {states} entries, found {}", d.len())));
            }
            Emission::Delays(d)
        }
        (Some(e), None) => {
            let key = format!("{p}.emission");
            let e = e.as_table().ok_or_else(|| perr(&key, "expected a table"))?;
            reject_unknown(e, &key, &["d_net_ms", "zeta_ms"])?;
            Emission::Affine {
                d_net_ms: as_f64(required(e, &key, "d_net_ms")?, &format!("{key}.d_net_ms"))?,
                zeta_ms: as_f64(required(e, &key, "zeta_ms")?, &format!("{key}.zeta_ms"))?,
            }
        }
    };
    let thetas = match t.get("thetas") {
        Some(v) => f64_list(v, &format!("{p}.thetas"))?,
        None => Vec::new(),
    };
    let mu_key = format!("{p}.mu_bar_policy");
    let mu_bar_policy = match t.get("mu_bar_policy") {
        None => MuBarPolicy::Oracle,
        Some(Value::String(s)) if s == "oracle" => MuBarPolicy::Oracle,
        Some(Value::Table(m)) => {
            reject_unknown(m, &mu_key, &["fixed"])?;
            MuBarPolicy::Fixed(as_f64(required(m, &mu_key, "fixed")?, &format!("{mu_key}.fixed"))?)
        }
        Some(other) => return Err(perr(&mu_key, format!("expected \"oracle\" or {{ fixed = x }}, found {other}"))),
    };
    let init_key = format!("{p}.init");
    let init = match t.get("init") {
        None => InitMode::Stationary,
        Some(Value::String(s)) if s == "stationary" => InitMode::Stationary,
        Some(Value::String(s)) if s == "uniform" => InitMode::Uniform,
        Some(Value::Table(m)) => {
            reject_unknown(m, &init_key, &["fixed"])?;
            let k = format!("{init_key}.fixed");
            let v = as_array(required(m, &init_key, "fixed")?, &k)?;
            InitMode::Fixed(
                v.iter()
                    .enumerate()
                    .map(|(i, x)| as_u64(x, &format!("{k}[{i}]")).map(|s| s as usize))
                    .collect::<Result<_>>()?,
            )
        }
        Some(other) => return Err(perr(&init_key, format!("unrecognized init {other}"))),
    };
    Ok(InstanceConfig { id, states, base_matrix, emission, thetas, mu_bar_policy, init })
}

fn parse_experiment(t: &Table) -> Result<ExperimentConfig> {
    let p = "experiment";
    reject_unknown(
        t,
        p,
        &["algorithms", "deltas", "trials", "seed", "mode", "pull_budget", "workers", "wall_time"],
    )?;
    let mut cfg = ExperimentConfig::default();
    if let Some(v) = t.get("algorithms") {
        let key = "experiment.algorithms";
        cfg.algorithms = as_array(v, key)?
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let k = format!("{key}[{i}]");
                as_str(a, &k)?.parse::<Algorithm>().map_err(|e| perr(&k, e.to_string()))
            })
            .collect::<Result<_>>()?;
        if cfg.algorithms.is_empty() {
            return Err(perr(key, "must list at least one algorithm"));
        }
    }
    if let Some(v) = t.get("deltas") {
        cfg.deltas = f64_list(v, "experiment.deltas")?;
        if cfg.deltas.is_empty() {
            return Err(perr("experiment.deltas", "must list at least one delta"));
        }
        if let Some(i) = cfg.deltas.iter().position(|d| !(*d > 0.0 && *d < 1.0)) {
            return Err(perr(&format!("experiment.deltas[{i}]"), "must lie in (0,1)"));
        }
    }
    if let Some(v) = t.get("trials") {
        cfg.trials = as_u64(v, "experiment.trials")?;
        if cfg.trials == 0 {
            return Err(perr("experiment.trials", "must be at least 1"));
        }
    }
    if let Some(v) = t.get("seed") {
        cfg.seed = as_u64(v, "experiment.seed")?;
    }
    if let Some(v) = t.get("mode") {
        cfg.mode = match as_str(v, "experiment.mode")? {
            "oracle_gamma" => Mode::OracleGamma,
            "learned_gamma" => Mode::LearnedGamma,
            other => return Err(perr("experiment.mode", format!("unknown mode `{other}`"))),
        };
    }
    if let Some(v) = t.get("pull_budget") {
        let b = as_u64(v, "experiment.pull_budget")?;
        cfg.pull_budget = (b > 0).then_some(b);
    }
    if let Some(v) = t.get("workers") {
        cfg.workers = as_u64(v, "experiment.workers")? as usize;
    }
    if let Some(v) = t.get("wall_time") {
        cfg.wall_time = v.as_bool().ok_or_else(|| perr("experiment.wall_time", "expected a boolean"))?;
    }
    Ok(cfg)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| {
            let key = match e.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}")
                }
                None => "<document>".to_string(),
            };
            perr(&key, e.message().to_string())
        })?;
        reject_unknown(&root, "", &["instance", "experiment", "instances", "lower_bound", "output"])
            .map_err(|e| match e {
                Error::Parse { key, message } => Error::Parse { key: key.trim_start_matches('.').into(), message },
                e => e,
            })?;
        let instances = match root.get("instance") {
            None => Vec::new(),
            Some(Value::Table(t)) => vec![parse_instance(t, "instance", "instance".into())?],
            Some(Value::Array(list)) => list
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let p = format!("instance[{i}]");
                    let t = v.as_table().ok_or_else(|| perr(&p, "expected a table"))?;
                    parse_instance(t, &p, format!("instance_{i}"))
                })
                .collect::<Result<_>>()?,
            Some(other) => return Err(perr("instance", format!("expected a table, found {}", other.type_str()))),
        };
        let mut ids: Vec<&str> = instances.iter().map(|i| i.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(perr("instance.id", format!("duplicate id `{}`", w[0])));
        }
        let table = |name: &str| -> Result<Option<&Table>> {
            match root.get(name) {
                None => Ok(None),
                Some(v) => v.as_table().map(Some).ok_or_else(|| perr(name, "expected a table")),
            }
        };
        let experiment = match table("experiment")? {
            Some(t) => parse_experiment(t)?,
            None => ExperimentConfig::default(),
        };
        let kappas = match table("instances")? {
            Some(t) => Some({
                reject_unknown(t, "instances", &["kappas"])?;
                let key = "instances.kappas";
                as_array(required(t, "instances", "kappas")?, key)?
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let k = format!("{key}[{i}]");
                        match as_u64(v, &k)? {
                            0 => Err(perr(&k, "kappa must be at least 1")),
                            x => Ok(x as u32),
                        }
                    })
                    .collect::<Result<_>>()?
            }),
            None => None,
        };
        let lower_bound = match table("lower_bound")? {
            Some(t) => {
                reject_unknown(t, "lower_bound", &["delta", "epsilon"])?;
                let delta = match t.get("delta") {
                    Some(v) => as_f64(v, "lower_bound.delta")?,
                    None => 0.01,
                };
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(perr("lower_bound.delta", "must lie in (0,1)"));
                }
                let epsilon = t.get("epsilon").map(|v| as_f64(v, "lower_bound.epsilon")).transpose()?;
                LowerBoundConfig { delta, epsilon }
            }
            None => LowerBoundConfig { delta: 0.01, epsilon: None },
        };
        let output_dir = match table("output")? {
            Some(t) => {
                reject_unknown(t, "output", &["dir"])?;
                t.get("dir").map(|v| as_str(v, "output.dir").map(PathBuf::from)).transpose()?
            }
            None => None,
        };
        Ok(Self { instances, experiment, kappas, lower_bound, output_dir })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The single instance of a one-instance config.
    /// Instances to check: the generated family for an `[instances]`
    /// config, the listed ones otherwise.
    pub fn resolved_instances(&self) -> Result<Vec<InstanceConfig>> {
        match &self.kappas {
            Some(k) => Ok(super::presets::kappa_instances(self.single_instance()?, k)),
            None => Ok(self.instances.clone()),
        }
    }

    pub fn single_instance(&self) -> Result<&InstanceConfig> {
        match self.instances.as_slice() {
            [one] => Ok(one),
            [] => Err(perr("instance", "missing")),
            _ => Err(perr("instance", "expected exactly one instance")),
        }
    }
}
