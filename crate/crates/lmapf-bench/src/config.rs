//! Suite configuration: a flat key-value text file.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are errors,
//! as are values outside their documented ranges. Keys and defaults:
//!
//! ```text
//! family       = maze        # random | maze | warehouse
//! width        = 20          # map width (warehouse is fixed 46x33)
//! height       = 20
//! density      = 0.0         # random-family obstacle fraction, 0..=0.3
//! maps         = 5           # number of maps; warehouse allows only 1
//! map_seed     = 0           # first map seed
//! agents       = 8,16        # agent counts to run
//! episode_len  = 512
//! solvers      = mats-lp     # mats-lp | bare-policy | random-policy-mcts | no-proximal
//! seeds        = 0,1,2,3,4   # instance / goal-stream seeds
//! expansions   = 250
//! k_proximal   = 3
//! gamma        = 0.96
//! c_explore    = 4.4
//! root_noise   = 0.6
//! fov          = 11          # odd
//! temperature  = 0.1
//! reward_scale = 1.0
//! threads      = 0           # worker threads; 0 = all cores
//! out_dir      = results
//! trace_dir    =             # optional: write per-run episode traces here
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lmapf::mapgen::Family;
use lmapf::{PlannerSettings, SearchConfig};
use thiserror::Error;

/// Solver variants the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    /// Search over the egocentric simulation, goal-chasing priors.
    MatsLp,
    /// The goal-chasing policy alone, no search.
    BarePolicy,
    /// Search with uniform priors and zero values.
    RandomPolicyMcts,
    /// Search that branches only the ego agent (k = 1).
    NoProximal,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::MatsLp,
        SolverKind::BarePolicy,
        SolverKind::RandomPolicyMcts,
        SolverKind::NoProximal,
    ];
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolverKind::MatsLp => "mats-lp",
            SolverKind::BarePolicy => "bare-policy",
            SolverKind::RandomPolicyMcts => "random-policy-mcts",
            SolverKind::NoProximal => "no-proximal",
        };
        f.write_str(s)
    }
}

impl FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mats-lp" => Ok(SolverKind::MatsLp),
            "bare-policy" => Ok(SolverKind::BarePolicy),
            "random-policy-mcts" => Ok(SolverKind::RandomPolicyMcts),
            "no-proximal" => Ok(SolverKind::NoProximal),
            other => Err(format!("unknown solver {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("config: unknown key {0:?}")]
    UnknownKey(String),
    #[error("config key {key}: {message}")]
    BadValue { key: &'static str, message: String },
    #[error("config: {0}")]
    Invalid(String),
}

/// Parsed and validated suite configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub family: Family,
    pub width: usize,
    pub height: usize,
    pub density: f64,
    pub maps: usize,
    pub map_seed: u64,
    pub agents: Vec<usize>,
    pub episode_len: u64,
    pub solvers: Vec<SolverKind>,
    pub seeds: Vec<u64>,
    pub expansions: u32,
    pub k_proximal: usize,
    pub gamma: f64,
    pub c_explore: f64,
    pub root_noise: f64,
    pub fov: usize,
    pub temperature: f64,
    pub reward_scale: f64,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub trace_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: Family::Maze,
            width: 20,
            height: 20,
            density: 0.0,
            maps: 5,
            map_seed: 0,
            agents: vec![8, 16],
            episode_len: 512,
            solvers: vec![SolverKind::MatsLp],
            seeds: vec![0, 1, 2, 3, 4],
            expansions: 250,
            k_proximal: 3,
            gamma: 0.96,
            c_explore: 4.4,
            root_noise: 0.6,
            fov: 11,
            temperature: 0.1,
            reward_scale: 1.0,
            threads: 0,
            out_dir: PathBuf::from("results"),
            trace_dir: None,
        }
    }
}

fn parse<T: FromStr>(key: &'static str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| ConfigError::BadValue {
        key,
        message: e.to_string(),
    })
}

fn parse_list<T: FromStr>(key: &'static str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse(key, t))
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::BadLine { line: number + 1, text: raw.to_string() });
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "family" => cfg.family = parse("family", value)?,
                "width" => cfg.width = parse("width", value)?,
                "height" => cfg.height = parse("height", value)?,
                "density" => cfg.density = parse("density", value)?,
                "maps" => cfg.maps = parse("maps", value)?,
                "map_seed" => cfg.map_seed = parse("map_seed", value)?,
                "agents" => cfg.agents = parse_list("agents", value)?,
                "episode_len" => cfg.episode_len = parse("episode_len", value)?,
                "solvers" => cfg.solvers = parse_list("solvers", value)?,
                "seeds" => cfg.seeds = parse_list("seeds", value)?,
                "expansions" => cfg.expansions = parse("expansions", value)?,
                "k_proximal" => cfg.k_proximal = parse("k_proximal", value)?,
                "gamma" => cfg.gamma = parse("gamma", value)?,
                "c_explore" => cfg.c_explore = parse("c_explore", value)?,
                "root_noise" => cfg.root_noise = parse("root_noise", value)?,
                "fov" => cfg.fov = parse("fov", value)?,
                "temperature" => cfg.temperature = parse("temperature", value)?,
                "reward_scale" => cfg.reward_scale = parse("reward_scale", value)?,
                "threads" => cfg.threads = parse("threads", value)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "trace_dir" => {
                    cfg.trace_dir = if value.is_empty() { None } else { Some(PathBuf::from(value)) }
                }
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Invalid(m));
        if self.family != Family::Warehouse && (self.width < 3 || self.height < 3) {
            return fail(format!("map size {}x{} too small", self.width, self.height));
        }
        if !(0.0..=0.3).contains(&self.density) {
            return fail(format!("density {} outside [0, 0.3]", self.density));
        }
        if self.maps == 0 {
            return fail("maps must be >= 1".into());
        }
        if self.family == Family::Warehouse && self.maps != 1 {
            return fail("the warehouse family has a single fixed map; set maps = 1".into());
        }
        if self.agents.is_empty() || self.agents.iter().any(|&n| n == 0) {
            return fail("agents must be a non-empty list of positive counts".into());
        }
        if self.solvers.is_empty() {
            return fail("solvers must be non-empty".into());
        }
        if self.seeds.is_empty() {
            return fail("seeds must be non-empty".into());
        }
        if self.expansions == 0 {
            return fail("expansions must be >= 1".into());
        }
        if self.k_proximal == 0 {
            return fail("k_proximal must be >= 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma {} outside (0, 1)", self.gamma));
        }
        if self.c_explore < 0.0 {
            return fail("c_explore must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.root_noise) {
            return fail(format!("root_noise {} outside [0, 1]", self.root_noise));
        }
        if self.fov % 2 == 0 || self.fov < 3 {
            return fail(format!("fov {} must be odd and >= 3", self.fov));
        }
        if self.temperature <= 0.0 {
            return fail("temperature must be > 0".into());
        }
        if self.reward_scale <= 0.0 {
            return fail("reward_scale must be > 0".into());
        }
        Ok(())
    }

    /// Planner settings for one solver variant.
    pub fn planner_settings(&self, kind: SolverKind) -> PlannerSettings {
        PlannerSettings {
            fov: self.fov,
            temperature: self.temperature,
            reward_scale: self.reward_scale,
            search: SearchConfig {
                gamma: self.gamma,
                exploration_c: self.c_explore,
                expansions: self.expansions,
                proximal_k: if kind == SolverKind::NoProximal { 1 } else { self.k_proximal },
                root_noise_eps: self.root_noise,
            },
        }
    }
}
