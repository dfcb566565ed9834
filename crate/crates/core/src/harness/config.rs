//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Every
//! diagnostic names the offending field and, when it came from a file, the line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::asymptotics::log_grid;
use crate::error::CritError;
use crate::ode::SolveConfig;
use crate::simulator::DEFAULT_CAP;
use crate::sv::{Family, ModelParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: field `{}`: {}", self.field, self.message),
            None => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            field: field.into(),
            message: message.into(),
        }
    }

    fn at(mut self, line: Option<usize>) -> Self {
        self.line = self.line.or(line);
        self
    }
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "experiment",
    "family",
    "nu",
    "a0",
    "t_list",
    "t_min",
    "t_max",
    "t_points",
    "s_list",
    "theta_min",
    "theta_max",
    "theta_points",
    "i0",
    "mc_n",
    "seed",
    "cap",
    "rel_tol",
    "abs_tol",
    "p_rows",
    "p_cols",
    "series_order",
    "trajectories",
    "out_dir",
];

/// Raw parsed pairs with the line each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line),
                    field: content.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError {
                    line: Some(line),
                    field: key.to_string(),
                    message: "unknown key".into(),
                });
            }
            if value.is_empty() {
                return Err(ConfigError {
                    line: Some(line),
                    field: key.to_string(),
                    message: "empty value".into(),
                });
            }
            if let Some((_, first)) = entries.insert(key.to_string(), (value.to_string(), line)) {
                return Err(ConfigError {
                    line: Some(line),
                    field: key.to_string(),
                    message: format!("duplicate key (first set on line {first})"),
                });
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (value.into(), 0));
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.1).filter(|&l| l > 0)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        let Some((value, _)) = self.entries.get(key) else {
            return Ok(None);
        };
        value
            .parse()
            .map(Some)
            .map_err(|_| ConfigError::new(key, format!("cannot parse `{value}`")).at(self.line(key)))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some((value, _)) = self.entries.get(key) else {
            return Ok(None);
        };
        value
            .split(',')
            .map(|v| {
                let v = v.trim();
                v.parse::<f64>()
                    .map_err(|_| ConfigError::new(key, format!("cannot parse list entry `{v}`")).at(self.line(key)))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub params: ModelParams,
    pub t_grid: Vec<f64>,
    pub s_list: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub i0: u64,
    pub mc_n: usize,
    /// Mandatory for Monte Carlo commands; see [`ExperimentConfig::require_seed`].
    pub seed: Option<u64>,
    pub cap: u64,
    pub solve: SolveConfig,
    pub p_rows: usize,
    pub p_cols: usize,
    pub series_order: usize,
    /// Number of raw trajectories to dump, 0 for none.
    pub trajectories: usize,
    pub out_dir: PathBuf,
}

fn increasing(field: &str, v: &[f64], line: Option<usize>) -> Result<(), ConfigError> {
    if v.is_empty() {
        return Err(ConfigError::new(field, "grid is empty").at(line));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConfigError::new(field, "grid must be finite and strictly increasing").at(line));
    }
    Ok(())
}

fn geometric(raw: &RawConfig, prefix: &str, default: Option<(f64, f64, usize)>) -> Result<Vec<f64>, ConfigError> {
    let (kmin, kmax, kpts) = (format!("{prefix}_min"), format!("{prefix}_max"), format!("{prefix}_points"));
    let lo: Option<f64> = raw.get(&kmin)?;
    let hi: Option<f64> = raw.get(&kmax)?;
    let n: Option<usize> = raw.get(&kpts)?;
    let (lo, hi, n) = match (lo, hi, n, default) {
        (Some(lo), Some(hi), Some(n), _) => (lo, hi, n),
        (None, None, None, Some(d)) => d,
        _ => {
            let missing = [(&kmin, lo.is_none()), (&kmax, hi.is_none()), (&kpts, n.is_none())]
                .into_iter()
                .find(|(_, m)| *m)
                .map(|(k, _)| k.clone())
                .unwrap_or(kmin.clone());
            return Err(ConfigError::new(missing, format!("{prefix} grid needs {kmin}, {kmax} and {kpts}")));
        }
    };
    let line = raw.line(&kmin);
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(ConfigError::new(&kmin, "geometric grid needs 0 < min and finite max").at(line));
    }
    match n {
        0 => Err(ConfigError::new(&kpts, "needs at least one point").at(raw.line(&kpts))),
        1 if lo == hi => Ok(vec![lo]),
        1 => Err(ConfigError::new(&kpts, "a single point needs min = max").at(raw.line(&kpts))),
        _ if hi > lo => Ok(log_grid(lo, hi, n)),
        _ => Err(ConfigError::new(&kmax, "must exceed the minimum").at(raw.line(&kmax))),
    }
}

fn param_error(raw: &RawConfig, e: CritError) -> ConfigError {
    match e {
        CritError::InvalidParameter { name, reason } => ConfigError::new(name, reason).at(raw.line(name)),
        other => ConfigError::new("config", other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let family_line = raw.line("family");
        let family: Family = match raw.entries.get("family") {
            Some((v, _)) => v.parse().map_err(|_| {
                let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
                ConfigError::new("family", format!("unknown family `{v}` (expected one of {})", names.join(", "))).at(family_line)
            })?,
            None => return Err(ConfigError::new("family", "missing")),
        };
        let nu: f64 = match family {
            Family::BinarySplitBaseline => raw.get("nu")?.unwrap_or(1.0),
            _ => raw.get("nu")?.ok_or_else(|| ConfigError::new("nu", "missing"))?,
        };
        let a0: f64 = raw.get("a0")?.ok_or_else(|| ConfigError::new("a0", "missing"))?;
        let params = ModelParams::new(family, nu, a0).map_err(|e| param_error(raw, e))?;

        let t_grid = match raw.list("t_list")? {
            Some(list) => {
                if ["t_min", "t_max", "t_points"].iter().any(|k| raw.entries.contains_key(*k)) {
                    return Err(ConfigError::new("t_list", "give either t_list or t_min/t_max/t_points").at(raw.line("t_list")));
                }
                list
            }
            None => geometric(raw, "t", None)?,
        };
        increasing("t_list", &t_grid, raw.line("t_list").or(raw.line("t_min")))?;
        if t_grid[0] < 0.0 {
            return Err(ConfigError::new("t_list", "times must be non-negative").at(raw.line("t_list")));
        }

        let s_list = raw.list("s_list")?.unwrap_or_else(|| vec![0.0]);
        increasing("s_list", &s_list, raw.line("s_list"))?;
        if s_list.iter().any(|s| !(0.0..1.0).contains(s)) {
            return Err(ConfigError::new("s_list", "values must lie in [0, 1)").at(raw.line("s_list")));
        }
        let theta_grid = geometric(raw, "theta", Some((1e-3, 1e3, 200)))?;

        let i0: u64 = raw.get("i0")?.unwrap_or(1);
        if i0 == 0 {
            return Err(ConfigError::new("i0", "must be at least 1").at(raw.line("i0")));
        }
        let mc_n: usize = raw.get("mc_n")?.unwrap_or(1000);
        if mc_n == 0 {
            return Err(ConfigError::new("mc_n", "must be at least 1").at(raw.line("mc_n")));
        }
        let cap = match raw.get::<f64>("cap")? {
            None => DEFAULT_CAP,
            Some(c) if (1.0..=9e18).contains(&c) && c.fract() == 0.0 => c as u64,
            Some(_) => return Err(ConfigError::new("cap", "must be a whole number in [1, 9e18]").at(raw.line("cap"))),
        };
        let mut solve = SolveConfig::default();
        if let Some(r) = raw.get("rel_tol")? {
            solve.rel_tol = r;
        }
        if let Some(a) = raw.get("abs_tol")? {
            solve.abs_tol = a;
        }
        solve.validate().map_err(|e| param_error(raw, e))?;
        let series_order: usize = raw.get("series_order")?.unwrap_or(crate::branching::SERIES_ORDER);
        if series_order < 2 {
            return Err(ConfigError::new("series_order", "must be at least 2").at(raw.line("series_order")));
        }
        let p_rows: usize = raw.get("p_rows")?.unwrap_or(0);
        let p_cols: usize = raw.get("p_cols")?.unwrap_or(11);
        if p_cols == 0 || p_cols > series_order + 1 {
            return Err(ConfigError::new("p_cols", format!("must lie in 1..={}", series_order + 1)).at(raw.line("p_cols")));
        }
        Ok(ExperimentConfig {
            experiment: raw.get("experiment")?.unwrap_or_else(|| "run".to_string()),
            params,
            t_grid,
            s_list,
            theta_grid,
            i0,
            mc_n,
            seed: raw.get("seed")?,
            cap,
            solve,
            p_rows,
            p_cols,
            series_order,
            trajectories: raw.get("trajectories")?.unwrap_or(0),
            out_dir: raw.get::<String>("out_dir")?.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed
            .ok_or_else(|| ConfigError::new("seed", "a seed is required for Monte Carlo runs (set `seed` or pass --seed)"))
    }
}
