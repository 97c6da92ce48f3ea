use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use super::CliError;

/// Keys accepted in a config file; each mirrors a long flag with `-`
/// replaced by `_`.
pub const CONFIG_KEYS: &[&str] = &[
    "benchmark_ticker",
    "capital_basis",
    "confidence",
    "cost_bps",
    "cost_levels",
    "data",
    "days",
    "end",
    "exhaustive",
    "gap_every",
    "gapped",
    "grid_confidences",
    "grid_multipliers",
    "grid_pairs",
    "grid_thresholds",
    "hedge_ratio",
    "jobs",
    "lag",
    "lags",
    "ledger",
    "max_lag",
    "method",
    "multiplier",
    "out",
    "pairs",
    "rank_by",
    "reentry",
    "retune_months",
    "returns",
    "scenario",
    "seed",
    "short_fee",
    "sigma",
    "start",
    "start_date",
    "stocks",
    "subperiods",
    "theta",
    "threshold",
    "top_k",
    "walk_sigma",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parses flat `key = value` text. `#` starts a comment line; blank lines
/// are skipped; keys must be known and appear once.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_start_matches('\u{feff}');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ConfigError { line: n + 1, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !CONFIG_KEYS.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(err(format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

/// Flag → config file → default resolution, remembering what was used.
#[derive(Debug, Default)]
pub struct Layers {
    file: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Layers {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Layers { file, ..Default::default() }
    }

    pub fn load(path: Option<&str>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Layers::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
        let file = parse_config(&text).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        Ok(Layers::new(file))
    }

    fn record(&self, key: &str, value: String) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    fn from_file<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.file
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Config(format!("config key `{key}`: {e}"))))
            .transpose()
    }

    pub fn get<T: FromStr + Display + Clone>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => self.from_file(key)?.unwrap_or(default),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn get_opt<T: FromStr + Display + Clone>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        self.record(key, v.as_ref().map_or(String::new(), |v| v.to_string()));
        Ok(v)
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr + Display + Clone>(&self, key: &str, flag: Option<Vec<T>>, default: Vec<T>) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(text) => parse_list(text).map_err(|e| CliError::Config(format!("config key `{key}`: {e}")))?,
                None => default,
            },
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("`{key}` needs at least one value")));
        }
        self.record(key, v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        Ok(v)
    }

    /// Resolved values in key order, as config-file text.
    pub fn render(&self) -> String {
        self.resolved.borrow().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }
}

pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("bad list item `{s}`: {e}")))
        .collect()
}
