//! Flat key=value configuration with command-line overrides.
//!
//! Precedence: defaults < config file (`--config path`) < command-line
//! flags. Every output row carries the FNV-1a hash of the canonical
//! serialized configuration plus the seed, so runs are attributable.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub enum ConfigError {
    Usage(String),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Usage(s) => write!(f, "usage error: {s}"),
            ConfigError::Invalid(s) => write!(f, "invalid config: {s}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: String,
    kv: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(args: &[String]) -> Result<Self, ConfigError> {
        if args.is_empty() {
            return Err(ConfigError::Usage("missing subcommand".into()));
        }
        let subcommand = args[0].clone();
        let mut kv = BTreeMap::new();
        let mut i = 1;
        let mut config_path: Option<String> = None;
        let mut overrides: Vec<(String, String)> = Vec::new();
        while i < args.len() {
            let arg = &args[i];
            let Some(stripped) = arg.strip_prefix("--") else {
                return Err(ConfigError::Usage(format!("unexpected argument '{arg}'")));
            };
            let (key, value) = if let Some((k, v)) = stripped.split_once('=') {
                (k.to_string(), v.to_string())
            } else {
                let Some(v) = args.get(i + 1) else {
                    return Err(ConfigError::Usage(format!("flag --{stripped} needs a value")));
                };
                i += 1;
                (stripped.to_string(), v.clone())
            };
            if key == "config" {
                config_path = Some(value);
            } else {
                overrides.push((key, value));
            }
            i += 1;
        }
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError::Invalid(format!("cannot read {path}: {e}")))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(ConfigError::Invalid(format!(
                        "{path}:{}: expected key=value",
                        lineno + 1
                    )));
                };
                kv.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        for (k, v) in overrides {
            kv.insert(k, v);
        }
        Ok(RunConfig { subcommand, kv })
    }

    pub fn hash(&self) -> u64 {
        let mut canonical = self.subcommand.clone();
        for (k, v) in &self.kv {
            canonical.push('\u{1}');
            canonical.push_str(k);
            canonical.push('=');
            canonical.push_str(v);
        }
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in canonical.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        h
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.kv.get(key).map(|s| s.as_str())
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.kv.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("--{key}: '{v}' is not a number"))),
        }
    }

    pub fn f64_required(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self
            .kv
            .get(key)
            .ok_or_else(|| ConfigError::Usage(format!("--{key} is required")))?;
        v.parse()
            .map_err(|_| ConfigError::Invalid(format!("--{key}: '{v}' is not a number")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.kv.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("--{key}: '{v}' is not an integer"))),
        }
    }

    pub fn u64_required(&self, key: &str) -> Result<u64, ConfigError> {
        let v = self
            .kv
            .get(key)
            .ok_or_else(|| ConfigError::Usage(format!("--{key} is required (stochastic run)")))?;
        v.parse()
            .map_err(|_| ConfigError::Invalid(format!("--{key}: '{v}' is not an integer")))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.kv.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("--{key}: '{v}' is not an integer"))),
        }
    }

    /// Comma-separated float list; must be nonempty when the key is present.
    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.kv.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let parsed: Result<Vec<f64>, _> =
                    v.split(',').map(|p| p.trim().parse::<f64>()).collect();
                let list = parsed.map_err(|_| {
                    ConfigError::Invalid(format!("--{key}: '{v}' is not a comma-separated list"))
                })?;
                if list.is_empty() {
                    return Err(ConfigError::Invalid(format!("--{key}: empty grid")));
                }
                Ok(list)
            }
        }
    }

    pub fn list_required(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        if !self.kv.contains_key(key) {
            return Err(ConfigError::Usage(format!("--{key} is required")));
        }
        let list = self.list_or(key, &[])?;
        if list.is_empty() {
            return Err(ConfigError::Invalid(format!("--{key}: empty grid")));
        }
        Ok(list)
    }
}
