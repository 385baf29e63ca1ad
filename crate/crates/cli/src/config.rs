//! Plain-text run configuration: `[section]` headers and `key = value`
//! lines. Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt;

/// Keys accepted in each section.
const SECTIONS: &[(&str, &[&str])] = &[
    ("data", &["path", "label", "split", "kappa_file"]),
    (
        "model",
        &[
            "depth",
            "objective",
            "beta",
            "lambda",
            "cost_pos",
            "cost_neg",
            "alpha1",
            "alpha2",
            "dor_bound",
            "max_branch_nodes",
        ],
    ),
    ("solver", &["time_limit", "seed", "cuts", "warm_start", "node_limit", "gap_tolerance"]),
    ("output", &["dir", "export_mps", "export_lp"]),
    ("benchmark", &["datasets", "depths", "objectives", "jobs", "results"]),
];

#[derive(Debug, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parsed values keyed by bare key name (keys are unique across sections).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        let mut section: Option<&'static [&'static str]> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .find(|(s, _)| *s == name)
                        .map(|(_, keys)| *keys)
                        .ok_or_else(|| ConfigError(format!("line {}: unknown section [{name}]", ln + 1)))?,
                );
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", ln + 1)))?;
            let key = key.trim();
            let keys = section.ok_or_else(|| ConfigError(format!("line {}: {key} appears before any section", ln + 1)))?;
            if !keys.contains(&key) {
                return Err(ConfigError(format!("line {}: unknown key {key:?} in this section", ln + 1)));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| ConfigError(format!("cannot parse {key} = {v:?}"))))
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some("true" | "yes" | "on" | "1") => Ok(Some(true)),
            Some("false" | "no" | "off" | "0") => Ok(Some(false)),
            Some(v) => Err(ConfigError(format!("{key} = {v:?} is not a boolean"))),
        }
    }

    /// Comma-separated list, empty when the key is absent.
    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_values() {
        let cfg = RunConfig::parse(
            "# run\n[data]\npath = a.csv\n\n[model]\ndepth=3\nobjective = mcc\n[solver]\ncuts = no\n[benchmark]\ndepths = 2, 3\n",
        )
        .unwrap();
        assert_eq!(cfg.get("path"), Some("a.csv"));
        assert_eq!(cfg.parsed::<u32>("depth").unwrap(), Some(3));
        assert_eq!(cfg.flag("cuts").unwrap(), Some(false));
        assert_eq!(cfg.list("depths"), vec!["2", "3"]);
        assert_eq!(cfg.get("lambda"), None);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(RunConfig::parse("[model]\ndeep = 3\n").is_err());
        assert!(RunConfig::parse("[extras]\n").is_err());
        assert!(RunConfig::parse("depth = 3\n").is_err());
        assert!(RunConfig::parse("[model]\ndepth\n").is_err());
        assert!(RunConfig::parse("[model]\ndepth = x\n").unwrap().parsed::<u32>("depth").is_err());
    }
}
