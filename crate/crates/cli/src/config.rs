//! Job configuration: a `key = value` file merged with command-line overrides.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Job {
    Power,
    SampleSize,
    PrivStat,
    Compare,
}

impl Job {
    pub fn name(self) -> &'static str {
        match self {
            Job::Power => "power",
            Job::SampleSize => "samplesize",
            Job::PrivStat => "privstat",
            Job::Compare => "compare",
        }
    }
}

/// Parsed parameters for one job. Every key must be consumed by the job;
/// leftovers are reported as unknown.
#[derive(Debug)]
pub struct JobConfig {
    pub job: Job,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub plot_csv: Option<PathBuf>,
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_kv(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected `key = value`, got `{line}`", i + 1)))?;
        let key = normalize_key(k);
        if key.is_empty() {
            return Err(CliError::Config(format!("{origin}:{}: empty key", i + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_kv(&text, &path.display().to_string())
}

impl JobConfig {
    /// `file` entries are overridden by `overrides`.
    pub fn new(
        job: Job,
        file: BTreeMap<String, String>,
        overrides: BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let mut values = file;
        values.extend(overrides);
        let seed = match values.remove("seed") {
            Some(s) => s.parse().map_err(|_| CliError::Config(format!("seed: `{s}` is not an unsigned 64-bit integer")))?,
            None => 0,
        };
        let workers = match values.remove("workers") {
            Some(s) => s.parse().map_err(|_| CliError::Config(format!("workers: `{s}` is not a count")))?,
            None => 1,
        };
        if workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        let out = values.remove("out").map(PathBuf::from);
        let plot_csv = values.remove("plot_csv").map(PathBuf::from);
        Ok(Self { job, seed, workers, out, plot_csv, values, used: RefCell::default() })
    }

    /// Every parameter as given, for echoing into the result record.
    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("{key}: cannot parse `{s}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?
            .ok_or_else(|| CliError::Config(format!("missing required parameter `{key}`")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("{key}: cannot parse `{}`", part.trim())))
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    pub fn require_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        self.list(key)?
            .ok_or_else(|| CliError::Config(format!("missing required parameter `{key}`")))
    }

    /// `epsilon` and `delta` have no defaults for privacy-touching jobs.
    pub fn privacy(&self) -> Result<(f64, f64), CliError> {
        let eps = self.get::<f64>("epsilon")?;
        let delta = self.get::<f64>("delta")?;
        match (eps, delta) {
            (Some(e), Some(d)) => Ok((e, d)),
            _ => Err(CliError::Config(format!(
                "the {} job touches private data: pass --epsilon and --delta explicitly",
                self.job.name()
            ))),
        }
    }

    pub fn check_all_used(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.values.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown parameter(s) for {}: {}", self.job.name(), unknown.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let file = parse_kv("# comment\nalpha = 0.05\nGamma=0.5\n\nseed=3\n", "cfg").unwrap();
        assert_eq!(file["gamma"], "0.5");
        let mut flags = BTreeMap::new();
        flags.insert("alpha".to_string(), "0.01".to_string());
        let cfg = JobConfig::new(Job::SampleSize, file, flags).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.require::<f64>("alpha").unwrap(), 0.01);
        assert!(cfg.check_all_used().is_err());
        cfg.raw("gamma");
        assert!(cfg.check_all_used().is_ok());
    }

    #[test]
    fn bad_lines() {
        assert!(parse_kv("alpha 0.05", "cfg").is_err());
        assert!(parse_kv("=3", "cfg").is_err());
    }

    #[test]
    fn privacy_is_mandatory() {
        let cfg = JobConfig::new(Job::PrivStat, BTreeMap::new(), BTreeMap::new()).unwrap();
        assert!(cfg.privacy().is_err());
    }
}
