// SPDX-License-Identifier: Apache-2.0

//! Pipeline configuration: a line-oriented `key value` file whose entries
//! command-line flags override.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cgforge::characterize::{DEFAULT_CLOCK_PERIOD_PS, DEFAULT_EPSILON_PS};
use cgforge::{GatingMode, Units};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile_path: String,
    pub netlist_path: Option<PathBuf>,
    pub stimulus_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub epsilon_ps: f64,
    pub clock_period_ps: f64,
    pub mode: GatingMode,
    pub units: Units,
    pub cycles: usize,
    pub trials: usize,
    pub perturbation: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile_path: "paper-match".into(),
            netlist_path: None,
            stimulus_path: None,
            output_dir: PathBuf::from("."),
            seed: 0,
            epsilon_ps: DEFAULT_EPSILON_PS,
            clock_period_ps: DEFAULT_CLOCK_PERIOD_PS,
            mode: GatingMode::PerFf,
            units: Units::Ns,
            cycles: 1000,
            trials: 100,
            perturbation: 0.02,
        }
    }
}

fn parse_value<V: std::str::FromStr>(path: &Path, line: usize, key: &str, raw: &str) -> Result<V, Failure>
where
    V::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| Failure::input(format!("{}:{line}: bad value for `{key}`: {e}", path.display())))
}

impl RunConfig {
    pub fn apply_file(&mut self, path: &Path) -> Result<(), Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once(char::is_whitespace) else {
                return Err(Failure::input(format!("{}:{line}: expected `key value`", path.display())));
            };
            let value = value.trim();
            match key {
                "profile" => self.profile_path = value.to_string(),
                "netlist" => self.netlist_path = Some(PathBuf::from(value)),
                "stimulus" => self.stimulus_path = Some(PathBuf::from(value)),
                "output_dir" => self.output_dir = PathBuf::from(value),
                "seed" => self.seed = parse_value(path, line, key, value)?,
                "epsilon_ps" => self.epsilon_ps = parse_value(path, line, key, value)?,
                "clock_period_ps" => self.clock_period_ps = parse_value(path, line, key, value)?,
                "mode" => self.mode = parse_value(path, line, key, value)?,
                "units" => self.units = parse_value(path, line, key, value)?,
                "cycles" => self.cycles = parse_value(path, line, key, value)?,
                "trials" => self.trials = parse_value(path, line, key, value)?,
                "perturbation" => self.perturbation = parse_value(path, line, key, value)?,
                other => return Err(Failure::input(format!("{}:{line}: unknown key `{other}`", path.display()))),
            }
        }
        Ok(())
    }

    /// Canonical `key value` rendering, the input to the digest.
    pub fn canonical(&self) -> String {
        let opt = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "-".into());
        let mut out = String::new();
        let _ = writeln!(out, "profile {}", self.profile_path);
        let _ = writeln!(out, "netlist {}", opt(&self.netlist_path));
        let _ = writeln!(out, "stimulus {}", opt(&self.stimulus_path));
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "epsilon_ps {}", self.epsilon_ps);
        let _ = writeln!(out, "clock_period_ps {}", self.clock_period_ps);
        let _ = writeln!(out, "mode {}", self.mode);
        let _ = writeln!(out, "units {}", self.units);
        let _ = writeln!(out, "cycles {}", self.cycles);
        let _ = writeln!(out, "trials {}", self.trials);
        let _ = writeln!(out, "perturbation {}", self.perturbation);
        out
    }
}

/// Hex SHA-256 of the given byte strings, each length-prefixed.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for part in parts {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// First line of every report file.
pub fn header(seed: u64, digest: &str) -> String {
    format!("# cgforge {} seed={seed} config=sha256:{digest}\n", env!("CARGO_PKG_VERSION"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_overridable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# demo\nseed 7\nmode shared\nunits ps\nclock_period_ps 2000\n").unwrap();
        let mut c = RunConfig::default();
        c.apply_file(&path).unwrap();
        assert_eq!((c.seed, c.mode, c.units, c.clock_period_ps), (7, GatingMode::Shared, Units::Ps, 2000.0));
        std::fs::write(&path, "seed seven\n").unwrap();
        assert_eq!(RunConfig::default().apply_file(&path).unwrap_err().code, 3);
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = digest(&[b"x", b"y"]);
        assert_eq!(a.len(), 64);
        assert_eq!(a, digest(&[b"x", b"y"]));
        assert_ne!(a, digest(&[b"xy"]));
        assert_eq!(
            digest(&[]),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855",
            "empty input hashes to the SHA-256 of nothing"
        );
    }
}
