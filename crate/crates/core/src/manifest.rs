//! Flat `key = value` run configuration and run manifests.
//!
//! Blank lines and `#` comments are ignored.  The configuration hash is
//! taken over the sorted entries, so it does not depend on line order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::solver::{CheckpointPolicy, ForcingProfile, ForcingSpec, InitSpec, Modulation, SolverConfig};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected 'key = value'", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::config(format!("line {}: empty key", i + 1)));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Override (or add) an entry; later calls win.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::config(format!("invalid value '{v}' for '{key}'")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<T>()
                            .map_err(|_| Error::config(format!("invalid list item '{s}' for '{key}'")))
                    })
                    .collect()
            })
            .transpose()
    }

    /// SHA-256 of the sorted `key=value` lines, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Short hash used in output file names.
    pub fn short_hash(&self) -> String {
        self.hash()[..16].to_string()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let d = SolverConfig::default();
        let seed: u64 = self.get_or("seed", 0)?;
        let initial = match self.raw("init").unwrap_or("zero") {
            "zero" => InitSpec::Zero,
            "taylor_green" => InitSpec::TaylorGreen {
                amplitude: self.get_or("init_amplitude", 1.0)?,
            },
            "spectral" => InitSpec::SpectralDecay {
                s: self.get_or("init_s", 1.75)?,
                seed,
                amplitude: self.get_or("init_amplitude", 1.0)?,
            },
            "checkpoint" => InitSpec::Checkpoint(
                self.get::<PathBuf>("init_checkpoint")?
                    .ok_or_else(|| Error::config("init = checkpoint needs init_checkpoint"))?,
            ),
            other => return Err(Error::config(format!("unknown init '{other}'"))),
        };
        let profile = match self.raw("forcing").unwrap_or("none") {
            "none" => ForcingProfile::None,
            "low_modes" => ForcingProfile::LowModes {
                grashof: self.get_or("grashof", 0.5)?,
                lambda_max: self.get_or("forcing_lambda_max", 2.0)?,
            },
            other => return Err(Error::config(format!("unknown forcing '{other}'"))),
        };
        let modulation = match self.raw("modulation").unwrap_or("steady") {
            "steady" => Modulation::Steady,
            "sinusoidal" => Modulation::Sinusoidal {
                amplitude: self.get_or("modulation_amplitude", 0.5)?,
                omega: self.get_or("modulation_omega", 1.0)?,
            },
            "ramp" => Modulation::Ramp {
                rate: self.get_or("ramp_rate", 0.1)?,
            },
            other => return Err(Error::config(format!("unknown modulation '{other}'"))),
        };
        let checkpoints = match self.get::<PathBuf>("checkpoint_dir")? {
            Some(dir) => Some(CheckpointPolicy {
                dir,
                every_steps: self.get_or("checkpoint_every", 100)?,
            }),
            None => None,
        };
        Ok(SolverConfig {
            nu: self.get_or("nu", d.nu)?,
            alpha: self.get_or("alpha", d.alpha)?,
            n: self.get_or("n", d.n)?,
            dt: self.get_or("dt", d.dt)?,
            t_end: self.get_or("t_end", d.t_end)?,
            forcing: ForcingSpec { profile, modulation },
            initial,
            output_cadence: self.get_or("output_cadence", d.output_cadence)?,
            nonlinear: self.get_or("nonlinear", d.nonlinear)?,
            cfl: self.get_or("cfl", d.cfl)?,
            cfl_substep: self.get_or("cfl_substep", d.cfl_substep)?,
            checkpoints,
        })
    }
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub basis_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: Config,
}

impl RunManifest {
    pub fn new(config: &Config, basis_path: Option<PathBuf>, output_dir: PathBuf) -> Result<Self> {
        Ok(RunManifest {
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            basis_path,
            output_dir,
            seed: config.get_or("seed", 0)?,
            started_unix: unix_now(),
            finished_unix: 0,
            config: config.clone(),
        })
    }

    pub fn finish(&mut self) {
        self.finished_unix = unix_now();
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "version = {}", self.version);
        if let Some(p) = &self.basis_path {
            let _ = writeln!(s, "basis_path = {}", p.display());
        }
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "started_unix = {}", self.started_unix);
        let _ = writeln!(s, "finished_unix = {}", self.finished_unix);
        for (k, v) in self.config.entries() {
            let _ = writeln!(s, "config.{k} = {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let all = Config::parse(text)?;
        let mut config = Config::default();
        for (k, v) in all.entries() {
            if let Some(key) = k.strip_prefix("config.") {
                config.set(key, v);
            }
        }
        let need = |k: &str| {
            all.raw(k)
                .map(str::to_string)
                .ok_or_else(|| Error::Format(format!("manifest lacks '{k}'")))
        };
        Ok(RunManifest {
            config_hash: need("config_hash")?,
            version: need("version")?,
            basis_path: all.get("basis_path")?,
            output_dir: PathBuf::from(need("output_dir")?),
            seed: all.get_or("seed", 0)?,
            started_unix: all.get_or("started_unix", 0)?,
            finished_unix: all.get_or("finished_unix", 0)?,
            config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
