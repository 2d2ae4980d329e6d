//! Run configuration: a flat TOML document with string law tags.
//!
//! Every command reads the same schema and uses the keys it needs; unknown
//! keys are rejected. Example:
//!
//! ```toml
//! energy_law = "gaussian"
//! length_law = "poisson"
//! beta = 1.0
//! q_start = 0.05
//! q_stop = 1.0
//! q_step = 0.05
//! ```

use std::path::Path;

use redem::montecarlo::ExperimentKind;
use redem::numeric::{linspace_step, DEFAULT_TOL};
use redem::{EnergyLaw, ExperimentConfig, LengthLaw};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub energy_law: EnergyLaw,
    pub length_law: LengthLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_step: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_probe: Option<f64>,
}

fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| CliError::Invalid(format!("missing key `{key}`")))
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn emit(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Invalid(format!("cannot serialize config: {e}")))
    }

    pub fn tol(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOL)
    }

    /// Fills defaults so that the embedded config fully describes the run.
    pub fn resolved(mut self, seed_override: Option<u64>) -> Result<Self> {
        self.tolerance = Some(self.tol());
        if let Some(seed) = seed_override {
            self.master_seed = Some(seed);
        }
        if let Some(seed) = self.master_seed {
            if seed > i64::MAX as u64 {
                return Err(CliError::Invalid(format!(
                    "master_seed {seed} does not fit a TOML integer (max {})",
                    i64::MAX
                )));
            }
        }
        if !(self.tol() > 0.0) {
            return Err(CliError::Invalid("tolerance must be positive".into()));
        }
        Ok(self)
    }

    /// Positive β, as the limit tables divide by it.
    pub fn beta_positive(&self) -> Result<f64> {
        let b = require(self.beta, "beta")?;
        if b > 0.0 && b.is_finite() {
            Ok(b)
        } else {
            Err(CliError::Invalid(format!(
                "beta must be positive (got {b}); the free energy divides by beta"
            )))
        }
    }

    fn grid(start: Option<f64>, stop: Option<f64>, step: Option<f64>, name: &str) -> Result<Vec<f64>> {
        let start = require(start, &format!("{name}_start"))?;
        let stop = require(stop, &format!("{name}_stop"))?;
        let step = require(step, &format!("{name}_step"))?;
        if !(step > 0.0) || stop < start || !stop.is_finite() {
            return Err(CliError::Invalid(format!(
                "{name} grid needs {name}_step > 0 and {name}_stop >= {name}_start"
            )));
        }
        Ok(linspace_step(start, stop, step))
    }

    pub fn x_grid(&self) -> Result<Vec<f64>> {
        let g = Self::grid(self.x_start, self.x_stop, self.x_step, "x")?;
        if g[0] < 0.0 {
            return Err(CliError::Invalid("x grid must start at 0 or above".into()));
        }
        Ok(g)
    }

    pub fn q_grid(&self) -> Result<Vec<f64>> {
        let g = Self::grid(self.q_start, self.q_stop, self.q_step, "q")?;
        if !(g[0] > 0.0) {
            return Err(CliError::Invalid("q grid must start above 0".into()));
        }
        Ok(g)
    }

    pub fn single_q(&self) -> Result<f64> {
        let q = require(self.q, "q")?;
        if q > 0.0 && q.is_finite() {
            Ok(q)
        } else {
            Err(CliError::Invalid(format!("q must be positive, got {q}")))
        }
    }

    pub fn alpha_list(&self) -> Result<Vec<f64>> {
        let a = self
            .alphas
            .clone()
            .ok_or_else(|| CliError::Invalid("missing key `alphas`".into()))?;
        if a.is_empty() || a.iter().any(|&v| !(v >= 1.0)) {
            return Err(CliError::Invalid("alphas must be a nonempty list of values >= 1".into()));
        }
        Ok(a)
    }

    pub fn experiment(&self) -> Result<(ExperimentKind, ExperimentConfig)> {
        let kind = require(self.experiment, "experiment")?;
        let cfg = ExperimentConfig {
            energy_law: self.energy_law,
            length_law: self.length_law,
            m: require(self.m, "m")?,
            q: require(self.q, "q")?,
            beta: require(self.beta, "beta")?,
            k: self.k,
            replicas: require(self.replicas, "replicas")?,
            master_seed: require(self.master_seed, "master_seed")?,
            x_probe: self.x_probe,
        };
        cfg.validate()?;
        Ok((kind, cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig> {
        RunConfig::parse(s, Path::new("test.toml"))
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = parse("energy_law = \"gaussian\"\nlength_law = \"poisson\"\nbogus = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_law_tag_is_rejected() {
        assert!(parse("energy_law = \"cauchy\"\nlength_law = \"poisson\"\n").is_err());
    }

    #[test]
    fn non_integer_m_is_rejected() {
        assert!(parse("energy_law = \"gaussian\"\nlength_law = \"symmetric_binomial\"\nm = 2.5\n").is_err());
    }

    #[test]
    fn infinite_alpha_parses_and_round_trips() {
        let c = parse("energy_law = \"gaussian\"\nlength_law = \"poisson\"\nalphas = [1.0, 1e6, inf]\n").unwrap();
        assert_eq!(c.alphas.as_ref().unwrap()[2], f64::INFINITY);
        assert_eq!(parse(&c.emit().unwrap()).unwrap(), c);
    }

    #[test]
    fn zero_beta_is_rejected() {
        let c = parse("energy_law = \"gaussian\"\nlength_law = \"poisson\"\nbeta = 0.0\n").unwrap();
        let msg = c.beta_positive().unwrap_err().to_string();
        assert!(msg.contains("beta must be positive"));
    }

    #[test]
    fn seed_override_and_defaults() {
        let c = parse("energy_law = \"gaussian\"\nlength_law = \"poisson\"\nmaster_seed = 1\n")
            .unwrap()
            .resolved(Some(99))
            .unwrap();
        assert_eq!(c.master_seed, Some(99));
        assert_eq!(c.tolerance, Some(DEFAULT_TOL));
        let big = parse("energy_law = \"gaussian\"\nlength_law = \"poisson\"\n")
            .unwrap()
            .resolved(Some(u64::MAX));
        assert!(big.is_err());
    }
}
