//! Experiment spec files. Every grid must be non-empty; fields left out fall
//! back to the defaults below.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use prony_core::Signal;
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn one() -> Vec<f64> {
    vec![1.0]
}

fn zero() -> Vec<f64> {
    vec![0.0]
}

fn seeds() -> Vec<u64> {
    vec![0]
}

fn samples() -> usize {
    1
}

fn restarts() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSweepSpec {
    #[serde(default)]
    pub d: Vec<usize>,
    /// Defaults to every `l` in `1..=d`.
    #[serde(default)]
    pub l: Option<Vec<usize>>,
    #[serde(default)]
    pub eta: Vec<f64>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default = "one")]
    pub h: Vec<f64>,
    /// Echoed into each row; the sweep itself uses exact moments.
    #[serde(default = "zero")]
    pub epsilon: Vec<f64>,
    #[serde(default = "seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "samples")]
    pub samples: usize,
    /// Fixed signals to use instead of sampling from the `(d, eta, gamma)` grid.
    #[serde(default)]
    pub signals: Option<Vec<Signal>>,
    #[serde(default = "restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl BoundSweepSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.signals {
            Some(s) if s.is_empty() => bail!("signal list is empty"),
            Some(_) => {}
            None => {
                if self.d.is_empty() || self.eta.is_empty() || self.gamma.is_empty() {
                    bail!("grid over d, eta and gamma is empty");
                }
            }
        }
        if self.h.is_empty() || self.epsilon.is_empty() || self.seeds.is_empty() {
            bail!("grid over h, epsilon or seeds is empty");
        }
        if matches!(&self.l, Some(l) if l.is_empty()) {
            bail!("grid over l is empty");
        }
        if self.samples == 0 {
            bail!("samples must be at least 1");
        }
        if let Some(&h) = self.h.iter().find(|h| !(**h > 0.0 && **h <= 1.0)) {
            bail!("scale h = {h} outside (0, 1]");
        }
        if let Some(&e) = self.epsilon.iter().find(|e| !(**e >= 0.0)) {
            bail!("noise level epsilon = {e} must be non-negative");
        }
        Ok(())
    }
}

fn eta_default() -> Vec<f64> {
    vec![0.2]
}

fn gamma_default() -> Vec<f64> {
    vec![0.5]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankDropSpec {
    #[serde(default)]
    pub d: Vec<usize>,
    #[serde(default = "one")]
    pub h: Vec<f64>,
    #[serde(default = "zero")]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub tol: Vec<f64>,
    #[serde(default = "eta_default")]
    pub eta: Vec<f64>,
    #[serde(default = "gamma_default")]
    pub gamma: Vec<f64>,
    #[serde(default = "seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "samples")]
    pub samples: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RankDropSpec {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("d", self.d.len()),
            ("h", self.h.len()),
            ("epsilon", self.epsilon.len()),
            ("tol", self.tol.len()),
            ("eta", self.eta.len()),
            ("gamma", self.gamma.len()),
            ("seeds", self.seeds.len()),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, n)| *n == 0) {
            bail!("grid over {name} is empty");
        }
        if self.samples == 0 {
            bail!("samples must be at least 1");
        }
        if let Some(&e) = self.epsilon.iter().find(|e| !(**e >= 0.0)) {
            bail!("noise level epsilon = {e} must be non-negative");
        }
        if let Some(&t) = self.tol.iter().find(|t| !(**t >= 0.0 && **t < 1.0)) {
            bail!("rank tolerance {t} outside [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    #[serde(default)]
    pub nodes: Option<Vec<f64>>,
    #[serde(default)]
    pub branch: Option<u8>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub u_coeffs: Option<Vec<f64>>,
}
