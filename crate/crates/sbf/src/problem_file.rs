//! JSON problem files.

use std::path::Path;

use sbf_core::expectation::{gaussian_moments, DynamicsSpec, NoiseMoments};
use sbf_core::{HyperRect, MultiPoly, Problem, RegionPartition};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_HORIZON: usize = 10;
/// Frame margin as a fraction of the shortest side of the state box.
pub const DEFAULT_FRAME_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NoiseSpec {
    /// Independent centred Gaussians, one standard deviation per dimension.
    Gaussian { sigma: Vec<f64> },
    /// Raw moment tables `E[v_j^k]`, one per dimension, starting at `k = 0`.
    Moments { tables: Vec<Vec<f64>> },
}

impl NoiseSpec {
    pub fn moments(&self, kmax: usize) -> sbf_core::Result<NoiseMoments> {
        match self {
            NoiseSpec::Gaussian { sigma } => gaussian_moments(sigma, kmax),
            NoiseSpec::Moments { tables } => NoiseMoments::new(tables.clone()),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            NoiseSpec::Gaussian { sigma } => sigma.len(),
            NoiseSpec::Moments { tables } => tables.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub dimension: usize,
    /// `x_{k+1,i} = f_i(x_k) + v_{k,i}`.
    pub dynamics: Vec<MultiPoly>,
    pub noise: NoiseSpec,
    /// State box `X`.
    pub domain: HyperRect,
    #[serde(default, rename = "unsafe")]
    pub unsafe_rects: Vec<HyperRect>,
    pub init: Vec<HyperRect>,
    /// Width of the unsafe frame around `X`; `0` disables it. Defaults to 20%
    /// of the shortest side of `X`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_margin: Option<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

impl ProblemFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let pf: ProblemFile = serde_json::from_str(&text)
            .map_err(|source| CliError::Parse { path: path.to_path_buf(), source })?;
        if pf.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema(pf.schema_version));
        }
        Ok(pf)
    }

    pub fn effective_margin(&self) -> f64 {
        self.frame_margin.unwrap_or_else(|| {
            let d = self.domain.arity();
            let shortest = (0..d).map(|j| self.domain.width(j)).fold(f64::INFINITY, f64::min);
            DEFAULT_FRAME_FRACTION * shortest
        })
    }

    pub fn partition(&self) -> sbf_core::Result<RegionPartition> {
        let margin = self.effective_margin();
        RegionPartition::from_sets(
            &self.domain,
            &self.unsafe_rects,
            &self.init,
            (margin > 0.0).then_some(margin),
        )
    }

    /// Builds the core problem with noise moments up to order `kmax`.
    pub fn to_problem(&self, kmax: usize) -> sbf_core::Result<Problem> {
        let d = self.dimension;
        let bad = |what: &str| sbf_core::Error::InvalidProblem(format!("{what} does not match dimension {d}"));
        if self.dynamics.len() != d {
            return Err(bad("number of dynamics components"));
        }
        if self.noise.arity() != d {
            return Err(bad("noise block"));
        }
        if self.domain.arity() != d {
            return Err(bad("domain"));
        }
        Problem::new(self.partition()?, DynamicsSpec::new(self.dynamics.clone())?, self.noise.moments(kmax)?)
    }

    pub fn gaussian_sigma(&self) -> Option<&[f64]> {
        match &self.noise {
            NoiseSpec::Gaussian { sigma } => Some(sigma),
            NoiseSpec::Moments { .. } => None,
        }
    }
}
