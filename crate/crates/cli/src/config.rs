//! Experiment configuration files.
//!
//! A config is a TOML document with a fixed schema; unknown keys are rejected.
//! Specs inside it (kernel, coefficients) are kept as strings and parsed by the
//! core grammars, so a config echoes back exactly as written.

use std::path::Path;

use serde::{Deserialize, Serialize};
use she_core::bounds::BoundPart;
use she_core::coefficient::{Coefficient, Role};
use she_core::kernel::CorrelationKernel;
use she_core::lattice::Lattice;
use she_core::solver::{InitialData, SolverConfig, DEFAULT_BLOWUP_THRESHOLD};

use crate::error::{CliError, CliResult};
use crate::output::digest;

/// A scalar applied to every axis, or one value per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAxis<T> {
    All(T),
    Each(Vec<T>),
}

impl<T: Copy> PerAxis<T> {
    fn expand(&self, dim: usize) -> Vec<T> {
        match self {
            PerAxis::All(v) => vec![*v; dim],
            PerAxis::Each(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub dim: usize,
    pub extent: PerAxis<f64>,
    pub points: PerAxis<usize>,
}

impl LatticeSpec {
    pub fn build(&self) -> CliResult<Lattice> {
        Ok(Lattice::new(
            &self.extent.expand(self.dim),
            &self.points.expand(self.dim),
        )?)
    }

    /// Parses `dim=<d>,extent=<l>,points=<n>`.
    pub fn parse(input: &str) -> CliResult<Self> {
        let mut dim = None;
        let mut extent = None;
        let mut points = None;
        let mut pos = 0;
        for part in input.split(',') {
            let bad = |msg: String| {
                CliError::Config(format!("lattice spec `{input}` at position {pos}: {msg}"))
            };
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad("expected key=value".into()))?;
            match k.trim() {
                "dim" => dim = Some(v.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "extent" => extent = Some(v.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "points" => {
                    points = Some(v.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?)
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
            pos += part.len() + 1;
        }
        let missing =
            |k: &str| CliError::Config(format!("lattice spec `{input}` is missing `{k}`"));
        Ok(LatticeSpec {
            dim: dim.unwrap_or(1),
            extent: PerAxis::All(extent.ok_or_else(|| missing("extent"))?),
            points: PerAxis::All(points.ok_or_else(|| missing("points"))?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub drift: String,
    pub diffusion: String,
}

/// Where moments are probed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteSpec {
    /// `"origin"` or `"sup"`.
    Named(String),
    /// Offset in cells from the origin along the first axis.
    Offset(i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    pub p: Vec<f64>,
    pub times: Vec<f64>,
    pub sites: Vec<SiteSpec>,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<String>,
    /// Constant for parts (b) and (c); calibrated on the run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
}

impl MomentSpec {
    pub fn bound_parts(&self) -> CliResult<Vec<BoundPart>> {
        Ok(self
            .parts
            .iter()
            .map(|p| p.parse())
            .collect::<Result<_, _>>()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingSpec {
    pub levels: Vec<f64>,
    /// Parameters of the Chebyshev reference; omitted means no reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub p: f64,
    pub alpha: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupSpec {
    pub horizons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSpec {
    /// Snapshot time for spatial increments.
    pub space_time: f64,
    pub space_lags: Vec<usize>,
    pub base_time: f64,
    pub time_lags: Vec<f64>,
    /// Anchor offsets in cells from the origin.
    pub anchors: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times: Vec<f64>,
    /// Number of leading paths whose snapshots are written.
    #[serde(default = "one")]
    pub snapshot_paths: usize,
    /// Keep every `history_stride`-th entry of the sup-norm history.
    #[serde(default = "one")]
    pub history_stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub kernel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    pub lattice: LatticeSpec,
    pub solver: SolverSpec,
    pub coefficients: CoefficientSpec,
    pub initial: InitialData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopping: Option<StoppingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSpec>,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_PATHS: usize = 1000;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        digest(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn paths(&self) -> usize {
        self.paths.unwrap_or(DEFAULT_PATHS)
    }

    pub fn kernel(&self) -> CliResult<CorrelationKernel> {
        Ok(self.kernel.parse()?)
    }

    pub fn drift(&self) -> CliResult<Coefficient> {
        Ok(Coefficient::parse(&self.coefficients.drift, Role::Drift)?)
    }

    pub fn diffusion(&self) -> CliResult<Coefficient> {
        Ok(Coefficient::parse(
            &self.coefficients.diffusion,
            Role::Diffusion,
        )?)
    }

    pub fn solver_config(&self) -> CliResult<SolverConfig> {
        let mut cfg =
            SolverConfig::new(self.lattice.build()?, self.solver.dt, self.solver.horizon)?;
        if let Some(n) = self.solver.truncation {
            cfg = cfg.with_truncation(n)?;
        }
        cfg = cfg.with_blowup_threshold(
            self.solver
                .blowup_threshold
                .unwrap_or(DEFAULT_BLOWUP_THRESHOLD),
        )?;
        Ok(cfg)
    }

    /// Flat index of a site spec on the lattice.
    pub fn site_index(lattice: &Lattice, offset: i64) -> usize {
        lattice.shift(lattice.origin(), [offset as isize, 0])
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("config needs a [{name}] section")))
    }
}
