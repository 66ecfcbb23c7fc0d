//! TOML run configuration for `tagauth simulate`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tagauth_core::simlab::{ErrorModel, ExperimentSpec, GridPoint, SchemeKind, ThresholdSource};
use tagauth_core::theory::GcqConfig;
use tagauth_core::{PolarCodeConfig, SchemeParams};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: SchemeKind,
    #[serde(default = "default_l")]
    pub l: usize,
    pub rho_t_sq: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_pfa")]
    pub target_pfa: f64,
    /// Defaults to empirical for BTP and theory otherwise.
    #[serde(default)]
    pub threshold_source: Option<ThresholdSource>,
    #[serde(default)]
    pub calibration_trials: Option<usize>,
    #[serde(default = "default_nodes")]
    pub gcq_nodes: usize,
    pub grid: GridConfig,
    #[serde(default)]
    pub error_model: ErrorModel,
    #[serde(default)]
    pub polar: Option<PolarSection>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_l() -> usize {
    64
}

fn default_pfa() -> f64 {
    0.01
}

fn default_nodes() -> usize {
    tagauth_core::theory::DEFAULT_GCQ_NODES
}

/// SNR axes in dB. Lists are zipped and must share one length; scalars broadcast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub bob_db: Axis,
    #[serde(default)]
    pub alice_db: Axis,
    #[serde(default)]
    pub eve_db: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Value(f64),
    List(Vec<f64>),
    Range(Range),
}

impl Default for Axis {
    fn default() -> Self {
        Axis::Value(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Axis {
    fn values(&self) -> Option<Vec<f64>> {
        match self {
            Axis::Value(_) => None,
            Axis::List(v) => Some(v.clone()),
            Axis::Range(r) => Some(linspace(r.from, r.to, r.points)),
        }
    }

    fn at(&self, i: usize, lists: &Option<Vec<f64>>) -> f64 {
        match (self, lists) {
            (Axis::Value(v), _) => *v,
            (_, Some(v)) => v[i],
            _ => unreachable!("list axes carry values"),
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

impl GridConfig {
    pub fn points(&self) -> CliResult<Vec<GridPoint>> {
        let axes = [&self.bob_db, &self.alice_db, &self.eve_db];
        let vals: Vec<Option<Vec<f64>>> = axes.iter().map(|a| a.values()).collect();
        let lens: Vec<usize> = vals.iter().flatten().map(Vec::len).collect();
        let n = match lens.first() {
            None => 1,
            Some(&n) if lens.iter().all(|&m| m == n) => n,
            Some(_) => return Err(CliError::Config(format!("grid axes have different lengths {lens:?}"))),
        };
        Ok((0..n)
            .map(|i| GridPoint::new(axes[0].at(i, &vals[0]), axes[1].at(i, &vals[1]), axes[2].at(i, &vals[2])))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarSection {
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_list")]
    pub list_size: usize,
    #[serde(default = "default_design")]
    pub design_snr_db: f64,
}

fn default_rate() -> f64 {
    0.5
}

fn default_list() -> usize {
    tagauth_core::polarcodec::DEFAULT_LIST_SIZE
}

fn default_design() -> f64 {
    tagauth_core::polarcodec::DEFAULT_DESIGN_SNR_DB
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File stem; defaults to the scheme name.
    #[serde(default)]
    pub stem: Option<String>,
    #[serde(default = "default_svg")]
    pub svg: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_svg() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            stem: None,
            svg: default_svg(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.scheme.name().to_string())
    }

    /// Resolves and validates the experiment this config describes.
    pub fn to_spec(&self) -> CliResult<ExperimentSpec> {
        let base = SchemeParams::for_scheme(self.scheme.scheme(), self.l, self.rho_t_sq);
        let mut spec = ExperimentSpec::new(self.scheme, base, self.grid.points()?, self.trials, self.seed);
        spec.target_pfa = self.target_pfa;
        if let Some(src) = self.threshold_source {
            spec.threshold_source = src;
        }
        spec.calibration_trials = self.calibration_trials;
        spec.error_model = self.error_model;
        spec.gcq = GcqConfig { nodes: self.gcq_nodes };
        if let Some(p) = self.polar {
            spec.polar = Some(PolarCodeConfig::construct(self.l, p.rate, p.list_size, p.design_snr_db)?);
        }
        spec.validate()?;
        for g in &spec.grid {
            g.params(&spec.params).validate()?;
        }
        Ok(spec)
    }
}
