//! TOML run configurations. Relative paths resolve against the directory of
//! the configuration file.

use std::path::{Path, PathBuf};

use chsw_core::{Descriptor, Projection};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn default_p() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub mu: PathBuf,
    pub nu: PathBuf,
    #[serde(default = "default_p")]
    pub p: f64,
    pub num_projections: usize,
    pub projection: Projection,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub sigma: Option<f64>,
    pub cov: Option<Vec<Vec<f64>>>,
}

/// Where a point cloud comes from.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    File {
        path: PathBuf,
    },
    Gaussian {
        mean: Vec<f64>,
        sigma: f64,
        n: usize,
    },
    WrappedNormal {
        manifold: Descriptor,
        mean: Vec<f64>,
        sigma: Option<f64>,
        cov: Option<Vec<Vec<f64>>>,
        n: usize,
    },
    Mixture {
        manifold: Descriptor,
        components: Vec<ComponentSpec>,
        n: usize,
    },
    SpdLogGaussian {
        manifold: Descriptor,
        base: Vec<Vec<f64>>,
        scale: f64,
        n: usize,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowRunConfig {
    pub init: SamplerSpec,
    pub target: SamplerSpec,
    pub step_size: f64,
    pub num_steps: usize,
    pub num_projections: usize,
    pub projection: Projection,
    #[serde(default)]
    pub eval_every: usize,
    #[serde(default = "default_true")]
    pub resample_directions: bool,
    #[serde(default)]
    pub exact_w2: bool,
    pub seed: Option<u64>,
    /// Directory for particle snapshots at every logged checkpoint.
    pub snapshot_dir: Option<PathBuf>,
}

fn default_scale() -> f64 {
    1.0
}

fn default_iters() -> usize {
    5000
}

fn default_mds_step() -> f64 {
    0.01
}

fn default_restarts() -> usize {
    8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdsConfig {
    /// CSV file holding the square distance matrix, no header row.
    pub distances: PathBuf,
    pub target_dim: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "default_mds_step")]
    pub step_size: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub sampler: SamplerSpec,
    pub seed: Option<u64>,
}

fn default_manifolds() -> Vec<Descriptor> {
    vec![
        Descriptor::Euclidean { dim: 3 },
        Descriptor::Lorentz {
            dim: 2,
            curvature: -1.0,
        },
        Descriptor::Poincare {
            dim: 2,
            curvature: -1.0,
        },
        Descriptor::SpdLogEuclidean { n: 2 },
    ]
}

fn default_projections() -> Vec<Projection> {
    vec![Projection::Geodesic, Projection::Horospherical]
}

fn default_sizes() -> Vec<usize> {
    vec![100, 400]
}

fn default_ls() -> Vec<usize> {
    vec![16, 64]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_manifolds")]
    pub manifolds: Vec<Descriptor>,
    #[serde(default = "default_projections")]
    pub projections: Vec<Projection>,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_ls")]
    pub num_projections: Vec<usize>,
    #[serde(default = "default_p")]
    pub p: f64,
    pub seed: Option<u64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            manifolds: default_manifolds(),
            projections: default_projections(),
            sizes: default_sizes(),
            num_projections: default_ls(),
            p: default_p(),
            seed: None,
        }
    }
}
