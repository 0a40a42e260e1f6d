use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cross::RowPivot;
use crate::geometry::{GeometryError, PointCloud};
use crate::h2::BasisMode;
use crate::kernel::KernelSpec;

use super::generators::{gen_cube_grid_scaled, gen_ellipsoid_surface};

/// Version of the configuration and report JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Point set of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeometrySpec {
    EllipsoidSurface {
        n: usize,
    },
    CubeGrid {
        /// Points per axis.
        n: usize,
        #[serde(default = "half")]
        half_width: f64,
    },
    /// Whitespace-separated `x y z` lines.
    File {
        path: PathBuf,
    },
}

fn half() -> f64 {
    0.5
}

impl GeometrySpec {
    pub fn generate(&self, seed: u64) -> Result<PointCloud<f64>, ConfigError> {
        Ok(match self {
            GeometrySpec::EllipsoidSurface { n } => {
                if *n < 10 {
                    return Err(ConfigError::Invalid(format!("ellipsoid needs n >= 10, got {n}")));
                }
                gen_ellipsoid_surface(*n, seed)?
            }
            GeometrySpec::CubeGrid { n, half_width } => gen_cube_grid_scaled(*n, *half_width)?,
            GeometrySpec::File { path } => PointCloud::load(path)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    H,
    H2,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dense" => Ok(Method::Dense),
            "h" => Ok(Method::H),
            "h2" => Ok(Method::H2),
            other => Err(format!("unknown method `{other}` (expected dense, h or h2)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Dense => "dense",
            Method::H => "h",
            Method::H2 => "h2",
        })
    }
}

/// One experiment: geometry, kernel, compression parameters and checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub geometry: GeometrySpec,
    #[serde(default = "newton")]
    pub kernel: KernelSpec,
    /// Value stored for coinciding points.
    #[serde(default)]
    pub diagonal: f64,
    #[serde(default = "eta")]
    pub eta: f64,
    #[serde(default = "eps")]
    pub eps: f64,
    /// Leaf size of the cluster tree and the near-field threshold.
    #[serde(default = "n_min_h")]
    pub n_min_h: usize,
    /// Admissible blocks with both sides at least this large use cluster bases.
    #[serde(default = "n_min_h2")]
    pub n_min_h2: usize,
    #[serde(default = "k_max")]
    pub k_max: usize,
    #[serde(default = "shell_samples")]
    pub shell_samples: usize,
    #[serde(default)]
    pub row_pivot: RowPivot,
    #[serde(default)]
    pub basis_mode: BasisMode,
    #[serde(default = "methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "random_vectors")]
    pub random_vectors: usize,
    /// Largest accepted relative matvec error; `10 eps` when absent.
    #[serde(default)]
    pub error_guard: Option<f64>,
    /// Replays every cross approximation on a shell three times denser than
    /// the sample shell.
    #[serde(default = "yes")]
    pub check_shell_bound: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Directory for per-cluster convergence CSV files.
    #[serde(default)]
    pub convergence_csv: Option<PathBuf>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}
fn newton() -> KernelSpec {
    KernelSpec::Newton
}
fn eta() -> f64 {
    0.8
}
fn eps() -> f64 {
    1e-4
}
fn n_min_h() -> usize {
    30
}
fn n_min_h2() -> usize {
    400
}
fn k_max() -> usize {
    150
}
fn shell_samples() -> usize {
    768
}
fn methods() -> Vec<Method> {
    vec![Method::H, Method::H2]
}
fn random_vectors() -> usize {
    5
}
fn yes() -> bool {
    true
}

impl ExperimentConfig {
    /// Defaults for everything but the geometry.
    pub fn new(geometry: GeometrySpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            geometry,
            kernel: newton(),
            diagonal: 0.0,
            eta: eta(),
            eps: eps(),
            n_min_h: n_min_h(),
            n_min_h2: n_min_h2(),
            k_max: k_max(),
            shell_samples: shell_samples(),
            row_pivot: RowPivot::default(),
            basis_mode: BasisMode::default(),
            methods: methods(),
            seed: 0,
            random_vectors: random_vectors(),
            error_guard: None,
            check_shell_bound: true,
            out: None,
            convergence_csv: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn error_limit(&self) -> f64 {
        self.error_guard.unwrap_or(10.0 * self.eps)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Invalid(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!("unsupported schema_version {}", self.schema_version));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return fail(format!("eta must be > 0, got {}", self.eta));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return fail(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if self.n_min_h == 0 || self.n_min_h2 == 0 {
            return fail("n_min_h and n_min_h2 must be >= 1".into());
        }
        if self.k_max == 0 {
            return fail("k_max must be >= 1".into());
        }
        if self.shell_samples < 8 {
            return fail(format!("shell_samples must be >= 8, got {}", self.shell_samples));
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty".into());
        }
        if !self.diagonal.is_finite() {
            return fail("diagonal must be finite".into());
        }
        if let Some(g) = self.error_guard {
            if !(g > 0.0) {
                return fail(format!("error_guard must be > 0, got {g}"));
            }
        }
        match self.geometry {
            GeometrySpec::EllipsoidSurface { n } if n < 10 => fail(format!("ellipsoid needs n >= 10, got {n}")),
            GeometrySpec::CubeGrid { n, .. } if n < 2 => fail(format!("cube grid needs n >= 2, got {n}")),
            GeometrySpec::CubeGrid { half_width, .. } if !(half_width > 0.0) => {
                fail(format!("half_width must be > 0, got {half_width}"))
            }
            _ => Ok(()),
        }
    }
}
