use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use tubearc::assembly::{Arrangement, DeltaSiteLattice};
use tubearc::basis::BasisKind;
use tubearc::geometry::{TubeGeometry, TubeParams};
use tubearc::quadrature::{QuadratureGrid, QuadratureSpec};
use tubearc::solver::Problem;

use crate::error::CliError;

/// Complete description of one invocation. Every field except `geometry`
/// has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    pub geometry: TubeParams,
    /// Curvature sweep; each entry overrides `kappa0`/`s0` of `geometry`.
    /// Empty means a single run of `geometry` as given.
    #[serde(default)]
    pub cases: Vec<CurvatureCase>,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureCase {
    pub kappa0: f64,
    #[serde(default)]
    pub s0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default = "default_max_m")]
    pub max_m: u32,
    #[serde(default = "default_max_n")]
    pub max_n: u32,
    #[serde(default)]
    pub kind: BasisKind,
}

fn default_max_m() -> u32 {
    2
}
fn default_max_n() -> u32 {
    4
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { max_m: default_max_m(), max_n: default_max_n(), kind: BasisKind::Complex }
    }
}

/// Delta-site lattice. Generated layouts need `per_ring` and `rings`;
/// `custom` needs `sites` as `[theta, s]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Λ₀ in meV·nm.
    pub strength: f64,
    #[serde(default = "default_arrangement")]
    pub arrangement: Arrangement,
    #[serde(default)]
    pub per_ring: Option<usize>,
    #[serde(default)]
    pub rings: Option<usize>,
    #[serde(default)]
    pub sites: Option<Vec<[f64; 2]>>,
}

fn default_arrangement() -> Arrangement {
    Arrangement::Armchair
}

impl LatticeConfig {
    pub fn build(&self, length: f64) -> Result<DeltaSiteLattice, CliError> {
        let counts = || match (self.per_ring, self.rings) {
            (Some(a), Some(r)) => Ok((a, r)),
            _ => Err(CliError::Config(format!("lattice arrangement {:?} needs per_ring and rings", self.arrangement))),
        };
        if self.arrangement != Arrangement::Custom && self.sites.is_some() {
            return Err(CliError::Config("explicit sites require arrangement \"custom\"".into()));
        }
        let lattice = match self.arrangement {
            Arrangement::Armchair => {
                let (a, r) = counts()?;
                DeltaSiteLattice::armchair(self.strength, a, r, length)
            }
            Arrangement::Staggered => {
                let (a, r) = counts()?;
                DeltaSiteLattice::staggered(self.strength, a, r, length)
            }
            Arrangement::Aligned => {
                let (a, r) = counts()?;
                DeltaSiteLattice::aligned(self.strength, a, r, length)
            }
            Arrangement::Custom => {
                let sites =
                    self.sites.as_ref().ok_or_else(|| CliError::Config("custom lattice needs a sites list".into()))?;
                let pairs: Vec<(f64, f64)> = sites.iter().map(|p| (p[0], p[1])).collect();
                DeltaSiteLattice::custom(self.strength, &pairs, length)
            }
        };
        Ok(lattice?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Lowest states listed in the energy table.
    #[serde(default = "default_states")]
    pub states: usize,
    /// State indices (0 = ground) rendered as coefficient tables.
    #[serde(default = "default_table_states")]
    pub table_states: Vec<usize>,
    #[serde(default = "default_threshold")]
    pub table_threshold: f64,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
}

fn default_states() -> usize {
    4
}
fn default_table_states() -> Vec<usize> {
    vec![0]
}
fn default_threshold() -> f64 {
    tubearc::analysis::DEFAULT_TABLE_THRESHOLD
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            states: default_states(),
            table_states: default_table_states(),
            table_threshold: default_threshold(),
            density: DensityConfig::default(),
            convergence: ConvergenceConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    #[serde(default)]
    pub state: usize,
    /// Fixed angle for a profile along s; `null` writes the full surface.
    #[serde(default = "default_theta")]
    pub theta: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_surface_theta")]
    pub surface_theta: usize,
    #[serde(default = "default_surface_s")]
    pub surface_s: usize,
}

fn default_theta() -> Option<f64> {
    Some(PI)
}
fn default_samples() -> usize {
    512
}
fn default_surface_theta() -> usize {
    128
}
fn default_surface_s() -> usize {
    256
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            state: 0,
            theta: default_theta(),
            samples: default_samples(),
            surface_theta: default_surface_theta(),
            surface_s: default_surface_s(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// `[M, N]` pairs, smallest first.
    #[serde(default = "default_bases")]
    pub bases: Vec<[u32; 2]>,
    /// Number of successive quadrature doublings compared at the configured basis.
    #[serde(default = "default_refinements")]
    pub refinements: usize,
}

fn default_bases() -> Vec<[u32; 2]> {
    vec![[1, 2], [2, 4], [3, 6], [4, 8]]
}
fn default_refinements() -> usize {
    1
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { bases: default_bases(), refinements: default_refinements() }
    }
}

/// A validated run: one [`Problem`] per curvature case.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: RunConfig,
    pub problems: Vec<Problem>,
}

impl RunConfig {
    /// Parses a config, or the `config` block of a run manifest.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("not valid JSON: {e}")))?;
        let inner = match value.get("manifest_version") {
            Some(_) => {
                value.get("config").cloned().ok_or_else(|| CliError::Config("manifest has no config block".into()))?
            }
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn geometries(&self) -> Result<Vec<TubeGeometry>, CliError> {
        let params: Vec<TubeParams> = if self.cases.is_empty() {
            vec![self.geometry]
        } else {
            self.cases.iter().map(|c| TubeParams { kappa0: c.kappa0, s0: c.s0, ..self.geometry }).collect()
        };
        params.into_iter().map(|p| TubeGeometry::from_params(p).map_err(CliError::from)).collect()
    }

    /// Checks every invariant and builds the problems without solving them.
    pub fn plan(&self) -> Result<Plan, CliError> {
        let geometries = self.geometries()?;
        let lattice = match &self.lattice {
            Some(l) => Some(l.build(self.geometry.length)?),
            None => None,
        };
        let size = (2 * self.basis.max_m as usize + 1) * self.basis.max_n as usize;
        if self.basis.max_n == 0 {
            return Err(CliError::Config("basis.max_n must be at least 1".into()));
        }
        if self.outputs.states == 0 || self.outputs.states > size {
            return Err(CliError::Config(format!("outputs.states must be in 1..={size}")));
        }
        if let Some(&bad) = self.outputs.table_states.iter().find(|&&k| k >= size) {
            return Err(CliError::Config(format!("table state {bad} exceeds basis size {size}")));
        }
        if self.outputs.table_threshold.is_nan() || self.outputs.table_threshold < 0.0 {
            return Err(CliError::Config("outputs.table_threshold must be non-negative".into()));
        }
        let problems: Vec<Problem> = geometries
            .into_iter()
            .map(|g| {
                Problem::new(g, self.basis.max_m, self.basis.max_n)
                    .with_quadrature(self.quadrature)
                    .with_kind(self.basis.kind)
                    .with_lattice(lattice.clone())
            })
            .collect();
        for p in &problems {
            let grid = QuadratureGrid::for_geometry(&p.geometry, &p.quadrature)?;
            grid.check_angular_resolution(self.basis.max_m)?;
        }
        Ok(Plan { config: self.clone(), problems })
    }
}
