//! Experiment configuration: one TOML file describes one experiment run
//! (domain, measures, basis family, experiment name + parameters, seed).

use crate::error::{Error, Result};
use crate::geometry::{BasisFamily, ConvexBody, RectBox, SideMode};
use crate::measure::WeightSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub window_lo: Vec<f64>,
    pub window_hi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SideModeSpec {
    All,
    #[default]
    Dyadic,
}

impl From<SideModeSpec> for SideMode {
    fn from(s: SideModeSpec) -> SideMode {
        match s {
            SideModeSpec::All => SideMode::All,
            SideModeSpec::Dyadic => SideMode::Dyadic,
        }
    }
}

fn default_step_cells() -> usize {
    1
}

/// Declarative basis family description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BasisSpec {
    Rectangles {
        #[serde(default)]
        side_mode: SideModeSpec,
    },
    Cubes {
        #[serde(default)]
        side_mode: SideModeSpec,
    },
    /// Homothets of a disk (regular 64-gon), 2D only.
    Disk {
        /// Absolute radii, strictly decreasing; default: geometric grid from
        /// an eighth of the window down to a few cells.
        #[serde(default)]
        scales: Option<Vec<f64>>,
        #[serde(default = "default_step_cells")]
        step_cells: usize,
    },
    /// Homothets of an explicit convex polygon (2D) or interval/box.
    Polygon {
        vertices: Vec<Vec<f64>>,
        #[serde(default)]
        scales: Option<Vec<f64>>,
        #[serde(default = "default_step_cells")]
        step_cells: usize,
    },
}

/// Regular polygon approximating the unit disk.
pub fn disk_body(sides: usize) -> ConvexBody {
    let verts = (0..sides)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / sides as f64;
            vec![t.cos(), t.sin()]
        })
        .collect();
    ConvexBody::new(verts).expect("regular polygon is a valid convex body")
}

/// Default geometric scale grid: from `start` down while the body still spans
/// at least four grid cells.
pub fn default_scale_grid(window: &RectBox, resolution: usize, body_diam: f64) -> Vec<f64> {
    let min_side = (0..window.dim())
        .map(|a| window.side(a))
        .fold(f64::INFINITY, f64::min);
    let cell = min_side / resolution as f64;
    let mut s = 0.25 * min_side / body_diam;
    let mut grid = Vec::new();
    while s * body_diam >= 4.0 * cell && grid.len() < 12 {
        grid.push(s);
        s *= 0.5;
    }
    if grid.is_empty() {
        grid.push(0.25 * min_side / body_diam);
    }
    grid
}

impl BasisSpec {
    pub fn to_family(&self, window: &RectBox, resolution: usize) -> Result<BasisFamily> {
        match self {
            BasisSpec::Rectangles { side_mode } => {
                Ok(BasisFamily::rectangles().with_side_mode((*side_mode).into()))
            }
            BasisSpec::Cubes { side_mode } => {
                Ok(BasisFamily::cubes().with_side_mode((*side_mode).into()))
            }
            BasisSpec::Disk { scales, step_cells } => {
                if window.dim() != 2 {
                    return Err(Error::Config("disk basis is 2D only".into()));
                }
                let body = disk_body(64);
                let grid = match scales {
                    Some(g) => g.clone(),
                    None => default_scale_grid(window, resolution, body.diameter()),
                };
                BasisFamily::convex(body, grid, *step_cells)
            }
            BasisSpec::Polygon {
                vertices,
                scales,
                step_cells,
            } => {
                let body = ConvexBody::new(vertices.clone())?;
                let grid = match scales {
                    Some(g) => g.clone(),
                    None => default_scale_grid(window, resolution, body.diameter()),
                };
                BasisFamily::convex(body, grid, *step_cells)
            }
        }
    }
}

/// Experiment name plus free-form typed parameters (each experiment reads
/// the keys it documents, with defaults).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub resolution: usize,
    /// Output path prefix; defaults to the experiment name.
    #[serde(default)]
    pub output: Option<String>,
    pub domain: DomainSpec,
    pub measure_mu: WeightSpec,
    #[serde(default)]
    pub measure_nu: Option<WeightSpec>,
    #[serde(default)]
    pub basis: Option<BasisSpec>,
    pub experiment: ExperimentSpec,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_toml_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.resolution.is_power_of_two() {
            return Err(Error::Config(format!(
                "resolution must be a power of two, got {}",
                self.resolution
            )));
        }
        if self.domain.window_lo.len() != self.domain.window_hi.len()
            || self.domain.window_lo.is_empty()
        {
            return Err(Error::Config(
                "window bounds must match and be nonempty".into(),
            ));
        }
        for (l, h) in self.domain.window_lo.iter().zip(&self.domain.window_hi) {
            if !(l < h) {
                return Err(Error::Config("window must have positive sides".into()));
            }
        }
        Ok(())
    }

    pub fn window(&self) -> Result<RectBox> {
        RectBox::new(self.domain.window_lo.clone(), self.domain.window_hi.clone())
    }

    pub fn family(&self) -> Result<BasisFamily> {
        let window = self.window()?;
        match &self.basis {
            Some(b) => b.to_family(&window, self.resolution),
            None => Ok(BasisFamily::rectangles()),
        }
    }

    // Typed parameter accessors with defaults; wrong types are config errors.

    pub fn param_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.experiment.params.get(key) {
            None => Ok(default),
            Some(toml::Value::Float(v)) => Ok(*v),
            Some(toml::Value::Integer(v)) => Ok(*v as f64),
            Some(v) => Err(Error::Config(format!(
                "parameter {key} must be a number, got {v}"
            ))),
        }
    }

    pub fn param_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.experiment.params.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(v)) if *v >= 0 => Ok(*v as u64),
            Some(v) => Err(Error::Config(format!(
                "parameter {key} must be a non-negative integer, got {v}"
            ))),
        }
    }

    pub fn param_usize(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.param_u64(key, default as u64)? as usize)
    }

    pub fn param_str(&self, key: &str, default: &str) -> Result<String> {
        match self.experiment.params.get(key) {
            None => Ok(default.to_string()),
            Some(toml::Value::String(s)) => Ok(s.clone()),
            Some(v) => Err(Error::Config(format!(
                "parameter {key} must be a string, got {v}"
            ))),
        }
    }

    pub fn param_f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.experiment.params.get(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(x) => Ok(*x as f64),
                    other => Err(Error::Config(format!(
                        "parameter {key} must be a list of numbers, got {other}"
                    ))),
                })
                .collect(),
            Some(v) => Err(Error::Config(format!(
                "parameter {key} must be a list, got {v}"
            ))),
        }
    }

    pub fn param_u32_list(&self, key: &str, default: &[u32]) -> Result<Vec<u32>> {
        match self.experiment.params.get(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(x) if *x >= 0 => Ok(*x as u32),
                    other => Err(Error::Config(format!(
                        "parameter {key} must be a list of non-negative integers, got {other}"
                    ))),
                })
                .collect(),
            Some(v) => Err(Error::Config(format!(
                "parameter {key} must be a list, got {v}"
            ))),
        }
    }
}
