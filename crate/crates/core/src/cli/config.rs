//! Run configuration: a JSON document whose keys mirror the fields below. Every field has a
//! default, so `{}` is a valid configuration.

use std::path::PathBuf;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dirac::Gaussian;
use crate::error::{Error, Result};
use crate::quasigreen::GreenMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Lattice constant `L`; `null` selects the value with `|Y*| = 1`.
    pub lattice_constant: Option<f64>,
    /// Disk radius as a fraction of `L`, below `1/(2√3)`.
    pub radius_fraction: f64,
    /// Trapezoid nodes per boundary circle.
    pub quadrature_n: usize,
    pub green: GreenConfig,
    /// Material contrast δ.
    pub delta: f64,
    /// Microscale ε of the wave packet.
    pub epsilon: f64,
    pub envelope: EnvelopeConfig,
    pub cone: ConeConfig,
    pub bands: BandsConfig,
    pub grid: GridConfig,
    pub evolve: EvolveConfig,
    pub packet: PacketConfig,
    pub selfcheck: SelfcheckConfig,
    pub output_dir: PathBuf,
    /// Seed for sampled test points.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenConfig {
    pub method: GreenMethod,
    pub tol: f64,
    /// Dual-space cutoff of the spectral route, in units of `2π/L`.
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeConfig {
    /// Gaussians summed into `F_1`.
    pub f1: Vec<Gaussian>,
    /// Gaussians summed into `F_2`.
    pub f2: Vec<Gaussian>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConeConfig {
    /// Largest `|β|` as a fraction of `|α*|`.
    pub fraction: f64,
    pub radii: usize,
    pub directions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandsConfig {
    /// Samples per segment of the path Γ → K → M → Γ.
    pub points_per_segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Points per axis (even).
    pub n: usize,
    /// Side length of the square, centred at the origin.
    pub span: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Final envelope time.
    pub time: f64,
    /// Number of snapshots after the initial one.
    pub snapshots: usize,
    /// Step `dt` of the residual diagnostics, as a fraction of `1/|η_#|`.
    pub residual_step: f64,
    pub format: GridFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketConfig {
    /// Time at which the ansatz is sampled, besides `t = 0`.
    pub time: f64,
    pub format: GridFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfcheckConfig {
    /// Random points per sampled suite.
    pub points: usize,
    /// Random quasimomenta for the capacitance suite.
    pub alphas: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lattice_constant: None,
            radius_fraction: 0.15,
            quadrature_n: 128,
            green: GreenConfig::default(),
            delta: 1e-4,
            epsilon: 0.1,
            envelope: EnvelopeConfig::default(),
            cone: ConeConfig::default(),
            bands: BandsConfig::default(),
            grid: GridConfig::default(),
            evolve: EvolveConfig::default(),
            packet: PacketConfig::default(),
            selfcheck: SelfcheckConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self { method: GreenMethod::Ewald, tol: 1e-12, cutoff: 40.0 }
    }
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            f1: vec![Gaussian {
                center: [0.0, 0.0],
                width: 1.0,
                amplitude: C64::new(1.0, 0.0),
                wavevector: [0.0, 0.0],
            }],
            f2: Vec::new(),
        }
    }
}

impl Default for ConeConfig {
    fn default() -> Self {
        Self { fraction: 0.05, radii: 5, directions: 8 }
    }
}

impl Default for BandsConfig {
    fn default() -> Self {
        Self { points_per_segment: 20 }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 256, span: 16.0 }
    }
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { time: 100.0, snapshots: 4, residual_step: 0.2, format: GridFormat::Csv }
    }
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self { time: 100.0, format: GridFormat::Csv }
    }
}

impl Default for SelfcheckConfig {
    fn default() -> Self {
        Self { points: 20, alphas: 5 }
    }
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), message: message.into() }
}

/// Sets `path` (dot-separated) in a JSON object tree, creating intermediate objects.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, k) in keys.iter().enumerate() {
        if k.is_empty() {
            return Err(config_error(path, "empty key segment"));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| config_error(path, format!("`{k}` is not inside an object")))?;
        if i + 1 == keys.len() {
            obj.insert(k.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one segment")
}

impl RunConfig {
    /// Parses a JSON document, applies `key=value` overrides (values parsed as JSON, falling
    /// back to strings) and validates the result.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)
            .map_err(|e| config_error("<root>", format!("malformed JSON: {e}")))?;
        if !value.is_object() {
            return Err(config_error("<root>", "configuration must be a JSON object"));
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| config_error(o, "override must have the form key=value"))?;
            let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            set_path(&mut value, k, v)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let key = e.path().to_string();
            config_error(&key, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(config_error(key, format!("must be positive and finite, got {v}")))
            }
        };
        if let Some(l) = self.lattice_constant {
            positive("lattice_constant", l)?;
        }
        positive("radius_fraction", self.radius_fraction)?;
        let bound = 1.0 / (2.0 * 3f64.sqrt());
        if self.radius_fraction >= bound {
            return Err(config_error(
                "radius_fraction",
                format!(
                    "{} leaves the disks overlapping their neighbours; it must be below 1/(2√3) ≈ {bound:.6}",
                    self.radius_fraction
                ),
            ));
        }
        if self.quadrature_n < 16 || self.quadrature_n % 2 != 0 {
            return Err(config_error("quadrature_n", "must be even and at least 16"));
        }
        positive("green.tol", self.green.tol)?;
        positive("green.cutoff", self.green.cutoff)?;
        positive("delta", self.delta)?;
        positive("epsilon", self.epsilon)?;
        for (name, list) in [("envelope.f1", &self.envelope.f1), ("envelope.f2", &self.envelope.f2)] {
            for (i, g) in list.iter().enumerate() {
                positive(&format!("{name}[{i}].width"), g.width)?;
            }
        }
        if !(self.cone.fraction > 0.0 && self.cone.fraction < 1.0) {
            return Err(config_error("cone.fraction", "must lie in (0, 1)"));
        }
        if self.cone.radii < 3 {
            return Err(config_error("cone.radii", "at least 3 radii are needed"));
        }
        if self.cone.directions < 4 {
            return Err(config_error("cone.directions", "at least 4 directions are needed"));
        }
        if self.bands.points_per_segment == 0 {
            return Err(config_error("bands.points_per_segment", "must be at least 1"));
        }
        if self.grid.n < 4 || self.grid.n % 2 != 0 {
            return Err(config_error("grid.n", "must be even and at least 4"));
        }
        positive("grid.span", self.grid.span)?;
        if !(self.evolve.time.is_finite()) {
            return Err(config_error("evolve.time", "must be finite"));
        }
        if self.evolve.snapshots == 0 {
            return Err(config_error("evolve.snapshots", "must be at least 1"));
        }
        positive("evolve.residual_step", self.evolve.residual_step)?;
        if !(self.packet.time.is_finite()) {
            return Err(config_error("packet.time", "must be finite"));
        }
        if self.selfcheck.points == 0 || self.selfcheck.alphas == 0 {
            return Err(config_error("selfcheck", "sample counts must be at least 1"));
        }
        Ok(())
    }
}
